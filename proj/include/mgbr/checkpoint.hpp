#pragma once

#include <string>

#include "mgbr/config.hpp"
#include "mgbr/params.hpp"

namespace mgbr {

struct Checkpoint {
  MgbrConfig cfg;
  int n_users = 0;
  int n_items = 0;
  nc::ParameterStore params;
};

/// Binary container: magic+version, config echo, vocabulary counts, named
/// float32 tensors, CRC-32 trailer over everything after the magic.
void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace mgbr
