#include "mgbr/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "mgbr/errors.hpp"

namespace mgbr {

namespace {

struct Field {
  std::function<std::string(const MgbrConfig&)> get;
  std::function<void(MgbrConfig&, const std::string&)> set;
};

template <typename T>
T parse_number(const std::string& key, const std::string& raw) {
  std::istringstream is(raw);
  T v{};
  is >> v;
  if (is.fail() || !is.eof()) {
    throw ConfigError("config key '" + key + "': cannot parse value '" + raw + "'");
  }
  return v;
}

bool parse_bool(const std::string& key, const std::string& raw) {
  if (raw == "true" || raw == "1") return true;
  if (raw == "false" || raw == "0") return false;
  throw ConfigError("config key '" + key + "': expected true/false, got '" + raw + "'");
}

std::string fmt_float(float v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

// ordered map so to_text() output is stable
const std::map<std::string, Field>& fields() {
  static const std::map<std::string, Field> table = {
      {"embed_dim",
       {[](const MgbrConfig& c) { return std::to_string(c.embed_dim); },
        [](MgbrConfig& c, const std::string& v) { c.embed_dim = parse_number<int>("embed_dim", v); }}},
      {"gcn_layers",
       {[](const MgbrConfig& c) { return std::to_string(c.gcn_layers); },
        [](MgbrConfig& c, const std::string& v) { c.gcn_layers = parse_number<int>("gcn_layers", v); }}},
      {"experts",
       {[](const MgbrConfig& c) { return std::to_string(c.experts); },
        [](MgbrConfig& c, const std::string& v) { c.experts = parse_number<int>("experts", v); }}},
      {"mtl_layers",
       {[](const MgbrConfig& c) { return std::to_string(c.mtl_layers); },
        [](MgbrConfig& c, const std::string& v) { c.mtl_layers = parse_number<int>("mtl_layers", v); }}},
      {"aux_negatives",
       {[](const MgbrConfig& c) { return std::to_string(c.aux_negatives); },
        [](MgbrConfig& c, const std::string& v) {
          c.aux_negatives = parse_number<int>("aux_negatives", v);
        }}},
      {"gate_alpha_a",
       {[](const MgbrConfig& c) { return fmt_float(c.gate_alpha_a); },
        [](MgbrConfig& c, const std::string& v) {
          c.gate_alpha_a = parse_number<float>("gate_alpha_a", v);
        }}},
      {"gate_alpha_b",
       {[](const MgbrConfig& c) { return fmt_float(c.gate_alpha_b); },
        [](MgbrConfig& c, const std::string& v) {
          c.gate_alpha_b = parse_number<float>("gate_alpha_b", v);
        }}},
      {"loss_b_weight",
       {[](const MgbrConfig& c) { return fmt_float(c.loss_b_weight); },
        [](MgbrConfig& c, const std::string& v) {
          c.loss_b_weight = parse_number<float>("loss_b_weight", v);
        }}},
      {"aux_a_weight",
       {[](const MgbrConfig& c) { return fmt_float(c.aux_a_weight); },
        [](MgbrConfig& c, const std::string& v) {
          c.aux_a_weight = parse_number<float>("aux_a_weight", v);
        }}},
      {"aux_b_weight",
       {[](const MgbrConfig& c) { return fmt_float(c.aux_b_weight); },
        [](MgbrConfig& c, const std::string& v) {
          c.aux_b_weight = parse_number<float>("aux_b_weight", v);
        }}},
      {"learning_rate",
       {[](const MgbrConfig& c) { return fmt_float(c.learning_rate); },
        [](MgbrConfig& c, const std::string& v) {
          c.learning_rate = parse_number<float>("learning_rate", v);
        }}},
      {"batch_size",
       {[](const MgbrConfig& c) { return std::to_string(c.batch_size); },
        [](MgbrConfig& c, const std::string& v) { c.batch_size = parse_number<int>("batch_size", v); }}},
      {"max_epochs",
       {[](const MgbrConfig& c) { return std::to_string(c.max_epochs); },
        [](MgbrConfig& c, const std::string& v) { c.max_epochs = parse_number<int>("max_epochs", v); }}},
      {"patience",
       {[](const MgbrConfig& c) { return std::to_string(c.patience); },
        [](MgbrConfig& c, const std::string& v) { c.patience = parse_number<int>("patience", v); }}},
      {"data_seed",
       {[](const MgbrConfig& c) { return std::to_string(c.data_seed); },
        [](MgbrConfig& c, const std::string& v) {
          c.data_seed = parse_number<std::uint64_t>("data_seed", v);
        }}},
      {"init_seed",
       {[](const MgbrConfig& c) { return std::to_string(c.init_seed); },
        [](MgbrConfig& c, const std::string& v) {
          c.init_seed = parse_number<std::uint64_t>("init_seed", v);
        }}},
      {"negative_seed",
       {[](const MgbrConfig& c) { return std::to_string(c.negative_seed); },
        [](MgbrConfig& c, const std::string& v) {
          c.negative_seed = parse_number<std::uint64_t>("negative_seed", v);
        }}},
      {"shared_experts",
       {[](const MgbrConfig& c) { return std::string(c.shared_experts ? "true" : "false"); },
        [](MgbrConfig& c, const std::string& v) { c.shared_experts = parse_bool("shared_experts", v); }}},
      {"adjusted_gates",
       {[](const MgbrConfig& c) { return std::string(c.adjusted_gates ? "true" : "false"); },
        [](MgbrConfig& c, const std::string& v) { c.adjusted_gates = parse_bool("adjusted_gates", v); }}},
      {"aux_losses",
       {[](const MgbrConfig& c) { return std::string(c.aux_losses ? "true" : "false"); },
        [](MgbrConfig& c, const std::string& v) { c.aux_losses = parse_bool("aux_losses", v); }}},
      {"softmax_listnet",
       {[](const MgbrConfig& c) { return std::string(c.softmax_listnet ? "true" : "false"); },
        [](MgbrConfig& c, const std::string& v) {
          c.softmax_listnet = parse_bool("softmax_listnet", v);
        }}},
      {"exclude_self_from_mean",
       {[](const MgbrConfig& c) { return std::string(c.exclude_self_from_mean ? "true" : "false"); },
        [](MgbrConfig& c, const std::string& v) {
          c.exclude_self_from_mean = parse_bool("exclude_self_from_mean", v);
        }}},
      {"threads",
       {[](const MgbrConfig& c) { return std::to_string(c.threads); },
        [](MgbrConfig& c, const std::string& v) { c.threads = parse_number<int>("threads", v); }}},
  };
  return table;
}

}  // namespace

void MgbrConfig::validate() const {
  auto positive = [](int v, const char* name) {
    if (v <= 0) throw ConfigError(std::string(name) + " must be positive");
  };
  positive(embed_dim, "embed_dim");
  positive(gcn_layers, "gcn_layers");
  positive(experts, "experts");
  positive(mtl_layers, "mtl_layers");
  positive(aux_negatives, "aux_negatives");
  positive(batch_size, "batch_size");
  positive(max_epochs, "max_epochs");
  positive(patience, "patience");
  positive(threads, "threads");
  if (embed_dim % 2 != 0) throw ConfigError("embed_dim must be even (the head narrows to d/2)");
  for (auto [v, name] : {std::pair{loss_b_weight, "loss_b_weight"},
                         {aux_a_weight, "aux_a_weight"},
                         {aux_b_weight, "aux_b_weight"}}) {
    if (!(v >= 0.0f) || !std::isfinite(v)) {
      throw ConfigError(std::string(name) + " must be a finite non-negative number");
    }
  }
  if (adjusted_gates) {
    for (auto [v, name] : {std::pair{gate_alpha_a, "gate_alpha_a"}, {gate_alpha_b, "gate_alpha_b"}}) {
      if (!(v > 0.0f && v < 1.0f)) {
        throw ConfigError(std::string(name) + " must lie in (0,1) when adjusted gates are enabled");
      }
    }
  }
  if (learning_rate <= 0.0f) throw ConfigError("learning_rate must be positive");
}

std::string MgbrConfig::to_text() const {
  std::ostringstream os;
  for (const auto& [key, field] : fields()) {
    os << key << '=' << field.get(*this) << '\n';
  }
  return os.str();
}

void MgbrConfig::apply_text(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    // trim
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos) continue;
    const auto last = line.find_last_not_of(" \t");
    line = line.substr(first, last - first + 1);

    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key=value");
    }
    auto strip = [](std::string s) {
      const auto b = s.find_first_not_of(" \t");
      if (b == std::string::npos) return std::string();
      const auto e = s.find_last_not_of(" \t");
      return s.substr(b, e - b + 1);
    };
    const std::string key = strip(line.substr(0, eq));
    const std::string value = strip(line.substr(eq + 1));
    const auto it = fields().find(key);
    if (it == fields().end()) {
      std::string known;
      for (const auto& [k, f] : fields()) {
        if (!known.empty()) known += ", ";
        known += k;
      }
      throw ConfigError("unknown config key '" + key + "' (valid keys: " + known + ")");
    }
    it->second.set(*this, value);
  }
}

void MgbrConfig::apply_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  apply_text(buf.str());
}

}  // namespace mgbr
