#include "fedms/config.hpp"

#include <algorithm>
#include <cerrno>
#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

namespace fedms::cli {

namespace {

std::string trim(const std::string& s) {
  std::size_t begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  std::size_t end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::string current;
  for (char ch : s) {
    if (ch == sep) {
      parts.push_back(current);
      current.clear();
    } else {
      current += ch;
    }
  }
  parts.push_back(current);
  return parts;
}

[[noreturn]] void config_error(const std::string& origin, const std::string& message) {
  throw std::runtime_error("config " + origin + ": " + message);
}

class KeyTable {
 public:
  KeyTable(std::string origin) : origin_(std::move(origin)) {}

  void set(const std::string& section, const std::string& key, const std::string& value) {
    std::string full = section + "." + key;
    if (values_.count(full))
      config_error(origin_, "duplicate key '" + key + "' in [" + section + "]");
    values_[full] = value;
  }

  bool has(const std::string& full_key) const { return values_.count(full_key) > 0; }

  std::string take(const std::string& full_key) { return values_.at(full_key); }

  void mark_known(const std::string& full_key) { known_.insert(full_key); }

  void reject_unknown() const {
    for (const auto& [full, value] : values_) {
      (void)value;
      if (!known_.count(full)) {
        std::size_t dot = full.find('.');
        config_error(origin_, "unknown key '" + full.substr(dot + 1) + "' in [" +
                                  full.substr(0, dot) + "]");
      }
    }
  }

  const std::string& origin() const { return origin_; }

 private:
  std::string origin_;
  std::map<std::string, std::string> values_;
  std::set<std::string> known_;
};

long long parse_int(const KeyTable& table, const std::string& full_key,
                    const std::string& value) {
  long long out = 0;
  const char* begin = value.data();
  const char* end = begin + value.size();
  auto [ptr, ec] = std::from_chars(begin, end, out);
  if (ec != std::errc{} || ptr != end)
    config_error(table.origin(), "key '" + full_key + "': expected an integer, got '" + value + "'");
  return out;
}

std::uint64_t parse_u64(const KeyTable& table, const std::string& full_key,
                        const std::string& value) {
  std::uint64_t out = 0;
  const char* begin = value.data();
  const char* end = begin + value.size();
  auto [ptr, ec] = std::from_chars(begin, end, out);
  if (ec != std::errc{} || ptr != end)
    config_error(table.origin(),
                 "key '" + full_key + "': expected an unsigned integer, got '" + value + "'");
  return out;
}

double parse_double(const KeyTable& table, const std::string& full_key,
                    const std::string& value) {
  if (value.empty())
    config_error(table.origin(), "key '" + full_key + "': expected a number, got ''");
  errno = 0;
  char* end = nullptr;
  double out = std::strtod(value.c_str(), &end);
  if (errno != 0 || end != value.c_str() + value.size())
    config_error(table.origin(), "key '" + full_key + "': expected a number, got '" + value + "'");
  return out;
}

bool parse_bool(const KeyTable& table, const std::string& full_key, const std::string& value) {
  if (value == "true") return true;
  if (value == "false") return false;
  config_error(table.origin(), "key '" + full_key + "': expected true or false, got '" + value + "'");
}

template <typename T, typename Parser>
void read_key(KeyTable& table, const std::string& full_key, T& target, Parser parser) {
  table.mark_known(full_key);
  if (!table.has(full_key)) return;
  target = parser(table.take(full_key));
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

MaverickSpec parse_maverick_spec(const std::string& text) {
  MaverickSpec spec;
  std::string trimmed = trim(text);
  if (trimmed.empty()) return spec;
  for (const std::string& group : split(trimmed, ';')) {
    std::string entry = trim(group);
    if (entry.empty()) throw std::invalid_argument("mavericks: empty group");
    std::size_t colon = entry.find(':');
    if (colon == std::string::npos)
      throw std::invalid_argument("mavericks: group '" + entry + "' lacks a ':'");
    int cls = 0;
    {
      std::string cls_text = trim(entry.substr(0, colon));
      auto [ptr, ec] = std::from_chars(cls_text.data(), cls_text.data() + cls_text.size(), cls);
      if (ec != std::errc{} || ptr != cls_text.data() + cls_text.size())
        throw std::invalid_argument("mavericks: bad class label '" + cls_text + "'");
    }
    if (spec.count(cls)) throw std::invalid_argument("mavericks: class listed twice");
    std::vector<int> owners;
    for (const std::string& owner_text : split(entry.substr(colon + 1), ',')) {
      std::string o = trim(owner_text);
      int owner = 0;
      auto [ptr, ec] = std::from_chars(o.data(), o.data() + o.size(), owner);
      if (o.empty() || ec != std::errc{} || ptr != o.data() + o.size())
        throw std::invalid_argument("mavericks: bad owner id '" + o + "'");
      owners.push_back(owner);
    }
    std::sort(owners.begin(), owners.end());
    owners.erase(std::unique(owners.begin(), owners.end()), owners.end());
    spec[cls] = owners;
  }
  return spec;
}

std::string format_maverick_spec(const MaverickSpec& spec) {
  std::string out;
  for (const auto& [cls, owners] : spec) {
    if (!out.empty()) out += ';';
    out += std::to_string(cls) + ":";
    for (std::size_t i = 0; i < owners.size(); ++i) {
      if (i) out += ',';
      out += std::to_string(owners[i]);
    }
  }
  return out;
}

ExperimentConfig parse_config_text(const std::string& text, const std::string& origin) {
  KeyTable table(origin);
  const std::set<std::string> sections = {"experiment", "data", "train", "shapley", "strategy"};
  std::string section;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    if (t.front() == '[') {
      if (t.back() != ']')
        config_error(origin, "line " + std::to_string(line_no) + ": malformed section header");
      section = trim(t.substr(1, t.size() - 2));
      if (!sections.count(section))
        config_error(origin, "unknown section [" + section + "]");
      continue;
    }
    std::size_t eq = t.find('=');
    if (eq == std::string::npos)
      config_error(origin, "line " + std::to_string(line_no) + ": expected key = value");
    if (section.empty())
      config_error(origin, "line " + std::to_string(line_no) + ": key outside any section");
    table.set(section, trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
  }

  ExperimentConfig config;
  auto as_int = [&](const std::string& full) {
    return [&table, full](const std::string& v) { return static_cast<int>(parse_int(table, full, v)); };
  };
  auto as_double = [&](const std::string& full) {
    return [&table, full](const std::string& v) { return parse_double(table, full, v); };
  };
  auto as_bool = [&](const std::string& full) {
    return [&table, full](const std::string& v) { return parse_bool(table, full, v); };
  };
  auto as_string = [](const std::string&) {
    return [](const std::string& v) { return v; };
  };

  // [experiment]
  read_key(table, "experiment.num_rounds", config.num_rounds, as_int("experiment.num_rounds"));
  read_key(table, "experiment.total_clients", config.total_clients,
           as_int("experiment.total_clients"));
  read_key(table, "experiment.cohort_size", config.cohort_size, as_int("experiment.cohort_size"));
  read_key(table, "experiment.strategy", config.strategy, [&](const std::string& v) {
    try {
      return strategy_from_string(v);
    } catch (const std::exception& e) {
      config_error(origin, std::string("key 'experiment.strategy': ") + e.what());
    }
  });
  read_key(table, "experiment.seed", config.seed, [&](const std::string& v) {
    return parse_u64(table, "experiment.seed", v);
  });

  // [data]
  read_key(table, "data.kind", config.data.kind, [&](const std::string& v) {
    try {
      return dataset_kind_from_string(v);
    } catch (const std::exception& e) {
      config_error(origin, std::string("key 'data.kind': ") + e.what());
    }
  });
  read_key(table, "data.classes", config.data.classes, as_int("data.classes"));
  read_key(table, "data.per_class", config.data.per_class, as_int("data.per_class"));
  read_key(table, "data.dim", config.data.dim, as_int("data.dim"));
  read_key(table, "data.spread", config.data.spread, as_double("data.spread"));
  read_key(table, "data.train_images", config.data.train_images, as_string("data.train_images"));
  read_key(table, "data.train_labels", config.data.train_labels, as_string("data.train_labels"));
  read_key(table, "data.test_images", config.data.test_images, as_string("data.test_images"));
  read_key(table, "data.test_labels", config.data.test_labels, as_string("data.test_labels"));
  read_key(table, "data.mavericks", config.data.mavericks, [&](const std::string& v) {
    try {
      return parse_maverick_spec(v);
    } catch (const std::exception& e) {
      config_error(origin, std::string("key 'data.mavericks': ") + e.what());
    }
  });
  read_key(table, "data.test_fraction", config.data.test_fraction,
           as_double("data.test_fraction"));
  read_key(table, "data.val_fraction", config.data.val_fraction, as_double("data.val_fraction"));

  // [train]
  read_key(table, "train.epochs", config.train.epochs, as_int("train.epochs"));
  read_key(table, "train.batch_size", config.train.batch_size, as_int("train.batch_size"));
  read_key(table, "train.learning_rate", config.train.learning_rate,
           as_double("train.learning_rate"));
  read_key(table, "train.prox_mu", config.train.prox_mu, as_double("train.prox_mu"));
  read_key(table, "train.hidden", config.hidden_layers, [&](const std::string& v) {
    std::vector<int> widths;
    for (const std::string& part : split(v, ',')) {
      std::string p = trim(part);
      if (p.empty()) config_error(origin, "key 'train.hidden': empty layer width");
      widths.push_back(static_cast<int>(parse_int(table, "train.hidden", p)));
    }
    return widths;
  });

  // [shapley]
  read_key(table, "shapley.engine", config.shapley_engine, [&](const std::string& v) {
    try {
      return sv_engine_from_string(v);
    } catch (const std::exception& e) {
      config_error(origin, std::string("key 'shapley.engine': ") + e.what());
    }
  });
  bool normalize_present = table.has("shapley.normalize_sv");
  bool literal_present = table.has("shapley.paper_literal_sv");
  read_key(table, "shapley.normalize_sv", config.normalize_sv, as_bool("shapley.normalize_sv"));
  bool literal = false;
  read_key(table, "shapley.paper_literal_sv", literal, as_bool("shapley.paper_literal_sv"));
  if (literal_present) {
    if (normalize_present && config.normalize_sv == literal)
      config_error(origin,
                   "keys 'shapley.normalize_sv' and 'shapley.paper_literal_sv' contradict "
                   "(one must be the negation of the other)");
    config.normalize_sv = !literal;
  }
  read_key(table, "shapley.alpha", config.alpha, as_double("shapley.alpha"));
  read_key(table, "shapley.temperature", config.temperature, as_double("shapley.temperature"));
  read_key(table, "shapley.eps_between", config.eps_between, as_double("shapley.eps_between"));
  read_key(table, "shapley.eps_within", config.eps_within, as_double("shapley.eps_within"));
  read_key(table, "shapley.max_permutations", config.max_permutations,
           as_int("shapley.max_permutations"));
  read_key(table, "shapley.convergence_tol", config.convergence_tol,
           as_double("shapley.convergence_tol"));
  read_key(table, "shapley.round_decay", config.round_decay, as_double("shapley.round_decay"));
  read_key(table, "shapley.skip_threshold", config.skip_threshold,
           as_double("shapley.skip_threshold"));

  // [strategy]
  read_key(table, "strategy.aggregate_best_subset", config.aggregate_best_subset,
           as_bool("strategy.aggregate_best_subset"));
  read_key(table, "strategy.poc_candidate_size", config.poc_candidate_size,
           as_int("strategy.poc_candidate_size"));
  read_key(table, "strategy.emd_c0", config.emd_c0, as_double("strategy.emd_c0"));
  read_key(table, "strategy.emd_gamma", config.emd_gamma, as_double("strategy.emd_gamma"));
  read_key(table, "strategy.sfedavg_epsilon", config.sfedavg_epsilon,
           as_double("strategy.sfedavg_epsilon"));

  table.reject_unknown();

  std::vector<std::string> errors = validate(config);
  if (!errors.empty()) {
    std::string joined = "invalid configuration:";
    for (const std::string& e : errors) joined += "\n  - " + e;
    config_error(origin, joined);
  }
  return config;
}

ExperimentConfig parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config " + path + ": cannot open file");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_config_text(buffer.str(), path);
}

std::string emit_config(const ExperimentConfig& config) {
  std::ostringstream out;
  out << "[experiment]\n";
  out << "num_rounds = " << config.num_rounds << "\n";
  out << "total_clients = " << config.total_clients << "\n";
  out << "cohort_size = " << config.cohort_size << "\n";
  out << "strategy = " << to_string(config.strategy) << "\n";
  out << "seed = " << config.seed << "\n";
  out << "\n[data]\n";
  out << "kind = " << to_string(config.data.kind) << "\n";
  out << "classes = " << config.data.classes << "\n";
  out << "per_class = " << config.data.per_class << "\n";
  out << "dim = " << config.data.dim << "\n";
  out << "spread = " << format_double(config.data.spread) << "\n";
  out << "train_images = " << config.data.train_images << "\n";
  out << "train_labels = " << config.data.train_labels << "\n";
  out << "test_images = " << config.data.test_images << "\n";
  out << "test_labels = " << config.data.test_labels << "\n";
  out << "mavericks = " << format_maverick_spec(config.data.mavericks) << "\n";
  out << "test_fraction = " << format_double(config.data.test_fraction) << "\n";
  out << "val_fraction = " << format_double(config.data.val_fraction) << "\n";
  out << "\n[train]\n";
  out << "epochs = " << config.train.epochs << "\n";
  out << "batch_size = " << config.train.batch_size << "\n";
  out << "learning_rate = " << format_double(config.train.learning_rate) << "\n";
  out << "prox_mu = " << format_double(config.train.prox_mu) << "\n";
  out << "hidden = ";
  for (std::size_t i = 0; i < config.hidden_layers.size(); ++i) {
    if (i) out << ",";
    out << config.hidden_layers[i];
  }
  out << "\n";
  out << "\n[shapley]\n";
  out << "engine = " << to_string(config.shapley_engine) << "\n";
  out << "normalize_sv = " << (config.normalize_sv ? "true" : "false") << "\n";
  out << "alpha = " << format_double(config.alpha) << "\n";
  out << "temperature = " << format_double(config.temperature) << "\n";
  out << "eps_between = " << format_double(config.eps_between) << "\n";
  out << "eps_within = " << format_double(config.eps_within) << "\n";
  out << "max_permutations = " << config.max_permutations << "\n";
  out << "convergence_tol = " << format_double(config.convergence_tol) << "\n";
  out << "round_decay = " << format_double(config.round_decay) << "\n";
  out << "skip_threshold = " << format_double(config.skip_threshold) << "\n";
  out << "\n[strategy]\n";
  out << "aggregate_best_subset = " << (config.aggregate_best_subset ? "true" : "false") << "\n";
  out << "poc_candidate_size = " << config.poc_candidate_size << "\n";
  out << "emd_c0 = " << format_double(config.emd_c0) << "\n";
  out << "emd_gamma = " << format_double(config.emd_gamma) << "\n";
  out << "sfedavg_epsilon = " << format_double(config.sfedavg_epsilon) << "\n";
  return out.str();
}

}  // namespace fedms::cli
