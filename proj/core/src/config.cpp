#include "rtgr/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace rtgr {

namespace {

[[noreturn]] void config_fail(std::size_t line, const std::string& msg) {
  throw ConfigError("config error at line " + std::to_string(line) + ": " + msg);
}

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::string format_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

double parse_double(const std::string& v, std::size_t line, const std::string& key) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    config_fail(line, "key '" + key + "' expects a number, got '" + v + "'");
  }
}

std::uint64_t parse_u64(const std::string& v, std::size_t line, const std::string& key) {
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size())
    config_fail(line, "key '" + key + "' expects a non-negative integer, got '" + v + "'");
  return out;
}

bool parse_bool(const std::string& v, std::size_t line, const std::string& key) {
  if (v == "true") return true;
  if (v == "false") return false;
  config_fail(line, "key '" + key + "' expects true or false, got '" + v + "'");
}

std::vector<double> parse_double_list(const std::string& v, std::size_t line,
                                      const std::string& key) {
  std::vector<double> out;
  if (trim(v).empty()) return out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_double(trim(item), line, key));
  return out;
}

std::string format_double_list(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ",";
    out += format_double(v[i]);
  }
  return out;
}

}  // namespace

ExperimentConfig ExperimentConfig::parse(const std::string& text) {
  ExperimentConfig cfg;

  using Setter = std::function<void(const std::string&, std::size_t)>;
  std::map<std::string, Setter> keys;

  auto u64_key = [&](const std::string& name, auto& field) {
    keys[name] = [&field, name](const std::string& v, std::size_t line) {
      field = static_cast<std::remove_reference_t<decltype(field)>>(parse_u64(v, line, name));
    };
  };
  auto dbl_key = [&](const std::string& name, double& field) {
    keys[name] = [&field, name](const std::string& v, std::size_t line) {
      field = parse_double(v, line, name);
    };
  };
  auto bool_key = [&](const std::string& name, bool& field) {
    keys[name] = [&field, name](const std::string& v, std::size_t line) {
      field = parse_bool(v, line, name);
    };
  };

  u64_key("data.image_size", cfg.data.image_size);
  u64_key("data.train_count", cfg.data.train_count);
  u64_key("data.eval_count", cfg.data.eval_count);
  u64_key("data.seed", cfg.data.seed);
  dbl_key("data.contrast", cfg.data.contrast);
  dbl_key("data.noise", cfg.data.noise);
  dbl_key("data.min_coverage", cfg.data.min_coverage);
  dbl_key("data.max_coverage", cfg.data.max_coverage);

  u64_key("model.guide_width", cfg.model.guide_width);
  keys["model.steps"] = [&cfg](const std::string& v, std::size_t line) {
    cfg.model.variant.steps = static_cast<int>(parse_u64(v, line, "model.steps"));
  };
  keys["model.recurrence"] = [&cfg](const std::string& v, std::size_t line) {
    try {
      cfg.model.variant.recurrence = recurrence_from_string(v);
    } catch (const Error& e) {
      config_fail(line, e.what());
    }
  };
  keys["model.reference"] = [&cfg](const std::string& v, std::size_t line) {
    try {
      cfg.model.variant.reference = reference_from_string(v);
    } catch (const Error& e) {
      config_fail(line, e.what());
    }
  };
  keys["model.encoder_channels"] = [&cfg](const std::string& v, std::size_t line) {
    const auto values = parse_double_list(v, line, "model.encoder_channels");
    if (values.size() != 4)
      config_fail(line, "key 'model.encoder_channels' expects 4 comma-separated values");
    for (std::size_t i = 0; i < 4; ++i) {
      if (values[i] < 1 || values[i] != std::floor(values[i]))
        config_fail(line, "key 'model.encoder_channels' expects positive integers");
      cfg.model.encoder_channels[i] = static_cast<std::size_t>(values[i]);
    }
  };
  bool_key("model.share_step_params", cfg.model.share_step_params);
  keys["model.init_std"] = [&cfg](const std::string& v, std::size_t line) {
    if (v == "he") {
      cfg.model.init.scheme = InitScheme::kHeFanIn;
    } else {
      cfg.model.init.scheme = InitScheme::kFixedStd;
      cfg.model.init.stddev = parse_double(v, line, "model.init_std");
    }
  };

  dbl_key("train.learning_rate", cfg.train.learning_rate);
  dbl_key("train.momentum", cfg.train.momentum);
  dbl_key("train.weight_decay", cfg.train.weight_decay);
  u64_key("train.batch_size", cfg.train.batch_size);
  u64_key("train.iterations", cfg.train.iterations);
  u64_key("train.checkpoint_interval", cfg.train.checkpoint_interval);
  u64_key("train.log_interval", cfg.train.log_interval);
  keys["train.loss_weights"] = [&cfg](const std::string& v, std::size_t line) {
    cfg.train.loss_weights = parse_double_list(v, line, "train.loss_weights");
  };
  dbl_key("train.boundary_pos_weight", cfg.train.boundary_pos_weight);
  bool_key("train.augment", cfg.train.augment);
  u64_key("train.seed", cfg.train.seed);

  keys["io.out_dir"] = [&cfg](const std::string& v, std::size_t) { cfg.out_dir = v; };

  std::istringstream in(text);
  std::string raw;
  std::string section;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string line = raw;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;

    if (line.front() == '[') {
      if (line.back() != ']') config_fail(line_no, "malformed section header '" + raw + "'");
      section = trim(line.substr(1, line.size() - 2));
      if (section != "data" && section != "model" && section != "train" && section != "io")
        config_fail(line_no, "unknown section '" + section + "'");
      continue;
    }

    const auto eq = line.find('=');
    if (eq == std::string::npos) config_fail(line_no, "expected key = value, got '" + raw + "'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (section.empty()) config_fail(line_no, "key '" + key + "' appears before any section");
    const std::string full = section + "." + key;
    const auto it = keys.find(full);
    if (it == keys.end()) config_fail(line_no, "unknown key '" + full + "'");
    it->second(value, line_no);
  }

  // Cross-field validation (line numbers no longer apply).
  if (cfg.data.image_size % 8 != 0)
    throw ConfigError("config error: data.image_size must be divisible by 8, got " +
                      std::to_string(cfg.data.image_size));
  if (cfg.data.min_coverage >= cfg.data.max_coverage)
    throw ConfigError("config error: data.min_coverage must be below data.max_coverage");
  if (cfg.train.batch_size == 0) throw ConfigError("config error: train.batch_size must be >= 1");
  if (!cfg.train.loss_weights.empty() &&
      cfg.train.loss_weights.size() != static_cast<std::size_t>(cfg.model.variant.steps) + 1)
    throw ConfigError("config error: train.loss_weights needs steps+1 = " +
                      std::to_string(cfg.model.variant.steps + 1) + " entries, got " +
                      std::to_string(cfg.train.loss_weights.size()));
  cfg.model.image_size = cfg.data.image_size;
  return cfg;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config error: cannot open '" + path.string() + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse(buffer.str());
}

std::string ExperimentConfig::to_string() const {
  std::ostringstream os;
  os << "[data]\n";
  os << "image_size = " << data.image_size << "\n";
  os << "train_count = " << data.train_count << "\n";
  os << "eval_count = " << data.eval_count << "\n";
  os << "seed = " << data.seed << "\n";
  os << "contrast = " << format_double(data.contrast) << "\n";
  os << "noise = " << format_double(data.noise) << "\n";
  os << "min_coverage = " << format_double(data.min_coverage) << "\n";
  os << "max_coverage = " << format_double(data.max_coverage) << "\n";
  os << "\n[model]\n";
  os << "guide_width = " << model.guide_width << "\n";
  os << "steps = " << model.variant.steps << "\n";
  os << "recurrence = " << rtgr::to_string(model.variant.recurrence) << "\n";
  os << "reference = " << rtgr::to_string(model.variant.reference) << "\n";
  os << "encoder_channels = " << model.encoder_channels[0] << "," << model.encoder_channels[1]
     << "," << model.encoder_channels[2] << "," << model.encoder_channels[3] << "\n";
  os << "share_step_params = " << (model.share_step_params ? "true" : "false") << "\n";
  os << "init_std = "
     << (model.init.scheme == InitScheme::kHeFanIn ? std::string("he")
                                                   : format_double(model.init.stddev))
     << "\n";
  os << "\n[train]\n";
  os << "learning_rate = " << format_double(train.learning_rate) << "\n";
  os << "momentum = " << format_double(train.momentum) << "\n";
  os << "weight_decay = " << format_double(train.weight_decay) << "\n";
  os << "batch_size = " << train.batch_size << "\n";
  os << "iterations = " << train.iterations << "\n";
  os << "checkpoint_interval = " << train.checkpoint_interval << "\n";
  os << "log_interval = " << train.log_interval << "\n";
  os << "loss_weights = " << format_double_list(train.loss_weights) << "\n";
  os << "boundary_pos_weight = " << format_double(train.boundary_pos_weight) << "\n";
  os << "augment = " << (train.augment ? "true" : "false") << "\n";
  os << "seed = " << train.seed << "\n";
  os << "\n[io]\n";
  os << "out_dir = " << out_dir << "\n";
  return os.str();
}

std::string ExperimentConfig::describe_keys() { return ExperimentConfig{}.to_string(); }

}  // namespace rtgr
