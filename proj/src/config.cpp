#include "uwct/config.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

namespace uwct {

namespace {

std::string trim(const std::string& s) {
  const size_t begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const size_t end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

struct KeyValueReader {
  std::map<std::string, std::string> entries;  // "section.key" -> value

  std::optional<std::string> take(const std::string& section, const std::string& key) {
    auto it = entries.find(section + "." + key);
    if (it == entries.end()) return std::nullopt;
    std::string value = it->second;
    entries.erase(it);
    return value;
  }

  bool take_bool(const std::string& section, const std::string& key, bool fallback) {
    auto v = take(section, key);
    if (!v) return fallback;
    if (*v == "true") return true;
    if (*v == "false") return false;
    throw ConfigError("config key " + section + "." + key + " expects true/false, got '" +
                      *v + "'");
  }

  int64_t take_int(const std::string& section, const std::string& key, int64_t fallback) {
    auto v = take(section, key);
    if (!v) return fallback;
    try {
      size_t used = 0;
      const int64_t parsed = std::stoll(*v, &used);
      if (used != v->size()) throw std::invalid_argument("trailing characters");
      return parsed;
    } catch (const std::exception&) {
      throw ConfigError("config key " + section + "." + key + " expects an integer, got '" +
                        *v + "'");
    }
  }

  double take_double(const std::string& section, const std::string& key, double fallback) {
    auto v = take(section, key);
    if (!v) return fallback;
    try {
      size_t used = 0;
      const double parsed = std::stod(*v, &used);
      if (used != v->size()) throw std::invalid_argument("trailing characters");
      return parsed;
    } catch (const std::exception&) {
      throw ConfigError("config key " + section + "." + key + " expects a number, got '" +
                        *v + "'");
    }
  }
};

const char* const kSections[] = {"data", "arch", "loss", "optim", "train"};

bool known_section(const std::string& name) {
  for (const char* s : kSections) {
    if (name == s) return true;
  }
  return false;
}

std::string format_double(double v) {
  std::ostringstream out;
  out.precision(17);
  out << v;
  return out.str();
}

}  // namespace

AlternationMode alternation_from_string(const std::string& name) {
  if (name == "joint") return AlternationMode::Joint;
  if (name == "strict") return AlternationMode::Strict;
  throw ConfigError("unknown alternation mode '" + name + "' (expected 'joint' or 'strict')");
}

std::string to_string(AlternationMode mode) {
  return mode == AlternationMode::Joint ? "joint" : "strict";
}

void TrainConfig::validate() const {
  if (image_size < 8 || image_size % 4 != 0) {
    throw ConfigError("data.image_size must be >= 8 and divisible by 4, got " +
                      std::to_string(image_size));
  }
  if (augment) {
    throw ConfigError("data.augment is a reserved hook; only 'false' is supported");
  }
  try {
    resolve_arch();
    weights.validate();
    ssim.validate();
    adam.validate();
  } catch (const std::exception& err) {
    throw ConfigError(err.what());
  }
  if (batch < 1) throw ConfigError("train.batch must be >= 1");
  if (steps < 0) throw ConfigError("train.steps must be >= 0");
  if (checkpoint_every < 1) throw ConfigError("train.checkpoint_every must be >= 1");
  if (buffer_capacity < 1) throw ConfigError("train.buffer_capacity must be >= 1");
}

ArchConfig TrainConfig::resolve_arch() const {
  ArchConfig arch = make_arch_config(arch_preset, static_cast<int>(image_size));
  if (base_width) arch.base_width = *base_width;
  if (disc_base_width) arch.disc_base_width = *disc_base_width;
  if (n_res_blocks) arch.n_res_blocks = *n_res_blocks;
  if (arch.base_width < 1 || arch.disc_base_width < 1 || arch.n_res_blocks < 0) {
    throw ConfigError("arch widths must be >= 1 and n_res_blocks >= 0");
  }
  return arch;
}

TrainConfig parse_config(const std::string& text) {
  KeyValueReader reader;
  std::istringstream stream(text);
  std::string line, section;
  size_t line_no = 0;
  while (std::getline(stream, line)) {
    ++line_no;
    const size_t comment = line.find_first_of("#;");
    if (comment != std::string::npos) line.erase(comment);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        throw ConfigError("config line " + std::to_string(line_no) + ": malformed section '" +
                          line + "'");
      }
      section = trim(line.substr(1, line.size() - 2));
      if (!known_section(section)) {
        throw ConfigError("unknown config section [" + section + "]");
      }
      continue;
    }
    const size_t eq = line.find('=');
    if (eq == std::string::npos || section.empty()) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) {
      throw ConfigError("config line " + std::to_string(line_no) + ": empty key");
    }
    const std::string full = section + "." + key;
    if (reader.entries.count(full)) {
      throw ConfigError("duplicate config key " + full);
    }
    reader.entries[full] = value;
  }

  TrainConfig cfg;
  if (auto v = reader.take("data", "domain_x")) cfg.domain_x = *v;
  if (auto v = reader.take("data", "domain_y")) cfg.domain_y = *v;
  cfg.image_size = reader.take_int("data", "image_size", cfg.image_size);
  cfg.augment = reader.take_bool("data", "augment", cfg.augment);

  if (auto v = reader.take("arch", "preset")) cfg.arch_preset = *v;
  if (reader.entries.count("arch.base_width")) {
    cfg.base_width = static_cast<int>(reader.take_int("arch", "base_width", 0));
  }
  if (reader.entries.count("arch.disc_base_width")) {
    cfg.disc_base_width = static_cast<int>(reader.take_int("arch", "disc_base_width", 0));
  }
  if (reader.entries.count("arch.n_res_blocks")) {
    cfg.n_res_blocks = static_cast<int>(reader.take_int("arch", "n_res_blocks", 0));
  }

  cfg.weights.lambda_adv = reader.take_double("loss", "lambda_adv", cfg.weights.lambda_adv);
  cfg.weights.lambda_cyc = reader.take_double("loss", "lambda_cyc", cfg.weights.lambda_cyc);
  cfg.weights.lambda_ssim = reader.take_double("loss", "lambda_ssim", cfg.weights.lambda_ssim);
  cfg.ssim.window = static_cast<int>(reader.take_int("loss", "ssim_window", cfg.ssim.window));
  cfg.ssim.c1 = reader.take_double("loss", "ssim_c1", cfg.ssim.c1);
  cfg.ssim.c2 = reader.take_double("loss", "ssim_c2", cfg.ssim.c2);
  if (auto v = reader.take("loss", "ssim_channel_mode")) {
    try {
      cfg.ssim.channel_mode = ssim_channel_mode_from_string(*v);
    } catch (const std::exception& err) {
      throw ConfigError(err.what());
    }
  }
  cfg.use_nll_adversarial =
      reader.take_bool("loss", "use_nll_adversarial", cfg.use_nll_adversarial);

  cfg.adam.learning_rate = reader.take_double("optim", "lr", cfg.adam.learning_rate);
  cfg.adam.beta1 = reader.take_double("optim", "beta1", cfg.adam.beta1);
  cfg.adam.beta2 = reader.take_double("optim", "beta2", cfg.adam.beta2);
  cfg.adam.epsilon = reader.take_double("optim", "epsilon", cfg.adam.epsilon);

  cfg.batch = reader.take_int("train", "batch", cfg.batch);
  cfg.steps = reader.take_int("train", "steps", cfg.steps);
  if (reader.entries.count("train.seed")) {
    const int64_t seed = reader.take_int("train", "seed", 0);
    if (seed < 0) throw ConfigError("train.seed must be >= 0");
    cfg.seed = static_cast<uint64_t>(seed);
  }
  cfg.checkpoint_every = reader.take_int("train", "checkpoint_every", cfg.checkpoint_every);
  cfg.buffer_capacity = reader.take_int("train", "buffer_capacity", cfg.buffer_capacity);
  if (auto v = reader.take("train", "alternation")) {
    cfg.alternation = alternation_from_string(*v);
  }
  cfg.checked_mode = reader.take_bool("train", "checked_mode", cfg.checked_mode);
  cfg.determinism = reader.take_bool("train", "determinism", cfg.determinism);

  if (!reader.entries.empty()) {
    throw ConfigError("unknown config key " + reader.entries.begin()->first);
  }
  cfg.validate();
  return cfg;
}

TrainConfig load_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str());
}

std::string serialize_config(const TrainConfig& cfg) {
  std::ostringstream out;
  out << "[data]\n";
  out << "domain_x = " << cfg.domain_x << "\n";
  out << "domain_y = " << cfg.domain_y << "\n";
  out << "image_size = " << cfg.image_size << "\n";
  out << "augment = " << (cfg.augment ? "true" : "false") << "\n";
  out << "\n[arch]\n";
  out << "preset = " << cfg.arch_preset << "\n";
  if (cfg.base_width) out << "base_width = " << *cfg.base_width << "\n";
  if (cfg.disc_base_width) out << "disc_base_width = " << *cfg.disc_base_width << "\n";
  if (cfg.n_res_blocks) out << "n_res_blocks = " << *cfg.n_res_blocks << "\n";
  out << "\n[loss]\n";
  out << "lambda_adv = " << format_double(cfg.weights.lambda_adv) << "\n";
  out << "lambda_cyc = " << format_double(cfg.weights.lambda_cyc) << "\n";
  out << "lambda_ssim = " << format_double(cfg.weights.lambda_ssim) << "\n";
  out << "ssim_window = " << cfg.ssim.window << "\n";
  out << "ssim_c1 = " << format_double(cfg.ssim.c1) << "\n";
  out << "ssim_c2 = " << format_double(cfg.ssim.c2) << "\n";
  out << "ssim_channel_mode = " << to_string(cfg.ssim.channel_mode) << "\n";
  out << "use_nll_adversarial = " << (cfg.use_nll_adversarial ? "true" : "false") << "\n";
  out << "\n[optim]\n";
  out << "lr = " << format_double(cfg.adam.learning_rate) << "\n";
  out << "beta1 = " << format_double(cfg.adam.beta1) << "\n";
  out << "beta2 = " << format_double(cfg.adam.beta2) << "\n";
  out << "epsilon = " << format_double(cfg.adam.epsilon) << "\n";
  out << "\n[train]\n";
  out << "batch = " << cfg.batch << "\n";
  out << "steps = " << cfg.steps << "\n";
  if (cfg.seed) out << "seed = " << *cfg.seed << "\n";
  out << "checkpoint_every = " << cfg.checkpoint_every << "\n";
  out << "buffer_capacity = " << cfg.buffer_capacity << "\n";
  out << "alternation = " << to_string(cfg.alternation) << "\n";
  out << "checked_mode = " << (cfg.checked_mode ? "true" : "false") << "\n";
  out << "determinism = " << (cfg.determinism ? "true" : "false") << "\n";
  return out.str();
}

std::string default_config_text() { return serialize_config(TrainConfig{}); }

uint64_t resolve_seed(const std::optional<uint64_t>& flag_seed, const TrainConfig& config) {
  if (flag_seed) return *flag_seed;
  if (config.seed) return *config.seed;
  if (const char* env = std::getenv("UWCT_SEED")) {
    try {
      size_t used = 0;
      const long long parsed = std::stoll(env, &used);
      if (used != std::string(env).size() || parsed < 0) throw std::invalid_argument("bad");
      return static_cast<uint64_t>(parsed);
    } catch (const std::exception&) {
      throw ConfigError("UWCT_SEED environment variable is not a non-negative integer");
    }
  }
  return 0;
}

}  // namespace uwct
