#include "sessrec/io/config.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

namespace sessrec::io {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  std::size_t b = s.find_last_not_of(" \t\r");
  if (a == std::string::npos) return "";
  return s.substr(a, b - a + 1);
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes" || value == "on") return true;
  if (value == "false" || value == "0" || value == "no" || value == "off") return false;
  throw ConfigError("key '" + key + "' expects a boolean, got '" + value + "'");
}

long parse_int(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const long v = std::stol(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("key '" + key + "' expects an integer, got '" + value + "'");
  }
}

double parse_real(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const double v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("key '" + key + "' expects a number, got '" + value + "'");
  }
}

char parse_delimiter(const std::string& value) {
  if (value == "comma") return ',';
  if (value == "tab") return '\t';
  if (value.size() == 1) return value[0];
  throw ConfigError("input.delimiter expects 'comma', 'tab', or one character");
}

std::vector<int> parse_int_list(const std::string& key, const std::string& value) {
  std::vector<int> out;
  std::stringstream ss(value);
  std::string part;
  while (std::getline(ss, part, ',')) {
    part = trim(part);
    if (!part.empty()) out.push_back(static_cast<int>(parse_int(key, part)));
  }
  if (out.empty()) throw ConfigError("key '" + key + "' expects a comma-separated integer list");
  return out;
}

}  // namespace

KeyValues KeyValues::parse(std::istream& in, const std::string& origin) {
  KeyValues kv;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(origin + ":" + std::to_string(line_no) + ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError(origin + ":" + std::to_string(line_no) + ": empty key");
    kv.set(key, value);
  }
  return kv;
}

KeyValues KeyValues::parse_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config file " + path.string());
  return parse(in, path.string());
}

std::optional<std::string> KeyValues::get(const std::string& key) const {
  for (const auto& [k, v] : entries_)
    if (k == key) return v;
  return std::nullopt;
}

void KeyValues::set(const std::string& key, std::string value) {
  for (auto& [k, v] : entries_)
    if (k == key) {
      v = std::move(value);
      return;
    }
  entries_.emplace_back(key, std::move(value));
}

bool KeyValues::contains(const std::string& key) const { return get(key).has_value(); }

void KeyValues::write_file(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  for (const auto& [k, v] : entries_) out << k << " = " << v << '\n';
  if (!out) throw IoError("failed while writing " + path.string());
}

RunConfig RunConfig::from(const KeyValues& kv) {
  RunConfig cfg;
  if (const auto name = kv.get("dataset.name")) cfg.profile = data::profile_preset(*name);
  if (const auto model = kv.get("train.model")) cfg.train = train::default_train_config(*model);

  for (const auto& [key, value] : kv.entries()) {
    if (key == "seed") {
      cfg.seed = static_cast<std::uint64_t>(parse_int(key, value));
    } else if (key == "split.test_fraction") {
      cfg.test_fraction = parse_real(key, value);
    } else if (key == "dataset.name") {
      // already applied
    } else if (key == "dataset.session_duration") {
      cfg.profile.session_duration = parse_int(key, value);
    } else if (key == "dataset.session_length") {
      cfg.profile.session_length = static_cast<int>(parse_int(key, value));
    } else if (key == "dataset.min_item_count") {
      cfg.profile.min_item_count = static_cast<int>(parse_int(key, value));
    } else if (key == "dataset.side_kind") {
      cfg.profile.side_kind = data::side_kind_from_string(value);
    } else if (key == "input.delimiter") {
      cfg.columns.delimiter = parse_delimiter(value);
    } else if (key == "input.has_header") {
      cfg.columns.has_header = parse_bool(key, value);
    } else if (key == "input.user_column") {
      cfg.columns.user = value;
    } else if (key == "input.time_column") {
      cfg.columns.time = value;
    } else if (key == "input.item_column") {
      cfg.columns.item = value;
    } else if (key == "input.side_column") {
      cfg.columns.side = value;
    } else if (key == "input.side_separator") {
      if (value.size() != 1) throw ConfigError("input.side_separator expects one character");
      cfg.columns.side_separator = value[0];
    } else if (key == "train.model") {
      // already applied
    } else if (key == "train.use_side") {
      cfg.train.use_side = parse_bool(key, value);
    } else if (key == "train.embedding_dim") {
      cfg.train.embedding_dim = parse_int(key, value);
    } else if (key == "train.side_dim") {
      cfg.train.side_dim = parse_int(key, value);
    } else if (key == "train.hidden_dim") {
      cfg.train.hidden_dim = parse_int(key, value);
    } else if (key == "train.batch_size") {
      cfg.train.batch_size = static_cast<int>(parse_int(key, value));
    } else if (key == "train.learning_rate") {
      cfg.train.learning_rate = parse_real(key, value);
    } else if (key == "train.beta1") {
      cfg.train.beta1 = parse_real(key, value);
    } else if (key == "train.beta2") {
      cfg.train.beta2 = parse_real(key, value);
    } else if (key == "train.weight_decay") {
      cfg.train.weight_decay = parse_real(key, value);
    } else if (key == "train.lr_halving_period") {
      cfg.train.lr_halving_period = static_cast<int>(parse_int(key, value));
    } else if (key == "train.early_stop_patience") {
      cfg.train.early_stop_patience = static_cast<int>(parse_int(key, value));
    } else if (key == "train.attention_loss_weight") {
      cfg.train.attention_loss_weight = parse_real(key, value);
    } else if (key == "train.epochs") {
      cfg.train.epochs = static_cast<int>(parse_int(key, value));
    } else if (key == "train.propagation_steps") {
      cfg.train.propagation_steps = static_cast<int>(parse_int(key, value));
    } else if (key == "train.eval_ks") {
      cfg.train.eval_ks = parse_int_list(key, value);
    } else if (key == "train.validation_fraction") {
      cfg.train.validation_fraction = parse_real(key, value);
    } else if (key == "synth.n_items") {
      cfg.synth.n_items = static_cast<int>(parse_int(key, value));
    } else if (key == "synth.n_categories") {
      cfg.synth.n_categories = static_cast<int>(parse_int(key, value));
    } else if (key == "synth.category_stickiness") {
      cfg.synth.category_stickiness = parse_real(key, value);
    } else if (key == "synth.repeat_prob") {
      cfg.synth.repeat_prob = parse_real(key, value);
    } else if (key == "synth.n_sessions") {
      cfg.synth.n_sessions = static_cast<int>(parse_int(key, value));
    } else if (key == "synth.min_session_len") {
      cfg.synth.min_session_len = static_cast<int>(parse_int(key, value));
    } else if (key == "synth.max_session_len") {
      cfg.synth.max_session_len = static_cast<int>(parse_int(key, value));
    } else {
      throw ConfigError("unknown config key '" + key + "'");
    }
  }
  cfg.train.seed = cfg.seed;
  cfg.synth.seed = cfg.seed;
  cfg.validate();
  return cfg;
}

RunConfig RunConfig::from_file(const std::filesystem::path& path) {
  return from(KeyValues::parse_file(path));
}

void RunConfig::validate() const {
  profile.validate();
  train.validate();
  synth.validate();
  if (!(test_fraction > 0 && test_fraction < 1))
    throw ConfigError("split.test_fraction must lie strictly between 0 and 1");
}

KeyValues RunConfig::effective() const {
  KeyValues kv;
  kv.set("seed", std::to_string(seed));
  kv.set("split.test_fraction", std::to_string(test_fraction));
  kv.set("dataset.name", profile.name);
  kv.set("dataset.session_duration", std::to_string(profile.session_duration));
  kv.set("dataset.session_length", std::to_string(profile.session_length));
  kv.set("dataset.min_item_count", std::to_string(profile.min_item_count));
  kv.set("dataset.side_kind", data::to_string(profile.side_kind));
  kv.set("input.delimiter", columns.delimiter == '\t' ? "tab" : (columns.delimiter == ',' ? "comma" : std::string(1, columns.delimiter)));
  kv.set("input.has_header", columns.has_header ? "true" : "false");
  kv.set("input.user_column", columns.user);
  kv.set("input.time_column", columns.time);
  kv.set("input.item_column", columns.item);
  kv.set("input.side_column", columns.side);
  kv.set("input.side_separator", std::string(1, columns.side_separator));
  kv.set("train.model", train.model);
  kv.set("train.use_side", train.use_side ? "true" : "false");
  kv.set("train.embedding_dim", std::to_string(train.embedding_dim));
  kv.set("train.side_dim", std::to_string(train.side_dim));
  kv.set("train.hidden_dim", std::to_string(train.hidden_dim));
  kv.set("train.batch_size", std::to_string(train.batch_size));
  kv.set("train.learning_rate", std::to_string(train.learning_rate));
  kv.set("train.beta1", std::to_string(train.beta1));
  kv.set("train.beta2", std::to_string(train.beta2));
  kv.set("train.weight_decay", std::to_string(train.weight_decay));
  kv.set("train.lr_halving_period", std::to_string(train.lr_halving_period));
  kv.set("train.early_stop_patience", std::to_string(train.early_stop_patience));
  kv.set("train.attention_loss_weight", std::to_string(train.attention_loss_weight));
  kv.set("train.epochs", std::to_string(train.epochs));
  kv.set("train.propagation_steps", std::to_string(train.propagation_steps));
  std::string ks;
  for (std::size_t i = 0; i < train.eval_ks.size(); ++i) {
    if (i) ks += ",";
    ks += std::to_string(train.eval_ks[i]);
  }
  kv.set("train.eval_ks", ks);
  kv.set("train.validation_fraction", std::to_string(train.validation_fraction));
  kv.set("synth.n_items", std::to_string(synth.n_items));
  kv.set("synth.n_categories", std::to_string(synth.n_categories));
  kv.set("synth.category_stickiness", std::to_string(synth.category_stickiness));
  kv.set("synth.repeat_prob", std::to_string(synth.repeat_prob));
  kv.set("synth.n_sessions", std::to_string(synth.n_sessions));
  kv.set("synth.min_session_len", std::to_string(synth.min_session_len));
  kv.set("synth.max_session_len", std::to_string(synth.max_session_len));
  return kv;
}

}  // namespace sessrec::io
