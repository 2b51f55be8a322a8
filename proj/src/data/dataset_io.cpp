#include "sessrec/data/dataset_io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace sessrec::data {

namespace {

std::string render_side(const SideValue& side) {
  if (side.empty()) return "0";
  std::string out;
  for (std::size_t i = 0; i < side.size(); ++i) {
    if (i) out.push_back(',');
    out += std::to_string(side[i]);
  }
  return out;
}

SideValue parse_side(const std::string& field) {
  if (field == "0") return {};
  SideValue out;
  std::size_t at = 0;
  while (at < field.size()) {
    std::size_t comma = field.find(',', at);
    if (comma == std::string::npos) comma = field.size();
    vocab_id v = 0;
    auto [ptr, ec] = std::from_chars(field.data() + at, field.data() + comma, v);
    if (ec != std::errc() || ptr != field.data() + comma || v <= 0)
      throw DataError("bad side field '" + field + "' in examples file");
    out.push_back(v);
    at = comma + 1;
  }
  return out;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  return in;
}

}  // namespace

void write_examples(const std::filesystem::path& path, std::span<const TrainingExample> examples,
                    SideKind side_kind) {
  std::ofstream out = open_out(path);
  for (const TrainingExample& ex : examples) {
    out << ex.prefix_len;
    for (vocab_id id : ex.input) out << ' ' << id;
    out << ' ' << ex.target;
    if (side_kind != SideKind::none) {
      for (const SideValue& s : ex.side_input) out << ' ' << render_side(s);
      out << ' ' << render_side(ex.side_target);
    }
    out << '\n';
  }
  if (!out) throw IoError("failed while writing " + path.string());
}

std::vector<TrainingExample> read_examples(const std::filesystem::path& path, SideKind side_kind) {
  std::ifstream in = open_in(path);
  std::vector<TrainingExample> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::vector<std::string> tokens;
    std::string tok;
    while (ss >> tok) tokens.push_back(tok);
    const bool with_side = side_kind != SideKind::none;
    // 1 (prefix_len) + L + 1 (target) [+ L + 1 side fields]
    const std::size_t base = tokens.size();
    std::size_t width = 0;
    if (with_side) {
      if (base < 5 || (base - 3) % 2 != 0)
        throw DataError(path.string() + ":" + std::to_string(line_no) + ": malformed example line");
      width = (base - 3) / 2;
    } else {
      if (base < 3)
        throw DataError(path.string() + ":" + std::to_string(line_no) + ": malformed example line");
      width = base - 2;
    }
    TrainingExample ex;
    ex.prefix_len = std::stoi(tokens[0]);
    ex.input.reserve(width);
    for (std::size_t k = 0; k < width; ++k) ex.input.push_back(static_cast<vocab_id>(std::stol(tokens[1 + k])));
    ex.target = static_cast<vocab_id>(std::stol(tokens[1 + width]));
    if (with_side) {
      ex.side_input.reserve(width);
      for (std::size_t k = 0; k < width; ++k) ex.side_input.push_back(parse_side(tokens[2 + width + k]));
      ex.side_target = parse_side(tokens[2 + 2 * width]);
    } else {
      ex.side_input.assign(width, SideValue{});
    }
    if (ex.prefix_len < 1 || ex.prefix_len > static_cast<int>(width) || ex.target <= 0)
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": inconsistent example line");
    out.push_back(std::move(ex));
  }
  return out;
}

void write_vocab(const std::filesystem::path& path, const std::vector<std::string>& id_to_key) {
  std::ofstream out = open_out(path);
  for (std::size_t id = 1; id < id_to_key.size(); ++id) out << id_to_key[id] << '\t' << id << '\n';
  if (!out) throw IoError("failed while writing " + path.string());
}

std::vector<std::string> read_vocab(const std::filesystem::path& path) {
  std::ifstream in = open_in(path);
  std::vector<std::string> id_to_key{""};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::size_t tab = line.rfind('\t');
    if (tab == std::string::npos)
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": expected key<TAB>id");
    const std::string key = line.substr(0, tab);
    const long id = std::stol(line.substr(tab + 1));
    if (id != static_cast<long>(id_to_key.size()))
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": IDs must be contiguous from 1");
    id_to_key.push_back(key);
  }
  return id_to_key;
}

void write_side_map(const std::filesystem::path& path, std::span<const SideValue> map) {
  std::ofstream out = open_out(path);
  for (std::size_t id = 1; id < map.size(); ++id)
    if (!map[id].empty()) out << id << '\t' << render_side(map[id]) << '\n';
  if (!out) throw IoError("failed while writing " + path.string());
}

std::vector<SideValue> read_side_map(const std::filesystem::path& path, index_t item_vocab_size) {
  std::ifstream in = open_in(path);
  std::vector<SideValue> map(static_cast<std::size_t>(item_vocab_size));
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const std::size_t tab = line.find('\t');
    if (tab == std::string::npos) throw DataError(path.string() + ": expected item_id<TAB>side");
    const long id = std::stol(line.substr(0, tab));
    if (id < 1 || id >= static_cast<long>(map.size()))
      throw DataError(path.string() + ": item id out of range");
    map[static_cast<std::size_t>(id)] = parse_side(line.substr(tab + 1));
  }
  return map;
}

}  // namespace sessrec::data
