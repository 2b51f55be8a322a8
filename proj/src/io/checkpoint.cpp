#include "sessrec/io/checkpoint.hpp"

#include <fstream>

#include <json.hpp>

namespace sessrec::io {

namespace {

constexpr char kMagic[8] = {'S', 'R', 'E', 'C', 'K', 'P', 'T', '\n'};
constexpr std::uint32_t kVersion = 1;

void write_raw(std::ofstream& out, const void* data, std::size_t bytes) {
  out.write(static_cast<const char*>(data), static_cast<std::streamsize>(bytes));
}

void read_raw(std::ifstream& in, void* data, std::size_t bytes, const std::string& path) {
  in.read(static_cast<char*>(data), static_cast<std::streamsize>(bytes));
  if (in.gcount() != static_cast<std::streamsize>(bytes))
    throw DataError(path + ": truncated checkpoint");
}

void write_matrix(std::ofstream& out, const matrix_t& m) {
  write_raw(out, m.data(), sizeof(scalar_t) * static_cast<std::size_t>(m.size()));
}

matrix_t read_matrix(std::ifstream& in, index_t rows, index_t cols, const std::string& path) {
  matrix_t m(rows, cols);
  read_raw(in, m.data(), sizeof(scalar_t) * static_cast<std::size_t>(m.size()), path);
  return m;
}

nlohmann::json tensor_entry(const std::string& name, const matrix_t& m, const char* kind) {
  return nlohmann::json{{"name", name}, {"rows", m.rows()}, {"cols", m.cols()}, {"kind", kind}};
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write checkpoint " + path.string());

  nlohmann::json header;
  header["model"] = checkpoint.model_kind;
  header["epoch"] = checkpoint.epoch;
  header["opt_step"] = checkpoint.opt_step;
  nlohmann::json config = nlohmann::json::object();
  for (const auto& [k, v] : checkpoint.config.entries()) config[k] = v;
  header["config"] = config;
  header["side_map"] = checkpoint.side_map;
  nlohmann::json tensors = nlohmann::json::array();
  for (const NamedTensor& t : checkpoint.tensors) tensors.push_back(tensor_entry(t.name, t.value, "param"));
  for (std::size_t i = 0; i < checkpoint.opt_m.size(); ++i)
    tensors.push_back(tensor_entry("m" + std::to_string(i), checkpoint.opt_m[i], "opt_m"));
  for (std::size_t i = 0; i < checkpoint.opt_v.size(); ++i)
    tensors.push_back(tensor_entry("v" + std::to_string(i), checkpoint.opt_v[i], "opt_v"));
  header["tensors"] = tensors;

  const std::string header_text = header.dump();
  const std::uint64_t header_len = header_text.size();
  write_raw(out, kMagic, sizeof kMagic);
  write_raw(out, &kVersion, sizeof kVersion);
  write_raw(out, &header_len, sizeof header_len);
  write_raw(out, header_text.data(), header_text.size());
  for (const NamedTensor& t : checkpoint.tensors) write_matrix(out, t.value);
  for (const matrix_t& m : checkpoint.opt_m) write_matrix(out, m);
  for (const matrix_t& m : checkpoint.opt_v) write_matrix(out, m);
  if (!out) throw IoError("failed while writing checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read checkpoint " + path.string());
  char magic[8];
  read_raw(in, magic, sizeof magic, path.string());
  if (!std::equal(magic, magic + 8, kMagic))
    throw DataError(path.string() + ": not a checkpoint file");
  std::uint32_t version = 0;
  read_raw(in, &version, sizeof version, path.string());
  if (version != kVersion)
    throw DataError(path.string() + ": unsupported checkpoint version " + std::to_string(version));
  std::uint64_t header_len = 0;
  read_raw(in, &header_len, sizeof header_len, path.string());
  std::string header_text(header_len, '\0');
  read_raw(in, header_text.data(), header_len, path.string());

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(header_text);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path.string() + ": corrupt checkpoint header: " + e.what());
  }

  Checkpoint cp;
  try {
    cp.model_kind = header.at("model").get<std::string>();
    cp.epoch = header.at("epoch").get<int>();
    cp.opt_step = header.at("opt_step").get<long>();
    for (const auto& [k, v] : header.at("config").items())
      cp.config.set(k, v.get<std::string>());
    cp.side_map = header.at("side_map").get<std::vector<SideValue>>();
    for (const auto& t : header.at("tensors")) {
      const std::string kind = t.at("kind").get<std::string>();
      const auto rows = t.at("rows").get<index_t>();
      const auto cols = t.at("cols").get<index_t>();
      matrix_t m = read_matrix(in, rows, cols, path.string());
      if (kind == "param")
        cp.tensors.push_back({t.at("name").get<std::string>(), std::move(m)});
      else if (kind == "opt_m")
        cp.opt_m.push_back(std::move(m));
      else if (kind == "opt_v")
        cp.opt_v.push_back(std::move(m));
      else
        throw DataError(path.string() + ": unknown tensor kind '" + kind + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path.string() + ": malformed checkpoint header: " + e.what());
  }
  return cp;
}

}  // namespace sessrec::io
