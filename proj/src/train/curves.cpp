#include "sessrec/train/curves.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace sessrec::train {

namespace {

std::string fmt(scalar_t v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

void write_row(std::ofstream& out, const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out << '\t';
    out << fields[i];
  }
  out << '\n';
}

int column_index(const MetricsTable& table, const std::string& name) {
  for (std::size_t i = 0; i < table.header.size(); ++i)
    if (table.header[i] == name) return static_cast<int>(i);
  return -1;
}

}  // namespace

void write_metrics_table(const std::filesystem::path& path, std::span<const EpochRecord> records,
                         std::span<const int> ks) {
  if (records.empty()) throw std::invalid_argument("no epoch records to export");
  std::ofstream out = open_out(path);
  std::vector<std::string> header{"epoch", "train_loss"};
  for (int k : ks) {
    header.push_back("recall@" + std::to_string(k));
    header.push_back("mrr@" + std::to_string(k));
  }
  header.push_back("wall_seconds");
  write_row(out, header);
  for (const EpochRecord& rec : records) {
    std::vector<std::string> row{std::to_string(rec.epoch), fmt(rec.train_loss)};
    for (std::size_t i = 0; i < ks.size(); ++i) {
      row.push_back(fmt(rec.recall[i]));
      row.push_back(fmt(rec.mrr[i]));
    }
    char wall[32];
    std::snprintf(wall, sizeof wall, "%.3f", rec.wall_seconds);
    row.push_back(wall);
    write_row(out, row);
  }
  if (!out) throw IoError("failed while writing " + path.string());
}

MetricsTable read_metrics_table(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  MetricsTable table;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, '\t')) fields.push_back(field);
    if (table.header.empty())
      table.header = std::move(fields);
    else {
      if (fields.size() != table.header.size())
        throw DataError(path.string() + ": ragged metrics table");
      table.rows.push_back(std::move(fields));
    }
  }
  if (table.header.empty()) throw DataError(path.string() + ": empty metrics table");
  return table;
}

void write_merged_table(const std::filesystem::path& path, std::span<const std::string> labels,
                        std::span<const MetricsTable> tables) {
  if (tables.empty() || labels.size() != tables.size())
    throw std::invalid_argument("merged table needs one label per input table");
  for (const MetricsTable& t : tables)
    if (t.header != tables[0].header)
      throw ConfigError("metrics tables have mismatched column sets and cannot be merged");
  std::ofstream out = open_out(path);
  std::vector<std::string> header{"run"};
  header.insert(header.end(), tables[0].header.begin(), tables[0].header.end());
  write_row(out, header);
  for (std::size_t t = 0; t < tables.size(); ++t)
    for (const auto& row : tables[t].rows) {
      std::vector<std::string> merged{labels[t]};
      merged.insert(merged.end(), row.begin(), row.end());
      write_row(out, merged);
    }
  if (!out) throw IoError("failed while writing " + path.string());
}

void write_summary_table(const std::filesystem::path& path, std::span<const std::string> labels,
                         std::span<const MetricsTable> tables, int k) {
  if (tables.empty() || labels.size() != tables.size())
    throw std::invalid_argument("summary table needs one label per input table");
  const std::string recall_col = "recall@" + std::to_string(k);
  const std::string mrr_col = "mrr@" + std::to_string(k);
  std::ofstream out = open_out(path);
  write_row(out, {"run", "best_" + recall_col, "best_" + mrr_col});
  for (std::size_t t = 0; t < tables.size(); ++t) {
    const int ri = column_index(tables[t], recall_col);
    const int mi = column_index(tables[t], mrr_col);
    if (ri < 0 || mi < 0)
      throw ConfigError("metrics table for run '" + labels[t] + "' lacks " + recall_col + "/" +
                        mrr_col);
    scalar_t best_recall = 0, best_mrr = 0;
    for (const auto& row : tables[t].rows) {
      best_recall = std::max(best_recall, std::stod(row[static_cast<std::size_t>(ri)]));
      best_mrr = std::max(best_mrr, std::stod(row[static_cast<std::size_t>(mi)]));
    }
    write_row(out, {labels[t], fmt(best_recall), fmt(best_mrr)});
  }
  if (!out) throw IoError("failed while writing " + path.string());
}

}  // namespace sessrec::train
