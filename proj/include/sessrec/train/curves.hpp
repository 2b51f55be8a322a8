#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "sessrec/train/fit.hpp"

namespace sessrec::train {

/**
 * Canonical per-epoch metrics artifact: a UTF-8, LF, tab-separated table
 * with one data row per epoch (epoch, train_loss, recall@K / mrr@K per
 * configured K, wall_seconds).
 */
void write_metrics_table(const std::filesystem::path& path, std::span<const EpochRecord> records,
                         std::span<const int> ks);

struct MetricsTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

MetricsTable read_metrics_table(const std::filesystem::path& path);

/**
 * Long-form comparison: every input table's rows with a leading run-label
 * column. All tables must share one header.
 */
void write_merged_table(const std::filesystem::path& path, std::span<const std::string> labels,
                        std::span<const MetricsTable> tables);

/**
 * One row per run: label, best recall@k, best mrr@k (column maxima).
 * Fails when a table lacks the requested cutoff.
 */
void write_summary_table(const std::filesystem::path& path, std::span<const std::string> labels,
                         std::span<const MetricsTable> tables, int k);

}  // namespace sessrec::train
