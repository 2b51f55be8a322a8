#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "sessrec/data/sessions.hpp"

namespace sessrec::data {

/**
 * Example files are plain UTF-8 text, LF line endings, one example per
 * line: prefix_len, the padded input IDs, the target, then (when the
 * dataset has side information) the padded side fields and the side
 * target. A multi-valued side field is its IDs joined by commas; an empty
 * side slot is written as 0.
 */
void write_examples(const std::filesystem::path& path, std::span<const TrainingExample> examples,
                    SideKind side_kind);

std::vector<TrainingExample> read_examples(const std::filesystem::path& path, SideKind side_kind);

/** One "raw_key<TAB>id" line per non-pad entry, in ID order. */
void write_vocab(const std::filesystem::path& path, const std::vector<std::string>& id_to_key);

/** Returns id->key with index 0 reserved for padding. */
std::vector<std::string> read_vocab(const std::filesystem::path& path);

/** One "item_id<TAB>side_field" line per item that has a side value. */
void write_side_map(const std::filesystem::path& path, std::span<const SideValue> map);

std::vector<SideValue> read_side_map(const std::filesystem::path& path, index_t item_vocab_size);

}  // namespace sessrec::data
