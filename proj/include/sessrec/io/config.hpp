#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sessrec/data/events.hpp"
#include "sessrec/train/fit.hpp"
#include "sessrec/train/synth.hpp"

namespace sessrec::io {

/**
 * Flat "key = value" document ('#' starts a comment). Keys keep insertion
 * order; later assignments overwrite earlier ones in place.
 */
class KeyValues {
 public:
  static KeyValues parse(std::istream& in, const std::string& origin = "<stream>");
  static KeyValues parse_file(const std::filesystem::path& path);

  std::optional<std::string> get(const std::string& key) const;
  void set(const std::string& key, std::string value);
  bool contains(const std::string& key) const;
  const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }

  void write_file(const std::filesystem::path& path) const;

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
};

/**
 * Everything one run needs: the dataset profile and column map, the
 * training recipe, the synthetic-data recipe, the split fraction, and the
 * single seed every random choice derives from.
 */
struct RunConfig {
  data::DatasetProfile profile;
  data::ColumnMap columns;
  train::TrainConfig train = train::default_train_config("repeatnet");
  train::SynthConfig synth;
  double test_fraction = 0.1;
  std::uint64_t seed = 42;

  /** Rejects unknown keys; `dataset.name` applies a profile preset first. */
  static RunConfig from(const KeyValues& kv);
  static RunConfig from_file(const std::filesystem::path& path);

  /** Every knob with its final value, in canonical order. */
  KeyValues effective() const;

  void validate() const;
};

}  // namespace sessrec::io
