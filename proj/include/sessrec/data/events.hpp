#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "sessrec/errors.hpp"
#include "sessrec/types.hpp"

namespace sessrec::data {

enum class SideKind { none, single, multi };

SideKind side_kind_from_string(const std::string& s);
std::string to_string(SideKind k);

/** One interaction row from a raw log. Side values are raw keys at this stage. */
struct Event {
  std::string user;
  std::int64_t timestamp = 0;  // seconds since epoch
  std::string item;
  std::vector<std::string> side;  // empty when the dataset carries no side column
};

/** Per-dataset preprocessing knobs. */
struct DatasetProfile {
  std::string name = "custom";
  std::int64_t session_duration = 28800;  // seconds
  int session_length = 50;                // max items per session
  int min_item_count = 1;
  SideKind side_kind = SideKind::none;

  void validate() const;
};

/** Built-in profiles: diginetica, lastfm, movielens, tafeng, synthetic. */
DatasetProfile profile_preset(const std::string& name);

/**
 * Maps logical fields to columns of a delimited text table. A column spec
 * is a header name, or a 0-based index when the table has no header (a
 * purely numeric spec is always treated as an index).
 */
struct ColumnMap {
  char delimiter = ',';
  bool has_header = true;
  std::string user = "user";
  std::string time = "timestamp";
  std::string item = "item";
  std::string side = "";  // empty: no side column
  char side_separator = '|';
};

struct ParseResult {
  std::vector<Event> events;
  std::size_t skipped = 0;
  std::size_t total_rows = 0;
};

/**
 * Reads a delimited event table. Malformed rows (missing fields, bad or
 * negative timestamps, empty side when the profile requires one) are
 * counted and skipped; more than half malformed is a data error. The
 * returned events are stably sorted by (user, timestamp).
 */
ParseResult parse_events(std::istream& in, const DatasetProfile& profile, const ColumnMap& columns);

}  // namespace sessrec::data
