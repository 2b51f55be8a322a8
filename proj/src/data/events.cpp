#include "sessrec/data/events.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <istream>
#include <optional>
#include <sstream>

namespace sessrec::data {

SideKind side_kind_from_string(const std::string& s) {
  if (s == "none") return SideKind::none;
  if (s == "single") return SideKind::single;
  if (s == "multi") return SideKind::multi;
  throw ConfigError("unknown side_kind '" + s + "' (expected none|single|multi)");
}

std::string to_string(SideKind k) {
  switch (k) {
    case SideKind::none: return "none";
    case SideKind::single: return "single";
    case SideKind::multi: return "multi";
  }
  return "none";
}

void DatasetProfile::validate() const {
  if (session_length < 2) throw ConfigError("session_length must be >= 2");
  if (session_duration <= 0) throw ConfigError("session_duration must be positive");
  if (min_item_count < 1) throw ConfigError("min_item_count must be >= 1");
}

DatasetProfile profile_preset(const std::string& name) {
  DatasetProfile p;
  p.name = name;
  if (name == "diginetica") {
    p.session_length = 50;
    p.session_duration = 28800;
    p.min_item_count = 5;
    p.side_kind = SideKind::single;
  } else if (name == "lastfm") {
    p.session_length = 50;
    p.session_duration = 28800;
    p.min_item_count = 1;
    p.side_kind = SideKind::none;
  } else if (name == "movielens") {
    p.session_length = 50;
    p.session_duration = 86400;
    p.min_item_count = 5;
    p.side_kind = SideKind::multi;
  } else if (name == "tafeng") {
    p.session_length = 40;
    p.session_duration = 14 * 86400;
    p.min_item_count = 1;
    p.side_kind = SideKind::single;
  } else if (name == "synthetic") {
    p.session_length = 64;
    p.session_duration = 1000000000;
    p.min_item_count = 1;
    p.side_kind = SideKind::single;
  } else if (name == "custom") {
    // caller fills in every field
  } else {
    throw ConfigError("unknown dataset profile '" + name + "'");
  }
  return p;
}

namespace {

std::vector<std::string> split_line(const std::string& line, char delim) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, delim)) out.push_back(field);
  if (!line.empty() && line.back() == delim) out.emplace_back();
  return out;
}

bool all_digits(const std::string& s) {
  if (s.empty()) return false;
  return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isdigit(c); });
}

int resolve_column(const std::string& spec, const std::vector<std::string>& header, bool has_header,
                   const char* field_name) {
  if (all_digits(spec)) return std::stoi(spec);
  if (!has_header)
    throw ConfigError(std::string("column for '") + field_name +
                      "' must be a numeric index when the input has no header");
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == spec) return static_cast<int>(i);
  throw ConfigError(std::string("column '") + spec + "' for '" + field_name +
                    "' not found in header");
}

std::optional<std::int64_t> parse_timestamp(const std::string& s) {
  std::int64_t v = 0;
  const char* begin = s.data();
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(begin, end, v);
  if (ec != std::errc() || ptr != end || v < 0) return std::nullopt;
  return v;
}

std::string strip_cr(std::string s) {
  if (!s.empty() && s.back() == '\r') s.pop_back();
  return s;
}

}  // namespace

ParseResult parse_events(std::istream& in, const DatasetProfile& profile, const ColumnMap& columns) {
  profile.validate();
  if (!in) throw IoError("event stream is not readable");

  std::string line;
  std::vector<std::string> header;
  if (columns.has_header) {
    if (!std::getline(in, line)) throw DataError("event table is empty (no header row)");
    header = split_line(strip_cr(line), columns.delimiter);
  }

  const int user_col = resolve_column(columns.user, header, columns.has_header, "user");
  const int time_col = resolve_column(columns.time, header, columns.has_header, "time");
  const int item_col = resolve_column(columns.item, header, columns.has_header, "item");
  const bool want_side = profile.side_kind != SideKind::none;
  int side_col = -1;
  if (want_side) {
    if (columns.side.empty())
      throw ConfigError("profile requires side information but no side column is configured");
    side_col = resolve_column(columns.side, header, columns.has_header, "side");
  }

  ParseResult result;
  while (std::getline(in, line)) {
    line = strip_cr(line);
    if (line.empty()) continue;
    ++result.total_rows;
    const std::vector<std::string> fields = split_line(line, columns.delimiter);
    const int needed = std::max({user_col, time_col, item_col, side_col});
    if (static_cast<int>(fields.size()) <= needed) {
      ++result.skipped;
      continue;
    }
    Event e;
    e.user = fields[user_col];
    e.item = fields[item_col];
    const auto ts = parse_timestamp(fields[time_col]);
    if (e.user.empty() || e.item.empty() || !ts) {
      ++result.skipped;
      continue;
    }
    e.timestamp = *ts;
    if (want_side) {
      const std::string& raw = fields[side_col];
      for (const std::string& part : split_line(raw, columns.side_separator))
        if (!part.empty()) e.side.push_back(part);
      if (e.side.empty()) {
        ++result.skipped;
        continue;
      }
      if (profile.side_kind == SideKind::single && e.side.size() > 1) e.side.resize(1);
    }
    result.events.push_back(std::move(e));
  }

  if (result.total_rows > 0 && result.skipped * 2 > result.total_rows)
    throw DataError("more than half of the input rows are malformed (" +
                    std::to_string(result.skipped) + " of " + std::to_string(result.total_rows) +
                    ")");

  std::stable_sort(result.events.begin(), result.events.end(), [](const Event& a, const Event& b) {
    if (a.user != b.user) return a.user < b.user;
    return a.timestamp < b.timestamp;
  });
  return result;
}

}  // namespace sessrec::data
