#pragma once

#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "histreg/csv.hpp"
#include "histreg/profile.hpp"

namespace histreg {

enum class ProfileFormat { long_csv, wide_csv };

// Accepts "YYYY-MM-DDTHH:MM[:SS]" with 'T' or ' ' as the separator. Seconds
// are allowed but must be zero (minute resolution).
inline MinuteStamp parse_timestamp(const std::string& s, size_t line_no) {
  int y, mo, d, h, mi, se = 0;
  char sep;
  int n = std::sscanf(s.c_str(), "%d-%d-%d%c%d:%d:%d", &y, &mo, &d, &sep, &h, &mi, &se);
  if (n < 6 || (sep != 'T' && sep != ' ') || mo < 1 || mo > 12 || d < 1 || d > 31 || h < 0 || h > 23 ||
      mi < 0 || mi > 59 || se != 0)
    fail_input("line " + std::to_string(line_no) + ": malformed timestamp '" + s + "'");
  return MinuteStamp::from_civil(y, mo, d, h, mi);
}

inline std::string format_timestamp(MinuteStamp t) {
  int y, mo, d;
  civil_from_days(t.day(), y, mo, d);
  int mod = t.minute_of_day();
  char buf[24];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d", y, mo, d, mod / 60, mod % 60);
  return buf;
}

// Long format: header `subject_id,timestamp,count`. Rows may be unordered and
// subjects interleaved; gaps in timestamps become missing minutes.
inline std::vector<RawProfile> parse_profiles_long(const std::string& path) {
  auto rows = read_csv(path);
  if (rows.empty() || rows[0].size() != 3 || rows[0][0] != "subject_id" || rows[0][1] != "timestamp" ||
      rows[0][2] != "count")
    fail_input(path + ": expected header subject_id,timestamp,count");
  struct Entry {
    MinuteStamp t;
    int count;
    size_t line;
  };
  std::vector<std::string> order;
  std::map<std::string, std::vector<Entry>> by_subject;
  for (size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    size_t line_no = r + 1;
    if (row.size() != 3) fail_input("line " + std::to_string(line_no) + ": expected 3 fields");
    MinuteStamp t = parse_timestamp(row[1], line_no);
    int count = kMissingCount;
    if (!row[2].empty()) {
      long v = parse_long(row[2], line_no, "count");
      if (v < 0) fail_input("line " + std::to_string(line_no) + ": negative count");
      count = static_cast<int>(v);
    }
    auto it = by_subject.find(row[0]);
    if (it == by_subject.end()) {
      order.push_back(row[0]);
      it = by_subject.emplace(row[0], std::vector<Entry>{}).first;
    }
    it->second.push_back({t, count, line_no});
  }
  std::vector<RawProfile> out;
  out.reserve(order.size());
  for (const auto& id : order) {
    auto& entries = by_subject[id];
    std::stable_sort(entries.begin(), entries.end(),
                     [](const Entry& a, const Entry& b) { return a.t < b.t; });
    for (size_t i = 1; i < entries.size(); ++i)
      if (entries[i].t == entries[i - 1].t)
        fail_input("line " + std::to_string(entries[i].line) + ": duplicate timestamp for subject " + id);
    RawProfile p;
    p.subject_id = id;
    p.start = entries.front().t;
    int64_t span = entries.back().t.epoch_minutes - entries.front().t.epoch_minutes + 1;
    if (span > kMaxMinutes)
      fail_input("subject " + id + ": series spans " + std::to_string(span) + " minutes (max " +
                 std::to_string(kMaxMinutes) + ")");
    p.counts.assign(static_cast<size_t>(span), kMissingCount);
    for (const auto& e : entries)
      p.counts[static_cast<size_t>(e.t.epoch_minutes - p.start.epoch_minutes)] = e.count;
    out.push_back(std::move(p));
  }
  return out;
}

// Wide format: header `subject_id,start_timestamp,c0,...,c10079`; empty cells
// are missing minutes.
inline std::vector<RawProfile> parse_profiles_wide(const std::string& path) {
  auto rows = read_csv(path);
  if (rows.empty() || rows[0].size() < 3 || rows[0][0] != "subject_id" || rows[0][1] != "start_timestamp" ||
      rows[0][2] != "c0")
    fail_input(path + ": expected header subject_id,start_timestamp,c0,...");
  size_t ncols = rows[0].size() - 2;
  if (ncols > static_cast<size_t>(kMaxMinutes)) fail_input(path + ": more than 10080 count columns");
  std::vector<RawProfile> out;
  std::map<std::string, size_t> seen;
  for (size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    size_t line_no = r + 1;
    if (row.size() != rows[0].size())
      fail_input("line " + std::to_string(line_no) + ": expected " + std::to_string(rows[0].size()) +
                 " fields, got " + std::to_string(row.size()));
    RawProfile p;
    p.subject_id = row[0];
    if (seen.count(p.subject_id)) fail_input("line " + std::to_string(line_no) + ": duplicate subject " + p.subject_id);
    seen[p.subject_id] = line_no;
    p.start = parse_timestamp(row[1], line_no);
    p.counts.reserve(ncols);
    for (size_t c = 2; c < row.size(); ++c) {
      if (row[c].empty()) {
        p.counts.push_back(kMissingCount);
      } else {
        long v = parse_long(row[c], line_no, "count");
        if (v < 0) fail_input("line " + std::to_string(line_no) + ": negative count");
        p.counts.push_back(static_cast<int>(v));
      }
    }
    // trailing missing cells are padding, not data
    while (!p.counts.empty() && is_missing(p.counts.back())) p.counts.pop_back();
    out.push_back(std::move(p));
  }
  return out;
}

inline std::vector<RawProfile> parse_profiles(const std::string& path, ProfileFormat format) {
  return format == ProfileFormat::long_csv ? parse_profiles_long(path) : parse_profiles_wide(path);
}

inline std::string emit_profiles_long(const std::vector<RawProfile>& profiles) {
  std::string out = "subject_id,timestamp,count\n";
  for (const auto& p : profiles)
    for (size_t i = 0; i < p.counts.size(); ++i) {
      if (is_missing(p.counts[i])) continue;
      MinuteStamp t{p.start.epoch_minutes + static_cast<int64_t>(i)};
      out += p.subject_id;
      out += ',';
      out += format_timestamp(t);
      out += ',';
      out += std::to_string(p.counts[i]);
      out += '\n';
    }
  return out;
}

inline std::string emit_profiles_wide(const std::vector<RawProfile>& profiles) {
  std::string out = "subject_id,start_timestamp";
  for (int i = 0; i < kMaxMinutes; ++i) {
    out += ",c";
    out += std::to_string(i);
  }
  out += '\n';
  for (const auto& p : profiles) {
    out += p.subject_id;
    out += ',';
    out += format_timestamp(p.start);
    for (int i = 0; i < kMaxMinutes; ++i) {
      out += ',';
      if (i < static_cast<int>(p.counts.size()) && !is_missing(p.counts[static_cast<size_t>(i)]))
        out += std::to_string(p.counts[static_cast<size_t>(i)]);
    }
    out += '\n';
  }
  return out;
}

// Flattens a cleaned profile back to a raw series for re-emission.
inline RawProfile to_raw(const CleanProfile& p) {
  RawProfile out;
  out.subject_id = p.subject_id;
  out.start = p.start;
  out.counts.reserve(static_cast<size_t>(kMaxMinutes));
  for (const auto& day : p.days) out.counts.insert(out.counts.end(), day.counts.begin(), day.counts.end());
  while (!out.counts.empty() && is_missing(out.counts.back())) out.counts.pop_back();
  return out;
}

inline nlohmann::json cleaning_report(const CohortCleanResult& result, const CleaningConfig& cfg) {
  nlohmann::json subjects = nlohmann::json::array();
  for (const auto& p : result.profiles) {
    nlohmann::json days = nlohmann::json::array();
    for (const auto& d : p.days) {
      nlohmann::json jd{{"day_index", d.day_index},
                        {"weekday", d.weekday_flag},
                        {"weartime", d.weartime},
                        {"valid", d.valid},
                        {"exclusion", to_string(d.exclusion)}};
      if (!std::isnan(d.day_mean)) jd["day_mean"] = d.day_mean;
      days.push_back(jd);
    }
    subjects.push_back({{"subject_id", p.subject_id},
                        {"valid", p.valid},
                        {"valid_days", p.valid_days},
                        {"weartime_total", p.weartime_total},
                        {"days", days}});
  }
  return nlohmann::json{{"config",
                         {{"zero_block_len", cfg.zero_block_len},
                          {"min_day_mean", cfg.min_day_mean},
                          {"sd_multiplier", cfg.sd_multiplier},
                          {"min_wear_minutes", cfg.min_wear_minutes},
                          {"min_valid_days", cfg.min_valid_days},
                          {"count_cap", cfg.count_cap}}},
                        {"global_mean", result.global_mean},
                        {"global_sd", result.global_sd},
                        {"subjects", subjects}};
}

}  // namespace histreg
