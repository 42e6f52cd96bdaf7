#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "histreg/mathutil.hpp"

namespace histreg {

constexpr int kMissingCount = -1;
constexpr int kMinutesPerDay = 1440;
constexpr int kMaxDays = 7;
constexpr int kMaxMinutes = kMaxDays * kMinutesPerDay;

inline bool is_missing(int c) { return c < 0; }

// Calendar datetime at minute resolution, stored as minutes since 1970-01-01 00:00.
struct MinuteStamp {
  int64_t epoch_minutes = 0;

  static MinuteStamp from_civil(int y, int mo, int d, int h, int mi) {
    return {days_from_civil(y, mo, d) * kMinutesPerDay + h * 60 + mi};
  }
  int64_t day() const {
    int64_t d = epoch_minutes / kMinutesPerDay;
    if (epoch_minutes < 0 && epoch_minutes % kMinutesPerDay != 0) --d;
    return d;
  }
  int minute_of_day() const {
    int64_t m = epoch_minutes - day() * kMinutesPerDay;
    return static_cast<int>(m);
  }
  // 0 = Monday ... 6 = Sunday
  int weekday() const { return weekday_from_days(day()); }
  bool operator==(const MinuteStamp&) const = default;
  auto operator<=>(const MinuteStamp&) const = default;
};

struct CleaningConfig {
  int zero_block_len = 10;      // runs of zeros longer than this become missing
  double min_day_mean = 150.0;  // cpm
  double sd_multiplier = 3.0;
  int min_wear_minutes = 600;
  int min_valid_days = 3;
  int count_cap = 15000;  // cpm; strictly greater is set missing

  void validate() const {
    if (zero_block_len <= 0 || min_day_mean <= 0 || sd_multiplier <= 0 || min_wear_minutes <= 0 ||
        min_valid_days <= 0 || count_cap <= 0)
      fail_config("CleaningConfig: all fields must be strictly positive");
  }
};

// One subject's minute-epoch count series. Entries are counts >= 0 or
// kMissingCount. Minute i is at start + i.
struct RawProfile {
  std::string subject_id;
  MinuteStamp start;
  std::vector<int> counts;
};

enum class DayExclusion { none, no_data, short_wear, mean_low, mean_high };

inline const char* to_string(DayExclusion e) {
  switch (e) {
    case DayExclusion::none: return "none";
    case DayExclusion::no_data: return "no_data";
    case DayExclusion::short_wear: return "short_wear";
    case DayExclusion::mean_low: return "mean_low";
    case DayExclusion::mean_high: return "mean_high";
  }
  return "?";
}

struct DayRecord {
  int day_index = 0;
  bool weekday_flag = true;  // Mon-Fri
  std::vector<int> counts;   // 1440 entries; all missing when the day is invalid
  int weartime = 0;          // non-missing minutes measured before invalidation
  double day_mean = std::numeric_limits<double>::quiet_NaN();  // over worn minutes
  bool valid = false;
  DayExclusion exclusion = DayExclusion::no_data;
};

struct CleanProfile {
  std::string subject_id;
  MinuteStamp start;  // midnight of day 0
  std::array<DayRecord, kMaxDays> days;
  int weartime_total = 0;  // summed over valid days only
  int valid_days = 0;
  bool valid = false;
};

// Replaces every maximal run of consecutive zeros longer than cfg.zero_block_len
// with missing. A missing entry is not a zero and splits runs.
inline RawProfile mark_nonwear(RawProfile p, const CleaningConfig& cfg) {
  auto& c = p.counts;
  size_t i = 0;
  while (i < c.size()) {
    if (c[i] == 0) {
      size_t j = i;
      while (j < c.size() && c[j] == 0) ++j;
      if (static_cast<int>(j - i) > cfg.zero_block_len) {
        for (size_t k = i; k < j; ++k) c[k] = kMissingCount;
      }
      i = j;
    } else {
      ++i;
    }
  }
  return p;
}

// Entries strictly greater than cfg.count_cap become missing.
inline RawProfile cap_counts(RawProfile p, const CleaningConfig& cfg) {
  for (int& c : p.counts)
    if (!is_missing(c) && c > cfg.count_cap) c = kMissingCount;
  return p;
}

namespace detail {

// Distributes the series over calendar-day slots relative to the start's
// calendar day. Minutes past the seventh calendar day are ignored.
inline std::array<std::vector<int>, kMaxDays> day_slots(const RawProfile& p) {
  std::array<std::vector<int>, kMaxDays> slots;
  for (auto& s : slots) s.assign(kMinutesPerDay, kMissingCount);
  const int64_t day0 = p.start.day();
  for (size_t i = 0; i < p.counts.size(); ++i) {
    MinuteStamp t{p.start.epoch_minutes + static_cast<int64_t>(i)};
    int64_t slot = t.day() - day0;
    if (slot < 0 || slot >= kMaxDays) continue;
    slots[static_cast<size_t>(slot)][static_cast<size_t>(t.minute_of_day())] = p.counts[i];
  }
  return slots;
}

}  // namespace detail

// Per-day means over worn minutes, one entry per day with >= 1 worn minute.
inline std::vector<double> day_means(const RawProfile& p) {
  std::vector<double> out;
  auto slots = detail::day_slots(p);
  for (const auto& day : slots) {
    int64_t sum = 0;
    int worn = 0;
    for (int c : day)
      if (!is_missing(c)) {
        sum += c;
        ++worn;
      }
    if (worn > 0) out.push_back(static_cast<double>(sum) / worn);
  }
  return out;
}

// Cohort mean and sample sd of per-day mean counts, pooled over all days with
// at least one worn minute, before any day exclusions.
inline std::pair<double, double> cohort_day_stats(const std::vector<RawProfile>& profiles) {
  std::vector<double> means;
  for (const auto& p : profiles) {
    auto m = day_means(p);
    means.insert(means.end(), m.begin(), m.end());
  }
  if (means.empty()) throw Error(ErrorKind::empty_cohort, "cohort_day_stats: no worn days in cohort");
  return {mean_of(means), sd_of(means)};
}

// Applies the day/profile validity rules. Expects mark_nonwear and cap_counts
// to have been applied already; global_mean/global_sd come from
// cohort_day_stats over the whole cohort.
inline CleanProfile validate_days(const RawProfile& p, const CleaningConfig& cfg, double global_mean,
                                  double global_sd) {
  cfg.validate();
  CleanProfile out;
  out.subject_id = p.subject_id;
  out.start = MinuteStamp{p.start.day() * kMinutesPerDay};
  auto slots = detail::day_slots(p);
  const double upper = global_mean + cfg.sd_multiplier * global_sd;
  for (int d = 0; d < kMaxDays; ++d) {
    DayRecord& rec = out.days[static_cast<size_t>(d)];
    rec.day_index = d;
    rec.weekday_flag = weekday_from_days(p.start.day() + d) < 5;
    rec.counts = std::move(slots[static_cast<size_t>(d)]);
    int64_t sum = 0;
    for (int c : rec.counts)
      if (!is_missing(c)) {
        sum += c;
        ++rec.weartime;
      }
    if (rec.weartime == 0) {
      rec.exclusion = DayExclusion::no_data;
    } else {
      rec.day_mean = static_cast<double>(sum) / rec.weartime;
      if (rec.weartime < cfg.min_wear_minutes)
        rec.exclusion = DayExclusion::short_wear;
      else if (rec.day_mean < cfg.min_day_mean)
        rec.exclusion = DayExclusion::mean_low;
      else if (rec.day_mean > upper)
        rec.exclusion = DayExclusion::mean_high;
      else
        rec.exclusion = DayExclusion::none;
    }
    rec.valid = rec.exclusion == DayExclusion::none;
    if (rec.valid) {
      out.weartime_total += rec.weartime;
      ++out.valid_days;
    } else {
      std::fill(rec.counts.begin(), rec.counts.end(), kMissingCount);
    }
  }
  out.valid = out.valid_days >= cfg.min_valid_days;
  return out;
}

struct CohortCleanResult {
  std::vector<CleanProfile> profiles;  // same order as input
  double global_mean = 0.0;
  double global_sd = 0.0;
};

// Full cleaning protocol: non-wear marking, capping, cohort day stats, day and
// profile validation.
inline CohortCleanResult clean_cohort(std::vector<RawProfile> raw, const CleaningConfig& cfg) {
  cfg.validate();
  for (auto& p : raw) p = cap_counts(mark_nonwear(std::move(p), cfg), cfg);
  CohortCleanResult out;
  auto [gm, gs] = cohort_day_stats(raw);
  out.global_mean = gm;
  out.global_sd = gs;
  out.profiles.reserve(raw.size());
  for (const auto& p : raw) out.profiles.push_back(validate_days(p, cfg, gm, gs));
  return out;
}

}  // namespace histreg
