#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <vector>

#include "histreg/profile.hpp"

namespace histreg {

enum class BinTransform { identity, power };

// Intensity bin grid. Edges are stored on the count scale; with the power
// transform they are equally spaced in u = c^alpha. Midpoints are arithmetic
// bin centers on the transformed scale, mapped back.
struct BinGrid {
  std::vector<double> edges;      // strictly increasing, count scale
  std::vector<double> midpoints;  // one per bin
  BinTransform transform = BinTransform::identity;
  double alpha = 0.35;

  int bins() const { return static_cast<int>(edges.size()) - 1; }

  // Bin of a count value: [e_j, e_{j+1}), with the final bin right-closed so
  // a count equal to the cap (kept by cap_counts) still has a bin.
  int bin_index(double c) const {
    if (c < edges.front() || c > edges.back()) return -1;
    if (c == edges.back()) return bins() - 1;
    auto it = std::upper_bound(edges.begin(), edges.end(), c);
    return static_cast<int>(it - edges.begin()) - 1;
  }

  bool operator==(const BinGrid& o) const {
    return edges == o.edges && transform == o.transform && (transform == BinTransform::identity || alpha == o.alpha);
  }

  // Same grid with the first bin deleted (z values are handled by the caller).
  BinGrid without_first_bin() const {
    if (bins() < 2) fail_config("BinGrid: cannot drop the only bin");
    BinGrid g = *this;
    g.edges.erase(g.edges.begin());
    g.midpoints.erase(g.midpoints.begin());
    return g;
  }
};

// Equal-width bins of `width` up to `upper` plus one tail bin [upper, cap).
// With the power transform the equal widths are on the u = c^alpha scale,
// keeping the same number of bins.
inline BinGrid make_bins(double width = 100.0, double upper = 8000.0, double cap = 15000.0,
                         BinTransform transform = BinTransform::identity, double alpha = 0.35) {
  if (cap <= upper) fail_config("make_bins: cap must exceed upper");
  if (width <= 0 || upper <= 0) fail_config("make_bins: width and upper must be positive");
  double nb = upper / width;
  if (std::abs(nb - std::round(nb)) > 1e-9) fail_config("make_bins: upper must be divisible by width");
  int body = static_cast<int>(std::round(nb));
  BinGrid g;
  g.transform = transform;
  g.alpha = alpha;
  auto fwd = [&](double c) { return transform == BinTransform::power ? std::pow(c, alpha) : c; };
  auto back = [&](double u) { return transform == BinTransform::power ? std::pow(u, 1.0 / alpha) : u; };
  const double u_upper = fwd(upper), u_cap = fwd(cap);
  std::vector<double> u_edges;
  u_edges.reserve(static_cast<size_t>(body) + 2);
  for (int i = 0; i <= body; ++i) u_edges.push_back(u_upper * static_cast<double>(i) / body);
  u_edges.push_back(u_cap);
  for (double u : u_edges) g.edges.push_back(back(u));
  g.edges.front() = 0.0;
  g.edges[static_cast<size_t>(body)] = upper;
  g.edges.back() = cap;
  for (size_t j = 0; j + 1 < u_edges.size(); ++j) g.midpoints.push_back(back(0.5 * (u_edges[j] + u_edges[j + 1])));
  return g;
}

enum class SummaryKind { oneD, twoD, split };

// Histogram functional summary of one cleaned profile.
struct HistogramSummary {
  std::string subject_id;
  SummaryKind kind = SummaryKind::oneD;
  BinGrid grid;
  int weartime_minutes = 0;
  int valid_days = 0;

  Eigen::VectorXd z;  // oneD: relative frequencies, one per bin

  Eigen::MatrixXd z2;       // twoD: J x M densities, sum_j sum_m z*l_m = 1
  double hour_width = 1.0;  // l_m in hours

  Eigen::VectorXd z_wd, z_we;  // split: per-side relative frequencies
  int wd_weartime = 0, we_weartime = 0;
  bool wd_empty = false, we_empty = false;
};

namespace detail {

inline void require_valid(const CleanProfile& p) {
  if (!p.valid)
    fail_input("profile " + p.subject_id + " failed cleaning (" + std::to_string(p.valid_days) + " valid days)");
  if (p.weartime_total <= 0) fail_input("profile " + p.subject_id + " has zero weartime");
}

}  // namespace detail

// 1D histogram over intensity: z_j = worn minutes in bin j / total weartime.
inline HistogramSummary hist1d(const CleanProfile& p, const BinGrid& grid) {
  detail::require_valid(p);
  HistogramSummary h;
  h.subject_id = p.subject_id;
  h.kind = SummaryKind::oneD;
  h.grid = grid;
  h.weartime_minutes = p.weartime_total;
  h.valid_days = p.valid_days;
  Eigen::VectorXd tally = Eigen::VectorXd::Zero(grid.bins());
  for (const auto& day : p.days)
    for (int c : day.counts) {
      if (is_missing(c)) continue;
      int j = grid.bin_index(c);
      if (j >= 0) tally[j] += 1.0;
    }
  h.z = tally / static_cast<double>(p.weartime_total);
  return h;
}

// 2D histogram over intensity x hour of day, on the density scale:
// z(p_j, t_m) = minutes / (weartime * l_m).
inline HistogramSummary hist2d(const CleanProfile& p, const BinGrid& grid, int hour_width = 1) {
  detail::require_valid(p);
  if (hour_width <= 0 || 24 % hour_width != 0) fail_config("hist2d: 24 must be divisible by hour_width");
  HistogramSummary h;
  h.subject_id = p.subject_id;
  h.kind = SummaryKind::twoD;
  h.grid = grid;
  h.weartime_minutes = p.weartime_total;
  h.valid_days = p.valid_days;
  h.hour_width = hour_width;
  const int M = 24 / hour_width;
  Eigen::MatrixXd tally = Eigen::MatrixXd::Zero(grid.bins(), M);
  for (const auto& day : p.days)
    for (int minute = 0; minute < kMinutesPerDay; ++minute) {
      int c = day.counts[static_cast<size_t>(minute)];
      if (is_missing(c)) continue;
      int j = grid.bin_index(c);
      if (j < 0) continue;
      int m = minute / (60 * hour_width);
      tally(j, m) += 1.0;
    }
  h.z2 = tally / (static_cast<double>(p.weartime_total) * hour_width);
  return h;
}

// Weekday/weekend split, each side normalized by its own weartime. An empty
// side yields an all-zero vector and a flag rather than an error.
inline HistogramSummary hist_split(const CleanProfile& p, const BinGrid& grid) {
  detail::require_valid(p);
  HistogramSummary h;
  h.subject_id = p.subject_id;
  h.kind = SummaryKind::split;
  h.grid = grid;
  h.weartime_minutes = p.weartime_total;
  h.valid_days = p.valid_days;
  Eigen::VectorXd wd = Eigen::VectorXd::Zero(grid.bins());
  Eigen::VectorXd we = Eigen::VectorXd::Zero(grid.bins());
  for (const auto& day : p.days) {
    if (!day.valid) continue;
    Eigen::VectorXd& side = day.weekday_flag ? wd : we;
    int& wear = day.weekday_flag ? h.wd_weartime : h.we_weartime;
    for (int c : day.counts) {
      if (is_missing(c)) continue;
      int j = grid.bin_index(c);
      if (j >= 0) side[j] += 1.0;
      ++wear;
    }
  }
  h.wd_empty = h.wd_weartime == 0;
  h.we_empty = h.we_weartime == 0;
  h.z_wd = h.wd_empty ? wd : Eigen::VectorXd(wd / h.wd_weartime);
  h.z_we = h.we_empty ? we : Eigen::VectorXd(we / h.we_weartime);
  return h;
}

// Mean counts per minute implied by a 1D summary: sum_j p_j z_j.
inline double mean_cpm(const HistogramSummary& h) {
  if (h.kind != SummaryKind::oneD) fail_config("mean_cpm: requires a oneD summary");
  double s = 0.0;
  for (int j = 0; j < h.z.size(); ++j) s += h.grid.midpoints[static_cast<size_t>(j)] * h.z[j];
  return s;
}

// Deletes bin 1. Remaining values are not renormalized: the removed mass is
// absorbed by the model intercept.
inline HistogramSummary drop_first_bin(const HistogramSummary& h) {
  if (h.kind == SummaryKind::twoD) fail_config("drop_first_bin: requires a oneD or split summary");
  HistogramSummary out = h;
  out.grid = h.grid.without_first_bin();
  if (h.kind == SummaryKind::oneD) {
    out.z = h.z.tail(h.z.size() - 1);
  } else {
    out.z_wd = h.z_wd.tail(h.z_wd.size() - 1);
    out.z_we = h.z_we.tail(h.z_we.size() - 1);
  }
  return out;
}

// Re-tallies a summary onto a coarser grid whose edges are a subset of the
// original edges.
inline HistogramSummary aggregate_bins(const HistogramSummary& h, const BinGrid& coarse) {
  if (h.kind != SummaryKind::oneD) fail_config("aggregate_bins: requires a oneD summary");
  for (double e : coarse.edges)
    if (std::find(h.grid.edges.begin(), h.grid.edges.end(), e) == h.grid.edges.end())
      fail_config("aggregate_bins: coarse edges must be a subset of the fine edges");
  HistogramSummary out = h;
  out.grid = coarse;
  out.z = Eigen::VectorXd::Zero(coarse.bins());
  for (int j = 0; j < h.z.size(); ++j) {
    size_t je = static_cast<size_t>(j);
    int cj = coarse.bin_index(0.5 * (h.grid.edges[je] + h.grid.edges[je + 1]));
    if (cj < 0) fail_config("aggregate_bins: fine bin outside the coarse grid");
    out.z[cj] += h.z[j];
  }
  return out;
}

struct BinCorrelation {
  Eigen::MatrixXd matrix;         // J x J, NaN where undefined
  std::vector<bool> degenerate;   // bins with zero variance across subjects
};

// Pearson correlation of bin relative frequencies across subjects.
inline BinCorrelation bin_correlation(const std::vector<HistogramSummary>& hs) {
  if (hs.size() < 3) fail_input("bin_correlation: need at least 3 subjects");
  const int J = hs[0].grid.bins();
  for (const auto& h : hs) {
    if (h.kind != SummaryKind::oneD) fail_config("bin_correlation: requires oneD summaries");
    if (!(h.grid == hs[0].grid)) fail_input("bin_correlation: mismatched grids");
  }
  const int n = static_cast<int>(hs.size());
  Eigen::MatrixXd Z(n, J);
  for (int i = 0; i < n; ++i) Z.row(i) = hs[static_cast<size_t>(i)].z.transpose();
  Eigen::RowVectorXd mu = Z.colwise().mean();
  Eigen::MatrixXd C = Z.rowwise() - mu;
  Eigen::VectorXd var = (C.array().square().colwise().sum() / (n - 1)).transpose();
  BinCorrelation out;
  out.matrix = Eigen::MatrixXd::Constant(J, J, std::numeric_limits<double>::quiet_NaN());
  out.degenerate.assign(static_cast<size_t>(J), false);
  for (int j = 0; j < J; ++j) out.degenerate[static_cast<size_t>(j)] = var[j] <= 0.0;
  for (int a = 0; a < J; ++a) {
    if (out.degenerate[static_cast<size_t>(a)]) continue;
    out.matrix(a, a) = 1.0;
    for (int b = a + 1; b < J; ++b) {
      if (out.degenerate[static_cast<size_t>(b)]) continue;
      double cov = C.col(a).dot(C.col(b)) / (n - 1);
      double r = cov / std::sqrt(var[a] * var[b]);
      out.matrix(a, b) = out.matrix(b, a) = std::clamp(r, -1.0, 1.0);
    }
  }
  return out;
}

}  // namespace histreg
