#pragma once

// Spearman rank correlation, percentile bootstrap intervals, p-values and stratification.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

#include "skinaudit/error.hpp"
#include "skinaudit/parallel.hpp"
#include "skinaudit/random.hpp"

namespace skinaudit::stats {

struct PairedSeries {
  std::vector<double> x;
  std::vector<double> y;
  std::vector<std::string> ids;

  std::size_t n() const noexcept { return x.size(); }

  void push(std::string id, double xv, double yv) {
    ids.push_back(std::move(id));
    x.push_back(xv);
    y.push_back(yv);
  }
};

// Pairwise deletion: a pair is kept only when both values are present.
inline PairedSeries make_paired(std::span<const std::string> ids, std::span<const std::optional<double>> x,
                                std::span<const std::optional<double>> y) {
  if (ids.size() != x.size() || x.size() != y.size())
    throw Error(ErrorKind::InvalidArgument, "paired series length mismatch");
  PairedSeries s;
  for (std::size_t i = 0; i < ids.size(); ++i)
    if (x[i] && y[i]) s.push(ids[i], *x[i], *y[i]);
  return s;
}

// 1-based ranks; ties receive the mean of the ranks they span.
inline std::vector<double> average_ranks(std::span<const double> v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i + 1;
    while (j < order.size() && v[order[j]] == v[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + 1 + j);  // mean of i+1 .. j
    for (std::size_t k = i; k < j; ++k) ranks[order[k]] = r;
    i = j;
  }
  return ranks;
}

namespace detail {

inline std::optional<double> pearson(std::span<const double> a, std::span<const double> b) {
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = a[i] - ma;
    const double db = b[i] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (saa == 0.0 || sbb == 0.0) return std::nullopt;
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

inline bool is_constant(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [&](double e) { return e == v.front(); });
}

// No size check; missing when either side is constant.
inline std::optional<double> rank_correlation(std::span<const double> x, std::span<const double> y) {
  if (x.empty() || is_constant(x) || is_constant(y)) return std::nullopt;
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  return pearson(rx, ry);
}

// Type-7 (linear interpolation) quantile of sorted data.
inline double quantile_sorted(std::span<const double> sorted, double p) {
  const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

}  // namespace detail

inline double spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw Error(ErrorKind::InvalidArgument, "spearman length mismatch");
  if (x.size() < 3) throw Error(ErrorKind::InsufficientData, "spearman needs n >= 3, got " + std::to_string(x.size()));
  auto rho = detail::rank_correlation(x, y);
  if (!rho) throw Error(ErrorKind::ConstantSeries, "spearman undefined for a constant series");
  return *rho;
}

inline double spearman(const PairedSeries& s) { return spearman(s.x, s.y); }

enum class PValueMethod { TApprox, Permutation };

inline const char* to_string(PValueMethod m) { return m == PValueMethod::TApprox ? "t" : "perm"; }

struct PValueOptions {
  PValueMethod method = PValueMethod::TApprox;
  std::uint64_t seed = 0;
  std::size_t permutations = 9999;  // Monte Carlo draws when n exceeds kExactPermutationMax
};

inline constexpr std::size_t kExactPermutationMax = 8;

// Two-sided. t_approx: t = rho sqrt((n-2)/(1-rho^2)) on n-2 degrees of freedom.
inline double p_value_t(double rho, std::size_t n) {
  if (n < 3) throw Error(ErrorKind::InsufficientData, "t approximation needs n >= 3");
  if (std::abs(rho) >= 1.0) return 0.0;
  const double dof = static_cast<double>(n - 2);
  const double t = rho * std::sqrt(dof / ((1.0 - rho) * (1.0 + rho)));
  boost::math::students_t_distribution<double> dist(dof);
  return std::clamp(2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t))), 0.0, 1.0);
}

// Ties in |rho| are resolved with this slack so that numerically equal statistics count as extreme.
inline constexpr double kPermutationTieSlack = 1e-12;

// Permutation test on y. Exact enumeration of all n! orderings for n <= kExactPermutationMax,
// otherwise seeded Monte Carlo with +1 smoothing.
inline double p_value_permutation(const PairedSeries& s, const PValueOptions& opt) {
  if (s.n() < 2) throw Error(ErrorKind::InsufficientData, "permutation test needs n >= 2");
  const auto observed = detail::rank_correlation(s.x, s.y);
  if (!observed) throw Error(ErrorKind::ConstantSeries, "permutation test undefined for a constant series");
  const double threshold = std::abs(*observed) - kPermutationTieSlack;
  std::vector<double> y = s.y;

  if (s.n() <= kExactPermutationMax) {
    std::vector<std::size_t> idx(s.n());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::uint64_t total = 0, extreme = 0;
    do {
      for (std::size_t i = 0; i < idx.size(); ++i) y[i] = s.y[idx[i]];
      ++total;
      if (std::abs(*detail::rank_correlation(s.x, y)) >= threshold) ++extreme;
    } while (std::next_permutation(idx.begin(), idx.end()));
    return static_cast<double>(extreme) / static_cast<double>(total);
  }

  auto engine = rng::substream(opt.seed, 0x5045524DULL);
  std::uint64_t extreme = 0;
  for (std::size_t b = 0; b < opt.permutations; ++b) {
    rng::shuffle(engine, y);
    if (std::abs(*detail::rank_correlation(s.x, y)) >= threshold) ++extreme;
  }
  return static_cast<double>(extreme + 1) / static_cast<double>(opt.permutations + 1);
}

inline double p_value(const PairedSeries& s, const PValueOptions& opt = {}) {
  if (opt.method == PValueMethod::TApprox) return p_value_t(spearman(s), s.n());
  return p_value_permutation(s, opt);
}

struct BootstrapOptions {
  std::size_t resamples = 1000;
  double level = 0.95;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  PValueOptions pvalue{};
};

struct CorrelationEstimate {
  double rho = 0.0;
  std::optional<double> ci_low;  // missing when every resample was degenerate
  std::optional<double> ci_high;
  double p_value = 1.0;
  std::size_t n = 0;
  std::size_t resamples = 0;
  std::size_t valid_resamples = 0;
  double ci_level = 0.95;
};

// Resample i draws from rng::substream(seed, i) regardless of the worker running it, so serial
// and parallel runs agree bit for bit. Resamples with a constant side are skipped.
inline std::vector<double> bootstrap_distribution(const PairedSeries& s, std::size_t resamples, std::uint64_t seed,
                                                  unsigned threads = 1) {
  const std::size_t n = s.n();
  std::vector<std::optional<double>> draws(resamples);
  parallel_for(resamples, threads, [&](std::size_t r) {
    auto engine = rng::substream(seed, r);
    std::vector<double> bx(n), by(n);
    for (std::size_t i = 0; i < n; ++i) {
      const auto k = static_cast<std::size_t>(rng::uniform_index(engine, n));
      bx[i] = s.x[k];
      by[i] = s.y[k];
    }
    draws[r] = detail::rank_correlation(bx, by);
  });
  std::vector<double> out;
  out.reserve(resamples);
  for (const auto& d : draws)
    if (d) out.push_back(*d);
  return out;
}

inline CorrelationEstimate bootstrap_ci(const PairedSeries& s, const BootstrapOptions& opt = {}) {
  if (!(opt.level > 0.0 && opt.level < 1.0)) throw Error(ErrorKind::InvalidArgument, "CI level must lie in (0, 1)");
  if (opt.resamples < 1) throw Error(ErrorKind::InvalidArgument, "need at least one bootstrap resample");
  CorrelationEstimate est;
  est.rho = spearman(s);
  est.n = s.n();
  est.resamples = opt.resamples;
  est.ci_level = opt.level;
  est.p_value = p_value(s, opt.pvalue);

  auto dist = bootstrap_distribution(s, opt.resamples, opt.seed, opt.threads);
  est.valid_resamples = dist.size();
  if (!dist.empty()) {
    std::sort(dist.begin(), dist.end());
    const double alpha = 1.0 - opt.level;
    est.ci_low = detail::quantile_sorted(dist, alpha / 2.0);
    est.ci_high = detail::quantile_sorted(dist, 1.0 - alpha / 2.0);
  }
  return est;
}

inline CorrelationEstimate bootstrap_ci(const PairedSeries& s, std::size_t resamples, double level,
                                        std::uint64_t seed) {
  BootstrapOptions opt;
  opt.resamples = resamples;
  opt.level = level;
  opt.seed = seed;
  return bootstrap_ci(s, opt);
}

enum class StratifyBy { DiseaseClass, Fitzpatrick };

inline const char* to_string(StratifyBy b) { return b == StratifyBy::DiseaseClass ? "class" : "fitzpatrick"; }

inline constexpr std::size_t kLowPowerMinN = 10;
inline constexpr const char* kUnlabeledStratum = "unlabeled";

struct Stratum {
  std::vector<std::size_t> rows;  // indices into the input
  bool low_power = false;
};

// Partitions row indices by label; rows without a label land in kUnlabeledStratum.
template <typename Row, typename LabelFn>
std::map<std::string, Stratum> stratify(std::span<const Row> rows, LabelFn label,
                                        std::size_t min_n = kLowPowerMinN) {
  std::map<std::string, Stratum> out;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::optional<std::string> key = label(rows[i]);
    out[key ? *key : std::string(kUnlabeledStratum)].rows.push_back(i);
  }
  for (auto& [_, s] : out) s.low_power = s.rows.size() < min_n;
  return out;
}

}  // namespace skinaudit::stats
