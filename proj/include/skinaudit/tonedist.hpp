#pragma once

// ITA pixel distributions per region and signed 1-D Wasserstein comparisons between them.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "skinaudit/color.hpp"
#include "skinaudit/error.hpp"
#include "skinaudit/image.hpp"

namespace skinaudit::tone {

enum class Region { WholeImage, SkinOnly, LesionOnly };

inline const char* to_string(Region r) {
  switch (r) {
    case Region::WholeImage: return "whole";
    case Region::SkinOnly: return "skin";
    case Region::LesionOnly: return "lesion";
  }
  return "?";
}

// Multiset of ITA angles, stored sorted ascending.
class PixelSample {
 public:
  PixelSample() = default;
  PixelSample(std::vector<double> values, Region region) : values_(std::move(values)), region_(region) {
    std::sort(values_.begin(), values_.end());
  }

  const std::vector<double>& sorted_values() const noexcept { return values_; }
  Region region() const noexcept { return region_; }
  std::size_t n() const noexcept { return values_.size(); }
  bool empty() const noexcept { return values_.empty(); }

 private:
  std::vector<double> values_;
  Region region_ = Region::WholeImage;
};

struct ReferenceDistribution {
  enum class Kind { PointMass, Uniform };
  Kind kind = Kind::PointMass;
  double anchor = -30.0;
  double upper = 90.0;  // Uniform only

  static ReferenceDistribution point_mass(double at = -30.0) { return {Kind::PointMass, at, 90.0}; }
  static ReferenceDistribution uniform(double lo = -30.0, double hi = 90.0) { return {Kind::Uniform, lo, hi}; }

  void validate() const {
    if (!(anchor >= -90.0 && anchor <= 90.0))
      throw Error(ErrorKind::InvalidArgument, "reference anchor must lie in [-90, 90]");
    if (kind == Kind::Uniform && !(anchor <= upper && upper <= 90.0))
      throw Error(ErrorKind::InvalidArgument, "uniform reference needs anchor <= upper <= 90");
  }

  double median() const { return kind == Kind::PointMass ? anchor : 0.5 * (anchor + upper); }
};

inline std::string to_string(const ReferenceDistribution& r) {
  return r.kind == ReferenceDistribution::Kind::PointMass ? "point" : "uniform";
}

struct RegionSamples {
  PixelSample whole;
  PixelSample skin;
  PixelSample lesion;
};

// whole = valid pixels; skin = valid and outside the lesion; lesion = valid and inside.
inline RegionSamples region_samples(const color::ItaMap& ita, const BinaryMask& lesion) {
  require_same_size(ita.size(), lesion.size(), "region_samples lesion mask");
  std::vector<double> whole, skin, les;
  const auto angles = ita.ita.pixels();
  for (std::size_t i = 0; i < angles.size(); ++i) {
    if (!ita.valid.at(i)) continue;
    whole.push_back(angles[i]);
    (lesion.at(i) ? les : skin).push_back(angles[i]);
  }
  return {PixelSample(std::move(whole), Region::WholeImage), PixelSample(std::move(skin), Region::SkinOnly),
          PixelSample(std::move(les), Region::LesionOnly)};
}

// Smallest x with F(x) >= 0.5.
inline double lower_median(const PixelSample& s) {
  if (s.empty()) throw Error(ErrorKind::EmptySample, "median of empty sample");
  const auto n = s.n();
  return s.sorted_values()[(n + 1) / 2 - 1];
}

// Integral of |F_a - F_b| over the real line, evaluated as the L1 distance between quantile
// functions on the merged grid of probability breakpoints {i/n} and {j/m}.
inline double w1_distance(const PixelSample& a, const PixelSample& b) {
  if (a.empty() || b.empty()) throw Error(ErrorKind::EmptySample, "w1 of empty sample");
  const auto& x = a.sorted_values();
  const auto& y = b.sorted_values();
  const auto n = x.size();
  const auto m = y.size();
  std::size_t i = 0, j = 0;
  double t = 0.0;
  double area = 0.0;
  while (i < n && j < m) {
    // Compare (i+1)/n with (j+1)/m exactly in integers.
    const auto lhs = (i + 1) * m;
    const auto rhs = (j + 1) * n;
    const double next = lhs <= rhs ? static_cast<double>(i + 1) / n : static_cast<double>(j + 1) / m;
    area += (next - t) * std::abs(x[i] - y[j]);
    t = next;
    if (lhs <= rhs) ++i;
    if (rhs <= lhs) ++j;
  }
  return area;
}

inline double w1_distance(const ReferenceDistribution& ref, const PixelSample& s) {
  if (s.empty()) throw Error(ErrorKind::EmptySample, "w1 of empty sample");
  const auto& x = s.sorted_values();
  const double n = static_cast<double>(x.size());
  const double width = ref.kind == ReferenceDistribution::Kind::Uniform ? ref.upper - ref.anchor : 0.0;
  if (width == 0.0) {
    double sum = 0.0;
    for (double v : x) sum += std::abs(v - ref.anchor);
    return sum / n;
  }
  // Reference quantile q(t) = anchor + t * width; on [k/n, (k+1)/n] the sample quantile is x_k.
  double area = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double c = x[k];
    const double q0 = ref.anchor + width * (static_cast<double>(k) / n);
    const double q1 = ref.anchor + width * (static_cast<double>(k + 1) / n);
    if (c <= q0) {
      area += (0.5 * (q0 + q1) - c) / n;
    } else if (c >= q1) {
      area += (c - 0.5 * (q0 + q1)) / n;
    } else {
      area += ((c - q0) * (c - q0) + (q1 - c) * (q1 - c)) / (2.0 * width);
    }
  }
  return area;
}

// Direction convention: -1 when median(left) >= median(right), +1 otherwise. Zero distances
// are returned as +0.
inline double apply_sign(double left_median, double right_median, double magnitude) {
  if (magnitude == 0.0) return 0.0;
  return left_median >= right_median ? -magnitude : magnitude;
}

inline double signed_w1(const PixelSample& left, const PixelSample& right) {
  if (left.empty() || right.empty()) throw Error(ErrorKind::EmptySample, "signed_w1 operand is empty");
  return apply_sign(lower_median(left), lower_median(right), w1_distance(left, right));
}

inline double signed_w1(const ReferenceDistribution& ref, const PixelSample& right) {
  if (right.empty()) throw Error(ErrorKind::EmptySample, "signed_w1 operand is empty");
  return apply_sign(ref.median(), lower_median(right), w1_distance(ref, right));
}

enum class Pattern : std::uint8_t { P1 = 1, P2, P3, P4, P5, P6 };

inline constexpr std::array<Pattern, 6> kAllPatterns = {Pattern::P1, Pattern::P2, Pattern::P3,
                                                        Pattern::P4, Pattern::P5, Pattern::P6};

inline std::string to_string(Pattern p) { return "p" + std::to_string(static_cast<int>(p)); }

struct PatternDistance {
  Pattern pattern = Pattern::P1;
  std::optional<double> value;  // missing when an operand sample is empty
  std::size_t n_left = 0;       // 0 for the reference operand
  std::size_t n_right = 0;
};

// P1-P3: reference vs whole/skin/lesion. P4: whole vs skin, P5: whole vs lesion, P6: skin vs lesion.
inline std::array<PatternDistance, 6> six_patterns(const RegionSamples& s, const ReferenceDistribution& ref) {
  ref.validate();
  std::array<PatternDistance, 6> out{};
  auto from_ref = [&](Pattern p, const PixelSample& right) {
    PatternDistance d{p, std::nullopt, 0, right.n()};
    if (!right.empty()) d.value = signed_w1(ref, right);
    return d;
  };
  auto pair = [&](Pattern p, const PixelSample& left, const PixelSample& right) {
    PatternDistance d{p, std::nullopt, left.n(), right.n()};
    if (!left.empty() && !right.empty()) d.value = signed_w1(left, right);
    return d;
  };
  out[0] = from_ref(Pattern::P1, s.whole);
  out[1] = from_ref(Pattern::P2, s.skin);
  out[2] = from_ref(Pattern::P3, s.lesion);
  out[3] = pair(Pattern::P4, s.whole, s.skin);
  out[4] = pair(Pattern::P5, s.whole, s.lesion);
  out[5] = pair(Pattern::P6, s.skin, s.lesion);
  return out;
}

inline double mean_ita(const PixelSample& s) {
  if (s.empty()) throw Error(ErrorKind::EmptySample, "mean of empty sample");
  const auto& v = s.sorted_values();
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

enum class Fitzpatrick : std::uint8_t { I = 1, II, III, IV, V, VI };

inline int ordinal(Fitzpatrick f) { return static_cast<int>(f); }

inline const char* to_string(Fitzpatrick f) {
  static constexpr const char* names[] = {"I", "II", "III", "IV", "V", "VI"};
  return names[ordinal(f) - 1];
}

// Six-bin ITA skin-type convention: >55 I, (41,55] II, (28,41] III, (10,28] IV, (-30,10] V, <=-30 VI.
inline Fitzpatrick fitzpatrick_of_ita(double mean) {
  if (mean > 55.0) return Fitzpatrick::I;
  if (mean > 41.0) return Fitzpatrick::II;
  if (mean > 28.0) return Fitzpatrick::III;
  if (mean > 10.0) return Fitzpatrick::IV;
  if (mean > -30.0) return Fitzpatrick::V;
  return Fitzpatrick::VI;
}

struct ToneFlags {
  bool whole_empty = false;
  bool skin_empty = false;
  bool lesion_empty = false;
};

struct ToneSummary {
  std::optional<double> mean_ita;
  std::optional<Fitzpatrick> fitzpatrick;
  std::array<PatternDistance, 6> patterns{};
  ToneFlags flags;
};

inline ToneSummary summarize(const RegionSamples& s, const ReferenceDistribution& ref) {
  ToneSummary t;
  t.flags = {s.whole.empty(), s.skin.empty(), s.lesion.empty()};
  if (!s.whole.empty()) {
    t.mean_ita = mean_ita(s.whole);
    t.fitzpatrick = fitzpatrick_of_ita(*t.mean_ita);
  }
  t.patterns = six_patterns(s, ref);
  return t;
}

}  // namespace skinaudit::tone
