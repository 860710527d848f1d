#pragma once

// Synthetic skin/lesion fixtures with controlled ITA contrast, and a deliberately
// contrast-sensitive reference segmenter.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "skinaudit/color.hpp"
#include "skinaudit/error.hpp"
#include "skinaudit/image.hpp"
#include "skinaudit/random.hpp"

namespace skinaudit::synth {

// Fixed chroma used to invert the ITA relation: L* = 50 + b* tan(ITA).
inline constexpr double kFixtureB = 15.0;
inline constexpr double kFixtureA = 12.0;
// At b* = 15, a* = 12 the sRGB gamut ends near +-68 degrees; fixture colours are clamped inside it.
inline constexpr double kMaxAbsIta = 65.0;

struct SynthSpec {
  int count = 1;
  int size = 224;
  double skin_ita_mean = 40.0;
  double lesion_ita_mean = 10.0;
  double ita_noise_sd = 0.0;
  double lesion_radius_frac = 0.25;
  int hair_strokes = 0;
  std::uint64_t seed = 0;

  void validate() const {
    auto bad = [](const std::string& m) { throw Error(ErrorKind::InvalidArgument, "synth spec: " + m); };
    if (count < 1) bad("count must be >= 1");
    if (size < 2) bad("size must be >= 2");
    if (!(skin_ita_mean > -90.0 && skin_ita_mean < 90.0)) bad("skin_ita_mean must lie in (-90, 90)");
    if (!(lesion_ita_mean > -90.0 && lesion_ita_mean < 90.0)) bad("lesion_ita_mean must lie in (-90, 90)");
    if (!(ita_noise_sd >= 0.0)) bad("ita_noise_sd must be >= 0");
    if (!(lesion_radius_frac > 0.0 && lesion_radius_frac <= 0.5)) bad("lesion_radius_frac must lie in (0, 0.5]");
    if (hair_strokes < 0) bad("hair_strokes must be >= 0");
  }
};

inline void from_json(const nlohmann::json& j, SynthSpec& s) {
  SynthSpec d;
  s.count = j.value("count", d.count);
  s.size = j.value("size", d.size);
  s.skin_ita_mean = j.value("skin_ita_mean", d.skin_ita_mean);
  s.lesion_ita_mean = j.value("lesion_ita_mean", d.lesion_ita_mean);
  s.ita_noise_sd = j.value("ita_noise_sd", d.ita_noise_sd);
  s.lesion_radius_frac = j.value("lesion_radius_frac", d.lesion_radius_frac);
  s.hair_strokes = j.value("hair_strokes", d.hair_strokes);
  s.seed = j.value("seed", d.seed);
}

inline void to_json(nlohmann::json& j, const SynthSpec& s) {
  j = {{"count", s.count},
       {"size", s.size},
       {"skin_ita_mean", s.skin_ita_mean},
       {"lesion_ita_mean", s.lesion_ita_mean},
       {"ita_noise_sd", s.ita_noise_sd},
       {"lesion_radius_frac", s.lesion_radius_frac},
       {"hair_strokes", s.hair_strokes},
       {"seed", s.seed}};
}

struct SynthImage {
  RgbImage image;
  BinaryMask gt;
  BinaryMask strokes;  // pixels painted as hair
  double skin_ita = 0.0;
  double lesion_ita = 0.0;
  double contrast() const { return skin_ita - lesion_ita; }
};

inline Rgb color_for_ita(double ita) {
  const double clamped = std::clamp(ita, -kMaxAbsIta, kMaxAbsIta);
  const double L = std::clamp(color::lightness_for_ita(clamped, kFixtureB), 0.0, 100.0);
  return color::lab_to_srgb({L, kFixtureA, kFixtureB});
}

inline constexpr Rgb kHairColor = {38, 28, 22};

namespace detail {

inline double segment_distance(double px, double py, double ax, double ay, double bx, double by) {
  const double dx = bx - ax, dy = by - ay;
  const double len2 = dx * dx + dy * dy;
  double t = len2 > 0 ? ((px - ax) * dx + (py - ay) * dy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  const double ex = ax + t * dx - px, ey = ay + t * dy - py;
  return std::sqrt(ex * ex + ey * ey);
}

}  // namespace detail

// Strokes are 3 px wide segments, long enough to cross a good part of the image.
inline void paint_hair(RgbImage& img, BinaryMask& strokes, int n, rng::Engine& e) {
  const double s = img.width();
  for (int k = 0; k < n; ++k) {
    const double ax = rng::uniform(e, 0, s), ay = rng::uniform(e, 0, img.height());
    const double angle = rng::uniform(e, 0, 2 * std::numbers::pi);
    const double len = rng::uniform(e, 0.3 * s, 0.7 * s);
    const double bx = ax + len * std::cos(angle), by = ay + len * std::sin(angle);
    for (int y = 0; y < img.height(); ++y)
      for (int x = 0; x < img.width(); ++x)
        if (detail::segment_distance(x, y, ax, ay, bx, by) <= 1.0) {
          img(x, y) = kHairColor;
          strokes.set(x, y, true);
        }
  }
}

// Image i of the batch draws from rng::substream(spec.seed, i).
inline SynthImage generate_one(const SynthSpec& spec, int index) {
  auto e = rng::substream(spec.seed, static_cast<std::uint64_t>(index));
  const int s = spec.size;
  SynthImage out{RgbImage(s, s), BinaryMask(s, s), BinaryMask(s, s), spec.skin_ita_mean, spec.lesion_ita_mean};
  const double r = spec.lesion_radius_frac * s;
  const double cx = rng::uniform(e, r, s - r);
  const double cy = rng::uniform(e, r, s - r);
  for (int y = 0; y < s; ++y) {
    for (int x = 0; x < s; ++x) {
      const double dx = x + 0.5 - cx, dy = y + 0.5 - cy;
      const bool lesion = dx * dx + dy * dy <= r * r;
      out.gt.set(x, y, lesion);
      double ita = lesion ? spec.lesion_ita_mean : spec.skin_ita_mean;
      if (spec.ita_noise_sd > 0) ita += rng::normal(e) * spec.ita_noise_sd;
      out.image(x, y) = color_for_ita(ita);
    }
  }
  paint_hair(out.image, out.strokes, spec.hair_strokes, e);
  return out;
}

inline std::vector<SynthImage> generate(const SynthSpec& spec) {
  spec.validate();
  std::vector<SynthImage> out;
  out.reserve(static_cast<std::size_t>(spec.count));
  for (int i = 0; i < spec.count; ++i) out.push_back(generate_one(spec, i));
  return out;
}

// Otsu's threshold over a 256-bin histogram of `values` spanning [lo, hi]. Returns the bin
// boundary value; values below it form the darker class.
inline double otsu_threshold(std::span<const double> values, double lo, double hi) {
  constexpr int kBins = 256;
  if (!(hi > lo)) return lo;
  std::array<double, kBins> hist{};
  const double width = (hi - lo) / kBins;
  for (double v : values) {
    const int b = std::clamp(static_cast<int>((v - lo) / width), 0, kBins - 1);
    hist[static_cast<std::size_t>(b)] += 1;
  }
  const double total = static_cast<double>(values.size());
  double sum_all = 0;
  for (int i = 0; i < kBins; ++i) sum_all += i * hist[static_cast<std::size_t>(i)];
  double w0 = 0, sum0 = 0, best = -1;
  int best_bin = 0;
  for (int i = 0; i < kBins; ++i) {
    w0 += hist[static_cast<std::size_t>(i)];
    sum0 += i * hist[static_cast<std::size_t>(i)];
    const double w1 = total - w0;
    if (w0 == 0 || w1 == 0) continue;
    const double m0 = sum0 / w0, m1 = (sum_all - sum0) / w1;
    const double between = w0 * w1 * (m0 - m1) * (m0 - m1);
    if (between > best) {
      best = between;
      best_bin = i;
    }
  }
  return lo + (best_bin + 1) * width;
}

// Otsu on L* (plus optional seeded Gaussian noise); the darker class is the lesion.
inline BinaryMask reference_segmenter(const RgbImage& img, double noise_sd = 0.0, std::uint64_t seed = 0) {
  std::vector<double> lightness(img.pixel_count());
  auto e = rng::substream(seed, 0x5345474DULL);
  for (std::size_t i = 0; i < lightness.size(); ++i) {
    lightness[i] = color::srgb_to_lab(img.pixels()[i]).L;
    if (noise_sd > 0) lightness[i] += rng::normal(e) * noise_sd;
  }
  BinaryMask out(img.size());
  if (lightness.empty()) return out;
  const auto [mn, mx] = std::minmax_element(lightness.begin(), lightness.end());
  if (!(*mx > *mn)) return out;
  const double t = otsu_threshold(lightness, *mn, *mx);
  for (std::size_t i = 0; i < lightness.size(); ++i) out.set_at(i, lightness[i] < t);
  return out;
}

}  // namespace skinaudit::synth
