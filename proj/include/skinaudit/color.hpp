#pragma once

// sRGB -> CIELab (D65, 2 degree observer) and the Individual Typology Angle.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>

#include "skinaudit/image.hpp"

namespace skinaudit::color {

struct LabPixel {
  double L = 0.0;
  double a = 0.0;
  double b = 0.0;
};

// D65 reference white (Y normalized to 1).
inline constexpr double kWhiteX = 0.95047;
inline constexpr double kWhiteY = 1.0;
inline constexpr double kWhiteZ = 1.08883;

inline constexpr double kLabEpsilon = 216.0 / 24389.0;
inline constexpr double kLabKappa = 24389.0 / 27.0;

inline double srgb_decode(double c) {
  return c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4);
}

inline double srgb_encode(double c) {
  return c <= 0.0031308 ? 12.92 * c : 1.055 * std::pow(c, 1.0 / 2.4) - 0.055;
}

namespace detail {

inline const std::array<double, 256>& linear_table() {
  static const std::array<double, 256> table = [] {
    std::array<double, 256> t{};
    for (int i = 0; i < 256; ++i) t[static_cast<std::size_t>(i)] = srgb_decode(i / 255.0);
    return t;
  }();
  return table;
}

inline double lab_f(double t) {
  return t > kLabEpsilon ? std::cbrt(t) : (kLabKappa * t + 16.0) / 116.0;
}

inline double lab_f_inv(double f) {
  const double f3 = f * f * f;
  return f3 > kLabEpsilon ? f3 : (116.0 * f - 16.0) / kLabKappa;
}

}  // namespace detail

using Matrix3 = std::array<std::array<double, 3>, 3>;

// Linear sRGB -> XYZ. The Y row sums to exactly 1 so white maps to L* = 100.
inline constexpr Matrix3 kRgbToXyz = {{{0.412453, 0.357580, 0.180423},
                                       {0.212671, 0.715160, 0.072169},
                                       {0.019334, 0.119193, 0.950227}}};

namespace detail {

constexpr Matrix3 inverse(const Matrix3& m) {
  const double c00 = m[1][1] * m[2][2] - m[1][2] * m[2][1];
  const double c01 = m[1][2] * m[2][0] - m[1][0] * m[2][2];
  const double c02 = m[1][0] * m[2][1] - m[1][1] * m[2][0];
  const double det = m[0][0] * c00 + m[0][1] * c01 + m[0][2] * c02;
  return {{{c00 / det, (m[0][2] * m[2][1] - m[0][1] * m[2][2]) / det, (m[0][1] * m[1][2] - m[0][2] * m[1][1]) / det},
           {c01 / det, (m[0][0] * m[2][2] - m[0][2] * m[2][0]) / det, (m[0][2] * m[1][0] - m[0][0] * m[1][2]) / det},
           {c02 / det, (m[0][1] * m[2][0] - m[0][0] * m[2][1]) / det, (m[0][0] * m[1][1] - m[0][1] * m[1][0]) / det}}};
}

}  // namespace detail

inline constexpr Matrix3 kXyzToRgb = detail::inverse(kRgbToXyz);

inline LabPixel linear_rgb_to_lab(double r, double g, double b) {
  const auto& m = kRgbToXyz;
  const double x = m[0][0] * r + m[0][1] * g + m[0][2] * b;
  const double y = m[1][0] * r + m[1][1] * g + m[1][2] * b;
  const double z = m[2][0] * r + m[2][1] * g + m[2][2] * b;
  const double fx = detail::lab_f(x / kWhiteX);
  const double fy = detail::lab_f(y / kWhiteY);
  const double fz = detail::lab_f(z / kWhiteZ);
  return {std::clamp(116.0 * fy - 16.0, 0.0, 100.0), 500.0 * (fx - fy), 200.0 * (fy - fz)};
}

inline LabPixel srgb_to_lab(std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  const auto& lin = detail::linear_table();
  return linear_rgb_to_lab(lin[r], lin[g], lin[b]);
}

inline LabPixel srgb_to_lab(const Rgb& p) { return srgb_to_lab(p[0], p[1], p[2]); }

// Inverse transform; returns unclamped, non-gamma-quantized sRGB in [0, 1] nominal range.
inline std::array<double, 3> lab_to_srgb_unit(const LabPixel& lab) {
  const double fy = (lab.L + 16.0) / 116.0;
  const double fx = fy + lab.a / 500.0;
  const double fz = fy - lab.b / 200.0;
  const double x = detail::lab_f_inv(fx) * kWhiteX;
  const double y = (lab.L > kLabKappa * kLabEpsilon ? fy * fy * fy : lab.L / kLabKappa) * kWhiteY;
  const double z = detail::lab_f_inv(fz) * kWhiteZ;
  const auto& m = kXyzToRgb;
  const double r = m[0][0] * x + m[0][1] * y + m[0][2] * z;
  const double g = m[1][0] * x + m[1][1] * y + m[1][2] * z;
  const double bl = m[2][0] * x + m[2][1] * y + m[2][2] * z;
  return {srgb_encode(r), srgb_encode(g), srgb_encode(bl)};
}

inline bool in_gamut(const LabPixel& lab, double tol = 1e-9) {
  for (double c : lab_to_srgb_unit(lab))
    if (!(c >= -tol && c <= 1.0 + tol)) return false;
  return true;
}

inline Rgb lab_to_srgb(const LabPixel& lab) {
  Rgb out{};
  const auto unit = lab_to_srgb_unit(lab);
  for (std::size_t c = 0; c < 3; ++c)
    out[c] = static_cast<std::uint8_t>(std::lround(std::clamp(unit[c], 0.0, 1.0) * 255.0));
  return out;
}

// |b*| below this is treated as achromatic on the blue-yellow axis. Covers 8-bit neutrals
// (|b*| < 0.005 for every gray, white included) and keeps every defined angle strictly
// inside (-90, 90).
inline constexpr double kAchromaticB = 0.01;

// arctan((L* - 50) / b*) in degrees, principal branch. Undefined for b* ~ 0.
inline std::optional<double> ita_pixel(const LabPixel& p) {
  if (!(std::abs(p.b) >= kAchromaticB)) return std::nullopt;
  return std::atan((p.L - 50.0) / p.b) * 180.0 / std::numbers::pi;
}

inline std::optional<double> ita_pixel(double L, double b) { return ita_pixel(LabPixel{L, 0.0, b}); }

// L* that yields the requested angle at a fixed b*.
inline double lightness_for_ita(double ita_degrees, double b) {
  return 50.0 + b * std::tan(ita_degrees * std::numbers::pi / 180.0);
}

struct ItaMap {
  Image<double> ita;  // degrees; meaningless where !valid
  BinaryMask valid;

  int width() const noexcept { return ita.width(); }
  int height() const noexcept { return ita.height(); }
  Size size() const noexcept { return ita.size(); }
  std::size_t valid_count() const noexcept { return valid.count(); }
};

// Pixels under `exclude` (hair) or with undefined ITA are marked invalid.
inline ItaMap ita_map(const RgbImage& img, const BinaryMask& exclude) {
  require_same_size(img.size(), exclude.size(), "ita_map hair mask");
  ItaMap out{Image<double>(img.size(), 0.0), BinaryMask(img.size())};
  const auto px = img.pixels();
  auto angles = out.ita.pixels();
  for (std::size_t i = 0; i < px.size(); ++i) {
    if (exclude.at(i)) continue;
    if (auto a = ita_pixel(srgb_to_lab(px[i]))) {
      angles[i] = *a;
      out.valid.set_at(i, true);
    }
  }
  return out;
}

inline ItaMap ita_map(const RgbImage& img) { return ita_map(img, BinaryMask(img.size())); }

}  // namespace skinaudit::color
