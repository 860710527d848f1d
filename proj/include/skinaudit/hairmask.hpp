#pragma once

// Hair/artifact exclusion masks: opening -> black-hat -> CLAHE -> threshold.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "skinaudit/error.hpp"
#include "skinaudit/image.hpp"

namespace skinaudit::hair {

struct HairParams {
  int open_kernel = 3;
  int blackhat_kernel = 8;
  double clahe_clip = 2.0;
  int clahe_tiles_x = 8;
  int clahe_tiles_y = 8;
  int threshold = 10;

  void validate() const {
    if (open_kernel < 1 || blackhat_kernel < 1)
      throw Error(ErrorKind::InvalidArgument, "kernel sizes must be >= 1");
    if (!(clahe_clip > 0.0)) throw Error(ErrorKind::InvalidArgument, "CLAHE clip limit must be > 0");
    if (clahe_tiles_x < 1 || clahe_tiles_y < 1)
      throw Error(ErrorKind::InvalidArgument, "CLAHE tile grid must be >= 1x1");
    if (threshold < 0 || threshold > 255)
      throw Error(ErrorKind::InvalidArgument, "threshold must lie in [0, 255]");
  }
};

// ITU-R BT.601 luma, rounded.
inline GrayImage grayscale(const RgbImage& img) {
  GrayImage g(img.size());
  const auto src = img.pixels();
  auto dst = g.pixels();
  for (std::size_t i = 0; i < src.size(); ++i) {
    const double y = 0.299 * src[i][0] + 0.587 * src[i][1] + 0.114 * src[i][2];
    dst[i] = static_cast<std::uint8_t>(std::lround(y));
  }
  return g;
}

namespace detail {

// k x k rectangle anchored at k/2: offsets span [-k/2, k-1-k/2]. Erosion takes the minimum over
// p + B, dilation the maximum over p - B; samples outside the image are ignored.
template <bool Max>
void line_extremum(const std::uint8_t* in, std::uint8_t* out, int n, std::ptrdiff_t stride, int lo, int hi) {
  for (int i = 0; i < n; ++i) {
    const int a = std::max(0, i + lo);
    const int b = std::min(n - 1, i + hi);
    std::uint8_t v = Max ? 0 : 255;
    for (int j = a; j <= b; ++j) {
      const auto s = in[j * stride];
      v = Max ? std::max(v, s) : std::min(v, s);
    }
    out[i * stride] = v;
  }
}

template <bool Max>
GrayImage rect_filter(const GrayImage& src, int k) {
  const int before = k / 2;
  const int after = k - 1 - before;
  const int lo = Max ? -after : -before;
  const int hi = Max ? before : after;
  GrayImage tmp(src.size());
  GrayImage dst(src.size());
  const int w = src.width();
  const int h = src.height();
  for (int y = 0; y < h; ++y)
    line_extremum<Max>(&src.pixels()[static_cast<std::size_t>(y) * w],
                       &tmp.pixels()[static_cast<std::size_t>(y) * w], w, 1, lo, hi);
  for (int x = 0; x < w; ++x)
    line_extremum<Max>(&tmp.pixels()[static_cast<std::size_t>(x)],
                       &dst.pixels()[static_cast<std::size_t>(x)], h, w, lo, hi);
  return dst;
}

inline int reflect101(int i, int n) {
  if (n == 1) return 0;
  while (i < 0 || i >= n) {
    if (i < 0) i = -i;
    if (i >= n) i = 2 * (n - 1) - i;
  }
  return i;
}

}  // namespace detail

inline GrayImage erode(const GrayImage& src, int k) { return detail::rect_filter<false>(src, k); }
inline GrayImage dilate(const GrayImage& src, int k) { return detail::rect_filter<true>(src, k); }

inline GrayImage morph_open(const GrayImage& src, int k) { return dilate(erode(src, k), k); }
inline GrayImage morph_close(const GrayImage& src, int k) { return erode(dilate(src, k), k); }

// closing - input; highlights thin dark structures.
inline GrayImage blackhat(const GrayImage& src, int k) {
  auto closed = morph_close(src, k);
  auto out = closed.pixels();
  const auto in = src.pixels();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = out[i] > in[i] ? out[i] - in[i] : 0;
  return closed;
}

// Contrast limited adaptive histogram equalization. The image is virtually padded
// (reflect-101) to a whole number of equal tiles; per-tile lookup tables are blended bilinearly
// between tile centres.
inline GrayImage clahe(const GrayImage& src, double clip_limit, int tiles_x, int tiles_y) {
  if (!(clip_limit > 0.0)) throw Error(ErrorKind::InvalidArgument, "CLAHE clip limit must be > 0");
  if (tiles_x < 1 || tiles_y < 1) throw Error(ErrorKind::InvalidArgument, "CLAHE tile grid must be >= 1x1");
  const int w = src.width();
  const int h = src.height();
  if (w == 0 || h == 0) return src;

  constexpr int kBins = 256;
  const int tw = (w + tiles_x - 1) / tiles_x;
  const int th = (h + tiles_y - 1) / tiles_y;
  const int area = tw * th;
  const int clip = std::max(1, static_cast<int>(clip_limit * area / kBins));
  const double scale = 255.0 / area;

  std::vector<std::array<std::uint8_t, kBins>> luts(static_cast<std::size_t>(tiles_x) * tiles_y);
  for (int ty = 0; ty < tiles_y; ++ty) {
    for (int tx = 0; tx < tiles_x; ++tx) {
      std::array<int, kBins> hist{};
      for (int y = ty * th; y < (ty + 1) * th; ++y)
        for (int x = tx * tw; x < (tx + 1) * tw; ++x)
          ++hist[src(detail::reflect101(x, w), detail::reflect101(y, h))];

      int excess = 0;
      for (auto& c : hist) {
        if (c > clip) {
          excess += c - clip;
          c = clip;
        }
      }
      const int redist = excess / kBins;
      int residual = excess - redist * kBins;
      for (auto& c : hist) c += redist;
      if (residual > 0) {
        const int step = std::max(kBins / residual, 1);
        for (int i = 0; i < kBins && residual > 0; i += step, --residual) ++hist[static_cast<std::size_t>(i)];
      }

      auto& lut = luts[static_cast<std::size_t>(ty) * tiles_x + tx];
      int cdf = 0;
      for (int i = 0; i < kBins; ++i) {
        cdf += hist[static_cast<std::size_t>(i)];
        lut[static_cast<std::size_t>(i)] =
            static_cast<std::uint8_t>(std::clamp(std::lround(cdf * scale), 0L, 255L));
      }
    }
  }

  GrayImage dst(src.size());
  for (int y = 0; y < h; ++y) {
    const double tyf = (y + 0.0) / th - 0.5;
    int ty1 = static_cast<int>(std::floor(tyf));
    const double ya = tyf - ty1;
    const int ty2 = std::min(ty1 + 1, tiles_y - 1);
    ty1 = std::max(ty1, 0);
    for (int x = 0; x < w; ++x) {
      const double txf = (x + 0.0) / tw - 0.5;
      int tx1 = static_cast<int>(std::floor(txf));
      const double xa = txf - tx1;
      const int tx2 = std::min(tx1 + 1, tiles_x - 1);
      tx1 = std::max(tx1, 0);
      const auto v = src(x, y);
      auto at = [&](int tx, int ty) {
        return static_cast<double>(luts[static_cast<std::size_t>(ty) * tiles_x + tx][v]);
      };
      const double r = (at(tx1, ty1) * (1 - xa) + at(tx2, ty1) * xa) * (1 - ya) +
                       (at(tx1, ty2) * (1 - xa) + at(tx2, ty2) * xa) * ya;
      dst(x, y) = static_cast<std::uint8_t>(std::clamp(std::lround(r), 0L, 255L));
    }
  }
  return dst;
}

inline GrayImage clahe(const GrayImage& src, const HairParams& p) {
  return clahe(src, p.clahe_clip, p.clahe_tiles_x, p.clahe_tiles_y);
}

// Stage outputs, kept for debugging and tests.
struct HairStages {
  GrayImage gray;
  GrayImage opened;
  GrayImage blackhat;
  GrayImage enhanced;
};

inline HairStages hair_stages(const RgbImage& img, const HairParams& p) {
  p.validate();
  HairStages s;
  s.gray = grayscale(img);
  s.opened = morph_open(s.gray, p.open_kernel);
  s.blackhat = blackhat(s.opened, p.blackhat_kernel);
  s.enhanced = clahe(s.blackhat, p);
  return s;
}

inline BinaryMask threshold_above(const GrayImage& g, int threshold) {
  BinaryMask m(g.size());
  const auto px = g.pixels();
  for (std::size_t i = 0; i < px.size(); ++i) m.set_at(i, px[i] > threshold);
  return m;
}

// true = hair (rendered white when exported).
inline BinaryMask hair_mask(const RgbImage& img, const HairParams& p = {}) {
  return threshold_above(hair_stages(img, p).enhanced, p.threshold);
}

}  // namespace skinaudit::hair
