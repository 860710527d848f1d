#pragma once

// Confusion counts and the nine pixel-level segmentation scores.

#include <algorithm>
#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "skinaudit/error.hpp"
#include "skinaudit/image.hpp"

namespace skinaudit::seg {

struct ConfusionCounts {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t tn = 0;
  std::uint64_t fn = 0;

  std::uint64_t total() const noexcept { return tp + fp + tn + fn; }
  friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

// Lesion is the positive class.
inline ConfusionCounts confusion(const BinaryMask& gt, const BinaryMask& pred) {
  require_same_size(gt.size(), pred.size(), "confusion");
  ConfusionCounts c;
  for (std::size_t i = 0; i < gt.pixel_count(); ++i) {
    const bool g = gt.at(i);
    const bool p = pred.at(i);
    if (g && p) ++c.tp;
    else if (!g && p) ++c.fp;
    else if (!g && !p) ++c.tn;
    else ++c.fn;
  }
  return c;
}

enum class Metric : std::uint8_t { IoU, DC, ST, SP, PA, AUC, CK, FPR, FNR };

inline constexpr std::array<Metric, 9> kAllMetrics = {Metric::IoU, Metric::DC, Metric::ST,
                                                      Metric::SP,  Metric::PA, Metric::AUC,
                                                      Metric::CK,  Metric::FPR, Metric::FNR};

inline const char* to_string(Metric m) {
  static constexpr const char* names[] = {"iou", "dc", "st", "sp", "pa", "auc", "ck", "fpr", "fnr"};
  return names[static_cast<int>(m)];
}

// Undefined (zero-denominator) scores are missing.
struct MetricVector {
  std::optional<double> iou, dc, st, sp, pa, auc, ck, fpr, fnr;

  const std::optional<double>& get(Metric m) const {
    switch (m) {
      case Metric::IoU: return iou;
      case Metric::DC: return dc;
      case Metric::ST: return st;
      case Metric::SP: return sp;
      case Metric::PA: return pa;
      case Metric::AUC: return auc;
      case Metric::CK: return ck;
      case Metric::FPR: return fpr;
      case Metric::FNR: return fnr;
    }
    return iou;
  }

  std::vector<Metric> degenerate() const {
    std::vector<Metric> out;
    for (auto m : kAllMetrics)
      if (!get(m)) out.push_back(m);
    return out;
  }
};

namespace detail {
inline std::optional<double> ratio(double num, double den) {
  if (den == 0.0) return std::nullopt;
  return num / den;
}
}  // namespace detail

// AUC on hard masks is balanced accuracy (st + sp) / 2.
inline MetricVector metrics(const ConfusionCounts& c) {
  const double tp = static_cast<double>(c.tp);
  const double fp = static_cast<double>(c.fp);
  const double tn = static_cast<double>(c.tn);
  const double fn = static_cast<double>(c.fn);
  const double total = tp + fp + tn + fn;
  MetricVector m;
  if (total == 0.0) return m;
  m.iou = detail::ratio(tp, tp + fp + fn);
  m.dc = detail::ratio(2 * tp, 2 * tp + fp + fn);
  m.st = detail::ratio(tp, tp + fn);
  m.sp = detail::ratio(tn, tn + fp);
  m.pa = (tp + tn) / total;
  m.fpr = detail::ratio(fp, fp + tn);
  m.fnr = detail::ratio(fn, fn + tp);
  if (m.st && m.sp) m.auc = 0.5 * (*m.st + *m.sp);
  const double po = (tp + tn) / total;
  const double pe = ((tp + fp) * (tp + fn) + (fn + tn) * (fp + tn)) / (total * total);
  if (pe != 1.0) m.ck = (po - pe) / (1.0 - pe);
  return m;
}

inline MetricVector metrics(const BinaryMask& gt, const BinaryMask& pred) { return metrics(confusion(gt, pred)); }

// Threshold-swept ROC AUC for soft predictions (trapezoid rule, tied scores share one step).
// Missing when gt has only one class.
inline std::optional<double> roc_auc(const BinaryMask& gt, std::span<const double> scores) {
  if (scores.size() != gt.pixel_count())
    throw Error(ErrorKind::DimensionMismatch, "roc_auc score count differs from mask size");
  std::vector<std::size_t> order(scores.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  double pos = 0, neg = 0;
  for (std::size_t i = 0; i < gt.pixel_count(); ++i) (gt.at(i) ? pos : neg) += 1;
  if (pos == 0 || neg == 0) return std::nullopt;

  double area = 0.0, tpr_prev = 0.0, fpr_prev = 0.0, tp = 0.0, fp = 0.0;
  for (std::size_t k = 0; k < order.size();) {
    const double s = scores[order[k]];
    while (k < order.size() && scores[order[k]] == s) {
      (gt.at(order[k]) ? tp : fp) += 1;
      ++k;
    }
    const double tpr = tp / pos;
    const double fpr = fp / neg;
    area += (fpr - fpr_prev) * (tpr + tpr_prev) * 0.5;
    tpr_prev = tpr;
    fpr_prev = fpr;
  }
  return area;
}

}  // namespace skinaudit::seg
