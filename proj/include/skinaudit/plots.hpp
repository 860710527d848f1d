#pragma once

// Static SVG charts: tone-measure box plots by class, correlation range bands and |rho| heatmaps.
// Output depends only on the inputs (no timestamps), so reruns are byte-identical.

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "skinaudit/audit_types.hpp"
#include "skinaudit/error.hpp"

namespace skinaudit::report {

namespace svg {

inline std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

inline std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

class Document {
 public:
  Document(double width, double height, const std::string& provenance) {
    os_ << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
        << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(width) << "\" height=\"" << num(height)
        << "\" viewBox=\"0 0 " << num(width) << ' ' << num(height) << "\" font-family=\"sans-serif\">\n"
        << "<!-- " << provenance << " -->\n"
        << "<rect x=\"0\" y=\"0\" width=\"" << num(width) << "\" height=\"" << num(height) << "\" fill=\"white\"/>\n";
  }

  void rect(double x, double y, double w, double h, const std::string& fill, const std::string& extra = {}) {
    os_ << "<rect x=\"" << num(x) << "\" y=\"" << num(y) << "\" width=\"" << num(w) << "\" height=\"" << num(h)
        << "\" fill=\"" << fill << "\"" << (extra.empty() ? "" : " " + extra) << "/>\n";
  }

  void line(double x1, double y1, double x2, double y2, const std::string& stroke, double width = 1.0) {
    os_ << "<line x1=\"" << num(x1) << "\" y1=\"" << num(y1) << "\" x2=\"" << num(x2) << "\" y2=\"" << num(y2)
        << "\" stroke=\"" << stroke << "\" stroke-width=\"" << num(width) << "\"/>\n";
  }

  void circle(double cx, double cy, double r, const std::string& fill) {
    os_ << "<circle cx=\"" << num(cx) << "\" cy=\"" << num(cy) << "\" r=\"" << num(r) << "\" fill=\"" << fill
        << "\"/>\n";
  }

  void text(double x, double y, const std::string& s, double size = 11, const std::string& anchor = "middle") {
    os_ << "<text x=\"" << num(x) << "\" y=\"" << num(y) << "\" font-size=\"" << num(size) << "\" text-anchor=\""
        << anchor << "\">" << escape(s) << "</text>\n";
  }

  void comment(const std::string& s) { os_ << "<!-- " << s << " -->\n"; }

  void hatch_pattern(const std::string& id) {
    os_ << "<defs><pattern id=\"" << id << "\" width=\"6\" height=\"6\" patternUnits=\"userSpaceOnUse\">"
        << "<rect width=\"6\" height=\"6\" fill=\"#e0e0e0\"/>"
        << "<path d=\"M0,6 L6,0\" stroke=\"#a0a0a0\" stroke-width=\"1\"/></pattern></defs>\n";
  }

  void save(const std::filesystem::path& path) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw Error(ErrorKind::Io, path.string());
    f << os_.str() << "</svg>\n";
  }

 private:
  std::ostringstream os_;
};

// Linear map from [lo, hi] to pixel range [p0, p1].
struct Scale {
  double lo, hi, p0, p1;
  double operator()(double v) const { return hi == lo ? 0.5 * (p0 + p1) : p0 + (v - lo) / (hi - lo) * (p1 - p0); }
};

}  // namespace svg

namespace detail {

inline std::string class_of(const AuditRow& r) { return r.class_label.value_or(stats::kUnlabeledStratum); }

inline double quantile(std::vector<double> v, double p) {
  std::sort(v.begin(), v.end());
  const double h = (static_cast<double>(v.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

inline std::string provenance(const AuditConfig& cfg, std::size_t rows, std::size_t cells) {
  return "skinaudit " + std::string(SKINAUDIT_VERSION) + "; data: rows.csv (" + std::to_string(rows) +
         " rows), correlations.csv (" + std::to_string(cells) + " cells); reference=" +
         tone::to_string(cfg.reference) + "@" + svg::num(cfg.reference.anchor) +
         "; seed=" + std::to_string(cfg.seed) + "; resamples=" + std::to_string(cfg.resamples);
}

inline const std::array<Measure, 7> kToneMeasures = {Measure::MeanIta, Measure::P1, Measure::P2, Measure::P3,
                                                     Measure::P4,      Measure::P5, Measure::P6};

inline const std::array<Measure, 8> kHeatmapMeasures = {Measure::MeanIta, Measure::Fitzpatrick, Measure::P1,
                                                        Measure::P2,      Measure::P3,          Measure::P4,
                                                        Measure::P5,      Measure::P6};

inline std::string file_safe(const std::string& s) {
  std::string out;
  for (char c : s) out += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_') ? c : '_';
  return out;
}

}  // namespace detail

// One panel per tone measure (mean ITA, P1..P6), one box per class: quartiles, median line,
// whiskers at min/max. Tone values come from one row per image.
inline void box_plots(const std::vector<AuditRow>& rows, const std::filesystem::path& path, const std::string& prov) {
  std::vector<const AuditRow*> images;
  std::set<std::string> seen;
  for (const auto& r : rows)
    if (seen.insert(r.id).second) images.push_back(&r);
  std::set<std::string> class_set;
  for (const auto* r : images) class_set.insert(detail::class_of(*r));
  const std::vector<std::string> classes(class_set.begin(), class_set.end());

  const double panel_w = std::max(140.0, 40.0 * static_cast<double>(classes.size()) + 60.0);
  const double panel_h = 260.0, top = 40.0, plot_h = 180.0;
  const auto panels = detail::kToneMeasures.size();
  svg::Document doc(panel_w * static_cast<double>(panels) + 20.0, panel_h + 30.0, prov);
  doc.text(10, 20, "Tone measures by class (degrees)", 14, "start");

  for (std::size_t p = 0; p < panels; ++p) {
    const Measure m = detail::kToneMeasures[p];
    const double x0 = 10.0 + panel_w * static_cast<double>(p);
    doc.text(x0 + panel_w / 2, top - 5, to_string(m), 12);
    std::map<std::string, std::vector<double>> values;
    double lo = 0, hi = 0;
    bool any = false;
    for (const auto* r : images)
      if (auto v = measure_value(*r, m)) {
        values[detail::class_of(*r)].push_back(*v);
        lo = any ? std::min(lo, *v) : *v;
        hi = any ? std::max(hi, *v) : *v;
        any = true;
      }
    doc.rect(x0 + 40, top, panel_w - 50, plot_h, "none", "stroke=\"#999\"");
    if (!any) {
      doc.text(x0 + panel_w / 2, top + plot_h / 2, "no data", 11);
      continue;
    }
    const double pad = std::max(1.0, 0.05 * (hi - lo));
    const svg::Scale ys{lo - pad, hi + pad, top + plot_h, top};
    doc.text(x0 + 36, ys(hi), svg::num(hi), 9, "end");
    doc.text(x0 + 36, ys(lo), svg::num(lo), 9, "end");
    const double slot = (panel_w - 50) / static_cast<double>(classes.size());
    for (std::size_t c = 0; c < classes.size(); ++c) {
      const double cx = x0 + 40 + slot * (static_cast<double>(c) + 0.5);
      doc.text(cx, top + plot_h + 14, classes[c], 9);
      auto it = values.find(classes[c]);
      if (it == values.end()) continue;
      const auto& v = it->second;
      const double q1 = detail::quantile(v, 0.25), med = detail::quantile(v, 0.5), q3 = detail::quantile(v, 0.75);
      const double mn = *std::min_element(v.begin(), v.end()), mx = *std::max_element(v.begin(), v.end());
      doc.comment(classes[c] + " " + to_string(m) + ": n=" + std::to_string(v.size()) + " min=" + svg::num(mn) +
                  " q1=" + svg::num(q1) + " median=" + svg::num(med) + " q3=" + svg::num(q3) +
                  " max=" + svg::num(mx));
      const double bw = std::min(24.0, slot * 0.6);
      doc.line(cx, ys(mn), cx, ys(q1), "#333");
      doc.line(cx, ys(q3), cx, ys(mx), "#333");
      doc.rect(cx - bw / 2, ys(q3), bw, std::max(0.5, ys(q1) - ys(q3)), "#9ecae1", "stroke=\"#333\"");
      doc.line(cx - bw / 2, ys(med), cx + bw / 2, ys(med), "#08519c", 2);
    }
  }
  doc.save(path);
}

// For each model: per measure, a band spanning the min..max rho over the nine metrics in the
// "all" stratum, with one dot per metric.
inline void correlation_bands(const std::vector<CorrelationRow>& cells, const std::filesystem::path& path,
                              const std::string& prov) {
  std::set<std::string> models;
  for (const auto& c : cells) models.insert(c.model);
  const double panel_h = 220.0, plot_h = 160.0, left = 50.0, slot = 48.0;
  const double width = left + slot * static_cast<double>(kAllMeasures.size()) + 20.0;
  svg::Document doc(width, 30.0 + panel_h * static_cast<double>(models.size()), prov);
  doc.text(10, 20, "Spearman rho range across metrics (stratum: all)", 14, "start");

  std::size_t row = 0;
  for (const auto& model : models) {
    const double top = 40.0 + panel_h * static_cast<double>(row++);
    const svg::Scale ys{-1.0, 1.0, top + plot_h, top};
    doc.text(left, top - 6, "model: " + model, 12, "start");
    doc.rect(left, top, slot * static_cast<double>(kAllMeasures.size()), plot_h, "none", "stroke=\"#999\"");
    doc.line(left, ys(0), left + slot * static_cast<double>(kAllMeasures.size()), ys(0), "#bbb");
    for (double t : {-1.0, 0.0, 1.0}) doc.text(left - 4, ys(t) + 3, svg::num(t), 9, "end");
    for (std::size_t k = 0; k < kAllMeasures.size(); ++k) {
      const Measure m = kAllMeasures[k];
      const double cx = left + slot * (static_cast<double>(k) + 0.5);
      doc.text(cx, top + plot_h + 14, to_string(m), 9);
      std::vector<double> rhos;
      for (const auto& c : cells)
        if (c.stratum == "all" && c.model == model && c.measure == m && c.estimate) rhos.push_back(c.estimate->rho);
      if (rhos.empty()) {
        doc.text(cx, ys(0) - 4, "NA", 9);
        continue;
      }
      const auto [mn, mx] = std::minmax_element(rhos.begin(), rhos.end());
      doc.comment(model + " " + to_string(m) + ": min=" + svg::num(*mn) + " max=" + svg::num(*mx));
      doc.rect(cx - slot * 0.35, ys(*mx), slot * 0.7, std::max(0.5, ys(*mn) - ys(*mx)), "#c6dbef");
      for (double r : rhos) doc.circle(cx, ys(r), 2.2, "#08519c");
    }
  }
  doc.save(path);
}

// Per model: one panel per measure, rows = class strata, columns = metrics, fill = |rho|.
// Missing cells are hatched grey and labelled NA, never drawn as zero.
inline void class_heatmap(const std::vector<CorrelationRow>& cells, const std::string& model,
                          const std::filesystem::path& path, const std::string& prov) {
  std::set<std::string> strata;
  for (const auto& c : cells)
    if (c.model == model && c.stratum.starts_with("class:")) strata.insert(c.stratum);
  if (strata.empty()) strata.insert("all");
  std::map<std::tuple<std::string, Measure, seg::Metric>, std::optional<double>> lookup;
  for (const auto& c : cells)
    if (c.model == model)
      lookup[{c.stratum, c.measure, c.metric}] =
          c.estimate ? std::optional<double>(std::abs(c.estimate->rho)) : std::nullopt;

  const double cell = 22.0, label_w = 90.0;
  const double panel_w = label_w + cell * 9 + 20.0;
  const double panel_h = 40.0 + cell * static_cast<double>(strata.size()) + 30.0;
  const auto& measures = detail::kHeatmapMeasures;
  svg::Document doc(panel_w * 4, 40.0 + panel_h * 2, prov);
  doc.text(10, 20, "|rho| by class and metric (model: " + model + ")", 14, "start");
  doc.comment("fill: white = 0, dark blue = 1; hatched grey = missing");
  doc.hatch_pattern("missing");

  for (std::size_t p = 0; p < measures.size(); ++p) {
    const double x0 = panel_w * static_cast<double>(p % 4);
    const double y0 = 40.0 + panel_h * static_cast<double>(p / 4);
    doc.text(x0 + label_w + cell * 4.5, y0 + 12, to_string(measures[p]), 12);
    for (std::size_t k = 0; k < seg::kAllMetrics.size(); ++k)
      doc.text(x0 + label_w + cell * (static_cast<double>(k) + 0.5), y0 + 30, seg::to_string(seg::kAllMetrics[k]), 8);
    std::size_t r = 0;
    for (const auto& s : strata) {
      const double y = y0 + 36 + cell * static_cast<double>(r++);
      doc.text(x0 + label_w - 4, y + cell * 0.65, s, 9, "end");
      for (std::size_t k = 0; k < seg::kAllMetrics.size(); ++k) {
        const double x = x0 + label_w + cell * static_cast<double>(k);
        auto it = lookup.find({s, measures[p], seg::kAllMetrics[k]});
        if (it == lookup.end() || !it->second) {
          doc.rect(x, y, cell, cell, "url(#missing)", "stroke=\"white\"");
          doc.text(x + cell / 2, y + cell * 0.65, "NA", 7);
          continue;
        }
        const double v = std::clamp(*it->second, 0.0, 1.0);
        const int shade = static_cast<int>(std::lround(255 - 200 * v));
        char fill[16];
        std::snprintf(fill, sizeof fill, "#%02x%02xff", shade, shade);
        doc.rect(x, y, cell, cell, fill, "stroke=\"white\"");
        doc.text(x + cell / 2, y + cell * 0.65, svg::num(v).substr(0, 4), 7);
      }
    }
  }
  doc.save(path);
}

inline std::vector<std::filesystem::path> emit_plots(const std::vector<AuditRow>& rows,
                                                     const std::vector<CorrelationRow>& cells,
                                                     const std::filesystem::path& out_dir, const AuditConfig& cfg) {
  if (rows.empty()) throw Error(ErrorKind::InvalidArgument, "no rows to plot");
  const auto prov = detail::provenance(cfg, rows.size(), cells.size());
  std::vector<std::filesystem::path> out;
  out.push_back(out_dir / "boxplots.svg");
  box_plots(rows, out.back(), prov);
  out.push_back(out_dir / "correlation_ranges.svg");
  correlation_bands(cells, out.back(), prov);
  std::set<std::string> models;
  for (const auto& r : rows) models.insert(r.model);
  for (const auto& m : models) {
    out.push_back(out_dir / ("heatmap_" + detail::file_safe(m) + ".svg"));
    class_heatmap(cells, m, out.back(), prov);
  }
  return out;
}

}  // namespace skinaudit::report
