#pragma once

// Configuration, row and correlation-cell types shared by the audit runner and plotting.

#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "skinaudit/error.hpp"
#include "skinaudit/hairmask.hpp"
#include "skinaudit/segmetrics.hpp"
#include "skinaudit/stats.hpp"
#include "skinaudit/tonedist.hpp"

#ifndef SKINAUDIT_VERSION
#define SKINAUDIT_VERSION "0.1.0"
#endif

namespace skinaudit::report {

namespace fs = std::filesystem;

struct AuditConfig {
  fs::path manifest;
  fs::path out_dir;
  hair::HairParams hair{};
  bool exclude_hair = true;
  tone::ReferenceDistribution reference{};
  std::size_t resamples = 1000;
  double level = 0.95;
  std::uint64_t seed = 0;
  stats::PValueMethod pvalue = stats::PValueMethod::TApprox;
  std::vector<stats::StratifyBy> strata = {stats::StratifyBy::DiseaseClass, stats::StratifyBy::Fitzpatrick};
  std::size_t low_power_min_n = stats::kLowPowerMinN;
  bool plots = false;
  bool skip_bad = false;
  unsigned threads = 0;  // 0 = thread_budget()

  void validate() const {
    if (manifest.empty()) throw Error(ErrorKind::InvalidArgument, "manifest path is required");
    if (out_dir.empty()) throw Error(ErrorKind::InvalidArgument, "output directory is required");
    hair.validate();
    reference.validate();
    if (resamples < 1) throw Error(ErrorKind::InvalidArgument, "resamples must be >= 1");
    if (!(level > 0.0 && level < 1.0)) throw Error(ErrorKind::InvalidArgument, "level must lie in (0, 1)");
  }
};

struct AuditRow {
  std::string id;
  std::optional<std::string> class_label;
  std::string model;
  tone::ToneSummary tone;
  seg::MetricVector metrics;
  std::vector<std::string> flags;
};

// ---------------------------------------------------------------------------
// Correlation measures: global-tone baselines, the six signed patterns, and |P4|..|P6|.

enum class Measure { MeanIta, Fitzpatrick, P1, P2, P3, P4, P5, P6, AbsP4, AbsP5, AbsP6 };

inline constexpr std::array<Measure, 11> kAllMeasures = {
    Measure::MeanIta, Measure::Fitzpatrick, Measure::P1, Measure::P2,    Measure::P3,   Measure::P4,
    Measure::P5,      Measure::P6,          Measure::AbsP4, Measure::AbsP5, Measure::AbsP6};

inline const char* to_string(Measure m) {
  static constexpr const char* names[] = {"mean_ita", "fitzpatrick", "p1",     "p2",     "p3",    "p4",
                                          "p5",       "p6",          "abs_p4", "abs_p5", "abs_p6"};
  return names[static_cast<int>(m)];
}

inline std::optional<double> measure_value(const AuditRow& r, Measure m) {
  auto pattern = [&](int i) { return r.tone.patterns[static_cast<std::size_t>(i)].value; };
  auto absolute = [](std::optional<double> v) -> std::optional<double> {
    if (v) return std::abs(*v);
    return std::nullopt;
  };
  switch (m) {
    case Measure::MeanIta: return r.tone.mean_ita;
    case Measure::Fitzpatrick:
      if (r.tone.fitzpatrick) return static_cast<double>(tone::ordinal(*r.tone.fitzpatrick));
      return std::nullopt;
    case Measure::P1: return pattern(0);
    case Measure::P2: return pattern(1);
    case Measure::P3: return pattern(2);
    case Measure::P4: return pattern(3);
    case Measure::P5: return pattern(4);
    case Measure::P6: return pattern(5);
    case Measure::AbsP4: return absolute(pattern(3));
    case Measure::AbsP5: return absolute(pattern(4));
    case Measure::AbsP6: return absolute(pattern(5));
  }
  return std::nullopt;
}

struct CorrelationRow {
  std::string stratum;
  Measure measure = Measure::MeanIta;
  seg::Metric metric = seg::Metric::IoU;
  std::string model;
  std::optional<stats::CorrelationEstimate> estimate;  // missing for n < 3 or constant series
  std::size_t n = 0;
};

struct StratumInfo {
  std::string name;
  std::size_t images = 0;
  bool low_power = false;
};

}  // namespace skinaudit::report
