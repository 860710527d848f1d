#pragma once

// Batch audit: per-image tone/metric rows, stratified correlation tables and the run record.

#include <algorithm>
#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "skinaudit/audit_types.hpp"
#include "skinaudit/color.hpp"
#include "skinaudit/csv.hpp"
#include "skinaudit/error.hpp"
#include "skinaudit/hairmask.hpp"
#include "skinaudit/ingest.hpp"
#include "skinaudit/parallel.hpp"
#include "skinaudit/plots.hpp"
#include "skinaudit/random.hpp"
#include "skinaudit/segmetrics.hpp"
#include "skinaudit/stats.hpp"
#include "skinaudit/tonedist.hpp"

namespace skinaudit::report {

namespace fs = std::filesystem;

inline constexpr const char* kToolVersion = SKINAUDIT_VERSION;
inline constexpr const char* kAucDefinition = "balanced_accuracy";

// ---------------------------------------------------------------------------
// Per-record pipeline

struct ImageTone {
  tone::ToneSummary summary;
  std::size_t hair_pixels = 0;
};

inline ImageTone measure_tone(const RgbImage& img, const BinaryMask& gt, const AuditConfig& cfg) {
  const BinaryMask hair = cfg.exclude_hair ? hair::hair_mask(img, cfg.hair) : BinaryMask(img.size());
  const auto ita = color::ita_map(img, hair);
  const auto samples = tone::region_samples(ita, gt);
  return {tone::summarize(samples, cfg.reference), hair.count()};
}

inline std::vector<std::string> flag_list(const ingest::LoadedRecord& rec, const tone::ToneSummary& t,
                                          const seg::MetricVector& m) {
  std::vector<std::string> flags;
  if (rec.gt_empty) flags.emplace_back("gt_empty");
  if (rec.gt_full) flags.emplace_back("gt_full");
  if (t.flags.whole_empty) flags.emplace_back("whole_empty");
  if (t.flags.skin_empty) flags.emplace_back("skin_empty");
  if (t.flags.lesion_empty) flags.emplace_back("lesion_empty");
  for (auto metric : m.degenerate()) flags.push_back(std::string(seg::to_string(metric)) + "_undefined");
  return flags;
}

inline std::vector<AuditRow> audit_record(const ingest::ImageRecord& rec, Size target, const AuditConfig& cfg) {
  const auto loaded = ingest::load_record(rec, target);
  const auto tone = measure_tone(loaded.image, loaded.gt, cfg);
  std::vector<AuditRow> rows;
  for (const auto& [model, pred] : loaded.predictions) {
    AuditRow row{rec.id, rec.class_label, model, tone.summary, seg::metrics(loaded.gt, pred), {}};
    row.flags = flag_list(loaded, row.tone, row.metrics);
    rows.push_back(std::move(row));
  }
  return rows;
}

inline void sort_rows(std::vector<AuditRow>& rows) {
  std::sort(rows.begin(), rows.end(), [](const AuditRow& a, const AuditRow& b) {
    return std::tie(a.id, a.model) < std::tie(b.id, b.model);
  });
}

// ---------------------------------------------------------------------------
// Correlations

inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

// Bootstrap seed for one table cell; depends only on the run seed and the cell's identity.
inline std::uint64_t cell_seed(std::uint64_t seed, const std::string& stratum, Measure m, seg::Metric metric,
                               const std::string& model) {
  const std::string key = stratum + '\x1f' + to_string(m) + '\x1f' + seg::to_string(metric) + '\x1f' + model;
  return rng::splitmix64(seed ^ fnv1a(key));
}

struct StratumRows {
  StratumInfo info;
  std::vector<std::size_t> rows;  // indices into the full row vector
};

inline std::vector<StratumRows> build_strata(const std::vector<AuditRow>& rows, const AuditConfig& cfg) {
  std::set<std::string> ids;
  for (const auto& r : rows) ids.insert(r.id);
  std::vector<StratumRows> out;
  {
    StratumRows all{{"all", ids.size(), ids.size() < cfg.low_power_min_n}, {}};
    for (std::size_t i = 0; i < rows.size(); ++i) all.rows.push_back(i);
    out.push_back(std::move(all));
  }
  const std::span<const AuditRow> view(rows);
  for (auto by : cfg.strata) {
    auto label = [by](const AuditRow& r) -> std::optional<std::string> {
      if (by == stats::StratifyBy::DiseaseClass) return r.class_label;
      if (r.tone.fitzpatrick) return std::string(tone::to_string(*r.tone.fitzpatrick));
      return std::nullopt;
    };
    for (auto& [name, s] : stats::stratify(view, label, 0)) {
      std::set<std::string> stratum_ids;
      for (auto i : s.rows) stratum_ids.insert(rows[i].id);
      StratumRows sr{{std::string(stats::to_string(by)) + ":" + name, stratum_ids.size(),
                      stratum_ids.size() < cfg.low_power_min_n},
                     std::move(s.rows)};
      out.push_back(std::move(sr));
    }
  }
  return out;
}

inline std::vector<CorrelationRow> correlate(const std::vector<AuditRow>& rows, const std::vector<StratumRows>& strata,
                                             const AuditConfig& cfg, unsigned threads) {
  std::set<std::string> model_set;
  for (const auto& r : rows) model_set.insert(r.model);
  std::vector<CorrelationRow> cells;
  std::vector<const StratumRows*> cell_stratum;
  for (const auto& s : strata)
    for (auto m : kAllMeasures)
      for (auto metric : seg::kAllMetrics)
        for (const auto& model : model_set) {
          cells.push_back({s.info.name, m, metric, model, std::nullopt, 0});
          cell_stratum.push_back(&s);
        }

  parallel_for(cells.size(), threads, [&](std::size_t c) {
    auto& cell = cells[c];
    stats::PairedSeries series;
    for (auto i : cell_stratum[c]->rows) {
      const auto& r = rows[i];
      if (r.model != cell.model) continue;
      const auto x = measure_value(r, cell.measure);
      const auto& y = r.metrics.get(cell.metric);
      if (x && y) series.push(r.id, *x, *y);
    }
    cell.n = series.n();
    if (series.n() < 3 || stats::detail::is_constant(series.x) || stats::detail::is_constant(series.y)) return;
    stats::BootstrapOptions opt;
    opt.resamples = cfg.resamples;
    opt.level = cfg.level;
    opt.seed = cell_seed(cfg.seed, cell.stratum, cell.measure, cell.metric, cell.model);
    opt.pvalue.method = cfg.pvalue;
    opt.pvalue.seed = opt.seed;
    cell.estimate = stats::bootstrap_ci(series, opt);
  });
  return cells;
}

// ---------------------------------------------------------------------------
// Serialization

inline constexpr const char* kRowsHeader =
    "id,class,model,mean_ita,fitzpatrick,p1,p2,p3,p4,p5,p6,iou,dc,st,sp,pa,auc,ck,fpr,fnr,flags";
inline constexpr const char* kCorrelationsHeader = "stratum,measure,metric,model,rho,ci_low,ci_high,p,n";

inline std::string join(const std::vector<std::string>& parts, char sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

inline void write_rows_csv(std::ostream& os, const std::vector<AuditRow>& rows) {
  os << kRowsHeader << '\n';
  for (const auto& r : rows) {
    os << csv::escape(r.id) << ',' << csv::escape(r.class_label.value_or("")) << ',' << csv::escape(r.model) << ','
       << csv::format_optional(r.tone.mean_ita) << ','
       << (r.tone.fitzpatrick ? std::to_string(tone::ordinal(*r.tone.fitzpatrick)) : std::string());
    for (const auto& p : r.tone.patterns) os << ',' << csv::format_optional(p.value);
    for (auto m : seg::kAllMetrics) os << ',' << csv::format_optional(r.metrics.get(m));
    os << ',' << csv::escape(join(r.flags, ';')) << '\n';
  }
}

inline void write_correlations_csv(std::ostream& os, const std::vector<CorrelationRow>& cells) {
  os << kCorrelationsHeader << '\n';
  for (const auto& c : cells) {
    os << csv::escape(c.stratum) << ',' << to_string(c.measure) << ',' << seg::to_string(c.metric) << ','
       << csv::escape(c.model) << ',';
    if (c.estimate) {
      os << csv::format_number(c.estimate->rho) << ',' << csv::format_optional(c.estimate->ci_low) << ','
         << csv::format_optional(c.estimate->ci_high) << ',' << csv::format_number(c.estimate->p_value);
    } else {
      os << ",,,";
    }
    os << ',' << c.n << '\n';
  }
}

inline std::string utc_timestamp(std::chrono::system_clock::time_point t) {
  const std::time_t tt = std::chrono::system_clock::to_time_t(t);
  std::tm tm{};
  gmtime_r(&tt, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline nlohmann::ordered_json config_json(const AuditConfig& cfg, unsigned threads) {
  nlohmann::ordered_json strata = nlohmann::ordered_json::array();
  for (auto s : cfg.strata) strata.push_back(stats::to_string(s));
  return {
      {"manifest", fs::absolute(cfg.manifest).string()},
      {"out_dir", fs::absolute(cfg.out_dir).string()},
      {"hair",
       {{"enabled", cfg.exclude_hair},
        {"open_kernel", cfg.hair.open_kernel},
        {"blackhat_kernel", cfg.hair.blackhat_kernel},
        {"clahe_clip", cfg.hair.clahe_clip},
        {"clahe_tiles", {cfg.hair.clahe_tiles_x, cfg.hair.clahe_tiles_y}},
        {"threshold", cfg.hair.threshold}}},
      {"reference",
       {{"kind", tone::to_string(cfg.reference)}, {"anchor", cfg.reference.anchor}, {"upper", cfg.reference.upper}}},
      {"bootstrap", {{"resamples", cfg.resamples}, {"level", cfg.level}, {"seed", cfg.seed}}},
      {"pvalue", stats::to_string(cfg.pvalue)},
      {"strata", strata},
      {"low_power_min_n", cfg.low_power_min_n},
      {"plots", cfg.plots},
      {"skip_bad", cfg.skip_bad},
      {"threads", threads},
  };
}

struct SkippedRecord {
  std::string id;
  std::string error;
};

struct AuditResult {
  std::vector<AuditRow> rows;
  std::vector<CorrelationRow> correlations;
  std::vector<StratumInfo> strata;
  std::vector<SkippedRecord> skipped;
  std::vector<fs::path> plots;
};


// Writes rows.csv, correlations.csv, run.json and (optionally) SVG plots into cfg.out_dir.
// A record-level failure aborts the run with that error unless cfg.skip_bad is set.
inline AuditResult run_audit(const AuditConfig& cfg) {
  cfg.validate();
  const auto started = std::chrono::system_clock::now();
  const unsigned threads = cfg.threads ? cfg.threads : thread_budget();
  const auto manifest = ingest::load_manifest(cfg.manifest);
  if (manifest.models().empty()) throw Error(ErrorKind::MissingField, "manifest has no pred_mask:<model> column");

  std::error_code ec;
  fs::create_directories(cfg.out_dir, ec);
  if (ec) throw Error(ErrorKind::Io, cfg.out_dir.string() + ": " + ec.message());

  const auto& records = manifest.records;
  std::vector<std::vector<AuditRow>> per_record(records.size());
  std::vector<std::optional<std::string>> failures(records.size());
  parallel_for(records.size(), threads, [&](std::size_t i) {
    try {
      per_record[i] = audit_record(records[i], manifest.resize_target, cfg);
    } catch (const Error& e) {
      failures[i] = e.what();
      if (!cfg.skip_bad) throw Error(e.kind(), "record '" + records[i].id + "': " + e.what());
    }
  });

  AuditResult result;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (failures[i]) result.skipped.push_back({records[i].id, *failures[i]});
    for (auto& r : per_record[i]) result.rows.push_back(std::move(r));
  }
  sort_rows(result.rows);

  const auto strata = build_strata(result.rows, cfg);
  for (const auto& s : strata) result.strata.push_back(s.info);
  result.correlations = correlate(result.rows, strata, cfg, threads);

  auto open = [&](const char* name) {
    std::ofstream os(cfg.out_dir / name, std::ios::binary | std::ios::trunc);
    if (!os) throw Error(ErrorKind::Io, (cfg.out_dir / name).string());
    return os;
  };
  {
    auto os = open("rows.csv");
    write_rows_csv(os, result.rows);
  }
  {
    auto os = open("correlations.csv");
    write_correlations_csv(os, result.correlations);
  }
  if (cfg.plots && !result.rows.empty()) {
    result.plots = emit_plots(result.rows, result.correlations, cfg.out_dir, cfg);
  }

  nlohmann::ordered_json run;
  run["tool"] = "audit";
  run["version"] = kToolVersion;
  run["started_utc"] = utc_timestamp(started);
  run["finished_utc"] = utc_timestamp(std::chrono::system_clock::now());
  run["config"] = config_json(cfg, threads);
  run["seed"] = cfg.seed;
  run["rng"] = rng::kEngineName;
  run["auc_definition"] = kAucDefinition;
  run["pvalue_method"] = cfg.pvalue == stats::PValueMethod::TApprox ? "t_approx" : "permutation";
  run["resize_target"] = {manifest.resize_target.width, manifest.resize_target.height};
  run["records"] = records.size();
  run["rows"] = result.rows.size();
  nlohmann::ordered_json skipped = nlohmann::ordered_json::array();
  for (const auto& s : result.skipped) skipped.push_back({{"id", s.id}, {"error", s.error}});
  run["skipped"] = skipped;
  nlohmann::ordered_json strata_json = nlohmann::ordered_json::array();
  for (const auto& s : result.strata)
    strata_json.push_back({{"name", s.name}, {"images", s.images}, {"low_power", s.low_power}});
  run["strata"] = strata_json;
  {
    auto os = open("run.json");
    os << run.dump(2) << '\n';
  }
  return result;
}

}  // namespace skinaudit::report
