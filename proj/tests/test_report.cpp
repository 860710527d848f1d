#include <cstdlib>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "skinaudit/report.hpp"
#include "skinaudit/synth_export.hpp"
#include "test_support.hpp"

using namespace skinaudit;
using namespace skinaudit::report;
namespace fs = std::filesystem;

namespace {

// Small two-class batch: MEL with a clear gap, NV with a weak one.
fs::path make_fixtures(const std::string& name, int per_class = 6) {
  const auto dir = fixtures::temp_dir(name);
  nlohmann::json j;
  j["segmenter_noise_sd"] = 3.0;
  j["segmenter_seed"] = 5;
  j["specs"] = nlohmann::json::array();
  j["specs"].push_back({{"count", per_class}, {"size", 48}, {"skin_ita_mean", 40}, {"lesion_ita_mean", 0},
                        {"ita_noise_sd", 4}, {"seed", 1}, {"class", "MEL"}});
  j["specs"].push_back({{"count", per_class}, {"size", 48}, {"skin_ita_mean", 25}, {"lesion_ita_mean", 20},
                        {"ita_noise_sd", 4}, {"seed", 2}, {"class", "NV"}});
  synth::export_batch(synth::parse_batch(j), dir);
  return dir;
}

AuditConfig config_for(const fs::path& fixtures, const fs::path& out) {
  AuditConfig cfg;
  cfg.manifest = fixtures / "manifest.csv";
  cfg.out_dir = out;
  cfg.resamples = 100;
  cfg.seed = 42;
  cfg.threads = 1;
  return cfg;
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
  std::ifstream in(p);
  std::vector<std::vector<std::string>> out;
  for (std::string line; std::getline(in, line);) out.push_back(csv::split_line(line));
  return out;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(SKINAUDIT_AUDIT_BIN) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(RunAudit, OneRowPerImageAndModel) {
  const auto fx = fixtures::temp_dir("report_three");
  synth::SynthBatch batch;
  synth::SynthSpec spec;
  spec.count = 3;
  spec.size = 32;
  batch.entries.push_back({spec, std::nullopt});
  synth::export_batch(batch, fx);
  {
    // Add a second model column pointing at the GT masks.
    auto text = fixtures::read_file(fx / "manifest.csv");
    std::ofstream os(fx / "two.csv");
    std::istringstream in(text);
    std::string line;
    std::getline(in, line);
    os << line << ",pred_mask:oracle\n";
    while (std::getline(in, line)) {
      const auto f = csv::split_line(line);
      os << line << ',' << f[2] << '\n';
    }
  }
  auto cfg = config_for(fx, fx / "out");
  cfg.manifest = fx / "two.csv";
  const auto result = run_audit(cfg);
  const auto rows = read_csv(cfg.out_dir / "rows.csv");
  ASSERT_EQ(rows.size(), 1u + 3u * 2u);
  EXPECT_EQ(fixtures::read_file(cfg.out_dir / "rows.csv").substr(0, std::string(kRowsHeader).size()), kRowsHeader);
  EXPECT_EQ(rows[1][0], "s00_0000");
  EXPECT_EQ(rows[1][2], "oracle");
  EXPECT_EQ(rows[2][2], "reference");
  EXPECT_EQ(rows[1][11], "1");  // iou of the GT against itself
  for (const auto& r : rows) {
    EXPECT_EQ(r.size(), 21u);
  }
}

TEST(RunAudit, RowValuesMatchModules) {
  const auto fx = make_fixtures("report_values", 3);
  const auto cfg = config_for(fx, fx / "out");
  const auto result = run_audit(cfg);
  const auto manifest = ingest::load_manifest(cfg.manifest);
  for (const auto& row : result.rows) {
    const auto rec = std::find_if(manifest.records.begin(), manifest.records.end(),
                                  [&](const auto& r) { return r.id == row.id; });
    const auto loaded = ingest::load_record(*rec, manifest.resize_target);
    const auto hm = hair::hair_mask(loaded.image);
    const auto samples = tone::region_samples(color::ita_map(loaded.image, hm), loaded.gt);
    const auto patterns = tone::six_patterns(samples, cfg.reference);
    for (std::size_t p = 0; p < 6; ++p) {
      EXPECT_EQ(row.tone.patterns[p].value, patterns[p].value);
    }
    EXPECT_EQ(*row.tone.mean_ita, tone::mean_ita(samples.whole));
    const auto m = seg::metrics(loaded.gt, loaded.predictions.at(row.model));
    for (auto k : seg::kAllMetrics) {
      EXPECT_EQ(row.metrics.get(k), m.get(k));
    }
  }
  // Serialized numbers round-trip to 9 significant digits.
  const auto rows = read_csv(cfg.out_dir / "rows.csv");
  for (std::size_t i = 0; i < result.rows.size(); ++i) {
    const double p6 = std::stod(rows[i + 1][10]);
    const double exact = *result.rows[i].tone.patterns[5].value;
    EXPECT_NEAR(p6, exact, std::abs(exact) * 1e-8 + 1e-12);
  }
}

TEST(RunAudit, CorrelationTableShapeAndMissingCells) {
  const auto fx = make_fixtures("report_corr");
  auto cfg = config_for(fx, fx / "out");
  const auto result = run_audit(cfg);
  const auto corr = read_csv(cfg.out_dir / "correlations.csv");
  const std::size_t strata = result.strata.size();
  EXPECT_EQ(corr.size(), 1 + strata * kAllMeasures.size() * seg::kAllMetrics.size());
  EXPECT_EQ(corr[0], csv::split_line(kCorrelationsHeader));
  bool saw_class = false;
  for (std::size_t i = 1; i < corr.size(); ++i) {
    const auto& r = corr[i];
    ASSERT_EQ(r.size(), 9u);
    saw_class |= r[0] == "class:MEL";
    const auto n = std::stoul(r[8]);
    if (n < 3) {
      EXPECT_EQ(r[4], "") << r[0] << " " << r[1] << " " << r[2];
    }
    if (!r[5].empty()) {
      EXPECT_LE(std::stod(r[5]), std::stod(r[6]));
    }
  }
  EXPECT_TRUE(saw_class);
  const auto run = nlohmann::json::parse(fixtures::read_file(cfg.out_dir / "run.json"));
  EXPECT_EQ(run["seed"], 42);
  EXPECT_EQ(run["rng"], "mt19937_64");
  EXPECT_EQ(run["auc_definition"], "balanced_accuracy");
  EXPECT_EQ(run["config"]["bootstrap"]["resamples"], 100);
  for (const auto& s : run["strata"]) {
    // 12 images overall, 6 per class.
    EXPECT_EQ(s["low_power"].get<bool>(), s["name"] != "all") << s["name"];
  }
}

TEST(RunAudit, RerunIsByteIdentical) {
  const auto fx = make_fixtures("report_det");
  auto a = config_for(fx, fx / "a");
  auto b = config_for(fx, fx / "b");
  a.plots = b.plots = true;
  b.threads = 3;
  run_audit(a);
  run_audit(b);
  for (const char* f : {"rows.csv", "correlations.csv", "boxplots.svg", "correlation_ranges.svg",
                        "heatmap_reference.svg"})
    EXPECT_EQ(fixtures::read_file(a.out_dir / f), fixtures::read_file(b.out_dir / f)) << f;
}

TEST(RunAudit, ContrastSweepGivesPositiveP6Correlation) {
  const auto dir = fixtures::temp_dir("report_sweep");
  nlohmann::json j;
  j["segmenter_noise_sd"] = 2.0;
  j["specs"] = nlohmann::json::array();
  std::uint64_t seed = 1;
  for (double gap : {0.0, 5.0, 10.0, 20.0, 40.0})
    j["specs"].push_back({{"count", 8}, {"size", 64}, {"skin_ita_mean", 30}, {"lesion_ita_mean", 30 - gap},
                          {"ita_noise_sd", 4}, {"seed", seed++}});
  synth::export_batch(synth::parse_batch(j), dir);
  const auto result = run_audit(config_for(dir, dir / "out"));
  bool found = false;
  for (const auto& c : result.correlations) {
    if (c.stratum != "all" || c.measure != Measure::AbsP6 || c.metric != seg::Metric::IoU) continue;
    found = true;
    ASSERT_TRUE(c.estimate.has_value());
    EXPECT_GT(c.estimate->rho, 0.5);
  }
  EXPECT_TRUE(found);
}

TEST(RunAudit, BadRecordAbortsUnlessSkipped) {
  const auto fx = make_fixtures("report_bad", 3);
  fs::remove(fx / "masks/s00_0001_gt.png");
  auto cfg = config_for(fx, fx / "out");
  try {
    run_audit(cfg);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::MissingFile);
    EXPECT_NE(std::string(e.what()).find("s00_0001"), std::string::npos);
  }
  cfg.skip_bad = true;
  const auto result = run_audit(cfg);
  ASSERT_EQ(result.skipped.size(), 1u);
  EXPECT_EQ(result.rows.size(), 5u);
}

TEST(Plots, SingleClassAndMissingCells) {
  const auto fx = make_fixtures("report_plots", 2);
  auto cfg = config_for(fx, fx / "out");
  cfg.plots = true;
  run_audit(cfg);
  const auto heat = fixtures::read_file(cfg.out_dir / "heatmap_reference.svg");
  EXPECT_NE(heat.find("url(#missing)"), std::string::npos);
  EXPECT_NE(heat.find(">NA<"), std::string::npos);
  EXPECT_NE(heat.find("<svg"), std::string::npos);
  const auto box = fixtures::read_file(cfg.out_dir / "boxplots.svg");
  EXPECT_NE(box.find("MEL"), std::string::npos);
  EXPECT_NE(box.find("<!--"), std::string::npos);
}

TEST(CellSeed, DependsOnEveryKeyPart) {
  const auto base = cell_seed(1, "all", Measure::P6, seg::Metric::IoU, "m");
  EXPECT_EQ(base, cell_seed(1, "all", Measure::P6, seg::Metric::IoU, "m"));
  EXPECT_NE(base, cell_seed(2, "all", Measure::P6, seg::Metric::IoU, "m"));
  EXPECT_NE(base, cell_seed(1, "class:MEL", Measure::P6, seg::Metric::IoU, "m"));
  EXPECT_NE(base, cell_seed(1, "all", Measure::P5, seg::Metric::IoU, "m"));
  EXPECT_NE(base, cell_seed(1, "all", Measure::P6, seg::Metric::DC, "m"));
  EXPECT_NE(base, cell_seed(1, "all", Measure::P6, seg::Metric::IoU, "n"));
}

TEST(Cli, ExitCodes) {
  const auto fx = make_fixtures("report_cli", 2);
  const auto out = fx / "cli_out";
  EXPECT_EQ(run_cli("run --manifest " + (fx / "manifest.csv").string() + " --out " + out.string() +
                    " --resamples 50 --seed 3 --plots"),
            0);
  EXPECT_TRUE(fs::exists(out / "rows.csv"));
  EXPECT_TRUE(fs::exists(out / "boxplots.svg"));
  EXPECT_EQ(run_cli("run --manifest " + (fx / "manifest.csv").string() + " --out " + out.string() +
                    " --level 1.5"),
            1);
  EXPECT_EQ(run_cli("run --manifest " + (fx / "manifest.csv").string() + " --out " + out.string() +
                    " --ref sideways"),
            1);
  EXPECT_EQ(run_cli("run --out " + out.string()), 1);
  EXPECT_EQ(run_cli("run --manifest " + (fx / "nope.csv").string() + " --out " + out.string()), 2);
  fs::remove(fx / "masks/s01_0000_reference.png");
  EXPECT_EQ(run_cli("run --manifest " + (fx / "manifest.csv").string() + " --out " + out.string()), 2);
  EXPECT_EQ(run_cli("run --skip-bad --manifest " + (fx / "manifest.csv").string() + " --out " + out.string()), 0);
}

TEST(Cli, SynthAndHairmaskSubcommands) {
  const auto dir = fixtures::temp_dir("report_cli_synth");
  std::ofstream(dir / "spec.json") << R"({"count": 2, "size": 40, "hair_strokes": 3, "seed": 9})";
  EXPECT_EQ(run_cli("synth --spec " + (dir / "spec.json").string() + " --out " + (dir / "fx").string()), 0);
  EXPECT_TRUE(fs::exists(dir / "fx/manifest.csv"));
  EXPECT_EQ(run_cli("hairmask --image " + (dir / "fx/images/s00_0000.png").string() + " --out " +
                    (dir / "hair.png").string()),
            0);
  const auto mask = io::read_gray(dir / "hair.png");
  EXPECT_EQ(mask.size(), (Size{40, 40}));
  std::ofstream(dir / "bad.json") << R"({"lesion_radius_frac": 2})";
  EXPECT_EQ(run_cli("synth --spec " + (dir / "bad.json").string() + " --out " + (dir / "fx2").string()), 1);
}
