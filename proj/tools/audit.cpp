// audit: skin-tone / contrast audit of lesion segmentation outputs.
//
//   audit run --manifest <path> --out <dir> [options]
//   audit synth --spec <json> --out <dir>
//   audit hairmask --image <path> --out <png>
//
// Exit codes: 0 success, 1 configuration error, 2 data error.

#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "skinaudit/hairmask.hpp"
#include "skinaudit/imageio.hpp"
#include "skinaudit/report.hpp"
#include "skinaudit/synth_export.hpp"

namespace {

constexpr int kExitConfig = 1;
constexpr int kExitData = 2;

using namespace skinaudit;

int run_command(const report::AuditConfig& cfg) {
  const auto result = report::run_audit(cfg);
  std::cerr << "audit: " << result.rows.size() << " rows, " << result.correlations.size() << " correlation cells";
  if (!result.skipped.empty()) std::cerr << ", " << result.skipped.size() << " records skipped";
  std::cerr << " -> " << cfg.out_dir.string() << '\n';
  for (const auto& s : result.skipped) std::cerr << "  skipped " << s.id << ": " << s.error << '\n';
  return 0;
}

int synth_command(const std::string& spec_path, const std::string& out_dir) {
  std::ifstream in(spec_path);
  if (!in) throw Error(ErrorKind::InvalidArgument, "cannot open spec " + spec_path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Parse, e.what());
  }
  const auto batch = synth::parse_batch(j);
  const auto written = synth::export_batch(batch, out_dir);
  std::cerr << "synth: wrote " << written.size() << " fixtures to " << out_dir << '\n';
  return 0;
}

int hairmask_command(const std::string& image, const std::string& out, const hair::HairParams& p) {
  const auto img = io::read_rgb(image);
  io::write_png(out, hair::hair_mask(img, p));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Skin-tone and lesion-contrast audit for lesion segmentation models"};
  app.require_subcommand(1);

  report::AuditConfig cfg;
  std::string manifest, out, ref_kind = "point", pvalue = "t", strata = "class,fitzpatrick";
  double anchor = -30.0, upper = 90.0;
  int hair_threshold = cfg.hair.threshold;
  bool no_hair = false;

  auto* run = app.add_subcommand("run", "Audit a manifest of images, GT masks and predicted masks");
  run->add_option("--manifest", manifest, "CSV or JSON manifest")->required();
  run->add_option("--out", out, "Output directory")->required();
  run->add_option("--ref", ref_kind, "Reference distribution: point or uniform")
      ->check(CLI::IsMember({"point", "uniform", "-uniform"}));
  run->add_option("--anchor", anchor, "Reference anchor (degrees)");
  run->add_option("--upper", upper, "Upper bound of the uniform reference (degrees)");
  run->add_option("--resamples", cfg.resamples, "Bootstrap resamples");
  run->add_option("--level", cfg.level, "Confidence level");
  run->add_option("--seed", cfg.seed, "Bootstrap / permutation seed");
  run->add_option("--pvalue", pvalue, "p-value method: t or perm")->check(CLI::IsMember({"t", "perm"}));
  run->add_option("--strata", strata, "Comma-separated strata: class, fitzpatrick, or none");
  run->add_option("--hair-threshold", hair_threshold, "Hair mask threshold (8-bit)");
  run->add_flag("--no-hair", no_hair, "Do not exclude hair pixels");
  run->add_option("--threads", cfg.threads, "Worker threads (default: AUDIT_THREADS or hardware)");
  run->add_flag("--skip-bad", cfg.skip_bad, "Skip records that fail to load instead of aborting");
  run->add_flag("--plots", cfg.plots, "Write SVG plots");

  std::string spec_path, synth_out;
  auto* synth_cmd = app.add_subcommand("synth", "Generate synthetic fixtures and a manifest");
  synth_cmd->add_option("--spec", spec_path, "Synth spec JSON")->required();
  synth_cmd->add_option("--out", synth_out, "Output directory")->required();

  std::string hair_image, hair_out;
  hair::HairParams hair_params;
  auto* hair_cmd = app.add_subcommand("hairmask", "Write the hair mask of one image as PNG (white = hair)");
  hair_cmd->add_option("--image", hair_image, "Input image (PNG/JPEG)")->required();
  hair_cmd->add_option("--out", hair_out, "Output PNG")->required();
  hair_cmd->add_option("--threshold", hair_params.threshold, "Threshold (8-bit)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*run) {
      cfg.manifest = manifest;
      cfg.out_dir = out;
      cfg.reference = ref_kind == "point" ? tone::ReferenceDistribution::point_mass(anchor)
                                          : tone::ReferenceDistribution::uniform(anchor, upper);
      cfg.pvalue = pvalue == "t" ? stats::PValueMethod::TApprox : stats::PValueMethod::Permutation;
      cfg.hair.threshold = hair_threshold;
      cfg.exclude_hair = !no_hair;
      cfg.strata.clear();
      std::stringstream ss(strata);
      for (std::string s; std::getline(ss, s, ',');) {
        if (s == "class") cfg.strata.push_back(stats::StratifyBy::DiseaseClass);
        else if (s == "fitzpatrick") cfg.strata.push_back(stats::StratifyBy::Fitzpatrick);
        else if (s != "none" && !s.empty()) throw Error(ErrorKind::InvalidArgument, "unknown stratum '" + s + "'");
      }
      return run_command(cfg);
    }
    if (*synth_cmd) return synth_command(spec_path, synth_out);
    if (*hair_cmd) return hairmask_command(hair_image, hair_out, hair_params);
  } catch (const Error& e) {
    std::cerr << "audit: " << e.what() << '\n';
    return is_data_error(e.kind()) ? kExitData : kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "audit: " << e.what() << '\n';
    return kExitConfig;
  }
  return 0;
}
