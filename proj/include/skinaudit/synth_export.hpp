#pragma once

// Writes synthetic fixtures to disk as PNGs plus a ready-to-run audit manifest.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "skinaudit/csv.hpp"
#include "skinaudit/imageio.hpp"
#include "skinaudit/synthgen.hpp"

namespace skinaudit::synth {

inline constexpr const char* kReferenceModel = "reference";

struct BatchEntry {
  SynthSpec spec;
  std::optional<std::string> class_label;
};

struct SynthBatch {
  std::vector<BatchEntry> entries;
  double segmenter_noise_sd = 0.0;
  std::uint64_t segmenter_seed = 0;
};

// Accepts a single spec object, an array of specs, or
// {"specs": [...], "segmenter_noise_sd": x, "segmenter_seed": n}. Specs may carry "class".
inline SynthBatch parse_batch(const nlohmann::json& j) {
  SynthBatch batch;
  auto entry = [](const nlohmann::json& o) {
    if (!o.is_object()) throw Error(ErrorKind::Parse, "synth spec must be an object");
    BatchEntry e{o.get<SynthSpec>(), std::nullopt};
    if (o.contains("class") && o["class"].is_string()) e.class_label = o["class"].get<std::string>();
    e.spec.validate();
    return e;
  };
  try {
    if (j.is_array()) {
      for (const auto& o : j) batch.entries.push_back(entry(o));
    } else if (j.is_object() && j.contains("specs")) {
      for (const auto& o : j.at("specs")) batch.entries.push_back(entry(o));
      batch.segmenter_noise_sd = j.value("segmenter_noise_sd", 0.0);
      batch.segmenter_seed = j.value("segmenter_seed", std::uint64_t{0});
    } else {
      batch.entries.push_back(entry(j));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Parse, e.what());
  }
  if (batch.entries.empty()) throw Error(ErrorKind::MissingField, "synth batch has no specs");
  return batch;
}

inline std::string fixture_id(std::size_t entry, int index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "s%02zu_%04d", entry, index);
  return buf;
}

struct ExportedFixture {
  std::string id;
  double skin_ita;
  double lesion_ita;
};

// Layout: images/<id>.png, masks/<id>_gt.png, masks/<id>_reference.png, manifest.csv, truth.csv.
inline std::vector<ExportedFixture> export_batch(const SynthBatch& batch, const std::filesystem::path& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir / "images");
  fs::create_directories(out_dir / "masks");
  std::ofstream manifest(out_dir / "manifest.csv", std::ios::binary | std::ios::trunc);
  std::ofstream truth(out_dir / "truth.csv", std::ios::binary | std::ios::trunc);
  if (!manifest || !truth) throw Error(ErrorKind::Io, out_dir.string());
  manifest << "id,image,gt_mask,pred_mask:" << kReferenceModel << ",class\n";
  truth << "id,skin_ita,lesion_ita,contrast,stroke_pixels\n";

  std::vector<ExportedFixture> out;
  std::uint64_t global = 0;
  for (std::size_t e = 0; e < batch.entries.size(); ++e) {
    const auto& entry = batch.entries[e];
    for (int i = 0; i < entry.spec.count; ++i, ++global) {
      const auto fx = generate_one(entry.spec, i);
      const auto id = fixture_id(e, i);
      const auto pred = reference_segmenter(fx.image, batch.segmenter_noise_sd, rng::splitmix64(batch.segmenter_seed + global));
      const std::string img = "images/" + id + ".png";
      const std::string gt = "masks/" + id + "_gt.png";
      const std::string pm = std::string("masks/") + id + "_" + kReferenceModel + ".png";
      io::write_png(out_dir / img, fx.image);
      io::write_png(out_dir / gt, fx.gt);
      io::write_png(out_dir / pm, pred);
      manifest << id << ',' << img << ',' << gt << ',' << pm << ',' << csv::escape(entry.class_label.value_or(""))
               << '\n';
      truth << id << ',' << csv::format_number(fx.skin_ita) << ',' << csv::format_number(fx.lesion_ita) << ','
            << csv::format_number(fx.contrast()) << ',' << fx.strokes.count() << '\n';
      out.push_back({id, fx.skin_ita, fx.lesion_ita});
    }
  }
  return out;
}

}  // namespace skinaudit::synth
