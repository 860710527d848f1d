#pragma once

// Audit manifests, raster loading and geometry normalization.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "skinaudit/csv.hpp"
#include "skinaudit/error.hpp"
#include "skinaudit/image.hpp"
#include "skinaudit/imageio.hpp"

namespace skinaudit::ingest {

namespace fs = std::filesystem;

inline constexpr Size kDefaultResizeTarget{224, 224};
inline constexpr std::string_view kPredPrefix = "pred_mask:";

struct ImageRecord {
  std::string id;
  fs::path image_path;
  fs::path gt_mask_path;
  std::map<std::string, fs::path> pred_mask_paths;  // model name -> mask
  std::optional<std::string> class_label;
};

struct AuditManifest {
  std::vector<ImageRecord> records;
  std::set<std::string> class_labels;
  Size resize_target = kDefaultResizeTarget;

  std::set<std::string> models() const {
    std::set<std::string> out;
    for (const auto& r : records)
      for (const auto& [m, _] : r.pred_mask_paths) out.insert(m);
    return out;
  }
};

struct LoadedRecord {
  RgbImage image;
  BinaryMask gt;
  std::map<std::string, BinaryMask> predictions;
  bool gt_empty = false;
  bool gt_full = false;
};

// ---------------------------------------------------------------------------
// Resampling

// Half-pixel-centre bilinear interpolation; identity when sizes match.
inline RgbImage resize_bilinear(const RgbImage& src, Size target) {
  if (target.width < 1 || target.height < 1)
    throw Error(ErrorKind::InvalidArgument, "resize target must be at least 1x1");
  if (src.empty()) throw Error(ErrorKind::Decode, "cannot resize an empty image");
  if (src.size() == target) return src;
  RgbImage dst(target);
  const double sx = static_cast<double>(src.width()) / target.width;
  const double sy = static_cast<double>(src.height()) / target.height;
  for (int y = 0; y < target.height; ++y) {
    const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, src.height() - 1.0);
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, src.height() - 1);
    const double wy = fy - y0;
    for (int x = 0; x < target.width; ++x) {
      const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, src.width() - 1.0);
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min(x0 + 1, src.width() - 1);
      const double wx = fx - x0;
      Rgb out{};
      for (int c = 0; c < 3; ++c) {
        const double top = src(x0, y0)[c] * (1 - wx) + src(x1, y0)[c] * wx;
        const double bottom = src(x0, y1)[c] * (1 - wx) + src(x1, y1)[c] * wx;
        out[c] = static_cast<std::uint8_t>(std::lround(top * (1 - wy) + bottom * wy));
      }
      dst(x, y) = out;
    }
  }
  return dst;
}

template <typename T>
Image<T> resize_nearest(const Image<T>& src, Size target) {
  if (target.width < 1 || target.height < 1)
    throw Error(ErrorKind::InvalidArgument, "resize target must be at least 1x1");
  if (src.empty()) throw Error(ErrorKind::Decode, "cannot resize an empty image");
  if (src.size() == target) return src;
  Image<T> dst(target);
  for (int y = 0; y < target.height; ++y) {
    const int yy = std::min(src.height() - 1,
                            static_cast<int>((y + 0.5) * src.height() / target.height));
    for (int x = 0; x < target.width; ++x) {
      const int xx = std::min(src.width() - 1,
                              static_cast<int>((x + 0.5) * src.width() / target.width));
      dst(x, y) = src(xx, yy);
    }
  }
  return dst;
}

inline constexpr std::uint8_t kMaskThreshold = 127;

inline BinaryMask binarize(const GrayImage& gray) {
  BinaryMask m(gray.size());
  for (std::size_t i = 0; i < gray.pixel_count(); ++i) m.set_at(i, gray.pixels()[i] > kMaskThreshold);
  return m;
}

// ---------------------------------------------------------------------------
// Manifest parsing

namespace detail {

inline fs::path resolve(const fs::path& base, const std::string& p) {
  fs::path path(p);
  return path.is_absolute() ? path : base / path;
}

inline void finalize(AuditManifest& m) {
  std::set<std::string> seen;
  for (const auto& r : m.records) {
    if (!seen.insert(r.id).second) throw Error(ErrorKind::DuplicateId, "record id '" + r.id + "'");
    if (r.class_label) m.class_labels.insert(*r.class_label);
  }
  if (m.resize_target.width < 1 || m.resize_target.height < 1)
    throw Error(ErrorKind::InvalidArgument, "resize target must be at least 1x1");
}

inline std::string require(const std::string& value, const char* field, std::size_t row) {
  if (value.empty())
    throw Error(ErrorKind::MissingField, std::string(field) + " on record " + std::to_string(row));
  return value;
}

}  // namespace detail

inline AuditManifest parse_csv_manifest(std::istream& in, const fs::path& base_dir) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorKind::Parse, "empty manifest");
  if (line.starts_with("\xEF\xBB\xBF")) line.erase(0, 3);
  const auto header = csv::split_line(line);

  int id_col = -1, image_col = -1, gt_col = -1, class_col = -1;
  std::vector<std::pair<int, std::string>> pred_cols;
  for (int i = 0; i < static_cast<int>(header.size()); ++i) {
    const auto& h = header[static_cast<std::size_t>(i)];
    if (h == "id") id_col = i;
    else if (h == "image") image_col = i;
    else if (h == "gt_mask") gt_col = i;
    else if (h == "class") class_col = i;
    else if (h.starts_with(kPredPrefix)) {
      auto model = h.substr(kPredPrefix.size());
      if (model.empty()) throw Error(ErrorKind::Parse, "pred_mask column without model name");
      pred_cols.emplace_back(i, std::move(model));
    } else {
      throw Error(ErrorKind::Parse, "unknown manifest column '" + h + "'");
    }
  }
  if (id_col < 0) throw Error(ErrorKind::MissingField, "manifest header lacks 'id'");
  if (image_col < 0) throw Error(ErrorKind::MissingField, "manifest header lacks 'image'");
  if (gt_col < 0) throw Error(ErrorKind::MissingField, "manifest header lacks 'gt_mask'");

  AuditManifest m;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    ++row;
    const auto f = csv::split_line(line);
    if (f.size() != header.size())
      throw Error(ErrorKind::Parse, "record " + std::to_string(row) + " has " +
                                        std::to_string(f.size()) + " fields, expected " +
                                        std::to_string(header.size()));
    auto at = [&](int col) { return f[static_cast<std::size_t>(col)]; };
    ImageRecord r;
    r.id = detail::require(at(id_col), "id", row);
    r.image_path = detail::resolve(base_dir, detail::require(at(image_col), "image", row));
    r.gt_mask_path = detail::resolve(base_dir, detail::require(at(gt_col), "gt_mask", row));
    for (const auto& [col, model] : pred_cols) {
      if (!at(col).empty()) r.pred_mask_paths[model] = detail::resolve(base_dir, at(col));
    }
    if (class_col >= 0 && !at(class_col).empty()) r.class_label = at(class_col);
    m.records.push_back(std::move(r));
  }
  detail::finalize(m);
  return m;
}

// Either an array of record objects, or {"resize_target": [w, h], "records": [...]}.
inline AuditManifest parse_json_manifest(std::istream& in, const fs::path& base_dir) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Parse, e.what());
  }
  AuditManifest m;
  const nlohmann::json* records = &doc;
  if (doc.is_object()) {
    if (doc.contains("resize_target")) {
      const auto& t = doc["resize_target"];
      if (!t.is_array() || t.size() != 2 || !t[0].is_number_integer() || !t[1].is_number_integer())
        throw Error(ErrorKind::Parse, "resize_target must be [width, height]");
      m.resize_target = {t[0].get<int>(), t[1].get<int>()};
    }
    if (!doc.contains("records")) throw Error(ErrorKind::MissingField, "records");
    records = &doc["records"];
  }
  if (!records->is_array()) throw Error(ErrorKind::Parse, "manifest records must be an array");

  std::size_t row = 0;
  for (const auto& obj : *records) {
    ++row;
    if (!obj.is_object()) throw Error(ErrorKind::Parse, "record " + std::to_string(row) + " is not an object");
    auto str = [&](const char* key) -> std::string {
      if (!obj.contains(key) || obj[key].is_null()) return {};
      if (!obj[key].is_string())
        throw Error(ErrorKind::Parse, std::string(key) + " must be a string on record " + std::to_string(row));
      return obj[key].get<std::string>();
    };
    ImageRecord r;
    r.id = detail::require(str("id"), "id", row);
    r.image_path = detail::resolve(base_dir, detail::require(str("image"), "image", row));
    r.gt_mask_path = detail::resolve(base_dir, detail::require(str("gt_mask"), "gt_mask", row));
    for (const auto& [key, value] : obj.items()) {
      if (key.starts_with(kPredPrefix) && value.is_string() && !value.get<std::string>().empty())
        r.pred_mask_paths[key.substr(kPredPrefix.size())] = detail::resolve(base_dir, value.get<std::string>());
    }
    if (auto c = str("class"); !c.empty()) r.class_label = c;
    m.records.push_back(std::move(r));
  }
  detail::finalize(m);
  return m;
}

// Relative paths are resolved against the manifest's directory.
inline AuditManifest load_manifest(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::MissingFile, path.string());
  const auto base = path.parent_path();
  auto ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  if (ext == ".json") return parse_json_manifest(in, base);
  return parse_csv_manifest(in, base);
}

// Masks at a different resolution than their image are accepted when the aspect ratio agrees
// within 1%; anything else cannot be aligned.
inline bool alignable(Size image, Size mask) {
  if (image == mask) return true;
  const double ri = static_cast<double>(image.width) / image.height;
  const double rm = static_cast<double>(mask.width) / mask.height;
  return std::abs(ri - rm) <= 0.01 * ri;
}

inline BinaryMask load_mask(const fs::path& path, Size image_size, Size target) {
  const auto raw = io::read_gray(path);
  if (!alignable(image_size, raw.size()))
    throw Error(ErrorKind::DimensionMismatch,
                path.string() + ": mask " + to_string(raw.size()) + " vs image " + to_string(image_size));
  return binarize(resize_nearest(raw, target));
}

inline LoadedRecord load_record(const ImageRecord& rec, Size target) {
  LoadedRecord out;
  const auto raw = io::read_rgb(rec.image_path);
  out.image = resize_bilinear(raw, target);
  out.gt = load_mask(rec.gt_mask_path, raw.size(), target);
  for (const auto& [model, path] : rec.pred_mask_paths) {
    out.predictions.emplace(model, load_mask(path, raw.size(), target));
  }
  require_same_size(out.image.size(), out.gt.size(), "ground-truth mask");
  for (const auto& [model, mask] : out.predictions) {
    require_same_size(out.image.size(), mask.size(), ("prediction '" + model + "'").c_str());
  }
  out.gt_empty = out.gt.all_false();
  out.gt_full = out.gt.all_true();
  return out;
}

}  // namespace skinaudit::ingest
