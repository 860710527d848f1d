#pragma once

// PNG (libpng simplified API) and JPEG (libjpeg) raster codecs.

#include <csetjmp>
#include <cstdio>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include <jpeglib.h>
#include <png.h>

#include "skinaudit/error.hpp"
#include "skinaudit/image.hpp"

namespace skinaudit::io {

namespace detail {

inline bool has_png_signature(const std::filesystem::path& path) {
  std::unique_ptr<std::FILE, decltype(&std::fclose)> f(std::fopen(path.c_str(), "rb"), &std::fclose);
  if (!f) throw Error(ErrorKind::MissingFile, path.string());
  unsigned char sig[8] = {};
  const auto n = std::fread(sig, 1, sizeof sig, f.get());
  return n == sizeof sig && png_sig_cmp(sig, 0, sizeof sig) == 0;
}

// Decodes into `format` (PNG_FORMAT_RGB or PNG_FORMAT_GRAY); returns raw bytes.
inline std::vector<std::uint8_t> read_png(const std::filesystem::path& path, png_uint_32 format,
                                          Size& size) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.c_str())) {
    throw Error(ErrorKind::Decode, path.string() + ": " + image.message);
  }
  image.format = format;
  std::vector<std::uint8_t> buf(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buf.data(), 0, nullptr)) {
    std::string msg = image.message;
    png_image_free(&image);
    throw Error(ErrorKind::Decode, path.string() + ": " + msg);
  }
  size = {static_cast<int>(image.width), static_cast<int>(image.height)};
  return buf;
}

struct JpegErrorManager {
  jpeg_error_mgr pub;
  std::jmp_buf jump;
  char message[JMSG_LENGTH_MAX];
};

inline void jpeg_error_exit(j_common_ptr cinfo) {
  auto* err = reinterpret_cast<JpegErrorManager*>(cinfo->err);
  (*cinfo->err->format_message)(cinfo, err->message);
  std::longjmp(err->jump, 1);
}

// Decodes to 3 channels (grayscale JPEGs are expanded).
inline std::vector<std::uint8_t> read_jpeg_rgb(const std::filesystem::path& path, Size& size) {
  std::unique_ptr<std::FILE, decltype(&std::fclose)> f(std::fopen(path.c_str(), "rb"), &std::fclose);
  if (!f) throw Error(ErrorKind::MissingFile, path.string());

  jpeg_decompress_struct cinfo{};
  JpegErrorManager jerr{};
  cinfo.err = jpeg_std_error(&jerr.pub);
  jerr.pub.error_exit = jpeg_error_exit;
  std::vector<std::uint8_t> buf;
  if (setjmp(jerr.jump)) {
    jpeg_destroy_decompress(&cinfo);
    throw Error(ErrorKind::Decode, path.string() + ": " + jerr.message);
  }
  jpeg_create_decompress(&cinfo);
  jpeg_stdio_src(&cinfo, f.get());
  jpeg_read_header(&cinfo, TRUE);
  cinfo.out_color_space = JCS_RGB;
  jpeg_start_decompress(&cinfo);
  const auto stride = static_cast<std::size_t>(cinfo.output_width) * 3;
  buf.resize(stride * cinfo.output_height);
  while (cinfo.output_scanline < cinfo.output_height) {
    JSAMPROW row = buf.data() + stride * cinfo.output_scanline;
    jpeg_read_scanlines(&cinfo, &row, 1);
  }
  size = {static_cast<int>(cinfo.output_width), static_cast<int>(cinfo.output_height)};
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  return buf;
}

inline void require_exists(const std::filesystem::path& path) {
  if (!std::filesystem::is_regular_file(path)) throw Error(ErrorKind::MissingFile, path.string());
}

}  // namespace detail

// PNG or JPEG, detected by signature.
inline RgbImage read_rgb(const std::filesystem::path& path) {
  detail::require_exists(path);
  Size s;
  const auto bytes = detail::has_png_signature(path) ? detail::read_png(path, PNG_FORMAT_RGB, s)
                                                     : detail::read_jpeg_rgb(path, s);
  RgbImage img(s);
  for (std::size_t i = 0; i < img.pixel_count(); ++i) {
    img.pixels()[i] = {bytes[3 * i], bytes[3 * i + 1], bytes[3 * i + 2]};
  }
  return img;
}

// Single-channel 8-bit PNG; color PNGs are reduced to gray by libpng.
inline GrayImage read_gray(const std::filesystem::path& path) {
  detail::require_exists(path);
  if (!detail::has_png_signature(path)) {
    throw Error(ErrorKind::Decode, path.string() + ": masks must be PNG");
  }
  Size s;
  const auto bytes = detail::read_png(path, PNG_FORMAT_GRAY, s);
  GrayImage img(s);
  std::copy(bytes.begin(), bytes.end(), img.pixels().begin());
  return img;
}

inline void write_png(const std::filesystem::path& path, const GrayImage& img) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(img.width());
  image.height = static_cast<png_uint_32>(img.height());
  image.format = PNG_FORMAT_GRAY;
  if (!png_image_write_to_file(&image, path.c_str(), 0, img.pixels().data(), 0, nullptr)) {
    throw Error(ErrorKind::Io, path.string() + ": " + image.message);
  }
}

inline void write_png(const std::filesystem::path& path, const RgbImage& img) {
  std::vector<std::uint8_t> bytes;
  bytes.reserve(img.pixel_count() * 3);
  for (const auto& p : img.pixels()) bytes.insert(bytes.end(), p.begin(), p.end());
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(img.width());
  image.height = static_cast<png_uint_32>(img.height());
  image.format = PNG_FORMAT_RGB;
  if (!png_image_write_to_file(&image, path.c_str(), 0, bytes.data(), 0, nullptr)) {
    throw Error(ErrorKind::Io, path.string() + ": " + image.message);
  }
}

inline void write_png(const std::filesystem::path& path, const BinaryMask& mask) {
  write_png(path, mask.to_gray());
}

}  // namespace skinaudit::io
