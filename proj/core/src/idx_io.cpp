// Copyright (c) barrier-blo contributors
#include <cstdint>
#include <fstream>
#include <vector>

#include "barrier_blo/problems.hpp"

namespace bblo {

namespace {

constexpr std::uint32_t kImageMagic = 0x00000803;
constexpr std::uint32_t kLabelMagic = 0x00000801;

std::vector<unsigned char> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("load_idx: cannot open '" + path + "'");
  }
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  if (in.bad()) {
    throw IoError("load_idx: read failure on '" + path + "'");
  }
  return bytes;
}

std::uint32_t read_u32_be(const std::vector<unsigned char>& bytes, std::size_t offset,
                          const std::string& path) {
  if (offset + 4 > bytes.size()) {
    throw IdxFormatError("load_idx: truncated header in '" + path + "'");
  }
  return (static_cast<std::uint32_t>(bytes[offset]) << 24) |
         (static_cast<std::uint32_t>(bytes[offset + 1]) << 16) |
         (static_cast<std::uint32_t>(bytes[offset + 2]) << 8) |
         static_cast<std::uint32_t>(bytes[offset + 3]);
}

}  // namespace

Dataset load_idx(const std::string& images_path, const std::string& labels_path,
                 std::size_t limit) {
  const std::vector<unsigned char> img = read_file(images_path);
  if (read_u32_be(img, 0, images_path) != kImageMagic) {
    throw IdxFormatError("load_idx: bad image magic in '" + images_path + "'");
  }
  const std::uint32_t count = read_u32_be(img, 4, images_path);
  const std::uint32_t rows = read_u32_be(img, 8, images_path);
  const std::uint32_t cols = read_u32_be(img, 12, images_path);
  const std::size_t pixels = static_cast<std::size_t>(rows) * cols;
  if (img.size() < 16 + static_cast<std::size_t>(count) * pixels) {
    throw IdxFormatError("load_idx: truncated image payload in '" + images_path + "'");
  }

  const std::vector<unsigned char> lab = read_file(labels_path);
  if (read_u32_be(lab, 0, labels_path) != kLabelMagic) {
    throw IdxFormatError("load_idx: bad label magic in '" + labels_path + "'");
  }
  const std::uint32_t label_count = read_u32_be(lab, 4, labels_path);
  if (label_count != count) {
    throw IdxFormatError("load_idx: image/label count mismatch");
  }
  if (lab.size() < 8 + static_cast<std::size_t>(label_count)) {
    throw IdxFormatError("load_idx: truncated label payload in '" + labels_path + "'");
  }

  const std::size_t take = std::min<std::size_t>(limit, count);
  Dataset ds;
  ds.features.resize(static_cast<Eigen::Index>(take), static_cast<Eigen::Index>(pixels));
  ds.labels.resize(static_cast<Eigen::Index>(take));
  ds.corrupted_mask.assign(take, false);
  for (std::size_t i = 0; i < take; ++i) {
    const std::size_t base = 16 + i * pixels;
    for (std::size_t p = 0; p < pixels; ++p) {
      ds.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(p)) =
          static_cast<double>(img[base + p]) / 255.0;
    }
    ds.labels(static_cast<Eigen::Index>(i)) = static_cast<int>(lab[8 + i]);
  }
  return ds;
}

}  // namespace bblo
