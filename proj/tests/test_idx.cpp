// Copyright (c) barrier-blo contributors
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <vector>

#include <barrier_blo/problems.hpp>

using namespace bblo;
namespace fs = std::filesystem;

namespace {

void put_u32_be(std::vector<unsigned char>& bytes, std::uint32_t v) {
  bytes.push_back(static_cast<unsigned char>((v >> 24) & 0xff));
  bytes.push_back(static_cast<unsigned char>((v >> 16) & 0xff));
  bytes.push_back(static_cast<unsigned char>((v >> 8) & 0xff));
  bytes.push_back(static_cast<unsigned char>(v & 0xff));
}

fs::path write_bytes(const fs::path& name, const std::vector<unsigned char>& bytes) {
  const fs::path path = fs::temp_directory_path() / name;
  std::ofstream out(path, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  return path;
}

struct Fixture {
  fs::path images;
  fs::path labels;
};

// two 3x3 images with pixel values 0..17, labels {3, 7}
Fixture make_fixture(std::uint32_t image_magic = 0x00000803,
                     std::uint32_t label_magic = 0x00000801, std::uint32_t label_count = 2,
                     bool truncate_images = false) {
  std::vector<unsigned char> img;
  put_u32_be(img, image_magic);
  put_u32_be(img, 2);
  put_u32_be(img, 3);
  put_u32_be(img, 3);
  for (int i = 0; i < 18; ++i) img.push_back(static_cast<unsigned char>(i));
  if (truncate_images) img.resize(img.size() - 5);

  std::vector<unsigned char> lab;
  put_u32_be(lab, label_magic);
  put_u32_be(lab, label_count);
  lab.push_back(3);
  lab.push_back(7);

  return {write_bytes("bblo_idx_images.bin", img), write_bytes("bblo_idx_labels.bin", lab)};
}

}  // namespace

TEST_CASE("hand-built fixture parses with known values") {
  const Fixture fx = make_fixture();
  const Dataset ds = load_idx(fx.images.string(), fx.labels.string(), 10);
  REQUIRE(ds.size() == 2);
  CHECK(ds.features.cols() == 9);
  CHECK(ds.features(0, 0) == 0.0);
  CHECK(ds.features(0, 5) == doctest::Approx(5.0 / 255.0));
  CHECK(ds.features(1, 8) == doctest::Approx(17.0 / 255.0));
  CHECK(ds.labels(0) == 3);
  CHECK(ds.labels(1) == 7);
  CHECK(ds.corrupted_mask == std::vector<bool>(2, false));
}

TEST_CASE("limit truncates and zero gives an empty dataset") {
  const Fixture fx = make_fixture();
  CHECK(load_idx(fx.images.string(), fx.labels.string(), 1).size() == 1);
  const Dataset empty = load_idx(fx.images.string(), fx.labels.string(), 0);
  CHECK(empty.size() == 0);
  CHECK(empty.features.rows() == 0);
}

TEST_CASE("format errors") {
  SUBCASE("wrong image magic") {
    const Fixture fx = make_fixture(0x00000804);
    CHECK_THROWS_AS(load_idx(fx.images.string(), fx.labels.string(), 2), IdxFormatError);
  }
  SUBCASE("wrong label magic") {
    const Fixture fx = make_fixture(0x00000803, 0x00000802);
    CHECK_THROWS_AS(load_idx(fx.images.string(), fx.labels.string(), 2), IdxFormatError);
  }
  SUBCASE("count mismatch") {
    const Fixture fx = make_fixture(0x00000803, 0x00000801, 3);
    CHECK_THROWS_AS(load_idx(fx.images.string(), fx.labels.string(), 2), IdxFormatError);
  }
  SUBCASE("truncated payload") {
    const Fixture fx = make_fixture(0x00000803, 0x00000801, 2, true);
    CHECK_THROWS_AS(load_idx(fx.images.string(), fx.labels.string(), 2), IdxFormatError);
  }
}

TEST_CASE("missing file raises an io error") {
  const Fixture fx = make_fixture();
  CHECK_THROWS_AS(load_idx("/nonexistent/images.bin", fx.labels.string(), 2), IoError);
  CHECK_THROWS_AS(load_idx(fx.images.string(), "/nonexistent/labels.bin", 2), IoError);
}

TEST_CASE("loaded datasets compose into a hyper-cleaning problem") {
  const Fixture fx = make_fixture();
  const Dataset ds = load_idx(fx.images.string(), fx.labels.string(), 2);
  DhcData data{ds, ds, ds};
  const DhcProblem problem(std::move(data), /*num_classes=*/8, /*reg_coeff=*/1e-3);
  const Dims dims = problem.dims();
  CHECK(dims.n == 2);
  CHECK(dims.m == 8 * 9);
  const ProblemEval eval = evaluate(problem, Iterate::zero(dims.n, dims.m));
  CHECK(std::isfinite(eval.f));
  CHECK(eval.h >= 0.0);
}
