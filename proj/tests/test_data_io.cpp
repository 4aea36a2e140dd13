#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "ttn/data_io.hpp"
#include "ttn/errors.hpp"

using ttn::Dataset;
using ttn::DatasetOptions;
using ttn::Interpolation;
using ttn::RawImageSet;

namespace {

const std::string kFixtureDir = TTN_FIXTURE_DIR;

std::filesystem::path scratch_dir() {
  auto dir = std::filesystem::temp_directory_path() / "ttn_data_io_tests";
  std::filesystem::create_directories(dir);
  return dir;
}

std::filesystem::path write_bytes(const char* name, const std::vector<std::uint8_t>& bytes) {
  auto path = scratch_dir() / name;
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  return path;
}

void be32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 24));
  out.push_back(static_cast<std::uint8_t>(v >> 16));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

}  // namespace

TEST_CASE("load_mnist_idx: golden fixture decodes byte-exactly") {
  auto set = ttn::load_mnist_idx(kFixtureDir + "/tiny-images-idx3-ubyte",
                                 kFixtureDir + "/tiny-labels-idx1-ubyte");
  REQUIRE(set.size() == 3);
  CHECK(set.height == 4);
  CHECK(set.width == 4);
  CHECK(set.channels == 1);
  CHECK(set.labels == std::vector<int>{7, 1, 9});
  for (std::size_t i = 0; i < 16; ++i) {
    CHECK(set.images[0][i] == static_cast<std::uint8_t>(i));
    CHECK(set.images[1][i] == static_cast<std::uint8_t>(100 + i));
    CHECK(set.images[2][i] == static_cast<std::uint8_t>(240 + i));
  }
}

TEST_CASE("load_mnist_idx: swapped files report both magics") {
  try {
    ttn::load_mnist_idx(kFixtureDir + "/tiny-labels-idx1-ubyte",
                        kFixtureDir + "/tiny-images-idx3-ubyte");
    FAIL("expected a format error");
  } catch (const ttn::FormatError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("2049") != std::string::npos);
    CHECK(msg.find("2051") != std::string::npos);
  }
}

TEST_CASE("load_mnist_idx: truncation and count mismatches are format errors") {
  std::vector<std::uint8_t> img;
  be32(img, 0x803);
  be32(img, 2);
  be32(img, 2);
  be32(img, 2);
  img.insert(img.end(), {1, 2, 3, 4, 5});  // needs 8 payload bytes, has 5
  auto img_path = write_bytes("trunc-images", img);

  std::vector<std::uint8_t> lab;
  be32(lab, 0x801);
  be32(lab, 2);
  lab.insert(lab.end(), {0, 1});
  auto lab_path = write_bytes("ok-labels", lab);
  CHECK_THROWS_AS(ttn::load_mnist_idx(img_path.string(), lab_path.string()), ttn::FormatError);

  img.insert(img.end(), {6, 7, 8});  // now complete
  img_path = write_bytes("ok-images", img);
  std::vector<std::uint8_t> lab3;
  be32(lab3, 0x801);
  be32(lab3, 3);
  lab3.insert(lab3.end(), {0, 1, 2});
  auto lab3_path = write_bytes("three-labels", lab3);
  try {
    ttn::load_mnist_idx(img_path.string(), lab3_path.string());
    FAIL("expected a format error");
  } catch (const ttn::FormatError& e) {
    const std::string msg = e.what();
    CHECK(msg.find('2') != std::string::npos);
    CHECK(msg.find('3') != std::string::npos);
  }
}

TEST_CASE("load_cifar10: golden fixture decodes byte-exactly") {
  auto set = ttn::load_cifar10({kFixtureDir + "/tiny_cifar.bin"});
  REQUIRE(set.size() == 2);
  CHECK(set.height == 32);
  CHECK(set.width == 32);
  CHECK(set.channels == 3);
  CHECK(set.labels == std::vector<int>{3, 9});
  CHECK(set.images[0][0] == 10);          // R plane
  CHECK(set.images[0][1024] == 20);       // G plane
  CHECK(set.images[0][2048] == 30);       // B plane
  CHECK(set.images[1][5] == (5 * 7 + 5) % 256);
  CHECK(set.images[1][1024 + 5] == (5 * 3 + 1) % 256);

  // Loading the same batch twice doubles the record count.
  auto doubled = ttn::load_cifar10(
      {kFixtureDir + "/tiny_cifar.bin", kFixtureDir + "/tiny_cifar.bin"});
  CHECK(doubled.size() == 4);
}

TEST_CASE("load_cifar10: truncated batches report the offending offset") {
  std::vector<std::uint8_t> bytes(3073 + 100, 0);
  auto path = write_bytes("trunc_cifar.bin", bytes);
  try {
    ttn::load_cifar10({path.string()});
    FAIL("expected a format error");
  } catch (const ttn::FormatError& e) {
    CHECK(std::string(e.what()).find("3073") != std::string::npos);
  }
}

TEST_CASE("to_grayscale: ITU weights with rounding") {
  std::vector<std::uint8_t> white(3, 255), black(3, 0), red = {255, 0, 0};
  CHECK(ttn::to_grayscale(white, 1)[0] == 255);
  CHECK(ttn::to_grayscale(black, 1)[0] == 0);
  CHECK(ttn::to_grayscale(red, 1)[0] == 76);  // round(0.299 * 255) = round(76.245)
}

TEST_CASE("rescale: constants, identity, and the checkerboard expansion") {
  const std::vector<std::uint8_t> constant(49, 137);
  auto scaled = ttn::rescale(constant, 7, 7, 4);
  CHECK(scaled.size() == 16);
  for (auto b : scaled) CHECK(b == 137);

  const std::vector<std::uint8_t> any = {9, 8, 7, 6};
  auto same = ttn::rescale(any, 2, 2, 2);
  CHECK(same == any);

  // 2x2 checkerboard up to 4x4: output centers at source coordinates
  // -0.25, 0.25, 0.75, 1.25 clamp to [0, 1]; corners keep the extremes and
  // interior pixels are strict convex combinations.
  const std::vector<std::uint8_t> board = {0, 255, 255, 0};
  auto big = ttn::rescale(board, 2, 2, 4);
  REQUIRE(big.size() == 16);
  CHECK(big[0] == 0);
  CHECK(big[3] == 255);
  CHECK(big[12] == 255);
  CHECK(big[15] == 0);
  // Hand-evaluated bilinear values at the mixed coordinates.
  CHECK(big[1] == 64);   // (0, 0.25): 0.75*0 + 0.25*255 = 63.75
  CHECK(big[5] == 96);   // (0.25, 0.25): 0.5625*0+0.1875*255+0.1875*255+0.0625*0 = 95.6
  for (std::size_t i = 0; i < 16; ++i) {
    if (i == 0 || i == 3 || i == 12 || i == 15) continue;
    CHECK(big[i] > 0);
    CHECK(big[i] < 255);
  }

  // Nearest-neighbor keeps source bytes only.
  auto nn = ttn::rescale(board, 2, 2, 4, Interpolation::Nearest);
  for (auto b : nn) CHECK((b == 0 || b == 255));

  CHECK_THROWS_AS(ttn::rescale(board, 2, 2, 0), ttn::DomainError);
}

TEST_CASE("build_dataset: full pipeline on an all-zero image") {
  RawImageSet raw;
  raw.height = 8;
  raw.width = 8;
  raw.channels = 1;
  raw.images.push_back(std::vector<std::uint8_t>(64, 0));
  raw.labels.push_back(5);

  DatasetOptions opts;
  opts.d = 2;
  opts.side = 16;
  auto data = ttn::build_dataset(raw, opts);
  REQUIRE(data.size() == 1);
  CHECK(data.side == 16);
  const auto& img = data.samples[0];
  for (std::size_t p = 0; p < 256; ++p) {
    CHECK(img.values[2 * p] == 1.0);
    CHECK(img.values[2 * p + 1] == 0.0);
  }
}

TEST_CASE("build_dataset: filtering, caps, relabeling, and unit norms") {
  auto raw = ttn::load_mnist_idx(kFixtureDir + "/tiny-images-idx3-ubyte",
                                 kFixtureDir + "/tiny-labels-idx1-ubyte");
  DatasetOptions opts;
  opts.d = 3;
  opts.side = 4;
  opts.class_filter = {7, 9};
  opts.binary_positive = 9;
  auto data = ttn::build_dataset(raw, opts);
  REQUIRE(data.size() == 2);
  CHECK(data.labels == std::vector<int>{1, 0});  // 7 -> negative, 9 -> positive

  for (const auto& sample : data.samples) {
    for (std::size_t p = 0; p < 16; ++p) {
      double norm2 = 0.0;
      for (std::size_t s = 0; s < 3; ++s) {
        const double v = sample.values[p * 3 + s];
        norm2 += v * v;
      }
      CHECK(std::abs(std::sqrt(norm2) - 1.0) <= 1e-12);
    }
  }

  opts.class_filter = {1};
  opts.samples_per_class = 0;
  opts.binary_positive.reset();
  auto only1 = ttn::build_dataset(raw, opts);
  CHECK(only1.size() == 1);
  CHECK(only1.labels[0] == 1);

  opts.class_filter = {4};
  CHECK_THROWS_AS(ttn::build_dataset(raw, opts), ttn::DomainError);
}

TEST_CASE("build_dataset: deterministic bit-identical outputs") {
  auto raw = ttn::load_cifar10({kFixtureDir + "/tiny_cifar.bin"});
  DatasetOptions opts;
  opts.d = 2;
  opts.side = 32;
  auto a = ttn::build_dataset(raw, opts);
  auto b = ttn::build_dataset(raw, opts);
  REQUIRE(a.size() == b.size());
  for (std::size_t n = 0; n < a.size(); ++n) {
    REQUIRE(a.samples[n].values.size() == b.samples[n].values.size());
    for (std::size_t i = 0; i < a.samples[n].values.size(); ++i) {
      CHECK(a.samples[n].values[i] == b.samples[n].values[i]);
    }
  }
}

TEST_CASE("dataset cache: round trip and corruption detection") {
  auto raw = ttn::load_mnist_idx(kFixtureDir + "/tiny-images-idx3-ubyte",
                                 kFixtureDir + "/tiny-labels-idx1-ubyte");
  DatasetOptions opts;
  opts.d = 2;
  opts.side = 4;
  auto data = ttn::build_dataset(raw, opts);

  auto path = scratch_dir() / "cache.ttnd";
  ttn::save_dataset_cache(data, path.string());
  auto loaded = ttn::load_dataset_cache(path.string());
  CHECK(loaded.side == data.side);
  CHECK(loaded.d == data.d);
  CHECK(loaded.labels == data.labels);
  REQUIRE(loaded.size() == data.size());
  for (std::size_t n = 0; n < data.size(); ++n) {
    for (std::size_t i = 0; i < data.samples[n].values.size(); ++i) {
      CHECK(loaded.samples[n].values[i] == data.samples[n].values[i]);
    }
  }

  {
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(30);
    f.put(0x7F);
  }
  CHECK_THROWS_AS(ttn::load_dataset_cache(path.string()), ttn::FormatError);
}

TEST_CASE("real MNIST counts when a data directory is available") {
  const char* dir = std::getenv("TTN_DATA_DIR");
  if (dir == nullptr) return;  // no data mounted; covered by the fixtures above
  const std::string base = dir;
  if (!std::filesystem::exists(base + "/train-images-idx3-ubyte")) return;
  auto train = ttn::load_mnist_idx(base + "/train-images-idx3-ubyte",
                                   base + "/train-labels-idx1-ubyte");
  CHECK(train.size() == 60000);
  CHECK(train.height == 28);
  auto test = ttn::load_mnist_idx(base + "/t10k-images-idx3-ubyte",
                                  base + "/t10k-labels-idx1-ubyte");
  CHECK(test.size() == 10000);
}
