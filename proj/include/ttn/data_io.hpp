#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ttn/dataset.hpp"
#include "ttn/feature_map.hpp"

namespace ttn {

// Raw byte images straight from disk, before any resampling or mapping.
// Multi-channel images are stored plane-major (all R, all G, all B).
struct RawImageSet {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t channels = 1;
  std::vector<std::vector<std::uint8_t>> images;
  std::vector<int> labels;
  std::string source;

  std::size_t size() const { return images.size(); }
};

// MNIST IDX pair: big-endian headers with magics 2051 (images) / 2049 (labels).
RawImageSet load_mnist_idx(const std::string& images_path, const std::string& labels_path);

// CIFAR-10 binary batches: 3073-byte records, 1 label byte + 3x1024 planes.
RawImageSet load_cifar10(const std::vector<std::string>& batch_paths);

struct GrayscaleWeights {
  double r = 0.299;
  double g = 0.587;
  double b = 0.114;
};

// Luminance conversion of a plane-major RGB image, rounded to bytes.
std::vector<std::uint8_t> to_grayscale(std::span<const std::uint8_t> rgb_planes,
                                       std::size_t pixel_count, const GrayscaleWeights& w = {});

enum class Interpolation { Bilinear, Nearest };

// Resamples a grayscale byte image to target_side x target_side with
// pixel-center alignment; bytes are clamped to [0, 255].
std::vector<std::uint8_t> rescale(std::span<const std::uint8_t> image, std::size_t src_height,
                                  std::size_t src_width, std::size_t target_side,
                                  Interpolation kind = Interpolation::Bilinear);

struct DatasetOptions {
  std::size_t d = 2;
  std::size_t side = 16;                // target side; images are rescaled to it
  std::vector<int> class_filter;        // empty keeps every class
  std::size_t samples_per_class = 0;    // 0 keeps all; otherwise first k per class in file order
  std::optional<int> binary_positive;   // relabel: positive -> 0, everything else -> 1
  GrayscaleWeights grayscale;
  Interpolation interpolation = Interpolation::Bilinear;
  double pixel_scale = 1.0 / 255.0;     // byte -> normalized pixel
  double angle_factor = kFeatureAngleFactor;
};

// grayscale -> rescale -> normalize -> feature map, per sample.
Dataset build_dataset(const RawImageSet& raw, const DatasetOptions& opts);

// Vectorized dataset cache (magic "TTND"): one tensor record in the model
// file's payload encoding plus the label list, CRC-trailed.
void save_dataset_cache(const Dataset& data, const std::string& path);
Dataset load_dataset_cache(const std::string& path);

}  // namespace ttn
