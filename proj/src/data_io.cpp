#include "ttn/data_io.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "binary_io.hpp"
#include "ttn/errors.hpp"

namespace ttn {

namespace {

constexpr std::uint32_t kIdxImagesMagic = 0x00000803;  // 2051
constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;  // 2049
constexpr std::size_t kCifarRecord = 3073;             // 1 label byte + 3 * 1024 pixels

std::uint32_t read_u32_be(std::span<const std::uint8_t> bytes, std::size_t pos,
                          const std::string& path, const char* what) {
  if (pos + 4 > bytes.size()) {
    throw FormatError("truncated IDX file " + path + ": need 4 bytes for " + what + " at byte " +
                      std::to_string(pos));
  }
  return (static_cast<std::uint32_t>(bytes[pos]) << 24) |
         (static_cast<std::uint32_t>(bytes[pos + 1]) << 16) |
         (static_cast<std::uint32_t>(bytes[pos + 2]) << 8) |
         static_cast<std::uint32_t>(bytes[pos + 3]);
}

}  // namespace

RawImageSet load_mnist_idx(const std::string& images_path, const std::string& labels_path) {
  const auto image_bytes = detail::read_file_bytes(images_path);
  const std::uint32_t image_magic = read_u32_be(image_bytes, 0, images_path, "magic");
  if (image_magic != kIdxImagesMagic) {
    throw FormatError("bad IDX magic in " + images_path + ": got " + std::to_string(image_magic) +
                      ", expected " + std::to_string(kIdxImagesMagic) + " (images)");
  }
  const std::uint32_t count = read_u32_be(image_bytes, 4, images_path, "image count");
  const std::uint32_t rows = read_u32_be(image_bytes, 8, images_path, "row count");
  const std::uint32_t cols = read_u32_be(image_bytes, 12, images_path, "column count");
  const std::size_t pixels = static_cast<std::size_t>(rows) * cols;
  const std::size_t expected = 16 + static_cast<std::size_t>(count) * pixels;
  if (image_bytes.size() < expected) {
    throw FormatError("truncated IDX payload in " + images_path + ": file has " +
                      std::to_string(image_bytes.size()) + " bytes, header implies " +
                      std::to_string(expected));
  }

  const auto label_bytes = detail::read_file_bytes(labels_path);
  const std::uint32_t label_magic = read_u32_be(label_bytes, 0, labels_path, "magic");
  if (label_magic != kIdxLabelsMagic) {
    throw FormatError("bad IDX magic in " + labels_path + ": got " + std::to_string(label_magic) +
                      ", expected " + std::to_string(kIdxLabelsMagic) + " (labels)");
  }
  const std::uint32_t label_count = read_u32_be(label_bytes, 4, labels_path, "label count");
  if (label_bytes.size() < 8 + static_cast<std::size_t>(label_count)) {
    throw FormatError("truncated IDX payload in " + labels_path);
  }
  if (label_count != count) {
    throw FormatError("image count " + std::to_string(count) + " in " + images_path +
                      " does not match label count " + std::to_string(label_count) + " in " +
                      labels_path);
  }

  RawImageSet set;
  set.height = rows;
  set.width = cols;
  set.channels = 1;
  set.source = images_path;
  set.images.reserve(count);
  set.labels.reserve(count);
  for (std::size_t n = 0; n < count; ++n) {
    const std::uint8_t* begin = image_bytes.data() + 16 + n * pixels;
    set.images.emplace_back(begin, begin + pixels);
    set.labels.push_back(label_bytes[8 + n]);
  }
  return set;
}

RawImageSet load_cifar10(const std::vector<std::string>& batch_paths) {
  if (batch_paths.empty()) throw DomainError("no CIFAR batch files given");
  RawImageSet set;
  set.height = 32;
  set.width = 32;
  set.channels = 3;
  set.source = batch_paths.front();
  for (const auto& path : batch_paths) {
    const auto bytes = detail::read_file_bytes(path);
    if (bytes.size() % kCifarRecord != 0) {
      throw FormatError("CIFAR batch " + path + " has " + std::to_string(bytes.size()) +
                        " bytes, not a multiple of " + std::to_string(kCifarRecord) +
                        "; first partial record at byte " +
                        std::to_string(bytes.size() - bytes.size() % kCifarRecord));
    }
    const std::size_t records = bytes.size() / kCifarRecord;
    for (std::size_t r = 0; r < records; ++r) {
      const std::uint8_t* rec = bytes.data() + r * kCifarRecord;
      if (rec[0] > 9) {
        throw FormatError("CIFAR batch " + path + " has label byte " + std::to_string(rec[0]) +
                          " at byte " + std::to_string(r * kCifarRecord));
      }
      set.labels.push_back(rec[0]);
      set.images.emplace_back(rec + 1, rec + kCifarRecord);
    }
  }
  return set;
}

std::vector<std::uint8_t> to_grayscale(std::span<const std::uint8_t> rgb_planes,
                                       std::size_t pixel_count, const GrayscaleWeights& w) {
  if (rgb_planes.size() != 3 * pixel_count) {
    throw ShapeError("RGB image must hold 3 planes of " + std::to_string(pixel_count) + " pixels");
  }
  std::vector<std::uint8_t> gray(pixel_count);
  for (std::size_t p = 0; p < pixel_count; ++p) {
    const double y = w.r * rgb_planes[p] + w.g * rgb_planes[pixel_count + p] +
                     w.b * rgb_planes[2 * pixel_count + p];
    gray[p] = static_cast<std::uint8_t>(std::clamp<long>(std::llround(y), 0, 255));
  }
  return gray;
}

std::vector<std::uint8_t> rescale(std::span<const std::uint8_t> image, std::size_t src_height,
                                  std::size_t src_width, std::size_t target_side,
                                  Interpolation kind) {
  if (target_side == 0) throw DomainError("rescale target side must be positive");
  if (image.size() != src_height * src_width) {
    throw ShapeError("image byte count does not match its dimensions");
  }
  if (src_height == target_side && src_width == target_side) {
    return std::vector<std::uint8_t>(image.begin(), image.end());
  }

  std::vector<std::uint8_t> out(target_side * target_side);
  const double sy = static_cast<double>(src_height) / static_cast<double>(target_side);
  const double sx = static_cast<double>(src_width) / static_cast<double>(target_side);
  for (std::size_t i = 0; i < target_side; ++i) {
    // Pixel-center alignment: output center (i + 0.5) maps into source units.
    const double y = std::clamp((static_cast<double>(i) + 0.5) * sy - 0.5, 0.0,
                                static_cast<double>(src_height - 1));
    for (std::size_t j = 0; j < target_side; ++j) {
      const double x = std::clamp((static_cast<double>(j) + 0.5) * sx - 0.5, 0.0,
                                  static_cast<double>(src_width - 1));
      double value = 0.0;
      if (kind == Interpolation::Nearest) {
        const std::size_t yi = static_cast<std::size_t>(std::llround(y));
        const std::size_t xi = static_cast<std::size_t>(std::llround(x));
        value = image[yi * src_width + xi];
      } else {
        const std::size_t y0 = static_cast<std::size_t>(y);
        const std::size_t x0 = static_cast<std::size_t>(x);
        const std::size_t y1 = std::min(y0 + 1, src_height - 1);
        const std::size_t x1 = std::min(x0 + 1, src_width - 1);
        const double fy = y - static_cast<double>(y0);
        const double fx = x - static_cast<double>(x0);
        value = (1 - fy) * ((1 - fx) * image[y0 * src_width + x0] +
                            fx * image[y0 * src_width + x1]) +
                fy * ((1 - fx) * image[y1 * src_width + x0] + fx * image[y1 * src_width + x1]);
      }
      out[i * target_side + j] =
          static_cast<std::uint8_t>(std::clamp<long>(std::llround(value), 0, 255));
    }
  }
  return out;
}

Dataset build_dataset(const RawImageSet& raw, const DatasetOptions& opts) {
  if (raw.size() != raw.labels.size()) {
    throw ShapeError("raw image count does not match label count");
  }
  FeatureConfig feature{opts.d, opts.angle_factor};
  feature.validate();

  const bool filtered = !opts.class_filter.empty();
  auto keep_class = [&](int label) {
    return !filtered || std::find(opts.class_filter.begin(), opts.class_filter.end(), label) !=
                            opts.class_filter.end();
  };

  Dataset data;
  data.side = opts.side;
  data.d = opts.d;
  std::map<int, std::size_t> taken;
  const std::size_t pixel_count = raw.height * raw.width;
  for (std::size_t n = 0; n < raw.size(); ++n) {
    const int label = raw.labels[n];
    if (!keep_class(label)) continue;
    if (opts.samples_per_class > 0 && taken[label] >= opts.samples_per_class) continue;
    ++taken[label];

    std::vector<std::uint8_t> gray;
    if (raw.channels == 3) {
      gray = to_grayscale(raw.images[n], pixel_count, opts.grayscale);
    } else if (raw.channels == 1) {
      gray.assign(raw.images[n].begin(), raw.images[n].end());
    } else {
      throw ShapeError("unsupported channel count " + std::to_string(raw.channels));
    }
    const std::vector<std::uint8_t> sized =
        rescale(gray, raw.height, raw.width, opts.side, opts.interpolation);

    std::vector<double> pixels(sized.size());
    for (std::size_t p = 0; p < sized.size(); ++p) {
      pixels[p] = std::clamp(sized[p] * opts.pixel_scale, 0.0, 1.0);
    }
    data.samples.push_back(vectorize_image(pixels, opts.side, feature));
    data.labels.push_back(opts.binary_positive ? (label == *opts.binary_positive ? 0 : 1) : label);
  }
  if (data.samples.empty()) {
    throw DomainError("dataset selection is empty (class filter or caps removed every sample)");
  }
  return data;
}

namespace {
constexpr std::array<std::uint8_t, 4> kCacheMagic = {'T', 'T', 'N', 'D'};
constexpr std::uint32_t kCacheVersion = 1;
}  // namespace

void save_dataset_cache(const Dataset& data, const std::string& path) {
  if (data.samples.empty()) throw DomainError("refusing to cache an empty dataset");
  std::vector<std::uint8_t> bytes;
  bytes.insert(bytes.end(), kCacheMagic.begin(), kCacheMagic.end());
  detail::append_u32(bytes, kCacheVersion);
  detail::append_u32(bytes, static_cast<std::uint32_t>(data.size()));
  for (int label : data.labels) detail::append_u32(bytes, static_cast<std::uint32_t>(label));
  // One tensor record (samples, side, side, d) in the model-file payload encoding.
  detail::append_u32(bytes, 4);
  detail::append_u32(bytes, static_cast<std::uint32_t>(data.size()));
  detail::append_u32(bytes, static_cast<std::uint32_t>(data.side));
  detail::append_u32(bytes, static_cast<std::uint32_t>(data.side));
  detail::append_u32(bytes, static_cast<std::uint32_t>(data.d));
  for (const auto& sample : data.samples) {
    if (sample.side != data.side || sample.d != data.d) {
      throw ShapeError("dataset sample geometry is inconsistent");
    }
    for (double v : sample.values) detail::append_f64(bytes, v);
  }
  detail::append_u32(bytes, detail::crc32(bytes));
  detail::write_file_bytes(path, bytes);
}

Dataset load_dataset_cache(const std::string& path) {
  const auto bytes = detail::read_file_bytes(path);
  detail::Cursor cur{bytes};
  cur.need(4, "magic");
  if (!std::equal(kCacheMagic.begin(), kCacheMagic.end(), bytes.begin())) {
    throw FormatError("bad magic at byte 0 of " + path + ": expected \"TTND\"");
  }
  cur.pos = 4;
  const std::uint32_t version = cur.u32("cache version");
  if (version != kCacheVersion) {
    throw FormatError("unsupported dataset cache version " + std::to_string(version));
  }
  const std::uint32_t count = cur.u32("sample count");
  Dataset data;
  data.labels.reserve(count);
  for (std::uint32_t n = 0; n < count; ++n) {
    data.labels.push_back(static_cast<int>(cur.u32("label")));
  }
  const std::uint32_t rank = cur.u32("tensor rank");
  if (rank != 4) throw FormatError("dataset cache tensor must have rank 4");
  const std::uint32_t stored_count = cur.u32("tensor samples");
  const std::uint32_t side = cur.u32("tensor side");
  const std::uint32_t side2 = cur.u32("tensor side (repeat)");
  const std::uint32_t d = cur.u32("tensor feature dim");
  if (stored_count != count || side != side2) {
    throw FormatError("dataset cache header is inconsistent in " + path);
  }
  data.side = side;
  data.d = d;
  data.samples.reserve(count);
  for (std::uint32_t n = 0; n < count; ++n) {
    VectorizedImage image;
    image.side = side;
    image.d = d;
    image.values.resize(static_cast<std::size_t>(side) * side * d);
    for (double& v : image.values) v = cur.f64("sample payload");
    data.samples.push_back(std::move(image));
  }
  detail::finish_crc(cur, path);
  return data;
}

}  // namespace ttn
