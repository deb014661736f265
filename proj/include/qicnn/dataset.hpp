#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "qicnn/network.hpp"
#include "qicnn/tensor.hpp"

namespace qicnn {

enum class Split : std::uint8_t { kTrain, kTest };

std::string_view to_string(Split s);

struct FileProvenance {
  std::string path;
  std::string sha256;
};

/// Labelled image set. Pixels are kept as the raw bytes read from disk and
/// exposed normalized to [0, 1] (byte / 255) through images() and gather().
class Dataset {
 public:
  Dataset() = default;
  Dataset(DatasetKind kind, Split split, std::size_t channels, std::size_t height,
          std::size_t width, std::vector<std::uint8_t> pixels, std::vector<int> labels);

  std::size_t size() const { return labels_.size(); }
  std::size_t channels() const { return channels_; }
  std::size_t height() const { return height_; }
  std::size_t width() const { return width_; }
  std::size_t image_size() const { return channels_ * height_ * width_; }
  DatasetKind kind() const { return kind_; }
  Split split() const { return split_; }

  const std::vector<int>& labels() const { return labels_; }
  std::span<const std::uint8_t> raw_pixels() const { return pixels_; }

  /// All images as [M,C,H,W] in [0, 1].
  Tensor images() const;
  /// Selected images as [n,C,H,W] in [0, 1].
  Tensor gather(std::span<const std::size_t> indices) const;
  std::vector<int> gather_labels(std::span<const std::size_t> indices) const;
  /// Copy holding only `indices`, in that order.
  Dataset select(std::span<const std::size_t> indices) const;

  std::array<std::size_t, 10> class_histogram() const;

  std::vector<FileProvenance> provenance;

 private:
  DatasetKind kind_ = DatasetKind::kMnist;
  Split split_ = Split::kTrain;
  std::size_t channels_ = 0, height_ = 0, width_ = 0;
  std::vector<std::uint8_t> pixels_;
  std::vector<int> labels_;
};

inline double normalize_pixel(std::uint8_t b) { return static_cast<double>(b) / 255.0; }
inline std::uint8_t denormalize_pixel(double v) {
  return static_cast<std::uint8_t>(v * 255.0 + 0.5);
}

/// Parses an IDX image file (magic 2051) and its label file (magic 2049).
Dataset load_mnist_idx(const std::filesystem::path& images_path,
                       const std::filesystem::path& labels_path, Split split = Split::kTrain);

/// Canonical file names inside `dir`: train-images-idx3-ubyte,
/// train-labels-idx1-ubyte, t10k-images-idx3-ubyte, t10k-labels-idx1-ubyte.
Dataset load_mnist(const std::filesystem::path& dir, Split split);

/// One CIFAR-10 binary batch file: 3073-byte records (label, then R, G, B
/// planes of 32x32).
Dataset load_cifar10_batch(const std::filesystem::path& path, Split split = Split::kTrain);

/// data_batch_1.bin .. data_batch_5.bin (train) or test_batch.bin (test),
/// each exactly 10000 records.
Dataset load_cifar10(const std::filesystem::path& dir, Split split);

Dataset load_dataset(DatasetKind kind, const std::filesystem::path& dir, Split split);

/// Name of the optional checksum manifest looked up next to the data files.
inline constexpr const char* kManifestName = "checksums.sha256";

std::string sha256_file(const std::filesystem::path& path);

/// Verifies every "<hex>  <file>" line of `manifest` against files in the
/// same directory. Throws DataError on the first mismatch.
void verify_manifest(const std::filesystem::path& manifest);

/// First n entries of the seeded permutation of `data`.
Dataset subset(const Dataset& data, std::size_t n, std::uint64_t seed);

/// Shuffled mini-batches; the permutation of epoch e is a pure function of
/// (seed, e).
class BatchIterator {
 public:
  BatchIterator(std::size_t count, std::size_t batch_size, std::uint64_t seed);

  void start_epoch(std::uint64_t epoch);
  /// Next batch of indices; false once the epoch is exhausted.
  bool next(std::vector<std::size_t>& out);
  std::size_t batches_per_epoch() const { return (count_ + batch_size_ - 1) / batch_size_; }
  const std::vector<std::size_t>& order() const { return order_; }

 private:
  std::size_t count_;
  std::size_t batch_size_;
  std::uint64_t seed_;
  std::vector<std::size_t> order_;
  std::size_t cursor_ = 0;
};

}  // namespace qicnn
