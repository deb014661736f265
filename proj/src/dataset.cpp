#include "qicnn/dataset.hpp"

#include <openssl/evp.h>

#include <fstream>
#include <iomanip>
#include <iterator>
#include <memory>
#include <sstream>

#include "qicnn/random.hpp"

namespace qicnn {

namespace fs = std::filesystem;

std::string_view to_string(Split s) { return s == Split::kTrain ? "train" : "test"; }

Dataset::Dataset(DatasetKind kind, Split split, std::size_t channels, std::size_t height,
                 std::size_t width, std::vector<std::uint8_t> pixels, std::vector<int> labels)
    : kind_(kind),
      split_(split),
      channels_(channels),
      height_(height),
      width_(width),
      pixels_(std::move(pixels)),
      labels_(std::move(labels)) {
  if (pixels_.size() != labels_.size() * image_size()) {
    throw DataError("dataset holds " + std::to_string(pixels_.size()) + " pixel bytes for " +
                    std::to_string(labels_.size()) + " labels");
  }
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (labels_[i] < 0 || labels_[i] >= 10) {
      throw DataError("label " + std::to_string(labels_[i]) + " at index " + std::to_string(i) +
                      " outside [0, 10)");
    }
  }
}

Tensor Dataset::images() const {
  if (labels_.empty()) throw DataError("empty dataset");
  Tensor t({size(), channels_, height_, width_});
  for (std::size_t i = 0; i < pixels_.size(); ++i) t[i] = normalize_pixel(pixels_[i]);
  return t;
}

Tensor Dataset::gather(std::span<const std::size_t> indices) const {
  if (indices.empty()) throw DataError("gather: empty index list");
  Tensor t({indices.size(), channels_, height_, width_});
  const std::size_t stride = image_size();
  for (std::size_t k = 0; k < indices.size(); ++k) {
    const std::size_t idx = indices[k];
    if (idx >= size()) throw DataError("gather: index " + std::to_string(idx) + " out of range");
    const std::uint8_t* src = pixels_.data() + idx * stride;
    double* dst = t.raw() + k * stride;
    for (std::size_t i = 0; i < stride; ++i) dst[i] = normalize_pixel(src[i]);
  }
  return t;
}

std::vector<int> Dataset::gather_labels(std::span<const std::size_t> indices) const {
  std::vector<int> out;
  out.reserve(indices.size());
  for (std::size_t idx : indices) out.push_back(labels_.at(idx));
  return out;
}

Dataset Dataset::select(std::span<const std::size_t> indices) const {
  const std::size_t stride = image_size();
  std::vector<std::uint8_t> px;
  px.reserve(indices.size() * stride);
  for (std::size_t idx : indices) {
    if (idx >= size()) throw DataError("select: index " + std::to_string(idx) + " out of range");
    px.insert(px.end(), pixels_.begin() + static_cast<std::ptrdiff_t>(idx * stride),
              pixels_.begin() + static_cast<std::ptrdiff_t>((idx + 1) * stride));
  }
  Dataset out(kind_, split_, channels_, height_, width_, std::move(px), gather_labels(indices));
  out.provenance = provenance;
  return out;
}

std::array<std::size_t, 10> Dataset::class_histogram() const {
  std::array<std::size_t, 10> h{};
  for (int l : labels_) ++h[static_cast<std::size_t>(l)];
  return h;
}

namespace {

std::vector<std::uint8_t> read_all(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint32_t read_be32(const std::vector<std::uint8_t>& b, std::size_t offset,
                        const fs::path& path) {
  if (offset + 4 > b.size()) {
    throw DataError(path.string() + ": truncated header at offset " + std::to_string(offset));
  }
  return (std::uint32_t{b[offset]} << 24) | (std::uint32_t{b[offset + 1]} << 16) |
         (std::uint32_t{b[offset + 2]} << 8) | std::uint32_t{b[offset + 3]};
}

void check_manifest_near(const fs::path& file) {
  const fs::path manifest = file.parent_path() / kManifestName;
  if (fs::exists(manifest)) verify_manifest(manifest);
}

}  // namespace

Dataset load_mnist_idx(const fs::path& images_path, const fs::path& labels_path, Split split) {
  check_manifest_near(images_path);
  if (labels_path.parent_path() != images_path.parent_path()) check_manifest_near(labels_path);

  const auto img = read_all(images_path);
  const auto lab = read_all(labels_path);

  const std::uint32_t img_magic = read_be32(img, 0, images_path);
  if (img_magic != 2051) {
    throw DataError(images_path.string() + ": bad image magic " + std::to_string(img_magic) +
                    " at offset 0 (expected 2051)");
  }
  const std::uint32_t count = read_be32(img, 4, images_path);
  const std::uint32_t rows = read_be32(img, 8, images_path);
  const std::uint32_t cols = read_be32(img, 12, images_path);
  const std::size_t expected = 16 + std::size_t{count} * rows * cols;
  if (img.size() < expected) {
    throw DataError(images_path.string() + ": truncated, " + std::to_string(img.size()) +
                    " bytes but header promises " + std::to_string(expected) +
                    " (data ends at offset " + std::to_string(img.size()) + ")");
  }

  const std::uint32_t lab_magic = read_be32(lab, 0, labels_path);
  if (lab_magic != 2049) {
    throw DataError(labels_path.string() + ": bad label magic " + std::to_string(lab_magic) +
                    " at offset 0 (expected 2049)");
  }
  const std::uint32_t lab_count = read_be32(lab, 4, labels_path);
  if (lab_count != count) {
    throw DataError(labels_path.string() + ": label count " + std::to_string(lab_count) +
                    " at offset 4 does not match image count " + std::to_string(count));
  }
  if (lab.size() < 8 + std::size_t{count}) {
    throw DataError(labels_path.string() + ": truncated at offset " + std::to_string(lab.size()));
  }
  std::vector<int> labels(count);
  for (std::size_t i = 0; i < count; ++i) {
    const int l = lab[8 + i];
    if (l >= 10) {
      throw DataError(labels_path.string() + ": label " + std::to_string(l) + " at offset " +
                      std::to_string(8 + i) + " is not a digit");
    }
    labels[i] = l;
  }
  std::vector<std::uint8_t> pixels(img.begin() + 16, img.begin() + static_cast<std::ptrdiff_t>(expected));
  Dataset d(DatasetKind::kMnist, split, 1, rows, cols, std::move(pixels), std::move(labels));
  d.provenance = {{images_path.string(), sha256_file(images_path)},
                  {labels_path.string(), sha256_file(labels_path)}};
  return d;
}

Dataset load_mnist(const fs::path& dir, Split split) {
  const std::string prefix = split == Split::kTrain ? "train" : "t10k";
  return load_mnist_idx(dir / (prefix + "-images-idx3-ubyte"),
                        dir / (prefix + "-labels-idx1-ubyte"), split);
}

namespace {
constexpr std::size_t kCifarRecord = 3073;
constexpr std::size_t kCifarPerFile = 10000;

void append_cifar(const fs::path& path, std::vector<std::uint8_t>& pixels,
                  std::vector<int>& labels, std::size_t required_records) {
  const auto bytes = read_all(path);
  if (bytes.empty() || bytes.size() % kCifarRecord != 0 ||
      (required_records && bytes.size() != required_records * kCifarRecord)) {
    throw DataError(path.string() + ": size " + std::to_string(bytes.size()) +
                    " is not " +
                    (required_records ? std::to_string(required_records * kCifarRecord)
                                      : std::string("a positive multiple of 3073")) +
                    " bytes");
  }
  for (std::size_t off = 0; off < bytes.size(); off += kCifarRecord) {
    const int label = bytes[off];
    if (label >= 10) {
      throw DataError(path.string() + ": label " + std::to_string(label) + " at offset " +
                      std::to_string(off));
    }
    labels.push_back(label);
    pixels.insert(pixels.end(), bytes.begin() + static_cast<std::ptrdiff_t>(off + 1),
                  bytes.begin() + static_cast<std::ptrdiff_t>(off + kCifarRecord));
  }
}
}  // namespace

Dataset load_cifar10_batch(const fs::path& path, Split split) {
  check_manifest_near(path);
  std::vector<std::uint8_t> pixels;
  std::vector<int> labels;
  append_cifar(path, pixels, labels, 0);
  Dataset d(DatasetKind::kCifar10, split, 3, 32, 32, std::move(pixels), std::move(labels));
  d.provenance = {{path.string(), sha256_file(path)}};
  return d;
}

Dataset load_cifar10(const fs::path& dir, Split split) {
  const fs::path manifest = dir / kManifestName;
  if (fs::exists(manifest)) verify_manifest(manifest);
  std::vector<fs::path> files;
  if (split == Split::kTrain) {
    for (int i = 1; i <= 5; ++i) files.push_back(dir / ("data_batch_" + std::to_string(i) + ".bin"));
  } else {
    files.push_back(dir / "test_batch.bin");
  }
  std::vector<std::uint8_t> pixels;
  std::vector<int> labels;
  std::vector<FileProvenance> prov;
  for (const auto& f : files) {
    append_cifar(f, pixels, labels, kCifarPerFile);
    prov.push_back({f.string(), sha256_file(f)});
  }
  Dataset d(DatasetKind::kCifar10, split, 3, 32, 32, std::move(pixels), std::move(labels));
  d.provenance = std::move(prov);
  return d;
}

Dataset load_dataset(DatasetKind kind, const fs::path& dir, Split split) {
  return kind == DatasetKind::kMnist ? load_mnist(dir, split) : load_cifar10(dir, split);
}

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr);
  std::vector<char> buf(1 << 16);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), md, &len);
  std::ostringstream os;
  for (unsigned i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << int{md[i]};
  return os.str();
}

void verify_manifest(const fs::path& manifest) {
  std::ifstream in(manifest);
  if (!in) throw DataError("cannot open manifest " + manifest.string());
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string digest, name;
    ls >> digest >> name;
    if (!name.empty() && name[0] == '*') name.erase(0, 1);  // sha256sum binary marker
    if (digest.empty() || name.empty()) {
      throw DataError(manifest.string() + ":" + std::to_string(lineno) + ": malformed line");
    }
    const fs::path file = manifest.parent_path() / name;
    const std::string actual = sha256_file(file);
    if (actual != digest) {
      throw DataError("checksum mismatch for " + file.string() + ": manifest " + digest +
                      ", file " + actual);
    }
  }
}

Dataset subset(const Dataset& data, std::size_t n, std::uint64_t seed) {
  if (n < 1 || n > data.size()) {
    throw std::out_of_range("subset: n = " + std::to_string(n) + " outside [1, " +
                            std::to_string(data.size()) + "]");
  }
  auto perm = seeded_permutation(data.size(), seed);
  perm.resize(n);
  return data.select(perm);
}

BatchIterator::BatchIterator(std::size_t count, std::size_t batch_size, std::uint64_t seed)
    : count_(count), batch_size_(batch_size), seed_(seed) {
  if (count == 0 || batch_size == 0) {
    throw std::invalid_argument("BatchIterator: count and batch size must be >= 1");
  }
  start_epoch(0);
}

void BatchIterator::start_epoch(std::uint64_t epoch) {
  order_ = seeded_permutation(count_, epoch_stream_seed(seed_, epoch));
  cursor_ = 0;
}

bool BatchIterator::next(std::vector<std::size_t>& out) {
  if (cursor_ >= count_) return false;
  const std::size_t end = std::min(count_, cursor_ + batch_size_);
  out.assign(order_.begin() + static_cast<std::ptrdiff_t>(cursor_),
             order_.begin() + static_cast<std::ptrdiff_t>(end));
  cursor_ = end;
  return true;
}

}  // namespace qicnn
