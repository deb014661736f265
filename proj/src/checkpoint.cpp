#include "qicnn/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

namespace qicnn {

namespace {

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

constexpr char kMagic[4] = {'Q', 'I', 'C', 'N'};

std::uint64_t fnv1a(const std::uint8_t* data, std::size_t n) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::size_t i = 0; i < n; ++i) {
    h ^= data[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

class Writer {
 public:
  template <class T>
  void put(T v) {
    const auto* p = reinterpret_cast<const std::uint8_t*>(&v);
    bytes.insert(bytes.end(), p, p + sizeof(T));
  }
  void put_bytes(const void* src, std::size_t n) {
    const auto* p = static_cast<const std::uint8_t*>(src);
    bytes.insert(bytes.end(), p, p + n);
  }
  std::vector<std::uint8_t> bytes;
};

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& b) : bytes_(b) {}

  template <class T>
  T get(const char* what) {
    T v;
    take(&v, sizeof(T), what);
    return v;
  }
  void take(void* dst, std::size_t n, const char* what) {
    if (pos_ + n > bytes_.size()) {
      throw CheckpointError(std::string("checkpoint truncated while reading ") + what +
                            " at offset " + std::to_string(pos_));
    }
    std::memcpy(dst, bytes_.data() + pos_, n);
    pos_ += n;
  }
  std::size_t pos() const { return pos_; }
  std::size_t size() const { return bytes_.size(); }

 private:
  const std::vector<std::uint8_t>& bytes_;
  std::size_t pos_ = 0;
};

struct Header {
  NetworkVariant variant;
  DatasetKind dataset;
  std::uint8_t flags;
  std::uint32_t records;
};

Header read_header(Reader& r, const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < sizeof(kMagic) + 8) throw CheckpointError("checkpoint too short");
  const std::uint64_t stored = [&] {
    std::uint64_t v;
    std::memcpy(&v, bytes.data() + bytes.size() - 8, 8);
    return v;
  }();
  char magic[4];
  r.take(magic, 4, "magic");
  if (std::memcmp(magic, kMagic, 4) != 0) {
    throw CheckpointError("bad checkpoint magic: expected \"QICN\", found \"" +
                          std::string(magic, 4) + "\"");
  }
  const auto version = r.get<std::uint32_t>("version");
  if (version != kCheckpointVersion) {
    throw CheckpointError("checkpoint version mismatch: expected " +
                          std::to_string(kCheckpointVersion) + ", found " +
                          std::to_string(version));
  }
  const std::uint64_t actual = fnv1a(bytes.data(), bytes.size() - 8);
  if (actual != stored) throw CheckpointError("checkpoint checksum mismatch (file corrupted)");
  Header h{};
  const auto v = r.get<std::uint8_t>("variant tag");
  const auto d = r.get<std::uint8_t>("dataset tag");
  if (v > static_cast<std::uint8_t>(NetworkVariant::kF)) {
    throw CheckpointError("unknown variant tag " + std::to_string(v));
  }
  if (d > static_cast<std::uint8_t>(DatasetKind::kCifar10)) {
    throw CheckpointError("unknown dataset tag " + std::to_string(d));
  }
  h.variant = static_cast<NetworkVariant>(v);
  h.dataset = static_cast<DatasetKind>(d);
  h.flags = r.get<std::uint8_t>("flags");
  h.records = r.get<std::uint32_t>("record count");
  return h;
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void read_parameters(Network& net, Reader& r, const Header& h) {
  if (h.variant != net.variant()) {
    throw CheckpointError("checkpoint variant mismatch: network is '" +
                          std::string(to_string(net.variant())) + "', checkpoint holds '" +
                          std::string(to_string(h.variant)) + "'");
  }
  if (h.dataset != net.dataset()) {
    throw CheckpointError("checkpoint dataset mismatch: network is '" +
                          std::string(to_string(net.dataset())) + "', checkpoint holds '" +
                          std::string(to_string(h.dataset)) + "'");
  }
  if (((h.flags & 1u) != 0) != net.options().f_complex_fc) {
    throw CheckpointError("checkpoint complex-FC wiring flag does not match the network");
  }
  const auto params = net.parameters();
  if (h.records != params.size()) {
    throw CheckpointError("checkpoint has " + std::to_string(h.records) +
                          " parameter records, network expects " + std::to_string(params.size()));
  }
  // Parse everything before touching the network so a failure leaves it intact.
  std::vector<Tensor> staged;
  for (Parameter* p : params) {
    const auto name_len = r.get<std::uint32_t>("name length");
    std::string name(name_len, '\0');
    r.take(name.data(), name_len, "name");
    if (name != p->name) {
      throw CheckpointError("checkpoint parameter '" + name + "' where '" + p->name +
                            "' was expected");
    }
    const auto rank = r.get<std::uint32_t>("rank");
    Shape shape(rank);
    for (auto& d : shape) d = static_cast<std::size_t>(r.get<std::uint64_t>("dims"));
    if (shape != p->value.shape()) {
      throw CheckpointError("parameter '" + name + "' has shape " + shape_to_string(shape) +
                            ", network expects " + shape_to_string(p->value.shape()));
    }
    Tensor t(shape);
    r.take(t.raw(), t.size() * sizeof(double), "payload");
    staged.push_back(std::move(t));
  }
  if (r.pos() != r.size() - 8) {
    throw CheckpointError("checkpoint records end at offset " + std::to_string(r.pos()) +
                          ", checksum starts at " + std::to_string(r.size() - 8));
  }
  for (std::size_t i = 0; i < params.size(); ++i) params[i]->value = std::move(staged[i]);
}

}  // namespace

std::vector<std::uint8_t> serialize_checkpoint(const Network& net) {
  Writer w;
  w.put_bytes(kMagic, 4);
  w.put<std::uint32_t>(kCheckpointVersion);
  w.put<std::uint8_t>(static_cast<std::uint8_t>(net.variant()));
  w.put<std::uint8_t>(static_cast<std::uint8_t>(net.dataset()));
  w.put<std::uint8_t>(net.options().f_complex_fc ? 1 : 0);
  const auto params = net.parameters();
  w.put<std::uint32_t>(static_cast<std::uint32_t>(params.size()));
  for (const Parameter* p : params) {
    w.put<std::uint32_t>(static_cast<std::uint32_t>(p->name.size()));
    w.put_bytes(p->name.data(), p->name.size());
    w.put<std::uint32_t>(static_cast<std::uint32_t>(p->value.rank()));
    for (auto d : p->value.shape()) w.put<std::uint64_t>(d);
    w.put_bytes(p->value.raw(), p->value.size() * sizeof(double));
  }
  w.put<std::uint64_t>(fnv1a(w.bytes.data(), w.bytes.size()));
  return std::move(w.bytes);
}

void save_checkpoint(const Network& net, const std::filesystem::path& path) {
  const auto bytes = serialize_checkpoint(net);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  out.close();
  if (!out) throw CheckpointError("failed to write checkpoint " + path.string());
}

void load_checkpoint_into(Network& net, const std::vector<std::uint8_t>& bytes) {
  Reader r(bytes);
  const Header h = read_header(r, bytes);
  read_parameters(net, r, h);
}

void load_checkpoint_into(Network& net, const std::filesystem::path& path) {
  load_checkpoint_into(net, read_file(path));
}

Network load_checkpoint(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  Reader r(bytes);
  const Header h = read_header(r, bytes);
  NetworkOptions opts;
  opts.f_complex_fc = (h.flags & 1u) != 0;
  Network net = build(h.variant, h.dataset, 0, opts);
  read_parameters(net, r, h);
  return net;
}

}  // namespace qicnn
