#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "qicnn/network.hpp"

namespace qicnn {

// Binary layout, all integers little-endian:
//
//   "QICN"                      magic
//   u32 version                 kCheckpointVersion
//   u8  variant tag             NetworkVariant value
//   u8  dataset tag             DatasetKind value
//   u8  flags                   bit 0: F complex-FC wiring
//   u32 record count
//   per parameter:
//     u32 name length, name bytes, u32 rank, u64 dims[rank], f64 payload
//   u64 FNV-1a checksum of every preceding byte
inline constexpr std::uint32_t kCheckpointVersion = 1;

class CheckpointError : public DataError {
 public:
  using DataError::DataError;
};

std::vector<std::uint8_t> serialize_checkpoint(const Network& net);
void save_checkpoint(const Network& net, const std::filesystem::path& path);

/// Rebuilds the network recorded in the file (canonical dataset geometry).
Network load_checkpoint(const std::filesystem::path& path);

/// Overwrites the parameters of `net`; the variant, dataset and every
/// parameter name/shape must match.
void load_checkpoint_into(Network& net, const std::filesystem::path& path);
void load_checkpoint_into(Network& net, const std::vector<std::uint8_t>& bytes);

}  // namespace qicnn
