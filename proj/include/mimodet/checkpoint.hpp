#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "mimodet/channel.hpp"
#include "mimodet/constellation.hpp"
#include "mimodet/neural.hpp"

namespace mimodet {

// Binary checkpoint layout (little endian):
//   "MIMODETCKPT\0"            12 bytes
//   u32 format version
//   u64 n, n bytes             JSON metadata
//   u64 n, n doubles           parameters in slot order
//   u64 n, n doubles           Adam first moments (n may be 0)
//   u64 n, n doubles           Adam second moments
//   u64                        FNV-1a 64 of every preceding byte
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct CheckpointMeta {
    std::string constellation;
    ChannelModel channel;
    long iterations = 0;
    std::string config_hash;
    std::uint64_t seed = 0;
};

struct Checkpoint {
    CheckpointMeta meta;
    NetworkParams params;
    std::optional<AdamState> adam;
};

void save_checkpoint(const std::string& path, const Checkpoint& ck);
// Throws IntegrityError on a bad magic, truncation or checksum mismatch.
Checkpoint load_checkpoint(const std::string& path);

// Human-readable summary: architecture, L, widths, constellation, K, N and
// training iterations.
std::string describe_checkpoint(const std::string& path);
std::string describe(const Checkpoint& ck);

// Refuses a checkpoint trained for a different constellation or channel size.
void require_compatible(const CheckpointMeta& meta, const ChannelModel& m, const Constellation& c);

std::uint64_t fnv1a64(const void* data, std::size_t n, std::uint64_t h = 0xcbf29ce484222325ull);

}  // namespace mimodet
