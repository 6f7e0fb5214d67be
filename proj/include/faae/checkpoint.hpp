#pragma once

// Binary checkpoint format (all integers and floats little-endian):
//
//   "FAAE"  u16 version
//   str config                     (str = u32 byte length, bytes)
//   u32 network count, then per network:
//     str name, str architecture
//     u32 parameter count, then per parameter:  str name, tensor
//     u32 buffer count, then per buffer:        str name, tensor
//   u32 optimizer count, then per optimizer:
//     str name, u64 t, f64 beta1, f64 beta2, f64 epsilon
//     u32 slot count, then per slot: u32 length, f64 m[length], f64 v[length]
//   u64 rng state[4]
//   u32 CRC-32 of every preceding byte
//
// tensor = u32 rank, u32 dims[rank], f32 values in row-major order.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "faae/network.hpp"
#include "faae/optim.hpp"

namespace faae {

inline constexpr std::uint16_t kCheckpointVersion = 0;

struct OptimizerRecord {
    std::string name;
    AdamState state;

    bool operator==(const OptimizerRecord&) const = default;
};

struct Checkpoint {
    std::uint16_t version = kCheckpointVersion;
    std::string config_text;
    std::vector<Network<float>> networks;
    std::vector<OptimizerRecord> optimizers;
    Rng::State rng{};

    // Throws IoError when absent.
    Network<float>& network(std::string_view name);
    const Network<float>& network(std::string_view name) const;
};

std::uint32_t crc32(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& checkpoint);
// Verifies the checksum before reading any field. `source` names the input in
// error messages.
Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes, const std::string& source = "checkpoint");

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::filesystem::path& path);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace faae
