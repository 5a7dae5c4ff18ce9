#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <vector>

#include "hillfight/autodiff/parameter.hpp"

namespace hf::ad {

/// Binary parameter container, all integers little-endian:
///
///   "HFCKPT1"            7 bytes magic
///   u32 version          currently 1
///   u32 tensor_count
///   per tensor:
///     u32 name_length, name bytes (UTF-8, no terminator)
///     u32 rank, u64 extents[rank]
///     f64 payload[product(extents)]
inline constexpr char kCheckpointMagic[7] = {'H', 'F', 'C', 'K', 'P', 'T', '1'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void write_checkpoint(std::ostream& out, const std::vector<NamedTensor>& tensors);
std::vector<NamedTensor> read_checkpoint(std::istream& in);

void save_checkpoint(const std::filesystem::path& path, const std::vector<NamedTensor>& tensors);
std::vector<NamedTensor> load_checkpoint(const std::filesystem::path& path);

}  // namespace hf::ad
