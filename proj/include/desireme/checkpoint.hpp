#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>

#include "desireme/binary_io.hpp"
#include "desireme/errors.hpp"
#include "desireme/moe.hpp"

namespace desireme {

// Layout (all integers and floats little-endian):
//   "DMOE" | u32 version | u32 dim | u32 num_domains | u32 pooling |
//   u32 normalization | u64 parameter_count | f32 x parameter_count
// Tensors follow MoEParams::for_each_tensor order, each row-major.
inline constexpr std::string_view kCheckpointMagic = "DMOE";
inline constexpr std::uint32_t kCheckpointVersion = 1;

template <class T>
void write_checkpoint(std::ostream& out, const MoEParams<T>& params) {
  using namespace binary;
  write_magic(out, kCheckpointMagic);
  write_le<std::uint32_t>(out, kCheckpointVersion);
  write_le<std::uint32_t>(out, static_cast<std::uint32_t>(params.dim));
  write_le<std::uint32_t>(out, static_cast<std::uint32_t>(params.num_domains));
  write_le<std::uint32_t>(out, static_cast<std::uint32_t>(params.options.pooling));
  write_le<std::uint32_t>(out, static_cast<std::uint32_t>(params.options.normalization));
  write_le<std::uint64_t>(out, params.parameter_count());
  params.for_each_tensor([&](const std::string&, std::span<const T> t) {
    for (T v : t) write_f32(out, static_cast<float>(v));
  });
}

inline MoEParams<float> read_checkpoint(std::istream& in) {
  using namespace binary;
  expect_magic(in, kCheckpointMagic, "checkpoint");
  const auto version = read_le<std::uint32_t>(in, "checkpoint version");
  if (version != kCheckpointVersion) {
    throw InputError("checkpoint: unsupported format version " + std::to_string(version) +
                     " (expected " + std::to_string(kCheckpointVersion) + ")");
  }
  const auto dim = read_le<std::uint32_t>(in, "checkpoint dim");
  const auto num_domains = read_le<std::uint32_t>(in, "checkpoint num_domains");
  const auto pooling = read_le<std::uint32_t>(in, "checkpoint pooling");
  const auto normalization = read_le<std::uint32_t>(in, "checkpoint normalization");
  require(pooling <= 1, "checkpoint: unknown pooling mode " + std::to_string(pooling));
  require(normalization <= 1,
          "checkpoint: unknown gate normalization " + std::to_string(normalization));
  MoEOptions options{static_cast<Pooling>(pooling), static_cast<GateNormalization>(normalization)};
  auto params = MoEParams<float>::zeros(dim, num_domains, options);
  const auto count = read_le<std::uint64_t>(in, "checkpoint parameter count");
  require(count == params.parameter_count(),
          "checkpoint: parameter count " + std::to_string(count) + " does not match dim=" +
              std::to_string(dim) + " num_domains=" + std::to_string(num_domains));
  params.for_each_tensor([&](const std::string& name, std::span<float> t) {
    for (float& v : t) v = read_f32(in, name);
  });
  expect_eof(in, "checkpoint");
  return params;
}

template <class T>
void save_checkpoint(const std::filesystem::path& path, const MoEParams<T>& params) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot open checkpoint for writing: " + path.string());
  write_checkpoint(out, params);
  if (!out) throw InputError("failed writing checkpoint: " + path.string());
}

inline MoEParams<float> load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open checkpoint: " + path.string());
  try {
    return read_checkpoint(in);
  } catch (const InputError& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

}  // namespace desireme
