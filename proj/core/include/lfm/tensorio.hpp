#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "lfm/model.hpp"
#include "lfm/tensor.hpp"

namespace lfm {

// On-disk formats. All multi-byte fields are little-endian. Writes go to a
// temporary file in the destination directory which is then renamed over
// the target, so a failed write never leaves a partial file behind.
//
// LFMT tensor:
//   "LFMT" | u32 version (1) | u32 element type (0 = f32, 1 = f64) | u32 rank
//   | u64 dims[rank] | payload, row-major
//
// LFMC checkpoint:
//   "LFMC" | u32 version (1) | u64 seed | u32 spec length | spec text
//   | u32 parameter count | { u32 name length | name | LFMT tensor } ...

enum class ElementType : std::uint32_t { f32 = 0, f64 = 1 };

inline constexpr std::uint32_t kTensorFormatVersion = 1;
inline constexpr std::uint32_t kCheckpointFormatVersion = 1;

/// P5 (binary, maxval 255) grayscale; pixels map to v/255.
Image read_pgm(const std::filesystem::path& path);
Image decode_pgm(std::span<const std::uint8_t> bytes);

/// Round-half-up quantization of [0,1] values to 0..255; values outside are clamped.
void write_pgm(const std::filesystem::path& path, const Image& image);
std::vector<std::uint8_t> encode_pgm(const Image& image);
std::uint8_t quantize_pixel(double v);

using AnyTensor = std::variant<TensorF, Tensor>;

std::vector<std::uint8_t> encode_tensor(const Tensor& t);
std::vector<std::uint8_t> encode_tensor(const TensorF& t);
/// Decodes one LFMT record starting at `offset`; advances it past the record.
/// Error offsets are reported relative to the start of `bytes`.
AnyTensor decode_tensor(std::span<const std::uint8_t> bytes, std::size_t& offset);

void write_tensor(const std::filesystem::path& path, const Tensor& t);
void write_tensor(const std::filesystem::path& path, const TensorF& t);
AnyTensor read_tensor(const std::filesystem::path& path);
/// Reads any LFMT file and widens f32 payloads to double.
Tensor read_tensor_f64(const std::filesystem::path& path);

std::vector<std::uint8_t> encode_checkpoint(const Model& model);
Model decode_checkpoint(std::span<const std::uint8_t> bytes);
void write_checkpoint(const std::filesystem::path& path, const Model& model);
Model read_checkpoint(const std::filesystem::path& path);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
/// Temp-file-then-rename write.
void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
void write_text_atomic(const std::filesystem::path& path, const std::string& text);

}  // namespace lfm
