#pragma once

#include <cstdint>
#include <span>
#include <variant>
#include <vector>

#include "apextrack/core.hpp"

namespace apextrack {

/// ATRK tensor file, all integers and floats little-endian:
///
///   offset  size  field
///        0     4  magic "ATRK"
///        4     2  u16 version (= 1)
///        6     1  u8 kind (1 heatmap, 2 size, 3 displacement)
///        7     1  u8 reserved (0)
///        8     4  u32 rows      (H/R)
///       12     4  u32 cols      (W/R)
///       16     4  u32 channels  (C for heatmaps, 2 otherwise)
///       20     4  u32 R
///       24   4*n  f32 values, row-major (row, col, channel)
namespace atrk {
inline constexpr std::uint16_t kVersion = 1;
inline constexpr std::size_t kHeaderSize = 24;
}  // namespace atrk

using AnyTensor = std::variant<Heatmap, SizeMap, DisplacementField>;

std::vector<std::uint8_t> write_tensor_file(const Heatmap& tensor);
std::vector<std::uint8_t> write_tensor_file(const SizeMap& tensor);
std::vector<std::uint8_t> write_tensor_file(const DisplacementField& tensor);
std::vector<std::uint8_t> write_tensor_file(const AnyTensor& tensor);

/// Throws TensorFormatError; the kind tells bad magic, version mismatch,
/// truncation, NaN payload and the other failures apart.
AnyTensor read_tensor_file(std::span<const std::uint8_t> bytes);

/// read_tensor_file, additionally requiring the stored kind to be `Tensor`'s.
template <typename Tensor>
Tensor read_tensor_file_as(std::span<const std::uint8_t> bytes) {
    AnyTensor any = read_tensor_file(bytes);
    if (auto* t = std::get_if<Tensor>(&any)) {
        return std::move(*t);
    }
    throw TensorFormatError(TensorFormatErrorKind::BadKind, "unexpected tensor kind");
}

}  // namespace apextrack
