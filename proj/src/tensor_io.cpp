#include "apextrack/tensor_io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <limits>
#include <string>

namespace apextrack {

static_assert(sizeof(float) == 4 && std::numeric_limits<float>::is_iec559);

namespace {

constexpr std::uint8_t kMagic[4] = {'A', 'T', 'R', 'K'};

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
    out.push_back(static_cast<std::uint8_t>(v));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int shift = 0; shift < 32; shift += 8) {
        out.push_back(static_cast<std::uint8_t>(v >> shift));
    }
}

std::uint16_t get_u16(std::span<const std::uint8_t> in, std::size_t at) {
    return static_cast<std::uint16_t>(in[at] | (in[at + 1] << 8));
}

std::uint32_t get_u32(std::span<const std::uint8_t> in, std::size_t at) {
    return static_cast<std::uint32_t>(in[at]) | (static_cast<std::uint32_t>(in[at + 1]) << 8) |
           (static_cast<std::uint32_t>(in[at + 2]) << 16) |
           (static_cast<std::uint32_t>(in[at + 3]) << 24);
}

template <TensorKind Kind>
std::vector<std::uint8_t> write_impl(const GridTensor<Kind>& tensor) {
    const GridSpec& grid = tensor.grid();
    std::vector<std::uint8_t> out;
    out.reserve(atrk::kHeaderSize + tensor.values().size() * 4);
    out.insert(out.end(), std::begin(kMagic), std::end(kMagic));
    put_u16(out, atrk::kVersion);
    out.push_back(static_cast<std::uint8_t>(Kind));
    out.push_back(0);
    put_u32(out, static_cast<std::uint32_t>(grid.rows()));
    put_u32(out, static_cast<std::uint32_t>(grid.cols()));
    put_u32(out, static_cast<std::uint32_t>(tensor.channels()));
    put_u32(out, static_cast<std::uint32_t>(grid.downsample()));
    for (const float v : tensor.values()) {
        put_u32(out, std::bit_cast<std::uint32_t>(v));
    }
    return out;
}

template <TensorKind Kind>
GridTensor<Kind> build(GridSpec grid, std::vector<float> values) {
    try {
        return GridTensor<Kind>(grid, std::move(values));
    } catch (const ValidationError& e) {
        throw TensorFormatError(TensorFormatErrorKind::InvalidValue, e.what());
    }
}

}  // namespace

std::vector<std::uint8_t> write_tensor_file(const Heatmap& tensor) { return write_impl(tensor); }
std::vector<std::uint8_t> write_tensor_file(const SizeMap& tensor) { return write_impl(tensor); }
std::vector<std::uint8_t> write_tensor_file(const DisplacementField& tensor) {
    return write_impl(tensor);
}

std::vector<std::uint8_t> write_tensor_file(const AnyTensor& tensor) {
    return std::visit([](const auto& t) { return write_tensor_file(t); }, tensor);
}

AnyTensor read_tensor_file(std::span<const std::uint8_t> bytes) {
    using Kind = TensorFormatErrorKind;
    if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
        throw TensorFormatError(Kind::BadMagic, "expected \"ATRK\"");
    }
    if (bytes.size() < atrk::kHeaderSize) {
        throw TensorFormatError(Kind::Truncated, "header shorter than 24 bytes");
    }
    const std::uint16_t version = get_u16(bytes, 4);
    if (version != atrk::kVersion) {
        throw TensorFormatError(Kind::VersionMismatch,
                                "file version " + std::to_string(version) + ", expected 1");
    }
    const std::uint8_t kind = bytes[6];
    if (kind < 1 || kind > 3) {
        throw TensorFormatError(Kind::BadKind, "kind byte " + std::to_string(kind));
    }
    const std::uint64_t rows = get_u32(bytes, 8);
    const std::uint64_t cols = get_u32(bytes, 12);
    const std::uint64_t channels = get_u32(bytes, 16);
    const std::uint64_t downsample = get_u32(bytes, 20);

    const auto tensor_kind = static_cast<TensorKind>(kind);
    if (tensor_kind != TensorKind::Heatmap && channels != 2) {
        throw TensorFormatError(Kind::BadShape, "size/displacement tensors need 2 channels");
    }
    constexpr std::uint64_t kMaxDim = 1u << 20;
    if (rows == 0 || cols == 0 || channels == 0 || downsample == 0 || rows > kMaxDim ||
        cols > kMaxDim || channels > kMaxDim || downsample > kMaxDim ||
        rows * downsample > static_cast<std::uint64_t>(std::numeric_limits<int>::max()) ||
        cols * downsample > static_cast<std::uint64_t>(std::numeric_limits<int>::max())) {
        throw TensorFormatError(Kind::BadShape, "degenerate or oversized dimensions");
    }

    const std::uint64_t count = rows * cols * channels;
    const std::uint64_t payload = bytes.size() - atrk::kHeaderSize;
    if (payload < count * 4) {
        throw TensorFormatError(Kind::Truncated, "payload holds " + std::to_string(payload) +
                                                     " bytes, header needs " +
                                                     std::to_string(count * 4));
    }
    if (payload > count * 4) {
        throw TensorFormatError(Kind::TrailingData, "bytes after payload");
    }

    std::vector<float> values(static_cast<std::size_t>(count));
    for (std::size_t i = 0; i < values.size(); ++i) {
        values[i] = std::bit_cast<float>(get_u32(bytes, atrk::kHeaderSize + 4 * i));
        if (std::isnan(values[i])) {
            throw TensorFormatError(Kind::NaNPayload, "NaN at value " + std::to_string(i));
        }
    }

    const int r = static_cast<int>(downsample);
    const int classes = tensor_kind == TensorKind::Heatmap ? static_cast<int>(channels) : 1;
    const GridSpec grid(static_cast<int>(cols) * r, static_cast<int>(rows) * r, r, classes);
    switch (tensor_kind) {
        case TensorKind::Heatmap: return build<TensorKind::Heatmap>(grid, std::move(values));
        case TensorKind::Size: return build<TensorKind::Size>(grid, std::move(values));
        case TensorKind::Displacement:
            return build<TensorKind::Displacement>(grid, std::move(values));
    }
    throw TensorFormatError(Kind::BadKind, "unreachable");
}

}  // namespace apextrack
