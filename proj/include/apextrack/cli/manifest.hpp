#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace apextrack::cli {

inline constexpr std::string_view kToolName = "apextrack";
inline constexpr std::string_view kToolVersion = "1.0.0";

/// Lowercase hex SHA-256.
std::string sha256_hex(std::span<const std::uint8_t> bytes);
std::string sha256_hex(std::string_view text);

struct FileDigest {
    std::string name;
    std::string sha256;
};

/// Record of a command run. Contains no timestamps or absolute paths, so an
/// identical run yields an identical manifest.
struct RunManifest {
    std::string command;
    nlohmann::ordered_json config = nlohmann::ordered_json::object();
    std::vector<FileDigest> inputs;
    std::vector<FileDigest> outputs;

    std::string to_json() const;
};

/// Collects every output of a command in memory and writes them together:
/// each file goes to a temporary sibling first and is renamed into place.
/// If anything fails, files already committed by this batch are removed, so
/// callers never leave a partial result behind.
class OutputBatch {
public:
    void add(std::filesystem::path path, std::string contents);
    void add(std::filesystem::path path, std::vector<std::uint8_t> contents);

    /// Digests of the queued outputs, by file name.
    std::vector<FileDigest> digests() const;

    /// Throws std::runtime_error after rolling back.
    void commit();

private:
    struct Pending {
        std::filesystem::path path;
        std::string contents;
    };
    std::vector<Pending> pending_;
};

std::string read_file(const std::filesystem::path& path);
std::vector<std::uint8_t> read_binary_file(const std::filesystem::path& path);

}  // namespace apextrack::cli
