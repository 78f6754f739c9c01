#include "apextrack/cli/manifest.hpp"

#include <fstream>
#include <iterator>
#include <stdexcept>

#include <openssl/evp.h>

namespace apextrack::cli {

namespace fs = std::filesystem;

std::string sha256_hex(std::span<const std::uint8_t> bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int length = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &length, EVP_sha256(), nullptr) != 1) {
        throw std::runtime_error("sha256 failed");
    }
    static constexpr char kHex[] = "0123456789abcdef";
    std::string out;
    out.reserve(length * 2);
    for (unsigned int i = 0; i < length; ++i) {
        out.push_back(kHex[digest[i] >> 4]);
        out.push_back(kHex[digest[i] & 0xf]);
    }
    return out;
}

std::string sha256_hex(std::string_view text) {
    return sha256_hex(std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

std::string RunManifest::to_json() const {
    nlohmann::ordered_json doc;
    doc["tool"] = std::string(kToolName);
    doc["version"] = std::string(kToolVersion);
    doc["command"] = command;
    doc["config"] = config;
    auto list = [](const std::vector<FileDigest>& files) {
        auto array = nlohmann::ordered_json::array();
        for (const auto& f : files) {
            array.push_back({{"name", f.name}, {"sha256", f.sha256}});
        }
        return array;
    };
    doc["inputs"] = list(inputs);
    doc["outputs"] = list(outputs);
    return doc.dump(2) + "\n";
}

void OutputBatch::add(fs::path path, std::string contents) {
    pending_.push_back({std::move(path), std::move(contents)});
}

void OutputBatch::add(fs::path path, std::vector<std::uint8_t> contents) {
    pending_.push_back({std::move(path), std::string(contents.begin(), contents.end())});
}

std::vector<FileDigest> OutputBatch::digests() const {
    std::vector<FileDigest> out;
    for (const auto& p : pending_) {
        out.push_back({p.path.filename().string(), sha256_hex(p.contents)});
    }
    return out;
}

void OutputBatch::commit() {
    std::vector<fs::path> temporaries;
    std::vector<fs::path> committed;
    auto rollback = [&] {
        std::error_code ec;
        for (const auto& p : temporaries) fs::remove(p, ec);
        for (const auto& p : committed) fs::remove(p, ec);
    };
    try {
        for (const auto& p : pending_) {
            fs::path tmp = p.path;
            tmp += ".partial";
            temporaries.push_back(tmp);
            std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
            out.write(p.contents.data(), static_cast<std::streamsize>(p.contents.size()));
            out.close();
            if (!out) {
                throw std::runtime_error("cannot write " + p.path.string());
            }
        }
        for (std::size_t i = 0; i < pending_.size(); ++i) {
            fs::rename(temporaries[i], pending_[i].path);
            committed.push_back(pending_[i].path);
        }
    } catch (const std::exception&) {
        rollback();
        throw;
    }
    pending_.clear();
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot read " + path.string());
    }
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

std::vector<std::uint8_t> read_binary_file(const fs::path& path) {
    const std::string text = read_file(path);
    return {text.begin(), text.end()};
}

}  // namespace apextrack::cli
