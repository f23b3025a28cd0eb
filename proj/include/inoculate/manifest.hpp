#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "inoculate/corpus.hpp"

namespace inoculate {

std::string sha256_hex(std::string_view bytes);
/// Throws IoError when the file cannot be read.
std::string sha256_file(const std::filesystem::path& path);

/// What a command read and wrote, enough to re-run it.
struct RunManifest {
    std::string command;
    Json config = Json::object();
    std::vector<std::pair<std::string, std::string>> inputs;  // path, sha256
    std::vector<std::pair<std::string, std::uint64_t>> seeds;
    std::vector<std::string> artifacts;
    std::string tool_version = INOCULATE_VERSION;

    void add_input(const std::filesystem::path& path);
};

Json to_json(const RunManifest& m);
/// Writes the manifest as one JSON line.
void write_manifest(const RunManifest& m, const std::filesystem::path& path);

}  // namespace inoculate
