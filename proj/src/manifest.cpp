#include "inoculate/manifest.hpp"

#include <array>
#include <fstream>
#include <memory>

#include <openssl/evp.h>

#include "inoculate/error.hpp"

namespace inoculate {

namespace {

class Sha256 {
public:
    Sha256() : ctx_(EVP_MD_CTX_new(), &EVP_MD_CTX_free) {
        if (!ctx_ || EVP_DigestInit_ex(ctx_.get(), EVP_sha256(), nullptr) != 1)
            throw Error("sha256: digest init failed");
    }

    void update(const char* data, std::size_t n) {
        if (EVP_DigestUpdate(ctx_.get(), data, n) != 1) throw Error("sha256: digest update failed");
    }

    std::string hex() {
        std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
        unsigned int len = 0;
        if (EVP_DigestFinal_ex(ctx_.get(), md.data(), &len) != 1) throw Error("sha256: digest final failed");
        static constexpr char digits[] = "0123456789abcdef";
        std::string out;
        out.reserve(len * 2);
        for (unsigned int i = 0; i < len; ++i) {
            out.push_back(digits[md[i] >> 4]);
            out.push_back(digits[md[i] & 0xf]);
        }
        return out;
    }

private:
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx_;
};

}  // namespace

std::string sha256_hex(std::string_view bytes) {
    Sha256 h;
    h.update(bytes.data(), bytes.size());
    return h.hex();
}

std::string sha256_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(path.string(), "cannot open for hashing");
    Sha256 h;
    std::array<char, 1 << 16> buf{};
    while (in) {
        in.read(buf.data(), buf.size());
        if (in.gcount() > 0) h.update(buf.data(), static_cast<std::size_t>(in.gcount()));
    }
    if (in.bad()) throw IoError(path.string(), "read failed");
    return h.hex();
}

void RunManifest::add_input(const std::filesystem::path& path) {
    inputs.emplace_back(path.string(), sha256_file(path));
}

Json to_json(const RunManifest& m) {
    Json j;
    j["command"] = m.command;
    j["tool_version"] = m.tool_version;
    j["config"] = m.config;
    Json inputs = Json::array();
    for (const auto& [path, digest] : m.inputs) inputs.push_back(Json{{"path", path}, {"sha256", digest}});
    j["inputs"] = std::move(inputs);
    Json seeds = Json::object();
    for (const auto& [name, value] : m.seeds) seeds[name] = value;
    j["seeds"] = std::move(seeds);
    j["artifacts"] = m.artifacts;
    return j;
}

void write_manifest(const RunManifest& m, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(path.string(), "cannot open for writing");
    out << to_json(m).dump() << '\n';
    if (!out) throw IoError(path.string(), "write failed");
}

}  // namespace inoculate
