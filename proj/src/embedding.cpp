#include "inoculate/embedding.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <sstream>

namespace inoculate {

namespace resources {
extern const std::string_view kStopwordsEnV1;
}

namespace {

bool word_byte(unsigned char c) {
    return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c >= 0x80;
}

std::unordered_set<std::string> parse_word_lines(std::istream& in) {
    std::unordered_set<std::string> words;
    std::string line;
    while (std::getline(in, line)) {
        while (!line.empty() && (line.back() == '\r' || line.back() == ' ' || line.back() == '\t'))
            line.pop_back();
        std::size_t start = line.find_first_not_of(" \t");
        if (start == std::string::npos || line[start] == '#') continue;
        std::string word = line.substr(start);
        for (auto& c : word)
            if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
        words.insert(std::move(word));
    }
    return words;
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::string current;
    for (unsigned char c : text) {
        if (word_byte(c)) {
            current.push_back(c >= 'A' && c <= 'Z' ? static_cast<char>(c - 'A' + 'a') : static_cast<char>(c));
        } else if (!current.empty()) {
            tokens.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) tokens.push_back(std::move(current));
    return tokens;
}

StopWordList::StopWordList(std::unordered_set<std::string> words, std::string version)
    : words_(std::move(words)), version_(std::move(version)) {
    if (words_.empty()) throw Error("stop-word list is empty");
}

const StopWordList& StopWordList::builtin() {
    static const StopWordList list = [] {
        std::istringstream in{std::string(resources::kStopwordsEnV1)};
        return StopWordList(parse_word_lines(in), "en-v1");
    }();
    return list;
}

StopWordList StopWordList::load(const std::filesystem::path& path, std::string version) {
    std::ifstream in(path);
    if (!in) throw IoError(path.string(), "cannot open stop-word list");
    if (version.empty()) version = path.filename().string();
    return StopWordList(parse_word_lines(in), std::move(version));
}

namespace detail {

GloveScan scan_glove(std::istream& in, const std::string& source,
                     std::optional<std::size_t> expected_dim,
                     const std::function<void(std::string&&, std::span<const double>)>& emit) {
    GloveScan scan;
    std::optional<std::size_t> dim = expected_dim;
    std::vector<double> values;
    std::string line;
    while (std::getline(in, line)) {
        ++scan.lines;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const char* p = line.data();
        const char* end = p + line.size();
        const char* token_end = p;
        while (token_end < end && *token_end != ' ') ++token_end;
        std::string token(p, token_end);
        if (token.empty()) throw ParseError(source, scan.lines, "empty token");
        for (auto& c : token)
            if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');

        values.clear();
        p = token_end;
        while (p < end) {
            while (p < end && *p == ' ') ++p;
            if (p == end) break;
            double v = 0.0;
            auto [next, ec] = std::from_chars(p, end, v);
            if (ec != std::errc{} || (next < end && *next != ' '))
                throw ParseError(source, scan.lines, "non-numeric component for token '" + token + "'");
            values.push_back(v);
            p = next;
        }
        if (!dim) {
            if (values.empty()) throw ParseError(source, scan.lines, "record has no components");
            dim = values.size();
        }
        if (values.size() != *dim)
            throw ParseError(source, scan.lines,
                             "expected " + std::to_string(*dim) + " components, found " +
                                 std::to_string(values.size()));
        emit(std::move(token), values);
    }
    return scan;
}

}  // namespace detail

template <typename Scalar>
EmbeddingTable<Scalar> load_glove(const std::filesystem::path& path,
                                  std::optional<std::size_t> expected_dim) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(path.string(), "cannot open embedding file");
    return read_glove<Scalar>(in, path.string(), expected_dim);
}

template EmbeddingTable<float> load_glove<float>(const std::filesystem::path&, std::optional<std::size_t>);
template EmbeddingTable<double> load_glove<double>(const std::filesystem::path&, std::optional<std::size_t>);

}  // namespace inoculate
