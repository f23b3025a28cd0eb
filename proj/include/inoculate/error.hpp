#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace inoculate {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed input at a known line (1-based) of a named source.
class ParseError : public Error {
public:
    ParseError(const std::string& source, std::size_t line, const std::string& what)
        : Error(source + ":" + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

class IoError : public Error {
public:
    IoError(const std::string& path, const std::string& what)
        : Error(path + ": " + what), path_(path) {}

    const std::string& path() const { return path_; }

private:
    std::string path_;
};

// A perturbation rule's preconditions do not hold for the given pair.
class NotApplicable : public Error {
public:
    using Error::Error;
};

// The model server answered, but not in the shape the protocol requires.
class ProtocolError : public Error {
public:
    using Error::Error;
};

}  // namespace inoculate
