#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace stlmine {

// Failure while reading an external input (trace CSV, template file, config).
// Carries the source file and 1-based line so tools can point at the spot.
class ParseError : public std::runtime_error {
public:
    ParseError(std::string file, std::size_t line, const std::string& msg)
        : std::runtime_error(file.empty() ? msg
                                          : file + ":" + std::to_string(line) + ": " + msg),
          file_(std::move(file)),
          line_(line) {}

    const std::string& file() const { return file_; }
    std::size_t line() const { return line_; }

private:
    std::string file_;
    std::size_t line_ = 0;
};

// Syntax error inside formula text; position is a 0-based character offset.
class SyntaxError : public std::runtime_error {
public:
    SyntaxError(std::size_t pos, const std::string& msg)
        : std::runtime_error(msg + " (at offset " + std::to_string(pos) + ")"), pos_(pos) {}

    std::size_t pos() const { return pos_; }

private:
    std::size_t pos_ = 0;
};

// Violated precondition or structural invariant (bad valuation, bad template,
// mismatched dimensions, out-of-domain value, ...).
class ContractError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace stlmine
