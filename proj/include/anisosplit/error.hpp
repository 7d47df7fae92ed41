#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace anisosplit {

/// Base for every error raised by the library. Catch this in tools.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// DSL syntax error. `offset()` is the byte offset into the parsed text.
class ParseError : public Error {
public:
    ParseError(const std::string& msg, std::size_t offset)
        : Error("parse error at byte " + std::to_string(offset) + ": " + msg), offset_(offset) {}
    std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

class EvalError : public Error {
public:
    enum class Kind { UnboundVariable, DivisionByZero, BranchCut, NonFinite };

    EvalError(Kind kind, const std::string& msg) : Error(msg), kind_(kind) {}
    Kind kind() const noexcept { return kind_; }

private:
    Kind kind_;
};

/// Medium failed a structural check (singular rho, bound violation, ...).
class ValidationError : public Error {
public:
    using Error::Error;
};

/// A precondition of a numerical operation does not hold.
class PreconditionError : public Error {
public:
    using Error::Error;
};

/// Expression growth exceeded the configured cap during the recursion.
class SizeLimitError : public Error {
public:
    SizeLimitError(const std::string& msg, int degree) : Error(msg), degree_(degree) {}
    int degree() const noexcept { return degree_; }

private:
    int degree_;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace anisosplit
