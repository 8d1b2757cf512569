#pragma once

#include <stdexcept>
#include <string>

namespace airdyn {

// Broad failure families; the CLI maps them onto exit codes.
enum class ErrorKind { Usage, Data, Numeric };

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, std::string module, const std::string& what)
        : std::runtime_error(what), kind_(kind), module_(std::move(module)) {}

    ErrorKind kind() const noexcept { return kind_; }
    const std::string& module() const noexcept { return module_; }

private:
    ErrorKind kind_;
    std::string module_;
};

class DataError : public Error {
public:
    DataError(std::string module, const std::string& what)
        : Error(ErrorKind::Data, std::move(module), what) {}
};

class NumericError : public Error {
public:
    NumericError(std::string module, const std::string& what)
        : Error(ErrorKind::Numeric, std::move(module), what) {}
};

class UsageError : public Error {
public:
    explicit UsageError(const std::string& what) : Error(ErrorKind::Usage, "cli", what) {}
};

}  // namespace airdyn
