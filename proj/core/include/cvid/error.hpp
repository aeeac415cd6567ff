#pragma once

#include <stdexcept>
#include <string>

namespace cvid {

// One error taxonomy for the whole library. The CLI maps kinds onto its
// exit-code contract, so kinds are part of the public surface.
enum class ErrorKind {
    validation,  // a domain invariant was violated
    dimension,   // tensor/mask shapes disagree
    range,       // an index or parameter is out of range
    parse,       // a document could not be parsed
    numeric,     // a computation left the valid numeric domain
    io,          // file could not be read or written
    transport,   // a client request failed
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

    static Error validation(const std::string& m) { return {ErrorKind::validation, m}; }
    static Error dimension(const std::string& m) { return {ErrorKind::dimension, m}; }
    static Error range(const std::string& m) { return {ErrorKind::range, m}; }
    static Error parse(const std::string& m) { return {ErrorKind::parse, m}; }
    static Error numeric(const std::string& m) { return {ErrorKind::numeric, m}; }
    static Error io(const std::string& m) { return {ErrorKind::io, m}; }
    static Error transport(const std::string& m) { return {ErrorKind::transport, m}; }

private:
    ErrorKind kind_;
};

}  // namespace cvid
