#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace tedemod {

// Invalid argument or violated precondition on caller-supplied values.
class validation_error : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Failure that depends on the data being processed rather than on the
// configuration (stalled encoder, singular system, I/O).
class runtime_failure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class encoding_stall_error : public runtime_failure {
public:
    using runtime_failure::runtime_failure;
};

// A sampling interval longer than Ts would touch three symbol columns.
class band_width_error : public validation_error {
public:
    using validation_error::validation_error;
};

class rank_error : public runtime_failure {
public:
    rank_error(std::size_t column, const std::string& what)
        : runtime_failure(what), column_(column) {}

    std::size_t column() const noexcept { return column_; }

private:
    std::size_t column_;
};

class stream_order_error : public validation_error {
public:
    using validation_error::validation_error;
};

class parse_error : public validation_error {
public:
    parse_error(std::size_t line, const std::string& what)
        : validation_error("line " + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class io_error : public runtime_failure {
public:
    using runtime_failure::runtime_failure;
};

} // namespace tedemod
