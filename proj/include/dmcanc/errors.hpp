#ifndef DMCANC_ERRORS_HPP
#define DMCANC_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace dmcanc {

// Bad values passed to an operation (empty vectors, invalid bands, ...).
class ArgumentError : public std::invalid_argument {
public:
    explicit ArgumentError(const std::string& msg) : std::invalid_argument(msg) {}
};

// Invalid or inconsistent experiment configuration.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// An adaptive loop blew up (non-finite error or runaway error power).
class DivergenceError : public std::runtime_error {
public:
    DivergenceError(const std::string& msg, long long sample)
        : std::runtime_error(msg), sample_index(sample) {}
    long long sample_index;
};

// File or directory could not be read/written/parsed.
class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace dmcanc

#endif
