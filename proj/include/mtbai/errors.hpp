// errors.hpp
//
// Error taxonomy shared by the whole library. Callers that reach the CLI
// boundary map usage/config errors to exit code 2 and runtime/numerical
// errors to exit code 3.
#pragma once
#include <stdexcept>
#include <string>

namespace mtbai {

// Bad arguments to a library call (domain violations, out-of-range indices).
class usage_error : public std::invalid_argument {
public:
    explicit usage_error(const std::string& what) : std::invalid_argument(what) {}
};

// Model outside the structured class M (no common strictly dominant representation).
class structure_error : public std::runtime_error {
public:
    explicit structure_error(const std::string& what) : std::runtime_error(what) {}
};

// Weighted mean requested over a set whose total weight is zero.
class degenerate_weight_error : public std::runtime_error {
public:
    explicit degenerate_weight_error(const std::string& what) : std::runtime_error(what) {}
};

// Invalid experiment configuration or instance file.
class config_error : public std::runtime_error {
public:
    explicit config_error(const std::string& what) : std::runtime_error(what) {}
};

// Non-finite values or exhausted budgets inside a numerical routine.
class numerical_error : public std::runtime_error {
public:
    explicit numerical_error(const std::string& what) : std::runtime_error(what) {}
};

} // namespace mtbai
