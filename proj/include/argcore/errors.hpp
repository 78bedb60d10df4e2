// Copyright (C) 2026 the argcore authors
// SPDX-License-Identifier: Apache-2.0
//
#pragma once

#include <stdexcept>
#include <string>

namespace argcore {

// Error taxonomy shared by the library and the CLI exit-code mapping:
//   ConfigError / DimensionError -> usage or configuration problem (exit 2)
//   IoError / ParseError / DataError -> bad or unreadable inputs  (exit 3)
//   NumericError -> non-finite values or numeric aborts           (exit 4)
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

struct DimensionError : std::runtime_error {
    explicit DimensionError(const std::string& msg) : std::runtime_error(msg) {}
};

struct IoError : std::runtime_error {
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

struct ParseError : std::runtime_error {
    explicit ParseError(const std::string& msg) : std::runtime_error(msg) {}
};

struct DataError : std::runtime_error {
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace argcore
