// Copyright (C) 2026 The gem-world Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace gem {

// Bad input: shapes, ranges, malformed files. Maps to CLI exit code 1.
class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A provider (denoiser, feature extractor, remote endpoint) failed. Exit code 2.
class ProviderError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline void require(bool cond, const std::string& msg) {
    if (!cond)
        throw ValidationError(msg);
}

}  // namespace gem
