// Copyright 2026 The Viz Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace viz {

enum class Errc {
    invalid_bit_width,
    invalid_shape,
    corrupt_tensor,
    invalid_adapter,
    invalid_stack,
    fit_diverged,
    invalid_model,
    invalid_manifest,
    refuse_append,
    publication_refused,
    corrupt_bundle,
    not_found,
    forbidden,
    gone,
    not_applicable,
    payment_required,
    too_early,
    refuse_start,
    invalid_argument,
    unauthorized,
    conflict,
    io_error,
};

// Stable kebab-case token used in HTTP bodies and CLI diagnostics.
std::string_view errc_token(Errc code) noexcept;

class Error : public std::runtime_error {
public:
    Error(Errc code, std::string message)
        : std::runtime_error(std::move(message)), code_(code) {}

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

// Carries the offending source indices of a rejected license manifest.
class PublicationRefused : public Error {
public:
    struct Violation {
        std::size_t index;
        std::string license_id;
    };

    PublicationRefused(std::vector<Violation> violations, std::string message)
        : Error(Errc::publication_refused, std::move(message)), violations_(std::move(violations)) {}

    const std::vector<Violation>& violations() const noexcept { return violations_; }

private:
    std::vector<Violation> violations_;
};

}  // namespace viz
