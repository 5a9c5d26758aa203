// Copyright 2026 The Viz Authors
// SPDX-License-Identifier: Apache-2.0

#include "viz/error.hpp"

namespace viz {

std::string_view errc_token(Errc code) noexcept {
    switch (code) {
        case Errc::invalid_bit_width: return "invalid-bit-width";
        case Errc::invalid_shape: return "invalid-shape";
        case Errc::corrupt_tensor: return "corrupt-tensor";
        case Errc::invalid_adapter: return "invalid-adapter";
        case Errc::invalid_stack: return "invalid-stack";
        case Errc::fit_diverged: return "fit-diverged";
        case Errc::invalid_model: return "invalid-model";
        case Errc::invalid_manifest: return "invalid-manifest";
        case Errc::refuse_append: return "refuse-append";
        case Errc::publication_refused: return "publication-refused";
        case Errc::corrupt_bundle: return "corrupt-bundle";
        case Errc::not_found: return "not-found";
        case Errc::forbidden: return "forbidden";
        case Errc::gone: return "gone";
        case Errc::not_applicable: return "not-applicable";
        case Errc::payment_required: return "payment-required";
        case Errc::too_early: return "too-early";
        case Errc::refuse_start: return "refuse-start";
        case Errc::invalid_argument: return "invalid-argument";
        case Errc::unauthorized: return "unauthorized";
        case Errc::conflict: return "conflict";
        case Errc::io_error: return "io-error";
    }
    return "unknown";
}

}  // namespace viz
