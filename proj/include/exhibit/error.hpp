// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace exhibit {

enum class ErrorKind {
    invalid_argument,
    duplicate_id,
    dimension_mismatch,
    empty_index,
    not_found,
    corrupt_file,
    version_mismatch,
    provider_unreachable,
    malformed_response,
    unsupported_media_type,
    oversize_payload,
    unknown_model,
    configuration,
    invalid_history,
    malformed_model_output,
    manifest_parse,
    manifest_not_found,
    script_exhausted,
    io,
};

std::string_view to_string(ErrorKind kind);

/// Every fault raised by the library carries a machine-readable kind so that
/// callers (tool dispatch, the HTTP layer, the CLI) can map it without
/// parsing messages.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

} // namespace exhibit
