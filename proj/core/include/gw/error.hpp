#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace gw {

enum class ErrorCode {
    MalformedManifest,
    DuplicateDocId,
    EmptyDocument,
    StoreWriteError,
    ExtractorUnavailable,
    EmptyQuery,
    KgUnavailable,
    MalformedFixture,
    ProviderUnavailable,
    DimensionMismatch,
    EmptyText,
    EmptyIndex,
    UnknownDocId,
    BudgetTooSmall,
    NotFound,
    NotIndexed,
    Busy,
    InvalidArgument,
    Io,
};

std::string_view to_string(ErrorCode code);

// All engine failures surface as gw::Error; callers branch on code().
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

    /// For failures of an external provider: `provider` names it (e.g. "llm:gpt-x").
    Error(ErrorCode code, const std::string& message, std::string provider)
        : Error(code, message) {
        provider_ = std::move(provider);
    }

    ErrorCode code() const noexcept { return code_; }
    const std::string& provider() const noexcept { return provider_; }

private:
    ErrorCode code_;
    std::string provider_;
};

} // namespace gw
