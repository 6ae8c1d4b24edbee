#include "gw/error.hpp"

namespace gw {

std::string_view to_string(ErrorCode code) {
    switch (code) {
    case ErrorCode::MalformedManifest: return "MalformedManifest";
    case ErrorCode::DuplicateDocId: return "DuplicateDocId";
    case ErrorCode::EmptyDocument: return "EmptyDocument";
    case ErrorCode::StoreWriteError: return "StoreWriteError";
    case ErrorCode::ExtractorUnavailable: return "ExtractorUnavailable";
    case ErrorCode::EmptyQuery: return "EmptyQuery";
    case ErrorCode::KgUnavailable: return "KgUnavailable";
    case ErrorCode::MalformedFixture: return "MalformedFixture";
    case ErrorCode::ProviderUnavailable: return "ProviderUnavailable";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::EmptyText: return "EmptyText";
    case ErrorCode::EmptyIndex: return "EmptyIndex";
    case ErrorCode::UnknownDocId: return "UnknownDocId";
    case ErrorCode::BudgetTooSmall: return "BudgetTooSmall";
    case ErrorCode::NotFound: return "NotFound";
    case ErrorCode::NotIndexed: return "NotIndexed";
    case ErrorCode::Busy: return "Busy";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::Io: return "Io";
    }
    return "Unknown";
}

} // namespace gw
