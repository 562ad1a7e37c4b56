#include "chainlik/error.hpp"

namespace chainlik {

std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::NotIrreducible: return "NotIrreducible";
    case Errc::NotAperiodic: return "NotAperiodic";
    case Errc::Singular: return "Singular";
    case Errc::PathTooShort: return "PathTooShort";
    case Errc::InvalidSpec: return "InvalidSpec";
    case Errc::OutOfDomain: return "OutOfDomain";
    case Errc::ZeroProbabilityWithPositiveCount: return "ZeroProbabilityWithPositiveCount";
    case Errc::OrderMismatch: return "OrderMismatch";
    case Errc::NoConvergence: return "NoConvergence";
    case Errc::DataDegenerate: return "DataDegenerate";
    case Errc::NoClosedForm: return "NoClosedForm";
    case Errc::SingularInformation: return "SingularInformation";
    case Errc::SingularP: return "SingularP";
    case Errc::TooManyFailures: return "TooManyFailures";
    case Errc::Parse: return "Parse";
    case Errc::Config: return "Config";
    case Errc::Io: return "Io";
  }
  return "Unknown";
}

Error::Error(Errc code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

}  // namespace chainlik
