#include "discountlab/error.hpp"

namespace discountlab {

std::string_view to_string(Errc code) noexcept {
    switch (code) {
    case Errc::BadDimension: return "BadDimension";
    case Errc::BadResolution: return "BadResolution";
    case Errc::EtaOutsideY: return "EtaOutsideY";
    case Errc::MissingCost: return "MissingCost";
    case Errc::NoConvergence: return "NoConvergence";
    case Errc::SingularSystem: return "SingularSystem";
    case Errc::NotASubsolution: return "NotASubsolution";
    case Errc::NotASupersolution: return "NotASupersolution";
    case Errc::NumericalBreakdown: return "NumericalBreakdown";
    case Errc::EmptySampleSet: return "EmptySampleSet";
    case Errc::MissingRadius: return "MissingRadius";
    case Errc::Precondition: return "PreconditionViolation";
    case Errc::Unbounded: return "Unbounded";
    case Errc::Infeasible: return "Infeasible";
    case Errc::ParseError: return "ParseError";
    case Errc::UnknownKey: return "UnknownKey";
    case Errc::BadValue: return "BadValue";
    case Errc::Io: return "IOError";
    case Errc::BadSystemFile: return "BadSystemFile";
    }
    return "Unknown";
}

} // namespace discountlab
