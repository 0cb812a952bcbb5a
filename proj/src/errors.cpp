#include "inversemf/errors.hpp"

namespace imf {

const char* error_kind_name(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::Structural: return "StructuralError";
        case ErrorKind::InvalidModel: return "InvalidModel";
        case ErrorKind::InvalidArgument: return "InvalidArgument";
        case ErrorKind::HorizonTooShort: return "HorizonTooShort";
        case ErrorKind::NotMixingWithinCap: return "NotMixingWithinCap";
        case ErrorKind::NoConnector: return "NoConnector";
        case ErrorKind::DepthUnderflow: return "DepthUnderflow";
        case ErrorKind::BracketFailure: return "BracketFailure";
        case ErrorKind::NonConvergence: return "NonConvergence";
        case ErrorKind::NormalizationBreaksAssumption: return "NormalizationBreaksAssumption";
        case ErrorKind::NoAtomFound: return "NoAtomFound";
        case ErrorKind::AtomCollision: return "AtomCollision";
        case ErrorKind::EmptySelection: return "EmptySelection";
        case ErrorKind::ScaleBelowFloor: return "ScaleBelowFloor";
        case ErrorKind::ResourceGuard: return "ResourceGuard";
        case ErrorKind::Io: return "IoError";
    }
    return "Error";
}

Error::Error(ErrorKind kind, const std::string& what)
    : std::runtime_error(std::string(error_kind_name(kind)) + ": " + what), kind_(kind) {}

void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

}  // namespace imf
