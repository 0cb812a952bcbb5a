#pragma once

#include <stdexcept>
#include <string>

namespace imf {

enum class ErrorKind {
    Structural,
    InvalidModel,
    InvalidArgument,
    HorizonTooShort,
    NotMixingWithinCap,
    NoConnector,
    DepthUnderflow,
    BracketFailure,
    NonConvergence,
    NormalizationBreaksAssumption,
    NoAtomFound,
    AtomCollision,
    EmptySelection,
    ScaleBelowFloor,
    ResourceGuard,
    Io,
};

const char* error_kind_name(ErrorKind kind);

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what);
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& what);

}  // namespace imf
