#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ralab {

// Base class for all errors raised by the library. Subclasses exist so
// callers can catch a specific failure mode by type.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ZeroRow : Error {
    std::size_t index;
    explicit ZeroRow(std::size_t i)
        : Error("row " + std::to_string(i) + " has (near-)zero norm"), index(i) {}
};

struct EmptyMatrix : Error {
    EmptyMatrix() : Error("matrix has no rows") {}
};

struct EmptyList : Error {
    EmptyList() : Error("list is empty") {}
};

struct NonFinite : Error {
    using Error::Error;
};

struct NoConvergence : Error {
    using Error::Error;
};

struct DimMismatch : Error {
    using Error::Error;
};

struct RowCountMismatch : Error {
    using Error::Error;
};

struct TooFewSamples : Error {
    using Error::Error;
};

struct RankDeficient : Error {
    using Error::Error;
};

struct KTooLarge : Error {
    using Error::Error;
};

struct SampleTooLarge : Error {
    using Error::Error;
};

struct BatchTooLarge : Error {
    using Error::Error;
};

struct IndexOutOfRange : Error {
    using Error::Error;
};

struct BadThresholds : Error {
    using Error::Error;
};

struct AllZero : Error {
    using Error::Error;
};

struct TooFewColumns : Error {
    using Error::Error;
};

struct Infeasible : Error {
    using Error::Error;
};

struct DegenerateSignal : Error {
    using Error::Error;
};

struct NotSquare : Error {
    using Error::Error;
};

struct DegenerateNull : Error {
    using Error::Error;
};

struct WindowTooLarge : Error {
    using Error::Error;
};

struct ConstantX : Error {
    using Error::Error;
};

struct TooFewModels : Error {
    using Error::Error;
};

struct Singular : Error {
    using Error::Error;
};

struct BadMagic : Error {
    using Error::Error;
};

struct TruncatedPayload : Error {
    using Error::Error;
};

struct MissingSae : Error {
    using Error::Error;
};

struct IoError : Error {
    using Error::Error;
};

}  // namespace ralab
