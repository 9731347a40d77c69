#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace vpwave {

// Base for all domain errors; CLI maps these onto exit codes.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// --- input / ingestion ---
struct IoError : Error {
    explicit IoError(const std::string& what_) : Error(what_) {}
};

struct EmptyInput : Error {
    EmptyInput() : Error("no data rows in input") {}
};

struct ParseError : Error {
    std::size_t row;
    std::string field;
    ParseError(std::size_t row_, std::string field_)
        : Error("row " + std::to_string(row_) + ": cannot parse field '" + field_ + "'"),
          row(row_), field(std::move(field_)) {}
};

struct NonPositivePrice : Error {
    std::size_t row;
    explicit NonPositivePrice(std::size_t row_)
        : Error("row " + std::to_string(row_) + ": price must be > 0"), row(row_) {}
};

struct OffGridPrice : Error {
    std::size_t row;
    OffGridPrice(std::size_t row_, double price, double tick)
        : Error("row " + std::to_string(row_) + ": price " + std::to_string(price) +
                " not on tick grid " + std::to_string(tick)),
          row(row_) {}
};

struct EmptyTrades : Error {
    EmptyTrades() : Error("trade list is empty") {}
};

// --- special functions ---
struct NonFiniteInput : Error {
    NonFiniteInput() : Error("argument must be finite") {}
};

struct OrderTooLarge : Error {
    explicit OrderTooLarge(int m)
        : Error("polynomial order " + std::to_string(m) + " outside supported range [0, 64]") {}
};

// --- models / synth ---
struct DegenerateCurve : Error {
    DegenerateCurve() : Error("model curve is zero at every grid point") {}
};

struct MalformedSpec : Error {
    explicit MalformedSpec(const std::string& what_) : Error("malformed model spec: " + what_) {}
};

// --- fitting ---
struct TooFewLevels : Error {
    TooFewLevels(std::size_t have, std::size_t need)
        : Error("distribution has " + std::to_string(have) + " levels, family needs >= " +
                std::to_string(need)) {}
};

struct AllStartsDiverged : Error {
    AllStartsDiverged() : Error("no optimizer start produced a finite fit") {}
};

struct InsufficientDegreesOfFreedom : Error {
    InsufficientDegreesOfFreedom(int n_levels, int n_params)
        : Error("n_levels - n_params - 1 must be >= 1 (got n_levels=" +
                std::to_string(n_levels) + ", n_params=" + std::to_string(n_params) + ")") {}
};

// --- dynamics ---
struct NotBesselFit : Error {
    NotBesselFit() : Error("dynamics profile requires a single-Bessel fit result") {}
};

// --- oracle ---
struct GridTouchesSingularity : Error {
    GridTouchesSingularity()
        : Error("finite-difference stencil reaches the singular point p' = 0") {}
};

struct BracketMiss : Error {
    BracketMiss() : Error("eigenvalue scan found no sign change of the blow-up indicator") {}
};

}  // namespace vpwave
