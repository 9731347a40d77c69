#pragma once

#include "vpwave/marketdata.hpp"
#include "vpwave/models.hpp"

#include <json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace vpwave {

struct FitOptions {
    double confidence = 0.95;        // significance level of the R^2 threshold
    int kummer_order = 1;            // fixed m for Kummer fits
    bool tie_superposition = false;  // one-eigenvalue variant (omega2 == omega1)
    int max_iterations = 200;
};

struct FitResult {
    ModelSpec spec;
    std::vector<double> residuals;   // P_i - model_i
    double r_squared = 0.0;
    double r_squared_crit = 0.0;
    bool significant = false;
    int n_levels = 0;
    int iterations = 0;
    bool converged = false;
    double objective = 0.0;          // sum of squared residuals
    double p0_nearest_tick = 0.0;    // fitted center snapped to the grid, for reporting
};

// R^2 threshold from the F-distribution quantile:
// R2crit = k Fcrit / (k Fcrit + (n - k - 1)), k = n_params, n = n_levels.
// Throws InsufficientDegreesOfFreedom when n - k - 1 < 1.
double r_squared_critical(int n_levels, int n_params, double confidence);

// Deterministic multi-start seeds (at most 8, never empty).
std::vector<ModelSpec> initialize(const VolumeAtPrice& dist, Family family,
                                  const FitOptions& opts = {});

// Damped least squares over the family's parameters, best of the multi-start
// set, ties broken toward the smaller eigen-frequency.
// Throws TooFewLevels, AllStartsDiverged.
FitResult fit(const VolumeAtPrice& dist, Family family,
              std::optional<ModelSpec> init = std::nullopt, const FitOptions& opts = {});

struct LadderAttempt {
    Family family = Family::BesselSingle;
    std::string label;               // e.g. "superposition_one_eigenvalue"
    std::optional<FitResult> result; // absent when the attempt errored
    std::string error;
};

struct LadderReport {
    std::vector<LadderAttempt> attempts;
    std::optional<std::size_t> chosen;  // first significant attempt

    const FitResult* chosen_result() const {
        return chosen ? &attempts[*chosen].result.value() : nullptr;
    }
};

// Fixed model-selection sequence: single Bessel, superposition with one
// eigenvalue, superposition with two, then Kummer m = 1. Stops at the first
// significant fit; per-attempt errors are recorded, not propagated.
LadderReport run_ladder(const VolumeAtPrice& dist, const FitOptions& opts = {});

int n_params(Family family, bool tied_superposition = false);

nlohmann::json to_json(const FitResult& r);
nlohmann::json to_json(const LadderReport& r);
FitResult fit_result_from_json(const nlohmann::json& j);  // throws MalformedSpec

}  // namespace vpwave
