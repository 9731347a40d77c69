#pragma once

#include "vpwave/marketdata.hpp"

#include <json.hpp>

#include <string>
#include <variant>
#include <vector>

namespace vpwave {

enum class Family { BesselSingle, BesselSuperposition, Kummer };

std::string family_name(Family f);
Family family_from_name(const std::string& name);  // throws MalformedSpec

struct BesselSingleParams {
    double c = 1.0;      // scale, > 0
    double omega = 1.0;  // eigen-frequency, > 0
    double p0 = 0.0;     // equilibrium price
};

struct SuperpositionParams {
    double c = 1.0;
    double omega1 = 1.0;
    double p01 = 0.0;
    double omega2 = 1.0;  // omega2 == omega1 is the one-eigenvalue variant
    double p02 = 0.0;     // convention p01 <= p02
};

struct KummerParams {
    double c = 1.0;
    int m = 0;          // polynomial order, fixed per fit
    double a = 1.0;     // eigenvalue magnitude A, > 0
    double p0 = 0.0;
};

struct ModelSpec {
    Family family = Family::BesselSingle;
    std::variant<BesselSingleParams, SuperpositionParams, KummerParams> params;

    static ModelSpec bessel(double c, double omega, double p0);
    static ModelSpec superposition(double c, double omega1, double p01, double omega2, double p02);
    static ModelSpec kummer(double c, int m, double a, double p0);

    const BesselSingleParams& bessel_params() const { return std::get<BesselSingleParams>(params); }
    const SuperpositionParams& superposition_params() const { return std::get<SuperpositionParams>(params); }
    const KummerParams& kummer_params() const { return std::get<KummerParams>(params); }

    // Center of the principal lobe (p0 or p01); used for synth range checks.
    double center() const;

    void validate() const;  // throws MalformedSpec on invariant violations
};

// C * |J0(omega (p - p0))|, even about p0.
double eval_bessel_single(const BesselSingleParams& prm, double p);

// C * (|J0(omega1 (p - p01))| + |J0(omega2 (p - p02))|), shared scale.
double eval_superposition(const SuperpositionParams& prm, double p);

// C * e^{-sqrt(A) |p - p0|} * |F(-m, 1, 2 sqrt(A) |p - p0|)|.
double eval_kummer(const KummerParams& prm, double p);

double eval_model(const ModelSpec& spec, double p);

// Signed stationary wave e^{-sqrt_a p'} F(-m, 1, 2 sqrt_a p') for p' >= 0;
// the ODE oracle differences this (the absolute value would kink at nodes).
double kummer_wave(int m, double sqrt_a, double pprime);
long double kummer_wave_ext(int m, long double sqrt_a, long double pprime);

// d/dp' of the signed wave, from the polynomial's own series. The oracle uses
// this close to p' = 0, where dividing a differenced psi' by p' would amplify
// the h^2 truncation term past the residual budget.
long double kummer_wave_deriv_ext(int m, long double sqrt_a, long double pprime);

// Eigenvalue ladder sqrt(A_m) = E / (1 + 2m).
double kummer_eigenvalue_sqrt(double e, int m);

struct ModelCurve {
    std::vector<double> prices;
    std::vector<double> values;  // non-negative, sums to 1
};

// Evaluates the family on the distribution grid and normalizes to sum 1.
// Throws DegenerateCurve when the curve vanishes at every grid point.
ModelCurve normalize_on_grid(const ModelSpec& spec, const VolumeAtPrice& dist);

nlohmann::json to_json(const ModelSpec& spec);
ModelSpec model_spec_from_json(const nlohmann::json& j);  // throws MalformedSpec

}  // namespace vpwave
