#pragma once

#include "vpwave/fitting.hpp"
#include "vpwave/marketdata.hpp"
#include "vpwave/units.hpp"

#include <iosfwd>
#include <vector>

namespace vpwave {

// Per-level transaction-dynamics quantities. Every field carries its
// dimension in the type, so v_t = v/t, E = p*v_tt etc. cannot be combined
// inconsistently.
struct DynamicsProfile {
    std::vector<PriceQ> price;
    std::vector<SharesQ> volume;
    std::vector<VolumeLiquidityQ> v_t;        // v/t
    std::vector<VolumeAccelerationQ> v_tt;    // v/t^2
    std::vector<AmountLiquidityQ> m_t;        // p*v_t
    std::vector<EnergyQ> energy;              // p*v_tt
    std::vector<EnergyQ> w;                   // A*(p - p0)
    std::vector<ForceQ> f_r;                  // -(1 - v/V)*v_tt
    std::vector<ForceQ> f_t;                  // v_tt
    std::vector<double> omega_sq_check;       // (v_i/V)*v_tt_i in natural units

    ForceQ a_scalar{};   // restoring-force magnitude recovered from the fit
    double omega = 0.0;  // fitted eigen-frequency
    double p0 = 0.0;     // fitted equilibrium price
    SecondsQ span{};
    SharesQ total_volume{};

    std::size_t levels() const { return price.size(); }
};

// Result of the eigen-relation diagnostic: q_i = (v_i/V)*v_tt_i compared with
// omega^2 under the natural-unit convention V/B^2 = 1 (which makes the two
// numerically commensurable), and the implied per-level A_i = v_tt_i - omega^2.
struct EigenvalueCheck {
    std::vector<double> q;            // (v_i/V)*v_tt_i, natural units
    std::vector<double> a_i;          // v_tt_i - omega^2, natural units
    double a_estimate = 0.0;          // mean of a_i
    double dispersion = 0.0;          // (max q - min q) / mean q
    double max_deviation = 0.0;       // max |q_i - omega^2|
};

// Requires a single-Bessel fit (the potential W = A(p - p0) needs one center
// and one eigen-frequency); throws NotBesselFit otherwise.
DynamicsProfile compute_profile(const VolumeAtPrice& dist, const FitResult& fitted);

// Energy-hypothesis residual r_i = -E_i + (v_t_i^2 / V)*p_i + W(p_i).
// Reported, never asserted: the hypothesis is the model under test.
std::vector<EnergyQ> check_energy_hypothesis(const DynamicsProfile& profile,
                                             const VolumeAtPrice& dist);

EigenvalueCheck check_eigenvalue_identity(const VolumeAtPrice& dist, double fitted_omega);

// CSV with a units header row under the column names.
void write_profile_csv(const DynamicsProfile& profile, std::ostream& out);

}  // namespace vpwave
