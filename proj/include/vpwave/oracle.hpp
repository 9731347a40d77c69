#pragma once

#include <json.hpp>

#include <array>
#include <vector>

namespace vpwave {

// Brute-force verification reports for the stationary-wave ODEs. The closed
// forms are substituted and differenced numerically; no fitting machinery is
// involved, which is what makes this an independent oracle.
struct ResidualReport {
    std::vector<double> grid;        // shifted prices p' > 0
    std::vector<double> residuals;   // ODE residual per grid point
    double max_abs_residual = 0.0;
    std::array<double, 2> boundary_decay{};  // psi at the outermost grid points
};

// Geometric grid on [1e-2, 20] with 2000 points.
std::vector<double> standard_oracle_grid();

// Residual of p' psi'' + psi' + omega^2 p' psi = 0 with psi = J0(omega p'),
// derivatives by central differences at step h (extended precision, so the
// h^2 truncation term stays visible down to h ~ 1e-5).
// Throws GridTouchesSingularity when a stencil reaches p' <= 0.
ResidualReport bessel_ode_residual(double omega, const std::vector<double>& grid, double h);

// Same residual with psi built at a different frequency; a mismatched psi is
// the negative control (the residual grows like |omega^2 - psi_omega^2| p' psi).
ResidualReport bessel_ode_residual_at(double omega, double psi_omega,
                                      const std::vector<double>& grid, double h);

// Residual of psi'' + psi'/p' + (E/p' - A) psi = 0 with the order-m solution
// psi = e^{-sqrt(A) p'} F(-m, 1, 2 sqrt(A) p') and sqrt(A) = E/(1+2m).
ResidualReport kummer_ode_residual(int m, double e, const std::vector<double>& grid, double h);

// Same residual with an explicit sqrt(A); lets tests drive a wrong eigenvalue
// through the ODE as a negative control.
ResidualReport kummer_ode_residual_at(int m, double e, double sqrt_a,
                                      const std::vector<double>& grid, double h);

// Shooting search: integrates the order-m equation outward from a series
// start near p' = 0 over a bracket of trial eigenvalues and returns the A
// where the solution decays instead of blowing up. Independent of the
// closed-form ladder. Throws BracketMiss; m is capped at 10.
double eigenvalue_search(int m, double e);

nlohmann::json to_json(const ResidualReport& report);

}  // namespace vpwave
