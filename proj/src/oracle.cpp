#include "vpwave/oracle.hpp"

#include "vpwave/errors.hpp"
#include "vpwave/models.hpp"
#include "vpwave/specfun.hpp"

#include <cmath>
#include <functional>
#include <stdexcept>

namespace vpwave {

namespace {

void check_grid(const std::vector<double>& grid, double h) {
    if (grid.empty()) throw std::invalid_argument("empty grid");
    if (!(h > 0.0)) throw std::invalid_argument("step h must be > 0");
    for (std::size_t i = 0; i + 1 < grid.size(); ++i)
        if (!(grid[i] < grid[i + 1])) throw std::invalid_argument("grid must increase strictly");
    if (grid.front() - h <= 0.0) throw GridTouchesSingularity();
}

using WaveFn = std::function<long double(long double)>;

ResidualReport residual_scan(const std::vector<double>& grid, double h, const WaveFn& psi,
                             const std::function<long double(long double, long double,
                                                             long double, long double)>& form) {
    ResidualReport report;
    report.grid = grid;
    report.residuals.reserve(grid.size());
    const auto hl = static_cast<long double>(h);
    for (double p : grid) {
        const auto pl = static_cast<long double>(p);
        const long double f0 = psi(pl);
        const long double fp = psi(pl + hl);
        const long double fm = psi(pl - hl);
        const long double d1 = (fp - fm) / (2.0L * hl);
        const long double d2 = (fp - 2.0L * f0 + fm) / (hl * hl);
        const double r = static_cast<double>(form(pl, f0, d1, d2));
        report.residuals.push_back(r);
        report.max_abs_residual = std::max(report.max_abs_residual, std::fabs(r));
    }
    report.boundary_decay = {static_cast<double>(psi(static_cast<long double>(grid.front()))),
                             static_cast<double>(psi(static_cast<long double>(grid.back())))};
    return report;
}

}  // namespace

std::vector<double> standard_oracle_grid() {
    constexpr double lo = 1e-2, hi = 20.0;
    constexpr int n = 2000;
    std::vector<double> grid(n);
    const double ratio = std::log(hi / lo) / (n - 1);
    for (int i = 0; i < n; ++i) grid[static_cast<std::size_t>(i)] = lo * std::exp(ratio * i);
    return grid;
}

ResidualReport bessel_ode_residual_at(double omega, double psi_omega,
                                      const std::vector<double>& grid, double h) {
    if (!(omega > 0.0) || !(psi_omega > 0.0))
        throw std::invalid_argument("omega must be > 0");
    check_grid(grid, h);
    const auto w = static_cast<long double>(omega);
    const auto wp = static_cast<long double>(psi_omega);
    return residual_scan(
        grid, h, [wp](long double p) { return bessel_j0_ext(wp * p); },
        [w](long double p, long double f, long double d1, long double d2) {
            return p * d2 + d1 + w * w * p * f;
        });
}

ResidualReport bessel_ode_residual(double omega, const std::vector<double>& grid, double h) {
    return bessel_ode_residual_at(omega, omega, grid, h);
}

// Below this p', (psi' + E psi)/p' comes from the series derivative instead
// of differencing: the 1/p' factor would otherwise scale the h^2 truncation
// of d1 past the residual budget (the singular point is regular, so the
// combination itself stays finite on the eigenvalue ladder).
constexpr long double kSeriesLimitBelow = 0.25L;

ResidualReport kummer_ode_residual_at(int m, double e, double sqrt_a,
                                      const std::vector<double>& grid, double h) {
    if (m < 0 || m > 20) throw std::invalid_argument("order m outside [0, 20]");
    if (!(e > 0.0) || !(sqrt_a > 0.0)) throw std::invalid_argument("need E > 0 and sqrt(A) > 0");
    check_grid(grid, h);
    const auto el = static_cast<long double>(e);
    const auto sa = static_cast<long double>(sqrt_a);
    const long double a = sa * sa;
    const auto hl = static_cast<long double>(h);

    ResidualReport report;
    report.grid = grid;
    report.residuals.reserve(grid.size());
    for (double p : grid) {
        const auto pl = static_cast<long double>(p);
        const long double f0 = kummer_wave_ext(m, sa, pl);
        const long double fp = kummer_wave_ext(m, sa, pl + hl);
        const long double fm = kummer_wave_ext(m, sa, pl - hl);
        const long double d2 = (fp - 2.0L * f0 + fm) / (hl * hl);
        const long double d1 = pl < kSeriesLimitBelow ? kummer_wave_deriv_ext(m, sa, pl)
                                                      : (fp - fm) / (2.0L * hl);
        const double r = static_cast<double>(d2 + (d1 + el * f0) / pl - a * f0);
        report.residuals.push_back(r);
        report.max_abs_residual = std::max(report.max_abs_residual, std::fabs(r));
    }
    report.boundary_decay = {
        static_cast<double>(kummer_wave_ext(m, sa, static_cast<long double>(grid.front()))),
        static_cast<double>(kummer_wave_ext(m, sa, static_cast<long double>(grid.back())))};
    return report;
}

ResidualReport kummer_ode_residual(int m, double e, const std::vector<double>& grid, double h) {
    return kummer_ode_residual_at(m, e, kummer_eigenvalue_sqrt(e, m), grid, h);
}

namespace {

// Dimensionless form of the order-m equation under z = sqrt(A) p',
// lambda = E/sqrt(A):  psi'' + psi'/z + (lambda/z - 1) psi = 0.
// Eigenvalues sit at lambda = 1 + 2m, where the regular solution decays.
struct Shooter {
    double z_start = 0.5;
    double z_end = 35.0;   // e^{2 z_end} contrast between growth and decay
    double dt = 1e-3;

    // regular-solution series sum c_k z^k with c_0 = 1, c_1 = -lambda,
    // k^2 c_k = c_{k-2} - lambda c_{k-1}
    void series_start(double lambda, double& psi, double& dpsi) const {
        const auto lam = static_cast<long double>(lambda);
        const auto z = static_cast<long double>(z_start);
        long double ckm2 = 1.0L, ckm1 = -lam;
        long double sum = ckm2 + ckm1 * z;
        long double dsum = ckm1;
        long double zk = z;  // z^{k-1}
        for (int k = 2; k <= 60; ++k) {
            const long double ck = (ckm2 - lam * ckm1) / (static_cast<long double>(k) * k);
            dsum += static_cast<long double>(k) * ck * zk;
            zk *= z;
            sum += ck * zk;
            ckm2 = ckm1;
            ckm1 = ck;
        }
        psi = static_cast<double>(sum);
        dpsi = static_cast<double>(dsum);
    }

    // sign of psi at z_end; the sign of the growing-mode coefficient
    double endpoint(double lambda) const {
        double y0, y1;
        series_start(lambda, y0, y1);
        double z = z_start;
        const auto f = [lambda](double zz, double psi, double dpsi, double& out0, double& out1) {
            out0 = dpsi;
            out1 = -dpsi / zz - (lambda / zz - 1.0) * psi;
        };
        while (z < z_end - 1e-12) {
            const double step = std::min(dt, z_end - z);
            double k10, k11, k20, k21, k30, k31, k40, k41;
            f(z, y0, y1, k10, k11);
            f(z + step / 2, y0 + step / 2 * k10, y1 + step / 2 * k11, k20, k21);
            f(z + step / 2, y0 + step / 2 * k20, y1 + step / 2 * k21, k30, k31);
            f(z + step, y0 + step * k30, y1 + step * k31, k40, k41);
            y0 += step / 6 * (k10 + 2 * k20 + 2 * k30 + k40);
            y1 += step / 6 * (k11 + 2 * k21 + 2 * k31 + k41);
            z += step;
        }
        return y0;
    }
};

}  // namespace

double eigenvalue_search(int m, double e) {
    if (m < 0 || m > 10) throw std::invalid_argument("order m outside [0, 10]");
    if (!(e > 0.0)) throw std::invalid_argument("E must be > 0");

    const Shooter shooter;
    const double lambda_lo = 0.5, lambda_hi = 2.0 * m + 1.5, step = 0.25;

    int flips = 0;
    double prev_lambda = lambda_lo, prev_sign = shooter.endpoint(lambda_lo);
    double bracket_a = 0.0, bracket_b = 0.0;
    bool found = false;
    for (double lam = lambda_lo + step; lam <= lambda_hi + 1e-12 && !found; lam += step) {
        const double val = shooter.endpoint(lam);
        if ((prev_sign < 0.0) != (val < 0.0)) {
            if (flips == m) {
                bracket_a = prev_lambda;
                bracket_b = lam;
                found = true;
            }
            ++flips;
        }
        prev_lambda = lam;
        prev_sign = val;
    }
    if (!found) throw BracketMiss();

    double fa = shooter.endpoint(bracket_a);
    for (int it = 0; it < 80 && (bracket_b - bracket_a) > 1e-10 * bracket_b; ++it) {
        const double mid = 0.5 * (bracket_a + bracket_b);
        const double fm = shooter.endpoint(mid);
        if ((fa < 0.0) == (fm < 0.0)) {
            bracket_a = mid;
            fa = fm;
        } else {
            bracket_b = mid;
        }
    }
    const double lambda = 0.5 * (bracket_a + bracket_b);
    return (e / lambda) * (e / lambda);
}

nlohmann::json to_json(const ResidualReport& report) {
    return nlohmann::json{{"grid", report.grid},
                          {"residuals", report.residuals},
                          {"max_abs_residual", report.max_abs_residual},
                          {"boundary_decay", report.boundary_decay}};
}

}  // namespace vpwave
