#include "vpwave/dynamics.hpp"

#include "vpwave/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

namespace vpwave {

namespace {

// Under V/B^2 = 1 the fitted omega^2 (units 1/price^2) and (v/V)*v_tt
// (units share/s^2) share one numeric scale; this is where that convention
// enters the code.
VolumeAccelerationQ natural_omega_sq(double omega) {
    return VolumeAccelerationQ{omega * omega};
}

}  // namespace

EigenvalueCheck check_eigenvalue_identity(const VolumeAtPrice& dist, double fitted_omega) {
    const SecondsQ t{dist.session_span};
    const SharesQ total{static_cast<double>(dist.total_volume)};
    const VolumeAccelerationQ w2 = natural_omega_sq(fitted_omega);

    EigenvalueCheck check;
    check.q.reserve(dist.levels());
    check.a_i.reserve(dist.levels());
    double qmin = std::numeric_limits<double>::infinity(), qmax = -qmin, qsum = 0.0;
    for (std::size_t i = 0; i < dist.levels(); ++i) {
        const SharesQ v{static_cast<double>(dist.volumes[i])};
        const VolumeAccelerationQ v_tt = v / t / t;
        const Dimensionless share = v / total;
        const VolumeAccelerationQ q = share * v_tt;
        const VolumeAccelerationQ a = v_tt - w2;
        check.q.push_back(q.value);
        check.a_i.push_back(a.value);
        qmin = std::min(qmin, q.value);
        qmax = std::max(qmax, q.value);
        qsum += q.value;
        check.max_deviation = std::max(check.max_deviation, std::fabs(q.value - w2.value));
        check.a_estimate += a.value;
    }
    const double n = static_cast<double>(dist.levels());
    check.a_estimate /= n;
    const double qmean = qsum / n;
    check.dispersion = qmean != 0.0 ? (qmax - qmin) / qmean : 0.0;
    return check;
}

DynamicsProfile compute_profile(const VolumeAtPrice& dist, const FitResult& fitted) {
    if (fitted.spec.family != Family::BesselSingle) throw NotBesselFit();
    const auto& prm = fitted.spec.bessel_params();

    DynamicsProfile prof;
    prof.omega = prm.omega;
    prof.p0 = prm.p0;
    prof.span = SecondsQ{dist.session_span};
    prof.total_volume = SharesQ{static_cast<double>(dist.total_volume)};

    const EigenvalueCheck check = check_eigenvalue_identity(dist, prm.omega);
    prof.a_scalar = ForceQ{check.a_estimate};

    const std::size_t n = dist.levels();
    prof.price.reserve(n);
    prof.volume.reserve(n);
    prof.v_t.reserve(n);
    prof.v_tt.reserve(n);
    prof.m_t.reserve(n);
    prof.energy.reserve(n);
    prof.w.reserve(n);
    prof.f_r.reserve(n);
    prof.f_t.reserve(n);
    prof.omega_sq_check = check.q;

    for (std::size_t i = 0; i < n; ++i) {
        const PriceQ p{dist.prices[i]};
        const SharesQ v{static_cast<double>(dist.volumes[i])};
        const VolumeLiquidityQ v_t = v / prof.span;
        const VolumeAccelerationQ v_tt = v_t / prof.span;
        const Dimensionless share = v / prof.total_volume;
        // W = A*(p - p0): with A in share/s^2 and (p - p0) in currency/share
        // the product lands on currency/s^2, the dimension of E
        const EnergyQ w = prof.a_scalar * (p - PriceQ{prof.p0});
        prof.price.push_back(p);
        prof.volume.push_back(v);
        prof.v_t.push_back(v_t);
        prof.v_tt.push_back(v_tt);
        prof.m_t.push_back(p * v_t);
        prof.energy.push_back(p * v_tt);
        prof.w.push_back(w);
        prof.f_r.push_back(ForceQ{-(1.0 - share.value) * v_tt.value});
        prof.f_t.push_back(ForceQ{v_tt.value});
    }
    return prof;
}

std::vector<EnergyQ> check_energy_hypothesis(const DynamicsProfile& profile,
                                             const VolumeAtPrice& dist) {
    if (dist.levels() != profile.levels())
        throw std::invalid_argument("profile and distribution are not aligned");
    std::vector<EnergyQ> residuals;
    residuals.reserve(profile.levels());
    for (std::size_t i = 0; i < profile.levels(); ++i) {
        const EnergyQ dynamic = (profile.v_t[i] * profile.v_t[i] / profile.total_volume) *
                                profile.price[i];
        residuals.push_back(-profile.energy[i] + dynamic + profile.w[i]);
    }
    return residuals;
}

void write_profile_csv(const DynamicsProfile& profile, std::ostream& out) {
    out << "price,volume,v_t,v_tt,m_t,E,W,F_R,F_T,omega_sq_check\n";
    out << PriceQ::unit_label() << ',' << SharesQ::unit_label() << ','
        << VolumeLiquidityQ::unit_label() << ',' << VolumeAccelerationQ::unit_label() << ','
        << AmountLiquidityQ::unit_label() << ',' << EnergyQ::unit_label() << ','
        << EnergyQ::unit_label() << ',' << ForceQ::unit_label() << ',' << ForceQ::unit_label()
        << ',' << ForceQ::unit_label() << '\n';
    const auto prec = out.precision(12);
    for (std::size_t i = 0; i < profile.levels(); ++i) {
        out << profile.price[i].value << ',' << profile.volume[i].value << ','
            << profile.v_t[i].value << ',' << profile.v_tt[i].value << ','
            << profile.m_t[i].value << ',' << profile.energy[i].value << ','
            << profile.w[i].value << ',' << profile.f_r[i].value << ','
            << profile.f_t[i].value << ',' << profile.omega_sq_check[i] << '\n';
    }
    out.precision(prec);
}

}  // namespace vpwave
