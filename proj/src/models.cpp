#include "vpwave/models.hpp"

#include "vpwave/errors.hpp"
#include "vpwave/specfun.hpp"

#include <cmath>

namespace vpwave {

std::string family_name(Family f) {
    switch (f) {
        case Family::BesselSingle: return "bessel";
        case Family::BesselSuperposition: return "superposition";
        case Family::Kummer: return "kummer";
    }
    return "?";
}

Family family_from_name(const std::string& name) {
    if (name == "bessel") return Family::BesselSingle;
    if (name == "superposition") return Family::BesselSuperposition;
    if (name == "kummer") return Family::Kummer;
    throw MalformedSpec("unknown family '" + name + "'");
}

ModelSpec ModelSpec::bessel(double c, double omega, double p0) {
    return {Family::BesselSingle, BesselSingleParams{c, omega, p0}};
}

ModelSpec ModelSpec::superposition(double c, double omega1, double p01, double omega2, double p02) {
    return {Family::BesselSuperposition, SuperpositionParams{c, omega1, p01, omega2, p02}};
}

ModelSpec ModelSpec::kummer(double c, int m, double a, double p0) {
    return {Family::Kummer, KummerParams{c, m, a, p0}};
}

double ModelSpec::center() const {
    switch (family) {
        case Family::BesselSingle: return bessel_params().p0;
        case Family::BesselSuperposition: return superposition_params().p01;
        case Family::Kummer: return kummer_params().p0;
    }
    return 0.0;
}

void ModelSpec::validate() const {
    switch (family) {
        case Family::BesselSingle: {
            const auto& b = bessel_params();
            if (!(b.c > 0.0)) throw MalformedSpec("C must be > 0");
            if (!(b.omega > 0.0)) throw MalformedSpec("omega must be > 0");
            break;
        }
        case Family::BesselSuperposition: {
            const auto& s = superposition_params();
            if (!(s.c > 0.0)) throw MalformedSpec("C must be > 0");
            if (!(s.omega1 > 0.0 && s.omega2 > 0.0)) throw MalformedSpec("omega must be > 0");
            if (!(s.p01 <= s.p02)) throw MalformedSpec("centers must satisfy p01 <= p02");
            break;
        }
        case Family::Kummer: {
            const auto& k = kummer_params();
            if (!(k.c > 0.0)) throw MalformedSpec("C must be > 0");
            if (!(k.a > 0.0)) throw MalformedSpec("A must be > 0");
            if (k.m < 0 || k.m > kKummerOrderCap) throw MalformedSpec("m outside [0, 64]");
            break;
        }
    }
}

double eval_bessel_single(const BesselSingleParams& prm, double p) {
    return prm.c * std::fabs(bessel_j0(prm.omega * (p - prm.p0)));
}

double eval_superposition(const SuperpositionParams& prm, double p) {
    return prm.c * (std::fabs(bessel_j0(prm.omega1 * (p - prm.p01))) +
                    std::fabs(bessel_j0(prm.omega2 * (p - prm.p02))));
}

double eval_kummer(const KummerParams& prm, double p) {
    const double d = std::fabs(p - prm.p0);
    const double sa = std::sqrt(prm.a);
    return prm.c * std::exp(-sa * d) * std::fabs(kummer(prm.m, 2.0 * sa * d));
}

double eval_model(const ModelSpec& spec, double p) {
    switch (spec.family) {
        case Family::BesselSingle: return eval_bessel_single(spec.bessel_params(), p);
        case Family::BesselSuperposition: return eval_superposition(spec.superposition_params(), p);
        case Family::Kummer: return eval_kummer(spec.kummer_params(), p);
    }
    return 0.0;
}

long double kummer_wave_ext(int m, long double sqrt_a, long double pprime) {
    return std::exp(-sqrt_a * pprime) *
           KummerPolynomial::get(m).eval(2.0L * sqrt_a * pprime);
}

long double kummer_wave_deriv_ext(int m, long double sqrt_a, long double pprime) {
    const KummerPolynomial& poly = KummerPolynomial::get(m);
    const long double z = 2.0L * sqrt_a * pprime;
    return std::exp(-sqrt_a * pprime) * sqrt_a * (2.0L * poly.eval_deriv(z) - poly.eval(z));
}

double kummer_wave(int m, double sqrt_a, double pprime) {
    return static_cast<double>(kummer_wave_ext(m, sqrt_a, pprime));
}

double kummer_eigenvalue_sqrt(double e, int m) {
    return e / (1.0 + 2.0 * m);
}

ModelCurve normalize_on_grid(const ModelSpec& spec, const VolumeAtPrice& dist) {
    spec.validate();
    ModelCurve curve;
    curve.prices = dist.prices;
    curve.values.reserve(dist.levels());
    double sum = 0.0;
    for (double p : dist.prices) {
        const double v = eval_model(spec, p);
        curve.values.push_back(v);
        sum += v;
    }
    if (!(sum > 0.0)) throw DegenerateCurve();
    for (double& v : curve.values) v /= sum;
    return curve;
}

nlohmann::json to_json(const ModelSpec& spec) {
    nlohmann::json prm;
    switch (spec.family) {
        case Family::BesselSingle: {
            const auto& b = spec.bessel_params();
            prm = {{"c", b.c}, {"omega", b.omega}, {"p0", b.p0}};
            break;
        }
        case Family::BesselSuperposition: {
            const auto& s = spec.superposition_params();
            prm = {{"c", s.c}, {"omega1", s.omega1}, {"p01", s.p01},
                   {"omega2", s.omega2}, {"p02", s.p02}};
            break;
        }
        case Family::Kummer: {
            const auto& k = spec.kummer_params();
            prm = {{"c", k.c}, {"m", k.m}, {"a", k.a}, {"p0", k.p0}};
            break;
        }
    }
    return nlohmann::json{{"family", family_name(spec.family)}, {"params", prm}};
}

ModelSpec model_spec_from_json(const nlohmann::json& j) {
    try {
        const Family fam = family_from_name(j.at("family").get<std::string>());
        const nlohmann::json& p = j.at("params");
        ModelSpec spec;
        switch (fam) {
            case Family::BesselSingle:
                spec = ModelSpec::bessel(p.at("c"), p.at("omega"), p.at("p0"));
                break;
            case Family::BesselSuperposition:
                spec = ModelSpec::superposition(p.at("c"), p.at("omega1"), p.at("p01"),
                                                p.at("omega2"), p.at("p02"));
                break;
            case Family::Kummer:
                spec = ModelSpec::kummer(p.at("c"), p.at("m").get<int>(), p.at("a"), p.at("p0"));
                break;
        }
        spec.validate();
        return spec;
    } catch (const nlohmann::json::exception& e) {
        throw MalformedSpec(e.what());
    }
}

}  // namespace vpwave
