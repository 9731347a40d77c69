#include "vpwave/fitting.hpp"

#include "vpwave/errors.hpp"
#include "vpwave/specfun.hpp"

#include <Eigen/Dense>
#include <boost/math/distributions/fisher_f.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>

namespace vpwave {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

constexpr double kFtol = 1e-14;
constexpr double kXtol = 1e-12;
constexpr double kGtol = 1e-12;
constexpr double kLambdaInit = 1e-3;
constexpr double kLambdaMax = 1e13;

struct Box {
    VectorXd lo, hi, typ;  // typ sets the finite-difference step floor
};

VectorXd clamp_into(VectorXd theta, const Box& box) {
    for (Eigen::Index i = 0; i < theta.size(); ++i)
        theta[i] = std::clamp(theta[i], box.lo[i], box.hi[i]);
    return theta;
}

using ResidualFn = std::function<VectorXd(const VectorXd&)>;

struct LmOutcome {
    VectorXd theta;
    double objective = std::numeric_limits<double>::infinity();
    int iterations = 0;
    bool converged = false;
};

MatrixXd jacobian(const ResidualFn& fn, const VectorXd& theta, const VectorXd& r0,
                  const Box& box) {
    const Eigen::Index n = r0.size(), p = theta.size();
    MatrixXd jac(n, p);
    for (Eigen::Index j = 0; j < p; ++j) {
        double h = 1e-6 * std::max(std::fabs(theta[j]), box.typ[j]);
        for (int attempt = 0; attempt < 2; ++attempt) {
            // keep both sample points inside the box; divide by actual spread
            const double hi = std::min(theta[j] + h, box.hi[j]);
            const double lo = std::max(theta[j] - h, box.lo[j]);
            VectorXd tp = theta, tm = theta;
            tp[j] = hi;
            tm[j] = lo;
            jac.col(j) = (fn(tp) - fn(tm)) / std::max(hi - lo, 1e-300);
            // a dead column at a node or symmetric configuration: widen once
            if (jac.col(j).cwiseAbs().maxCoeff() > 0.0 || attempt == 1) break;
            h *= 64.0;
        }
    }
    return jac;
}

LmOutcome levmar(const ResidualFn& fn, VectorXd theta, const Box& box, int max_iterations) {
    LmOutcome out;
    theta = clamp_into(std::move(theta), box);
    VectorXd r = fn(theta);
    double s = r.squaredNorm();
    if (!std::isfinite(s)) return out;

    double lambda = kLambdaInit;
    int iter = 0;
    for (; iter < max_iterations; ++iter) {
        const MatrixXd jac = jacobian(fn, theta, r, box);
        const VectorXd g = jac.transpose() * r;
        if (g.cwiseAbs().maxCoeff() <= kGtol) {
            out.converged = true;
            break;
        }
        MatrixXd jtj = jac.transpose() * jac;
        const VectorXd diag = jtj.diagonal().cwiseMax(1e-12);

        bool accepted = false;
        for (int tries = 0; tries < 40 && lambda <= kLambdaMax; ++tries) {
            MatrixXd damped = jtj;
            damped.diagonal() += lambda * diag;
            const VectorXd step = damped.ldlt().solve(-g);
            const VectorXd trial = clamp_into(theta + step, box);
            const VectorXd rt = fn(trial);
            const double st = rt.squaredNorm();
            if (std::isfinite(st) && st <= s) {
                const double drop = s - st;
                const double move = (trial - theta).cwiseAbs().maxCoeff();
                theta = trial;
                r = rt;
                s = st;
                lambda = std::max(lambda * 0.3, 1e-12);
                accepted = true;
                if (drop <= kFtol * std::max(s, 1e-300) &&
                    move <= kXtol * (theta.cwiseAbs().maxCoeff() + kXtol)) {
                    out.converged = true;
                }
                break;
            }
            lambda *= 7.0;
        }
        if (!accepted || out.converged) {
            ++iter;
            break;
        }
    }
    out.theta = theta;
    out.objective = s;
    out.iterations = iter;
    return out;
}

// --- parameter packing per family ---

struct Packing {
    int count = 0;
    Box box;
    std::function<ModelSpec(const VectorXd&)> unpack;
    std::function<VectorXd(const ModelSpec&)> pack;
};

Packing make_packing(const VolumeAtPrice& dist, Family family, const FitOptions& opts) {
    const double p_lo = dist.prices.front(), p_hi = dist.prices.back();
    const double width = std::max(p_hi - p_lo, dist.tick);
    const double peak = *std::max_element(dist.probabilities.begin(), dist.probabilities.end());
    const double c_hi = std::max(4.0 * peak, 1e-6);
    const double c_typ = std::max(peak, 1e-6);
    const double omega_lo = 1e-3 / width;
    const double omega_hi = kJ0FirstZero / dist.tick;  // first node no closer than one tick
    const double p0_lo = p_lo - 2.0 * dist.tick, p0_hi = p_hi + 2.0 * dist.tick;
    const double omega_typ = kJ0FirstZero / width;

    Packing pk;
    auto set_box = [&](std::initializer_list<double> lo, std::initializer_list<double> hi,
                       std::initializer_list<double> typ) {
        pk.box.lo = Eigen::Map<const VectorXd>(std::data(lo), static_cast<long>(lo.size()));
        pk.box.hi = Eigen::Map<const VectorXd>(std::data(hi), static_cast<long>(hi.size()));
        pk.box.typ = Eigen::Map<const VectorXd>(std::data(typ), static_cast<long>(typ.size()));
    };

    switch (family) {
        case Family::BesselSingle:
            pk.count = 3;
            set_box({1e-12, omega_lo, p0_lo}, {c_hi, omega_hi, p0_hi},
                    {c_typ, omega_typ, dist.tick});
            pk.unpack = [](const VectorXd& t) { return ModelSpec::bessel(t[0], t[1], t[2]); };
            pk.pack = [](const ModelSpec& s) {
                const auto& b = s.bessel_params();
                VectorXd t(3);
                t << b.c, b.omega, b.p0;
                return t;
            };
            break;
        case Family::BesselSuperposition:
            if (opts.tie_superposition) {
                pk.count = 4;
                set_box({1e-12, omega_lo, p0_lo, p0_lo}, {c_hi, omega_hi, p0_hi, p0_hi},
                        {c_typ, omega_typ, dist.tick, dist.tick});
                pk.unpack = [](const VectorXd& t) {
                    const double a = std::min(t[2], t[3]), b = std::max(t[2], t[3]);
                    return ModelSpec::superposition(t[0], t[1], a, t[1], b);
                };
                pk.pack = [](const ModelSpec& s) {
                    const auto& sp = s.superposition_params();
                    VectorXd t(4);
                    t << sp.c, sp.omega1, sp.p01, sp.p02;
                    return t;
                };
            } else {
                pk.count = 5;
                set_box({1e-12, omega_lo, p0_lo, omega_lo, p0_lo},
                        {c_hi, omega_hi, p0_hi, omega_hi, p0_hi},
                        {c_typ, omega_typ, dist.tick, omega_typ, dist.tick});
                pk.unpack = [](const VectorXd& t) {
                    if (t[2] <= t[4]) return ModelSpec::superposition(t[0], t[1], t[2], t[3], t[4]);
                    return ModelSpec::superposition(t[0], t[3], t[4], t[1], t[2]);
                };
                pk.pack = [](const ModelSpec& s) {
                    const auto& sp = s.superposition_params();
                    VectorXd t(5);
                    t << sp.c, sp.omega1, sp.p01, sp.omega2, sp.p02;
                    return t;
                };
            }
            break;
        case Family::Kummer: {
            // optimize over sqrt(A): the A box spans ~11 decades and squashes
            // finite-difference steps at the small end
            const double sa_lo = 1e-3 / width, sa_hi = 2.0 / dist.tick;
            const double sa_typ = 2.0 / width;
            pk.count = 3;
            set_box({1e-12, sa_lo, p0_lo}, {c_hi, sa_hi, p0_hi}, {c_typ, sa_typ, dist.tick});
            const int m = opts.kummer_order;
            pk.unpack = [m](const VectorXd& t) {
                return ModelSpec::kummer(t[0], m, t[1] * t[1], t[2]);
            };
            pk.pack = [](const ModelSpec& s) {
                const auto& k = s.kummer_params();
                VectorXd t(3);
                t << k.c, std::sqrt(k.a), k.p0;
                return t;
            };
            break;
        }
    }
    return pk;
}

double tie_break_key(const ModelSpec& spec) {
    switch (spec.family) {
        case Family::BesselSingle: return spec.bessel_params().omega;
        case Family::BesselSuperposition: {
            const auto& s = spec.superposition_params();
            return s.omega1 + s.omega2;
        }
        case Family::Kummer: return spec.kummer_params().a;
    }
    return 0.0;
}

// first grid distance from the peak at which the curve falls below 10% of it
double first_node_halfwidth(const VolumeAtPrice& dist, std::size_t peak_idx) {
    const double threshold = 0.1 * dist.probabilities[peak_idx];
    const double peak_price = dist.prices[peak_idx];
    double h = std::numeric_limits<double>::infinity();
    for (std::size_t i = peak_idx + 1; i < dist.levels(); ++i) {
        if (dist.probabilities[i] < threshold) {
            h = dist.prices[i] - peak_price;
            break;
        }
    }
    for (std::size_t i = peak_idx; i-- > 0;) {
        if (dist.probabilities[i] < threshold) {
            h = std::min(h, peak_price - dist.prices[i]);
            break;
        }
    }
    if (!std::isfinite(h))
        h = std::max((dist.prices.back() - dist.prices.front()) / 2.0, dist.tick);
    return std::max(h, dist.tick);
}

std::size_t argmax_level(const VolumeAtPrice& dist) {
    return static_cast<std::size_t>(
        std::max_element(dist.probabilities.begin(), dist.probabilities.end()) -
        dist.probabilities.begin());
}

// first positive root of F(-m, 1, x); 0 when the polynomial has none (m = 0)
double first_kummer_root(int m) {
    if (m < 1) return 0.0;
    const double hi = 4.0 * m + 2.0;
    double x_prev = 1e-6, f_prev = kummer(m, x_prev);
    const int steps = 4000;
    for (int i = 1; i <= steps; ++i) {
        const double x = hi * i / steps;
        const double f = kummer(m, x);
        if ((f_prev < 0.0) != (f < 0.0)) {
            double a = x_prev, b = x;
            for (int it = 0; it < 60; ++it) {
                const double mid = 0.5 * (a + b);
                if ((kummer(m, mid) < 0.0) == (f_prev < 0.0))
                    a = mid;
                else
                    b = mid;
            }
            return 0.5 * (a + b);
        }
        x_prev = x;
        f_prev = f;
    }
    return 0.0;
}

// distance from the peak to the nearest pronounced local minimum; for order
// m >= 1 shapes that dip marks the first node of F, which pins sqrt(A) far
// better than a log-slope through a non-monotone profile
double nearest_dip_distance(const VolumeAtPrice& dist, std::size_t peak_idx) {
    const auto& pr = dist.probabilities;
    const double cutoff = 0.6 * pr[peak_idx];
    double best = 0.0;
    for (std::size_t i = peak_idx + 1; i + 1 < pr.size(); ++i) {
        if (pr[i] < cutoff && pr[i] <= pr[i - 1] && pr[i] <= pr[i + 1]) {
            best = dist.prices[i] - dist.prices[peak_idx];
            break;
        }
    }
    for (std::size_t i = peak_idx; i-- > 1;) {
        if (pr[i] < cutoff && pr[i] <= pr[i - 1] && pr[i] <= pr[i + 1]) {
            const double d = dist.prices[peak_idx] - dist.prices[i];
            if (best == 0.0 || d < best) best = d;
            break;
        }
    }
    return best;
}

// local maxima sorted by height, greedily kept when separated by >= min_sep
std::vector<std::size_t> separated_maxima(const VolumeAtPrice& dist, double min_sep) {
    std::vector<std::size_t> candidates;
    const auto& pr = dist.probabilities;
    for (std::size_t i = 0; i < pr.size(); ++i) {
        const bool left_ok = i == 0 || pr[i] >= pr[i - 1];
        const bool right_ok = i + 1 == pr.size() || pr[i] >= pr[i + 1];
        if (left_ok && right_ok) candidates.push_back(i);
    }
    std::stable_sort(candidates.begin(), candidates.end(),
                     [&](std::size_t a, std::size_t b) { return pr[a] > pr[b]; });
    std::vector<std::size_t> kept;
    for (std::size_t c : candidates) {
        bool ok = true;
        for (std::size_t k : kept)
            if (std::fabs(dist.prices[c] - dist.prices[k]) < min_sep) ok = false;
        if (ok) kept.push_back(c);
        if (kept.size() >= 2) break;
    }
    return kept;
}

}  // namespace

int n_params(Family family, bool tied_superposition) {
    switch (family) {
        case Family::BesselSingle: return 3;
        case Family::BesselSuperposition: return tied_superposition ? 4 : 5;
        case Family::Kummer: return 3;
    }
    return 0;
}

double r_squared_critical(int n_levels, int n_params_, double confidence) {
    if (!(confidence > 0.0 && confidence < 1.0))
        throw std::invalid_argument("confidence must be in (0, 1)");
    const int dof = n_levels - n_params_ - 1;
    if (dof < 1) throw InsufficientDegreesOfFreedom(n_levels, n_params_);
    const boost::math::fisher_f f(n_params_, dof);
    const double f_crit = boost::math::quantile(f, confidence);
    return n_params_ * f_crit / (n_params_ * f_crit + dof);
}

std::vector<ModelSpec> initialize(const VolumeAtPrice& dist, Family family,
                                  const FitOptions& opts) {
    const std::size_t peak_idx = argmax_level(dist);
    const double peak_p = dist.prices[peak_idx];
    const double peak_prob = std::max(dist.probabilities[peak_idx], 1e-12);
    const double mean_p = price_mean(dist);
    const double h = first_node_halfwidth(dist, peak_idx);
    const double omega_b = kJ0FirstZero / h;

    std::vector<ModelSpec> starts;
    switch (family) {
        case Family::BesselSingle: {
            for (double w : {omega_b, 0.5 * omega_b, 2.0 * omega_b})
                for (double p0 : {mean_p, peak_p})
                    starts.push_back(ModelSpec::bessel(peak_prob, w, p0));
            break;
        }
        case Family::BesselSuperposition: {
            const double width = std::max(dist.prices.back() - dist.prices.front(), dist.tick);
            const double min_sep = std::max(3.0 * dist.tick, width / 8.0);
            const auto peaks = separated_maxima(dist, min_sep);
            double c1 = peak_p, c2;
            if (peaks.size() >= 2) {
                c1 = dist.prices[peaks[0]];
                c2 = dist.prices[peaks[1]];
            } else {
                c2 = peak_p + width / 3.0 <= dist.prices.back() ? peak_p + width / 3.0
                                                                : peak_p - width / 3.0;
            }
            const double lo = std::min(c1, c2), hi = std::max(c1, c2);
            for (double w : {omega_b, 0.5 * omega_b, 2.0 * omega_b})
                starts.push_back(ModelSpec::superposition(0.5 * peak_prob, w, lo, w, hi));
            starts.push_back(ModelSpec::superposition(0.5 * peak_prob, omega_b, mean_p,
                                                      omega_b, hi));
            break;
        }
        case Family::Kummer: {
            // decay rate from the log-slope of the profile
            double sxx = 0.0, sxy = 0.0, sx = 0.0, sy = 0.0;
            int npts = 0;
            for (std::size_t i = 0; i < dist.levels(); ++i) {
                const double prob = dist.probabilities[i];
                if (prob <= 1e-4 * peak_prob) continue;
                const double x = std::fabs(dist.prices[i] - peak_p);
                const double y = std::log(prob);
                sx += x;
                sy += y;
                sxx += x * x;
                sxy += x * y;
                ++npts;
            }
            const double width = std::max(dist.prices.back() - dist.prices.front(), dist.tick);
            double slope = 0.0;
            const double denom = npts * sxx - sx * sx;
            if (npts >= 2 && denom > 0.0) slope = (npts * sxy - sx * sy) / denom;

            std::vector<double> sas;
            // interior dip = first node of F, when the order admits one
            const double dip = nearest_dip_distance(dist, peak_idx);
            const double root = first_kummer_root(opts.kummer_order);
            if (dip > 0.0 && root > 0.0) sas.push_back(root / (2.0 * dip));
            sas.push_back(std::clamp(-slope, 0.1 / width, 2.0 / dist.tick));
            sas.push_back(4.0 / width);
            sas.push_back(16.0 / width);

            for (double sa : sas) {
                for (double p0 : {peak_p, mean_p}) {
                    const bool dup = std::any_of(starts.begin(), starts.end(), [&](const auto& s) {
                        const auto& k = s.kummer_params();
                        return std::fabs(std::sqrt(k.a) - sa) <= 1e-9 * sa &&
                               std::fabs(k.p0 - p0) <= 1e-12;
                    });
                    if (!dup)
                        starts.push_back(
                            ModelSpec::kummer(peak_prob, opts.kummer_order, sa * sa, p0));
                }
            }
            break;
        }
    }
    if (starts.size() > 8) starts.resize(8);
    return starts;
}

FitResult fit(const VolumeAtPrice& dist, Family family, std::optional<ModelSpec> init,
              const FitOptions& opts) {
    const int k = n_params(family, opts.tie_superposition);
    const std::size_t min_levels = static_cast<std::size_t>(k) + 2;  // dof >= 1
    if (dist.levels() < min_levels) throw TooFewLevels(dist.levels(), min_levels);

    const Packing pk = make_packing(dist, family, opts);
    const auto& prices = dist.prices;
    const auto& probs = dist.probabilities;
    const ResidualFn residual_fn = [&](const VectorXd& theta) {
        const ModelSpec spec = pk.unpack(theta);
        VectorXd r(static_cast<Eigen::Index>(prices.size()));
        for (std::size_t i = 0; i < prices.size(); ++i)
            r[static_cast<Eigen::Index>(i)] = probs[i] - eval_model(spec, prices[i]);
        return r;
    };

    std::vector<ModelSpec> starts = initialize(dist, family, opts);
    if (init) {
        init->validate();
        starts.insert(starts.begin(), *init);
        if (starts.size() > 8) starts.resize(8);
    }

    const LmOutcome* best = nullptr;
    std::vector<LmOutcome> outcomes;
    outcomes.reserve(starts.size());
    for (const ModelSpec& s : starts)
        outcomes.push_back(levmar(residual_fn, pk.pack(s), pk.box, opts.max_iterations));
    for (const LmOutcome& o : outcomes) {
        if (!std::isfinite(o.objective)) continue;
        if (!best || o.objective < best->objective * (1.0 - 1e-12)) {
            best = &o;
        } else if (o.objective <= best->objective * (1.0 + 1e-12) &&
                   tie_break_key(pk.unpack(o.theta)) < tie_break_key(pk.unpack(best->theta))) {
            best = &o;  // equal objectives: prefer the smoother curve
        }
    }
    if (!best) throw AllStartsDiverged();

    FitResult result;
    result.spec = pk.unpack(best->theta);
    result.n_levels = static_cast<int>(dist.levels());
    result.iterations = best->iterations;
    result.converged = best->converged;
    result.objective = best->objective;

    const VectorXd r = residual_fn(best->theta);
    result.residuals.assign(r.data(), r.data() + r.size());

    double mean = 0.0;
    for (double p : probs) mean += p;
    mean /= static_cast<double>(probs.size());
    double sst = 0.0;
    for (double p : probs) sst += (p - mean) * (p - mean);
    // a perfectly flat sample has no variance to explain; R^2 pinned to 0
    result.r_squared = sst > 0.0 ? 1.0 - best->objective / sst : 0.0;
    result.r_squared_crit = r_squared_critical(result.n_levels, k, opts.confidence);
    result.significant = result.r_squared > result.r_squared_crit;
    result.p0_nearest_tick = std::nearbyint(result.spec.center() / dist.tick) * dist.tick;
    return result;
}

LadderReport run_ladder(const VolumeAtPrice& dist, const FitOptions& opts) {
    struct Step {
        Family family;
        const char* label;
        bool tied;
        int kummer_order;
    };
    static constexpr Step kSteps[] = {
        {Family::BesselSingle, "bessel", false, 1},
        {Family::BesselSuperposition, "superposition_one_eigenvalue", true, 1},
        {Family::BesselSuperposition, "superposition_two_eigenvalues", false, 1},
        {Family::Kummer, "kummer_m1", false, 1},
    };

    LadderReport report;
    for (const Step& step : kSteps) {
        LadderAttempt attempt;
        attempt.family = step.family;
        attempt.label = step.label;
        FitOptions step_opts = opts;
        step_opts.tie_superposition = step.tied;
        step_opts.kummer_order = step.kummer_order;
        try {
            attempt.result = fit(dist, step.family, std::nullopt, step_opts);
        } catch (const Error& e) {
            attempt.error = e.what();
        }
        report.attempts.push_back(std::move(attempt));
        const auto& back = report.attempts.back();
        if (back.result && back.result->significant) {
            report.chosen = report.attempts.size() - 1;
            break;
        }
    }
    return report;
}

nlohmann::json to_json(const FitResult& r) {
    return nlohmann::json{{"spec", to_json(r.spec)},
                          {"r_squared", r.r_squared},
                          {"r_squared_crit", r.r_squared_crit},
                          {"significant", r.significant},
                          {"n_levels", r.n_levels},
                          {"iterations", r.iterations},
                          {"converged", r.converged},
                          {"objective", r.objective},
                          {"p0_nearest_tick", r.p0_nearest_tick},
                          {"residuals", r.residuals}};
}

nlohmann::json to_json(const LadderReport& r) {
    nlohmann::json attempts = nlohmann::json::array();
    for (const LadderAttempt& a : r.attempts) {
        nlohmann::json entry{{"label", a.label}, {"family", family_name(a.family)}};
        if (a.result)
            entry["result"] = to_json(*a.result);
        else
            entry["error"] = a.error;
        attempts.push_back(std::move(entry));
    }
    nlohmann::json j{{"attempts", attempts}};
    if (r.chosen)
        j["chosen"] = *r.chosen;
    else
        j["chosen"] = nullptr;
    return j;
}

FitResult fit_result_from_json(const nlohmann::json& j) {
    try {
        FitResult r;
        r.spec = model_spec_from_json(j.at("spec"));
        r.r_squared = j.at("r_squared");
        r.r_squared_crit = j.at("r_squared_crit");
        r.significant = j.at("significant");
        r.n_levels = j.at("n_levels");
        r.iterations = j.value("iterations", 0);
        r.converged = j.value("converged", false);
        r.objective = j.value("objective", 0.0);
        r.p0_nearest_tick = j.value("p0_nearest_tick", 0.0);
        if (j.contains("residuals")) r.residuals = j.at("residuals").get<std::vector<double>>();
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw MalformedSpec(e.what());
    }
}

}  // namespace vpwave
