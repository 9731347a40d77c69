#include "vpwave/errors.hpp"
#include "vpwave/fitting.hpp"
#include "vpwave/synth.hpp"

#include <doctest.h>

#include <cmath>
#include <numeric>
#include <vector>

using namespace vpwave;

namespace {

// frozen scipy.stats.f quantile values run through the R2 threshold formula
struct CritRef {
    int n, k;
    double confidence;
    double value;
};

const CritRef kCritRefs[] = {
    {5, 3, 0.95, 0.998457080697},
    {7, 5, 0.95, 0.999131800793},
    {10, 3, 0.95, 0.704013400538},
    {12, 3, 0.95, 0.603931801760},
    {12, 4, 0.95, 0.701889766436},
    {12, 5, 0.95, 0.785230063398},
    {25, 3, 0.95, 0.305036193273},
    {25, 4, 0.95, 0.364359489247},
    {30, 3, 0.95, 0.255557447445},
    {30, 5, 0.95, 0.353156756216},
    {41, 3, 0.95, 0.188176126011},
    {41, 5, 0.95, 0.262003763504},
    {60, 3, 0.95, 0.129194734222},
    {60, 3, 0.99, 0.181954182902},
    {200, 3, 0.95, 0.038989705318},
};

VolumeAtPrice synth_dist(const SynthConfig& c) {
    return build_distribution(generate(c), c.tick);
}

SynthConfig clean_bessel() {
    SynthConfig c;
    c.spec = ModelSpec::bessel(1.0, 5.0, 10.00);
    c.price_lo = 9.70;
    c.price_hi = 10.295;  // 60 ticks
    c.total_volume = 1000000000;
    c.trades = 600;
    c.noise = 0.0;
    c.seed = 1;
    return c;
}

VolumeAtPrice uniform_dist(int n) {
    std::vector<TradeRecord> trades;
    for (int i = 0; i < n; ++i)
        trades.push_back({1000 + i, 10.00 + 0.01 * i, 1000});
    return build_distribution(trades);
}

}  // namespace

TEST_CASE("critical R2 matches the frozen quantiles") {
    for (const auto& r : kCritRefs)
        CHECK(std::fabs(r_squared_critical(r.n, r.k, r.confidence) - r.value) <=
              1e-9 * r.value);
    // large-sample behavior: threshold collapses toward zero
    CHECK(r_squared_critical(1000, 3, 0.95) == doctest::Approx(7.812e-3).epsilon(1e-3));
    CHECK(r_squared_critical(100000, 3, 0.95) == doctest::Approx(7.815e-5).epsilon(1e-3));
}

TEST_CASE("critical R2 monotonicity") {
    for (int n : {10, 20, 40}) {
        CHECK(r_squared_critical(n, 3, 0.95) > r_squared_critical(n + 5, 3, 0.95));
        CHECK(r_squared_critical(n, 5, 0.95) > r_squared_critical(n, 4, 0.95));
        CHECK(r_squared_critical(n, 4, 0.95) > r_squared_critical(n, 3, 0.95));
        CHECK(r_squared_critical(n, 3, 0.99) > r_squared_critical(n, 3, 0.95));
    }
    CHECK(r_squared_critical(30, 3, 1e-9) < 1e-6);  // confidence -> 0 frees everything
}

TEST_CASE("critical R2 guards") {
    CHECK_THROWS_AS(r_squared_critical(4, 3, 0.95), InsufficientDegreesOfFreedom);
    CHECK_THROWS_AS(r_squared_critical(6, 5, 0.95), InsufficientDegreesOfFreedom);
    CHECK_THROWS_AS(r_squared_critical(30, 3, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(r_squared_critical(30, 3, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(r_squared_critical(30, 3, -0.5), std::invalid_argument);
}

TEST_CASE("parameter counts") {
    CHECK(n_params(Family::BesselSingle) == 3);
    CHECK(n_params(Family::BesselSuperposition, true) == 4);
    CHECK(n_params(Family::BesselSuperposition, false) == 5);
    CHECK(n_params(Family::Kummer) == 3);
}

TEST_CASE("too few levels") {
    auto four = uniform_dist(4);
    CHECK_THROWS_AS(fit(four, Family::BesselSingle), TooFewLevels);
    auto six = uniform_dist(6);
    CHECK_THROWS_AS(fit(six, Family::BesselSuperposition), TooFewLevels);
    auto five = uniform_dist(5);
    FitOptions tied;
    tied.tie_superposition = true;
    CHECK_THROWS_AS(fit(five, Family::BesselSuperposition, std::nullopt, tied), TooFewLevels);
    CHECK_NOTHROW(fit(five, Family::Kummer));
}

TEST_CASE("noiseless round trip recovers the generator") {
    const auto dist = synth_dist(clean_bessel());
    REQUIRE(dist.levels() == 60);
    const auto r = fit(dist, Family::BesselSingle);
    const auto& b = r.spec.bessel_params();
    CHECK(std::fabs(b.omega - 5.0) / 5.0 <= 1e-6);
    CHECK(std::fabs(b.p0 - 10.00) <= 1e-8);
    CHECK(r.r_squared >= 1.0 - 1e-10);
    CHECK(r.converged);
    CHECK(r.significant);
    CHECK(r.n_levels == 60);
    CHECK(r.p0_nearest_tick == 10.00);
    CHECK(r.residuals.size() == 60);
    const double ssr = std::inner_product(r.residuals.begin(), r.residuals.end(),
                                          r.residuals.begin(), 0.0);
    CHECK(std::fabs(ssr - r.objective) <= 1e-12 * std::max(1e-30, r.objective));
    CHECK(r.significant == (r.r_squared > r.r_squared_crit));
}

TEST_CASE("fit is deterministic") {
    const auto dist = synth_dist(clean_bessel());
    const auto a = fit(dist, Family::BesselSingle);
    const auto b = fit(dist, Family::BesselSingle);
    CHECK(to_json(a).dump() == to_json(b).dump());
}

TEST_CASE("explicit initialization is honored") {
    const auto dist = synth_dist(clean_bessel());
    const auto r = fit(dist, Family::BesselSingle, ModelSpec::bessel(0.1, 4.0, 10.05));
    CHECK(std::fabs(r.spec.bessel_params().omega - 5.0) / 5.0 <= 1e-6);
    CHECK(r.converged);
}

TEST_CASE("uniform data has zero explained variance") {
    const auto dist = uniform_dist(30);
    const auto r = fit(dist, Family::BesselSingle);
    CHECK(r.r_squared == 0.0);
    CHECK(!r.significant);
}

TEST_CASE("translation invariance of the fit") {
    auto cfg = clean_bessel();
    const auto base = fit(synth_dist(cfg), Family::BesselSingle);

    auto shifted_trades = generate(cfg);
    for (auto& t : shifted_trades) t.price += 3.00;
    const auto shifted = fit(build_distribution(shifted_trades, cfg.tick), Family::BesselSingle);

    const auto& b0 = base.spec.bessel_params();
    const auto& b1 = shifted.spec.bessel_params();
    CHECK(std::fabs(b1.omega - b0.omega) <= 1e-9 * b0.omega);
    CHECK(std::fabs((b1.p0 - 3.00) - b0.p0) <= 1e-9);
    CHECK(std::fabs(shifted.r_squared - base.r_squared) <= 1e-9);
}

TEST_CASE("volume rescale leaves the fit untouched") {
    auto cfg = clean_bessel();
    cfg.total_volume = 1000000;
    const auto base = fit(synth_dist(cfg), Family::BesselSingle);

    auto scaled_trades = generate(cfg);
    for (auto& t : scaled_trades) t.volume *= 7;
    const auto scaled = fit(build_distribution(scaled_trades, cfg.tick), Family::BesselSingle);

    // 7v/7V rounds to the same probabilities, so the fit is bit-identical
    CHECK(scaled.spec.bessel_params().omega == base.spec.bessel_params().omega);
    CHECK(scaled.spec.bessel_params().p0 == base.spec.bessel_params().p0);
    CHECK(scaled.r_squared == base.r_squared);
}

TEST_CASE("initialize proposes sensible starts") {
    const auto dist = synth_dist(clean_bessel());
    const auto starts = initialize(dist, Family::BesselSingle);
    REQUIRE(!starts.empty());
    CHECK(starts.size() <= 8);
    for (const auto& s : starts) CHECK_NOTHROW(s.validate());
    // leading start: center on the peak, frequency within a factor of two
    const auto& b = starts.front().bessel_params();
    CHECK(std::fabs(b.p0 - 10.00) <= 0.02);
    CHECK(b.omega >= 2.5);
    CHECK(b.omega <= 10.0);
}

TEST_CASE("bimodal data seeds the superposition at both peaks") {
    std::vector<TradeRecord> trades;
    for (int i = 0; i <= 30; ++i) {
        const double p = 9.85 + 0.01 * i;
        const std::int64_t peak1 = std::max(0.0, 600.0 - 12000.0 * std::fabs(p - 9.90));
        const std::int64_t peak2 = std::max(0.0, 500.0 - 10000.0 * std::fabs(p - 10.10));
        trades.push_back({1000 + i, p, 10 + peak1 + peak2});
    }
    const auto dist = build_distribution(trades);
    const auto starts = initialize(dist, Family::BesselSuperposition);
    REQUIRE(!starts.empty());
    const auto& s = starts.front().superposition_params();
    CHECK(s.p01 == 9.90);
    CHECK(s.p02 == 10.10);
}

TEST_CASE("ladder stops at the first significant family") {
    const auto dist = synth_dist(clean_bessel());
    const auto rep = run_ladder(dist);
    REQUIRE(rep.attempts.size() == 1);
    CHECK(rep.attempts[0].label == "bessel");
    REQUIRE(rep.chosen.has_value());
    CHECK(*rep.chosen == 0);
    CHECK(rep.chosen_result()->significant);
}

TEST_CASE("ladder runs every step when nothing fits") {
    const auto rep = run_ladder(uniform_dist(30));
    REQUIRE(rep.attempts.size() == 4);
    CHECK(rep.attempts[0].label == "bessel");
    CHECK(rep.attempts[1].label == "superposition_one_eigenvalue");
    CHECK(rep.attempts[2].label == "superposition_two_eigenvalues");
    CHECK(rep.attempts[3].label == "kummer_m1");
    CHECK(!rep.chosen.has_value());
    CHECK(rep.chosen_result() == nullptr);
}

TEST_CASE("two-equilibrium data rejects bessel, accepts superposition") {
    SynthConfig c;
    c.spec = ModelSpec::bessel(1.0, 80.0, 10.03);
    c.price_lo = 9.995;
    c.price_hi = 10.135;
    c.total_volume = 200000;
    c.trades = 400;
    c.noise = 0.05;
    c.seed = 0;
    const auto dist = build_distribution(generate_two_equilibrium(c, 10.10, 0.55), c.tick);
    const auto rep = run_ladder(dist);
    REQUIRE(rep.attempts.size() >= 2);
    REQUIRE(rep.attempts[0].result.has_value());
    CHECK(!rep.attempts[0].result->significant);
    REQUIRE(rep.chosen.has_value());
    CHECK((*rep.chosen == 1 || *rep.chosen == 2));
}

TEST_CASE("wave-shaped data falls through to the kummer step") {
    SynthConfig c;
    c.spec = ModelSpec::kummer(1.0, 1, 144.0, 10.0);
    c.price_lo = 9.795;
    c.price_hi = 10.205;
    c.total_volume = 200000;
    c.trades = 400;
    c.noise = 0.0;
    c.seed = 5;
    const auto rep = run_ladder(synth_dist(c));
    REQUIRE(rep.attempts.size() == 4);
    REQUIRE(rep.chosen.has_value());
    CHECK(*rep.chosen == 3);
    CHECK(rep.attempts[3].result->spec.kummer_params().m == 1);
}

TEST_CASE("noisy monte carlo stays significant") {
    int significant = 0;
    for (int seed = 0; seed < 100; ++seed) {
        auto c = clean_bessel();
        c.total_volume = 1000000;
        c.noise = 0.05;
        c.seed = static_cast<std::uint64_t>(seed);
        significant += fit(synth_dist(c), Family::BesselSingle).significant;
    }
    CHECK(significant >= 95);
}

TEST_CASE("fit report JSON round-trip") {
    const auto dist = synth_dist(clean_bessel());
    const auto r = fit(dist, Family::BesselSingle);
    const auto j = to_json(r);
    CHECK(j["significant"] == true);
    CHECK(j["n_levels"] == 60);
    const auto back = fit_result_from_json(j);
    CHECK(back.spec.bessel_params().omega == r.spec.bessel_params().omega);
    CHECK(back.r_squared == r.r_squared);
    CHECK(back.significant == r.significant);
    CHECK_THROWS_AS(fit_result_from_json(nlohmann::json{{"spec", 1}}), MalformedSpec);

    const auto ladder_json = to_json(run_ladder(dist));
    CHECK(ladder_json["attempts"].size() == 1);
    CHECK(ladder_json["chosen"] == 0);
}
