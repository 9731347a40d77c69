#include "vpwave/synth.hpp"

#include "vpwave/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <random>
#include <stdexcept>

namespace vpwave {

namespace {

constexpr std::int64_t kBaseTimestampMs = 1000000000000;  // arbitrary fixed session start
constexpr std::int64_t kTradeSpacingMs = 1000;

double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Box-Muller, hand-rolled so output bytes do not depend on the standard
// library's unspecified normal_distribution algorithm.
double standard_normal(std::mt19937_64& rng) {
    double u1 = uniform01(rng);
    while (u1 <= 0.0) u1 = uniform01(rng);
    const double u2 = uniform01(rng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.141592653589793 * u2);
}

void validate(const SynthConfig& c) {
    if (!(c.tick > 0.0)) throw std::invalid_argument("tick must be > 0");
    if (!(c.price_lo < c.price_hi)) throw std::invalid_argument("price_lo must be < price_hi");
    const double p0 = c.spec.center();
    if (!(c.price_lo < p0 && p0 < c.price_hi))
        throw std::invalid_argument("model center must lie inside the price range");
    if (c.trades < 1 || c.total_volume < c.trades)
        throw std::invalid_argument("need total_volume >= trades >= 1");
    if (!(c.noise >= 0.0 && c.noise < 1.0)) throw std::invalid_argument("noise must be in [0, 1)");
    c.spec.validate();
}

std::vector<double> tick_grid(double lo, double hi, double tick) {
    const auto k_lo = static_cast<std::int64_t>(std::ceil(lo / tick - 1e-9));
    const auto k_hi = static_cast<std::int64_t>(std::floor(hi / tick + 1e-9));
    std::vector<double> grid;
    for (std::int64_t k = k_lo; k <= k_hi; ++k) grid.push_back(static_cast<double>(k) * tick);
    if (grid.empty()) throw std::invalid_argument("price range contains no grid point");
    return grid;
}

// Largest-remainder apportionment of total over non-negative weights.
std::vector<std::int64_t> apportion(std::int64_t total, const std::vector<double>& weights) {
    const double wsum = std::accumulate(weights.begin(), weights.end(), 0.0);
    if (!(wsum > 0.0)) throw DegenerateCurve();
    const std::size_t n = weights.size();
    std::vector<std::int64_t> alloc(n, 0);
    std::vector<std::pair<double, std::size_t>> remainders;
    remainders.reserve(n);
    std::int64_t assigned = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double exact = static_cast<double>(total) * weights[i] / wsum;
        alloc[i] = static_cast<std::int64_t>(std::floor(exact));
        assigned += alloc[i];
        remainders.emplace_back(exact - std::floor(exact), i);
    }
    std::stable_sort(remainders.begin(), remainders.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    for (std::int64_t left = total - assigned; left > 0; --left)
        ++alloc[remainders[static_cast<std::size_t>(total - assigned - left)].second];
    return alloc;
}

std::vector<TradeRecord> generate_at(const SynthConfig& c, double center,
                                     std::int64_t volume, std::int64_t trades,
                                     std::mt19937_64& rng, std::int64_t ts_start) {
    ModelSpec spec = c.spec;
    switch (spec.family) {
        case Family::BesselSingle:
            std::get<BesselSingleParams>(spec.params).p0 = center;
            break;
        case Family::BesselSuperposition: {
            auto& s = std::get<SuperpositionParams>(spec.params);
            const double shift = center - s.p01;
            s.p01 += shift;
            s.p02 += shift;
            break;
        }
        case Family::Kummer:
            std::get<KummerParams>(spec.params).p0 = center;
            break;
    }

    const std::vector<double> grid = tick_grid(c.price_lo, c.price_hi, c.tick);
    std::vector<double> weights;
    weights.reserve(grid.size());
    double wsum = 0.0;
    for (double p : grid) {
        const double v = eval_model(spec, p);
        weights.push_back(v);
        wsum += v;
    }
    if (!(wsum > 0.0)) throw DegenerateCurve();

    if (c.noise > 0.0) {
        for (double& w : weights) {
            const double z = std::clamp(standard_normal(rng), -3.0, 3.0);
            w = std::max(0.0, w * (1.0 + c.noise * z));
        }
    }

    const std::vector<std::int64_t> level_volume = apportion(volume, weights);

    // trade count per level proportional to allocated volume, at least one
    // trade wherever volume landed
    std::vector<std::size_t> live;
    for (std::size_t i = 0; i < level_volume.size(); ++i)
        if (level_volume[i] > 0) live.push_back(i);
    if (live.empty()) throw DegenerateCurve();

    std::vector<double> vol_weights(live.size());
    for (std::size_t j = 0; j < live.size(); ++j)
        vol_weights[j] = static_cast<double>(level_volume[live[j]]);
    const std::int64_t want = std::max<std::int64_t>(trades, static_cast<std::int64_t>(live.size()));
    std::vector<std::int64_t> level_trades = apportion(want, vol_weights);
    for (std::size_t j = 0; j < live.size(); ++j) {
        if (level_trades[j] < 1) level_trades[j] = 1;
        level_trades[j] = std::min(level_trades[j], level_volume[live[j]]);
    }

    std::vector<TradeRecord> out;
    for (std::size_t j = 0; j < live.size(); ++j) {
        const std::size_t i = live[j];
        const std::int64_t v = level_volume[i];
        const std::int64_t t = level_trades[j];
        const std::int64_t base = v / t, extra = v % t;
        for (std::int64_t k = 0; k < t; ++k)
            out.push_back({0, grid[i], base + (k < extra ? 1 : 0)});
    }

    // deterministic shuffle so the tape is not price-sorted, then stamp times
    for (std::size_t i = out.size(); i > 1; --i)
        std::swap(out[i - 1], out[rng() % i]);
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i].timestamp_ms = ts_start + static_cast<std::int64_t>(i) * kTradeSpacingMs;
    return out;
}

}  // namespace

std::vector<TradeRecord> generate(const SynthConfig& config) {
    validate(config);
    std::mt19937_64 rng(config.seed);
    return generate_at(config, config.spec.center(), config.total_volume, config.trades,
                       rng, kBaseTimestampMs);
}

std::vector<TradeRecord> generate_two_equilibrium(const SynthConfig& config,
                                                  double second_center, double mix) {
    validate(config);
    if (!(mix > 0.0 && mix <= 1.0)) throw std::invalid_argument("mix must be in (0, 1]");
    if (!(config.price_lo < second_center && second_center < config.price_hi))
        throw std::invalid_argument("second center must lie inside the price range");

    std::mt19937_64 rng(config.seed);
    const auto v1 = static_cast<std::int64_t>(std::llround(mix * static_cast<double>(config.total_volume)));
    const auto t1 = std::clamp<std::int64_t>(
        static_cast<std::int64_t>(std::llround(mix * static_cast<double>(config.trades))), 1,
        config.trades);
    std::vector<TradeRecord> out =
        generate_at(config, config.spec.center(), v1, t1, rng, kBaseTimestampMs);
    const std::int64_t v2 = config.total_volume - v1;
    if (v2 > 0) {
        const std::int64_t t2 = std::max<std::int64_t>(1, config.trades - t1);
        const std::int64_t ts2 =
            out.empty() ? kBaseTimestampMs : out.back().timestamp_ms + kTradeSpacingMs;
        const std::vector<TradeRecord> second =
            generate_at(config, second_center, v2, t2, rng, ts2);
        out.insert(out.end(), second.begin(), second.end());
    }
    return out;
}

void write_trades_csv(const std::vector<TradeRecord>& trades, std::ostream& out, double tick) {
    int decimals = 2;
    for (int d = 0; d <= 9; ++d) {
        const double scaled = tick * std::pow(10.0, d);
        if (std::fabs(scaled - std::nearbyint(scaled)) < 1e-6) {
            decimals = d;
            break;
        }
    }
    out << "timestamp,price,volume\n";
    char buf[64];
    for (const TradeRecord& t : trades) {
        std::snprintf(buf, sizeof(buf), "%.*f", decimals, t.price);
        out << t.timestamp_ms << ',' << buf << ',' << t.volume << '\n';
    }
}

nlohmann::json to_json(const SynthConfig& config) {
    return nlohmann::json{{"spec", to_json(config.spec)},
                          {"tick", config.tick},
                          {"price_lo", config.price_lo},
                          {"price_hi", config.price_hi},
                          {"total_volume", config.total_volume},
                          {"trades", config.trades},
                          {"noise", config.noise},
                          {"seed", config.seed}};
}

}  // namespace vpwave
