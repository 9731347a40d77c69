#pragma once

#include "vpwave/marketdata.hpp"
#include "vpwave/models.hpp"

#include <json.hpp>

#include <cstdint>
#include <iosfwd>
#include <vector>

namespace vpwave {

// Deterministic generator of trade streams whose volume-at-price histogram
// follows a model curve plus per-level multiplicative noise.
struct SynthConfig {
    ModelSpec spec;
    double tick = kDefaultTick;
    double price_lo = 0.0;
    double price_hi = 0.0;             // lo < spec center < hi
    std::int64_t total_volume = 0;     // >= trades
    std::int64_t trades = 1;           // >= 1
    double noise = 0.0;                // sigma of (1 + sigma z), 0 <= sigma < 1
    std::uint64_t seed = 0;
};

// Allocates total_volume over the tick grid of [lo, hi] proportional to the
// normalized model curve, perturbs each level by (1 + sigma z) with z standard
// normal clamped to +-3, floors at zero, and emits trades with increasing
// timestamps. Byte-deterministic given the config. Throws DegenerateCurve.
std::vector<TradeRecord> generate(const SynthConfig& config);

// Two generate runs, volumes split mix/(1-mix), second run centered at
// second_center, timestamps concatenated. mix = 1 degenerates to generate().
std::vector<TradeRecord> generate_two_equilibrium(const SynthConfig& config,
                                                  double second_center, double mix);

// Emits the trade CSV format ingest_trades reads (header + rows).
void write_trades_csv(const std::vector<TradeRecord>& trades, std::ostream& out, double tick);

nlohmann::json to_json(const SynthConfig& config);

}  // namespace vpwave
