#pragma once

#include <json.hpp>

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace vpwave {

inline constexpr double kDefaultTick = 0.01;

struct TradeRecord {
    std::int64_t timestamp_ms = 0;
    double price = 0.0;        // currency per share, > 0
    std::int64_t volume = 0;   // shares, >= 0

    friend bool operator==(const TradeRecord&, const TradeRecord&) = default;
};

// Volume-at-price distribution on a tick-aligned grid.
struct VolumeAtPrice {
    double tick = kDefaultTick;
    std::vector<double> prices;             // ascending, integer multiples of tick
    std::vector<std::int64_t> volumes;      // shares per level
    std::int64_t total_volume = 0;          // V
    std::vector<double> probabilities;      // P_i = v_i / V
    double session_span = 1.0;              // t in seconds, floored at 1

    std::size_t levels() const { return prices.size(); }
};

// Parses `timestamp,price,volume` CSV; returns timestamp-sorted records.
// Throws EmptyInput, ParseError(row, field), NonPositivePrice(row).
std::vector<TradeRecord> ingest_trades(std::istream& source);
std::vector<TradeRecord> ingest_trades_file(const std::string& path);

// Accumulates trade volume per tick-aligned price level. Prices are snapped
// to the nearest grid point (half-even); anything half a tick or farther off
// the grid raises OffGridPrice with the trade's index.
VolumeAtPrice build_distribution(const std::vector<TradeRecord>& trades, double tick = kDefaultTick);

// Volume-weighted mean price, the equilibrium-price proxy.
double price_mean(const VolumeAtPrice& dist);

nlohmann::json to_json(const VolumeAtPrice& dist);

}  // namespace vpwave
