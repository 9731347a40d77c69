#include "vpwave/marketdata.hpp"

#include "vpwave/errors.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <map>
#include <sstream>

namespace vpwave {

namespace {

// strict full-token numeric parses; reject trailing junk and empty fields
bool parse_int64(const std::string& s, std::int64_t& out) {
    if (s.empty()) return false;
    errno = 0;
    char* end = nullptr;
    const long long v = std::strtoll(s.c_str(), &end, 10);
    if (errno != 0 || end != s.c_str() + s.size()) return false;
    out = v;
    return true;
}

bool parse_double(const std::string& s, double& out) {
    if (s.empty()) return false;
    errno = 0;
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (errno != 0 || end != s.c_str() + s.size() || !std::isfinite(v)) return false;
    out = v;
    return true;
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur += ch;
        }
    }
    out.push_back(cur);
    return out;
}

std::string trimmed(std::string s) {
    const auto is_space = [](char c) { return c == ' ' || c == '\t'; };
    while (!s.empty() && is_space(s.front())) s.erase(s.begin());
    while (!s.empty() && is_space(s.back())) s.pop_back();
    return s;
}

}  // namespace

std::vector<TradeRecord> ingest_trades(std::istream& source) {
    std::vector<TradeRecord> records;
    std::string line;
    std::size_t row = 0;  // data-row index, header excluded
    bool saw_header = false;
    while (std::getline(source, line)) {
        const std::string stripped = trimmed(line);
        if (stripped.empty() || stripped.front() == '#') continue;  // blank or annotation
        if (!saw_header) {
            saw_header = true;
            continue;  // header row; format is positional
        }
        ++row;
        const auto fields = split_csv(line);
        if (fields.size() != 3) throw ParseError(row, "row");
        TradeRecord rec;
        if (!parse_int64(trimmed(fields[0]), rec.timestamp_ms)) throw ParseError(row, "timestamp");
        if (!parse_double(trimmed(fields[1]), rec.price)) throw ParseError(row, "price");
        if (!parse_int64(trimmed(fields[2]), rec.volume)) throw ParseError(row, "volume");
        if (rec.price <= 0.0) throw NonPositivePrice(row);
        if (rec.volume < 0) throw ParseError(row, "volume");
        records.push_back(rec);
    }
    if (records.empty()) throw EmptyInput();
    std::stable_sort(records.begin(), records.end(),
                     [](const TradeRecord& a, const TradeRecord& b) {
                         return a.timestamp_ms < b.timestamp_ms;
                     });
    return records;
}

std::vector<TradeRecord> ingest_trades_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    return ingest_trades(in);
}

VolumeAtPrice build_distribution(const std::vector<TradeRecord>& trades, double tick) {
    if (trades.empty()) throw EmptyTrades();
    if (!(tick > 0.0)) throw std::invalid_argument("tick must be > 0");

    std::map<std::int64_t, std::int64_t> bins;  // grid index -> shares
    std::int64_t ts_min = trades.front().timestamp_ms, ts_max = trades.front().timestamp_ms;
    for (std::size_t i = 0; i < trades.size(); ++i) {
        const TradeRecord& tr = trades[i];
        // half-even snap; reject anything half a tick or more off the grid
        // (10.005 on a 0.01 grid is ambiguous between two levels, so it errors)
        const double k = std::nearbyint(tr.price / tick);
        const double off = std::fabs(tr.price - k * tick);
        if (off >= 0.5 * tick * (1.0 - 1e-9)) throw OffGridPrice(i + 1, tr.price, tick);
        bins[static_cast<std::int64_t>(k)] += tr.volume;
        ts_min = std::min(ts_min, tr.timestamp_ms);
        ts_max = std::max(ts_max, tr.timestamp_ms);
    }

    VolumeAtPrice dist;
    dist.tick = tick;
    dist.session_span = std::max(1.0, static_cast<double>(ts_max - ts_min) / 1000.0);
    for (const auto& [idx, vol] : bins) {
        dist.prices.push_back(static_cast<double>(idx) * tick);
        dist.volumes.push_back(vol);
        dist.total_volume += vol;
    }
    if (dist.total_volume <= 0) throw Error("distribution has zero total volume");
    dist.probabilities.reserve(dist.volumes.size());
    for (std::int64_t v : dist.volumes)
        dist.probabilities.push_back(static_cast<double>(v) / static_cast<double>(dist.total_volume));
    return dist;
}

double price_mean(const VolumeAtPrice& dist) {
    double mean = 0.0;
    for (std::size_t i = 0; i < dist.levels(); ++i) mean += dist.probabilities[i] * dist.prices[i];
    return mean;
}

nlohmann::json to_json(const VolumeAtPrice& dist) {
    return nlohmann::json{{"tick", dist.tick},
                          {"prices", dist.prices},
                          {"volumes", dist.volumes},
                          {"total_volume", dist.total_volume},
                          {"session_span_s", dist.session_span}};
}

}  // namespace vpwave
