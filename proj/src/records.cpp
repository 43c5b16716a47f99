#include "lob/records.hpp"

#include "lob/io.hpp"

#include <cmath>
#include <cstdlib>

namespace lob {

void write_trades_csv(const std::filesystem::path& path, std::span<const TradeRecord> trades) {
    CsvWriter w(path, {"step", "sign", "volume", "vwap", "is_metaorder"});
    for (const auto& t : trades) {
        w << t.step << to_int(t.sign) << t.volume << t.vwap << (t.is_metaorder ? 1 : 0);
        w.end_row();
    }
}

void write_prices_csv(const std::filesystem::path& path, std::span<const double> prices, std::int64_t first_step) {
    CsvWriter w(path, {"step", "midpoint"});
    for (std::size_t i = 0; i < prices.size(); ++i) {
        w << first_step + static_cast<std::int64_t>(i) << prices[i];
        w.end_row();
    }
}

std::vector<std::string> metaorder_csv_header() {
    std::vector<std::string> h{"seed", "Q", "phi", "style", "gamma", "zeta", "p_start", "vwap", "T", "delta_T"};
    for (int k = 1; k <= kTrajectoryPoints; ++k) {
        // d_0.1 ... d_5.0, always one decimal.
        const int whole = k / 10, tenth = k % 10;
        h.push_back("d_" + std::to_string(whole) + "." + std::to_string(tenth));
    }
    h.emplace_back("complete");
    h.emplace_back("trajectory_complete");
    h.emplace_back("sign");
    return h;
}

void write_metaorders_csv(const std::filesystem::path& path, std::span<const MetaorderRecord> records) {
    CsvWriter w(path, metaorder_csv_header());
    for (const auto& r : records) {
        w << r.seed << r.spec.Q << r.spec.phi << to_string(r.spec.style) << r.gamma << r.zeta << r.p_start
          << r.vwap_exec << r.T << r.delta_T;
        for (double d : r.trajectory) w << d;
        w << (r.complete ? 1 : 0) << (r.trajectory_complete ? 1 : 0) << to_int(r.spec.sign);
        w.end_row();
    }
}

namespace {
double to_double(const std::string& s) {
    if (s == "nan") return std::nan("");
    return std::strtod(s.c_str(), nullptr);
}
} // namespace

std::vector<MetaorderRecord> read_metaorders_csv(const std::filesystem::path& path) {
    const CsvTable t = read_csv(path);
    const auto header = metaorder_csv_header();
    if (t.header != header) throw std::runtime_error(path.string() + ": unexpected metaorder CSV header");
    std::vector<MetaorderRecord> out;
    for (const auto& row : t.rows) {
        if (row.size() != header.size()) throw std::runtime_error(path.string() + ": short row");
        MetaorderRecord r;
        r.seed = std::strtoull(row[0].c_str(), nullptr, 10);
        r.spec.Q = std::strtoll(row[1].c_str(), nullptr, 10);
        r.spec.phi = to_double(row[2]);
        r.spec.style = parse_execution_style(row[3]);
        r.gamma = to_double(row[4]);
        r.zeta = to_double(row[5]);
        r.p_start = to_double(row[6]);
        r.vwap_exec = to_double(row[7]);
        r.T = std::strtoll(row[8].c_str(), nullptr, 10);
        r.delta_T = to_double(row[9]);
        for (int k = 0; k < kTrajectoryPoints; ++k) r.trajectory[static_cast<std::size_t>(k)] = to_double(row[10 + static_cast<std::size_t>(k)]);
        r.complete = row[10 + kTrajectoryPoints] == "1";
        r.trajectory_complete = row[11 + kTrajectoryPoints] == "1";
        r.spec.sign = row[12 + kTrajectoryPoints] == "-1" ? Sign::sell : Sign::buy;
        if (r.complete) r.executed = r.spec.Q;
        out.push_back(r);
    }
    return out;
}

void write_snapshots_csv(const std::filesystem::path& path, std::span<const BookSnapshot> snapshots) {
    CsvWriter w(path, {"step", "midpoint", "side", "price", "u", "volume"});
    for (const auto& s : snapshots) {
        for (std::size_t i = 0; i < s.bids.size(); ++i) {
            const Tick p = s.low + static_cast<Tick>(i);
            const double d = static_cast<double>(p) - s.midpoint;
            if (d < 0) {
                w << s.step << s.midpoint << "buy" << p << -d << s.bids[i];
                w.end_row();
            } else if (d > 0) {
                w << s.step << s.midpoint << "sell" << p << d << s.asks[i];
                w.end_row();
            }
        }
    }
}

} // namespace lob
