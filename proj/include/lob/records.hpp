#pragma once

#include "lob/simulator.hpp"

#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace lob {

// `step,sign,volume,vwap,is_metaorder`
void write_trades_csv(const std::filesystem::path& path, std::span<const TradeRecord> trades);

// `step,midpoint`; prices[i] belongs to step first_step + i.
void write_prices_csv(const std::filesystem::path& path, std::span<const double> prices, std::int64_t first_step);

// `seed,Q,phi,style,gamma,zeta,p_start,vwap,T,delta_T,d_0.1,...,d_5.0`
// followed by `complete,trajectory_complete,sign`.
std::vector<std::string> metaorder_csv_header();
void write_metaorders_csv(const std::filesystem::path& path, std::span<const MetaorderRecord> records);
std::vector<MetaorderRecord> read_metaorders_csv(const std::filesystem::path& path);

// Book snapshots in the midpoint frame: `step,midpoint,side,price,u,volume`.
void write_snapshots_csv(const std::filesystem::path& path, std::span<const BookSnapshot> snapshots);

} // namespace lob
