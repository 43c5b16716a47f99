#pragma once

#include "json.hpp"

#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <string>
#include <string_view>
#include <vector>

namespace lob {

// %.17g; NaN prints as "nan".
std::string fmt17(double x);

// Minimal CSV row writer. Fields are written verbatim; no quoting is needed for
// the numeric and identifier columns used here.
class CsvWriter {
public:
    CsvWriter(const std::filesystem::path& path, std::initializer_list<std::string_view> header);
    CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header);

    CsvWriter& operator<<(double x);
    CsvWriter& operator<<(std::int64_t x);
    CsvWriter& operator<<(int x) { return *this << static_cast<std::int64_t>(x); }
    CsvWriter& operator<<(std::uint64_t x);
    CsvWriter& operator<<(std::string_view s);
    void end_row();
    std::size_t columns() const noexcept { return ncols_; }

private:
    void sep();
    std::ofstream out_;
    std::size_t ncols_;
    std::size_t col_ = 0;
};

// Parses a CSV written by CsvWriter: header plus rows of fields.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::size_t column(std::string_view name) const;
};
CsvTable read_csv(const std::filesystem::path& path);

void write_json(const std::filesystem::path& path, const nlohmann::json& j);

// Non-finite values are not representable in JSON and become null.
nlohmann::json json_number(double x);

} // namespace lob
