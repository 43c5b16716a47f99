#include "lob/io.hpp"
#include "lob/error.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

namespace lob {

std::string fmt17(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::general, 17);
    return std::string(buf, res.ptr);
}

CsvWriter::CsvWriter(const std::filesystem::path& path, std::initializer_list<std::string_view> header)
    : CsvWriter(path, std::vector<std::string>(header.begin(), header.end())) {}

CsvWriter::CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header)
    : ncols_(header.size()) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    out_.open(path, std::ios::binary | std::ios::trunc);
    if (!out_) throw std::runtime_error("cannot open " + path.string() + " for writing");
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (i) out_ << ',';
        out_ << header[i];
    }
    out_ << '\n';
}

void CsvWriter::sep() {
    if (col_++) out_ << ',';
}

CsvWriter& CsvWriter::operator<<(double x) {
    sep();
    out_ << fmt17(x);
    return *this;
}

CsvWriter& CsvWriter::operator<<(std::int64_t x) {
    sep();
    out_ << x;
    return *this;
}

CsvWriter& CsvWriter::operator<<(std::uint64_t x) {
    sep();
    out_ << x;
    return *this;
}

CsvWriter& CsvWriter::operator<<(std::string_view s) {
    sep();
    out_ << s;
    return *this;
}

void CsvWriter::end_row() {
    if (col_ != ncols_) {
        throw std::logic_error("csv row has " + std::to_string(col_) + " fields, header has " + std::to_string(ncols_));
    }
    out_ << '\n';
    col_ = 0;
}

std::size_t CsvTable::column(std::string_view name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == name) return i;
    }
    throw std::out_of_range("no column '" + std::string(name) + "'");
}

namespace {
std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}
} // namespace

CsvTable read_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    CsvTable t;
    std::string line;
    if (!std::getline(in, line)) return t;
    t.header = split_line(line);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        t.rows.push_back(split_line(line));
    }
    return t;
}

void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    out << j.dump(2) << '\n';
}

nlohmann::json json_number(double x) {
    if (!std::isfinite(x)) return nullptr;
    return x;
}

} // namespace lob
