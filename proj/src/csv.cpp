#include "plsa/csv.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "plsa/error.hpp"

namespace plsa::csv {

std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc{}) throw NumericalError("format_double failed");
    return std::string(buf, ptr);
}

double parse_double(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) {
        throw DataError("not a number: '" + std::string(s) + "'");
    }
    return v;
}

std::vector<std::string> split(std::string_view line, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(sep, start);
        out.emplace_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

std::size_t Table::column(std::string_view name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == name) return i;
    }
    throw DataError("missing CSV column '" + std::string(name) + "'");
}

Table read(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path.string());
    Table t;
    std::string line;
    if (!std::getline(in, line)) throw DataError("empty CSV file " + path.string());
    if (!line.empty() && line.back() == '\r') line.pop_back();
    t.header = split(line, ',');
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto fields = split(line, ',');
        if (fields.size() != t.header.size()) {
            std::ostringstream os;
            os << path.string() << ":" << lineno << ": expected " << t.header.size() << " fields, got "
               << fields.size();
            throw DataError(os.str());
        }
        t.rows.push_back(std::move(fields));
    }
    return t;
}

void write(const std::filesystem::path& path, const Table& table) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    auto emit = [&](const std::vector<std::string>& row) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out << ',';
            out << row[i];
        }
        out << '\n';
    };
    emit(table.header);
    for (const auto& r : table.rows) emit(r);
    if (!out) throw DataError("write failed for " + path.string());
}

}  // namespace plsa::csv
