#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace plsa::csv {

// Shortest decimal string that parses back to the identical double.
std::string format_double(double v);

// Exact inverse of format_double; throws DataError on malformed text.
double parse_double(std::string_view s);

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    // Column position by name; throws DataError if absent.
    std::size_t column(std::string_view name) const;
};

Table read(const std::filesystem::path& path);
void write(const std::filesystem::path& path, const Table& table);

std::vector<std::string> split(std::string_view line, char sep);

}  // namespace plsa::csv
