#pragma once

#include <string>
#include <vector>

namespace folopt {

/// Shortest round-trip decimal form of a double ("%.17g"), locale-free.
std::string format_double(double x);

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
};

/// Parses a numeric CSV.  Lines starting with '#' are comments.  When
/// `expected_header` is nonempty the header must match it exactly.
/// Errors carry the path and the 1-based line number of the offending row.
CsvTable read_csv(const std::string& path, const std::vector<std::string>& expected_header = {});
CsvTable parse_csv(const std::string& text, const std::string& origin,
                   const std::vector<std::string>& expected_header = {});

/// Writes a CSV with optional '#' comment lines before the header.
void write_csv(const std::string& path, const std::vector<std::string>& comments,
               const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows);

/// 64-bit FNV-1a, hex encoded; used to stamp outputs with their config.
std::string fnv1a_hex(const std::string& bytes);

void write_text_file(const std::string& path, const std::string& text);
std::string read_text_file(const std::string& path);

}  // namespace folopt
