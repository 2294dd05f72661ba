#pragma once

#include <istream>
#include <ostream>
#include <string>
#include <vector>

namespace imbalkit::csv {

using Row = std::vector<std::string>;

/// Parses RFC 4180 CSV: comma separated, optional double-quoted fields with
/// "" escapes, LF or CRLF line endings. A leading UTF-8 byte-order mark is
/// dropped. Blank lines are skipped.
std::vector<Row> read(std::istream& in);

/// Quotes a field when it contains a comma, quote, CR or LF.
std::string escape(const std::string& field);

void write_row(std::ostream& out, const Row& row);

/// Shortest representation that parses back to the same double.
std::string format_double(double value);

}  // namespace imbalkit::csv
