#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace ergoperiod::io {

using Json = nlohmann::json;

/// Deterministic JSON text: keys sorted, floats at 17 significant digits,
/// non-finite floats as null. indent < 0 gives the compact form.
std::string canonical_dump(const Json& value, int indent = 2);

/// Shortest round-trip decimal form, '.' separator regardless of locale.
std::string format_number(double x);
std::string format_fixed17(double x);

/// 64-bit FNV-1a of the compact canonical dump, as 16 hex digits.
std::string digest(const Json& value);

void write_text(const std::filesystem::path& path, const std::string& content);
std::string read_text(const std::filesystem::path& path);

using Series = std::vector<std::pair<double, double>>;

/// Two-column CSV with a header row and LF line endings. Throws
/// IoError (EmptySeries) for an empty series.
void emit_plot_data(const Series& series, const std::filesystem::path& path, const std::string& x_name = "x",
                    const std::string& y_name = "y");

/// CSV with an arbitrary number of numeric columns.
void write_table(const std::vector<std::string>& header, const std::vector<std::vector<double>>& rows,
                 const std::filesystem::path& path);

}  // namespace ergoperiod::io
