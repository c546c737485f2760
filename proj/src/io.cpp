#include "ergoperiod/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "ergoperiod/error.hpp"

namespace ergoperiod::io {
namespace {

void dump(const Json& v, int indent, int level, std::string& out) {
  const bool pretty = indent >= 0;
  auto newline = [&](int lvl) {
    if (!pretty) return;
    out += '\n';
    out.append(static_cast<std::size_t>(lvl * indent), ' ');
  };
  switch (v.type()) {
    case Json::value_t::object: {
      if (v.empty()) {
        out += "{}";
        return;
      }
      out += '{';
      bool first = true;
      for (auto it = v.begin(); it != v.end(); ++it) {  // std::map keeps keys sorted
        if (!first) out += ',';
        first = false;
        newline(level + 1);
        out += Json(it.key()).dump();
        out += pretty ? ": " : ":";
        dump(it.value(), indent, level + 1, out);
      }
      newline(level);
      out += '}';
      return;
    }
    case Json::value_t::array: {
      if (v.empty()) {
        out += "[]";
        return;
      }
      out += '[';
      for (std::size_t i = 0; i < v.size(); ++i) {
        if (i > 0) out += ',';
        newline(level + 1);
        dump(v[i], indent, level + 1, out);
      }
      newline(level);
      out += ']';
      return;
    }
    case Json::value_t::number_float: {
      const double x = v.get<double>();
      out += std::isfinite(x) ? format_fixed17(x) : "null";
      return;
    }
    default:
      out += v.dump();
  }
}

}  // namespace

std::string format_fixed17(double x) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::general, 17);
  std::string s(buf, r.ptr);
  // Keep floats recognisable as floats after a round trip through JSON.
  if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
  return s;
}

std::string format_number(double x) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

std::string canonical_dump(const Json& value, int indent) {
  std::string out;
  dump(value, indent, 0, out);
  if (indent >= 0) out += '\n';
  return out;
}

std::string digest(const Json& value) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : canonical_dump(value, -1)) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void write_text(const std::filesystem::path& path, const std::string& content) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  if (ec) fail(ErrorCode::IoError, "cannot create directory " + path.parent_path().string() + ": " + ec.message());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::IoError, "cannot open " + path.string() + " for writing");
  out << content;
  out.flush();
  if (!out) fail(ErrorCode::IoError, "write failed for " + path.string());
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoError, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void emit_plot_data(const Series& series, const std::filesystem::path& path, const std::string& x_name,
                    const std::string& y_name) {
  if (series.empty()) fail(ErrorCode::IoError, "EmptySeries: nothing to write to " + path.string());
  std::string out = x_name + "," + y_name + "\n";
  for (const auto& [x, y] : series) out += format_number(x) + "," + format_number(y) + "\n";
  write_text(path, out);
}

void write_table(const std::vector<std::string>& header, const std::vector<std::vector<double>>& rows,
                 const std::filesystem::path& path) {
  if (rows.empty()) fail(ErrorCode::IoError, "EmptySeries: nothing to write to " + path.string());
  std::string out;
  for (std::size_t i = 0; i < header.size(); ++i) out += (i ? "," : "") + header[i];
  out += '\n';
  for (const auto& row : rows) {
    require(row.size() == header.size(), "table row width does not match the header");
    for (std::size_t i = 0; i < row.size(); ++i) out += (i ? "," : "") + format_number(row[i]);
    out += '\n';
  }
  write_text(path, out);
}

}  // namespace ergoperiod::io
