#include "kickflow/field_io.hpp"

#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

#include "kickflow/error.hpp"

namespace kickflow {

namespace {

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  for (;;) {
    const auto next = s.find(sep, pos);
    out.push_back(s.substr(pos, next == std::string_view::npos ? s.npos : next - pos));
    if (next == std::string_view::npos) break;
    pos = next + 1;
  }
  return out;
}

std::vector<std::string_view> lines(std::string_view text) {
  std::vector<std::string_view> out;
  for (auto l : split(text, '\n')) {
    if (!l.empty() && l.back() == '\r') l.remove_suffix(1);
    if (!l.empty()) out.push_back(l);
  }
  return out;
}

double parse_real(std::string_view s) {
  const std::string tmp(s);
  char* end = nullptr;
  errno = 0;
  const double x = std::strtod(tmp.c_str(), &end);
  if (tmp.empty() || end != tmp.c_str() + tmp.size() || errno == ERANGE || !std::isfinite(x)) {
    fail(ErrorKind::kCorruptFile, "bad number '" + tmp + "'");
  }
  return x;
}

std::size_t header_value(std::string_view field, std::string_view name) {
  const std::string prefix = std::string(name) + "=";
  if (field.substr(0, prefix.size()) != prefix) {
    fail(ErrorKind::kCorruptFile, "expected header field " + prefix);
  }
  field.remove_prefix(prefix.size());
  std::size_t v = 0;
  const auto [p, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || p != field.data() + field.size()) {
    fail(ErrorKind::kCorruptFile, "bad header value for " + std::string(name));
  }
  return v;
}

void check_magic(std::string_view tag, std::string_view magic) {
  const auto space = tag.find(' ');
  if (space == std::string_view::npos || tag.substr(0, space) != magic) {
    fail(ErrorKind::kCorruptFile, "missing " + std::string(magic) + " header");
  }
  if (tag.substr(space + 1) != "v1") {
    fail(ErrorKind::kVersionMismatch, "unsupported " + std::string(magic) + " version '" +
                                          std::string(tag.substr(space + 1)) + "'");
  }
}

std::vector<double> parse_row(std::string_view row, std::size_t expected) {
  const auto cells = split(row, ',');
  if (cells.size() != expected) fail(ErrorKind::kCorruptFile, "row has the wrong number of entries");
  std::vector<double> out;
  out.reserve(cells.size());
  for (auto c : cells) out.push_back(parse_real(c));
  return out;
}

void append_row(std::string& out, std::span<const double> values) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ',';
    out += format_real(values[i]);
  }
  out += '\n';
}

}  // namespace

std::string format_real(double x) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

std::string format_field(const SpectralField& u) {
  std::string out = "KICKFLOW-FIELD v1,K=" + std::to_string(u.size()) + "\n";
  append_row(out, u.coeffs());
  return out;
}

std::vector<SpectralField> parse_fields(std::string_view text) {
  const auto ls = lines(text);
  if (ls.empty()) fail(ErrorKind::kCorruptFile, "empty field file");
  const auto head = split(ls[0], ',');
  check_magic(head[0], "KICKFLOW-FIELD");
  if (head.size() != 2) fail(ErrorKind::kCorruptFile, "bad field header");
  const std::size_t K = header_value(head[1], "K");
  std::vector<SpectralField> out;
  for (std::size_t i = 1; i < ls.size(); ++i) out.emplace_back(parse_row(ls[i], K));
  return out;
}

SpectralField parse_field(std::string_view text) {
  auto all = parse_fields(text);
  if (all.size() != 1) fail(ErrorKind::kCorruptFile, "field file must have one data row");
  return std::move(all.front());
}

std::string format_fields(std::span<const SpectralField> fields) {
  require(!fields.empty(), ErrorKind::kInvalidArgument, "no fields to format");
  std::string out = "KICKFLOW-FIELD v1,K=" + std::to_string(fields[0].size()) + "\n";
  for (const auto& u : fields) {
    require(u.size() == fields[0].size(), ErrorKind::kInvalidArgument, "fields differ in size");
    append_row(out, u.coeffs());
  }
  return out;
}

std::string format_kick(const KickPath& eta) {
  std::string out = "KICKFLOW-KICK v1,P=" + std::to_string(eta.time_order()) +
                    ",K=" + std::to_string(eta.modes()) + "\n";
  for (std::size_t p = 0; p < eta.time_order(); ++p) append_row(out, eta.row(p));
  return out;
}

KickPath parse_kick(std::string_view text) {
  const auto ls = lines(text);
  if (ls.empty()) fail(ErrorKind::kCorruptFile, "empty kick file");
  const auto head = split(ls[0], ',');
  check_magic(head[0], "KICKFLOW-KICK");
  if (head.size() != 3) fail(ErrorKind::kCorruptFile, "bad kick header");
  const std::size_t P = header_value(head[1], "P");
  const std::size_t K = header_value(head[2], "K");
  if (ls.size() != P + 1) fail(ErrorKind::kCorruptFile, "kick file has the wrong number of rows");
  std::vector<double> coeffs;
  coeffs.reserve(P * K);
  for (std::size_t p = 0; p < P; ++p) {
    const auto row = parse_row(ls[p + 1], K);
    coeffs.insert(coeffs.end(), row.begin(), row.end());
  }
  return KickPath(P, K, std::move(coeffs));
}

void write_field(const std::string& path, const SpectralField& u) { write_text(path, format_field(u)); }
SpectralField read_field(const std::string& path) { return parse_field(read_text(path)); }
std::vector<SpectralField> read_fields(const std::string& path) { return parse_fields(read_text(path)); }
void write_kick(const std::string& path, const KickPath& eta) { write_text(path, format_kick(eta)); }
KickPath read_kick(const std::string& path) { return parse_kick(read_text(path)); }

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::kIo, "cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::string& path, std::string_view content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  std::error_code ec;
  if (target.has_parent_path()) fs::create_directories(target.parent_path(), ec);
  // Write then rename so readers never see a partial file.
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorKind::kIo, "cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) fail(ErrorKind::kIo, "write failed for " + tmp.string());
  }
  fs::rename(tmp, target, ec);
  if (ec) fail(ErrorKind::kIo, "cannot move " + tmp.string() + " into place: " + ec.message());
}

std::uint64_t fnv1a(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace kickflow
