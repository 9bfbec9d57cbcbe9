#include "kickflow/checkpoint.hpp"

#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <sstream>

#include "kickflow/error.hpp"
#include "kickflow/field_io.hpp"

namespace kickflow {

namespace {

constexpr std::string_view kMagic = "KICKFLOW-CKPT";

std::string hexfloat(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%a", x);
  return buf;
}

[[noreturn]] void corrupt(const std::string& what) {
  fail(ErrorKind::kCorruptFile, "checkpoint: " + what);
}

double read_hexfloat(std::string_view s) {
  const std::string tmp(s);
  char* end = nullptr;
  errno = 0;
  const double x = std::strtod(tmp.c_str(), &end);
  if (tmp.empty() || end != tmp.c_str() + tmp.size() || !std::isfinite(x)) corrupt("bad number");
  return x;
}

std::uint64_t read_u64(std::string_view s) {
  std::uint64_t v = 0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) corrupt("bad integer '" + std::string(s) + "'");
  return v;
}

std::string_view after(std::string_view line, std::string_view prefix) {
  if (line.substr(0, prefix.size()) != prefix) corrupt("expected '" + std::string(prefix) + "'");
  return line.substr(prefix.size());
}

class LineReader {
 public:
  explicit LineReader(std::string_view text) : text_(text) {}
  bool done() const { return pos_ >= text_.size(); }
  std::size_t offset() const { return pos_; }
  std::string_view next() {
    if (done()) corrupt("unexpected end of file");
    const auto nl = text_.find('\n', pos_);
    if (nl == std::string_view::npos) corrupt("missing final newline");
    const auto line = text_.substr(pos_, nl - pos_);
    pos_ = nl + 1;
    return line;
  }

 private:
  std::string_view text_;
  std::size_t pos_ = 0;
};

std::vector<std::string_view> words(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (pos < s.size()) {
    const auto sp = s.find(' ', pos);
    out.push_back(s.substr(pos, sp == std::string_view::npos ? s.npos : sp - pos));
    if (sp == std::string_view::npos) break;
    pos = sp + 1;
  }
  return out;
}

}  // namespace

const EmpiricalEnsemble& Checkpoint::ensemble(const std::string& name) const {
  for (const auto& [n, e] : ensembles) {
    if (n == name) return e;
  }
  fail(ErrorKind::kCorruptFile, "checkpoint has no ensemble named " + name);
}

bool operator==(const Checkpoint& a, const Checkpoint& b) {
  if (a.seed != b.seed || a.kick_index != b.kick_index || a.meta != b.meta || a.rows != b.rows ||
      a.ensembles.size() != b.ensembles.size()) {
    return false;
  }
  for (std::size_t i = 0; i < a.ensembles.size(); ++i) {
    const auto& [na, ea] = a.ensembles[i];
    const auto& [nb, eb] = b.ensembles[i];
    if (na != nb || ea.particles != eb.particles || ea.weights != eb.weights ||
        ea.lineage != eb.lineage || ea.kick_index != eb.kick_index) {
      return false;
    }
  }
  return true;
}

std::string format_checkpoint(const Checkpoint& c) {
  std::string out;
  out += std::string(kMagic) + " v1\n";
  out += "seed=" + std::to_string(c.seed) + "\n";
  out += "kick_index=" + std::to_string(c.kick_index) + "\n";
  for (const auto& [k, v] : c.meta) {
    require(k.find_first_of(" =\n") == std::string::npos && v.find('\n') == std::string::npos,
            ErrorKind::kInvalidArgument, "checkpoint meta entries must be single tokens");
    out += "meta " + k + "=" + v + "\n";
  }
  for (const auto& [name, e] : c.ensembles) {
    require(name.find_first_of(" \n") == std::string::npos && !name.empty(),
            ErrorKind::kInvalidArgument, "ensemble names must be single tokens");
    e.check();
    const std::size_t K = e.empty() ? 0 : e.particles[0].size();
    out += "ensemble " + name + " " + std::to_string(e.size()) + " " + std::to_string(K) + " " +
           std::to_string(e.kick_index) + "\n";
    for (std::size_t i = 0; i < e.size(); ++i) {
      out += std::to_string(e.lineage[i]) + " " + hexfloat(e.weights[i]) + " ";
      for (std::size_t k = 0; k < K; ++k) {
        if (k) out += ',';
        out += hexfloat(e.particles[i][k]);
      }
      out += '\n';
    }
  }
  out += "rows " + std::to_string(c.rows.size()) + "\n";
  for (const auto& r : c.rows) {
    require(r.find('\n') == std::string::npos, ErrorKind::kInvalidArgument,
            "checkpoint rows must be single lines");
    out += r + "\n";
  }
  out += "hash=" + hex64(fnv1a(out)) + "\n";
  return out;
}

Checkpoint parse_checkpoint(std::string_view text) {
  LineReader in(text);
  const auto head = in.next();
  const auto sp = head.find(' ');
  if (sp == std::string_view::npos || head.substr(0, sp) != kMagic) corrupt("missing header");
  if (head.substr(sp + 1) != "v1") {
    fail(ErrorKind::kVersionMismatch,
         "unsupported checkpoint version '" + std::string(head.substr(sp + 1)) + "'");
  }
  Checkpoint c;
  c.seed = read_u64(after(in.next(), "seed="));
  c.kick_index = read_u64(after(in.next(), "kick_index="));
  for (;;) {
    const auto line = in.next();
    if (line.substr(0, 5) == "meta ") {
      const auto kv = line.substr(5);
      const auto eq = kv.find('=');
      if (eq == std::string_view::npos) corrupt("bad meta line");
      c.meta[std::string(kv.substr(0, eq))] = std::string(kv.substr(eq + 1));
    } else if (line.substr(0, 9) == "ensemble ") {
      const auto w = words(line.substr(9));
      if (w.size() != 4) corrupt("bad ensemble header");
      EmpiricalEnsemble e;
      const std::size_t n = read_u64(w[1]);
      const std::size_t K = read_u64(w[2]);
      e.kick_index = read_u64(w[3]);
      for (std::size_t i = 0; i < n; ++i) {
        const auto pw = words(in.next());
        if (pw.size() != 3) corrupt("bad particle line");
        e.lineage.push_back(read_u64(pw[0]));
        e.weights.push_back(read_hexfloat(pw[1]));
        SpectralField u(K);
        std::size_t k = 0, pos = 0;
        const auto cells = pw[2];
        while (pos <= cells.size() && k < K) {
          const auto comma = cells.find(',', pos);
          u[k++] = read_hexfloat(cells.substr(pos, comma == std::string_view::npos ? cells.npos : comma - pos));
          if (comma == std::string_view::npos) {
            pos = cells.size() + 1;
          } else {
            pos = comma + 1;
          }
        }
        if (k != K || pos != cells.size() + 1) corrupt("particle has the wrong dimension");
        e.particles.push_back(std::move(u));
      }
      c.ensembles.emplace_back(std::string(w[0]), std::move(e));
    } else if (line.substr(0, 5) == "rows ") {
      const std::size_t n = read_u64(line.substr(5));
      for (std::size_t i = 0; i < n; ++i) c.rows.emplace_back(in.next());
      const std::size_t body_end = in.offset();
      const auto hash = after(in.next(), "hash=");
      if (hash != hex64(fnv1a(text.substr(0, body_end)))) corrupt("hash mismatch");
      if (!in.done()) corrupt("trailing data after hash");
      break;
    } else {
      corrupt("unexpected line '" + std::string(line.substr(0, 40)) + "'");
    }
  }
  for (const auto& [name, e] : c.ensembles) {
    try {
      e.check();
    } catch (const Error&) {
      corrupt("ensemble " + name + " is inconsistent");
    }
  }
  return c;
}

void checkpoint_save(const Checkpoint& c, const std::string& path) {
  write_text(path, format_checkpoint(c));
}

Checkpoint checkpoint_load(const std::string& path) { return parse_checkpoint(read_text(path)); }

}  // namespace kickflow
