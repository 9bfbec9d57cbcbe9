#include "kickflow/dual_lipschitz.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>

#include "kickflow/error.hpp"

namespace kickflow {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Breakpoint {
  double x;  // stored without the heap offset
  double w;  // slope drop across the point
};

struct ByXLess {
  bool operator()(const Breakpoint& a, const Breakpoint& b) const { return a.x < b.x; }
};
struct ByXGreater {
  bool operator()(const Breakpoint& a, const Breakpoint& b) const { return a.x > b.x; }
};

// Concave piecewise-linear function on [-s, s]: breakpoints left of the
// maximum sit in a max-heap, those right of it in a min-heap. Walls of
// infinite weight at +-s encode the domain.
class ConcaveChain {
 public:
  explicit ConcaveChain(double s) : s_(s) {
    left_.push({-s, kInf});
    right_.push({s, kInf});
  }

  double max_value() const { return max_; }

  // F <- sup_{|g - f| <= h} F(g), then restricted to [-s, s].
  void dilate(double h) {
    off_left_ -= h;
    off_right_ += h;
    push_left(-s_, kInf);
    push_right(s_, kInf);
  }

  // F <- F + d f.
  void add_linear(double d) {
    if (d > 0.0) {
      double pos = top_right();
      double val = max_ + d * pos;
      double rem = d;
      for (;;) {
        Breakpoint b = right_.top();
        if (b.w > rem) {
          right_.pop();
          b.w -= rem;
          right_.push(b);
          if (rem > 0.0) push_left(pos, rem);
          break;
        }
        right_.pop();
        push_left(pos, b.w);
        rem -= b.w;
        const double next = top_right();
        val += rem * (next - pos);
        pos = next;
      }
      max_ = val;
    } else if (d < 0.0) {
      double pos = top_left();
      double val = max_ + d * pos;
      double rem = -d;
      for (;;) {
        Breakpoint b = left_.top();
        if (b.w > rem) {
          left_.pop();
          b.w -= rem;
          left_.push(b);
          if (rem > 0.0) push_right(pos, rem);
          break;
        }
        left_.pop();
        push_right(pos, b.w);
        rem -= b.w;
        const double next = top_left();
        val += rem * (pos - next);
        pos = next;
      }
      max_ = val;
    }
  }

 private:
  double top_left() const { return left_.top().x + off_left_; }
  double top_right() const { return right_.top().x + off_right_; }
  void push_left(double x, double w) { left_.push({x - off_left_, w}); }
  void push_right(double x, double w) { right_.push({x - off_right_, w}); }

  double s_;
  double max_ = 0.0;
  double off_left_ = 0.0;
  double off_right_ = 0.0;
  std::priority_queue<Breakpoint, std::vector<Breakpoint>, ByXLess> left_;
  std::priority_queue<Breakpoint, std::vector<Breakpoint>, ByXGreater> right_;
};

void check_weights(std::span<const double> x, std::span<const double> w) {
  require(x.size() == w.size(), ErrorKind::kInvalidArgument, "sample and weight sizes differ");
  for (std::size_t i = 0; i < x.size(); ++i) {
    require(std::isfinite(x[i]) && std::isfinite(w[i]) && w[i] >= 0.0,
            ErrorKind::kInvalidArgument, "invalid sample or weight");
  }
}

}  // namespace

std::vector<SignedAtom> merge_atoms(std::span<const double> x, std::span<const double> wx,
                                    std::span<const double> y, std::span<const double> wy) {
  check_weights(x, wx);
  check_weights(y, wy);
  std::vector<SignedAtom> raw;
  raw.reserve(x.size() + y.size());
  for (std::size_t i = 0; i < x.size(); ++i) raw.push_back({x[i], wx[i]});
  for (std::size_t i = 0; i < y.size(); ++i) raw.push_back({y[i], -wy[i]});
  std::sort(raw.begin(), raw.end(),
            [](const SignedAtom& a, const SignedAtom& b) { return a.x < b.x; });
  std::vector<SignedAtom> out;
  out.reserve(raw.size());
  for (const SignedAtom& a : raw) {
    if (!out.empty() && out.back().x == a.x) {
      out.back().mass += a.mass;
    } else {
      out.push_back(a);
    }
  }
  std::erase_if(out, [](const SignedAtom& a) { return a.mass == 0.0; });
  return out;
}

double bl_split_value(std::span<const SignedAtom> atoms, double s) {
  require(s >= 0.0 && s <= 1.0, ErrorKind::kInvalidArgument, "split must lie in [0, 1]");
  if (atoms.empty() || s == 0.0) return 0.0;
  ConcaveChain chain(s);
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    if (i > 0) chain.dilate((1.0 - s) * (atoms[i].x - atoms[i - 1].x));
    chain.add_linear(atoms[i].mass);
  }
  return chain.max_value();
}

double bl_distance(std::span<const SignedAtom> atoms) {
  if (atoms.empty()) return 0.0;
  // V is concave on [0, 1]; golden-section to machine resolution in s.
  const double ratio = 0.5 * (std::sqrt(5.0) - 1.0);
  double a = 0.0;
  double b = 1.0;
  double c = b - ratio * (b - a);
  double d = a + ratio * (b - a);
  double fc = bl_split_value(atoms, c);
  double fd = bl_split_value(atoms, d);
  double best = std::max(fc, fd);
  while (b - a > 1e-12) {
    if (fc < fd) {
      a = c;
      c = d;
      fc = fd;
      d = a + ratio * (b - a);
      fd = bl_split_value(atoms, d);
    } else {
      b = d;
      d = c;
      fd = fc;
      c = b - ratio * (b - a);
      fc = bl_split_value(atoms, c);
    }
    best = std::max({best, fc, fd});
  }
  return std::max(0.0, best);
}

double bl_distance_1d(std::span<const double> x, std::span<const double> wx,
                      std::span<const double> y, std::span<const double> wy) {
  const auto atoms = merge_atoms(x, wx, y, wy);
  return bl_distance(atoms);
}

double bl_distance_1d(std::span<const double> x, std::span<const double> y) {
  require(!x.empty() && !y.empty(), ErrorKind::kInvalidArgument, "empty sample");
  const std::vector<double> wx(x.size(), 1.0 / static_cast<double>(x.size()));
  const std::vector<double> wy(y.size(), 1.0 / static_cast<double>(y.size()));
  return bl_distance_1d(x, wx, y, wy);
}

}  // namespace kickflow
