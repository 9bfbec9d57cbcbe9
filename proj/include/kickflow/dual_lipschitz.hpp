#pragma once

// Exact bounded-Lipschitz distance between two weighted point sets on the line:
//   d(mu1, mu2) = sup { int f d(mu1 - mu2) : ||f||_inf + Lip(f) <= 1 }.
//
// For a fixed split s = ||f||_inf the problem is a chain LP over the merged
// sample points; its value V(s) is concave in s and is computed by a
// slope-trick recursion in O(n log n). The outer maximisation over s in
// [0, 1] uses golden-section search.

#include <cstddef>
#include <span>
#include <vector>

namespace kickflow {

struct SignedAtom {
  double x;
  double mass;  // mass under mu1 minus mass under mu2
};

// Sorts and merges coincident positions; drops zero-mass atoms.
std::vector<SignedAtom> merge_atoms(std::span<const double> x, std::span<const double> wx,
                                    std::span<const double> y, std::span<const double> wy);

// max sum mass_i f_i subject to |f_i| <= s and |f_{i+1} - f_i| <= (1 - s)(x_{i+1} - x_i).
// Atoms must be sorted by position.
double bl_split_value(std::span<const SignedAtom> atoms, double s);

double bl_distance(std::span<const SignedAtom> atoms);

// Uniform weights 1/|x| and 1/|y|.
double bl_distance_1d(std::span<const double> x, std::span<const double> y);

double bl_distance_1d(std::span<const double> x, std::span<const double> wx,
                      std::span<const double> y, std::span<const double> wy);

}  // namespace kickflow
