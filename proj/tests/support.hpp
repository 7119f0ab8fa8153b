#pragma once

// Shared helpers for the test binaries: brute-force path enumeration and
// quadrature oracles kept independent of the library's DP / special-function
// code paths.

#include <cmath>
#include <functional>
#include <vector>

#include "lptail/lattice.hpp"

namespace testsupport {

// All directed 0 -> n paths as coordinate sequences, by recursion.
inline void enumerate_paths_rec(std::vector<int>& cur, int n, int d,
                                std::vector<std::vector<std::vector<int>>>& out,
                                std::vector<std::vector<int>>& path) {
  bool done = true;
  for (int j = 0; j < d; ++j)
    if (cur[j] < n) done = false;
  if (done) {
    out.push_back(path);
    return;
  }
  for (int j = 0; j < d; ++j) {
    if (cur[j] < n) {
      ++cur[j];
      path.push_back(cur);
      enumerate_paths_rec(cur, n, d, out, path);
      path.pop_back();
      --cur[j];
    }
  }
}

inline std::vector<std::vector<std::vector<int>>> enumerate_paths(int n, int d) {
  std::vector<int> cur(d, 0);
  std::vector<std::vector<std::vector<int>>> out;
  std::vector<std::vector<int>> path;
  path.push_back(cur);
  enumerate_paths_rec(cur, n, d, out, path);
  return out;
}

inline double path_weight(const lptail::WeightField& f,
                          const std::vector<std::vector<int>>& path) {
  double s = 0;
  for (const auto& v : path) s += f.at(v);
  return s;
}

inline double brute_force_passage(const lptail::WeightField& f) {
  auto paths = enumerate_paths(f.grid->n, f.grid->d);
  double best = -1;
  for (const auto& p : paths) best = std::max(best, path_weight(f, p));
  return best;
}

// Composite Simpson on [a, b]; the quadrature oracle for moments and CDFs.
inline double simpson(const std::function<double(double)>& g, double a,
                      double b, int panels = 4096) {
  if (panels % 2) ++panels;
  double h = (b - a) / panels;
  double s = g(a) + g(b);
  for (int k = 1; k < panels; ++k) s += g(a + k * h) * (k % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

}  // namespace testsupport
