#pragma once

#include <cmath>
#include <numeric>
#include <ostream>
#include <vector>

#include "streo/core.hpp"
#include "streo/models.hpp"

namespace streo {

inline void PrintTo(const Genotype& g, std::ostream* os) {
  *os << (g.rep == Representation::binary ? "bits[" : "reals[");
  for (std::size_t i = 0; i < g.size(); ++i) *os << (i ? " " : "") << g[i];
  *os << "]";
}

}  // namespace streo

namespace streo::fixtures {

inline Population binary_population(const std::vector<std::vector<int>>& bits) {
  Population p;
  for (const auto& row : bits) {
    std::vector<double> v(row.begin(), row.end());
    p.genotypes.emplace_back(Representation::binary, std::move(v));
    p.fitness.push_back(0.0);
  }
  p.evaluations = p.size();
  return p;
}

inline Population real_population(const std::vector<std::vector<double>>& rows) {
  Population p;
  for (const auto& row : rows) {
    p.genotypes.emplace_back(Representation::real, row);
    p.fitness.push_back(0.0);
  }
  p.evaluations = p.size();
  return p;
}

/// Count of ones, maximized.
inline TaskInstance onemax(std::size_t d) {
  TaskInstance t;
  t.name = "onemax";
  t.rep = Representation::binary;
  t.dim = d;
  t.objective = [](std::span<const double> x) { return std::accumulate(x.begin(), x.end(), 0.0); };
  return t;
}

/// Squared distance to `c` on [0,1]^d, minimized.
inline TaskInstance sphere(std::size_t d, double c = 0.3) {
  TaskInstance t;
  t.name = "sphere";
  t.rep = Representation::real;
  t.dim = d;
  t.sense = Sense::minimize;
  t.bounds = Bounds::uniform(d, 0.0, 1.0);
  t.objective = [c](std::span<const double> x) {
    double s = 0.0;
    for (double v : x) s += (v - c) * (v - c);
    return s;
  };
  t.fitness_lower_bound = -static_cast<double>(d);
  return t;
}

/// Random point on the simplex with `zeros` entries forced to zero.
inline std::vector<double> random_simplex(std::size_t T, Rng& rng, std::size_t zeros = 0) {
  std::vector<double> w(T);
  for (auto& x : w) x = -std::log(1.0 - rng.uniform());
  for (std::size_t k = 0; k < zeros && k < T - 1; ++k) w[rng.below(T)] = 0.0;
  double s = std::accumulate(w.begin(), w.end(), 0.0);
  if (s <= 0.0) {
    w[0] = 1.0;
    s = 1.0;
  }
  for (auto& x : w) x /= s;
  return w;
}

inline double sum_of(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0); }

}  // namespace streo::fixtures
