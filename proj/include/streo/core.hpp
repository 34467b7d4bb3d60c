#ifndef STREO_CORE_HPP_
#define STREO_CORE_HPP_

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace streo {

enum class Representation { binary, real };
enum class Sense { maximize, minimize };

inline std::string to_string(Representation r) {
  return r == Representation::binary ? "binary" : "real";
}

inline Representation representation_from_string(std::string_view s) {
  if (s == "binary") return Representation::binary;
  if (s == "real") return Representation::real;
  throw std::invalid_argument("unknown representation: " + std::string(s));
}

/// A candidate solution. Binary genotypes store their bits as 0.0 / 1.0 so
/// that densities and operators can share one value type.
struct Genotype {
  Representation rep = Representation::binary;
  std::vector<double> values;

  Genotype() = default;
  Genotype(Representation r, std::vector<double> v) : rep(r), values(std::move(v)) {}

  std::size_t size() const { return values.size(); }
  double operator[](std::size_t i) const { return values[i]; }
  double& operator[](std::size_t i) { return values[i]; }
  bool operator==(const Genotype&) const = default;
};

struct Bounds {
  std::vector<double> lo;
  std::vector<double> hi;

  static Bounds uniform(std::size_t d, double lo, double hi) {
    return {std::vector<double>(d, lo), std::vector<double>(d, hi)};
  }
  std::size_t size() const { return lo.size(); }
  bool empty() const { return lo.empty(); }

  double clip(std::size_t j, double x) const {
    return x < lo[j] ? lo[j] : (x > hi[j] ? hi[j] : x);
  }
};

/// An objective over genotypes of fixed dimensionality.
///
/// `objective` is the raw task objective in its natural sense. Everything
/// downstream of `evaluate` sees maximization-oriented fitness: minimize
/// tasks are negated exactly once, at the evaluation boundary.
/// `fitness_lower_bound` is expressed in that internal orientation.
struct TaskInstance {
  std::string name;
  Representation rep = Representation::binary;
  std::size_t dim = 0;
  Sense sense = Sense::maximize;
  Bounds bounds;  // empty for binary tasks
  std::function<double(std::span<const double>)> objective;
  std::function<Genotype(const Genotype&)> repair;  // optional
  double fitness_lower_bound = 0.0;

  double fitness_of(std::span<const double> x) const {
    const double f = objective(x);
    return sense == Sense::maximize ? f : -f;
  }
};

struct Population {
  std::vector<Genotype> genotypes;
  std::vector<double> fitness;
  std::size_t evaluations = 0;

  std::size_t size() const { return genotypes.size(); }
  bool empty() const { return genotypes.empty(); }

  double mean_fitness() const {
    if (fitness.empty()) return 0.0;
    return std::accumulate(fitness.begin(), fitness.end(), 0.0) /
           static_cast<double>(fitness.size());
  }

  double best_fitness() const {
    double best = -std::numeric_limits<double>::infinity();
    for (double f : fitness) best = f > best ? f : best;
    return best;
  }

  std::size_t best_index() const {
    std::size_t b = 0;
    for (std::size_t i = 1; i < fitness.size(); ++i)
      if (fitness[i] > fitness[b]) b = i;
    return b;
  }
};

// ---------------------------------------------------------------------------
// Random numbers

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Seeded generator identified by (seed, stream). Child streams are derived
/// from the parent's identity and a label, never from its draw position, so
/// consuming draws in one phase cannot shift another phase's sequence.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0, std::uint64_t stream = 0)
      : seed_(seed), stream_(stream), engine_(splitmix64(seed ^ splitmix64(stream))) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }

  Rng child(std::string_view label) const {
    return Rng(seed_, splitmix64(stream_ ^ fnv1a64(label)));
  }
  Rng child(std::uint64_t index) const {
    return Rng(seed_, splitmix64(stream_ + 0x632be59bd9b4e019ULL * (index + 1)));
  }

  std::uint64_t next() { return engine_(); }

  /// Uniform in [0, 1) with 53 bits of resolution.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n).
  std::size_t below(std::size_t n) {
    return static_cast<std::size_t>(std::uniform_int_distribution<std::uint64_t>(0, n - 1)(engine_));
  }

  bool bernoulli(double p) { return uniform() < p; }

  double normal() {
    // Box-Muller; one draw per call keeps the stream position a pure
    // function of the number of calls.
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  template <class It>
  void shuffle(It first, It last) {
    const auto n = static_cast<std::size_t>(last - first);
    for (std::size_t i = n; i > 1; --i) std::swap(first[i - 1], first[below(i)]);
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::mt19937_64 engine_;
};

// ---------------------------------------------------------------------------
// Evaluation

/// Evaluates `genotypes` against `task`. Input genotypes are never modified.
/// With `lamarckian` set the repaired genotype is stored in the result,
/// otherwise the original is kept and only its fitness reflects the repair.
inline Population evaluate(const TaskInstance& task, std::span<const Genotype> genotypes,
                           bool lamarckian = true) {
  Population pop;
  pop.genotypes.reserve(genotypes.size());
  pop.fitness.reserve(genotypes.size());
  for (const auto& g : genotypes) {
    if (g.size() != task.dim)
      throw std::invalid_argument("evaluate: genotype length " + std::to_string(g.size()) +
                                  " does not match task dimensionality " +
                                  std::to_string(task.dim));
    if (task.repair) {
      Genotype fixed = task.repair(g);
      pop.fitness.push_back(task.fitness_of(fixed.values));
      pop.genotypes.push_back(lamarckian ? std::move(fixed) : g);
    } else {
      pop.fitness.push_back(task.fitness_of(g.values));
      pop.genotypes.push_back(g);
    }
  }
  pop.evaluations = genotypes.size();
  return pop;
}

inline Population evaluate(const TaskInstance& task, const std::vector<Genotype>& genotypes,
                           bool lamarckian = true) {
  return evaluate(task, std::span<const Genotype>(genotypes), lamarckian);
}

inline Genotype random_genotype(const TaskInstance& task, Rng& rng) {
  std::vector<double> v(task.dim);
  if (task.rep == Representation::binary) {
    for (auto& x : v) x = rng.bernoulli(0.5) ? 1.0 : 0.0;
  } else {
    for (std::size_t j = 0; j < task.dim; ++j)
      v[j] = rng.uniform(task.bounds.lo[j], task.bounds.hi[j]);
  }
  return {task.rep, std::move(v)};
}

}  // namespace streo

#endif  // STREO_CORE_HPP_
