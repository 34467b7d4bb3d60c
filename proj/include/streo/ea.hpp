#ifndef STREO_EA_HPP_
#define STREO_EA_HPP_

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <memory>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "streo/core.hpp"
#include "streo/models.hpp"
#include "streo/similarity.hpp"

namespace streo {

enum class TransferMode { none, streo, amtea, mab_amtea };

inline std::string to_string(TransferMode m) {
  switch (m) {
    case TransferMode::none: return "cga";
    case TransferMode::streo: return "streo";
    case TransferMode::amtea: return "amtea";
    case TransferMode::mab_amtea: return "mab-amtea";
  }
  return "?";
}

/// Accepts the CLI algorithm names; "none" is an alias of "cga".
inline TransferMode transfer_mode_from_string(std::string_view s) {
  if (s == "cga" || s == "none") return TransferMode::none;
  if (s == "streo") return TransferMode::streo;
  if (s == "amtea") return TransferMode::amtea;
  if (s == "mab-amtea") return TransferMode::mab_amtea;
  throw std::invalid_argument("unknown algorithm: " + std::string(s));
}

struct EaConfig {
  std::size_t population = 50;
  std::size_t max_evaluations = 5000;
  double crossover_rate = 1.0;
  double mutation_rate = -1.0;  // negative means 1/d
  double sbx_index = 10.0;
  double pm_index = 10.0;
  bool lamarckian = true;  // write repaired genotypes back into the population
  TransferMode transfer = TransferMode::none;
  HyperParams hyper;

  double mutation_rate_for(std::size_t d) const {
    return mutation_rate < 0.0 ? 1.0 / static_cast<double>(d) : mutation_rate;
  }

  void validate() const {
    if (population < 2) throw std::invalid_argument("population size must be >= 2");
    if (max_evaluations < population)
      throw std::invalid_argument("evaluation budget smaller than one population");
    if (!(crossover_rate >= 0.0 && crossover_rate <= 1.0))
      throw std::invalid_argument("crossover rate must lie in [0, 1]");
    if (mutation_rate > 1.0) throw std::invalid_argument("mutation rate must lie in [0, 1]");
    if (!(sbx_index > 0.0) || !(pm_index > 0.0))
      throw std::invalid_argument("distribution indices must be > 0");
    hyper.validate();
  }
};

inline void to_json(nlohmann::json& j, const HyperParams& h) {
  j = {{"temperature", h.temperature},
       {"learning_rate", h.learning_rate},
       {"neutralization", h.neutralization},
       {"transfer_interval", h.transfer_interval}};
}

inline void to_json(nlohmann::json& j, const EaConfig& c) {
  j = {{"population", c.population},
       {"max_evaluations", c.max_evaluations},
       {"crossover_rate", c.crossover_rate},
       {"mutation_rate", c.mutation_rate},
       {"sbx_index", c.sbx_index},
       {"pm_index", c.pm_index},
       {"lamarckian", c.lamarckian},
       {"algorithm", to_string(c.transfer)},
       {"hyper", c.hyper}};
}

inline std::string hex64(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

/// Hash of the canonical (sorted-key) JSON serialization.
inline std::string config_hash(const nlohmann::json& j) { return hex64(fnv1a64(j.dump())); }

struct GenerationStats {
  std::size_t generation = 0;
  std::size_t evaluations = 0;
  double best_fitness = 0.0;
  double mean_fitness = 0.0;
  double wall_ms = 0.0;
};

struct TransferSnapshot {
  std::size_t step = 0;
  std::size_t generation = 0;
  std::vector<double> weights;  // one entry per model, target last
  double step_ms = 0.0;
  bool accepted = true;
};

struct RunRecord {
  std::string algorithm;
  std::uint64_t seed = 0;
  std::string config_hash;
  std::vector<GenerationStats> generations;
  std::vector<TransferSnapshot> transfers;
  Genotype best;
  double best_fitness = 0.0;
  std::size_t source_samples = 0;  // candidates drawn from source models

  std::size_t evaluations() const {
    return generations.empty() ? 0 : generations.back().evaluations;
  }

  /// First cumulative evaluation count at which best fitness reached
  /// `level`, or nullopt if it never did.
  std::optional<std::size_t> evaluations_to_reach(double level) const {
    for (const auto& g : generations)
      if (g.best_fitness >= level) return g.evaluations;
    return std::nullopt;
  }

  /// Best fitness after at most `evals` evaluations.
  double best_at(std::size_t evals) const {
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& g : generations) {
      if (g.evaluations > evals) break;
      best = g.best_fitness;
    }
    return best;
  }
};

// ---------------------------------------------------------------------------
// Variation operators

inline std::pair<Genotype, Genotype> uniform_crossover(const Genotype& a, const Genotype& b,
                                                       double rate, Rng& rng) {
  Genotype c1 = a, c2 = b;
  if (rng.uniform() < rate) {
    for (std::size_t j = 0; j < a.size(); ++j)
      if (rng.uniform() < 0.5) std::swap(c1[j], c2[j]);
  }
  return {std::move(c1), std::move(c2)};
}

inline Genotype bitflip_mutation(Genotype g, double rate, Rng& rng) {
  for (auto& x : g.values)
    if (rng.uniform() < rate) x = 1.0 - x;
  return g;
}

/// Spread factor for simulated binary crossover.
inline double sbx_beta(double u, double eta) {
  const double e = 1.0 / (eta + 1.0);
  return u <= 0.5 ? std::pow(2.0 * u, e) : std::pow(1.0 / (2.0 * (1.0 - u)), e);
}

inline std::pair<Genotype, Genotype> sbx_crossover(const Genotype& a, const Genotype& b,
                                                   double eta, double rate,
                                                   const Bounds& bounds, Rng& rng) {
  Genotype c1 = a, c2 = b;
  if (rng.uniform() >= rate) return {std::move(c1), std::move(c2)};
  for (std::size_t j = 0; j < a.size(); ++j) {
    if (rng.uniform() >= 0.5) continue;
    if (std::abs(a[j] - b[j]) <= 1e-14) continue;  // nothing to spread
    const double beta = sbx_beta(rng.uniform(), eta);
    const double x1 = 0.5 * ((1.0 + beta) * a[j] + (1.0 - beta) * b[j]);
    const double x2 = 0.5 * ((1.0 - beta) * a[j] + (1.0 + beta) * b[j]);
    c1[j] = bounds.empty() ? x1 : bounds.clip(j, x1);
    c2[j] = bounds.empty() ? x2 : bounds.clip(j, x2);
  }
  return {std::move(c1), std::move(c2)};
}

/// Bounded polynomial mutation; each coordinate mutates with probability
/// `rate`.
inline Genotype polynomial_mutation(Genotype g, double eta, double rate, const Bounds& bounds,
                                    Rng& rng) {
  const double power = 1.0 / (eta + 1.0);
  for (std::size_t j = 0; j < g.size(); ++j) {
    if (rng.uniform() >= rate) continue;
    const double lo = bounds.lo[j], hi = bounds.hi[j];
    const double span = hi - lo;
    if (!(span > 0.0)) continue;
    const double y = g[j];
    const double u = rng.uniform();
    double dq;
    if (u < 0.5) {
      const double xy = 1.0 - (y - lo) / span;
      const double val = 2.0 * u + (1.0 - 2.0 * u) * std::pow(xy, eta + 1.0);
      dq = std::pow(val, power) - 1.0;
    } else {
      const double xy = 1.0 - (hi - y) / span;
      const double val = 2.0 * (1.0 - u) + 2.0 * (u - 0.5) * std::pow(xy, eta + 1.0);
      dq = 1.0 - std::pow(val, power);
    }
    g[j] = bounds.clip(j, y + dq * span);
  }
  return g;
}

/// Offspring of the same size as `parents` from random pairings.
inline std::vector<Genotype> reproduce(const Population& parents, const TaskInstance& task,
                                       const EaConfig& cfg, Rng& rng) {
  const std::size_t n = parents.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(order.begin(), order.end());
  const double pm = cfg.mutation_rate_for(task.dim);

  std::vector<Genotype> out;
  out.reserve(n);
  for (std::size_t k = 0; out.size() < n; k += 2) {
    const auto& a = parents.genotypes[order[k % n]];
    const auto& b = parents.genotypes[order[(k + 1) % n]];
    if (task.rep == Representation::binary) {
      auto [c1, c2] = uniform_crossover(a, b, cfg.crossover_rate, rng);
      out.push_back(bitflip_mutation(std::move(c1), pm, rng));
      if (out.size() < n) out.push_back(bitflip_mutation(std::move(c2), pm, rng));
    } else {
      auto [c1, c2] = sbx_crossover(a, b, cfg.sbx_index, cfg.crossover_rate, task.bounds, rng);
      out.push_back(polynomial_mutation(std::move(c1), cfg.pm_index, pm, task.bounds, rng));
      if (out.size() < n)
        out.push_back(polynomial_mutation(std::move(c2), cfg.pm_index, pm, task.bounds, rng));
    }
  }
  return out;
}

/// The n fittest of parents followed by offspring; equal fitness keeps the
/// earlier entry (parents first, then lower index).
inline Population elitist_select(const Population& parents, const Population& offspring,
                                 std::size_t n) {
  const std::size_t total = parents.size() + offspring.size();
  if (total < n) throw std::invalid_argument("elitist_select: fewer candidates than n");
  auto fit = [&](std::size_t i) {
    return i < parents.size() ? parents.fitness[i] : offspring.fitness[i - parents.size()];
  };
  std::vector<std::size_t> idx(total);
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return fit(a) > fit(b); });
  Population next;
  next.genotypes.reserve(n);
  next.fitness.reserve(n);
  for (std::size_t r = 0; r < n; ++r) {
    const std::size_t i = idx[r];
    next.genotypes.push_back(i < parents.size() ? parents.genotypes[i]
                                                : offspring.genotypes[i - parents.size()]);
    next.fitness.push_back(fit(i));
  }
  next.evaluations = parents.evaluations + offspring.evaluations;
  return next;
}

// ---------------------------------------------------------------------------
// Host loop

/// A transfer mechanism plugged into the host GA's transfer generations.
class TransferLearner {
 public:
  virtual ~TransferLearner() = default;
  /// Produces `pop.size()` evaluated candidates.
  virtual Population step(const Population& pop, double pop_mean, Rng& rng) = 0;
  /// Current coefficients, one per model with the target last.
  virtual std::vector<double> weights() const = 0;
  virtual bool last_accepted() const { return true; }
  virtual std::size_t source_samples() const = 0;
};

class StreoLearner final : public TransferLearner {
 public:
  StreoLearner(const TaskInstance& task, std::span<const SearchModel> sources,
               const HyperParams& hp, bool lamarckian = true)
      : task_(task),
        sources_(sources),
        hp_(hp),
        lamarckian_(lamarckian),
        state_(init_state(sources.size() + 1, task, hp)) {}

  Population step(const Population& pop, double pop_mean, Rng& rng) override {
    SimilarityStepInfo info;
    auto out = similarity_step(state_, sources_, pop, pop_mean, task_, pop.size(), hp_, rng,
                               &info, lamarckian_);
    accepted_ = info.accepted;
    for (auto p : info.provenance)
      if (p < sources_.size()) ++source_samples_;
    return out;
  }

  std::vector<double> weights() const override { return state_.w; }
  bool last_accepted() const override { return accepted_; }
  std::size_t source_samples() const override { return source_samples_; }
  const TransferState& state() const { return state_; }

 private:
  const TaskInstance& task_;
  std::span<const SearchModel> sources_;
  HyperParams hp_;
  bool lamarckian_;
  TransferState state_;
  bool accepted_ = true;
  std::size_t source_samples_ = 0;
};

/// Generational GA with elitist selection. When `learner` is set, generation
/// i draws its offspring from the learner whenever i mod interval == 0 and
/// i > 1; otherwise offspring come from crossover and mutation.
inline RunRecord evolve(const TaskInstance& task, const EaConfig& cfg, const Rng& rng,
                        TransferLearner* learner, std::string algorithm,
                        Population* final_population = nullptr) {
  cfg.validate();
  using clock = std::chrono::steady_clock;
  const auto start = clock::now();
  auto elapsed_ms = [&] {
    return std::chrono::duration<double, std::milli>(clock::now() - start).count();
  };

  Rng init_rng = rng.child("init");
  Rng repro_rng = rng.child("reproduce");
  Rng transfer_rng = rng.child("transfer");

  RunRecord rec;
  rec.algorithm = std::move(algorithm);
  rec.seed = rng.seed();
  rec.config_hash = config_hash(nlohmann::json(cfg));

  std::vector<Genotype> initial;
  initial.reserve(cfg.population);
  for (std::size_t i = 0; i < cfg.population; ++i) initial.push_back(random_genotype(task, init_rng));
  Population pop = evaluate(task, initial, cfg.lamarckian);
  std::size_t evals = pop.size();
  rec.generations.push_back({0, evals, pop.best_fitness(), pop.mean_fitness(), elapsed_ms()});

  const std::size_t interval = cfg.hyper.transfer_interval;
  std::size_t transfers = 0;
  for (std::size_t i = 0; evals < cfg.max_evaluations; ++i) {
    Population offspring;
    if (learner && i % interval == 0 && i > 1) {
      const double mean = pop.mean_fitness();
      const auto t0 = clock::now();
      offspring = learner->step(pop, mean, transfer_rng);
      const double ms = std::chrono::duration<double, std::milli>(clock::now() - t0).count();
      rec.transfers.push_back({transfers++, i + 1, learner->weights(), ms, learner->last_accepted()});
    } else {
      offspring = evaluate(task, reproduce(pop, task, cfg, repro_rng), cfg.lamarckian);
    }
    evals += offspring.size();
    pop = elitist_select(pop, offspring, cfg.population);
    rec.generations.push_back({i + 1, evals, pop.best_fitness(), pop.mean_fitness(), elapsed_ms()});
  }

  const auto b = pop.best_index();
  rec.best = pop.genotypes[b];
  rec.best_fitness = pop.fitness[b];
  if (learner) rec.source_samples = learner->source_samples();
  if (final_population) *final_population = std::move(pop);
  return rec;
}

}  // namespace streo

#endif  // STREO_EA_HPP_
