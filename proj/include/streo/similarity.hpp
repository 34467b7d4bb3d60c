#ifndef STREO_SIMILARITY_HPP_
#define STREO_SIMILARITY_HPP_

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "streo/core.hpp"
#include "streo/models.hpp"

namespace streo {

/// Settings of the (1+1)-ES that learns the transfer coefficients.
struct HyperParams {
  double temperature = 0.01;     // softmax temperature
  double learning_rate = 0.9;    // blend factor between parent and softmax
  double neutralization = 1e-2;  // threshold coefficient c; threshold is c / T
  std::size_t transfer_interval = 2;

  double threshold(std::size_t model_count) const {
    return neutralization / static_cast<double>(model_count);
  }

  void validate() const {
    if (!(temperature > 0.0)) throw std::invalid_argument("temperature must be > 0");
    if (!(learning_rate >= 0.0 && learning_rate <= 1.0))
      throw std::invalid_argument("learning rate must lie in [0, 1]");
    if (!(neutralization > 0.0)) throw std::invalid_argument("neutralization coefficient must be > 0");
    if (transfer_interval < 1) throw std::invalid_argument("transfer interval must be >= 1");
  }
};

/// Running mean target fitness per model. The last slot belongs to the target
/// model; it is overwritten every step and carries no count.
struct MutationVector {
  std::vector<double> pi;
  std::vector<std::size_t> counts;
  double init_value = 0.0;
};

/// The (1+1)-ES individual plus the samples awaiting attribution.
struct TransferState {
  std::vector<double> w;
  MutationVector mutation;
  double incumbent = 0.0;
  std::size_t t = 0;

  // Provenance and fitness of the most recent X_t; folded into the running
  // means at the start of the next step.
  std::vector<std::size_t> pending_provenance;
  std::vector<double> pending_fitness;

  std::size_t model_count() const { return w.size(); }
  std::size_t target_slot() const { return w.size() - 1; }
};

inline TransferState init_state(std::size_t model_count, const TaskInstance& task,
                                const HyperParams& hp) {
  hp.validate();
  if (model_count < 2)
    throw std::invalid_argument("init_state: need at least one source model (T >= 2)");
  TransferState s;
  const double init = task.sense == Sense::maximize ? 0.0 : task.fitness_lower_bound;
  s.w.assign(model_count, 1.0 / static_cast<double>(model_count));
  s.mutation.pi.assign(model_count, init);
  s.mutation.counts.assign(model_count, 0);
  s.mutation.init_value = init;
  return s;
}

/// Incremental mean update pi[s] += (f - pi[s]) / k for every source sample in
/// arrival order; samples attributed to the target slot are skipped and the
/// target slot is set to `target_mean`.
inline void update_running_means(TransferState& s, std::span<const std::size_t> provenance,
                                 std::span<const double> fitness, double target_mean) {
  if (provenance.size() != fitness.size())
    throw std::invalid_argument("update_running_means: provenance/fitness length mismatch");
  auto& mv = s.mutation;
  const std::size_t target = s.target_slot();
  for (std::size_t i = 0; i < provenance.size(); ++i) {
    const std::size_t src = provenance[i];
    if (src >= target) continue;
    const std::size_t k = ++mv.counts[src];
    mv.pi[src] += (fitness[i] - mv.pi[src]) / static_cast<double>(k);
  }
  mv.pi[target] = target_mean;
}

/// Softmax with temperature, evaluated after subtracting the maximum.
inline std::vector<double> softmax(std::span<const double> x, double temperature) {
  std::vector<double> out(x.size());
  if (x.empty()) return out;
  const double top = *std::max_element(x.begin(), x.end());
  double sum = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    out[i] = std::exp((x[i] - top) / temperature);
    sum += out[i];
  }
  for (auto& v : out) v /= sum;
  return out;
}

/// Shifts the mutation vector into [0, inf) when it has negative entries, then
/// divides by its maximum. An all-zero vector maps to all zeros.
inline std::vector<double> scale_mutation_vector(std::span<const double> pi) {
  std::vector<double> out(pi.begin(), pi.end());
  if (out.empty()) return out;
  const double lo = *std::min_element(out.begin(), out.end());
  if (lo < 0.0)
    for (auto& v : out) v += -lo;
  const double hi = *std::max_element(out.begin(), out.end());
  if (hi > 0.0) {
    for (auto& v : out) v /= hi;
  } else {
    std::fill(out.begin(), out.end(), 0.0);
  }
  return out;
}

/// Offspring transfer coefficients from the parent and the mutation vector.
inline std::vector<double> mutate_coefficients(const TransferState& s, const HyperParams& hp) {
  if (s.t < 1) throw std::logic_error("mutate_coefficients: requires t >= 1");
  const std::size_t T = s.model_count();
  const auto scaled = scale_mutation_vector(s.mutation.pi);
  const auto probs = softmax(scaled, hp.temperature);
  const double eps = hp.threshold(T);
  const std::size_t target = s.target_slot();

  std::vector<double> w(T);
  double sum = 0.0;
  for (std::size_t i = 0; i < T; ++i) {
    w[i] = (1.0 - hp.learning_rate) * s.w[i] + hp.learning_rate * probs[i];
    // Silenced sources stay silenced; the target slot may recover.
    if (w[i] <= eps || (i != target && s.w[i] == 0.0)) w[i] = 0.0;
    sum += w[i];
  }
  if (sum <= 0.0) {
    std::fill(w.begin(), w.end(), 0.0);
    w[target] = 1.0;
    return w;
  }
  for (auto& v : w) v /= sum;
  return w;
}

struct SimilarityStepInfo {
  bool accepted = true;
  double offspring_mean = 0.0;
  std::size_t dropped_for_budget = 0;  // weights zeroed so the support fits n
  std::vector<std::size_t> provenance;
};

/// One generation of the (1+1)-ES: refit the target model on `target_pop`,
/// mutate (t >= 1), sample `n` candidates from the mixture, evaluate them and
/// keep the offspring coefficients iff their mean fitness is not worse than
/// the incumbent's. Returns the evaluated candidates X_t.
inline Population similarity_step(TransferState& s, std::span<const SearchModel> sources,
                                  const Population& target_pop, double target_mean,
                                  const TaskInstance& task, std::size_t n, const HyperParams& hp,
                                  Rng& rng, SimilarityStepInfo* info = nullptr,
                                  bool lamarckian = true) {
  const std::size_t T = s.model_count();
  if (sources.size() + 1 != T)
    throw std::invalid_argument("similarity_step: state expects " + std::to_string(T - 1) +
                                " sources, got " + std::to_string(sources.size()));
  if (n == 0) throw std::invalid_argument("similarity_step: sample budget must be positive");

  const SearchModel target_model = fit_model(target_pop, task.rep);

  std::vector<double> candidate;
  if (s.t == 0) {
    candidate = s.w;
  } else {
    update_running_means(s, s.pending_provenance, s.pending_fitness, target_mean);
    candidate = mutate_coefficients(s, hp);
  }

  std::vector<double> sampling = candidate;
  const std::size_t dropped = restrict_support(sampling, n, rng, s.target_slot());
  const auto mix = make_mixture(sources, target_model, std::move(sampling));
  const Bounds* bounds = task.bounds.empty() ? nullptr : &task.bounds;
  auto drawn = sample_mixture(mix, n, rng, bounds);
  Population offspring = evaluate(task, drawn.genotypes, lamarckian);
  const double mean = offspring.mean_fitness();

  bool accepted = true;
  if (s.t == 0) {
    s.incumbent = mean;
  } else if (mean >= s.incumbent) {
    s.w = std::move(candidate);
    s.incumbent = mean;
  } else {
    accepted = false;
  }

  s.pending_provenance = drawn.provenance;
  s.pending_fitness = offspring.fitness;
  ++s.t;

  if (info) {
    info->accepted = accepted;
    info->offspring_mean = mean;
    info->dropped_for_budget = dropped;
    info->provenance = std::move(drawn.provenance);
  }
  return offspring;
}

}  // namespace streo

#endif  // STREO_SIMILARITY_HPP_
