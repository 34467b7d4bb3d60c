#ifndef STREO_BASELINES_HPP_
#define STREO_BASELINES_HPP_

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "streo/archive.hpp"
#include "streo/core.hpp"
#include "streo/ea.hpp"
#include "streo/models.hpp"

namespace streo {

// ---------------------------------------------------------------------------
// Stacked density estimation

struct EmConfig {
  std::size_t max_iterations = 100;
  double tolerance = 1e-6;  // relative change of the data log-likelihood
  double target_floor = 0.0;  // minimum weight of the last component; 0 disables

  void validate() const {
    if (max_iterations < 1) throw std::invalid_argument("EM needs at least one iteration");
    if (!(tolerance >= 0.0)) throw std::invalid_argument("EM tolerance must be >= 0");
    if (!(target_floor >= 0.0 && target_floor < 1.0))
      throw std::invalid_argument("EM target floor must lie in [0, 1)");
  }
};

struct EmResult {
  std::vector<double> weights;
  std::vector<double> log_likelihood;  // data log-likelihood before each M-step
  std::size_t iterations = 0;
};

using ModelRefs = std::vector<std::reference_wrapper<const SearchModel>>;

/// Mixture weights over fixed component densities maximizing the likelihood
/// of `pop`, by EM from the uniform start. Only the weights are updated.
inline EmResult em_fit_weights(const ModelRefs& models, const Population& pop,
                               const EmConfig& cfg = {}) {
  cfg.validate();
  if (pop.empty()) throw std::invalid_argument("em_fit_weights: empty population");
  if (models.empty()) throw std::invalid_argument("em_fit_weights: no components");
  const std::size_t n = pop.size(), T = models.size();

  // n x T matrix of component log-densities, row-major.
  std::vector<double> logp(n * T);
  for (std::size_t i = 0; i < n; ++i) {
    bool finite = false;
    for (std::size_t k = 0; k < T; ++k) {
      const double v = log_density(models[k].get(), pop.genotypes[i]);
      logp[i * T + k] = v;
      finite = finite || std::isfinite(v);
    }
    if (!finite)
      throw std::invalid_argument("em_fit_weights: point " + std::to_string(i) +
                                  " has zero density under every component");
  }

  EmResult res;
  std::vector<double> w(T, 1.0 / static_cast<double>(T));
  std::vector<double> logw(T), resp_sum(T), row(T);
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  for (std::size_t it = 0; it < cfg.max_iterations; ++it) {
    for (std::size_t k = 0; k < T; ++k) logw[k] = w[k] > 0.0 ? std::log(w[k]) : kNegInf;
    std::fill(resp_sum.begin(), resp_sum.end(), 0.0);
    double ll = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double top = kNegInf;
      for (std::size_t k = 0; k < T; ++k) {
        row[k] = logw[k] + logp[i * T + k];
        top = std::max(top, row[k]);
      }
      double s = 0.0;
      for (std::size_t k = 0; k < T; ++k) {
        row[k] = row[k] == kNegInf ? 0.0 : std::exp(row[k] - top);
        s += row[k];
      }
      ll += top + std::log(s);
      for (std::size_t k = 0; k < T; ++k) resp_sum[k] += row[k] / s;
    }
    res.log_likelihood.push_back(ll);
    res.iterations = it + 1;
    if (it > 0) {
      const double prev = res.log_likelihood[it - 1];
      if (std::abs(ll - prev) <= cfg.tolerance * std::max(std::abs(prev), 1e-300)) break;
    }
    for (std::size_t k = 0; k < T; ++k) w[k] = resp_sum[k] / static_cast<double>(n);
  }

  if (cfg.target_floor > 0.0 && w.back() < cfg.target_floor) {
    const double rest = 1.0 - w.back();
    const double scale = rest > 0.0 ? (1.0 - cfg.target_floor) / rest : 0.0;
    for (std::size_t k = 0; k + 1 < T; ++k) w[k] *= scale;
    w.back() = cfg.target_floor;
  }
  double sum = 0.0;
  for (double x : w) sum += x;
  for (double& x : w) x /= sum;
  res.weights = std::move(w);
  return res;
}

// ---------------------------------------------------------------------------
// EXP3 source selection

struct Exp3State {
  std::vector<double> weights;
  double gamma = 0.1;
  std::vector<double> cumulative_reward;
  double reward_min = std::numeric_limits<double>::infinity();
  double reward_max = -std::numeric_limits<double>::infinity();
  std::size_t clipped_rewards = 0;

  Exp3State() = default;
  Exp3State(std::size_t arms, double g)
      : weights(arms, 1.0), gamma(g), cumulative_reward(arms, 0.0) {
    if (arms == 0) throw std::invalid_argument("Exp3State: needs at least one arm");
    if (!(g > 0.0 && g <= 1.0)) throw std::invalid_argument("Exp3State: gamma must lie in (0, 1]");
  }

  std::size_t arms() const { return weights.size(); }

  double probability(std::size_t k) const {
    double sum = 0.0;
    for (double x : weights) sum += x;
    const double K = static_cast<double>(weights.size());
    return (1.0 - gamma) * weights[k] / sum + gamma / K;
  }

  std::vector<double> probabilities() const {
    double sum = 0.0;
    for (double x : weights) sum += x;
    const double K = static_cast<double>(weights.size());
    std::vector<double> p(weights.size());
    for (std::size_t k = 0; k < p.size(); ++k) p[k] = (1.0 - gamma) * weights[k] / sum + gamma / K;
    return p;
  }

  /// Maps a batch mean fitness into [0, 1] using the running min and max of
  /// every mean observed so far (the first observation maps to 0.5).
  double normalize_reward(double mean_fitness) {
    reward_min = std::min(reward_min, mean_fitness);
    reward_max = std::max(reward_max, mean_fitness);
    if (!(reward_max > reward_min)) return 0.5;
    return (mean_fitness - reward_min) / (reward_max - reward_min);
  }
};

inline std::size_t exp3_select(const Exp3State& s, Rng& rng) {
  if (s.arms() == 1) return 0;
  const auto p = s.probabilities();
  double u = rng.uniform();
  for (std::size_t k = 0; k < p.size(); ++k) {
    if (u < p[k]) return k;
    u -= p[k];
  }
  return p.size() - 1;
}

inline void exp3_update(Exp3State& s, std::size_t arm, double reward) {
  if (arm >= s.arms()) throw std::out_of_range("exp3_update: arm index");
  if (!(reward >= 0.0 && reward <= 1.0)) {
    reward = std::clamp(std::isfinite(reward) ? reward : 0.0, 0.0, 1.0);
    ++s.clipped_rewards;
  }
  const double p = s.probability(arm);
  const double K = static_cast<double>(s.arms());
  s.weights[arm] *= std::exp(s.gamma * (reward / p) / K);
  s.cumulative_reward[arm] += reward;
  const double top = *std::max_element(s.weights.begin(), s.weights.end());
  if (top > 1e200)
    for (auto& x : s.weights) x /= top;
}

// ---------------------------------------------------------------------------
// Learners for the host loop

/// EM over every source plus the refit target model at each transfer step.
class AmteaLearner final : public TransferLearner {
 public:
  AmteaLearner(const TaskInstance& task, std::span<const SearchModel> sources, EmConfig em = {},
               bool lamarckian = true)
      : task_(task), sources_(sources), em_(em), lamarckian_(lamarckian) {
    weights_.assign(sources.size() + 1, 1.0 / static_cast<double>(sources.size() + 1));
  }

  Population step(const Population& pop, double /*pop_mean*/, Rng& rng) override {
    const SearchModel target = fit_model(pop, task_.rep);
    ModelRefs refs;
    refs.reserve(sources_.size() + 1);
    for (const auto& s : sources_) refs.emplace_back(s);
    refs.emplace_back(target);
    weights_ = em_fit_weights(refs, pop, em_).weights;

    std::vector<double> sampling = weights_;
    restrict_support(sampling, pop.size(), rng, sources_.size());
    const auto mix = make_mixture(sources_, target, std::move(sampling));
    const Bounds* bounds = task_.bounds.empty() ? nullptr : &task_.bounds;
    auto drawn = sample_mixture(mix, pop.size(), rng, bounds);
    for (auto p : drawn.provenance)
      if (p < sources_.size()) ++source_samples_;
    return evaluate(task_, drawn.genotypes, lamarckian_);
  }

  std::vector<double> weights() const override { return weights_; }
  std::size_t source_samples() const override { return source_samples_; }

 private:
  const TaskInstance& task_;
  std::span<const SearchModel> sources_;
  EmConfig em_;
  bool lamarckian_;
  std::vector<double> weights_;
  std::size_t source_samples_ = 0;
};

/// One source per transfer step chosen by EXP3, stacked with the target.
class MabAmteaLearner final : public TransferLearner {
 public:
  MabAmteaLearner(const TaskInstance& task, std::span<const SearchModel> sources,
                  EmConfig em = {}, double gamma = 0.1, bool lamarckian = true)
      : task_(task),
        sources_(sources),
        em_(em),
        lamarckian_(lamarckian),
        bandit_(sources.size(), gamma),
        weights_(sources.size() + 1, 0.0) {
    weights_.back() = 1.0;
  }

  Population step(const Population& pop, double /*pop_mean*/, Rng& rng) override {
    const std::size_t arm = exp3_select(bandit_, rng);
    const SearchModel target = fit_model(pop, task_.rep);
    const ModelRefs refs{std::cref(sources_[arm]), std::cref(target)};
    const auto w = em_fit_weights(refs, pop, em_).weights;

    MixtureModel mix{refs, w};
    const Bounds* bounds = task_.bounds.empty() ? nullptr : &task_.bounds;
    auto drawn = sample_mixture(mix, pop.size(), rng, bounds);
    for (auto p : drawn.provenance)
      if (p == 0) ++source_samples_;
    Population out = evaluate(task_, drawn.genotypes, lamarckian_);

    exp3_update(bandit_, arm, bandit_.normalize_reward(out.mean_fitness()));
    std::fill(weights_.begin(), weights_.end(), 0.0);
    weights_[arm] = w[0];
    weights_.back() = w[1];
    last_arm_ = arm;
    return out;
  }

  std::vector<double> weights() const override { return weights_; }
  std::size_t source_samples() const override { return source_samples_; }
  const Exp3State& bandit() const { return bandit_; }
  std::size_t last_arm() const { return last_arm_; }

 private:
  const TaskInstance& task_;
  std::span<const SearchModel> sources_;
  EmConfig em_;
  bool lamarckian_;
  Exp3State bandit_;
  std::vector<double> weights_;
  std::size_t last_arm_ = 0;
  std::size_t source_samples_ = 0;
};

inline RunRecord run_amtea(const TaskInstance& task, const SourceArchive& sources, EaConfig cfg,
                           const Rng& rng, const EmConfig& em = {}) {
  cfg.transfer = TransferMode::amtea;
  AmteaLearner learner(task, sources.models(), em, cfg.lamarckian);
  return evolve(task, cfg, rng, &learner, "amtea");
}

inline RunRecord run_mab_amtea(const TaskInstance& task, const SourceArchive& sources,
                               EaConfig cfg, const Rng& rng, const EmConfig& em = {},
                               double gamma = 0.1) {
  if (sources.empty()) throw std::invalid_argument("run_mab_amtea: archive is empty");
  cfg.transfer = TransferMode::mab_amtea;
  MabAmteaLearner learner(task, sources.models(), em, gamma, cfg.lamarckian);
  return evolve(task, cfg, rng, &learner, "mab-amtea");
}

}  // namespace streo

#endif  // STREO_BASELINES_HPP_
