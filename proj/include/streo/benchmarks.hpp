#ifndef STREO_BENCHMARKS_HPP_
#define STREO_BENCHMARKS_HPP_

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "streo/archive.hpp"
#include "streo/baselines.hpp"
#include "streo/core.hpp"
#include "streo/ea.hpp"
#include "streo/models.hpp"

namespace streo {

// ---------------------------------------------------------------------------
// 0/1 knapsack

enum class KnapsackCategory { uncorrelated, weakly_correlated, strongly_correlated };
enum class CapacityType { restrictive, average };

inline std::string to_string(KnapsackCategory c) {
  switch (c) {
    case KnapsackCategory::uncorrelated: return "un";
    case KnapsackCategory::weakly_correlated: return "wc";
    case KnapsackCategory::strongly_correlated: return "sc";
  }
  return "?";
}

inline std::string to_string(CapacityType c) {
  return c == CapacityType::restrictive ? "rc" : "ac";
}

inline KnapsackCategory knapsack_category_from_string(std::string_view s) {
  if (s == "un" || s == "uc") return KnapsackCategory::uncorrelated;
  if (s == "wc") return KnapsackCategory::weakly_correlated;
  if (s == "sc") return KnapsackCategory::strongly_correlated;
  throw std::invalid_argument("unknown knapsack category: " + std::string(s));
}

inline CapacityType capacity_type_from_string(std::string_view s) {
  if (s == "rc") return CapacityType::restrictive;
  if (s == "ac") return CapacityType::average;
  throw std::invalid_argument("unknown capacity type: " + std::string(s));
}

struct KnapsackInstance {
  std::vector<double> values;
  std::vector<double> weights;
  double capacity = 0.0;
  KnapsackCategory category = KnapsackCategory::uncorrelated;
  CapacityType capacity_type = CapacityType::average;
  std::uint64_t seed = 0;
  std::vector<std::size_t> removal_order;  // ascending v/w, ties by index

  std::size_t dim() const { return values.size(); }
  std::string tag() const { return to_string(category) + "_" + to_string(capacity_type); }

  void index_ratios() {
    removal_order.resize(values.size());
    std::iota(removal_order.begin(), removal_order.end(), 0);
    std::stable_sort(removal_order.begin(), removal_order.end(), [&](std::size_t a, std::size_t b) {
      return values[a] / weights[a] < values[b] / weights[b];
    });
  }

  double total_weight(std::span<const double> x) const {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i)
      if (x[i] > 0.5) s += weights[i];
    return s;
  }

  double total_value(std::span<const double> x) const {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i)
      if (x[i] > 0.5) s += values[i];
    return s;
  }
};

inline KnapsackInstance gen_knapsack(std::size_t d, KnapsackCategory category,
                                     CapacityType capacity_type, std::uint64_t seed) {
  if (d < 1) throw std::invalid_argument("gen_knapsack: need at least one item");
  Rng rng = Rng(seed).child("knapsack");
  KnapsackInstance inst;
  inst.category = category;
  inst.capacity_type = capacity_type;
  inst.seed = seed;
  inst.values.resize(d);
  inst.weights.resize(d);
  for (std::size_t i = 0; i < d; ++i) {
    double w = rng.uniform(1.0, 10.0);
    double v = 0.0;
    switch (category) {
      case KnapsackCategory::uncorrelated:
        v = rng.uniform(1.0, 10.0);
        break;
      case KnapsackCategory::weakly_correlated:
        for (int attempt = 0;; ++attempt) {
          if (attempt > 0 && attempt % 100 == 0) w = rng.uniform(1.0, 10.0);
          v = w + rng.uniform(-5.0, 5.0);
          if (v > 0.0) break;
        }
        break;
      case KnapsackCategory::strongly_correlated:
        v = w + 5.0;
        break;
    }
    inst.weights[i] = w;
    inst.values[i] = v;
  }
  inst.capacity = capacity_type == CapacityType::restrictive
                      ? 20.0
                      : 0.5 * std::accumulate(inst.weights.begin(), inst.weights.end(), 0.0);
  inst.index_ratios();
  return inst;
}

/// Greedy feasibility repair: drops selected items in ascending value/weight
/// order until the capacity holds. Never adds items.
inline Genotype dantzig_repair(const KnapsackInstance& inst, const Genotype& g) {
  double load = inst.total_weight(g.values);
  if (load <= inst.capacity) return g;
  Genotype out = g;
  for (std::size_t i : inst.removal_order) {
    if (out[i] < 0.5) continue;
    out[i] = 0.0;
    load -= inst.weights[i];
    if (load <= inst.capacity) {
      // Guard against drift in the running sum.
      load = inst.total_weight(out.values);
      if (load <= inst.capacity) break;
    }
  }
  return out;
}

inline TaskInstance make_knapsack_task(KnapsackInstance inst) {
  auto shared = std::make_shared<const KnapsackInstance>(std::move(inst));
  TaskInstance t;
  t.name = "KP_" + shared->tag();
  t.rep = Representation::binary;
  t.dim = shared->dim();
  t.sense = Sense::maximize;
  t.objective = [shared](std::span<const double> x) { return shared->total_value(x); };
  t.repair = [shared](const Genotype& g) { return dantzig_repair(*shared, g); };
  t.fitness_lower_bound = 0.0;
  return t;
}

// ---------------------------------------------------------------------------
// Planar arm

struct ArmTask {
  std::size_t joints = 10;
  double length = std::numbers::sqrt2;
  double alpha_max = 1.0;
  double target_x = 1.0;
  double target_y = 1.0;

  double link_length() const { return length / static_cast<double>(joints); }
};

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

inline double joint_angle(double alpha, double alpha_max) {
  return 2.0 * std::numbers::pi * alpha_max * (alpha - 0.5);
}

/// Tip position by chaining homogeneous transforms M_i = M_{i-1} * H_i.
///
/// H_i rotates by joint angle i and then advances along the rotated x axis by
/// one link, so link i points along the cumulative angle of joints 1..i. This
/// is the reference arm's convention (it prepends a zero-length link to the
/// literal rotation-with-translation-column matrix); taken literally, that
/// matrix leaves link 1 fixed along x and the last joint without effect.
inline Point2 arm_tip(std::span<const double> alpha, const ArmTask& task) {
  if (alpha.size() != task.joints)
    throw std::invalid_argument("arm_tip: expected " + std::to_string(task.joints) + " angles");
  const double link = task.link_length();
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  for (double a : alpha) {
    const double th = joint_angle(a, task.alpha_max);
    const double c = std::cos(th), s = std::sin(th);
    Eigen::Matrix4d h;
    h << c, -s, 0, c * link,
         s,  c, 0, s * link,
         0,  0, 1, 0,
         0,  0, 0, 1;
    m = m * h;
  }
  const Eigen::Vector4d p = m * Eigen::Vector4d(0, 0, 0, 1);
  return {p.x(), p.y()};
}

inline double arm_distance(std::span<const double> alpha, const ArmTask& task) {
  const Point2 p = arm_tip(alpha, task);
  return std::hypot(p.x - task.target_x, p.y - task.target_y);
}

/// Negated tip-to-target distance (0 at the optimum).
inline double arm_fitness(std::span<const double> alpha, const ArmTask& task) {
  return -arm_distance(alpha, task);
}

/// Penalty weight for joint values outside [0, 1].
inline constexpr double kArmPenalty = 10.0;

inline double arm_bound_violation(std::span<const double> alpha) {
  double v = 0.0;
  for (double a : alpha) v += std::max({0.0, a - 1.0, -a});
  return v;
}

/// The arm as a minimization task over [0, 1]^d: distance plus penalty.
inline TaskInstance make_arm_task(const ArmTask& arm) {
  TaskInstance t;
  t.name = "ARM_" + std::to_string(arm.joints);
  t.rep = Representation::real;
  t.dim = arm.joints;
  t.sense = Sense::minimize;
  t.bounds = Bounds::uniform(arm.joints, 0.0, 1.0);
  t.objective = [arm](std::span<const double> x) {
    return arm_distance(x, arm) + kArmPenalty * arm_bound_violation(x);
  };
  // Tip diametrically opposite the target.
  t.fitness_lower_bound = -(std::hypot(arm.target_x, arm.target_y) + arm.length);
  return t;
}

// ---------------------------------------------------------------------------
// Source archives

enum class ArchiveStrategy { cga, amtea_sequential };

inline ArchiveStrategy archive_strategy_from_string(std::string_view s) {
  if (s == "cga") return ArchiveStrategy::cga;
  if (s == "amtea-sequential") return ArchiveStrategy::amtea_sequential;
  throw std::invalid_argument("unknown archive strategy: " + std::string(s));
}

struct SourceSpec {
  TaskInstance task;
  SourceInfo info;
};

/// Solves every source task with the host GA (optionally with AMTEA over the
/// sources solved before it) and fits a model to each final population.
inline SourceArchive build_source_archive(std::span<const SourceSpec> specs,
                                          std::size_t budget, ArchiveStrategy strategy,
                                          const Rng& rng, EaConfig base = {},
                                          const EmConfig& em = {}) {
  if (specs.empty()) throw std::invalid_argument("build_source_archive: no source tasks");
  if (budget < base.population)
    throw std::invalid_argument("build_source_archive: budget " + std::to_string(budget) +
                                " cannot fill a population of " +
                                std::to_string(base.population));
  const auto rep = specs.front().task.rep;
  const auto dim = specs.front().task.dim;
  for (const auto& s : specs)
    if (s.task.rep != rep || s.task.dim != dim)
      throw std::invalid_argument("build_source_archive: heterogeneous source tasks");

  base.max_evaluations = budget;
  base.transfer = TransferMode::none;
  SourceArchive archive(rep, dim);
  for (std::size_t k = 0; k < specs.size(); ++k) {
    const auto& task = specs[k].task;
    const Rng run_rng = rng.child(k);
    Population final_pop;
    if (strategy == ArchiveStrategy::amtea_sequential && k > 0) {
      EaConfig cfg = base;
      cfg.transfer = TransferMode::amtea;
      AmteaLearner learner(task, archive.models(), em, cfg.lamarckian);
      evolve(task, cfg, run_rng, &learner, "amtea", &final_pop);
    } else {
      evolve(task, base, run_rng, nullptr, "cga", &final_pop);
    }
    archive.add(fit_model(final_pop, rep), specs[k].info);
  }
  return archive;
}

inline SourceSpec knapsack_source(std::size_t d, KnapsackCategory cat, CapacityType cap,
                                  std::uint64_t seed, bool related) {
  auto inst = gen_knapsack(d, cat, cap, seed);
  SourceInfo info{inst.tag(), related, {{"seed", static_cast<double>(seed)}}};
  return {make_knapsack_task(std::move(inst)), std::move(info)};
}

inline SourceSpec arm_source(std::size_t joints, double length, double alpha_max, bool related) {
  ArmTask arm{joints, length, alpha_max};
  SourceInfo info{"arm", related, {{"length", length}, {"alpha_max", alpha_max}}};
  return {make_arm_task(arm), std::move(info)};
}

/// Related arm sources have alpha_max = 1; unrelated ones draw alpha_max from
/// (lo, hi). Lengths are uniform in (0, sqrt 2). The list order is shuffled.
inline std::vector<SourceSpec> arm_source_specs(std::size_t joints, std::size_t related,
                                                std::size_t unrelated, Rng& rng,
                                                double unrelated_lo = 0.18,
                                                double unrelated_hi = 0.26) {
  auto open_length = [&] {
    double l = 0.0;
    while (l <= 0.0) l = rng.uniform(0.0, std::numbers::sqrt2);
    return l;
  };
  std::vector<SourceSpec> specs;
  specs.reserve(related + unrelated);
  for (std::size_t i = 0; i < related; ++i) specs.push_back(arm_source(joints, open_length(), 1.0, true));
  for (std::size_t i = 0; i < unrelated; ++i) {
    const double l = open_length();
    double a = 0.0;
    while (a <= unrelated_lo) a = rng.uniform(unrelated_lo, unrelated_hi);
    specs.push_back(arm_source(joints, l, a, false));
  }
  rng.shuffle(specs.begin(), specs.end());
  return specs;
}

/// Mean target fitness of `samples_per_source` draws from each source model.
inline std::vector<double> relatedness_heatmap(const SourceArchive& archive,
                                               const TaskInstance& target,
                                               std::size_t samples_per_source, const Rng& rng) {
  if (archive.dim() != target.dim || archive.representation() != target.rep)
    throw std::invalid_argument("relatedness_heatmap: archive does not match target task");
  if (samples_per_source == 0)
    throw std::invalid_argument("relatedness_heatmap: need at least one sample per source");
  const Bounds* bounds = target.bounds.empty() ? nullptr : &target.bounds;
  std::vector<double> cells(archive.size());
  for (std::size_t s = 0; s < archive.size(); ++s) {
    Rng r = rng.child(s);
    std::vector<Genotype> xs;
    xs.reserve(samples_per_source);
    for (std::size_t k = 0; k < samples_per_source; ++k)
      xs.push_back(sample(archive.model(s), r, bounds));
    cells[s] = evaluate(target, xs).mean_fitness();
  }
  return cells;
}

}  // namespace streo

#endif  // STREO_BENCHMARKS_HPP_
