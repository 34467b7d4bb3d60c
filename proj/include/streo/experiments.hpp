#ifndef STREO_EXPERIMENTS_HPP_
#define STREO_EXPERIMENTS_HPP_

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <functional>
#include <map>
#include <mutex>
#include <numeric>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "streo/io.hpp"
#include "streo/run.hpp"

namespace streo {

/// Calls fn(i) for i in [0, count) on up to `workers` threads. Results must be
/// written to per-index slots; the first exception is rethrown.
inline void parallel_for(std::size_t count, std::size_t workers,
                         const std::function<void(std::size_t)>& fn) {
  workers = std::max<std::size_t>(1, std::min(workers, count));
  if (workers == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  pool.clear();
  if (error) std::rethrow_exception(error);
}

/// Canonical JSON of everything that determines a run besides its seed.
inline json effective_config(const ExperimentConfig& c, const EaConfig& ea) {
  json archive = json::object();
  if (c.archive_path) archive["path"] = *c.archive_path;
  if (!c.archive_recipe.is_null()) archive["recipe"] = c.archive_recipe;
  json j = effective_run_config(c.task, ea, c.baseline);
  j["archive"] = std::move(archive);
  return j;
}

struct RunCell {
  EaConfig ea;
  std::uint64_t seed = 0;
};

/// Runs every cell on the worker pool; output order equals input order.
inline std::vector<RunRecord> run_cells(const ExperimentConfig& c, const TaskInstance& task,
                                        const SourceArchive& archive,
                                        const std::vector<RunCell>& cells, std::size_t workers) {
  std::vector<RunRecord> out(cells.size());
  parallel_for(cells.size(), workers, [&](std::size_t i) {
    const auto& cell = cells[i];
    auto rec = run(task, archive, cell.ea, Rng(cell.seed), c.baseline);
    rec.config_hash = config_hash(effective_config(c, cell.ea));
    out[i] = std::move(rec);
  });
  return out;
}

/// Seed-major matrix of (seed, algorithm) runs.
inline std::vector<RunRecord> run_matrix(const ExperimentConfig& c, const TaskInstance& task,
                                         const SourceArchive& archive, std::size_t workers) {
  std::vector<RunCell> cells;
  for (auto seed : c.seeds)
    for (auto alg : c.algorithms) {
      EaConfig ea = c.ea;
      ea.transfer = alg;
      cells.push_back({ea, seed});
    }
  return run_cells(c, task, archive, cells, workers);
}

inline double median_of(std::vector<double> v) {
  if (v.empty()) return std::nan("");
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

inline double mean_of(const std::vector<double>& v) {
  if (v.empty()) return std::nan("");
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

/// Sample standard deviation (0 for a single value).
inline double sd_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

/// Per-algorithm, per-generation statistics of best fitness across runs.
inline std::string summary_csv(std::span<const RunRecord> records,
                               const std::vector<std::string>& algorithm_order) {
  std::string out = "algorithm,generation,evaluations,runs,best_median,best_mean,best_sd\n";
  for (const auto& alg : algorithm_order) {
    std::vector<const RunRecord*> runs;
    for (const auto& r : records)
      if (r.algorithm == alg) runs.push_back(&r);
    if (runs.empty()) continue;
    std::size_t gens = runs.front()->generations.size();
    for (const auto* r : runs) gens = std::min(gens, r->generations.size());
    for (std::size_t g = 0; g < gens; ++g) {
      std::vector<double> best;
      for (const auto* r : runs) best.push_back(r->generations[g].best_fitness);
      out += alg + ',' + std::to_string(g) + ',' +
             std::to_string(runs.front()->generations[g].evaluations) + ',' +
             std::to_string(runs.size()) + ',' + format_number(median_of(best)) + ',' +
             format_number(mean_of(best)) + ',' + format_number(sd_of(best)) + '\n';
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Sweep

struct SweepRow {
  std::string axis;
  double value = 0.0;
  std::uint64_t seed = 0;
  double best_fitness = 0.0;
  std::size_t evaluations = 0;
};

inline HyperParams with_axis(HyperParams h, const std::string& axis, double v) {
  if (axis == "temperature") h.temperature = v;
  else if (axis == "learning_rate") h.learning_rate = v;
  else if (axis == "neutralization") h.neutralization = v;
  else if (axis == "transfer_interval") {
    if (!(v >= 1.0) || v != std::floor(v))
      throw std::invalid_argument("sweep: transfer_interval values must be positive integers");
    h.transfer_interval = static_cast<std::size_t>(v);
  } else {
    throw std::invalid_argument("sweep: unknown axis '" + axis + "'");
  }
  h.validate();
  return h;
}

/// One axis varied at a time with the others at the configured values.
inline std::vector<SweepRow> run_sweep(const ExperimentConfig& c, const TaskInstance& task,
                                       const SourceArchive& archive, std::size_t workers) {
  if (c.sweep.empty()) throw std::invalid_argument("sweep: empty grid");
  const std::vector<std::pair<std::string, const std::vector<double>*>> axes{
      {"temperature", &c.sweep.temperature},
      {"learning_rate", &c.sweep.learning_rate},
      {"neutralization", &c.sweep.neutralization},
      {"transfer_interval", &c.sweep.transfer_interval}};
  std::vector<RunCell> cells;
  std::vector<SweepRow> rows;
  for (const auto& [axis, values] : axes)
    for (double v : *values)
      for (auto seed : c.seeds) {
        EaConfig ea = c.ea;
        ea.transfer = TransferMode::streo;
        ea.hyper = with_axis(ea.hyper, axis, v);
        cells.push_back({ea, seed});
        rows.push_back({axis, v, seed, 0.0, 0});
      }
  const auto recs = run_cells(c, task, archive, cells, workers);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    rows[i].best_fitness = recs[i].best_fitness;
    rows[i].evaluations = recs[i].evaluations();
  }
  return rows;
}

inline std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::string out = "axis,value,seed,best_fitness,evaluations\n";
  for (const auto& r : rows)
    out += r.axis + ',' + format_number(r.value) + ',' + std::to_string(r.seed) + ',' +
           format_number(r.best_fitness) + ',' + std::to_string(r.evaluations) + '\n';
  return out;
}

// ---------------------------------------------------------------------------
// Scaling

/// Indices of all related sources followed by the first `count - related`
/// unrelated ones, in archive order.
inline std::vector<std::size_t> scaling_subset(const SourceArchive& pool, std::size_t count,
                                               std::size_t related) {
  if (count < related)
    throw std::invalid_argument("bench-scaling: source count " + std::to_string(count) +
                                " is smaller than the related count " + std::to_string(related));
  std::vector<std::size_t> rel, unrel;
  for (std::size_t i = 0; i < pool.size(); ++i) (pool.info(i).related ? rel : unrel).push_back(i);
  if (rel.size() < related)
    throw std::invalid_argument("bench-scaling: archive holds only " + std::to_string(rel.size()) +
                                " related sources, need " + std::to_string(related));
  if (unrel.size() < count - related)
    throw std::invalid_argument("bench-scaling: archive holds only " +
                                std::to_string(unrel.size()) + " unrelated sources, need " +
                                std::to_string(count - related));
  std::vector<std::size_t> idx(rel.begin(), rel.begin() + static_cast<std::ptrdiff_t>(related));
  idx.insert(idx.end(), unrel.begin(), unrel.begin() + static_cast<std::ptrdiff_t>(count - related));
  return idx;
}

struct ScalingResult {
  std::size_t sources = 0;
  std::vector<RunRecord> records;  // seed-major over the algorithms
};

inline std::vector<ScalingResult> run_scaling(const ExperimentConfig& c, const TaskInstance& task,
                                              const SourceArchive& pool, std::size_t workers) {
  if (c.scaling.source_counts.empty())
    throw std::invalid_argument("bench-scaling: empty source count list");
  std::vector<ScalingResult> out;
  for (auto count : c.scaling.source_counts) {
    const auto idx = scaling_subset(pool, count, c.scaling.related);
    const auto archive = pool.subset(idx);
    ExperimentConfig cc = c;
    cc.algorithms = c.scaling.algorithms;
    out.push_back({count, run_matrix(cc, task, archive, workers)});
  }
  return out;
}

inline std::string timing_csv(const std::vector<ScalingResult>& results, bool timing = true) {
  std::string out = "sources,algorithm,seed,transfer_step,step_ms\n";
  for (const auto& r : results)
    for (const auto& rec : r.records)
      for (const auto& t : rec.transfers)
        out += std::to_string(r.sources) + ',' + rec.algorithm + ',' + std::to_string(rec.seed) +
               ',' + std::to_string(t.step) + ',' + format_number(timing ? t.step_ms : 0.0) + '\n';
  return out;
}

inline double mean_step_ms(const RunRecord& rec) {
  if (rec.transfers.empty()) return 0.0;
  double s = 0.0;
  for (const auto& t : rec.transfers) s += t.step_ms;
  return s / static_cast<double>(rec.transfers.size());
}

// ---------------------------------------------------------------------------
// Heatmap

struct HeatmapResult {
  std::vector<double> lengths;
  std::vector<double> alpha_max;
  std::vector<double> cells;  // row-major, rows = lengths

  double at(std::size_t li, std::size_t ai) const { return cells.at(li * alpha_max.size() + ai); }
};

inline std::vector<SourceSpec> heatmap_specs(std::size_t joints, const HeatmapConfig& h) {
  std::vector<SourceSpec> specs;
  for (double l : h.lengths)
    for (double a : h.alpha_max) specs.push_back(arm_source(joints, l, a, a >= 1.0));
  return specs;
}

inline void check_heatmap_archive(const SourceArchive& a, const HeatmapConfig& h) {
  const std::size_t cells = h.lengths.size() * h.alpha_max.size();
  if (a.size() != cells)
    throw std::invalid_argument("heatmap: archive holds " + std::to_string(a.size()) +
                                " models but the grid has " + std::to_string(cells) + " cells");
  for (std::size_t li = 0; li < h.lengths.size(); ++li)
    for (std::size_t ai = 0; ai < h.alpha_max.size(); ++ai) {
      const auto& p = a.info(li * h.alpha_max.size() + ai).params;
      const auto l = p.find("length"), al = p.find("alpha_max");
      if (l == p.end() || al == p.end() || l->second != h.lengths[li] ||
          al->second != h.alpha_max[ai])
        throw std::invalid_argument("heatmap: archive entry " +
                                    std::to_string(li * h.alpha_max.size() + ai) +
                                    " does not match grid cell (" + format_number(h.lengths[li]) +
                                    ", " + format_number(h.alpha_max[ai]) + ")");
    }
}

/// Builds one source per grid cell (row-major over lengths, then alpha_max).
inline SourceArchive build_heatmap_archive(std::size_t joints, const HeatmapConfig& h,
                                           const EaConfig& ea = {}, const EmConfig& em = {}) {
  const auto specs = heatmap_specs(joints, h);
  auto a = build_source_archive(specs, h.budget, h.strategy, Rng(h.seed).child("heatmap"), ea, em);
  a.set_creation_seed(h.seed);
  return a;
}

inline HeatmapResult run_heatmap(const HeatmapConfig& h, const TaskInstance& target,
                                 const SourceArchive& archive) {
  if (h.lengths.empty() || h.alpha_max.empty()) throw std::invalid_argument("heatmap: empty grid");
  check_heatmap_archive(archive, h);
  HeatmapResult r{h.lengths, h.alpha_max, {}};
  r.cells = relatedness_heatmap(archive, target, h.samples_per_source,
                                Rng(h.seed).child("heatmap-eval"));
  return r;
}

inline std::string heatmap_csv(const HeatmapResult& r) {
  std::string out = "length";
  for (double a : r.alpha_max) out += ",alpha_max=" + format_number(a);
  out += '\n';
  for (std::size_t li = 0; li < r.lengths.size(); ++li) {
    out += format_number(r.lengths[li]);
    for (std::size_t ai = 0; ai < r.alpha_max.size(); ++ai) out += ',' + format_number(r.at(li, ai));
    out += '\n';
  }
  return out;
}

}  // namespace streo

#endif  // STREO_EXPERIMENTS_HPP_
