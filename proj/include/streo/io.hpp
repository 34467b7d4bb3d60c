#ifndef STREO_IO_HPP_
#define STREO_IO_HPP_

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <initializer_list>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <nlohmann/json.hpp>

#include "streo/archive.hpp"
#include "streo/benchmarks.hpp"
#include "streo/ea.hpp"
#include "streo/models.hpp"
#include "streo/run.hpp"

namespace streo {

using nlohmann::json;

inline constexpr int kArchiveSchemaVersion = 1;

// ---------------------------------------------------------------------------
// Archive files

inline json archive_to_json(const SourceArchive& a) {
  json entries = json::array();
  for (std::size_t k = 0; k < a.size(); ++k) {
    const auto& info = a.info(k);
    json meta = {{"category", info.category}, {"related", info.related}, {"params", info.params}};
    json e;
    if (const auto* b = std::get_if<BernoulliModel>(&a.model(k))) {
      e = {{"kind", "bernoulli"}, {"p", b->p()}, {"metadata", std::move(meta)}};
    } else {
      const auto& g = std::get<GaussianModel>(a.model(k));
      const auto d = static_cast<Eigen::Index>(g.dim());
      std::vector<double> mean(g.mean().data(), g.mean().data() + d);
      std::vector<double> cov;
      cov.reserve(static_cast<std::size_t>(d * d));
      for (Eigen::Index r = 0; r < d; ++r)
        for (Eigen::Index c = 0; c < d; ++c) cov.push_back(g.cov()(r, c));
      e = {{"kind", "gaussian"}, {"mean", mean}, {"cov", cov}, {"metadata", std::move(meta)}};
    }
    entries.push_back(std::move(e));
  }
  return {{"schema_version", kArchiveSchemaVersion},
          {"representation", to_string(a.representation())},
          {"dim", a.dim()},
          {"creation_seed", a.creation_seed()},
          {"entries", std::move(entries)}};
}

inline SourceArchive archive_from_json(const json& j) {
  try {
    if (!j.is_object()) throw std::runtime_error("archive: top level must be an object");
    const int version = j.at("schema_version").get<int>();
    if (version != kArchiveSchemaVersion)
      throw std::runtime_error("archive: schema version " + std::to_string(version) +
                               " is not supported (expected " +
                               std::to_string(kArchiveSchemaVersion) + ")");
    const auto rep = representation_from_string(j.at("representation").get<std::string>());
    const auto dim = j.at("dim").get<std::size_t>();
    SourceArchive a(rep, dim);
    a.set_creation_seed(j.value("creation_seed", std::uint64_t{0}));
    std::size_t k = 0;
    for (const auto& e : j.at("entries")) {
      const std::string where = "archive entry " + std::to_string(k++);
      const auto kind = e.at("kind").get<std::string>();
      SourceInfo info;
      if (e.contains("metadata")) {
        const auto& m = e.at("metadata");
        info.category = m.value("category", std::string{});
        info.related = m.value("related", false);
        if (m.contains("params")) info.params = m.at("params").get<std::map<std::string, double>>();
      }
      if (kind == "bernoulli") {
        auto p = e.at("p").get<std::vector<double>>();
        if (p.size() != dim) throw std::runtime_error(where + ": p has length " +
                                                      std::to_string(p.size()) + ", expected " +
                                                      std::to_string(dim));
        a.add(BernoulliModel(std::move(p)), std::move(info));
      } else if (kind == "gaussian") {
        const auto mean = e.at("mean").get<std::vector<double>>();
        const auto cov = e.at("cov").get<std::vector<double>>();
        if (mean.size() != dim || cov.size() != dim * dim)
          throw std::runtime_error(where + ": mean/cov sizes inconsistent with dim " +
                                   std::to_string(dim));
        const auto d = static_cast<Eigen::Index>(dim);
        Eigen::VectorXd mu = Eigen::Map<const Eigen::VectorXd>(mean.data(), d);
        Eigen::MatrixXd sigma =
            Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
                cov.data(), d, d);
        a.add(GaussianModel(std::move(mu), std::move(sigma)), std::move(info));
      } else {
        throw std::runtime_error(where + ": unknown model kind '" + kind + "'");
      }
    }
    return a;
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("archive: malformed document: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw std::runtime_error(std::string("archive: ") + e.what());
  }
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << text;
  if (!out) throw std::runtime_error("write to '" + path + "' failed");
}

inline std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void save_archive(const SourceArchive& a, const std::string& path) {
  write_text(path, archive_to_json(a).dump(1) + "\n");
}

inline SourceArchive load_archive(const std::string& path) {
  const std::string text = read_text(path);
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::runtime_error("archive '" + path + "': malformed JSON: " + e.what());
  }
  return archive_from_json(j);
}

// ---------------------------------------------------------------------------
// CSV

/// Shortest round-trip decimal, independent of the global locale.
inline std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
  if (ec != std::errc{}) throw std::runtime_error("format_number: conversion failed");
  return std::string(buf, end);
}

inline const char* kRunCsvHeader =
    "run_id,seed,algorithm,generation,evaluations,best_fitness,mean_fitness,wall_ms\n";
inline const char* kWeightCsvHeader = "run_id,transfer_step,model_index,related_flag,weight\n";

struct CsvOptions {
  bool timing = true;  // when false wall_ms is written as 0
};

inline std::string run_csv(std::span<const RunRecord> records, const CsvOptions& opt = {}) {
  std::string out = kRunCsvHeader;
  for (std::size_t r = 0; r < records.size(); ++r) {
    const auto& rec = records[r];
    for (const auto& g : rec.generations) {
      out += std::to_string(r) + ',' + std::to_string(rec.seed) + ',' + rec.algorithm + ',' +
             std::to_string(g.generation) + ',' + std::to_string(g.evaluations) + ',' +
             format_number(g.best_fitness) + ',' + format_number(g.mean_fitness) + ',' +
             format_number(opt.timing ? g.wall_ms : 0.0) + '\n';
    }
  }
  return out;
}

/// related_flag is 1/0 for sources and -1 for the target model (last index).
inline std::string weight_csv(std::span<const RunRecord> records, const std::vector<bool>& related) {
  std::string out = kWeightCsvHeader;
  for (std::size_t r = 0; r < records.size(); ++r) {
    for (const auto& snap : records[r].transfers) {
      const std::size_t T = snap.weights.size();
      for (std::size_t k = 0; k < T; ++k) {
        const int flag = k + 1 == T ? -1 : (k < related.size() && related[k] ? 1 : 0);
        out += std::to_string(r) + ',' + std::to_string(snap.step) + ',' + std::to_string(k) +
               ',' + std::to_string(flag) + ',' + format_number(snap.weights[k]) + '\n';
      }
    }
  }
  return out;
}

inline void write_run_csv(std::span<const RunRecord> records, const std::string& path,
                          const CsvOptions& opt = {}) {
  write_text(path, run_csv(records, opt));
}

inline void write_weight_csv(std::span<const RunRecord> records, const std::vector<bool>& related,
                             const std::string& path) {
  write_text(path, weight_csv(records, related));
}

/// Splits one CSV line on commas (no quoting; our files never need it).
inline std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    out.emplace_back(line.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Experiment configuration

inline void check_keys(const json& obj, std::initializer_list<std::string_view> allowed,
                       const std::string& where) {
  if (!obj.is_object()) throw std::invalid_argument(where + ": expected an object");
  for (const auto& [key, _] : obj.items()) {
    bool ok = false;
    for (auto a : allowed) ok = ok || key == a;
    if (!ok) throw std::invalid_argument(where + ": unknown key '" + key + "'");
  }
}

struct SweepGrid {
  std::vector<double> temperature{0.001, 0.002, 0.01, 0.02, 0.1, 1.0};
  std::vector<double> learning_rate{0.5, 0.7, 0.8, 0.85, 0.9, 0.95, 0.99, 1.0};
  std::vector<double> neutralization{1e-5, 1e-4, 1e-3, 1e-2, 1e-1, 1.0};
  std::vector<double> transfer_interval{2, 4, 6, 8, 10};

  bool empty() const {
    return temperature.empty() && learning_rate.empty() && neutralization.empty() &&
           transfer_interval.empty();
  }
};

struct ScalingConfig {
  std::vector<std::size_t> source_counts{100, 500, 1000, 2000};
  std::size_t related = 10;
  std::vector<TransferMode> algorithms{TransferMode::streo, TransferMode::amtea,
                                       TransferMode::mab_amtea};
};

struct HeatmapConfig {
  std::vector<double> lengths;
  std::vector<double> alpha_max;
  std::size_t samples_per_source = 100;
  std::size_t budget = 5000;
  ArchiveStrategy strategy = ArchiveStrategy::amtea_sequential;
  std::uint64_t seed = 0;
};

struct ExperimentConfig {
  json task;                        // task description
  std::optional<std::string> archive_path;
  json archive_recipe;              // null when not given
  std::vector<TransferMode> algorithms{TransferMode::none, TransferMode::streo,
                                       TransferMode::amtea, TransferMode::mab_amtea};
  EaConfig ea;
  BaselineConfig baseline;
  std::vector<std::uint64_t> seeds{1};
  SweepGrid sweep;
  ScalingConfig scaling;
  HeatmapConfig heatmap;
  bool record_timing = true;
};

inline TaskInstance task_from_json(const json& j) {
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "knapsack") {
    check_keys(j, {"kind", "d", "category", "capacity", "seed"}, "task");
    return make_knapsack_task(gen_knapsack(j.at("d").get<std::size_t>(),
                                           knapsack_category_from_string(j.at("category").get<std::string>()),
                                           capacity_type_from_string(j.at("capacity").get<std::string>()),
                                           j.value("seed", std::uint64_t{1})));
  }
  if (kind == "arm") {
    check_keys(j, {"kind", "joints", "length", "alpha_max"}, "task");
    ArmTask arm;
    arm.joints = j.at("joints").get<std::size_t>();
    arm.length = j.value("length", std::numbers::sqrt2);
    arm.alpha_max = j.value("alpha_max", 1.0);
    if (!(arm.length > 0.0 && arm.length <= std::numbers::sqrt2 + 1e-12))
      throw std::invalid_argument("task: arm length must lie in (0, sqrt 2]");
    if (!(arm.alpha_max > 0.0 && arm.alpha_max <= 1.0))
      throw std::invalid_argument("task: alpha_max must lie in (0, 1]");
    return make_arm_task(arm);
  }
  throw std::invalid_argument("task: unknown kind '" + kind + "'");
}

inline Representation task_representation(const json& task) {
  return task.at("kind").get<std::string>() == "arm" ? Representation::real
                                                     : Representation::binary;
}

/// Expands an archive recipe into source task specs plus build settings.
struct ArchiveRecipe {
  std::vector<SourceSpec> specs;
  std::size_t budget = 5000;
  ArchiveStrategy strategy = ArchiveStrategy::cga;
  std::uint64_t seed = 0;
  Representation rep = Representation::binary;
};

inline ArchiveRecipe recipe_from_json(const json& j) {
  if (!j.is_object() || j.empty()) throw std::invalid_argument("archive recipe: empty recipe");
  ArchiveRecipe r;
  const auto kind = j.at("kind").get<std::string>();
  r.budget = j.value("budget", std::size_t{5000});
  r.seed = j.value("seed", std::uint64_t{0});
  Rng rng = Rng(r.seed).child("recipe");
  if (kind == "knapsack") {
    check_keys(j, {"kind", "d", "budget", "strategy", "seed", "groups"}, "archive recipe");
    r.rep = Representation::binary;
    r.strategy = archive_strategy_from_string(j.value("strategy", std::string("cga")));
    const auto d = j.at("d").get<std::size_t>();
    std::uint64_t k = 0;
    for (const auto& g : j.at("groups")) {
      check_keys(g, {"category", "capacity", "count", "related"}, "archive recipe group");
      const auto cat = knapsack_category_from_string(g.at("category").get<std::string>());
      const auto cap = capacity_type_from_string(g.at("capacity").get<std::string>());
      const auto count = g.at("count").get<std::size_t>();
      const bool related = g.value("related", false);
      for (std::size_t i = 0; i < count; ++i)
        r.specs.push_back(knapsack_source(d, cat, cap, splitmix64(r.seed * 1000003ULL + k++), related));
    }
  } else if (kind == "arm") {
    check_keys(j, {"kind", "joints", "budget", "strategy", "seed", "related", "unrelated",
                   "unrelated_alpha_max"},
               "archive recipe");
    r.rep = Representation::real;
    r.strategy = archive_strategy_from_string(j.value("strategy", std::string("amtea-sequential")));
    double lo = 0.18, hi = 0.26;
    if (j.contains("unrelated_alpha_max")) {
      const auto range = j.at("unrelated_alpha_max").get<std::vector<double>>();
      if (range.size() != 2 || !(range[0] < range[1]))
        throw std::invalid_argument("archive recipe: unrelated_alpha_max must be [lo, hi]");
      lo = range[0];
      hi = range[1];
    }
    r.specs = arm_source_specs(j.at("joints").get<std::size_t>(), j.at("related").get<std::size_t>(),
                               j.at("unrelated").get<std::size_t>(), rng, lo, hi);
  } else {
    throw std::invalid_argument("archive recipe: unknown kind '" + kind + "'");
  }
  if (r.specs.empty()) throw std::invalid_argument("archive recipe: recipe yields no sources");
  return r;
}

inline SourceArchive build_archive(const ArchiveRecipe& r, const EaConfig& ea = {},
                                   const EmConfig& em = {}) {
  auto a = build_source_archive(r.specs, r.budget, r.strategy, Rng(r.seed).child("archive"), ea, em);
  a.set_creation_seed(r.seed);
  return a;
}

template <class T>
std::vector<T> list_of(const json& j, const char* key, std::vector<T> fallback) {
  return j.contains(key) ? j.at(key).get<std::vector<T>>() : std::move(fallback);
}

inline std::vector<TransferMode> algorithms_from_json(const json& j) {
  std::vector<TransferMode> out;
  for (const auto& a : j) out.push_back(transfer_mode_from_string(a.get<std::string>()));
  return out;
}

inline ExperimentConfig config_from_json(const json& j) {
  try {
    check_keys(j, {"task", "archive", "algorithms", "ea", "hyper", "em", "exp3", "seeds", "sweep",
                   "scaling", "heatmap", "record_timing"},
               "config");
    ExperimentConfig c;
    c.task = j.at("task");
    if (j.contains("archive")) {
      const auto& a = j.at("archive");
      check_keys(a, {"path", "recipe"}, "archive");
      if (a.contains("path")) c.archive_path = a.at("path").get<std::string>();
      if (a.contains("recipe")) c.archive_recipe = a.at("recipe");
    }
    if (j.contains("algorithms")) c.algorithms = algorithms_from_json(j.at("algorithms"));
    if (j.contains("ea")) {
      const auto& e = j.at("ea");
      check_keys(e, {"population", "max_evaluations", "crossover_rate", "mutation_rate",
                     "sbx_index", "pm_index", "lamarckian"},
                 "ea");
      c.ea.population = e.value("population", c.ea.population);
      c.ea.max_evaluations = e.value("max_evaluations", c.ea.max_evaluations);
      c.ea.crossover_rate = e.value("crossover_rate", c.ea.crossover_rate);
      c.ea.mutation_rate = e.value("mutation_rate", c.ea.mutation_rate);
      c.ea.sbx_index = e.value("sbx_index", c.ea.sbx_index);
      c.ea.pm_index = e.value("pm_index", c.ea.pm_index);
      c.ea.lamarckian = e.value("lamarckian", c.ea.lamarckian);
    }
    if (j.contains("hyper")) {
      const auto& h = j.at("hyper");
      check_keys(h, {"temperature", "learning_rate", "neutralization", "transfer_interval"}, "hyper");
      c.ea.hyper.temperature = h.value("temperature", c.ea.hyper.temperature);
      c.ea.hyper.learning_rate = h.value("learning_rate", c.ea.hyper.learning_rate);
      c.ea.hyper.neutralization = h.value("neutralization", c.ea.hyper.neutralization);
      c.ea.hyper.transfer_interval = h.value("transfer_interval", c.ea.hyper.transfer_interval);
    }
    if (j.contains("em")) {
      const auto& e = j.at("em");
      check_keys(e, {"max_iterations", "tolerance", "target_floor"}, "em");
      c.baseline.em.max_iterations = e.value("max_iterations", c.baseline.em.max_iterations);
      c.baseline.em.tolerance = e.value("tolerance", c.baseline.em.tolerance);
      c.baseline.em.target_floor = e.value("target_floor", c.baseline.em.target_floor);
    }
    if (j.contains("exp3")) {
      check_keys(j.at("exp3"), {"gamma"}, "exp3");
      c.baseline.exp3_gamma = j.at("exp3").value("gamma", c.baseline.exp3_gamma);
    }
    if (j.contains("seeds")) c.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    if (j.contains("sweep")) {
      const auto& s = j.at("sweep");
      check_keys(s, {"temperature", "learning_rate", "neutralization", "transfer_interval"}, "sweep");
      // An explicit sweep block lists exactly the axes to vary.
      c.sweep.temperature = list_of<double>(s, "temperature", {});
      c.sweep.learning_rate = list_of<double>(s, "learning_rate", {});
      c.sweep.neutralization = list_of<double>(s, "neutralization", {});
      c.sweep.transfer_interval = list_of<double>(s, "transfer_interval", {});
    }
    if (j.contains("scaling")) {
      const auto& s = j.at("scaling");
      check_keys(s, {"source_counts", "related", "algorithms"}, "scaling");
      c.scaling.source_counts = list_of<std::size_t>(s, "source_counts", c.scaling.source_counts);
      c.scaling.related = s.value("related", c.scaling.related);
      if (s.contains("algorithms")) c.scaling.algorithms = algorithms_from_json(s.at("algorithms"));
    }
    if (j.contains("heatmap")) {
      const auto& h = j.at("heatmap");
      check_keys(h, {"lengths", "alpha_max", "samples_per_source", "budget", "strategy", "seed"},
                 "heatmap");
      c.heatmap.lengths = h.at("lengths").get<std::vector<double>>();
      c.heatmap.alpha_max = h.at("alpha_max").get<std::vector<double>>();
      c.heatmap.samples_per_source = h.value("samples_per_source", c.heatmap.samples_per_source);
      c.heatmap.budget = h.value("budget", c.heatmap.budget);
      c.heatmap.strategy =
          archive_strategy_from_string(h.value("strategy", std::string("amtea-sequential")));
      c.heatmap.seed = h.value("seed", c.heatmap.seed);
    }
    c.record_timing = j.value("record_timing", true);
    c.ea.validate();
    c.baseline.em.validate();
    return c;
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("config: ") + e.what());
  }
}

inline ExperimentConfig load_config(const std::string& path) {
  json j;
  try {
    j = json::parse(read_text(path));
  } catch (const json::parse_error& e) {
    throw std::invalid_argument("config '" + path + "': malformed JSON: " + e.what());
  }
  return config_from_json(j);
}

/// Canonical description of everything that determines one run apart from
/// its seed.
inline json effective_run_config(const json& task, const EaConfig& ea, const BaselineConfig& b) {
  return {{"task", task},
          {"ea", ea},
          {"em", {{"max_iterations", b.em.max_iterations},
                  {"tolerance", b.em.tolerance},
                  {"target_floor", b.em.target_floor}}},
          {"exp3", {{"gamma", b.exp3_gamma}}}};
}

}  // namespace streo

#endif  // STREO_IO_HPP_
