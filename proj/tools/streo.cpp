// Command-line front end: gen-archive, run, sweep, heatmap, bench-scaling.

#include <unistd.h>

#include <chrono>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "streo/experiments.hpp"

namespace fs = std::filesystem;
using namespace streo;

namespace {

struct Options {
  std::string config;
  std::string out = ".";
  std::vector<std::uint64_t> seeds;
  std::vector<std::string> algorithms;
  std::size_t workers = 1;
};

std::string utc_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string host_name() {
  char buf[256] = {};
  if (gethostname(buf, sizeof buf - 1) != 0) return "unknown";
  return buf;
}

class Session {
 public:
  Session(std::string command, const Options& opt)
      : command_(std::move(command)), opt_(opt), started_(utc_now()),
        t0_(std::chrono::steady_clock::now()) {
    cfg_ = load_config(opt.config);
    if (!opt.seeds.empty()) cfg_.seeds = opt.seeds;
    if (!opt.algorithms.empty()) {
      cfg_.algorithms.clear();
      for (const auto& a : opt.algorithms) cfg_.algorithms.push_back(transfer_mode_from_string(a));
      cfg_.scaling.algorithms = cfg_.algorithms;
    }
    if (cfg_.seeds.empty()) throw std::invalid_argument("config: seed list is empty");
    if (opt.workers == 0) throw std::invalid_argument("--workers must be at least 1");
    fs::create_directories(opt.out);
  }

  ExperimentConfig& config() { return cfg_; }

  fs::path resolve(const std::string& p) const {
    fs::path path(p);
    if (path.is_absolute()) return path;
    return fs::path(opt_.config).parent_path() / path;
  }

  void write(const std::string& name, const std::string& text) {
    write_text((fs::path(opt_.out) / name).string(), text);
    files_.push_back(name);
  }

  /// Archive from the configured path or recipe; nullopt when neither is set.
  std::optional<SourceArchive> archive() {
    if (cfg_.archive_path) return load_archive(resolve(*cfg_.archive_path).string());
    if (!cfg_.archive_recipe.is_null()) {
      const auto recipe = recipe_from_json(cfg_.archive_recipe);
      if (!cfg_.task.is_null() && recipe.rep != task_representation(cfg_.task))
        throw std::invalid_argument("archive recipe representation does not match the task");
      return build_archive(recipe, cfg_.ea, cfg_.baseline.em);
    }
    return std::nullopt;
  }

  void finish() {
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count();
    json meta = {{"command", command_},
                 {"config", opt_.config},
                 {"config_hash", config_hash(effective_config(cfg_, cfg_.ea))},
                 {"seeds", cfg_.seeds},
                 {"workers", opt_.workers},
                 {"started_at", started_},
                 {"finished_at", utc_now()},
                 {"elapsed_seconds", secs},
                 {"host", host_name()},
                 {"hardware_threads", std::thread::hardware_concurrency()},
                 {"files", files_}};
    write_text((fs::path(opt_.out) / "metadata.json").string(), meta.dump(2) + "\n");
  }

  std::size_t workers() const { return opt_.workers; }

 private:
  std::string command_;
  Options opt_;
  ExperimentConfig cfg_;
  std::string started_;
  std::chrono::steady_clock::time_point t0_;
  std::vector<std::string> files_;
};

bool needs_archive(const std::vector<TransferMode>& algs) {
  for (auto a : algs)
    if (a != TransferMode::none) return true;
  return false;
}

void cmd_gen_archive(const Options& opt) {
  Session s("gen-archive", opt);
  if (s.config().archive_recipe.is_null())
    throw std::invalid_argument("gen-archive: config has no archive recipe");
  const auto a = *s.archive();
  s.write("archive.json", archive_to_json(a).dump(1) + "\n");
  s.finish();
}

void cmd_run(const Options& opt) {
  Session s("run", opt);
  auto& cfg = s.config();
  if (cfg.algorithms.empty()) throw std::invalid_argument("run: no algorithms selected");
  const auto task = task_from_json(cfg.task);
  auto archive = s.archive();
  if (!archive) {
    if (needs_archive(cfg.algorithms))
      throw std::invalid_argument("run: missing archive (set archive.path or archive.recipe)");
    archive = SourceArchive(task.rep, task.dim);
  }
  const auto records = run_matrix(cfg, task, *archive, s.workers());
  const CsvOptions csv{cfg.record_timing};
  std::vector<std::string> order;
  for (auto alg : cfg.algorithms) {
    const auto name = to_string(alg);
    if (std::find(order.begin(), order.end(), name) != order.end()) continue;
    order.push_back(name);
    std::vector<RunRecord> mine;
    for (const auto& r : records)
      if (r.algorithm == name) mine.push_back(r);
    s.write("runs_" + name + ".csv", run_csv(mine, csv));
    if (alg != TransferMode::none)
      s.write("weights_" + name + ".csv", weight_csv(mine, archive->related_flags()));
  }
  s.write("summary.csv", summary_csv(records, order));
  s.finish();
}

void cmd_sweep(const Options& opt) {
  Session s("sweep", opt);
  auto& cfg = s.config();
  const auto task = task_from_json(cfg.task);
  const auto archive = s.archive();
  if (!archive) throw std::invalid_argument("sweep: missing archive");
  s.write("sweep.csv", sweep_csv(run_sweep(cfg, task, *archive, s.workers())));
  s.finish();
}

void cmd_bench_scaling(const Options& opt) {
  Session s("bench-scaling", opt);
  auto& cfg = s.config();
  const auto task = task_from_json(cfg.task);
  const auto pool = s.archive();
  if (!pool) throw std::invalid_argument("bench-scaling: missing archive");
  const auto results = run_scaling(cfg, task, *pool, s.workers());
  s.write("timing.csv", timing_csv(results, cfg.record_timing));
  for (const auto& r : results)
    s.write("trace_T" + std::to_string(r.sources) + ".csv",
            run_csv(r.records, CsvOptions{cfg.record_timing}));
  s.finish();
}

void cmd_heatmap(const Options& opt) {
  Session s("heatmap", opt);
  auto& cfg = s.config();
  if (cfg.task.is_null() || cfg.task.value("kind", std::string{}) != "arm")
    throw std::invalid_argument("heatmap: task must be an arm task");
  const auto target = task_from_json(cfg.task);
  SourceArchive archive =
      cfg.archive_path ? load_archive(s.resolve(*cfg.archive_path).string())
                       : build_heatmap_archive(target.dim, cfg.heatmap, cfg.ea, cfg.baseline.em);
  s.write("heatmap.csv", heatmap_csv(run_heatmap(cfg.heatmap, target, archive)));
  s.finish();
}

std::string one_line(std::string msg) {
  for (auto& c : msg)
    if (c == '\n' || c == '\r') c = ' ';
  return msg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Transfer evolutionary optimization experiments", "streo"};
  app.require_subcommand(1);
  Options opt;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", opt.config, "experiment config (JSON)")->required();
    sub->add_option("--out", opt.out, "output directory");
    sub->add_option("--seeds", opt.seeds, "comma-separated seed override")->delimiter(',');
    sub->add_option("--workers", opt.workers, "parallel runs");
    sub->add_option("--algorithm", opt.algorithms, "algorithm override (cga, streo, amtea, mab-amtea)")
        ->delimiter(',');
  };
  auto* gen = app.add_subcommand("gen-archive", "build and save a source archive");
  auto* run = app.add_subcommand("run", "seed x algorithm matrix");
  auto* sweep = app.add_subcommand("sweep", "one-axis-at-a-time hyper-parameter sweep");
  auto* heat = app.add_subcommand("heatmap", "source relatedness heatmap for the arm");
  auto* scale = app.add_subcommand("bench-scaling", "per-step cost versus archive size");
  for (auto* sub : {gen, run, sweep, heat, scale}) add_common(sub);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "streo: error: " << one_line(e.what()) << "\n";
    return 2;
  }

  try {
    if (gen->parsed()) cmd_gen_archive(opt);
    else if (run->parsed()) cmd_run(opt);
    else if (sweep->parsed()) cmd_sweep(opt);
    else if (heat->parsed()) cmd_heatmap(opt);
    else if (scale->parsed()) cmd_bench_scaling(opt);
  } catch (const std::exception& e) {
    std::cerr << "streo: error: " << one_line(e.what()) << "\n";
    return 1;
  }
  return 0;
}
