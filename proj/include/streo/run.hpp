#ifndef STREO_RUN_HPP_
#define STREO_RUN_HPP_

#include <stdexcept>

#include "streo/archive.hpp"
#include "streo/baselines.hpp"
#include "streo/ea.hpp"

namespace streo {

struct BaselineConfig {
  EmConfig em;
  double exp3_gamma = 0.1;
};

/// Runs the host GA with the transfer mechanism selected by `cfg.transfer`.
inline RunRecord run(const TaskInstance& task, const SourceArchive& sources, const EaConfig& cfg,
                     const Rng& rng, const BaselineConfig& baseline = {}) {
  if (cfg.transfer != TransferMode::none) {
    if (sources.empty())
      throw std::invalid_argument("run: transfer algorithm '" + to_string(cfg.transfer) +
                                  "' needs a non-empty source archive");
    if (sources.dim() != task.dim || sources.representation() != task.rep)
      throw std::invalid_argument("run: archive does not match the task's search space");
  }
  switch (cfg.transfer) {
    case TransferMode::none:
      return evolve(task, cfg, rng, nullptr, "cga");
    case TransferMode::streo: {
      StreoLearner learner(task, sources.models(), cfg.hyper, cfg.lamarckian);
      return evolve(task, cfg, rng, &learner, "streo");
    }
    case TransferMode::amtea:
      return run_amtea(task, sources, cfg, rng, baseline.em);
    case TransferMode::mab_amtea:
      return run_mab_amtea(task, sources, cfg, rng, baseline.em, baseline.exp3_gamma);
  }
  throw std::logic_error("run: unhandled transfer mode");
}

}  // namespace streo

#endif  // STREO_RUN_HPP_
