#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <tuple>

#include "streo/archive.hpp"
#include "streo/ea.hpp"
#include "streo/run.hpp"
#include "support.hpp"

using namespace streo;
namespace fx = streo::fixtures;

namespace {

Genotype bits(std::vector<double> v) { return {Representation::binary, std::move(v)}; }
Genotype reals(std::vector<double> v) { return {Representation::real, std::move(v)}; }

Population with_fitness(std::vector<double> f) {
  Population p;
  for (std::size_t i = 0; i < f.size(); ++i) p.genotypes.push_back(reals({static_cast<double>(i)}));
  p.fitness = std::move(f);
  return p;
}

SourceArchive onemax_archive(std::size_t d, std::size_t count) {
  SourceArchive a(Representation::binary, d);
  for (std::size_t k = 0; k < count; ++k)
    a.add(BernoulliModel(std::vector<double>(d, k % 2 ? 0.9 : 0.2)), {"toy", k % 2 == 1, {}});
  return a;
}

}  // namespace

// ---------------------------------------------------------------------------
// Operators

TEST(UniformCrossover, EqualParentsAndZeroRate) {
  Rng rng(1);
  const auto a = bits({1, 0, 1, 1, 0});
  auto [c1, c2] = uniform_crossover(a, a, 1.0, rng);
  EXPECT_EQ(c1, a);
  EXPECT_EQ(c2, a);
  const auto b = bits({0, 1, 0, 0, 1});
  auto [d1, d2] = uniform_crossover(a, b, 0.0, rng);
  EXPECT_EQ(d1, a);
  EXPECT_EQ(d2, b);
}

TEST(UniformCrossover, ConservesAllelesPerLocus) {
  Rng rng(2);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<double> x(16), y(16);
    for (auto& v : x) v = rng.bernoulli(0.5);
    for (auto& v : y) v = rng.bernoulli(0.5);
    auto [c1, c2] = uniform_crossover(bits(x), bits(y), 1.0, rng);
    for (std::size_t j = 0; j < 16; ++j) {
      auto parents = std::minmax(x[j], y[j]);
      auto children = std::minmax(c1[j], c2[j]);
      ASSERT_EQ(parents, children);
    }
  }
}

TEST(BitflipMutation, ZeroAndFullRate) {
  Rng rng(3);
  const auto g = bits({1, 0, 1, 1, 0});
  EXPECT_EQ(bitflip_mutation(g, 0.0, rng), g);
  EXPECT_EQ(bitflip_mutation(g, 1.0, rng), bits({0, 1, 0, 0, 1}));
}

TEST(BitflipMutation, EmpiricalRate) {
  Rng rng(4);
  const std::size_t d = 100, reps = 1000;  // 10^5 loci
  const double rate = 1.0 / d;
  std::size_t flips = 0;
  const auto g = bits(std::vector<double>(d, 0.0));
  for (std::size_t r = 0; r < reps; ++r)
    for (double v : bitflip_mutation(g, rate, rng).values) flips += v == 1.0;
  const double n = static_cast<double>(d * reps);
  const double sigma = std::sqrt(n * rate * (1 - rate));
  EXPECT_NEAR(static_cast<double>(flips), n * rate, 3 * sigma);
}

TEST(Sbx, BetaAtHalfIsOne) {
  EXPECT_DOUBLE_EQ(sbx_beta(0.5, 10.0), 1.0);
  EXPECT_DOUBLE_EQ(sbx_beta(0.5, 2.0), 1.0);
}

TEST(Sbx, BetaFormula) {
  EXPECT_NEAR(sbx_beta(0.25, 1.0), std::sqrt(0.5), 1e-15);
  EXPECT_NEAR(sbx_beta(0.75, 1.0), std::sqrt(2.0), 1e-15);
}

TEST(Sbx, EqualParentsGiveParents) {
  Rng rng(5);
  const auto a = reals({0.2, 0.4, 0.9});
  auto [c1, c2] = sbx_crossover(a, a, 10, 1.0, Bounds::uniform(3, 0, 1), rng);
  EXPECT_EQ(c1, a);
  EXPECT_EQ(c2, a);
}

TEST(Sbx, ChildMeanEqualsParentMeanWithoutClipping) {
  Rng rng(6);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<double> x(5), y(5);
    for (auto& v : x) v = rng.uniform(-3, 3);
    for (auto& v : y) v = rng.uniform(-3, 3);
    auto [c1, c2] = sbx_crossover(reals(x), reals(y), 10, 1.0, Bounds{}, rng);
    for (std::size_t j = 0; j < 5; ++j) ASSERT_NEAR(c1[j] + c2[j], x[j] + y[j], 1e-12);
  }
}

TEST(Sbx, ChildrenStayInBounds) {
  Rng rng(7);
  const auto b = Bounds::uniform(4, 0, 1);
  for (int trial = 0; trial < 1000; ++trial) {
    auto [c1, c2] = sbx_crossover(reals({0, 1, 0.01, 0.99}), reals({1, 0, 0.02, 0.98}), 2, 1.0, b, rng);
    for (std::size_t j = 0; j < 4; ++j) {
      ASSERT_TRUE(c1[j] >= 0 && c1[j] <= 1);
      ASSERT_TRUE(c2[j] >= 0 && c2[j] <= 1);
    }
  }
}

TEST(PolynomialMutation, ZeroRateIsIdentity) {
  Rng rng(8);
  const auto g = reals({0.1, 0.5, 0.9});
  EXPECT_EQ(polynomial_mutation(g, 10, 0.0, Bounds::uniform(3, 0, 1), rng), g);
}

TEST(PolynomialMutation, BoundaryValuesStayInBounds) {
  Rng rng(9);
  const auto b = Bounds::uniform(2, 0, 1);
  for (int trial = 0; trial < 10000; ++trial) {
    const auto m = polynomial_mutation(reals({0.0, 1.0}), 10, 1.0, b, rng);
    ASSERT_GE(m[0], 0.0);
    ASSERT_LE(m[1], 1.0);
  }
}

TEST(PolynomialMutation, SymmetricAboutCentre) {
  Rng rng(10);
  const auto b = Bounds::uniform(1, 0, 1);
  const int n = 100000;
  double sum = 0, sum2 = 0;
  int up = 0;
  for (int i = 0; i < n; ++i) {
    const double delta = polynomial_mutation(reals({0.5}), 10, 1.0, b, rng)[0] - 0.5;
    sum += delta;
    sum2 += delta * delta;
    up += delta > 0;
  }
  const double sd = std::sqrt(sum2 / n);
  EXPECT_NEAR(sum / n, 0.0, 3 * sd / std::sqrt(n));
  EXPECT_NEAR(up, n / 2, 3 * std::sqrt(n * 0.25));
}

TEST(Reproduce, ProducesExactlyNOffspringOfTheRightShape) {
  Rng rng(11);
  const auto task = fx::onemax(12);
  for (std::size_t n : {2u, 3u, 7u, 50u}) {
    Population p;
    for (std::size_t i = 0; i < n; ++i) p.genotypes.push_back(random_genotype(task, rng));
    p.fitness.assign(n, 0.0);
    const auto out = reproduce(p, task, EaConfig{}, rng);
    ASSERT_EQ(out.size(), n);
    for (const auto& g : out) ASSERT_EQ(g.size(), 12u);
  }
}

// ---------------------------------------------------------------------------
// Selection

TEST(ElitistSelect, AllWorseKeepsParents) {
  const auto parents = with_fitness({5, 6, 7});
  const auto offspring = with_fitness({1, 2, 3});
  const auto next = elitist_select(parents, offspring, 3);
  EXPECT_EQ(next.fitness, (std::vector<double>{7, 6, 5}));
  EXPECT_EQ(next.genotypes[0], parents.genotypes[2]);
}

TEST(ElitistSelect, AllBetterTakesOffspring) {
  const auto parents = with_fitness({1, 2, 3});
  const auto offspring = with_fitness({5, 6, 7});
  EXPECT_EQ(elitist_select(parents, offspring, 3).fitness, (std::vector<double>{7, 6, 5}));
}

TEST(ElitistSelect, TiesPreferParentsThenLowerIndex) {
  Population parents = with_fitness({1, 1});
  Population offspring = with_fitness({1, 1});
  offspring.genotypes[0] = reals({100});
  offspring.genotypes[1] = reals({101});
  const auto next = elitist_select(parents, offspring, 3);
  EXPECT_EQ(next.genotypes[0], parents.genotypes[0]);
  EXPECT_EQ(next.genotypes[1], parents.genotypes[1]);
  EXPECT_EQ(next.genotypes[2], offspring.genotypes[0]);
}

TEST(ElitistSelect, MatchesSortAndTruncateOracle) {
  Rng rng(12);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t np = 1 + rng.below(30), no = rng.below(30);
    const std::size_t n = 1 + rng.below(np + no);
    Population parents, offspring;
    // Few distinct values to exercise ties.
    for (std::size_t i = 0; i < np; ++i) {
      parents.genotypes.push_back(reals({0.0, static_cast<double>(i)}));
      parents.fitness.push_back(static_cast<double>(rng.below(5)));
    }
    for (std::size_t i = 0; i < no; ++i) {
      offspring.genotypes.push_back(reals({1.0, static_cast<double>(i)}));
      offspring.fitness.push_back(static_cast<double>(rng.below(5)));
    }
    std::vector<std::tuple<double, int, std::size_t>> keys;
    for (std::size_t i = 0; i < np; ++i) keys.emplace_back(-parents.fitness[i], 0, i);
    for (std::size_t i = 0; i < no; ++i) keys.emplace_back(-offspring.fitness[i], 1, i);
    std::sort(keys.begin(), keys.end());
    const auto next = elitist_select(parents, offspring, n);
    ASSERT_EQ(next.size(), n);
    for (std::size_t r = 0; r < n; ++r) {
      const auto [negf, origin, i] = keys[r];
      ASSERT_EQ(next.fitness[r], -negf);
      ASSERT_EQ(next.genotypes[r], reals({static_cast<double>(origin), static_cast<double>(i)}));
    }
  }
}

TEST(ElitistSelect, RejectsTooFewCandidates) {
  EXPECT_THROW(elitist_select(with_fitness({1}), with_fitness({2}), 3), std::invalid_argument);
}

// ---------------------------------------------------------------------------
// Host loop

TEST(Evolve, TransferScheduleAndEvaluationAccounting) {
  const auto task = fx::onemax(30);
  const auto archive = onemax_archive(30, 4);
  EaConfig cfg;
  cfg.transfer = TransferMode::streo;
  const auto rec = run(task, archive, cfg, Rng(1));
  // 5000 / 50 = 100 populations: the initial one plus generations 0..98.
  ASSERT_EQ(rec.generations.size(), 100u);
  EXPECT_EQ(rec.evaluations(), 5000u);
  for (std::size_t g = 0; g < rec.generations.size(); ++g)
    ASSERT_EQ(rec.generations[g].evaluations, 50 * (g + 1));
  // Loop indices 2, 4, ..., 98 transfer.
  ASSERT_EQ(rec.transfers.size(), 49u);
  for (std::size_t k = 0; k < rec.transfers.size(); ++k) {
    EXPECT_EQ(rec.transfers[k].step, k);
    EXPECT_EQ(rec.transfers[k].generation, 2 * (k + 1) + 1);
  }
}

TEST(Evolve, TransferIntervalControlsSchedule) {
  const auto task = fx::onemax(20);
  const auto archive = onemax_archive(20, 3);
  EaConfig cfg;
  cfg.transfer = TransferMode::streo;
  cfg.max_evaluations = 1000;  // loop indices 0..18
  cfg.hyper.transfer_interval = 4;
  const auto rec = run(task, archive, cfg, Rng(2));
  ASSERT_EQ(rec.transfers.size(), 4u);  // 4, 8, 12, 16
  EXPECT_EQ(rec.transfers.front().generation, 5u);
  cfg.hyper.transfer_interval = 1;  // every index from 2 on
  EXPECT_EQ(run(task, archive, cfg, Rng(2)).transfers.size(), 17u);
}

TEST(Evolve, NoTransferNeverTouchesSources) {
  const auto task = fx::onemax(20);
  const auto archive = onemax_archive(20, 3);
  EaConfig cfg;
  cfg.max_evaluations = 1000;
  const auto rec = run(task, archive, cfg, Rng(3));
  EXPECT_TRUE(rec.transfers.empty());
  EXPECT_EQ(rec.source_samples, 0u);
  EXPECT_EQ(rec.algorithm, "cga");
}

TEST(Evolve, NoTransferEqualsPlainGa) {
  const auto task = fx::onemax(25);
  EaConfig cfg;
  cfg.max_evaluations = 2000;
  const Rng root(4);
  const auto rec = run(task, SourceArchive{}, cfg, root);

  // The same GA spelled out directly.
  Rng init = root.child("init"), repro = root.child("reproduce");
  std::vector<Genotype> g0;
  for (int i = 0; i < 50; ++i) g0.push_back(random_genotype(task, init));
  Population pop = evaluate(task, g0);
  std::vector<double> best{pop.best_fitness()};
  for (std::size_t evals = 50; evals < 2000; evals += 50) {
    pop = elitist_select(pop, evaluate(task, reproduce(pop, task, cfg, repro)), 50);
    best.push_back(pop.best_fitness());
  }
  ASSERT_EQ(rec.generations.size(), best.size());
  for (std::size_t g = 0; g < best.size(); ++g) EXPECT_EQ(rec.generations[g].best_fitness, best[g]);

  // Transfer settings are irrelevant without transfer.
  cfg.hyper.transfer_interval = 7;
  cfg.hyper.temperature = 1.0;
  const auto again = run(task, SourceArchive{}, cfg, root);
  for (std::size_t g = 0; g < best.size(); ++g)
    EXPECT_EQ(again.generations[g].best_fitness, rec.generations[g].best_fitness);
}

TEST(Evolve, BestSoFarIsMonotone) {
  Rng seeds(5);
  for (int trial = 0; trial < 40; ++trial) {
    const auto task = trial % 2 ? fx::onemax(15) : fx::sphere(5);
    SourceArchive archive(task.rep, task.dim);
    if (task.rep == Representation::binary) {
      archive = onemax_archive(15, 3);
    } else {
      archive.add(GaussianModel(Eigen::VectorXd::Constant(5, 0.3), Eigen::MatrixXd::Identity(5, 5) * 0.01),
                  {"toy", true, {}});
    }
    EaConfig cfg;
    cfg.population = 10;
    cfg.max_evaluations = 400;
    cfg.transfer = static_cast<TransferMode>(trial % 4);
    const auto rec = run(task, archive, cfg, Rng(seeds.next()));
    for (std::size_t g = 1; g < rec.generations.size(); ++g)
      ASSERT_GE(rec.generations[g].best_fitness, rec.generations[g - 1].best_fitness);
    if (task.rep == Representation::real) {
      for (double v : rec.best.values) ASSERT_TRUE(v >= 0.0 && v <= 1.0);
    }
  }
}

TEST(Evolve, FixedSeedIsBitReproducible) {
  const auto task = fx::sphere(6);
  SourceArchive archive(Representation::real, 6);
  archive.add(GaussianModel(Eigen::VectorXd::Constant(6, 0.3), Eigen::MatrixXd::Identity(6, 6) * 0.02),
              {"toy", true, {}});
  archive.add(GaussianModel(Eigen::VectorXd::Constant(6, 0.8), Eigen::MatrixXd::Identity(6, 6) * 0.02),
              {"toy", false, {}});
  for (auto mode : {TransferMode::none, TransferMode::streo, TransferMode::amtea, TransferMode::mab_amtea}) {
    EaConfig cfg;
    cfg.max_evaluations = 1500;
    cfg.transfer = mode;
    const auto a = run(task, archive, cfg, Rng(77));
    const auto b = run(task, archive, cfg, Rng(77));
    ASSERT_EQ(a.generations.size(), b.generations.size());
    for (std::size_t g = 0; g < a.generations.size(); ++g) {
      ASSERT_EQ(a.generations[g].best_fitness, b.generations[g].best_fitness);
      ASSERT_EQ(a.generations[g].mean_fitness, b.generations[g].mean_fitness);
    }
    ASSERT_EQ(a.transfers.size(), b.transfers.size());
    for (std::size_t k = 0; k < a.transfers.size(); ++k)
      ASSERT_EQ(a.transfers[k].weights, b.transfers[k].weights);
    EXPECT_EQ(a.best, b.best);
    EXPECT_EQ(a.config_hash, b.config_hash);
  }
}

TEST(Evolve, TransferWeightsStayOnSimplex) {
  const auto task = fx::onemax(20);
  const auto archive = onemax_archive(20, 6);
  for (auto mode : {TransferMode::streo, TransferMode::amtea, TransferMode::mab_amtea}) {
    EaConfig cfg;
    cfg.max_evaluations = 1500;
    cfg.transfer = mode;
    const auto rec = run(task, archive, cfg, Rng(6));
    ASSERT_FALSE(rec.transfers.empty());
    for (const auto& t : rec.transfers) {
      ASSERT_EQ(t.weights.size(), 7u);
      ASSERT_NEAR(fx::sum_of(t.weights), 1.0, 1e-12);
    }
    EXPECT_GT(rec.source_samples, 0u);
  }
}

TEST(Run, RejectsEmptyArchiveForTransfer) {
  EaConfig cfg;
  cfg.transfer = TransferMode::streo;
  EXPECT_THROW(run(fx::onemax(5), SourceArchive(Representation::binary, 5), cfg, Rng(1)),
               std::invalid_argument);
}

TEST(Run, RejectsMismatchedArchive) {
  EaConfig cfg;
  cfg.transfer = TransferMode::amtea;
  EXPECT_THROW(run(fx::onemax(5), onemax_archive(6, 2), cfg, Rng(1)), std::invalid_argument);
}

TEST(EaConfig, Validation) {
  EaConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  EXPECT_DOUBLE_EQ(cfg.mutation_rate_for(100), 0.01);
  cfg.crossover_rate = 1.5;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = EaConfig{};
  cfg.sbx_index = 0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = EaConfig{};
  cfg.max_evaluations = 10;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
}

TEST(RunRecord, Queries) {
  RunRecord r;
  r.generations = {{0, 50, 1.0, 0.5, 0}, {1, 100, 2.0, 1.0, 0}, {2, 150, 4.0, 2.0, 0}};
  EXPECT_EQ(r.evaluations(), 150u);
  EXPECT_EQ(r.evaluations_to_reach(2.0), 100u);
  EXPECT_EQ(r.evaluations_to_reach(3.0), 150u);
  EXPECT_FALSE(r.evaluations_to_reach(5.0).has_value());
  EXPECT_DOUBLE_EQ(r.best_at(120), 2.0);
}

TEST(ConfigHash, DependsOnSettings) {
  EaConfig a, b;
  b.hyper.temperature = 0.02;
  EXPECT_NE(config_hash(nlohmann::json(a)), config_hash(nlohmann::json(b)));
  EXPECT_EQ(config_hash(nlohmann::json(a)), config_hash(nlohmann::json(EaConfig{})));
  EXPECT_EQ(config_hash(nlohmann::json(a)).size(), 16u);
}
