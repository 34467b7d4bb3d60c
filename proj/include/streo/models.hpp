#ifndef STREO_MODELS_HPP_
#define STREO_MODELS_HPP_

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "streo/core.hpp"

namespace streo {

/// Factored Bernoulli distribution over bit strings.
class BernoulliModel {
 public:
  BernoulliModel() = default;

  explicit BernoulliModel(std::vector<double> p) : p_(std::move(p)) {
    log_p_.resize(p_.size());
    log_q_.resize(p_.size());
    for (std::size_t j = 0; j < p_.size(); ++j) {
      if (!(p_[j] > 0.0 && p_[j] < 1.0))
        throw std::invalid_argument("BernoulliModel: marginal " + std::to_string(j) +
                                    " outside (0, 1)");
      log_p_[j] = std::log(p_[j]);
      log_q_[j] = std::log1p(-p_[j]);
    }
  }

  std::size_t dim() const { return p_.size(); }
  const std::vector<double>& p() const { return p_; }

  double log_density(std::span<const double> x) const {
    double acc = 0.0;
    for (std::size_t j = 0; j < p_.size(); ++j) acc += x[j] > 0.5 ? log_p_[j] : log_q_[j];
    return acc;
  }

  Genotype sample(Rng& rng) const {
    std::vector<double> v(p_.size());
    for (std::size_t j = 0; j < p_.size(); ++j) v[j] = rng.uniform() < p_[j] ? 1.0 : 0.0;
    return {Representation::binary, std::move(v)};
  }

 private:
  std::vector<double> p_;
  std::vector<double> log_p_;
  std::vector<double> log_q_;
};

/// Multivariate normal with a cached Cholesky factor.
class GaussianModel {
 public:
  GaussianModel() = default;

  /// Takes `cov` as given; throws if it is not positive definite.
  GaussianModel(Eigen::VectorXd mean, Eigen::MatrixXd cov)
      : mean_(std::move(mean)), cov_(std::move(cov)) {
    if (cov_.rows() != mean_.size() || cov_.cols() != mean_.size())
      throw std::invalid_argument("GaussianModel: covariance shape does not match mean");
    factorize();
  }

  /// Adds delta * I to `cov`, starting at 1e-10 and growing tenfold until the
  /// factorization succeeds (at most 1e-2).
  static GaussianModel with_jitter(Eigen::VectorXd mean, const Eigen::MatrixXd& cov) {
    const auto d = mean.size();
    for (double delta = 1e-10; delta <= 1e-2 * (1 + 1e-9); delta *= 10.0) {
      Eigen::MatrixXd jittered = cov + delta * Eigen::MatrixXd::Identity(d, d);
      Eigen::LLT<Eigen::MatrixXd> llt(jittered);
      if (llt.info() == Eigen::Success) {
        GaussianModel m;
        m.mean_ = std::move(mean);
        m.cov_ = std::move(jittered);
        m.adopt(llt);
        m.jitter_ = delta;
        return m;
      }
    }
    throw std::invalid_argument("GaussianModel: covariance not positive definite after jitter 1e-2");
  }

  std::size_t dim() const { return static_cast<std::size_t>(mean_.size()); }
  const Eigen::VectorXd& mean() const { return mean_; }
  const Eigen::MatrixXd& cov() const { return cov_; }
  const Eigen::MatrixXd& cholesky() const { return chol_; }
  double log_det() const { return log_det_; }
  double jitter() const { return jitter_; }

  double log_density(std::span<const double> x) const {
    const auto d = mean_.size();
    Eigen::VectorXd diff(d);
    for (Eigen::Index j = 0; j < d; ++j) diff[j] = x[static_cast<std::size_t>(j)] - mean_[j];
    chol_.triangularView<Eigen::Lower>().solveInPlace(diff);
    return -0.5 * (static_cast<double>(d) * std::log(2.0 * std::numbers::pi) + log_det_ +
                   diff.squaredNorm());
  }

  /// Draws mean + L z and clips each coordinate to `bounds` when given.
  Genotype sample(Rng& rng, const Bounds* bounds = nullptr) const {
    const auto d = mean_.size();
    Eigen::VectorXd z(d);
    for (Eigen::Index j = 0; j < d; ++j) z[j] = rng.normal();
    Eigen::VectorXd y = mean_ + chol_.triangularView<Eigen::Lower>() * z;
    std::vector<double> v(static_cast<std::size_t>(d));
    for (std::size_t j = 0; j < v.size(); ++j) {
      v[j] = y[static_cast<Eigen::Index>(j)];
      if (bounds && !bounds->empty()) v[j] = bounds->clip(j, v[j]);
    }
    return {Representation::real, std::move(v)};
  }

 private:
  void factorize() {
    Eigen::LLT<Eigen::MatrixXd> llt(cov_);
    if (llt.info() != Eigen::Success)
      throw std::invalid_argument("GaussianModel: covariance not positive definite");
    adopt(llt);
  }

  void adopt(const Eigen::LLT<Eigen::MatrixXd>& llt) {
    chol_ = llt.matrixL();
    log_det_ = 2.0 * chol_.diagonal().array().log().sum();
  }

  Eigen::VectorXd mean_;
  Eigen::MatrixXd cov_;
  Eigen::MatrixXd chol_;
  double log_det_ = 0.0;
  double jitter_ = 0.0;
};

using SearchModel = std::variant<BernoulliModel, GaussianModel>;

inline std::size_t model_dim(const SearchModel& m) {
  return std::visit([](const auto& x) { return x.dim(); }, m);
}

inline Representation model_representation(const SearchModel& m) {
  return std::holds_alternative<BernoulliModel>(m) ? Representation::binary
                                                   : Representation::real;
}

inline double log_density(const SearchModel& m, std::span<const double> x) {
  if (x.size() != model_dim(m))
    throw std::invalid_argument("log_density: point dimension does not match model");
  return std::visit([&](const auto& model) { return model.log_density(x); }, m);
}

inline double log_density(const SearchModel& m, const Genotype& g) {
  return log_density(m, std::span<const double>(g.values));
}

inline Genotype sample(const SearchModel& m, Rng& rng, const Bounds* bounds = nullptr) {
  if (const auto* b = std::get_if<BernoulliModel>(&m)) return b->sample(rng);
  return std::get<GaussianModel>(m).sample(rng, bounds);
}

// ---------------------------------------------------------------------------
// Fitting

inline BernoulliModel fit_bernoulli(const Population& pop) {
  if (pop.empty()) throw std::invalid_argument("fit_bernoulli: empty population");
  const std::size_t d = pop.genotypes.front().size();
  const double n = static_cast<double>(pop.size());
  const double p_min = 1.0 / (2.0 * n);
  std::vector<double> p(d, 0.0);
  for (const auto& g : pop.genotypes) {
    if (g.rep != Representation::binary || g.size() != d)
      throw std::invalid_argument("fit_bernoulli: expected binary genotypes of equal length");
    for (std::size_t j = 0; j < d; ++j) p[j] += g[j];
  }
  for (auto& pj : p) pj = std::clamp(pj / n, p_min, 1.0 - p_min);
  return BernoulliModel(std::move(p));
}

/// Sample mean and covariance (denominator n), without jitter.
inline std::pair<Eigen::VectorXd, Eigen::MatrixXd> sample_moments(const Population& pop) {
  if (pop.empty()) throw std::invalid_argument("sample_moments: empty population");
  const auto d = static_cast<Eigen::Index>(pop.genotypes.front().size());
  const auto n = static_cast<Eigen::Index>(pop.size());
  Eigen::MatrixXd X(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& g = pop.genotypes[static_cast<std::size_t>(i)];
    if (static_cast<Eigen::Index>(g.size()) != d)
      throw std::invalid_argument("sample_moments: genotypes of unequal length");
    for (Eigen::Index j = 0; j < d; ++j) {
      const double v = g[static_cast<std::size_t>(j)];
      if (!std::isfinite(v)) throw std::invalid_argument("sample_moments: non-finite value");
      X(i, j) = v;
    }
  }
  Eigen::VectorXd mean = X.colwise().mean();
  Eigen::MatrixXd centered = X.rowwise() - mean.transpose();
  Eigen::MatrixXd cov = (centered.transpose() * centered) / static_cast<double>(n);
  return {std::move(mean), std::move(cov)};
}

inline GaussianModel fit_gaussian(const Population& pop) {
  auto [mean, cov] = sample_moments(pop);
  return GaussianModel::with_jitter(std::move(mean), cov);
}

inline SearchModel fit_model(const Population& pop, Representation rep) {
  if (rep == Representation::binary) return fit_bernoulli(pop);
  return fit_gaussian(pop);
}

// ---------------------------------------------------------------------------
// Mixtures and sampling

inline constexpr double kSimplexTolerance = 1e-9;

inline void check_simplex(std::span<const double> w, const char* who) {
  double sum = 0.0;
  for (double x : w) {
    if (!(x >= 0.0)) throw std::invalid_argument(std::string(who) + ": negative weight");
    sum += x;
  }
  if (std::abs(sum - 1.0) > kSimplexTolerance)
    throw std::invalid_argument(std::string(who) + ": weights do not sum to one");
}

/// Non-owning view of T components and their mixture weights.
struct MixtureModel {
  std::vector<std::reference_wrapper<const SearchModel>> components;
  std::vector<double> weights;

  std::size_t size() const { return components.size(); }
};

inline MixtureModel make_mixture(std::span<const SearchModel> sources, const SearchModel& target,
                                 std::vector<double> weights) {
  MixtureModel mix;
  mix.components.reserve(sources.size() + 1);
  for (const auto& s : sources) mix.components.emplace_back(s);
  mix.components.emplace_back(target);
  if (weights.size() != mix.components.size())
    throw std::invalid_argument("make_mixture: weight count does not match component count");
  mix.weights = std::move(weights);
  return mix;
}

inline std::size_t support_size(std::span<const double> w) {
  return static_cast<std::size_t>(std::count_if(w.begin(), w.end(), [](double x) { return x > 0.0; }));
}

/// Largest-remainder apportionment of `n` samples over the simplex `w`:
/// every positive weight gets one sample, the remaining n - m are split by
/// quota w_i (n - m) using floors and then the largest fractional parts, ties
/// going to the lower index. Zero weights get nothing.
inline std::vector<std::size_t> allocate_samples(std::span<const double> w, std::size_t n) {
  check_simplex(w, "allocate_samples");
  const std::size_t m = support_size(w);
  if (n < m)
    throw std::invalid_argument("allocate_samples: " + std::to_string(n) +
                                " samples cannot cover " + std::to_string(m) +
                                " positive weights");
  std::vector<std::size_t> counts(w.size(), 0);
  const double rest = static_cast<double>(n - m);
  std::vector<std::pair<double, std::size_t>> remainders;
  remainders.reserve(m);
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (w[i] <= 0.0) continue;
    const double quota = w[i] * rest;
    const auto whole = static_cast<std::size_t>(std::floor(quota));
    counts[i] = 1 + whole;
    assigned += counts[i];
    remainders.emplace_back(quota - static_cast<double>(whole), i);
  }
  // Rounding can push the floors one past n - m when w sums to 1 + ulp.
  while (assigned > n) {
    auto it = std::min_element(remainders.begin(), remainders.end());
    --counts[it->second];
    it->first = 2.0;
    --assigned;
  }
  std::size_t left = n - assigned;
  if (left > 0) {
    const auto k = std::min(left, remainders.size());
    auto by_remainder = [](const auto& a, const auto& b) {
      return a.first != b.first ? a.first > b.first : a.second < b.second;
    };
    std::partial_sort(remainders.begin(), remainders.begin() + static_cast<std::ptrdiff_t>(k),
                      remainders.end(), by_remainder);
    for (std::size_t r = 0; left > 0; r = (r + 1) % remainders.size(), --left)
      ++counts[remainders[r].second];
  }
  return counts;
}

/// Zeroes the smallest positive weights until at most `n` remain, then
/// renormalizes. Ties among equal weights are broken uniformly at random;
/// `keep` (if in range) is never dropped. Returns the number of weights
/// zeroed.
inline std::size_t restrict_support(std::vector<double>& w, std::size_t n, Rng& rng,
                                    std::size_t keep = static_cast<std::size_t>(-1)) {
  const std::size_t m = support_size(w);
  if (m <= n) return 0;
  struct Entry {
    double w;
    std::uint64_t key;
    std::size_t i;
  };
  std::vector<Entry> order;
  order.reserve(m);
  for (std::size_t i = 0; i < w.size(); ++i)
    if (w[i] > 0.0 && i != keep) order.push_back({w[i], rng.next(), i});
  const std::size_t drop = m - n;
  std::nth_element(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(drop - 1),
                   order.end(), [](const Entry& a, const Entry& b) {
                     return a.w != b.w ? a.w < b.w : a.key < b.key;
                   });
  for (std::size_t r = 0; r < drop; ++r) w[order[r].i] = 0.0;
  double sum = 0.0;
  for (double x : w) sum += x;
  for (double& x : w) x /= sum;
  return drop;
}

struct MixtureSample {
  std::vector<Genotype> genotypes;
  std::vector<std::size_t> provenance;  // component index of each genotype
};

/// Draws exactly `allocate_samples(w, n)[i]` genotypes from component i, in
/// component order. Real-valued draws are clipped to `bounds`.
inline MixtureSample sample_mixture(const MixtureModel& mix, std::size_t n, Rng& rng,
                                    const Bounds* bounds = nullptr) {
  if (mix.weights.size() != mix.components.size())
    throw std::invalid_argument("sample_mixture: weight count does not match component count");
  const auto counts = allocate_samples(mix.weights, n);
  MixtureSample out;
  out.genotypes.reserve(n);
  out.provenance.reserve(n);
  for (std::size_t i = 0; i < counts.size(); ++i) {
    for (std::size_t k = 0; k < counts[i]; ++k) {
      out.genotypes.push_back(sample(mix.components[i].get(), rng, bounds));
      out.provenance.push_back(i);
    }
  }
  return out;
}

}  // namespace streo

#endif  // STREO_MODELS_HPP_
