#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "fsc/wl_em.hpp"
#include "error_kind.hpp"
#include "oracles.hpp"

using namespace fsc;
using Eigen::MatrixXd;
using Eigen::Vector2d;
using Eigen::VectorXd;

namespace {

struct Problem {
  SupervisedDataset data;
  std::vector<int> z1, z2;
  MixtureParams truth;
};

// Labelled rows cycle through the classes so every class is represented.
Problem random_problem(std::mt19937_64& rng, int G, int p, long n1, long n2, double spread = 3.0) {
  Problem out;
  out.truth = oracle::random_mixture(rng, G, p, spread);
  auto [x2, z2] = oracle::sample_mixture(rng, out.truth, n2);
  MatrixXd x1(n1, p);
  for (long j = 0; j < n1; ++j) {
    const int g = static_cast<int>(j % G);
    const auto& c = out.truth.components[static_cast<std::size_t>(g)];
    const MatrixXd l = c.covariance.llt().matrixL();
    x1.row(j) = (c.mean + l * oracle::normal_vector(rng, p)).transpose();
    out.z1.push_back(g);
  }
  out.z2 = z2;
  out.data = SupervisedDataset(x1, out.z1, G, x2);
  return out;
}

MixtureParams shared_init(const SupervisedDataset& d, SupervisionWeight w, std::uint64_t seed) {
  return initial_params(d, initial_partition(d, d.num_classes(), 5, seed), w);
}

// Expected complete-data objective with memberships held fixed.
double objective(const SupervisedDataset& d, const MatrixXd& resp, SupervisionWeight w, const MixtureParams& m) {
  double s = 0.0;
  for (int g = 0; g < m.num_components(); ++g) {
    const auto& c = m.components[static_cast<std::size_t>(g)];
    for (Eigen::Index j = 0; j < d.n1(); ++j) {
      if (d.labels.classes()[static_cast<std::size_t>(j)] != g) continue;
      s += w.labelled() * (std::log(m.pi(g)) + oracle::log_normal(d.labelled.row(j).transpose(), c.mean, c.covariance));
    }
    for (Eigen::Index k = 0; k < d.n2(); ++k) {
      s += w.unlabelled() * resp(k, g) *
           (std::log(m.pi(g)) + oracle::log_normal(d.unlabelled.row(k).transpose(), c.mean, c.covariance));
    }
  }
  return s;
}

}  // namespace

TEST(WeightedLogLikelihood, TinyInstanceTermByTerm) {
  MatrixXd x1(2, 1), x2(2, 1);
  x1 << -1.0, 2.0;
  x2 << 0.5, 3.0;
  const std::vector<int> z1{0, 1};
  const SupervisedDataset d(x1, z1, 2, x2);
  MixtureParams m;
  m.pi = Vector2d(0.3, 0.7);
  m.components = {{VectorXd::Constant(1, -0.5), MatrixXd::Constant(1, 1, 0.8)},
                  {VectorXd::Constant(1, 2.5), MatrixXd::Constant(1, 1, 1.5)}};
  const auto phi = [](double x, double mu, double var) {
    return std::exp(-0.5 * (x - mu) * (x - mu) / var) / std::sqrt(2 * M_PI * var);
  };
  const double lambda = 0.3;
  const double expected =
      lambda * (std::log(0.3 * phi(-1.0, -0.5, 0.8)) + std::log(0.7 * phi(2.0, 2.5, 1.5))) +
      (1 - lambda) * (std::log(0.3 * phi(0.5, -0.5, 0.8) + 0.7 * phi(0.5, 2.5, 1.5)) +
                      std::log(0.3 * phi(3.0, -0.5, 0.8) + 0.7 * phi(3.0, 2.5, 1.5)));
  EXPECT_NEAR(weighted_log_likelihood(d, m, SupervisionWeight(lambda)), expected, 1e-12);
}

TEST(WeightedLogLikelihood, EndpointsReduceToSingleBlock) {
  std::mt19937_64 rng(31);
  const Problem pr = random_problem(rng, 3, 2, 30, 40);
  EXPECT_NEAR(weighted_log_likelihood(pr.data, pr.truth, SupervisionWeight(1.0)),
              oracle::complete_loglik(pr.data.labelled, pr.z1, pr.truth), 1e-9);
  EXPECT_NEAR(weighted_log_likelihood(pr.data, pr.truth, SupervisionWeight(0.0)),
              oracle::mixture_loglik(pr.data.unlabelled, pr.truth), 1e-9);
}

TEST(SupervisionWeight, RejectsOutOfRange) {
  EXPECT_EQ(kind_of([] { SupervisionWeight w(1.5); }), ErrorKind::input);
  EXPECT_EQ(kind_of([] { SupervisionWeight w(-0.1); }), ErrorKind::input);
  const SupervisionWeight w(0.3);
  EXPECT_DOUBLE_EQ(w.labelled() + w.unlabelled(), 1.0);
}

TEST(DaFit, TwoPointClasses) {
  MatrixXd x1(4, 2);
  x1 << 0, 0, 2, 0, 0, 1, 0, 3;
  const std::vector<int> z{0, 0, 1, 1};
  const MixtureParams m = da_fit(x1, HardLabels(z, 2));
  EXPECT_NEAR(m.pi(0), 0.5, 1e-15);
  EXPECT_TRUE(m.components[0].mean.isApprox(Vector2d(1, 0)));
  EXPECT_TRUE(m.components[1].mean.isApprox(Vector2d(0, 2)));
  MatrixXd s0(2, 2);
  s0 << 1, 0, 0, 0;
  EXPECT_LT((m.components[0].covariance - s0).norm(), 1e-15);
  const SpdFactor f(m.components[0].covariance);
  EXPECT_GT(f.ridge(), 0.0);
}

TEST(DaFit, SingleClass) {
  std::mt19937_64 rng(32);
  const MatrixXd x1 = oracle::normal_matrix(rng, 10, 2);
  const std::vector<int> z(10, 0);
  const MixtureParams m = da_fit(x1, HardLabels(z, 1));
  EXPECT_EQ(m.num_components(), 1);
  EXPECT_DOUBLE_EQ(m.pi(0), 1.0);
}

TEST(DaFit, TooFewRowsIsInsufficientLabels) {
  MatrixXd x1(3, 1);
  x1 << 0, 1, 2;
  const std::vector<int> z{0, 0, 1};
  EXPECT_EQ(kind_of([&] { da_fit(x1, HardLabels(z, 2)); }), ErrorKind::insufficient_labels);
}

TEST(EmFit, FullSupervisionEqualsPlugIn) {
  std::mt19937_64 rng(33);
  for (int trial = 0; trial < 20; ++trial) {
    const int G = 1 + trial % 3;
    const int p = 1 + trial % 4;
    const Problem pr = random_problem(rng, G, p, 15 * G + 5 * p, 40);
    const SupervisionWeight w(1.0);
    const FitResult fit = em_fit_from(pr.data, shared_init(pr.data, w, 7), w, EmConfig{});
    const MixtureParams ref = oracle::plug_in(pr.data.labelled, pr.z1, G);
    EXPECT_LT(oracle::max_abs_diff(fit.params, ref), 1e-8);
    EXPECT_LT(oracle::max_abs_diff(da_fit(pr.data.labelled, pr.data.labels), ref), 1e-8);
    EXPECT_TRUE(fit.converged);
  }
}

TEST(EmFit, ZeroWeightFollowsClusteringEm) {
  std::mt19937_64 rng(34);
  for (int trial = 0; trial < 10; ++trial) {
    const int G = 2 + trial % 2;
    const int p = 1 + trial % 3;
    const Problem pr = random_problem(rng, G, p, 20, 150, 2.0);
    const SupervisionWeight w(0.0);
    const MixtureParams init = shared_init(pr.data, w, 11);
    EmConfig cfg;
    cfg.keep_trajectory = true;
    cfg.max_iter = 200;
    const FitResult fit = em_fit_from(pr.data, init, w, cfg);
    const auto ref = oracle::clustering_em(pr.data.unlabelled, init, cfg.epsilon, cfg.max_iter);
    ASSERT_EQ(fit.trajectory.size(), ref.params.size());
    for (std::size_t t = 0; t < ref.params.size(); ++t) {
      ASSERT_LT(oracle::max_abs_diff(fit.trajectory[t], ref.params[t]), 1e-10) << "iteration " << t;
      ASSERT_NEAR(fit.wll_trace[t], ref.loglik[t], 1e-8);
    }
  }
}

TEST(EmFit, EqualWeightFollowsClassificationEm) {
  std::mt19937_64 rng(35);
  for (int trial = 0; trial < 10; ++trial) {
    const int G = 2 + trial % 2;
    const int p = 1 + trial % 3;
    const Problem pr = random_problem(rng, G, p, 30, 120, 2.0);
    const SupervisionWeight w(0.5);
    const MixtureParams init = shared_init(pr.data, w, 13);
    EmConfig cfg;
    cfg.keep_trajectory = true;
    cfg.max_iter = 200;
    const FitResult fit = em_fit_from(pr.data, init, w, cfg);
    // The weighted objective is half the unweighted one, so the stopping
    // threshold doubles on the unweighted scale.
    const auto ref = oracle::classification_em(pr.data.labelled, pr.z1, pr.data.unlabelled, init,
                                               2 * cfg.epsilon, cfg.max_iter);
    ASSERT_EQ(fit.trajectory.size(), ref.params.size());
    for (std::size_t t = 0; t < ref.params.size(); ++t) {
      ASSERT_LT(oracle::max_abs_diff(fit.trajectory[t], ref.params[t]), 1e-10) << "iteration " << t;
      ASSERT_NEAR(2 * fit.wll_trace[t], ref.loglik[t], 1e-8);
    }
  }
}

TEST(EmFit, TraceIsMonotone) {
  std::mt19937_64 rng(36);
  int fitted = 0;
  for (int trial = 0; trial < 150; ++trial) {
    const int G = 1 + trial % 3;
    const int p = std::vector<int>{1, 2, 5}[static_cast<std::size_t>(trial / 3 % 3)];
    const double lambda = (trial % 11) / 10.0;
    const Problem pr = random_problem(rng, G, p, 10 * G + 2 * p, 120, 1.5);
    EmConfig cfg;
    cfg.seed = static_cast<std::uint64_t>(trial);
    cfg.restarts = 3;
    try {
      const FitResult fit = em_fit(pr.data, G, SupervisionWeight(lambda), cfg);
      ++fitted;
      ASSERT_GE(fit.wll_trace.size(), 2u);
      for (std::size_t t = 1; t < fit.wll_trace.size(); ++t) {
        const double prev = fit.wll_trace[t - 1];
        ASSERT_GE(fit.wll_trace[t], prev - 1e-9 * (1 + std::abs(prev))) << "trial " << trial << " step " << t;
      }
    } catch (const Error&) {
    }
  }
  EXPECT_GE(fitted, 140);
}

TEST(EmFit, ConvergedFitIsFixedPoint) {
  std::mt19937_64 rng(37);
  for (int trial = 0; trial < 10; ++trial) {
    const double lambda = 0.1 * (1 + trial % 9);
    const Problem pr = random_problem(rng, 2, 2, 30, 150, 4.0);
    const SupervisionWeight w(lambda);
    EmConfig cfg;
    cfg.epsilon = 1e-12;
    cfg.max_iter = 5000;
    const FitResult fit = em_fit_from(pr.data, shared_init(pr.data, w, 3), w, cfg);
    ASSERT_TRUE(fit.converged);
    const MixtureParams again = weighted_m_step(pr.data, responsibilities(pr.data.unlabelled, fit.params), w);
    EXPECT_LT(oracle::max_abs_diff(again, fit.params), 1e-6);
  }
}

TEST(WeightedMStep, EachBlockBeatsPerturbations) {
  std::mt19937_64 rng(38);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    const int G = 2 + trial % 2;
    const int p = 1 + trial % 3;
    const SupervisionWeight w(0.1 * (trial % 10) + 0.05);
    const Problem pr = random_problem(rng, G, p, 30, 100);
    const MatrixXd resp = oracle::posterior(pr.data.unlabelled, oracle::random_mixture(rng, G, p));
    const MixtureParams best = weighted_m_step(pr.data, resp, w);
    const double top = objective(pr.data, resp, w, best);
    for (int k = 0; k < 20; ++k) {
      MixtureParams a = best;
      for (int g = 0; g < G; ++g) a.pi(g) *= 1 + 0.01 * u(rng);
      a.pi /= a.pi.sum();
      EXPECT_LE(objective(pr.data, resp, w, a), top + 1e-9);

      MixtureParams b = best;
      for (auto& c : b.components) {
        for (Eigen::Index i = 0; i < p; ++i) c.mean(i) += 0.01 * u(rng) * (std::abs(c.mean(i)) + 1e-3);
      }
      EXPECT_LE(objective(pr.data, resp, w, b), top + 1e-9);

      MixtureParams s = best;
      for (auto& c : s.components) {
        MatrixXd e(p, p);
        for (Eigen::Index i = 0; i < p * p; ++i) e.data()[i] = 0.005 * u(rng);
        const MatrixXd t = MatrixXd::Identity(p, p) + e;
        c.covariance = t * c.covariance * t.transpose();
      }
      EXPECT_LE(objective(pr.data, resp, w, s), top + 1e-9);
    }
  }
}

TEST(WeightedMStep, EmptyComponentIsDegenerate) {
  std::mt19937_64 rng(39);
  const Problem pr = random_problem(rng, 2, 2, 10, 30);
  MatrixXd resp = MatrixXd::Zero(30, 2);
  resp.col(0).setOnes();
  EXPECT_EQ(kind_of([&] { weighted_m_step(pr.data, resp, SupervisionWeight(0.0)); }),
            ErrorKind::degenerate_component);
}

TEST(WeightedMStep, TooFewSupportingRowsIsSingular) {
  std::mt19937_64 rng(40);
  const Problem pr = random_problem(rng, 2, 3, 6, 30);  // 3 labelled rows per class, p = 3
  const MatrixXd resp = MatrixXd::Constant(30, 2, 0.5);
  EXPECT_EQ(kind_of([&] { weighted_m_step(pr.data, resp, SupervisionWeight(1.0)); }),
            ErrorKind::singular_covariance);
  EXPECT_NO_THROW(weighted_m_step(pr.data, resp, SupervisionWeight(0.5)));
}

TEST(EmFit, PreconditionErrors) {
  std::mt19937_64 rng(41);
  const Problem pr = random_problem(rng, 2, 2, 20, 30);
  const SupervisionWeight full(1.0);
  const MixtureParams init = shared_init(pr.data, full, 1);

  const std::vector<int> one_class(20, 0);
  const SupervisedDataset missing(pr.data.labelled, one_class, 2, pr.data.unlabelled);
  EXPECT_EQ(kind_of([&] { em_fit_from(missing, init, full, EmConfig{}); }), ErrorKind::insufficient_labels);

  const SupervisedDataset unlabelled_only(MatrixXd(0, 2), std::vector<int>{}, 2, pr.data.unlabelled);
  EXPECT_EQ(kind_of([&] { em_fit_from(unlabelled_only, init, SupervisionWeight(0.5), EmConfig{}); }),
            ErrorKind::insufficient_labels);

  EmConfig bad;
  bad.epsilon = 0.0;
  EXPECT_EQ(kind_of([&] { em_fit_from(pr.data, init, full, bad); }), ErrorKind::input);
}

TEST(EmFit, TraceStartsAtInitialValue) {
  std::mt19937_64 rng(42);
  const Problem pr = random_problem(rng, 2, 2, 20, 80);
  const SupervisionWeight w(0.4);
  const MixtureParams init = shared_init(pr.data, w, 5);
  const FitResult fit = em_fit_from(pr.data, init, w, EmConfig{});
  EXPECT_NEAR(fit.wll_trace.front(), weighted_log_likelihood(pr.data, init, w), 1e-9);
  EXPECT_EQ(static_cast<int>(fit.wll_trace.size()), fit.iterations + 1);
  EXPECT_EQ(fit.hard_assignments, hard_assignments(fit.resp));
  if (fit.converged) EXPECT_LT(fit.wll_trace.back() - fit.wll_trace[fit.wll_trace.size() - 2], 1e-5);
}

TEST(EmFit, Deterministic) {
  std::mt19937_64 rng(43);
  const Problem pr = random_problem(rng, 3, 2, 30, 120, 2.0);
  EmConfig cfg;
  cfg.seed = 99;
  const FitResult a = em_fit(pr.data, 3, SupervisionWeight(0.3), cfg);
  const FitResult b = em_fit(pr.data, 3, SupervisionWeight(0.3), cfg);
  EXPECT_EQ(a.wll_trace, b.wll_trace);
  EXPECT_EQ(oracle::max_abs_diff(a.params, b.params), 0.0);
  EXPECT_EQ(a.hard_assignments, b.hard_assignments);
}

TEST(KmeansInit, SingleComponentIsPooledMoments) {
  std::mt19937_64 rng(44);
  const Problem pr = random_problem(rng, 1, 3, 10, 40);
  const MixtureParams m = kmeans_init(pr.data, 1, SupervisionWeight(0.5), 1);
  MatrixXd pooled(50, 3);
  pooled << pr.data.labelled, pr.data.unlabelled;
  const VectorXd mu = pooled.colwise().mean().transpose();
  const MatrixXd c = pooled.rowwise() - mu.transpose();
  EXPECT_LT((m.components[0].mean - mu).norm(), 1e-12);
  EXPECT_LT((m.components[0].covariance - c.transpose() * c / 50.0).norm(), 1e-12);
}

TEST(KmeansInit, SeparatedClustersAlignToLabels) {
  std::mt19937_64 rng(45);
  for (int trial = 0; trial < 10; ++trial) {
    const Problem pr = random_problem(rng, 3, 2, 9, 90, 30.0);
    const InitialPartition part = initial_partition(pr.data, 3, 5, static_cast<std::uint64_t>(trial));
    EXPECT_EQ(part.unlabelled_classes, pr.z2);
  }
}

TEST(KmeansInit, NoLabelsIsDeterministic) {
  std::mt19937_64 rng(46);
  const Problem pr = random_problem(rng, 3, 2, 0, 90);
  const auto a = initial_partition(pr.data, 3, 5, 17).unlabelled_classes;
  const auto b = initial_partition(pr.data, 3, 5, 17).unlabelled_classes;
  EXPECT_EQ(a, b);
}

TEST(KmeansInit, TooFewDistinctRowsIsInitError) {
  MatrixXd x2(6, 2);
  x2 << 1, 1, 1, 1, 1, 1, 2, 2, 2, 2, 2, 2;
  const SupervisedDataset d(MatrixXd(0, 2), std::vector<int>{}, 3, x2);
  EXPECT_EQ(kind_of([&] { initial_partition(d, 3, 2, 1); }), ErrorKind::init);
}

TEST(AlignClusters, MatchesExhaustiveSearch) {
  std::mt19937_64 rng(47);
  for (const int k : {2, 3, 5, 7}) {
    for (int trial = 0; trial < 20; ++trial) {
      std::uniform_int_distribution<int> u(0, k - 1);
      std::vector<int> clusters(60), classes(60);
      for (std::size_t i = 0; i < 60; ++i) {
        classes[i] = u(rng);
        clusters[i] = (classes[i] + 2) % k;
        if (u(rng) == 0) clusters[i] = u(rng);
      }
      const auto score = [&](const std::vector<int>& perm) {
        int s = 0;
        for (std::size_t i = 0; i < 60; ++i) s += perm[static_cast<std::size_t>(clusters[i])] == classes[i];
        return s;
      };
      std::vector<int> perm(static_cast<std::size_t>(k));
      std::iota(perm.begin(), perm.end(), 0);
      int best = -1;
      do best = std::max(best, score(perm));
      while (std::next_permutation(perm.begin(), perm.end()));
      const auto got = align_clusters(clusters, classes, k);
      std::vector<int> sorted = got;
      std::sort(sorted.begin(), sorted.end());
      std::vector<int> identity(static_cast<std::size_t>(k));
      std::iota(identity.begin(), identity.end(), 0);
      ASSERT_EQ(sorted, identity);
      EXPECT_EQ(score(got), best) << "k=" << k;
    }
  }
}

TEST(Kmeans, BestRestartIsReproducible) {
  std::mt19937_64 rng(48);
  const MatrixXd x = oracle::normal_matrix(rng, 100, 3);
  const KMeansResult a = kmeans(x, 4, 10, 5);
  const KMeansResult b = kmeans(x, 4, 10, 5);
  EXPECT_EQ(a.assignment, b.assignment);
  EXPECT_EQ(a.within_ss, b.within_ss);
  double wss = 0.0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    wss += (x.row(i) - a.centres.row(a.assignment[static_cast<std::size_t>(i)])).squaredNorm();
  }
  EXPECT_NEAR(wss, a.within_ss, 1e-9);
}
