#include <algorithm>
#include <limits>
#include <numeric>
#include <random>
#include <set>
#include <string>

#include "fsc/error.hpp"
#include "fsc/wl_em.hpp"

namespace fsc {

namespace {

std::size_t count_distinct_rows(const Eigen::MatrixXd& rows, std::size_t cap) {
  std::set<std::vector<double>> seen;
  for (Eigen::Index i = 0; i < rows.rows() && seen.size() < cap; ++i) {
    std::vector<double> r(static_cast<std::size_t>(rows.cols()));
    for (Eigen::Index c = 0; c < rows.cols(); ++c) r[static_cast<std::size_t>(c)] = rows(i, c);
    seen.insert(std::move(r));
  }
  return seen.size();
}

Eigen::MatrixXd plus_plus_seeds(const Eigen::MatrixXd& rows, int k, std::mt19937_64& rng) {
  const Eigen::Index n = rows.rows();
  Eigen::MatrixXd centres(k, rows.cols());
  std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
  centres.row(0) = rows.row(pick(rng));
  Eigen::VectorXd d2 = (rows.rowwise() - centres.row(0)).rowwise().squaredNorm();
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int c = 1; c < k; ++c) {
    const double total = d2.sum();
    Eigen::Index chosen = n - 1;
    if (total > 0.0) {
      double target = unit(rng) * total;
      for (Eigen::Index i = 0; i < n; ++i) {
        target -= d2(i);
        if (target < 0.0) {
          chosen = i;
          break;
        }
      }
    } else {
      chosen = pick(rng);
    }
    centres.row(c) = rows.row(chosen);
    d2 = d2.cwiseMin((rows.rowwise() - centres.row(c)).rowwise().squaredNorm());
  }
  return centres;
}

KMeansResult lloyd(const Eigen::MatrixXd& rows, Eigen::MatrixXd centres, int max_iter) {
  const Eigen::Index n = rows.rows();
  const auto k = static_cast<int>(centres.rows());
  KMeansResult out;
  out.assignment.assign(static_cast<std::size_t>(n), -1);
  Eigen::VectorXd best_d2(n);

  for (int it = 0; it < max_iter; ++it) {
    bool changed = false;
    for (Eigen::Index i = 0; i < n; ++i) {
      int best = 0;
      double bd = std::numeric_limits<double>::infinity();
      for (int c = 0; c < k; ++c) {
        const double d = (rows.row(i) - centres.row(c)).squaredNorm();
        if (d < bd) {
          bd = d;
          best = c;
        }
      }
      best_d2(i) = bd;
      if (out.assignment[static_cast<std::size_t>(i)] != best) {
        out.assignment[static_cast<std::size_t>(i)] = best;
        changed = true;
      }
    }
    if (!changed && it > 0) break;

    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, rows.cols());
    std::vector<int> counts(static_cast<std::size_t>(k), 0);
    for (Eigen::Index i = 0; i < n; ++i) {
      const int c = out.assignment[static_cast<std::size_t>(i)];
      sums.row(c) += rows.row(i);
      ++counts[static_cast<std::size_t>(c)];
    }
    for (int c = 0; c < k; ++c) {
      if (counts[static_cast<std::size_t>(c)] > 0) {
        centres.row(c) = sums.row(c) / counts[static_cast<std::size_t>(c)];
      } else {
        // Empty cluster: move it to the point farthest from its centre.
        Eigen::Index far = 0;
        best_d2.maxCoeff(&far);
        centres.row(c) = rows.row(far);
        best_d2(far) = 0.0;
      }
    }
  }

  out.within_ss = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    out.within_ss += (rows.row(i) - centres.row(out.assignment[static_cast<std::size_t>(i)])).squaredNorm();
  }
  out.centres = std::move(centres);
  return out;
}

// Hungarian algorithm (potentials form) for a square cost matrix.
std::vector<int> hungarian_min(const Eigen::MatrixXd& cost) {
  const auto n = static_cast<int>(cost.rows());
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<bool> used(n + 1, false);
    do {
      used[j0] = true;
      const int i0 = p[j0];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> row_to_col(n, 0);
  for (int j = 1; j <= n; ++j) row_to_col[p[j] - 1] = j - 1;
  return row_to_col;
}

}  // namespace

KMeansResult kmeans(const Eigen::MatrixXd& rows, int k, int restarts, std::uint64_t seed,
                    int max_iter) {
  if (k < 1) throw Error(ErrorKind::input, "k-means needs k >= 1");
  if (restarts < 1) throw Error(ErrorKind::input, "k-means needs at least one restart");
  if (rows.rows() < k || count_distinct_rows(rows, static_cast<std::size_t>(k)) < static_cast<std::size_t>(k)) {
    throw Error(ErrorKind::init, "fewer distinct observations than clusters (" + std::to_string(k) + ")");
  }
  std::mt19937_64 rng(seed);
  KMeansResult best;
  best.within_ss = std::numeric_limits<double>::infinity();
  for (int r = 0; r < restarts; ++r) {
    KMeansResult run = lloyd(rows, plus_plus_seeds(rows, k, rng), max_iter);
    if (run.within_ss < best.within_ss) best = std::move(run);
  }
  return best;
}

std::vector<int> align_clusters(std::span<const int> clusters, std::span<const int> classes, int k) {
  if (clusters.size() != classes.size()) {
    throw Error(ErrorKind::input, "align_clusters: length mismatch");
  }
  Eigen::MatrixXd agree = Eigen::MatrixXd::Zero(k, k);  // cluster x class
  for (std::size_t j = 0; j < clusters.size(); ++j) {
    if (clusters[j] < 0 || clusters[j] >= k || classes[j] < 0 || classes[j] >= k) {
      throw Error(ErrorKind::input, "align_clusters: index out of range");
    }
    agree(clusters[j], classes[j]) += 1.0;
  }

  std::vector<int> perm(static_cast<std::size_t>(k));
  std::iota(perm.begin(), perm.end(), 0);
  if (k <= 6) {
    std::vector<int> best = perm;
    double best_score = -1.0;
    do {
      double score = 0.0;
      for (int c = 0; c < k; ++c) score += agree(c, perm[static_cast<std::size_t>(c)]);
      if (score > best_score) {
        best_score = score;
        best = perm;
      }
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
  }
  return hungarian_min(-agree);
}

}  // namespace fsc
