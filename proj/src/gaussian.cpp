#include "fsc/gaussian.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fsc/error.hpp"

namespace fsc {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;  // log(2 pi)

bool try_factor(const Eigen::MatrixXd& s, Eigen::MatrixXd& lower) {
  Eigen::LLT<Eigen::MatrixXd> llt(s);
  if (llt.info() != Eigen::Success) return false;
  lower = llt.matrixL();
  for (Eigen::Index i = 0; i < lower.rows(); ++i) {
    const double d = lower(i, i);
    if (!(d > 0.0) || !std::isfinite(d)) return false;
  }
  return lower.allFinite();
}

void check_same_dim(Eigen::Index a, Eigen::Index b, const char* what) {
  if (a != b) {
    throw Error(ErrorKind::input, std::string(what) + ": dimension mismatch (" +
                                      std::to_string(a) + " vs " +
                                      std::to_string(b) + ")");
  }
}

}  // namespace

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::input: return "input";
    case ErrorKind::singular_covariance: return "singular_covariance";
    case ErrorKind::degenerate_component: return "degenerate_component";
    case ErrorKind::insufficient_labels: return "insufficient_labels";
    case ErrorKind::init: return "init";
    case ErrorKind::strategy_unavailable: return "strategy_unavailable";
    case ErrorKind::parse: return "parse";
    case ErrorKind::schema: return "schema";
    case ErrorKind::degenerate_mask: return "degenerate_mask";
    case ErrorKind::undefined_index: return "undefined_index";
  }
  return "unknown";
}

SpdFactor::SpdFactor(const Eigen::MatrixXd& covariance) {
  if (covariance.rows() != covariance.cols() || covariance.rows() == 0) {
    throw Error(ErrorKind::input, "covariance must be a non-empty square matrix");
  }
  if (!covariance.allFinite()) {
    throw Error(ErrorKind::input, "covariance has non-finite entries");
  }
  const Eigen::MatrixXd sym = 0.5 * (covariance + covariance.transpose());
  if (!try_factor(sym, lower_)) {
    const double p = static_cast<double>(sym.rows());
    const double scale = std::max(sym.trace() / p, 0.0);
    bool ok = false;
    for (const double delta : {1e-8, 1e-6}) {
      ridge_ = delta * scale;
      if (ridge_ > 0.0 &&
          try_factor(sym + ridge_ * Eigen::MatrixXd::Identity(sym.rows(), sym.cols()),
                     lower_)) {
        ok = true;
        break;
      }
    }
    if (!ok) {
      throw Error(ErrorKind::singular_covariance,
                  "covariance is not positive definite after ridge regularization");
    }
  }
  log_det_ = 2.0 * lower_.diagonal().array().log().sum();
}

double SpdFactor::mahalanobis_sq(const Eigen::VectorXd& d) const {
  const Eigen::VectorXd y = lower_.triangularView<Eigen::Lower>().solve(d);
  return y.squaredNorm();
}

Eigen::MatrixXd SpdFactor::solve(const Eigen::MatrixXd& rhs) const {
  Eigen::MatrixXd y = lower_.triangularView<Eigen::Lower>().solve(rhs);
  return lower_.transpose().triangularView<Eigen::Upper>().solve(y);
}

double log_density(const Eigen::VectorXd& x, const Eigen::VectorXd& mean,
                   const SpdFactor& factor) {
  check_same_dim(x.size(), mean.size(), "log_density");
  check_same_dim(x.size(), factor.dim(), "log_density");
  const double p = static_cast<double>(x.size());
  return -0.5 * (p * kLog2Pi + factor.log_det() + factor.mahalanobis_sq(x - mean));
}

double log_density(const Eigen::VectorXd& x, const GaussianParams& g) {
  check_same_dim(g.mean.size(), g.covariance.rows(), "log_density");
  return log_density(x, g.mean, SpdFactor(g.covariance));
}

Eigen::VectorXd log_density_rows(const Eigen::MatrixXd& rows,
                                 const Eigen::VectorXd& mean,
                                 const SpdFactor& factor) {
  check_same_dim(rows.cols(), mean.size(), "log_density_rows");
  check_same_dim(rows.cols(), factor.dim(), "log_density_rows");
  if (rows.rows() == 0) return Eigen::VectorXd(0);
  // Columns of `centred` are observations.
  Eigen::MatrixXd centred = rows.transpose().colwise() - mean;
  factor.lower().triangularView<Eigen::Lower>().solveInPlace(centred);
  const double p = static_cast<double>(rows.cols());
  const double constant = -0.5 * (p * kLog2Pi + factor.log_det());
  return (constant - 0.5 * centred.colwise().squaredNorm().array()).matrix().transpose();
}

double gaussian_kl(const GaussianParams& g1, const SpdFactor& f1,
                   const GaussianParams& g2, const SpdFactor& f2) {
  check_same_dim(g1.dim(), g2.dim(), "gaussian_kl");
  const double p = static_cast<double>(g1.dim());
  // Tr(S2^-1 S1) = ||L2^-1 L1||_F^2 using the factored forms.
  const Eigen::MatrixXd m = f2.lower().triangularView<Eigen::Lower>().solve(f1.lower());
  const double trace_term = m.squaredNorm();
  const double quad = f2.mahalanobis_sq(g1.mean - g2.mean);
  const double kl = 0.5 * (f2.log_det() - f1.log_det() + trace_term - p + quad);
  return kl < 0.0 ? 0.0 : kl;
}

double gaussian_kl(const GaussianParams& g1, const GaussianParams& g2) {
  check_same_dim(g1.dim(), g2.dim(), "gaussian_kl");
  return gaussian_kl(g1, SpdFactor(g1.covariance), g2, SpdFactor(g2.covariance));
}

}  // namespace fsc
