#include "fsc/sim.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <exception>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>
#include <random>
#include <thread>
#include <tuple>

#include "fsc/error.hpp"

namespace fsc {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::string describe(const Error& e) { return std::string(to_string(e.kind())) + ": " + e.what(); }

// Largest-remainder split of `total` proportional to `sizes`.
std::vector<long> proportional_quotas(const std::vector<long>& sizes, long total) {
  const long n = std::accumulate(sizes.begin(), sizes.end(), 0L);
  std::vector<long> q(sizes.size());
  std::vector<std::pair<double, std::size_t>> rem;
  long used = 0;
  for (std::size_t g = 0; g < sizes.size(); ++g) {
    const double exact = static_cast<double>(total) * static_cast<double>(sizes[g]) / static_cast<double>(n);
    q[g] = static_cast<long>(std::floor(exact));
    used += q[g];
    rem.emplace_back(exact - static_cast<double>(q[g]), g);
  }
  std::stable_sort(rem.begin(), rem.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t i = 0; used < total && i < rem.size(); ++i, ++used) ++q[rem[i].second];
  return q;
}

struct EvalTruth {
  Partition truth;             // evaluation truth
  const MaskedData* masked = nullptr;
  bool all_rows = false;

  Partition predicted(const std::vector<int>& unlabelled_assign) const {
    if (!all_rows) return unlabelled_assign;
    Partition out = masked->labelled_truth;
    out.insert(out.end(), unlabelled_assign.begin(), unlabelled_assign.end());
    return out;
  }
};

ResultRow fit_row(const FitResult& fit, const EvalTruth& eval) {
  ResultRow row;
  row.wll = fit.wll_trace.back();
  row.iters = fit.iterations;
  row.converged = fit.converged;
  try {
    row.ari = ari(eval.predicted(fit.hard_assignments), eval.truth);
  } catch (const Error& e) {
    row.error = describe(e);
    row.ari = kNaN;
  }
  return row;
}

ResultRow failed_row(const std::string& error) {
  ResultRow row;
  row.error = error;
  row.ari = kNaN;
  row.wll = kNaN;
  return row;
}

double kl_or_nan(const MixtureParams& a, const MixtureParams& b) {
  try {
    return mixture_kl_matched(a, b);
  } catch (const Error&) {
    return kNaN;
  }
}

// All rows for one (design point, replicate) unit across every mask level.
std::vector<ResultRow> run_unit(const ExperimentConfig& cfg, std::size_t delta_idx, int rep) {
  const bool real = cfg.dataset.has_value();
  const int G = cfg.num_components();
  Sample sample;
  if (real) {
    sample.x = cfg.dataset->x;
    sample.truth = cfg.dataset->truth;
  } else {
    SimSpec spec = cfg.sim;
    spec.delta = cfg.deltas[delta_idx];
    spec.seed = derive_seed(cfg.seed, {seed_purpose::simulate, delta_idx, static_cast<std::uint64_t>(rep)});
    sample = simulate(spec);
  }
  const double delta = real ? kNaN : cfg.deltas[delta_idx];

  std::vector<ResultRow> rows;
  const auto emit = [&](ResultRow row, double p, double lambda, const std::string& strategy) {
    row.replicate = rep;
    row.delta = delta;
    row.p = p;
    row.lambda = lambda;
    row.strategy = strategy;
    rows.push_back(std::move(row));
  };

  for (std::size_t mi = 0; mi < cfg.masks.size(); ++mi) {
    const double p = cfg.masks[mi];
    const auto emit_all_failed = [&](const std::string& error) {
      for (const double l : cfg.grid.values()) emit(failed_row(error), p, l, "grid");
      for (const Strategy s : cfg.strategies) emit(failed_row(error), p, kNaN, to_string(s));
    };
    const std::uint64_t mask_seed =
        derive_seed(cfg.seed, {seed_purpose::mask, delta_idx, mi, static_cast<std::uint64_t>(rep)});
    const std::uint64_t init_seed =
        derive_seed(cfg.seed, {seed_purpose::init, delta_idx, mi, static_cast<std::uint64_t>(rep)});

    MaskedData masked;
    try {
      // Fits that need every class labelled fail on their own; the rest
      // still run on a mask that missed a class.
      masked = mask_labels(sample.truth, sample.x, G, MaskSpec{p, cfg.mode}, mask_seed, true);
    } catch (const Error& e) {
      emit_all_failed(describe(e));
      continue;
    }
    EvalTruth eval;
    eval.masked = &masked;
    eval.all_rows = cfg.ari_all_rows;
    eval.truth = masked.unlabelled_truth;
    if (cfg.ari_all_rows) {
      eval.truth = masked.labelled_truth;
      eval.truth.insert(eval.truth.end(), masked.unlabelled_truth.begin(), masked.unlabelled_truth.end());
    }

    InitialPartition init;
    try {
      init = initial_partition(masked.data, G, cfg.em.restarts, init_seed);
    } catch (const Error& e) {
      emit_all_failed(describe(e));
      continue;
    }
    EmConfig em = cfg.em;
    em.seed = init_seed;
    em.keep_trajectory = false;
    const GridSweep sweep = sweep_grid(masked.data, G, cfg.grid, init, em);

    std::vector<std::optional<std::vector<int>>> assignments(cfg.grid.size());
    for (std::size_t i = 0; i < cfg.grid.size(); ++i) {
      if (!sweep.fits[i]) {
        emit(failed_row(sweep.errors[i]), p, cfg.grid[i], "grid");
        continue;
      }
      ResultRow row = fit_row(*sweep.fits[i], eval);
      const MixtureParams& fit = sweep.fits[i]->params;
      row.kl_da_fwd = sweep.da_anchor ? kl_or_nan(sweep.da_anchor->params, fit) : kNaN;
      row.kl_da_rev = sweep.da_anchor ? kl_or_nan(fit, sweep.da_anchor->params) : kNaN;
      row.kl_clust_fwd = sweep.clust_anchor ? kl_or_nan(sweep.clust_anchor->params, fit) : kNaN;
      row.kl_clust_rev = sweep.clust_anchor ? kl_or_nan(fit, sweep.clust_anchor->params) : kNaN;
      assignments[i] = eval.predicted(sweep.fits[i]->hard_assignments);
      emit(std::move(row), p, cfg.grid[i], "grid");
    }

    const auto fit_at = [&](double lambda) -> ResultRow {
      if (const auto i = cfg.grid.find(lambda)) {
        if (!sweep.fits[*i]) return failed_row(sweep.errors[*i]);
        return fit_row(*sweep.fits[*i], eval);
      }
      try {
        const SupervisionWeight w(lambda);
        return fit_row(em_fit_from(masked.data, initial_params(masked.data, init, w), w, em), eval);
      } catch (const Error& e) {
        return failed_row(describe(e));
      }
    };

    const long n1 = static_cast<long>(masked.data.n1());
    const long n2 = static_cast<long>(masked.data.n2());
    for (const Strategy s : cfg.strategies) {
      double lambda = kNaN;
      ResultRow row;
      try {
        switch (s) {
          case Strategy::n2_ratio: lambda = lambda_n2(n1, n2); break;
          case Strategy::max_ratio: lambda = lambda_max(n1, n2); break;
          case Strategy::kl1:
          case Strategy::kl2: lambda = select_kl(sweep, s).lambda; break;
          case Strategy::ari_oracle:
            lambda = select_ari_oracle(cfg.grid, assignments, eval.truth).lambda;
            break;
          case Strategy::fixed:
            throw Error(ErrorKind::input, "the fixed strategy is expressed through the grid");
        }
        row = fit_at(lambda);
      } catch (const Error& e) {
        row = failed_row(describe(e));
      }
      emit(std::move(row), p, lambda, to_string(s));
    }
  }
  return rows;
}

double snap(double v) { return std::round(v * 1e9) / 1e9; }

}  // namespace

void SimSpec::validate() const {
  if (n < 2) throw Error(ErrorKind::input, "simulation needs n >= 2");
  if (!(pi > 0.0 && pi < 1.0)) throw Error(ErrorKind::input, "mixing proportion must lie in (0, 1)");
  if (!(delta >= 0.0) || !std::isfinite(delta)) throw Error(ErrorKind::input, "separation must be >= 0");
}

Sample simulate(const SimSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  std::bernoulli_distribution first(spec.pi);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double c = 0.7;
  const double s = std::sqrt(1.0 - c * c);
  Sample out;
  out.x.resize(spec.n, 2);
  out.truth.resize(static_cast<std::size_t>(spec.n));
  for (long i = 0; i < spec.n; ++i) {
    const bool one = first(rng);
    const double z1 = normal(rng);
    const double z2 = normal(rng);
    if (one) {
      out.x(i, 0) = z1;
      out.x(i, 1) = c * z1 + s * z2;
    } else {
      out.x(i, 0) = z1;
      out.x(i, 1) = spec.delta + z2;
    }
    out.truth[static_cast<std::size_t>(i)] = one ? 0 : 1;
  }
  return out;
}

void MaskSpec::validate() const {
  if (!(p_labelled > 0.0 && p_labelled <= 1.0)) {
    throw Error(ErrorKind::input, "labelled fraction must lie in (0, 1]");
  }
}

MaskedData mask_labels(const Partition& truth, const Eigen::MatrixXd& x, int num_classes,
                       const MaskSpec& mask, std::uint64_t seed, bool allow_missing_class) {
  mask.validate();
  const long n = static_cast<long>(x.rows());
  if (static_cast<long>(truth.size()) != n) throw Error(ErrorKind::input, "truth length differs from row count");
  for (const int t : truth) {
    if (t < 0 || t >= num_classes) throw Error(ErrorKind::input, "truth label outside [0, G)");
  }
  const long quota = std::lround(mask.p_labelled * static_cast<double>(n));

  std::vector<char> is_labelled(static_cast<std::size_t>(n), 0);
  if (mask.mode == MaskMode::random) {
    std::vector<long> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0L);
    std::mt19937_64 rng(seed);
    // Partial Fisher-Yates: the first `quota` slots are the sample.
    for (long i = 0; i < quota; ++i) {
      std::uniform_int_distribution<long> pick(i, n - 1);
      std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(pick(rng))]);
      is_labelled[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])] = 1;
    }
  } else {
    if (num_classes != 2) throw Error(ErrorKind::input, "biased masking is defined for two classes");
    std::vector<std::vector<long>> members(2);
    for (long i = 0; i < n; ++i) members[static_cast<std::size_t>(truth[static_cast<std::size_t>(i)])].push_back(i);
    const std::vector<long> quotas =
        proportional_quotas({static_cast<long>(members[0].size()), static_cast<long>(members[1].size())}, quota);
    // Class 0 is labelled from the largest first coordinate down, class 1
    // from the smallest up; index order breaks ties.
    std::stable_sort(members[0].begin(), members[0].end(), [&](long a, long b) { return x(a, 0) > x(b, 0); });
    std::stable_sort(members[1].begin(), members[1].end(), [&](long a, long b) { return x(a, 0) < x(b, 0); });
    for (std::size_t g = 0; g < 2; ++g) {
      for (long k = 0; k < quotas[g]; ++k) is_labelled[static_cast<std::size_t>(members[g][static_cast<std::size_t>(k)])] = 1;
    }
  }

  MaskedData out;
  for (long i = 0; i < n; ++i) {
    (is_labelled[static_cast<std::size_t>(i)] ? out.labelled_rows : out.unlabelled_rows).push_back(i);
  }
  std::vector<long> per_class(static_cast<std::size_t>(num_classes), 0);
  Eigen::MatrixXd x1(static_cast<Eigen::Index>(out.labelled_rows.size()), x.cols());
  Eigen::MatrixXd x2(static_cast<Eigen::Index>(out.unlabelled_rows.size()), x.cols());
  for (std::size_t k = 0; k < out.labelled_rows.size(); ++k) {
    const long i = out.labelled_rows[k];
    x1.row(static_cast<Eigen::Index>(k)) = x.row(i);
    out.labelled_truth.push_back(truth[static_cast<std::size_t>(i)]);
    ++per_class[static_cast<std::size_t>(truth[static_cast<std::size_t>(i)])];
  }
  for (std::size_t k = 0; k < out.unlabelled_rows.size(); ++k) {
    const long i = out.unlabelled_rows[k];
    x2.row(static_cast<Eigen::Index>(k)) = x.row(i);
    out.unlabelled_truth.push_back(truth[static_cast<std::size_t>(i)]);
  }
  if (!allow_missing_class) {
    for (int g = 0; g < num_classes; ++g) {
      if (per_class[static_cast<std::size_t>(g)] == 0) {
        throw Error(ErrorKind::degenerate_mask, "class " + std::to_string(g) + " received no labelled rows");
      }
    }
  }
  out.data = SupervisedDataset(std::move(x1), out.labelled_truth, num_classes, std::move(x2));
  return out;
}

std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path) {
  std::uint64_t s = splitmix64(master);
  for (const std::uint64_t v : path) s = splitmix64(s ^ splitmix64(v + 0x632BE59BD9B4E019ULL));
  return s;
}

int ExperimentConfig::num_components() const {
  return dataset ? dataset->num_classes() : 2;
}

void ExperimentConfig::validate() const {
  if (reps < 1) throw Error(ErrorKind::input, "reps must be at least 1");
  if (jobs < 1) throw Error(ErrorKind::input, "jobs must be at least 1");
  if (masks.empty()) throw Error(ErrorKind::input, "no labelled fractions given");
  for (const double p : masks) MaskSpec{p, mode}.validate();
  if (dataset) {
    if (dataset->x.rows() < 2) throw Error(ErrorKind::input, "dataset needs at least two rows");
    for (const int t : dataset->truth) {
      if (t < 0) throw Error(ErrorKind::input, "benchmark data must be fully labelled");
    }
  } else {
    if (deltas.empty()) throw Error(ErrorKind::input, "no separations given");
    for (const double d : deltas) {
      SimSpec s = sim;
      s.delta = d;
      s.validate();
    }
  }
  for (const Strategy s : strategies) {
    if (s == Strategy::fixed) throw Error(ErrorKind::input, "the fixed strategy is expressed through the grid");
  }
}

ResultTable run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const std::size_t n_design = cfg.dataset ? 1 : cfg.deltas.size();
  const std::size_t n_units = n_design * static_cast<std::size_t>(cfg.reps);
  std::vector<std::vector<ResultRow>> results(n_units);
  std::vector<std::exception_ptr> failures(n_units);
  std::atomic<std::size_t> next{0};

  const auto worker = [&] {
    for (std::size_t u = next++; u < n_units; u = next++) {
      try {
        results[u] = run_unit(cfg, u / static_cast<std::size_t>(cfg.reps),
                              static_cast<int>(u % static_cast<std::size_t>(cfg.reps)));
      } catch (...) {
        failures[u] = std::current_exception();
      }
    }
  };
  const int jobs = std::min<int>(cfg.jobs, static_cast<int>(n_units));
  std::vector<std::thread> pool;
  for (int j = 1; j < jobs; ++j) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (const auto& f : failures) {
    if (f) std::rethrow_exception(f);
  }

  ResultTable table;
  for (auto& unit : results) {
    for (auto& row : unit) table.rows.push_back(std::move(row));
  }
  return table;
}

Aggregates aggregate(const ResultTable& table) {
  // Keys sort NaN separations (real data) first.
  const auto dkey = [](double d) { return std::isnan(d) ? -std::numeric_limits<double>::infinity() : snap(d); };
  using GridKey = std::tuple<double, double, double>;
  struct Acc {
    double delta = 0.0, p = 0.0, lambda = 0.0;
    std::vector<double> ari, lambdas;
    int fail = 0;
    double kl[4] = {0, 0, 0, 0};
    int kl_n = 0;
  };
  std::map<GridKey, Acc> grid;
  std::map<std::tuple<double, double, std::string>, Acc> strat;

  for (const auto& r : table.rows) {
    if (r.strategy == "grid") {
      Acc& a = grid[{dkey(r.delta), snap(r.p), snap(r.lambda)}];
      a.delta = r.delta;
      a.p = r.p;
      a.lambda = r.lambda;
      if (r.ok()) {
        a.ari.push_back(r.ari);
        const double kls[4] = {r.kl_da_fwd, r.kl_clust_fwd, r.kl_da_rev, r.kl_clust_rev};
        if (std::all_of(std::begin(kls), std::end(kls), [](double v) { return std::isfinite(v); })) {
          for (int k = 0; k < 4; ++k) a.kl[k] += kls[k];
          ++a.kl_n;
        }
      } else {
        ++a.fail;
      }
    } else {
      Acc& a = strat[{dkey(r.delta), snap(r.p), r.strategy}];
      a.delta = r.delta;
      a.p = r.p;
      if (r.ok()) {
        a.ari.push_back(r.ari);
        a.lambdas.push_back(r.lambda);
      } else {
        ++a.fail;
      }
    }
  }

  const auto mean_se = [](const std::vector<double>& v) -> std::pair<double, double> {
    if (v.empty()) return {kNaN, kNaN};
    const double m = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    if (v.size() < 2) return {m, kNaN};
    double ss = 0.0;
    for (const double x : v) ss += (x - m) * (x - m);
    return {m, std::sqrt(ss / static_cast<double>(v.size() - 1)) / std::sqrt(static_cast<double>(v.size()))};
  };

  Aggregates out;
  std::map<std::pair<double, double>, StrategyAggregateRow> oracle;
  for (const auto& [key, a] : grid) {
    AggregateRow row;
    row.delta = a.delta;
    row.p = a.p;
    row.lambda = a.lambda;
    std::tie(row.mean_ari, row.se_ari) = mean_se(a.ari);
    row.n_ok = static_cast<int>(a.ari.size());
    row.n_fail = a.fail;
    out.grid.push_back(row);

    KlAggregateRow kl;
    kl.delta = a.delta;
    kl.p = a.p;
    kl.lambda = a.lambda;
    kl.n_ok = a.kl_n;
    const double denom = a.kl_n > 0 ? static_cast<double>(a.kl_n) : kNaN;
    kl.kl_da_fwd = a.kl[0] / denom;
    kl.kl_clust_fwd = a.kl[1] / denom;
    kl.kl_da_rev = a.kl[2] / denom;
    kl.kl_clust_rev = a.kl[3] / denom;
    out.kl.push_back(kl);

    // Grid keys arrive in increasing lambda, so a strict > keeps the
    // smaller weight on ties.
    auto& best = oracle[{std::get<0>(key), std::get<1>(key)}];
    if (row.n_ok > 0 && (best.strategy.empty() || row.mean_ari > best.mean_ari)) {
      best = StrategyAggregateRow{row.delta, row.p, "ari-oracle-mean", row.lambda, row.mean_ari,
                                  row.se_ari, row.n_ok, row.n_fail};
    }
  }
  for (const auto& [key, a] : strat) {
    StrategyAggregateRow row;
    row.delta = a.delta;
    row.p = a.p;
    row.strategy = std::get<2>(key);
    row.mean_lambda = mean_se(a.lambdas).first;
    std::tie(row.mean_ari, row.se_ari) = mean_se(a.ari);
    row.n_ok = static_cast<int>(a.ari.size());
    row.n_fail = a.fail;
    out.strategies.push_back(row);
  }
  for (const auto& [key, row] : oracle) {
    if (!row.strategy.empty()) out.strategies.push_back(row);
  }
  std::stable_sort(out.strategies.begin(), out.strategies.end(), [&](const auto& a, const auto& b) {
    return std::make_tuple(dkey(a.delta), snap(a.p)) < std::make_tuple(dkey(b.delta), snap(b.p));
  });
  return out;
}

std::string format_number(double v) {
  if (std::isnan(v)) return "NA";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

namespace {

std::string percent(double p) { return format_number(std::round(p * 100.0 * 1e9) / 1e9); }

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (const char c : s) {
    if (c == '"') q.push_back('"');
    q.push_back(c);
  }
  return q + "\"";
}

}  // namespace

void write_runs_csv(std::ostream& out, const ResultTable& table) {
  out << "replicate,delta,p,lambda,strategy,ari,wll,iters,converged,error\n";
  for (const auto& r : table.rows) {
    out << r.replicate << ',' << format_number(r.delta) << ',' << percent(r.p) << ','
        << format_number(r.lambda) << ',' << r.strategy << ',' << format_number(r.ari) << ','
        << format_number(r.wll) << ',' << r.iters << ',' << (r.converged ? "true" : "false") << ','
        << csv_field(r.error) << '\n';
  }
}

void write_aggregate_csv(std::ostream& out, const Aggregates& agg) {
  out << "delta,p,lambda,mean_ari,se_ari,n_ok\n";
  for (const auto& r : agg.grid) {
    out << format_number(r.delta) << ',' << percent(r.p) << ',' << format_number(r.lambda) << ','
        << format_number(r.mean_ari) << ',' << format_number(r.se_ari) << ',' << r.n_ok << '\n';
  }
}

void write_strategies_csv(std::ostream& out, const Aggregates& agg) {
  out << "delta,p,strategy,mean_lambda,mean_ari,se_ari,n_ok,n_fail\n";
  for (const auto& r : agg.strategies) {
    out << format_number(r.delta) << ',' << percent(r.p) << ',' << r.strategy << ','
        << format_number(r.mean_lambda) << ',' << format_number(r.mean_ari) << ','
        << format_number(r.se_ari) << ',' << r.n_ok << ',' << r.n_fail << '\n';
  }
}

void write_kl_csv(std::ostream& out, const Aggregates& agg) {
  out << "delta,p,lambda,kl_da_fsc,kl_clust_fsc,kl_fsc_da,kl_fsc_clust,n_ok\n";
  for (const auto& r : agg.kl) {
    out << format_number(r.delta) << ',' << percent(r.p) << ',' << format_number(r.lambda) << ','
        << format_number(r.kl_da_fwd) << ',' << format_number(r.kl_clust_fwd) << ','
        << format_number(r.kl_da_rev) << ',' << format_number(r.kl_clust_rev) << ',' << r.n_ok << '\n';
  }
}

}  // namespace fsc
