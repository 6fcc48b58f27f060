#include "fsc/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "fsc/data_io.hpp"
#include "fsc/error.hpp"
#include "fsc/sim.hpp"
#include "fsc/weight_select.hpp"
#include "fsc/wl_em.hpp"

namespace fsc {

namespace {

using nlohmann::json;

// Flag values validated before any computation; a failure exits with 2.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Options {
  // data
  std::string data;
  std::string schema_file;
  std::string class_col;
  std::vector<std::string> feature_cols;
  bool standardize = false;
  int components = 0;
  // weights
  std::optional<double> lambda;
  std::vector<std::string> strategies;
  std::string grid = "0:1:0.1";
  // masking
  std::vector<double> labelled_frac;
  std::vector<double> p_percent;
  bool bias = false;
  bool all_rows = false;
  // simulation
  std::vector<double> deltas;
  long n = 300;
  double pi = 0.5;
  int reps = 100;
  // run control
  std::optional<std::uint64_t> seed;
  int jobs = 0;
  std::string out;
  bool json = false;
  double epsilon = 1e-5;
  int max_iter = 1000;
  int restarts = 10;
  bool dry_run = false;
};

json number(double v) { return std::isnan(v) ? json(nullptr) : json(v); }

json to_json(const MixtureParams& m) {
  json comps = json::array();
  for (int g = 0; g < m.num_components(); ++g) {
    const auto& c = m.components[static_cast<std::size_t>(g)];
    json cov = json::array();
    for (Eigen::Index r = 0; r < c.covariance.rows(); ++r) {
      json row = json::array();
      for (Eigen::Index k = 0; k < c.covariance.cols(); ++k) row.push_back(c.covariance(r, k));
      cov.push_back(row);
    }
    json mean = json::array();
    for (Eigen::Index k = 0; k < c.mean.size(); ++k) mean.push_back(c.mean(k));
    comps.push_back({{"pi", m.pi(g)}, {"mean", mean}, {"covariance", cov}});
  }
  return comps;
}

std::uint64_t resolve_seed(const Options& o) {
  if (o.seed) return *o.seed;
  if (const char* env = std::getenv("FSC_SEED")) {
    try {
      std::size_t used = 0;
      const unsigned long long v = std::stoull(env, &used);
      if (used == std::string(env).size()) return v;
    } catch (const std::exception&) {
    }
    throw UsageError("FSC_SEED must be an unsigned integer");
  }
  return 0;
}

int resolve_jobs(const Options& o) {
  if (o.jobs > 0) return o.jobs;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

std::vector<double> resolve_masks(const Options& o, bool required) {
  if (!o.labelled_frac.empty() && !o.p_percent.empty()) {
    throw UsageError("give either --labelled-frac or --p, not both");
  }
  std::vector<double> out = o.labelled_frac;
  for (const double p : o.p_percent) out.push_back(p / 100.0);
  for (const double f : out) {
    if (!(f > 0.0 && f <= 1.0)) throw UsageError("labelled fraction must lie in (0, 1] (--p in (0, 100])");
  }
  if (out.empty() && required) return {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
  return out;
}

std::vector<Strategy> resolve_strategies(const Options& o, bool default_all) {
  std::vector<Strategy> out;
  for (const auto& s : o.strategies) {
    try {
      out.push_back(parse_strategy(s));
    } catch (const Error& e) {
      throw UsageError(e.what());
    }
  }
  if (out.empty() && default_all) {
    out = {Strategy::n2_ratio, Strategy::max_ratio, Strategy::kl1, Strategy::kl2, Strategy::ari_oracle};
  }
  return out;
}

LambdaGrid resolve_grid(const Options& o) {
  try {
    return LambdaGrid::parse(o.grid);
  } catch (const Error& e) {
    throw UsageError(std::string("--grid: ") + e.what());
  }
}

EmConfig resolve_em(const Options& o) {
  if (!(o.epsilon > 0.0)) throw UsageError("--epsilon must be positive");
  if (o.max_iter < 1) throw UsageError("--max-iter must be at least 1");
  if (o.restarts < 1) throw UsageError("--restarts must be at least 1");
  EmConfig em;
  em.epsilon = o.epsilon;
  em.max_iter = o.max_iter;
  em.restarts = o.restarts;
  return em;
}

DatasetSchema resolve_schema(const Options& o, bool allow_unlabelled) {
  DatasetSchema schema;
  if (!o.schema_file.empty()) schema = load_schema_file(o.schema_file);
  if (!o.class_col.empty()) schema.class_column = o.class_col;
  if (!o.feature_cols.empty()) schema.feature_columns = o.feature_cols;
  if (o.standardize) schema.standardize = true;
  if (schema.class_column.empty()) throw UsageError("--class-col (or a schema file) is required");
  schema.allow_unlabelled = allow_unlabelled;
  return schema;
}

int resolve_components(const Options& o, const Dataset& d) {
  const int g = o.components > 0 ? o.components : d.num_classes();
  if (g < d.num_classes()) {
    throw Error(ErrorKind::input, "--components is smaller than the number of classes in the data");
  }
  if (g < 1) throw Error(ErrorKind::input, "no classes found in the data");
  return g;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorKind::input, "cannot write " + path.string());
  f << text;
}

// ---------------------------------------------------------------- fit ----

struct PreparedData {
  Dataset raw;
  MaskedData masked;
  bool truth_known = false;  // unlabelled truth available (masked mode)
  int components = 0;
};

PreparedData prepare(const Options& o, const std::vector<double>& masks, std::uint64_t seed) {
  PreparedData prep;
  const bool masking = !masks.empty();
  prep.raw = load_csv(o.data, resolve_schema(o, !masking));
  prep.components = resolve_components(o, prep.raw);
  if (masking) {
    prep.masked = mask_labels(prep.raw.truth, prep.raw.x, prep.components,
                              MaskSpec{masks.front(), o.bias ? MaskMode::biased : MaskMode::random},
                              derive_seed(seed, {2}));
    prep.truth_known = true;
  } else {
    MaskedData& m = prep.masked;
    for (long i = 0; i < static_cast<long>(prep.raw.truth.size()); ++i) {
      (prep.raw.truth[static_cast<std::size_t>(i)] >= 0 ? m.labelled_rows : m.unlabelled_rows).push_back(i);
    }
    Eigen::MatrixXd x1(static_cast<Eigen::Index>(m.labelled_rows.size()), prep.raw.x.cols());
    Eigen::MatrixXd x2(static_cast<Eigen::Index>(m.unlabelled_rows.size()), prep.raw.x.cols());
    for (std::size_t k = 0; k < m.labelled_rows.size(); ++k) {
      x1.row(static_cast<Eigen::Index>(k)) = prep.raw.x.row(m.labelled_rows[k]);
      m.labelled_truth.push_back(prep.raw.truth[static_cast<std::size_t>(m.labelled_rows[k])]);
    }
    for (std::size_t k = 0; k < m.unlabelled_rows.size(); ++k) {
      x2.row(static_cast<Eigen::Index>(k)) = prep.raw.x.row(m.unlabelled_rows[k]);
    }
    m.data = SupervisedDataset(std::move(x1), m.labelled_truth, prep.components, std::move(x2));
  }
  return prep;
}

struct Choice {
  double lambda = 0.0;
  std::string strategy = "fixed";
  std::optional<WeightChoice> detail;
};

Choice choose_weight(const Options& o, const PreparedData& prep, Strategy s, const LambdaGrid& grid,
                     const EmConfig& em, const InitialPartition& init) {
  const auto& d = prep.masked.data;
  Choice c;
  c.strategy = to_string(s);
  switch (s) {
    case Strategy::fixed:
      if (!o.lambda) throw UsageError("the fixed strategy needs --lambda");
      c.lambda = *o.lambda;
      break;
    case Strategy::n2_ratio: c.lambda = lambda_n2(static_cast<long>(d.n1()), static_cast<long>(d.n2())); break;
    case Strategy::max_ratio: c.lambda = lambda_max(static_cast<long>(d.n1()), static_cast<long>(d.n2())); break;
    case Strategy::kl1:
    case Strategy::kl2:
      c.detail = select_kl(sweep_grid(d, prep.components, grid, init, em), s);
      c.lambda = c.detail->lambda;
      break;
    case Strategy::ari_oracle: {
      if (!prep.truth_known) {
        throw Error(ErrorKind::strategy_unavailable, "ari-oracle needs the true classes of unlabelled rows");
      }
      const GridSweep sweep = sweep_grid(d, prep.components, grid, init, em);
      std::vector<std::optional<std::vector<int>>> assign(grid.size());
      for (std::size_t i = 0; i < grid.size(); ++i) {
        if (sweep.fits[i]) assign[i] = sweep.fits[i]->hard_assignments;
      }
      c.detail = select_ari_oracle(grid, assign, prep.masked.unlabelled_truth);
      c.lambda = c.detail->lambda;
      break;
    }
  }
  return c;
}

Strategy single_strategy(const Options& o) {
  if (o.lambda && !o.strategies.empty()) throw UsageError("give either --lambda or --lambda-strategy");
  if (o.lambda) {
    if (!(*o.lambda >= 0.0 && *o.lambda <= 1.0)) throw UsageError("--lambda must lie in [0, 1]");
    return Strategy::fixed;
  }
  const auto s = resolve_strategies(o, false);
  if (s.size() != 1) throw UsageError("give --lambda or exactly one --lambda-strategy");
  return s.front();
}

int cmd_fit(const Options& o, std::ostream& out) {
  const Strategy strategy = single_strategy(o);
  const auto masks = resolve_masks(o, false);
  if (masks.size() > 1) throw UsageError("fit takes a single labelled fraction");
  const LambdaGrid grid = resolve_grid(o);
  EmConfig em = resolve_em(o);
  const std::uint64_t seed = resolve_seed(o);
  if (o.dry_run) {
    out << json{{"command", "fit"}, {"data", o.data}, {"strategy", to_string(strategy)},
                {"lambda", o.lambda ? json(*o.lambda) : json(nullptr)}, {"labelled_frac", masks},
                {"bias", o.bias}, {"seed", seed}, {"grid", grid.values()}}
               .dump(2)
        << '\n';
    return kExitOk;
  }

  const PreparedData prep = prepare(o, masks, seed);
  em.seed = derive_seed(seed, {3});
  const InitialPartition init = initial_partition(prep.masked.data, prep.components, em.restarts, em.seed);
  const Choice choice = choose_weight(o, prep, strategy, grid, em, init);
  const SupervisionWeight w(choice.lambda);
  const FitResult fit = em_fit_from(prep.masked.data, initial_params(prep.masked.data, init, w), w, em);

  const auto class_name = [&](int g) {
    return g < prep.raw.num_classes() ? prep.raw.class_names[static_cast<std::size_t>(g)]
                                      : "component" + std::to_string(g);
  };
  if (o.json) {
    json rows = json::array();
    for (std::size_t k = 0; k < prep.masked.unlabelled_rows.size(); ++k) {
      json resp = json::array();
      for (Eigen::Index g = 0; g < fit.resp.cols(); ++g) resp.push_back(fit.resp(static_cast<Eigen::Index>(k), g));
      rows.push_back({{"row", prep.masked.unlabelled_rows[k]},
                      {"class", class_name(fit.hard_assignments[k])},
                      {"resp", resp}});
    }
    json classes = json::array();
    for (int g = 0; g < prep.components; ++g) classes.push_back(class_name(g));
    json doc{{"lambda", choice.lambda},
             {"strategy", choice.strategy},
             {"n_labelled", prep.masked.data.n1()},
             {"n_unlabelled", prep.masked.data.n2()},
             {"converged", fit.converged},
             {"iterations", fit.iterations},
             {"wll", fit.wll_trace.back()},
             {"wll_trace", fit.wll_trace},
             {"classes", classes},
             {"components", to_json(fit.params)},
             {"unlabelled", rows}};
    if (prep.truth_known && prep.masked.unlabelled_truth.size() >= 2) {
      doc["ari"] = ari(fit.hard_assignments, prep.masked.unlabelled_truth);
    }
    out << doc.dump(2) << '\n';
  } else {
    out << "row,class";
    for (int g = 0; g < prep.components; ++g) out << ",resp_" << class_name(g);
    out << '\n';
    for (std::size_t k = 0; k < prep.masked.unlabelled_rows.size(); ++k) {
      out << prep.masked.unlabelled_rows[k] << ',' << class_name(fit.hard_assignments[k]);
      for (Eigen::Index g = 0; g < fit.resp.cols(); ++g) {
        out << ',' << format_number(fit.resp(static_cast<Eigen::Index>(k), g));
      }
      out << '\n';
    }
  }
  return kExitOk;
}

int cmd_select_weight(const Options& o, std::ostream& out) {
  const auto masks = resolve_masks(o, false);
  if (masks.size() > 1) throw UsageError("select-weight takes a single labelled fraction");
  if (o.lambda) throw UsageError("select-weight chooses the weight; drop --lambda");
  auto strategies = resolve_strategies(o, true);
  const LambdaGrid grid = resolve_grid(o);
  EmConfig em = resolve_em(o);
  const std::uint64_t seed = resolve_seed(o);
  if (o.dry_run) {
    json names = json::array();
    for (const auto s : strategies) names.push_back(to_string(s));
    out << json{{"command", "select-weight"}, {"data", o.data}, {"strategies", names},
                {"labelled_frac", masks}, {"seed", seed}, {"grid", grid.values()}}
               .dump(2)
        << '\n';
    return kExitOk;
  }
  const PreparedData prep = prepare(o, masks, seed);
  em.seed = derive_seed(seed, {3});
  const InitialPartition init = initial_partition(prep.masked.data, prep.components, em.restarts, em.seed);

  json doc = json::array();
  std::ostringstream csv;
  csv << "strategy,lambda,grid_lambda,criterion,kl_da,kl_clust,error\n";
  for (const Strategy s : strategies) {
    if (s == Strategy::ari_oracle && !prep.truth_known) continue;
    try {
      const Choice c = choose_weight(o, prep, s, grid, em, init);
      json entry{{"strategy", c.strategy}, {"lambda", c.lambda}};
      if (c.detail) {
        json diag = json::array();
        for (std::size_t i = 0; i < grid.size(); ++i) {
          json d{{"lambda", grid[i]}, {"criterion", number(c.detail->diagnostics[i])}};
          if (!c.detail->kl_da.empty()) {
            d["kl_da"] = number(c.detail->kl_da[i]);
            d["kl_clust"] = number(c.detail->kl_clust[i]);
          }
          diag.push_back(d);
          csv << c.strategy << ',' << format_number(c.lambda) << ',' << format_number(grid[i]) << ','
              << format_number(c.detail->diagnostics[i]) << ','
              << format_number(c.detail->kl_da.empty() ? std::nan("") : c.detail->kl_da[i]) << ','
              << format_number(c.detail->kl_clust.empty() ? std::nan("") : c.detail->kl_clust[i]) << ",\n";
        }
        entry["diagnostics"] = diag;
      } else {
        csv << c.strategy << ',' << format_number(c.lambda) << ",NA,NA,NA,NA,\n";
      }
      doc.push_back(entry);
    } catch (const Error& e) {
      doc.push_back({{"strategy", to_string(s)}, {"error", e.what()}});
      csv << to_string(s) << ",NA,NA,NA,NA,NA," << to_string(e.kind()) << '\n';
    }
  }
  out << (o.json ? doc.dump(2) + "\n" : csv.str());
  return kExitOk;
}

// ------------------------------------------------------ sweeps -----------

json plan_json(const ExperimentConfig& cfg, const std::string& command) {
  json names = json::array();
  for (const auto s : cfg.strategies) names.push_back(to_string(s));
  json plan{{"command", command},
            {"masks", cfg.masks},
            {"mode", cfg.mode == MaskMode::biased ? "biased" : "random"},
            {"grid", cfg.grid.values()},
            {"reps", cfg.reps},
            {"strategies", names},
            {"seed", cfg.seed},
            {"jobs", cfg.jobs},
            {"epsilon", cfg.em.epsilon},
            {"max_iter", cfg.em.max_iter},
            {"restarts", cfg.em.restarts}};
  const bool real = command == "benchmark";
  if (!real) {
    plan["deltas"] = cfg.deltas;
    plan["n"] = cfg.sim.n;
    plan["pi"] = cfg.sim.pi;
  }
  const std::size_t designs = real ? 1 : cfg.deltas.size();
  plan["fits_upper_bound"] =
      designs * static_cast<std::size_t>(cfg.reps) * cfg.masks.size() * (cfg.grid.size() + cfg.strategies.size() + 2);
  return plan;
}

int emit_experiment(const Options& o, const ExperimentConfig& cfg, std::ostream& out) {
  const ResultTable table = run_experiment(cfg);
  const Aggregates agg = aggregate(table);
  std::ostringstream runs, aggregate_csv, strategies, kl;
  write_runs_csv(runs, table);
  write_aggregate_csv(aggregate_csv, agg);
  write_strategies_csv(strategies, agg);
  write_kl_csv(kl, agg);
  if (!o.out.empty()) {
    const std::filesystem::path dir(o.out);
    std::filesystem::create_directories(dir);
    write_file(dir / "runs.csv", runs.str());
    write_file(dir / "aggregate.csv", aggregate_csv.str());
    write_file(dir / "strategies.csv", strategies.str());
    write_file(dir / "kl.csv", kl.str());
  }
  if (o.json) {
    json grid = json::array();
    for (const auto& r : agg.grid) {
      grid.push_back({{"delta", number(r.delta)}, {"p", r.p}, {"lambda", r.lambda}, {"mean_ari", number(r.mean_ari)},
                      {"se_ari", number(r.se_ari)}, {"n_ok", r.n_ok}, {"n_fail", r.n_fail}});
    }
    json strat = json::array();
    for (const auto& r : agg.strategies) {
      strat.push_back({{"delta", number(r.delta)}, {"p", r.p}, {"strategy", r.strategy},
                       {"mean_lambda", number(r.mean_lambda)}, {"mean_ari", number(r.mean_ari)},
                       {"se_ari", number(r.se_ari)}, {"n_ok", r.n_ok}, {"n_fail", r.n_fail}});
    }
    out << json{{"aggregate", grid}, {"strategies", strat}}.dump(2) << '\n';
  } else {
    out << aggregate_csv.str();
  }
  return kExitOk;
}

ExperimentConfig common_experiment(const Options& o) {
  if (o.reps < 1) throw UsageError("--reps must be at least 1");
  if (o.lambda) throw UsageError("sweeps use --grid; --lambda applies to fit only");
  ExperimentConfig cfg;
  cfg.masks = resolve_masks(o, true);
  cfg.mode = o.bias ? MaskMode::biased : MaskMode::random;
  cfg.grid = resolve_grid(o);
  cfg.reps = o.reps;
  cfg.strategies = resolve_strategies(o, true);
  for (const auto s : cfg.strategies) {
    if (s == Strategy::fixed) throw UsageError("sweeps evaluate fixed weights through --grid");
  }
  cfg.em = resolve_em(o);
  cfg.seed = resolve_seed(o);
  cfg.jobs = resolve_jobs(o);
  cfg.ari_all_rows = o.all_rows;
  return cfg;
}

int cmd_simulate(const Options& o, std::ostream& out) {
  ExperimentConfig cfg = common_experiment(o);
  if (!o.deltas.empty()) cfg.deltas = o.deltas;
  for (const double d : cfg.deltas) {
    if (!(d >= 0.0)) throw UsageError("--delta must be >= 0");
  }
  if (o.n < 2) throw UsageError("--n must be at least 2");
  if (!(o.pi > 0.0 && o.pi < 1.0)) throw UsageError("--pi must lie in (0, 1)");
  cfg.sim.n = o.n;
  cfg.sim.pi = o.pi;
  if (o.dry_run) {
    out << plan_json(cfg, "simulate").dump(2) << '\n';
    return kExitOk;
  }
  return emit_experiment(o, cfg, out);
}

int cmd_benchmark(const Options& o, std::ostream& out) {
  ExperimentConfig cfg = common_experiment(o);
  if (o.data.empty()) throw UsageError("--data is required");
  const DatasetSchema schema = resolve_schema(o, false);
  if (o.dry_run) {
    json plan = plan_json(cfg, "benchmark");
    plan["data"] = o.data;
    plan["standardize"] = schema.standardize;
    out << plan.dump(2) << '\n';
    return kExitOk;
  }
  cfg.dataset = load_csv(o.data, schema);
  if (o.components > 0 && o.components != cfg.dataset->num_classes()) {
    throw UsageError("benchmark fits one component per class; --components must match the data");
  }
  return emit_experiment(o, cfg, out);
}

// ------------------------------------------------------- wiring ----------

void add_data_options(CLI::App* cmd, Options& o) {
  cmd->add_option("--data", o.data, "CSV file with features and a class column");
  cmd->add_option("--schema", o.schema_file, "key=value schema file (class_col, feature_cols, ...)");
  cmd->add_option("--class-col", o.class_col, "class column name (or 0-based index)");
  cmd->add_option("--feature-cols", o.feature_cols, "feature columns (default: all others)")->delimiter(',');
  cmd->add_flag("--standardize", o.standardize, "z-score every feature column");
}

void add_run_options(CLI::App* cmd, Options& o) {
  cmd->add_option("--seed", o.seed, "master seed (falls back to $FSC_SEED, then 0)");
  cmd->add_option("--epsilon", o.epsilon, "stop when the weighted log-likelihood gains less than this");
  cmd->add_option("--max-iter", o.max_iter, "EM iteration cap");
  cmd->add_option("--restarts", o.restarts, "k-means restarts for initialization");
  cmd->add_option("--grid", o.grid, "weight grid start:end:step or a comma list");
  cmd->add_flag("--json", o.json, "emit one JSON document instead of CSV");
  cmd->add_flag("--dry-run", o.dry_run, "validate flags and print the resolved plan");
}

void add_mask_options(CLI::App* cmd, Options& o) {
  cmd->add_option("--labelled-frac", o.labelled_frac, "labelled fraction(s) in (0, 1]")->delimiter(',');
  cmd->add_option("--p", o.p_percent, "labelled percentage(s) in (0, 100]")->delimiter(',');
  cmd->add_flag("--bias", o.bias, "label extreme first-coordinate rows per class instead of a random subset");
}

void add_sweep_options(CLI::App* cmd, Options& o) {
  cmd->add_option("--reps", o.reps, "replicates per design point");
  cmd->add_option("--jobs", o.jobs, "concurrent replicates (default: hardware threads)");
  cmd->add_option("--out", o.out, "directory for runs/aggregate/strategies/kl CSV files");
  cmd->add_flag("--all-rows", o.all_rows, "score ARI on every row rather than the unlabelled rows");
  cmd->add_option("--lambda-strategy", o.strategies, "strategies to evaluate: n2,max,kl1,kl2,ari-oracle")
      ->delimiter(',');
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Fractionally-supervised classification with weighted-likelihood Gaussian mixtures", "fsc"};
  app.require_subcommand(1, 1);
  Options o;

  auto* fit = app.add_subcommand("fit", "fit one weighted mixture and classify the unlabelled rows");
  add_data_options(fit, o);
  add_run_options(fit, o);
  add_mask_options(fit, o);
  fit->add_option("--components", o.components, "mixture components (default: number of classes)");
  fit->add_option("--lambda", o.lambda, "supervision weight in [0, 1]");
  fit->add_option("--lambda-strategy", o.strategies, "n2, max, kl1, kl2 or ari-oracle");
  fit->add_option("--out", o.out, "write output here instead of stdout");

  auto* select = app.add_subcommand("select-weight", "report the weight each strategy selects");
  add_data_options(select, o);
  add_run_options(select, o);
  add_mask_options(select, o);
  select->add_option("--components", o.components, "mixture components (default: number of classes)");
  select->add_option("--lambda-strategy", o.strategies, "strategies (default: all)")->delimiter(',');
  select->add_option("--out", o.out, "write output here instead of stdout");

  auto* simulate = app.add_subcommand("simulate", "replicated sweep over the two-component simulation design");
  add_run_options(simulate, o);
  add_mask_options(simulate, o);
  add_sweep_options(simulate, o);
  simulate->add_option("--delta", o.deltas, "separation(s) between the component means")->delimiter(',');
  simulate->add_option("--n", o.n, "observations per replicate");
  simulate->add_option("--pi", o.pi, "proportion of the first component");

  auto* bench = app.add_subcommand("benchmark", "replicated random maskings of a real labelled dataset");
  add_data_options(bench, o);
  add_run_options(bench, o);
  add_mask_options(bench, o);
  add_sweep_options(bench, o);
  bench->add_option("--components", o.components, "must equal the number of classes");

  std::vector<const char*> argv{"fsc"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  std::ostringstream buffer;
  std::ostream& sink = (!o.out.empty() && (fit->parsed() || select->parsed())) ? buffer : out;
  try {
    int code = kExitOk;
    if (fit->parsed()) {
      if (o.data.empty()) throw UsageError("--data is required");
      code = cmd_fit(o, sink);
    } else if (select->parsed()) {
      if (o.data.empty()) throw UsageError("--data is required");
      code = cmd_select_weight(o, sink);
    } else if (simulate->parsed()) {
      code = cmd_simulate(o, out);
    } else {
      code = cmd_benchmark(o, out);
    }
    if (&sink == &buffer) write_file(o.out, buffer.str());
    return code;
  } catch (const UsageError& e) {
    err << "fsc: " << e.what() << '\n';
    return kExitUsage;
  } catch (const Error& e) {
    err << json{{"error", to_string(e.kind())}, {"message", e.what()}}.dump() << '\n';
    return kExitRuntime;
  } catch (const std::exception& e) {
    err << json{{"error", "internal"}, {"message", e.what()}}.dump() << '\n';
    return kExitRuntime;
  }
}

}  // namespace fsc
