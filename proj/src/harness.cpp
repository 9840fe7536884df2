// SPDX-License-Identifier: Apache-2.0
#include "subdoa/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

#include "subdoa/linalg.hpp"
#include "subdoa/parallel.hpp"

namespace subdoa {

using json = nlohmann::json;

std::string sweep_name(SweepKind kind) {
  switch (kind) {
    case SweepKind::SnrDb: return "snr_db";
    case SweepKind::Snapshots: return "snapshots";
    case SweepKind::Rho: return "rho";
  }
  throw std::invalid_argument("unknown sweep kind");
}

SweepKind sweep_from_name(const std::string& name) {
  for (SweepKind k :
       {SweepKind::SnrDb, SweepKind::Snapshots, SweepKind::Rho})
    if (sweep_name(k) == name) return k;
  throw std::invalid_argument("unknown sweep kind: " + name);
}

RunConfig load_run_config(const std::string& json_path) {
  std::ifstream in(json_path);
  if (!in) throw std::runtime_error("cannot open config: " + json_path);
  json j;
  in >> j;

  RunConfig c;
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
  };
  get("num_antennas", c.num_antennas);
  get("radius_over_wavelength", c.radius_over_wavelength);
  get("scheme_file", c.scheme_file);
  get("fully_sampled", c.fully_sampled);
  get("num_sources", c.num_sources);
  get("max_order", c.max_order);
  get("num_snapshots", c.num_snapshots);
  get("snr_db", c.snr_db);
  get("equal_power", c.equal_power);
  get("mixed_snr", c.mixed_snr);
  get("trials", c.trials);
  get("seed", c.seed);
  get("threads", c.threads);
  get("top_quantile", c.top_quantile);
  get("ssr_oversampling", c.ssr_oversampling);
  get("gls_oversampling", c.gls_oversampling);
  get("mvdr_oversampling", c.mvdr_oversampling);
  get("ssr_iterations", c.ssr_iterations);
  get("mcenet_checkpoint", c.mcenet_checkpoint);
  get("covnet_checkpoint", c.covnet_checkpoint);
  if (j.contains("sweep")) c.sweep = sweep_from_name(j.at("sweep"));
  if (j.contains("sweep_values"))
    c.sweep_values = j.at("sweep_values").get<std::vector<double>>();
  if (j.contains("estimators")) {
    c.estimators.clear();
    for (const auto& name : j.at("estimators"))
      c.estimators.push_back(estimator_from_name(name.get<std::string>()));
  }
  if (j.contains("correlation")) {
    const auto& corr = j.at("correlation");
    const std::string kind = corr.value("kind", "uncorrelated");
    if (kind == "uncorrelated")
      c.correlation.kind = CorrelationSpec::Kind::Uncorrelated;
    else if (kind == "uniform-rho")
      c.correlation.kind = CorrelationSpec::Kind::UniformRho;
    else if (kind == "fixed-rho")
      c.correlation.kind = CorrelationSpec::Kind::FixedRho;
    else
      throw std::runtime_error("unknown correlation kind: " + kind);
    c.correlation.rho = corr.value("rho", 0.0);
  }
  if (j.contains("ranges")) {
    const auto& r = j.at("ranges");
    c.ranges.source_min_db = r.value("source_min_db", c.ranges.source_min_db);
    c.ranges.source_max_db = r.value("source_max_db", c.ranges.source_max_db);
    c.ranges.noise_min_db = r.value("noise_min_db", c.ranges.noise_min_db);
    c.ranges.noise_max_db = r.value("noise_max_db", c.ranges.noise_max_db);
  }
  if (j.contains("ascent")) {
    const auto& a = j.at("ascent");
    c.ascent.tolerance = a.value("tolerance", c.ascent.tolerance);
    c.ascent.max_iterations = a.value("max_iterations", c.ascent.max_iterations);
  }
  return c;
}

SystemSetup make_system(const RunConfig& config) {
  SystemSetup s;
  s.geom =
      ArrayGeometry::uca(config.num_antennas, config.radius_over_wavelength);
  if (config.fully_sampled) {
    s.scheme.num_chains = config.num_antennas;
    s.scheme.selections.push_back({});
    for (int m = 1; m <= config.num_antennas; ++m)
      s.scheme.selections.back().push_back(m);
  } else if (!config.scheme_file.empty()) {
    s.scheme = SubarrayScheme::from_file(config.scheme_file);
  } else {
    s.scheme = SubarrayScheme::default_uca9();
  }
  s.scheme.validate(config.num_antennas);
  return s;
}

Scenario draw_trial_scenario(const RunConfig& config, SweepKind sweep,
                             double sweep_value, int num_sources, Rng& rng) {
  ScenarioRanges ranges = config.ranges;
  if (config.equal_power) {
    ranges.source_min_db = 0.0;
    ranges.source_max_db = 0.0;
  }
  if (!config.mixed_snr) {
    // Fixed strongest-source SNR at this sweep point.
    const double snr_db =
        sweep == SweepKind::SnrDb ? sweep_value : config.snr_db;
    ranges.noise_min_db = -snr_db;
    ranges.noise_max_db = -snr_db;
  }
  CorrelationSpec correlation = config.correlation;
  if (sweep == SweepKind::Rho) {
    correlation.kind = CorrelationSpec::Kind::FixedRho;
    correlation.rho = sweep_value;
  }
  return draw_scenario(num_sources, ranges, correlation, rng);
}

namespace {

std::uint64_t trial_stream(int sweep_index, int trial) {
  return (static_cast<std::uint64_t>(sweep_index) << 32) |
         static_cast<std::uint64_t>(trial);
}

struct EstimatorContext {
  const RunConfig* config = nullptr;
  const SystemSetup* system = nullptr;
  Dictionary ssr_dict;
  Dictionary mvdr_dict;
  GridSpec gls_grid;
  const MlpModel* mcenet = nullptr;
};

Estimate run_estimator(EstimatorKind kind, const EstimatorContext& ctx,
                       const Scenario& scenario, const SampleCovSet& covs) {
  const RunConfig& cfg = *ctx.config;
  const SystemSetup& sys = *ctx.system;
  HybridOptions hybrid;
  hybrid.num_sources = scenario.num_sources();
  hybrid.ssr_oversampling = cfg.ssr_oversampling;
  hybrid.gls_oversampling = cfg.gls_oversampling;
  hybrid.mvdr_oversampling = cfg.mvdr_oversampling;
  hybrid.ssr_iterations = cfg.ssr_iterations;
  hybrid.ascent = cfg.ascent;
  switch (kind) {
    case EstimatorKind::Ssr:
      return ssr_estimate(covs, scenario.num_sources(), ctx.ssr_dict,
                          cfg.ssr_iterations);
    case EstimatorKind::Gls:
      return gls_grid_search(covs, scenario.num_sources(), ctx.gls_grid,
                             sys.scheme, sys.geom);
    case EstimatorKind::Mvdr:
      return mvdr_estimate(covs, scenario.num_sources(), ctx.mvdr_dict);
    case EstimatorKind::Mcenet: {
      if (!ctx.mcenet)
        throw std::runtime_error("mcenet estimator requires a checkpoint");
      Estimate e;
      e.doas = mcenet_predict(*ctx.mcenet, covs);
      e.source_cov = Eigen::MatrixXcd::Zero(e.doas.size(), e.doas.size());
      return e;
    }
    case EstimatorKind::GenieMl:
      return genie_ml(scenario, covs, sys.scheme, sys.geom, cfg.ascent);
    case EstimatorKind::HybridSsr:
      hybrid.init = HybridInit::Ssr;
      return hybrid_estimate(covs, sys.scheme, sys.geom, hybrid);
    case EstimatorKind::HybridGls:
      hybrid.init = HybridInit::Gls;
      return hybrid_estimate(covs, sys.scheme, sys.geom, hybrid);
    case EstimatorKind::HybridMvdr:
      hybrid.init = HybridInit::Mvdr;
      return hybrid_estimate(covs, sys.scheme, sys.geom, hybrid);
    case EstimatorKind::HybridMcenet: {
      if (!ctx.mcenet)
        throw std::runtime_error("hybrid-mcenet estimator requires a checkpoint");
      hybrid.init = HybridInit::External;
      hybrid.external_doas = mcenet_predict(*ctx.mcenet, covs);
      return hybrid_estimate(covs, sys.scheme, sys.geom, hybrid);
    }
  }
  throw std::invalid_argument("unknown estimator kind");
}

double elapsed_ms(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double, std::milli>(
             std::chrono::steady_clock::now() - start)
      .count();
}

std::string join_path(const std::string& dir, const std::string& file) {
  if (dir.empty()) return file;
  return dir.back() == '/' ? dir + file : dir + "/" + file;
}

void format_doas(std::string& row, const Eigen::VectorXd& doas) {
  char buf[32];
  for (Eigen::Index i = 0; i < doas.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.17g", doas(i));
    if (i) row += ';';
    row += buf;
  }
}

}  // namespace

ExperimentResult run_experiment(const RunConfig& config,
                                const std::string& out_dir) {
  const SystemSetup system = make_system(config);

  EstimatorContext ctx;
  ctx.config = &config;
  ctx.system = &system;
  MlpModel mcenet;
  bool needs_mcenet = false;
  bool needs_ssr = false, needs_mvdr = false, needs_gls = false;
  for (EstimatorKind kind : config.estimators) {
    needs_mcenet |= kind == EstimatorKind::Mcenet ||
                    kind == EstimatorKind::HybridMcenet;
    needs_ssr |= kind == EstimatorKind::Ssr;
    needs_mvdr |= kind == EstimatorKind::Mvdr;
    needs_gls |= kind == EstimatorKind::Gls;
  }
  if (needs_mcenet) {
    if (config.mcenet_checkpoint.empty())
      throw std::runtime_error("mcenet estimators need mcenet_checkpoint");
    mcenet = load_checkpoint(config.mcenet_checkpoint);
    ctx.mcenet = &mcenet;
  }
  if (needs_ssr)
    ctx.ssr_dict = Dictionary::build(
        system.scheme, system.geom,
        GridSpec::make(config.num_antennas, config.ssr_oversampling));
  if (needs_mvdr)
    ctx.mvdr_dict = Dictionary::build(
        system.scheme, system.geom,
        GridSpec::make(config.num_antennas, config.mvdr_oversampling));
  if (needs_gls)
    ctx.gls_grid = GridSpec::make(config.num_antennas, config.gls_oversampling);

  ExperimentResult result;
  const std::size_t methods = config.estimators.size();
  for (std::size_t sweep_index = 0; sweep_index < config.sweep_values.size();
       ++sweep_index) {
    const double value = config.sweep_values[sweep_index];
    const int snapshots = config.sweep == SweepKind::Snapshots
                              ? static_cast<int>(value)
                              : config.num_snapshots;

    std::vector<TrialRecord> rows(config.trials * methods);
    parallel_for(config.trials, config.threads, [&](std::size_t t) {
      Rng rng = Rng::stream(config.seed,
                            trial_stream(static_cast<int>(sweep_index),
                                         static_cast<int>(t)));
      const Scenario scenario = draw_trial_scenario(
          config, config.sweep, value, config.num_sources, rng);
      const SampleCovSet covs = sample_covariances(
          synthesize_snapshots(scenario, system.scheme, system.geom,
                               snapshots, rng));
      for (std::size_t m = 0; m < methods; ++m) {
        TrialRecord& rec = rows[t * methods + m];
        rec.sweep_index = static_cast<int>(sweep_index);
        rec.sweep_value = value;
        rec.trial = static_cast<int>(t);
        rec.method = estimator_name(config.estimators[m]);
        rec.true_doas = scenario.doas;
        const auto start = std::chrono::steady_clock::now();
        try {
          const Estimate est =
              run_estimator(config.estimators[m], ctx, scenario, covs);
          rec.runtime_ms = elapsed_ms(start);
          rec.est_doas = est.doas;
          rec.noise_var_est = est.noise_var;
          rec.objective = est.objective;
          rec.rmspe = periodic_error(scenario.doas, est.doas).rmspe;
        } catch (const std::exception&) {
          rec.runtime_ms = elapsed_ms(start);
          rec.failed = true;
          rec.rmspe = std::numeric_limits<double>::quiet_NaN();
        }
      }
    });
    result.trials.insert(result.trials.end(), rows.begin(), rows.end());

    for (std::size_t m = 0; m < methods; ++m) {
      AggregateRecord agg;
      agg.sweep_index = static_cast<int>(sweep_index);
      agg.sweep_value = value;
      agg.method = estimator_name(config.estimators[m]);
      std::vector<double> per_trial;
      for (std::size_t t = 0; t < static_cast<std::size_t>(config.trials); ++t) {
        const TrialRecord& rec = rows[t * methods + m];
        if (rec.failed) {
          ++agg.failures;
          continue;
        }
        per_trial.push_back(rec.rmspe);
      }
      agg.trials = static_cast<int>(per_trial.size());
      if (!per_trial.empty()) {
        double sq = 0.0;
        for (double r : per_trial) sq += r * r;
        agg.rmspe = std::sqrt(sq / per_trial.size());
        agg.rmspe_top = top_quantile_rmspe(per_trial, config.top_quantile);
        std::vector<double> sorted = per_trial;
        std::sort(sorted.begin(), sorted.end());
        agg.median_rmspe = sorted[sorted.size() / 2];
      }
      result.aggregates.push_back(std::move(agg));
    }
  }

  if (!out_dir.empty()) {
    write_trials_csv(join_path(out_dir, "trials.csv"), result.trials);
    write_aggregate_csv(join_path(out_dir, "aggregate.csv"),
                        result.aggregates);
    write_ecdf_csv(join_path(out_dir, "ecdf.csv"), result.trials);
  }
  return result;
}

OrderSelectionExperiment run_order_selection(
    const RunConfig& config, const std::vector<std::string>& methods,
    const MlpModel* covnet, const std::string& out_dir) {
  const SystemSetup system = make_system(config);
  MlpModel loaded;
  for (const auto& m : methods) {
    if (m != "mdl" && m != "covnet")
      throw std::invalid_argument("unknown order-selection method: " + m);
    if (m == "covnet" && !covnet) {
      if (config.covnet_checkpoint.empty())
        throw std::runtime_error("covnet selection needs covnet_checkpoint");
      loaded = load_checkpoint(config.covnet_checkpoint);
      covnet = &loaded;
    }
  }

  MdlOptions mdl;
  mdl.ssr_oversampling = config.ssr_oversampling;
  mdl.gls_oversampling = config.gls_oversampling;
  mdl.ssr_iterations = config.ssr_iterations;
  mdl.ascent = config.ascent;

  OrderSelectionExperiment result;
  const int classes = config.max_order + 1;
  for (std::size_t sweep_index = 0; sweep_index < config.sweep_values.size();
       ++sweep_index) {
    const double value = config.sweep_values[sweep_index];
    const int snapshots = config.sweep == SweepKind::Snapshots
                              ? static_cast<int>(value)
                              : config.num_snapshots;

    std::vector<OrderTrialRecord> rows(config.trials * methods.size());
    parallel_for(config.trials, config.threads, [&](std::size_t t) {
      Rng rng = Rng::stream(config.seed,
                            trial_stream(static_cast<int>(sweep_index),
                                         static_cast<int>(t)));
      const int truth = static_cast<int>(t) % classes;  // stratified
      const Scenario scenario =
          draw_trial_scenario(config, config.sweep, value, truth, rng);
      const SampleCovSet covs = sample_covariances(
          synthesize_snapshots(scenario, system.scheme, system.geom,
                               snapshots, rng));
      for (std::size_t m = 0; m < methods.size(); ++m) {
        OrderTrialRecord& rec = rows[t * methods.size() + m];
        rec.sweep_index = static_cast<int>(sweep_index);
        rec.sweep_value = value;
        rec.trial = static_cast<int>(t);
        rec.method = methods[m];
        rec.true_order = truth;
        const auto start = std::chrono::steady_clock::now();
        const OrderSelectionResult sel =
            methods[m] == "mdl"
                ? mdl_select(covs, config.max_order, system.scheme,
                             system.geom, mdl)
                : covnet_select(*covnet, covs);
        rec.runtime_ms = elapsed_ms(start);
        rec.selected = sel.selected;
        rec.scores = sel.scores;
      }
    });
    result.trials.insert(result.trials.end(), rows.begin(), rows.end());

    for (std::size_t m = 0; m < methods.size(); ++m) {
      OrderAggregateRecord agg;
      agg.sweep_index = static_cast<int>(sweep_index);
      agg.sweep_value = value;
      agg.method = methods[m];
      agg.trials = config.trials;
      int correct = 0;
      for (int t = 0; t < config.trials; ++t) {
        const OrderTrialRecord& rec = rows[t * methods.size() + m];
        if (rec.selected == rec.true_order) ++correct;
      }
      agg.accuracy = static_cast<double>(correct) / config.trials;
      result.aggregates.push_back(std::move(agg));
    }
  }

  if (!out_dir.empty()) {
    write_order_csv(join_path(out_dir, "order_trials.csv"), result.trials);
    write_order_aggregate_csv(join_path(out_dir, "order_aggregate.csv"),
                              result.aggregates);
  }
  return result;
}

std::vector<SearchRow> random_search(const SearchSpace& space, int budget,
                                     int validation_size,
                                     const TrainConfig& base,
                                     const SubarrayScheme& scheme,
                                     const ArrayGeometry& geom, Rng& rng) {
  if (budget < 1)
    throw std::invalid_argument("random_search: budget must be >= 1");
  std::vector<SearchRow> rows;
  rows.reserve(budget);
  for (int i = 0; i < budget; ++i) {
    SearchRow row;
    row.hidden_layers =
        space.hidden_layers[rng.uniform_int(space.hidden_layers.size())];
    row.hidden_units =
        space.hidden_units[rng.uniform_int(space.hidden_units.size())];
    row.learning_rate =
        space.learning_rates[rng.uniform_int(space.learning_rates.size())];

    TrainConfig config = base;  // shared training stream seed
    config.hidden_layers = row.hidden_layers;
    config.hidden_units = row.hidden_units;
    config.learning_rate = row.learning_rate;
    const TrainResult trained = train_mcenet(config, scheme, geom);
    // Shared validation set: fixed seed distinct from the training stream.
    row.validation_loss = evaluate_mcenet_mce(
        trained.model, config, scheme, geom, validation_size,
        base.seed ^ 0x5eedbea7ull);
    rows.push_back(row);
  }
  std::sort(rows.begin(), rows.end(), [](const SearchRow& a, const SearchRow& b) {
    return a.validation_loss < b.validation_loss;
  });
  return rows;
}

// --- CSV writers -------------------------------------------------------------

namespace {

std::ofstream open_csv(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << kCsvSchema << '\n';
  return out;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void write_trials_csv(const std::string& path,
                      const std::vector<TrialRecord>& trials) {
  std::ofstream out = open_csv(path);
  out << "sweep_index,sweep_value,trial,method,true_doas,est_doas,rmspe,"
         "noise_var_est,objective,runtime_ms,failed\n";
  for (const auto& r : trials) {
    std::string row;
    row += std::to_string(r.sweep_index) + ',' + fmt(r.sweep_value) + ',' +
           std::to_string(r.trial) + ',' + r.method + ',';
    format_doas(row, r.true_doas);
    row += ',';
    format_doas(row, r.est_doas);
    row += ',' + fmt(r.rmspe) + ',' + fmt(r.noise_var_est) + ',' +
           fmt(r.objective) + ',' + fmt(r.runtime_ms) + ',' +
           (r.failed ? "1" : "0");
    out << row << '\n';
  }
}

void write_aggregate_csv(const std::string& path,
                         const std::vector<AggregateRecord>& aggregates) {
  std::ofstream out = open_csv(path);
  out << "sweep_index,sweep_value,method,rmspe,rmspe_top,median_rmspe,trials,"
         "failures\n";
  for (const auto& a : aggregates)
    out << a.sweep_index << ',' << fmt(a.sweep_value) << ',' << a.method << ','
        << fmt(a.rmspe) << ',' << fmt(a.rmspe_top) << ','
        << fmt(a.median_rmspe) << ',' << a.trials << ',' << a.failures << '\n';
}

void write_ecdf_csv(const std::string& path,
                    const std::vector<TrialRecord>& trials) {
  std::ofstream out = open_csv(path);
  out << "sweep_index,sweep_value,method,rmspe,fraction\n";
  // Group per (sweep point, method), preserving first-seen order.
  std::vector<std::pair<int, std::string>> keys;
  for (const auto& r : trials) {
    const std::pair<int, std::string> key{r.sweep_index, r.method};
    if (std::find(keys.begin(), keys.end(), key) == keys.end())
      keys.push_back(key);
  }
  for (const auto& [sweep_index, method] : keys) {
    std::vector<double> values;
    double sweep_value = 0.0;
    for (const auto& r : trials)
      if (r.sweep_index == sweep_index && r.method == method && !r.failed) {
        values.push_back(r.rmspe);
        sweep_value = r.sweep_value;
      }
    if (values.empty()) continue;
    for (const auto& [v, f] : empirical_cdf(values))
      out << sweep_index << ',' << fmt(sweep_value) << ',' << method << ','
          << fmt(v) << ',' << fmt(f) << '\n';
  }
}

void write_order_csv(const std::string& path,
                     const std::vector<OrderTrialRecord>& trials) {
  std::ofstream out = open_csv(path);
  out << "sweep_index,sweep_value,trial,method,true_order,selected,scores,"
         "runtime_ms\n";
  for (const auto& r : trials) {
    out << r.sweep_index << ',' << fmt(r.sweep_value) << ',' << r.trial << ','
        << r.method << ',' << r.true_order << ',' << r.selected << ',';
    for (Eigen::Index i = 0; i < r.scores.size(); ++i)
      out << (i ? ";" : "") << fmt(r.scores(i));
    out << ',' << fmt(r.runtime_ms) << '\n';
  }
}

void write_order_aggregate_csv(
    const std::string& path,
    const std::vector<OrderAggregateRecord>& aggregates) {
  std::ofstream out = open_csv(path);
  out << "sweep_index,sweep_value,method,accuracy,trials\n";
  for (const auto& a : aggregates)
    out << a.sweep_index << ',' << fmt(a.sweep_value) << ',' << a.method << ','
        << fmt(a.accuracy) << ',' << a.trials << '\n';
}

void write_search_csv(const std::string& path,
                      const std::vector<SearchRow>& rows) {
  std::ofstream out = open_csv(path);
  out << "hidden_layers,hidden_units,learning_rate,validation_loss\n";
  for (const auto& r : rows)
    out << r.hidden_layers << ',' << r.hidden_units << ','
        << fmt(r.learning_rate) << ',' << fmt(r.validation_loss) << '\n';
}

}  // namespace subdoa
