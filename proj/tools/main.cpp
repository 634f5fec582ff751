// adaknn: kernel-weighted k-NN regression with per-query adaptive k,
// synthetic doubling-measure worlds, diagnostics, and a minimax-floor probe.

#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "adaknn/adaptive.hpp"
#include "adaknn/core.hpp"
#include "adaknn/csv.hpp"
#include "adaknn/experiment.hpp"
#include "adaknn/minimax.hpp"
#include "adaknn/nn_index.hpp"
#include "adaknn/regressor.hpp"
#include "adaknn/svg.hpp"
#include "adaknn/worlds.hpp"

namespace {

using namespace adaknn;

std::string read_text_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

NoiseModel parse_noise(const std::string& text) {
  if (text == "none") return NoiseModel::none();
  const auto colon = text.find(':');
  if (colon != std::string::npos) {
    const std::string kind = text.substr(0, colon);
    const double value = std::stod(text.substr(colon + 1));
    if (kind == "bounded") return NoiseModel::bounded(value);
    if (kind == "gauss" || kind == "gaussian") return NoiseModel::gaussian(value);
  }
  throw std::invalid_argument("noise must be none, bounded:M, or gauss:SIGMA (got '" + text +
                              "')");
}

std::string noise_name(const NoiseModel& noise) {
  switch (noise.kind()) {
    case NoiseKind::none: return "none";
    case NoiseKind::bounded: return "bounded:" + std::to_string(noise.param());
    case NoiseKind::gaussian: return "gauss:" + std::to_string(noise.param());
  }
  return "?";
}

Kernel parse_kernel(const std::string& text) {
  if (text == "box") return Kernel::box();
  if (text == "tgauss") return Kernel::truncated_gaussian();
  throw std::invalid_argument("kernel must be box or tgauss (got '" + text + "')");
}

// World options shared by the generating subcommands. A config file provides
// the base spec; explicit flags win over file values.
struct WorldOptions {
  std::string file;
  std::string kind;
  int d = 0;
  int D = 0;
  std::uint64_t seed = 0;
  int rotate = -1;
  double curve_length = 0.0;
  double curve_pitch = 0.0;

  CLI::Option* kind_opt = nullptr;
  CLI::Option* d_opt = nullptr;
  CLI::Option* D_opt = nullptr;
  CLI::Option* seed_opt = nullptr;
  CLI::Option* rotate_opt = nullptr;
  CLI::Option* length_opt = nullptr;
  CLI::Option* pitch_opt = nullptr;

  void attach(CLI::App* cmd) {
    cmd->add_option("--world", file, "world config file (key=value text)");
    kind_opt = cmd->add_option("--world-kind", kind,
                               "hyperplane-uniform|sphere-surface|curve-in-ambient|"
                               "sparse-support");
    d_opt = cmd->add_option("--d", d, "intrinsic dimension");
    D_opt = cmd->add_option("--D", D, "ambient dimension");
    seed_opt = cmd->add_option("--world-seed", seed, "structural seed (rotation, phases)");
    rotate_opt = cmd->add_option("--rotate", rotate, "apply a seeded random rotation (0|1)");
    length_opt = cmd->add_option("--curve-length", curve_length, "serpentine length L");
    pitch_opt = cmd->add_option("--curve-pitch", curve_pitch, "serpentine fold scale w");
  }

  WorldSpec resolve() const {
    WorldSpec spec;
    bool have = false;
    if (!file.empty()) {
      spec = world_from_config_text(read_text_file(file));
      have = true;
    }
    if (kind_opt->count() > 0) {
      spec.kind = world_kind_from_name(kind);
      have = true;
    }
    if (!have) throw std::invalid_argument("need --world or --world-kind");
    if (d_opt->count() > 0) spec.d = d;
    if (D_opt->count() > 0) spec.D = D;
    if (seed_opt->count() > 0) spec.seed = seed;
    if (rotate_opt->count() > 0) spec.rotate = rotate != 0;
    if (length_opt->count() > 0) spec.curve_length = curve_length;
    if (pitch_opt->count() > 0) spec.curve_pitch = curve_pitch;
    validate_world(spec);
    return spec;
  }
};

struct TargetOptions {
  std::string kind = "zigzag";
  double lambda = 1.0;
  int zigzag_levels = 6;
  double zigzag_period = 1.6;

  void attach(CLI::App* cmd) {
    cmd->add_option("--target", kind, "constant|linear|zigzag|tent|sine");
    cmd->add_option("--lambda", lambda, "Lipschitz constant of the target");
    cmd->add_option("--zigzag-levels", zigzag_levels, "zigzag dyadic levels");
    cmd->add_option("--zigzag-period", zigzag_period, "zigzag base period");
  }
};

struct AdaptiveOptions {
  std::string k = "adaptive";
  double delta = 0.05;
  std::string theta = "ln2";
  std::string delta_cap = "profile-max";

  void attach(CLI::App* cmd) {
    cmd->add_option("--k", k, "adaptive or a fixed-k list, e.g. 1,8,64");
    cmd->add_option("--delta", delta, "confidence level in (0,1)");
    cmd->add_option("--theta", theta, "ln2 (= ln^2 n/delta) or an explicit value");
    cmd->add_option("--delta-cap", delta_cap, "profile-max|diameter");
  }

  bool adaptive() const { return k == "adaptive"; }

  std::vector<int> fixed_k_list() const {
    std::vector<int> out;
    std::stringstream ss(k);
    std::string item;
    while (std::getline(ss, item, ',')) {
      if (item.empty()) continue;
      const int v = std::stoi(item);
      if (v < 1) throw std::invalid_argument("--k values must be >= 1");
      out.push_back(v);
    }
    if (out.empty()) throw std::invalid_argument("--k must be adaptive or a list of integers");
    return out;
  }

  std::optional<double> theta_override() const {
    if (theta == "ln2") return std::nullopt;
    return std::stod(theta);
  }

  DeltaCapPolicy cap_policy() const {
    if (delta_cap == "profile-max") return DeltaCapPolicy::profile_max;
    if (delta_cap == "diameter") return DeltaCapPolicy::diameter;
    throw std::invalid_argument("--delta-cap must be profile-max or diameter");
  }
};

std::vector<std::size_t> parse_n_grid(const std::string& text) {
  std::vector<std::size_t> grid;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    const long v = std::stol(item);
    if (v < 1) throw std::invalid_argument("--n-grid entries must be >= 1");
    grid.push_back(static_cast<std::size_t>(v));
  }
  if (grid.empty()) throw std::invalid_argument("--n-grid must list sample sizes");
  return grid;
}

//-----------------------------------------------------------------------------

int cmd_generate(const WorldOptions& world_opts, const TargetOptions& target_opts,
                 const std::string& noise_text, std::size_t n, std::uint64_t seed,
                 const std::string& out) {
  const WorldSpec world = world_opts.resolve();
  const TargetFunction target =
      make_world_target(world, target_kind_from_name(target_opts.kind), target_opts.lambda,
                        target_opts.zigzag_levels, target_opts.zigzag_period);
  const NoiseModel noise = parse_noise(noise_text);
  auto rng = make_rng(mix_seed(seed, 0x67656eULL));
  const Dataset ds = sample_world(world, n, target, noise, rng);
  write_dataset_csv(out, ds);

  std::ofstream meta(out + ".meta");
  if (!meta) throw std::invalid_argument("cannot open " + out + ".meta");
  meta << world_to_config_text(world);
  meta << "n=" << n << "\n";
  meta << "sample_seed=" << seed << "\n";
  meta << "target=" << target_opts.kind << "\n";
  meta << "lambda=" << target_opts.lambda << "\n";
  meta << "noise=" << noise_name(noise) << "\n";
  std::cout << "wrote " << ds.n() << " samples in R^" << ds.dim() << " to " << out << "\n";
  return 0;
}

int cmd_predict(const std::string& data_path, const std::string& queries_path,
                const std::string& kernel_text, const AdaptiveOptions& adaptive_opts,
                const std::string& out) {
  const Dataset train = read_dataset_csv(data_path);
  const std::vector<Point> queries = read_points_csv(queries_path);
  const Kernel kernel = parse_kernel(kernel_text);
  const Index index(train);

  int fixed_k = 0;
  if (!adaptive_opts.adaptive()) {
    const auto list = adaptive_opts.fixed_k_list();
    if (list.size() != 1)
      throw std::invalid_argument("predict takes a single --k value or adaptive");
    fixed_k = list.front();
    if (static_cast<std::size_t>(fixed_k) > train.n())
      throw std::invalid_argument("--k exceeds the training sample size");
  }

  // admissible distance cap for the diameter policy: every train/query point
  // lies in the joint bounding box, so its diagonal dominates all distances
  std::optional<double> cap;
  if (adaptive_opts.cap_policy() == DeltaCapPolicy::diameter) {
    std::vector<double> lo(train.dim(), std::numeric_limits<double>::infinity());
    std::vector<double> hi(train.dim(), -std::numeric_limits<double>::infinity());
    auto absorb = [&](std::span<const double> p) {
      for (std::size_t j = 0; j < train.dim(); ++j) {
        lo[j] = std::min(lo[j], p[j]);
        hi[j] = std::max(hi[j], p[j]);
      }
    };
    for (std::size_t i = 0; i < train.n(); ++i) absorb(train.point(i));
    for (const Point& q : queries) absorb(q);
    double diag_sq = 0.0;
    for (std::size_t j = 0; j < train.dim(); ++j)
      diag_sq += (hi[j] - lo[j]) * (hi[j] - lo[j]);
    cap = std::sqrt(diag_sq);
  }

  std::ofstream csv(out);
  if (!csv) throw std::invalid_argument("cannot open " + out);
  for (std::size_t j = 0; j < train.dim(); ++j) csv << "x" << (j + 1) << ",";
  csv << "y_hat,k_chosen,r_k\n";

  AdaptiveConfig acfg;
  acfg.delta = adaptive_opts.delta;
  acfg.delta_cap = cap;
  for (const Point& q : queries) {
    Prediction pred;
    int k_chosen = fixed_k;
    if (adaptive_opts.adaptive()) {
      acfg.theta = adaptive_opts.theta_override().value_or(
          default_theta(train.n(), adaptive_opts.delta));
      const AdaptivePrediction ap = predict_adaptive(index, q, kernel, acfg);
      pred = ap.prediction;
      k_chosen = ap.selection.chosen;
    } else {
      pred = predict_fixed_k(index, q, fixed_k, kernel);
    }
    for (double v : q) csv << adaknn::detail::format_double(v) << ",";
    csv << adaknn::detail::format_double(pred.value) << "," << k_chosen << ","
        << adaknn::detail::format_double(pred.radius) << "\n";
  }
  std::cout << "wrote " << queries.size() << " predictions to " << out << "\n";
  return 0;
}

int cmd_rates(const WorldOptions& world_opts, const TargetOptions& target_opts,
              const std::string& noise_text, const std::string& n_grid_text, int reps,
              int queries, const std::string& kernel_text, const AdaptiveOptions& adaptive_opts,
              const std::string& agg_text, std::uint64_t seed, const std::string& out) {
  ExperimentConfig cfg;
  cfg.world = world_opts.resolve();
  cfg.target_kind = target_kind_from_name(target_opts.kind);
  cfg.lambda = target_opts.lambda;
  cfg.zigzag_levels = target_opts.zigzag_levels;
  cfg.zigzag_base_period = target_opts.zigzag_period;
  cfg.noise = parse_noise(noise_text);
  cfg.n_grid = parse_n_grid(n_grid_text);
  cfg.reps = reps;
  cfg.queries = queries;
  cfg.kernel = parse_kernel(kernel_text);
  cfg.delta = adaptive_opts.delta;
  cfg.theta_override = adaptive_opts.theta_override();
  cfg.cap_policy = adaptive_opts.cap_policy();
  cfg.seed = seed;
  if (agg_text == "mean") cfg.agg = AggPolicy::mean;
  else if (agg_text == "median-of-means") cfg.agg = AggPolicy::median_of_means;
  else throw std::invalid_argument("--agg must be mean or median-of-means");

  auto emit = [&](const RateReport& report, const std::string& path) {
    write_rate_report_csv(path, report);
    write_rate_report_svg(path + ".svg", report, "adaknn rates");
    std::cout << path << ": ";
    if (report.slope.has_value())
      std::cout << "slope " << *report.slope << " +- " << report.slope_halfwidth << "\n";
    else
      std::cout << report.status << "\n";
  };

  if (adaptive_opts.adaptive()) {
    cfg.adaptive = true;
    emit(run_rate_experiment(cfg), out);
  } else {
    const auto k_list = adaptive_opts.fixed_k_list();
    cfg.adaptive = false;
    for (int k : k_list) {
      cfg.fixed_k = k;
      const std::string path =
          k_list.size() == 1 ? out : out + "_k" + std::to_string(k) + ".csv";
      emit(run_rate_experiment(cfg), path);
    }
  }
  return 0;
}

int cmd_diagnose_dimension(const std::string& data_path, const std::string& queries_path,
                           double r, const std::string& eps_text, const std::string& out) {
  const Dataset data = read_dataset_csv(data_path);
  const std::vector<Point> queries = read_points_csv(queries_path);
  std::vector<double> eps_grid;
  {
    std::stringstream ss(eps_text);
    std::string item;
    while (std::getline(ss, item, ',')) if (!item.empty()) eps_grid.push_back(std::stod(item));
  }
  if (eps_grid.empty()) eps_grid = {0.5, 0.6, 0.7, 0.8};

  std::ofstream csv(out);
  if (!csv) throw std::invalid_argument("cannot open " + out);
  for (std::size_t j = 0; j < data.dim(); ++j) csv << "x" << (j + 1) << ",";
  csv << "d_hat,status\n";
  for (const Point& q : queries) {
    const auto est = estimate_local_dimension(data, q, r, eps_grid);
    for (double v : q) csv << adaknn::detail::format_double(v) << ",";
    if (est.has_value())
      csv << adaknn::detail::format_double(est->d_hat) << ",ok\n";
    else
      csv << "nan,estimation-failure\n";
  }
  std::cout << "wrote local dimension map to " << out << "\n";
  return 0;
}

int cmd_diagnose_vc(const WorldOptions& world_opts, std::size_t n, double delta, int vc_dim,
                    double a_multiplier, int trials, std::uint64_t seed) {
  const WorldSpec world = world_opts.resolve();
  const double alpha = vc_alpha_n(n, delta, vc_dim);
  auto rng = make_rng(mix_seed(seed, 0x7663ULL));
  const ConcentrationReport report =
      vc_concentration_check(world, n, delta, vc_dim, a_multiplier * alpha, trials, rng);
  std::cout << "alpha_n=" << report.alpha_n << "\n"
            << "a=" << report.a << "\n"
            << "trials=" << report.trials << "\n"
            << "balls_tested=" << report.balls_tested << "\n"
            << "violations_forward=" << report.violations_forward << "\n"
            << "violations_backward=" << report.violations_backward << "\n"
            << "trials_with_violation=" << report.trials_with_violation << "\n"
            << "trial_violation_rate=" << report.trial_violation_rate() << "\n";
  return 0;
}

int cmd_minimax(const WorldOptions& world_opts, double lambda, const std::string& n_grid_text,
                int reps, std::uint64_t seed, const std::string& out) {
  const WorldSpec world = world_opts.resolve();
  const RateFloorProbe probe =
      minimax_rate_probe(world, lambda, parse_n_grid(n_grid_text), reps, seed);
  std::ofstream csv(out);
  if (!csv) throw std::invalid_argument("cannot open " + out);
  csv << "n,floor_estimate,net_size,r_n\n";
  for (const RateFloorPoint& pt : probe.points)
    csv << pt.n << "," << adaknn::detail::format_double(pt.floor_estimate) << "," << pt.net_size
        << "," << adaknn::detail::format_double(pt.r_n) << "\n";
  std::cout << "probe: scale " << probe.scale_factor << ", tau " << probe.tau << ", wrote "
            << probe.points.size() << " rows to " << out << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"adaknn: adaptive k-NN regression over doubling-measure worlds"};
  app.require_subcommand(1);

  // generate
  auto* generate = app.add_subcommand("generate", "sample a world into a dataset CSV");
  WorldOptions gen_world;
  TargetOptions gen_target;
  gen_world.attach(generate);
  gen_target.attach(generate);
  std::string gen_noise = "none";
  std::size_t gen_n = 1000;
  std::uint64_t gen_seed = 0;
  std::string gen_out = "data.csv";
  generate->add_option("--noise", gen_noise, "none|bounded:M|gauss:SIGMA");
  generate->add_option("--n", gen_n, "sample size");
  generate->add_option("--seed", gen_seed, "sampling seed");
  generate->add_option("--out", gen_out, "output CSV path");

  // predict
  auto* predict = app.add_subcommand("predict", "predict labels at query points");
  std::string pred_data, pred_queries, pred_kernel = "box", pred_out = "predictions.csv";
  AdaptiveOptions pred_adaptive;
  predict->add_option("--data", pred_data, "training dataset CSV")->required();
  predict->add_option("--queries", pred_queries, "query points CSV")->required();
  predict->add_option("--kernel", pred_kernel, "box|tgauss");
  pred_adaptive.attach(predict);
  predict->add_option("--out", pred_out, "output CSV path");

  // rates
  auto* rates = app.add_subcommand("rates", "rate-convergence experiment with slope fit");
  WorldOptions rates_world;
  TargetOptions rates_target;
  rates_world.attach(rates);
  rates_target.attach(rates);
  AdaptiveOptions rates_adaptive;
  rates_adaptive.attach(rates);
  std::string rates_noise = "gauss:0.2", rates_grid = "256,512,1024", rates_kernel = "box";
  std::string rates_agg = "mean", rates_out = "rates.csv";
  int rates_reps = 5, rates_queries = 100;
  std::uint64_t rates_seed = 0;
  rates->add_option("--noise", rates_noise, "none|bounded:M|gauss:SIGMA");
  rates->add_option("--n-grid", rates_grid, "comma-separated sample sizes, ascending");
  rates->add_option("--reps", rates_reps, "independent repetitions per n");
  rates->add_option("--queries", rates_queries, "fresh queries per repetition");
  rates->add_option("--kernel", rates_kernel, "box|tgauss");
  rates->add_option("--agg", rates_agg, "mean|median-of-means");
  rates->add_option("--seed", rates_seed, "experiment seed");
  rates->add_option("--out", rates_out, "report CSV path (SVG written alongside)");

  // diagnose
  auto* diagnose = app.add_subcommand("diagnose", "local dimension map / VC concentration");
  WorldOptions diag_world;
  diag_world.attach(diagnose);
  bool diag_vc = false;
  std::string diag_data, diag_queries, diag_eps, diag_out = "dimension.csv";
  double diag_r = 0.2, diag_delta = 0.05, diag_a_mult = 1.0;
  int diag_vc_dim = 3, diag_trials = 50;
  std::size_t diag_n = 2048;
  std::uint64_t diag_seed = 0;
  diagnose->add_flag("--vc", diag_vc, "run the VC concentration report instead");
  diagnose->add_option("--data", diag_data, "dataset CSV (dimension mode)");
  diagnose->add_option("--queries", diag_queries, "query points CSV (dimension mode)");
  diagnose->add_option("--r", diag_r, "outer radius (dimension mode)");
  diagnose->add_option("--eps-grid", diag_eps, "comma-separated eps values in (0,1)");
  diagnose->add_option("--out", diag_out, "output CSV (dimension mode)");
  diagnose->add_option("--n", diag_n, "sample size per trial (vc mode)");
  diagnose->add_option("--delta", diag_delta, "confidence (vc mode)");
  diagnose->add_option("--vc-dim", diag_vc_dim, "ball-class VC dimension (vc mode)");
  diagnose->add_option("--a-mult", diag_a_mult, "a = a-mult * alpha_n (vc mode)");
  diagnose->add_option("--trials", diag_trials, "independent trials (vc mode)");
  diagnose->add_option("--seed", diag_seed, "seed (vc mode)");

  // minimax
  auto* minimax = app.add_subcommand("minimax", "minimax rate-floor probe");
  WorldOptions mm_world;
  mm_world.attach(minimax);
  std::string mm_grid = "256,512,1024,2048,4096,8192", mm_out = "floor.csv";
  double mm_lambda = 1.0;
  int mm_reps = 5;
  std::uint64_t mm_seed = 0;
  minimax->add_option("--lambda", mm_lambda, "Lipschitz constant");
  minimax->add_option("--n-grid", mm_grid, "comma-separated sample sizes, ascending");
  minimax->add_option("--reps", mm_reps, "repetitions per n");
  minimax->add_option("--seed", mm_seed, "probe seed");
  minimax->add_option("--out", mm_out, "probe CSV path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (generate->parsed())
      return cmd_generate(gen_world, gen_target, gen_noise, gen_n, gen_seed, gen_out);
    if (predict->parsed())
      return cmd_predict(pred_data, pred_queries, pred_kernel, pred_adaptive, pred_out);
    if (rates->parsed())
      return cmd_rates(rates_world, rates_target, rates_noise, rates_grid, rates_reps,
                       rates_queries, rates_kernel, rates_adaptive, rates_agg, rates_seed,
                       rates_out);
    if (diagnose->parsed()) {
      if (diag_vc)
        return cmd_diagnose_vc(diag_world, diag_n, diag_delta, diag_vc_dim, diag_a_mult,
                               diag_trials, diag_seed);
      if (diag_data.empty() || diag_queries.empty())
        throw std::invalid_argument("diagnose needs --data and --queries (or --vc)");
      return cmd_diagnose_dimension(diag_data, diag_queries, diag_r, diag_eps, diag_out);
    }
    if (minimax->parsed())
      return cmd_minimax(mm_world, mm_lambda, mm_grid, mm_reps, mm_seed, mm_out);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
