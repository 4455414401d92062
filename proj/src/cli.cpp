#include "qrshape/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <ostream>
#include <sstream>

#include "qrshape/dataset.hpp"
#include "qrshape/error.hpp"
#include "qrshape/inference.hpp"
#include "qrshape/simulate.hpp"
#include "qrshape/verify.hpp"

namespace qrshape {

namespace {

using nlohmann::json;

struct Common {
  std::string input;
  std::string theta_path;
  std::string mode = "reflect";
  int max_degree = SeriesControl{}.max_degree;
  double rel_tol = SeriesControl{}.rel_tol;
  std::uint64_t seed = 1;
  int restarts = FitOptions{}.restarts;
  bool serial = false;
  std::string format = "json";
};

ReflectionMode parse_mode(const std::string& s) {
  return s == "noreflect" ? ReflectionMode::ExcludesReflection : ReflectionMode::IncludesReflection;
}

void add_series_flags(CLI::App* cmd, Common& c) {
  cmd->add_option("--max-degree", c.max_degree, "Highest zonal series degree")->check(CLI::Range(1, 2000));
  cmd->add_option("--rel-tol", c.rel_tol, "Relative truncation tolerance of the series")
      ->check(CLI::PositiveNumber);
}

void add_data_flags(CLI::App* cmd, Common& c) {
  cmd->add_option("input", c.input, "Landmark CSV file")->required();
  cmd->add_option("--theta", c.theta_path, "K x K column covariance CSV (default identity)");
  cmd->add_option("--mode", c.mode, "Reflection handling")
      ->check(CLI::IsMember({"reflect", "noreflect"}));
}

void add_fit_flags(CLI::App* cmd, Common& c) {
  cmd->add_option("--seed", c.seed, "Seed for simplex restarts");
  cmd->add_option("--restarts", c.restarts, "Simplex runs per fit")->check(CLI::Range(1, 100));
  cmd->add_flag("--serial", c.serial, "Evaluate likelihood terms on one thread");
  add_series_flags(cmd, c);
}

struct Loaded {
  LandmarkDataset data;
  std::vector<ShapeRecord> shapes;
};

Loaded load(const Common& c) {
  Loaded l{load_landmark_csv(c.input), {}};
  const int K = l.data.dims.K;
  const Matrix theta = c.theta_path.empty() ? Matrix::Identity(K, K) : load_matrix_csv(c.theta_path);
  l.shapes = extract_dataset(l.data, theta, parse_mode(c.mode));
  return l;
}

FitOptions fit_options(const Common& c) {
  FitOptions o;
  o.seed = c.seed;
  o.restarts = c.restarts;
  o.ctrl = {c.max_degree, c.rel_tol};
  o.exec = c.serial ? Execution::Serial : Execution::Parallel;
  return o;
}

json matrix_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

json fit_json(const FitResult& f, const FitOptions& o) {
  return {
      {"model", to_string(f.model)},
      {"n", f.n},
      {"mu", matrix_json(f.mu)},
      {"sigma2", f.sigma2},
      {"loglik", f.loglik},
      {"n_p", f.n_p},
      {"bic_star", f.bic_star},
      {"converged", f.converged},
      {"evaluations", f.evaluations},
      {"at_lower_bound", f.at_lower_bound},
      {"mean_shape", matrix_json(f.mean_shape)},
      {"noncentrality", f.noncentrality},
      {"series",
       {{"max_degree", o.ctrl.max_degree},
        {"rel_tol", o.ctrl.rel_tol},
        {"max_degree_used", f.diagnostics.max_degree_used},
        {"nonconverged_terms", f.diagnostics.nonconverged},
        {"failed_terms", f.diagnostics.failed}}},
  };
}

json envelope(const std::string& command) {
  return {{"schema_version", kJsonSchemaVersion}, {"command", command}};
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

int cmd_extract(const Common& c, const std::string& output, std::ostream& out) {
  const Loaded l = load(c);
  if (output.empty()) {
    write_shape_csv(out, l.shapes);
  } else {
    std::ofstream f(output);
    if (!f) throw IoError("cannot write '" + output + "'");
    write_shape_csv(f, l.shapes);
  }
  return 0;
}

int cmd_fit(const Common& c, const std::string& model, const std::string& group, std::ostream& out) {
  const Loaded l = load(c);
  const Sample s = sample_of(l.shapes, l.data.dims, group.empty() ? std::nullopt : std::optional(group));
  const FitOptions o = fit_options(c);
  const FitResult f = fit_mle(parse_model_kind(model), s, o);
  json j = envelope("fit");
  j["N"] = l.data.dims.N;
  j["K"] = l.data.dims.K;
  j["group"] = group.empty() ? json(nullptr) : json(group);
  j["fit"] = fit_json(f, o);
  out << j.dump(2) << '\n';
  return f.converged ? 0 : 1;
}

int cmd_compare(const Common& c, const std::string& models, const std::string& group, std::ostream& out) {
  const Loaded l = load(c);
  const Sample s = sample_of(l.shapes, l.data.dims, group.empty() ? std::nullopt : std::optional(group));
  const FitOptions o = fit_options(c);
  const auto names = split_list(models);
  if (names.empty()) throw DomainError("--models: empty list");
  std::vector<FitResult> fits;
  for (const auto& name : names) fits.push_back(fit_mle(parse_model_kind(name), s, o));
  std::stable_sort(fits.begin(), fits.end(),
                   [](const FitResult& a, const FitResult& b) { return a.bic_star < b.bic_star; });
  const double best = fits.front().bic_star;
  bool all_converged = true;
  for (const auto& f : fits) all_converged = all_converged && f.converged;

  if (c.format == "text") {
    out << std::left << std::setw(10) << "model" << std::right << std::setw(14) << "loglik"
        << std::setw(14) << "BIC*" << std::setw(10) << "delta" << "  grade\n";
    out << std::fixed << std::setprecision(3);
    for (const auto& f : fits) {
      const double delta = f.bic_star - best;
      out << std::left << std::setw(10) << to_string(f.model) << std::right << std::setw(14)
          << f.loglik << std::setw(14) << f.bic_star << std::setw(10) << delta << "  "
          << to_string(evidence_grade(delta)) << (f.converged ? "" : "  (not converged)") << '\n';
    }
  } else {
    json j = envelope("compare");
    j["n"] = s.size();
    j["group"] = group.empty() ? json(nullptr) : json(group);
    json rows = json::array();
    for (const auto& f : fits) {
      json r = fit_json(f, o);
      r["delta_bic_star"] = f.bic_star - best;
      r["grade"] = to_string(evidence_grade(f.bic_star - best));
      rows.push_back(r);
    }
    j["models"] = rows;
    out << j.dump(2) << '\n';
  }
  return all_converged ? 0 : 1;
}

int cmd_test_meanshape(const Common& c, const std::string& model, const std::string& groups,
                       bool pooled, std::ostream& out) {
  const Loaded l = load(c);
  auto g = groups.empty() ? l.data.groups() : split_list(groups);
  if (g.size() != 2)
    throw DomainError("test-meanshape needs exactly two groups (found " + std::to_string(g.size()) +
                      "; use --groups A,B)");
  const Sample s1 = sample_of(l.shapes, l.data.dims, g[0]);
  const Sample s2 = sample_of(l.shapes, l.data.dims, g[1]);
  const FitOptions o = fit_options(c);
  const LrTestResult r = lr_test_equal_mean_shape(s1, s2, parse_model_kind(model), o,
                                                  pooled ? NullVariance::Pooled : NullVariance::PerGroup);
  json j = envelope("test-meanshape");
  j["model"] = model;
  j["groups"] = g;
  j["null_variance"] = pooled ? "pooled" : "per-group";
  j["statistic"] = r.statistic;
  j["df"] = r.df;
  j["p_value"] = r.p_value;
  j["loglik_null"] = r.loglik_null;
  j["loglik_alt"] = r.loglik_alt;
  j["mu_null"] = matrix_json(r.mu_null);
  j["sigma2_null"] = r.sigma2_null;
  j["fits"] = {fit_json(r.fit1, o), fit_json(r.fit2, o)};
  j["converged"] = r.converged;
  out << j.dump(2) << '\n';
  return r.converged ? 0 : 1;
}

int cmd_verify(const std::string& suite, std::uint64_t seed, long draws, bool serial,
               const std::string& format, std::ostream& out) {
  VerifyOptions o;
  o.seed = seed;
  o.mc_draws = draws;
  o.exec = serial ? Execution::Serial : Execution::Parallel;
  const auto names = suite == "all" ? suite_names() : std::vector<std::string>{suite};
  bool ok = true;
  json j = envelope("verify");
  j["seed"] = seed;
  j["suites"] = json::array();
  for (const auto& name : names) {
    const SuiteReport r = run_suite(name, o);
    ok = ok && r.passed();
    if (format == "text") {
      out << name << ": " << (r.passed() ? "PASS" : "FAIL") << '\n';
      for (const auto& ch : r.checks)
        out << "  [" << (ch.passed ? "pass" : "FAIL") << "] " << ch.name << "  " << ch.value
            << " <= " << ch.tolerance << (ch.detail.empty() ? "" : "  (" + ch.detail + ")") << '\n';
    } else {
      json checks = json::array();
      for (const auto& ch : r.checks)
        checks.push_back({{"name", ch.name}, {"passed", ch.passed}, {"value", ch.value},
                          {"tolerance", ch.tolerance}, {"detail", ch.detail}});
      j["suites"].push_back({{"suite", name}, {"passed", r.passed()}, {"checks", checks}});
    }
  }
  if (format != "text") {
    j["passed"] = ok;
    out << j.dump(2) << '\n';
  }
  return ok ? 0 : 1;
}

struct SimulateArgs {
  std::string model = "gaussian";
  int N = 6, K = 2;
  long count = 100;
  double sigma2 = 0.01;
  std::string mean_path;
  std::string group = "sim";
  std::string id_prefix = "s";
  bool no_header = false;
};

int cmd_simulate(const SimulateArgs& a, std::uint64_t seed, std::ostream& out) {
  Matrix mu_X;
  if (!a.mean_path.empty()) {
    mu_X = load_matrix_csv(a.mean_path);
  } else {
    if (a.K != 2) throw DomainError("simulate: --mean is required unless K = 2");
    mu_X.resize(a.N, 2);
    for (int i = 0; i < a.N; ++i) {
      const double phi = 2.0 * std::numbers::pi * i / a.N;
      mu_X.row(i) << std::cos(phi), std::sin(phi);
    }
  }
  const Dims d(static_cast<int>(mu_X.rows()), static_cast<int>(mu_X.cols()));
  const Matrix mu = helmert_submatrix(d.N) * mu_X;
  const ModelSpec spec = ModelSpec::isotropic(d, mu, a.sigma2, generator_for(parse_model_kind(a.model), d.M()));
  const auto xs = sample_model_landmarks(spec, a.count, seed);
  LandmarkDataset data{d, {}};
  for (std::size_t i = 0; i < xs.size(); ++i)
    data.specimens.push_back({a.id_prefix + std::to_string(i + 1), a.group, xs[i]});
  std::ostringstream buf;
  write_landmark_csv(buf, data);
  std::string text = buf.str();
  if (a.no_header) {
    for (int k = 0; k < 3; ++k) text.erase(0, text.find('\n') + 1);
  }
  out << text;
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Noncentral elliptical QR shape analysis"};
  app.require_subcommand(1);
  Common c;

  auto* extract = app.add_subcommand("extract", "Landmarks to QR shape coordinates (CSV)");
  std::string output;
  add_data_flags(extract, c);
  extract->add_option("-o,--output", output, "Output CSV (default stdout)");

  auto* fit = app.add_subcommand("fit", "Maximum likelihood fit of one model (JSON)");
  std::string model = "gaussian", group, models = "gaussian,kotz2,kotz3", groups;
  add_data_flags(fit, c);
  add_fit_flags(fit, c);
  fit->add_option("--model", model)->check(CLI::IsMember({"gaussian", "kotz2", "kotz3"}));
  fit->add_option("--group", group, "Restrict to one group");

  auto* compare = app.add_subcommand("compare", "BIC* table with evidence grades");
  add_data_flags(compare, c);
  add_fit_flags(compare, c);
  compare->add_option("--models", models, "Comma-separated list of gaussian, kotz2, kotz3");
  compare->add_option("--group", group, "Restrict to one group");
  compare->add_option("--format", c.format)->check(CLI::IsMember({"json", "text"}));

  auto* test = app.add_subcommand("test-meanshape", "Likelihood ratio test of equal mean shapes");
  bool pooled = false;
  add_data_flags(test, c);
  add_fit_flags(test, c);
  test->add_option("--model", model)->check(CLI::IsMember({"gaussian", "kotz2", "kotz3"}));
  test->add_option("--groups", groups, "The two groups to compare, A,B");
  test->add_flag("--pooled-variance", pooled, "Common sigma^2 under the null");

  auto* verify = app.add_subcommand("verify", "Run a numerical verification suite");
  std::string suite = "all";
  long draws = VerifyOptions{}.mc_draws;
  std::uint64_t vseed = VerifyOptions{}.seed;
  verify->add_option("--suite", suite)
      ->check(CLI::IsMember({"all", "zonal", "stiefel", "normalization", "invariance"}));
  verify->add_option("--seed", vseed);
  verify->add_option("--draws", draws, "Monte Carlo draws per Stiefel moment")->check(CLI::Range(2L, 100'000'000L));
  verify->add_flag("--serial", c.serial);
  verify->add_option("--format", c.format)->check(CLI::IsMember({"json", "text"}));

  auto* simulate = app.add_subcommand("simulate", "Simulate a landmark CSV from an isotropic model");
  SimulateArgs sim;
  simulate->add_option("--model", sim.model)->check(CLI::IsMember({"gaussian", "kotz2", "kotz3"}));
  simulate->add_option("--landmarks", sim.N, "N (regular polygon mean when --mean is absent)")->check(CLI::Range(3, 1000));
  simulate->add_option("--dims", sim.K)->check(CLI::Range(1, 100));
  simulate->add_option("--count", sim.count)->check(CLI::Range(1L, 10'000'000L));
  simulate->add_option("--sigma2", sim.sigma2)->check(CLI::PositiveNumber);
  simulate->add_option("--mean", sim.mean_path, "N x K mean configuration CSV");
  simulate->add_option("--group", sim.group);
  simulate->add_option("--id-prefix", sim.id_prefix);
  simulate->add_option("--seed", c.seed);
  simulate->add_flag("--no-header", sim.no_header, "Records only, for appending groups");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*extract) return cmd_extract(c, output, out);
    if (*fit) return cmd_fit(c, model, group, out);
    if (*compare) return cmd_compare(c, models, group, out);
    if (*test) return cmd_test_meanshape(c, model, groups, pooled, out);
    if (*verify) return cmd_verify(suite, vseed, draws, c.serial, c.format, out);
    if (*simulate) return cmd_simulate(sim, c.seed, out);
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const ParseError& e) {
    err << "error: " << c.input << ": " << e.what() << '\n';
    return 2;
  } catch (const NumericError& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
  return 2;
}

}  // namespace qrshape
