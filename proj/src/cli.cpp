#include "quantobs/cli.hpp"

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "quantobs/analysis.hpp"
#include "quantobs/errors.hpp"
#include "quantobs/harness.hpp"
#include "quantobs/io.hpp"
#include "quantobs/observer.hpp"
#include "quantobs/psifamily.hpp"

namespace quantobs::cli {

namespace {

using io::json;

// A requested construction does not apply to the given system.
class Inapplicable : public Error {
 public:
  using Error::Error;
};

struct Options {
  std::string file;
  std::optional<double> x0_bound;
  int max_k = 12;
  std::optional<std::uint64_t> budget;
  std::optional<double> witness_tol;
  std::string out_path;
  bool no_timestamp = false;

  std::string horizon_arg = "auto";
  std::size_t trials = 500;
  std::size_t run_length = 100;
  std::uint64_t seed = 1;
  unsigned threads = 0;
  std::string csv_path;

  std::string psi_action;
  int depth = 4;
  std::string observer_kind = "fio";
  int observer_T = 1;

  std::string scenario;
  int demo_T = 10;
};

std::uint64_t resolve_budget(const Options& o) {
  if (o.budget) return *o.budget;
  if (const char* env = std::getenv("QUANTOBS_BUDGET")) {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (end == env || *end != '\0' || v == 0)
      throw ParseError(std::string("QUANTOBS_BUDGET is not a positive integer: ") + env);
    return v;
  }
  return kDefaultEnumerationBudget;
}

DistanceOptions distance_options(const Options& o) {
  DistanceOptions d;
  d.max_k = o.max_k;
  d.budget = resolve_budget(o);
  d.witness_tol = o.witness_tol;
  return d;
}

double resolve_x0_bound(const Options& o, const io::SystemDocument& doc) {
  if (o.x0_bound) {
    if (*o.x0_bound < 0.0) throw ParseError("--x0-bound must be non-negative");
    return *o.x0_bound;
  }
  return doc.x0_bound.value_or(1.0);
}

void emit(const Options& o, const json& doc, std::ostream& out) {
  const std::string text = doc.dump(2) + "\n";
  if (o.out_path.empty()) {
    out << text;
    return;
  }
  std::ofstream f(o.out_path);
  if (!f) throw Error("cannot write '" + o.out_path + "'");
  f << text;
}

std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

int cmd_analyze(const Options& o, std::ostream& out) {
  const auto start = std::chrono::steady_clock::now();
  const io::SystemDocument doc = io::load_system_file(o.file);
  AnalysisOptions opts;
  opts.x0_bound = resolve_x0_bound(o, doc);
  opts.distance = distance_options(o);
  const ObservabilityReport rep = full_report(doc.system, opts);
  json result;
  result["tool"] = {{"name", "quantobs"}, {"version", kToolVersion}};
  result["system_hash"] = io::hex64(io::system_hash(doc.system));
  result["report"] = io::to_json(rep);
  if (!o.no_timestamp) {
    const auto ms = std::chrono::duration<double, std::milli>(
                        std::chrono::steady_clock::now() - start)
                        .count();
    result["timing"] = {{"elapsed_ms", ms}, {"generated_at", utc_timestamp()}};
  }
  emit(o, result, out);
  return kExitOk;
}

int cmd_distance(const Options& o, std::ostream& out) {
  const io::SystemDocument doc = io::load_system_file(o.file);
  const DistanceResult r = algorithm1(doc.system, distance_options(o));
  json result = io::to_json(r);
  result["max_k"] = o.max_k;
  emit(o, result, out);
  return kExitOk;
}

int cmd_observe(const Options& o, std::ostream& out) {
  const io::SystemDocument doc = io::load_system_file(o.file);
  const double b = resolve_x0_bound(o, doc);
  int horizon = 0;
  std::string source;
  if (o.horizon_arg == "auto") {
    AnalysisOptions opts;
    opts.x0_bound = b;
    opts.distance = distance_options(o);
    const ObservabilityReport rep = full_report(doc.system, opts);
    if (!rep.chosen_T)
      throw Inapplicable(
          "no horizon is certified for this system (summary verdict: " +
          to_string(rep.summary.verdict) + "); pass --T N to run a fixed horizon");
    horizon = *rep.chosen_T;
    source = rep.summary.certified_by;
  } else {
    try {
      std::size_t used = 0;
      horizon = std::stoi(o.horizon_arg, &used);
      if (used != o.horizon_arg.size()) throw std::invalid_argument("");
    } catch (const std::exception&) {
      throw ParseError("--T must be 'auto' or a positive integer");
    }
    if (horizon <= 0) throw ParseError("--T must be positive");
    source = "manual";
  }

  MonteCarloOptions mc;
  mc.trials = o.trials;
  mc.horizon = o.run_length;
  mc.x0_bound = b;
  mc.seed = o.seed;
  mc.threads = o.threads;
  mc.settle_time = static_cast<std::size_t>(horizon);
  const ObserverFactory factory = fio_factory(doc.system, horizon);
  const MonteCarloSummary sum = monte_carlo_settling(doc.system, factory, mc);

  if (!o.csv_path.empty() && o.trials > 0) {
    auto [x0, inputs] = monte_carlo_draw(doc.system, mc, 0);
    auto obs = factory();
    const RunRecord rec = interconnect(doc.system, *obs, x0, inputs);
    std::ofstream f(o.csv_path);
    if (!f) throw Error("cannot write '" + o.csv_path + "'");
    write_csv(f, rec);
  }

  json result;
  result["T"] = horizon;
  result["T_source"] = source;
  result["horizon"] = o.run_length;
  result["seed"] = o.seed;
  result["x0_bound"] = b;
  result["summary"] = io::to_json(sum);
  emit(o, result, out);
  return kExitOk;
}

int cmd_psi(const Options& o, std::ostream& out) {
  const io::SystemDocument doc = io::load_system_file(o.file);
  const QuantizedLtiSystem& sys = doc.system;
  const Thm6Record thm6 = check_thm6(sys);
  if (!thm6.certificate)
    throw Inapplicable("no cancelling eigenvector certificate; the family cannot be built");
  const PsiParams params = psi_choose_T(sys, *thm6.certificate);
  if (o.depth < 1) throw ParseError("--depth must be >= 1");
  const PsiFamily fam = psi_build(sys, params, o.depth);

  if (o.psi_action == "build") {
    emit(o, io::to_json(fam), out);
    return kExitOk;
  }
  if (o.psi_action == "verify") {
    const PsiVerification v = psi_verify(sys, fam);
    json result = io::to_json(v);
    result["depth"] = o.depth;
    result["T"] = params.T;
    emit(o, result, out);
    return v.ok() ? kExitOk : kExitFailure;
  }

  ObserverFactory factory;
  json observer;
  if (o.observer_kind == "constant") {
    factory = constant_factory(sys.quantizer().zero_label());
    observer = {{"kind", "constant"},
                {"label", io::vector_json(sys.quantizer().zero_label())}};
  } else {
    if (o.observer_T < 1) throw ParseError("--observer-T must be >= 1");
    factory = fio_factory(sys, o.observer_T);
    observer = {{"kind", "fio"}, {"T", o.observer_T}};
  }
  const AdversarialResult res = psi_adversarial_run(sys, fam, factory, o.depth);
  const double gap = sys.quantizer().min_label_gap();
  const double gamma = gap / (2.0 * sys.input(params.u_star_index).norm());
  json result = io::to_json(res);
  result["observer"] = observer;
  result["T"] = params.T;
  result["gain"] = io::to_json(gain_functional(res.record, gamma));
  emit(o, result, out);
  return kExitOk;
}

int cmd_demo(const Options& o, std::ostream& out) {
  if (o.demo_T < 2) throw ParseError("--T must be >= 2 for the demo");
  const QuantizedLtiSystem sys(
      Eigen::MatrixXd::Constant(1, 1, 0.5), Eigen::MatrixXd::Constant(1, 1, 1.0),
      Eigen::MatrixXd::Constant(1, 1, 1.0), Eigen::MatrixXd::Constant(1, 1, 1.0),
      {Eigen::VectorXd::Constant(1, 0.0), Eigen::VectorXd::Constant(1, 1.0),
       Eigen::VectorXd::Constant(1, -1.0)},
      ProductQuantizer({saturating_rounding_quantizer(1)}));
  const std::size_t T = static_cast<std::size_t>(o.demo_T);
  InputSequence inputs(T + 2, 0);
  inputs[T - 1] = 1;
  const Trajectory a = simulate(sys, Eigen::VectorXd::Constant(1, 0.1), inputs);
  const Trajectory b = simulate(sys, Eigen::VectorXd::Constant(1, -0.1), inputs);

  out << "x0 = 0.1 vs x0 = -0.1, T = " << T << "\n";
  out << std::setw(4) << "t" << std::setw(5) << "u" << std::setw(14) << "raw(+0.1)"
      << std::setw(5) << "y" << std::setw(14) << "raw(-0.1)" << std::setw(5) << "y"
      << "\n";
  std::optional<std::size_t> first_diff;
  for (std::size_t t = 0; t < inputs.size(); ++t) {
    const double ya = a.outputs[t](0);
    const double yb = b.outputs[t](0);
    if (ya != yb && !first_diff) first_diff = t;
    out << std::setw(4) << t << std::setw(5) << sys.input(inputs[t])(0)
        << std::setw(14) << std::setprecision(8) << a.raw_outputs[t](0)
        << std::setw(5) << ya << std::setw(14) << b.raw_outputs[t](0)
        << std::setw(5) << yb << (ya != yb ? "  <- differ" : "") << "\n";
  }
  if (first_diff)
    out << "outputs agree up to t = " << *first_diff - 1 << " and differ at t = "
        << *first_diff << "\n";
  else
    out << "outputs agree on the whole run\n";
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Observability analysis for linear systems with quantized outputs",
               "quantobs"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);
  Options o;

  auto add_budget = [&o](CLI::App* sub) {
    sub->add_option("--max-k", o.max_k, "Deepest forced response set to enumerate")
        ->check(CLI::PositiveNumber);
    sub->add_option("--budget", o.budget,
                    "Tuple enumeration budget (default 1000000 or QUANTOBS_BUDGET)");
    sub->add_option("--witness-tol", o.witness_tol,
                    "Distance at which a forced response counts as a breakpoint hit");
  };

  auto* analyze = app.add_subcommand("analyze", "Run every applicable checker");
  analyze->add_option("system", o.file, "System description (JSON)")->required();
  analyze->add_option("--x0-bound", o.x0_bound, "Bound on |x0_i|");
  add_budget(analyze);
  analyze->add_option("--out", o.out_path, "Write the report to this file");
  analyze->add_flag("--no-timestamp", o.no_timestamp, "Omit timing information");

  auto* distance = app.add_subcommand("distance", "Bound the breakpoint distance");
  distance->add_option("system", o.file, "System description (JSON)")->required();
  add_budget(distance);
  distance->add_option("--out", o.out_path, "Write the result to this file");

  auto* observe = app.add_subcommand("observe", "Monte-Carlo run of the input observer");
  observe->add_option("system", o.file, "System description (JSON)")->required();
  observe->add_option("--T", o.horizon_arg, "Observer horizon: auto or a positive integer");
  observe->add_option("--trials", o.trials, "Number of random runs");
  observe->add_option("--horizon", o.run_length, "Length of each run");
  observe->add_option("--seed", o.seed, "Random seed");
  observe->add_option("--x0-bound", o.x0_bound, "Bound on |x0_i|");
  observe->add_option("--threads", o.threads, "Worker threads (0: all cores)");
  observe->add_option("--csv", o.csv_path, "Write the trace of the first run as CSV");
  observe->add_option("--out", o.out_path, "Write the summary to this file");
  add_budget(observe);

  auto* psi = app.add_subcommand("psi", "Build, check or replay the unobservable family");
  psi->add_option("action", o.psi_action, "build, verify or attack")
      ->required()
      ->check(CLI::IsMember({"build", "verify", "attack"}));
  psi->add_option("system", o.file, "System description (JSON)")->required();
  psi->add_option("--depth", o.depth, "Family depth");
  psi->add_option("--observer", o.observer_kind, "Observer to attack: fio or constant")
      ->check(CLI::IsMember({"fio", "constant"}));
  psi->add_option("--observer-T", o.observer_T, "Horizon of the attacked input observer");
  psi->add_option("--out", o.out_path, "Write the result to this file");

  auto* demo = app.add_subcommand("demo", "Narrated scenarios");
  demo->add_option("scenario", o.scenario, "Scenario name")
      ->required()
      ->check(CLI::IsMember({"example1"}));
  demo->add_option("--T", o.demo_T, "Time of the unit input plus one");

  std::vector<const char*> argv{"quantobs"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitParse;
  }

  try {
    if (*analyze) return cmd_analyze(o, out);
    if (*distance) return cmd_distance(o, out);
    if (*observe) return cmd_observe(o, out);
    if (*psi) return cmd_psi(o, out);
    if (*demo) return cmd_demo(o, out);
  } catch (const ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitParse;
  } catch (const PreconditionError& e) {
    err << "precondition failed: " << e.what() << "\n";
    return kExitPrecondition;
  } catch (const Inapplicable& e) {
    err << "not applicable: " << e.what() << "\n";
    return kExitInapplicable;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitFailure;
}

}  // namespace quantobs::cli
