// One PASS/FAIL line per acceptance criterion. Exit status is non-zero when
// any criterion fails.

#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "quantobs/analysis.hpp"
#include "quantobs/errors.hpp"
#include "quantobs/harness.hpp"
#include "quantobs/numlin.hpp"
#include "quantobs/observer.hpp"
#include "quantobs/psifamily.hpp"
#include "support.hpp"

using namespace quantobs;
using testsupport::vec;

namespace {

using Clock = std::chrono::steady_clock;

struct Check {
  std::vector<std::string> failures;
  void require(bool ok, const std::string& what) {
    if (!ok) failures.push_back(what);
  }
};

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

void criterion1(Check& c) {
  const auto start = Clock::now();
  auto sys = testsupport::load("e1.json").system;
  auto r = algorithm1(sys);
  const double elapsed = seconds_since(start);
  c.require(elapsed < 10.0, "runtime " + std::to_string(elapsed) + " s");
  const auto* lb = std::get_if<LowerBound>(&r);
  c.require(lb != nullptr, "result is " + result_kind(r));
  if (!lb) return;
  c.require(lb->d > 0.0 && lb->d <= 5.0 / 24.0 + 1e-9, "d = " + std::to_string(lb->d));
  for (int k = 1; k <= 8; ++k) {
    const double oracle = testsupport::oracle_min_distance(sys, k);
    c.require(lb->d <= oracle + 1e-9, "d exceeds the depth " + std::to_string(k) + " minimum");
  }
}

void criterion2(Check& c) {
  const auto start = Clock::now();
  auto doc = testsupport::load("e1.json");
  AnalysisOptions a;
  a.x0_bound = 2.0;
  auto report = full_report(doc.system, a);
  c.require(report.chosen_T.has_value(), "no horizon certified");
  if (!report.chosen_T) return;
  const int T = *report.chosen_T;
  MonteCarloOptions opts;
  opts.trials = 500;
  opts.horizon = 100;
  opts.x0_bound = 2.0;
  opts.seed = 20240601;
  opts.settle_time = static_cast<std::size_t>(T);
  auto summary = monte_carlo_settling(doc.system, fio_factory(doc.system, T), opts);
  c.require(summary.violations == 0, std::to_string(summary.violations) + " trials err after T");
  c.require(summary.overflows == 0, "overflow");
  const double elapsed = seconds_since(start);
  c.require(elapsed < 30.0, "runtime " + std::to_string(elapsed) + " s");
}

void criterion3(Check& c) {
  auto sys = testsupport::load("e2.json").system;
  c.require(check_nilpotent_output(sys) == std::optional<int>(1), "nilpotency index is not 1");
  MonteCarloOptions opts;
  opts.trials = 500;
  opts.horizon = 50;
  opts.x0_bound = 2.0;
  opts.seed = 20240602;
  opts.settle_time = 2;
  auto summary = monte_carlo_settling(sys, fio_factory(sys, 1), opts);
  c.require(summary.violations == 0, std::to_string(summary.violations) + " trials err at t >= 2");
}

void criterion4(Check& c) {
  auto sys = testsupport::load("example1.json").system;
  InputIndex one = sys.alphabet_size();
  for (InputIndex i = 0; i < sys.alphabet_size(); ++i)
    if (sys.input(i) == vec({1.0})) one = i;
  c.require(one < sys.alphabet_size(), "alphabet lacks u = 1");
  if (one >= sys.alphabet_size()) return;
  const int T = 10;
  InputSequence u(T + 2, *sys.zero_input_index());
  u[T - 1] = one;
  auto a = simulate(sys, vec({0.1}), u);
  auto b = simulate(sys, vec({-0.1}), u);
  for (int t = 0; t <= T; ++t)
    c.require(a.outputs[t] == b.outputs[t], "labels differ at t = " + std::to_string(t));
  c.require(a.outputs[T + 1] == vec({1.0}) && b.outputs[T + 1] == vec({0.0}),
            "labels at T+1 are not 1 and 0");
}

void criterion5(Check& c) {
  auto sys = testsupport::load("dfm_nzi.json").system;
  auto r = algorithm1(sys);
  const auto* w = std::get_if<Witness>(&r);
  c.require(w != nullptr, "result is " + result_kind(r));
  if (w) {
    c.require(std::abs(w->y(0) - 0.5) <= 1e-12, "witness value " + std::to_string(w->y(0)));
    c.require(w->k == 2, "witness found at k = " + std::to_string(w->k) + ", criterion asks k = 2");
  }
  auto rec = check_thm3(sys);
  c.require(rec.verdict == Verdict::kNotFiniteMemory, "verdict " + to_string(rec.verdict));
  for (const char* name : {"spectral_radius_below_one", "zero_input_in_alphabet",
                           "zero_not_breakpoint", "full_output_rank"}) {
    bool found = false;
    for (const auto& h : rec.hypotheses)
      if (h.name == name) {
        found = true;
        c.require(h.holds, std::string(name) + " is false");
      }
    c.require(found, std::string(name) + " not recorded");
  }
}

void criterion6(Check& c) {
  auto sys = testsupport::load("example5.json").system;
  auto rec = check_thm6(sys);
  c.require(rec.certificate.has_value(), "no certificate");
  if (rec.certificate) {
    const auto& cert = *rec.certificate;
    c.require(std::abs(cert.lambda - 2.0) <= 1e-9, "lambda");
    c.require(std::abs(cert.x_star(0) - 0.5) <= 1e-9, "x*");
    c.require(std::abs(cert.u_star(0) + 2.0) <= 1e-9, "u*");
    c.require(std::abs(cert.beta - 0.5) <= 1e-9, "beta");
  }
  auto report = full_report(sys);
  c.require(report.summary.verdict == Verdict::kNotAsymptoticallyObservable,
            "report verdict " + to_string(report.summary.verdict));
}

void criterion7(Check& c) {
  const auto start = Clock::now();
  auto sys = testsupport::load("example5.json").system;
  auto cert = check_thm6(sys).certificate;
  c.require(cert.has_value(), "no certificate");
  if (!cert) return;
  auto params = psi_choose_T(sys, *cert);
  c.require(params.T == 2, "T = " + std::to_string(params.T));
  auto family = psi_build(sys, params, 4);
  auto v = psi_verify(sys, family);
  c.require(v.siblings_ok, "item (i)");
  c.require(v.extension_ok, "item (ii)");
  c.require(v.paths_ok, "item (iii)");
  c.require(v.all_right_margin > 1e-9, "all-right margin");
  std::vector<std::pair<std::string, ObserverFactory>> observers;
  for (int T : {1, 3, 5}) observers.emplace_back("fio T=" + std::to_string(T), fio_factory(sys, T));
  observers.emplace_back("constant 0", constant_factory(vec({0.0})));
  const std::vector<std::size_t> expect{2, 4, 6, 8};
  for (const auto& [name, factory] : observers) {
    auto res = psi_adversarial_run(sys, family, factory, 4);
    c.require(res.stage_error_times == expect, name + " error times differ");
  }
  const double elapsed = seconds_since(start);
  c.require(elapsed < 10.0, "runtime " + std::to_string(elapsed) + " s");
}

void criterion8(Check& c) {
  auto sys = testsupport::load("example5.json").system;
  auto params = psi_choose_T(sys, *check_thm6(sys).certificate);
  const int stages = 10;
  auto family = psi_build(sys, params, stages);
  const double gap = sys.quantizer().min_label_gap();
  const double u_norm = sys.input(params.u_star_index).norm();
  c.require(gap == 1.0 && u_norm == 2.0, "label gap or |u*| differ from 1 and 2");
  const double gamma = gap / (2.0 * u_norm);
  const double floor = (stages - 1) * gap / 2.0;
  std::vector<std::pair<std::string, ObserverFactory>> observers;
  for (int T : {1, 3, 5}) observers.emplace_back("fio T=" + std::to_string(T), fio_factory(sys, T));
  observers.emplace_back("constant 0", constant_factory(vec({0.0})));
  for (const auto& [name, factory] : observers) {
    auto res = psi_adversarial_run(sys, family, factory, stages);
    auto gain = gain_functional(res.record, gamma);
    std::ostringstream msg;
    msg << name << " running sup " << gain.running_sup;
    c.require(gain.running_sup >= floor, msg.str());
  }
}

void criterion9(Check& c) {
  std::mt19937_64 rng(9);

  // Quantizer right-continuity and local constancy.
  ProductQuantizer q({saturating_rounding_quantizer(3), threshold_quantizer(0.25, -1, 1)});
  for (std::size_t i = 0; i < q.dims(); ++i)
    for (double b : q.dim(i).breakpoints())
      c.require(q.dim(i).quantize(b) == q.dim(i).quantize(b + 1e-12), "right continuity");
  std::uniform_real_distribution<double> coord(-5, 5), unit(0, 1);
  std::normal_distribution<double> dir(0, 1);
  for (int trial = 0; trial < 200; ++trial) {
    Eigen::VectorXd y = vec({coord(rng), coord(rng)});
    const double d0 = q.breakpoint_distance(y);
    if (d0 <= 0) continue;
    Eigen::VectorXd d = vec({dir(rng), dir(rng)});
    d *= d0 * (1 - 1e-9) * unit(rng) / d.norm();
    c.require(q.quantize(y + d) == q.quantize(y), "local constancy");
  }

  // Register holds the last T inputs, newest first.
  auto e1 = testsupport::load("e1.json").system;
  for (int T = 1; T <= 5; ++T) {
    auto obs = FiniteInputObserver::build(e1, T);
    InputSequence u(30);
    for (auto& i : u) i = rng() % e1.alphabet_size();
    for (std::size_t t = 0; t < u.size(); ++t) {
      obs.update(u[t], vec({0}));
      const std::size_t filled = std::min<std::size_t>(t + 1, T);
      bool ok = obs.state().size() == filled;
      for (std::size_t i = 0; ok && i < filled; ++i) ok = obs.state()[i] == u[t - i];
      c.require(ok, "observer register");
    }
  }

  // Rank sequences never increase.
  for (int trial = 0; trial < 200; ++trial) {
    const Eigen::Index n = 1 + static_cast<Eigen::Index>(rng() % 5);
    const Eigen::Index p = 1 + static_cast<Eigen::Index>(rng() % 3);
    Eigen::MatrixXd a = testsupport::random_matrix(rng, n, n, 2.0);
    if (trial % 3 == 0) a.col(0).setZero();
    auto ranks = numlin::rank_sequence(testsupport::random_matrix(rng, p, n), a, static_cast<int>(n));
    for (std::size_t i = 1; i < ranks.size(); ++i)
      c.require(ranks[i] <= ranks[i - 1], "rank sequence increases");
  }

  // Distance bounds never exceed a brute-force minimum.
  std::uniform_real_distribution<double> radius(0.1, 0.9), val(-2, 2);
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::Index n = 1 + static_cast<Eigen::Index>(rng() % 3);
    std::vector<double> inputs{0.0};
    const std::size_t alphabet = 2 + rng() % 2;
    while (inputs.size() < alphabet) inputs.push_back(val(rng));
    auto sys = testsupport::scalar_system(testsupport::random_with_radius(rng, n, radius(rng)),
                                          testsupport::random_matrix(rng, n, 1),
                                          testsupport::random_matrix(rng, 1, n),
                                          testsupport::random_matrix(rng, 1, 1), inputs,
                                          saturating_rounding_quantizer(2));
    DistanceOptions opts;
    opts.max_k = 8;
    auto r = algorithm1(sys, opts);
    if (const auto* lb = std::get_if<LowerBound>(&r)) {
      for (int k = 1; k <= 8; ++k)
        c.require(lb->d <= testsupport::oracle_min_distance(sys, k) + 1e-12, "unsound distance");
    } else if (const auto* w = std::get_if<Witness>(&r)) {
      c.require(sys.quantizer().breakpoint_distance(w->y) <= default_witness_tol(sys.quantizer()),
                "witness off the breakpoints");
    }
  }

  // Closed-form family states and inputs agree with the recursion.
  auto ex5 = testsupport::load("example5.json").system;
  auto params = psi_choose_T(ex5, *check_thm6(ex5).certificate);
  std::function<Eigen::VectorXd(int, std::uint64_t)> state = [&](int k, std::uint64_t j) {
    if (k == 1) return j == 1 ? Eigen::VectorXd::Zero(1).eval() : params.s_o;
    Eigen::VectorXd s = state(k - 1, (j + 1) / 2);
    if (j % 2 == 0) s += std::pow(params.q, k - 1) * params.s_o;
    return s;
  };
  std::function<InputSequence(int, std::uint64_t)> inputs = [&](int k, std::uint64_t j) {
    if (k == 1) return InputSequence(params.T + 1, params.zero_index);
    const std::uint64_t parent = (j + 1) / 2;
    InputSequence u = inputs(k - 1, parent);
    u.resize(static_cast<std::size_t>(k) * params.T + 1, params.zero_index);
    if (parent % 2 == 0) u[static_cast<std::size_t>(k - 1) * params.T + 1] = params.u_star_index;
    return u;
  };
  for (int k = 1; k <= 6; ++k)
    for (std::uint64_t j = 1; j <= (std::uint64_t{1} << k); ++j) {
      c.require((psi_initial_state(k, j, params) - state(k, j)).norm() <= 1e-12, "family state");
      c.require(psi_input_segment(k, j, params) == inputs(k, j), "family inputs");
    }

  // Monte-Carlo summaries depend only on the seed.
  MonteCarloOptions opts;
  opts.trials = 100;
  opts.horizon = 50;
  opts.x0_bound = 2;
  opts.seed = 77;
  opts.settle_time = 3;
  opts.threads = 1;
  auto first = monte_carlo_settling(e1, fio_factory(e1, 3), opts);
  opts.threads = 0;
  auto second = monte_carlo_settling(e1, fio_factory(e1, 3), opts);
  c.require(first == second, "Monte-Carlo summary depends on threading");
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<void(Check&)>>> criteria{
      {"e1 distance lower bound", criterion1},
      {"e1 observer settles after T", criterion2},
      {"e2 nilpotent output and one-step observer", criterion3},
      {"Example 1 indistinguishable until T+1", criterion4},
      {"threshold system witness and rank conditions", criterion5},
      {"Example 5 cancelling certificate", criterion6},
      {"Example 5 family, verification and adversarial walk", criterion7},
      {"gain functional along the adversarial record", criterion8},
      {"property suites", criterion9},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Check c;
    try {
      criteria[i].second(c);
    } catch (const std::exception& e) {
      c.failures.push_back(std::string("exception: ") + e.what());
    }
    const bool ok = c.failures.empty();
    std::cout << (ok ? "PASS" : "FAIL") << " criterion " << (i + 1) << ": " << criteria[i].first;
    if (!ok) {
      std::cout << " (";
      for (std::size_t f = 0; f < c.failures.size(); ++f)
        std::cout << (f ? "; " : "") << c.failures[f];
      std::cout << ")";
      ++failed;
    }
    std::cout << "\n";
  }
  return failed == 0 ? 0 : 1;
}
