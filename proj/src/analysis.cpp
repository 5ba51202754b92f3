#include "quantobs/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "quantobs/errors.hpp"
#include "quantobs/numlin.hpp"

namespace quantobs {

namespace {

using numlin::norm2;

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

bool all_hold(const std::vector<Hypothesis>& hs) {
  return std::all_of(hs.begin(), hs.end(),
                     [](const Hypothesis& h) { return h.holds; });
}

Hypothesis zero_input_hypothesis(const QuantizedLtiSystem& sys) {
  const bool ok = sys.zero_input_index().has_value();
  return {"zero_input_in_alphabet", ok,
          ok ? "0 is input " + std::to_string(*sys.zero_input_index())
             : "0 is not an admissible input"};
}

Hypothesis zero_off_breakpoints(const QuantizedLtiSystem& sys) {
  const double dist =
      sys.quantizer().breakpoint_distance(Eigen::VectorXd::Zero(sys.p()));
  return {"zero_not_breakpoint", dist > 0.0,
          "distance of 0 to breakpoints " + fmt(dist)};
}

// Runs algorithm1, turning an enumeration budget overrun into Inconclusive
// at the last completed depth.
DistanceResult distance_or_inconclusive(const QuantizedLtiSystem& sys,
                                        const DistanceOptions& opts,
                                        std::optional<std::string>& error) {
  try {
    return algorithm1(sys, opts);
  } catch (const BudgetError& e) {
    error = e.what();
    int reached = 0;
    while (reached < opts.max_k &&
           forced_set_size(sys, reached + 1, opts.budget))
      ++reached;
    return Inconclusive{reached, std::numeric_limits<double>::quiet_NaN(),
                        std::numeric_limits<double>::quiet_NaN()};
  }
}

}  // namespace

std::string result_kind(const DistanceResult& r) {
  if (std::holds_alternative<LowerBound>(r)) return "LowerBound";
  if (std::holds_alternative<Witness>(r)) return "Witness";
  return "Inconclusive";
}

double default_witness_tol(const ProductQuantizer& q) {
  double big = 0.0;
  for (const auto& d : q.all_dims())
    for (double b : d.breakpoints()) big = std::max(big, std::abs(b));
  return 1e-12 * (1.0 + big);
}

DistanceResult algorithm1(const QuantizedLtiSystem& sys,
                          const DistanceOptions& opts) {
  const double rho = numlin::spectral_radius(sys.A());
  if (rho >= 1.0)
    throw InstabilityError("distance algorithm needs spectral radius < 1, got " +
                           fmt(rho));
  if (!sys.zero_input_index())
    throw PreconditionError("distance algorithm needs 0 in the input alphabet");
  if (opts.max_k < 1) throw InputError("max_k must be >= 1");

  const double wtol =
      opts.witness_tol.value_or(default_witness_tol(sys.quantizer()));
  const double h = sys.max_input_effect();
  const double s = numlin::neumann_sum_bound(sys.A());
  const double c_norm = norm2(sys.C());

  Eigen::MatrixXd power = Eigen::MatrixXd::Identity(sys.n(), sys.n());
  double last_min = 0.0;
  double last_tail = 0.0;
  for (int k = 1; k <= opts.max_k; ++k) {
    const double tail = h * s * c_norm * norm2(power);
    double best = std::numeric_limits<double>::infinity();
    Eigen::VectorXd best_y;
    InputSequence best_tuple;
    visit_forced_response_set(
        sys, k, opts.budget,
        [&](const Eigen::VectorXd& y, const InputSequence& tuple) {
          const double dist = sys.quantizer().breakpoint_distance(y);
          if (dist < best) {
            best = dist;
            best_y = y;
            best_tuple = tuple;
          }
          return best > wtol;
        });
    if (best <= wtol) return Witness{best_y, best_tuple, k, best};
    if (best > tail) return LowerBound{best - tail, k, best, tail};
    last_min = best;
    last_tail = tail;
    power = (power * sys.A()).eval();
  }
  return Inconclusive{opts.max_k, last_min, last_tail};
}

std::optional<int> check_nilpotent_output(const QuantizedLtiSystem& sys,
                                          double tol) {
  const double c_norm = norm2(sys.C());
  const double a_norm = norm2(sys.A());
  Eigen::MatrixXd product = sys.C();
  double scale = c_norm;
  const int n = static_cast<int>(std::max<Eigen::Index>(sys.n(), 1));
  for (int l = 1; l <= n; ++l) {
    product = (product * sys.A()).eval();
    scale *= a_norm;
    if (norm2(product) <= tol * scale) return l;
  }
  return std::nullopt;
}

double euclidean_state_bound(double inf_bound, Eigen::Index n) {
  return std::sqrt(static_cast<double>(n)) * inf_bound;
}

double stable_horizon_rhs(const QuantizedLtiSystem& sys, double x0_bound,
                          double d_lower) {
  const double s = numlin::neumann_sum_bound(sys.A());
  const double b0 = s * std::max(euclidean_state_bound(x0_bound, sys.n()),
                                 sys.max_input_effect());
  return d_lower / (2.0 * b0 * norm2(sys.C()));
}

double stable_horizon_lhs(const QuantizedLtiSystem& sys, int horizon) {
  Eigen::MatrixXd power = Eigen::MatrixXd::Identity(sys.n(), sys.n());
  for (int t = 0; t < horizon; ++t) power = (power * sys.A()).eval();
  return norm2(power);
}

int choose_horizon_stable(const QuantizedLtiSystem& sys, double x0_bound,
                          double d_lower) {
  if (!(d_lower > 0.0))
    throw PreconditionError("horizon selection needs a positive distance bound");
  if (!(x0_bound >= 0.0))
    throw PreconditionError("initial state bound must be non-negative");
  if (norm2(sys.C()) == 0.0)
    throw PreconditionError("horizon selection needs C != 0");
  const double rhs = stable_horizon_rhs(sys, x0_bound, d_lower);
  Eigen::MatrixXd power = Eigen::MatrixXd::Identity(sys.n(), sys.n());
  for (int t = 1; t <= kHorizonCap; ++t) {
    power = (power * sys.A()).eval();
    if (norm2(power) < rhs) return t;
  }
  throw BudgetError("no horizon below " + std::to_string(kHorizonCap));
}

SpectralSplit spectral_split(const Eigen::MatrixXd& a) {
  SpectralSplit split;
  split.unstable_basis = numlin::invariant_subspace_basis(
      a, 1.0, numlin::MagnitudeSelector::kAtLeast);
  split.stable_basis = numlin::invariant_subspace_basis(
      a, 1.0, numlin::MagnitudeSelector::kBelow);
  const Eigen::Index n = a.rows();
  const Eigen::Index ne = split.unstable_basis.cols();
  const Eigen::Index ns = split.stable_basis.cols();
  if (ne + ns != n)
    throw PreconditionError("invariant subspaces do not span the state space");
  Eigen::MatrixXd modal(n, n);
  modal << split.unstable_basis, split.stable_basis;
  const Eigen::MatrixXd inv = modal.fullPivLu().inverse();
  split.stable_coords = inv.bottomRows(ns);
  split.stable_block = split.stable_basis.transpose() * a * split.stable_basis;
  return split;
}

bool unstable_in_kernel(const QuantizedLtiSystem& sys) {
  const Eigen::MatrixXd e = numlin::invariant_subspace_basis(
      sys.A(), 1.0, numlin::MagnitudeSelector::kAtLeast);
  return numlin::kernel_containment(sys.C(), e);
}

QuantizedLtiSystem stable_reduction(const QuantizedLtiSystem& sys) {
  const SpectralSplit split = spectral_split(sys.A());
  return QuantizedLtiSystem(split.stable_block,
                            split.stable_coords * sys.B(),
                            sys.C() * split.stable_basis, sys.D(),
                            sys.inputs(), sys.quantizer());
}

GeneralHorizonTerms general_horizon_terms(const QuantizedLtiSystem& sys,
                                          double x0_bound) {
  const SpectralSplit split = spectral_split(sys.A());
  GeneralHorizonTerms terms;
  terms.output_map = sys.C() * split.stable_basis;
  terms.stable_block = split.stable_block;
  if (split.stable_basis.cols() == 0) return terms;

  const Eigen::MatrixXd& coords = split.stable_coords;
  double x0_part = 0.0;
  for (Eigen::Index j = 0; j < coords.cols(); ++j)
    x0_part += coords.col(j).norm();
  x0_part = x0_bound * std::min(x0_part, std::sqrt(static_cast<double>(
                                             sys.n())) * norm2(coords));
  double input_part = 0.0;
  for (const auto& u : sys.inputs())
    input_part = std::max(input_part, (coords * sys.B() * u).norm());
  terms.b_s =
      numlin::neumann_sum_bound(split.stable_block) * std::max(x0_part, input_part);
  return terms;
}

double general_horizon_lhs(const GeneralHorizonTerms& terms, int horizon) {
  if (terms.output_map.cols() == 0) return 0.0;
  Eigen::MatrixXd m = terms.output_map;
  for (int t = 0; t < horizon; ++t) m = (m * terms.stable_block).eval();
  return norm2(m) * terms.b_s;
}

int choose_horizon_general(const QuantizedLtiSystem& sys, double x0_bound,
                           double d_lower) {
  if (!(d_lower > 0.0))
    throw PreconditionError("horizon selection needs a positive distance bound");
  if (!(x0_bound >= 0.0))
    throw PreconditionError("initial state bound must be non-negative");
  if (!unstable_in_kernel(sys))
    throw PreconditionError(
        "generalized eigenspace of |lambda| >= 1 is not in the kernel of C");
  const GeneralHorizonTerms terms = general_horizon_terms(sys, x0_bound);
  if (terms.output_map.cols() == 0) return 1;
  Eigen::MatrixXd m = terms.output_map;
  for (int t = 1; t <= kHorizonCap; ++t) {
    m = (m * terms.stable_block).eval();
    if (norm2(m) * terms.b_s < d_lower / 2.0) return t;
  }
  throw BudgetError("no horizon below " + std::to_string(kHorizonCap));
}

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::kFiniteMemory:
      return "finite_memory";
    case Verdict::kNotFiniteMemory:
      return "not_finite_memory";
    case Verdict::kNotAsymptoticallyObservable:
      return "not_asymptotically_observable";
    case Verdict::kInapplicable:
      return "inapplicable";
    case Verdict::kInconclusive:
      return "inconclusive";
  }
  return "inconclusive";
}

Thm2Record check_thm2(const QuantizedLtiSystem& sys,
                      const DistanceOptions& opts) {
  Thm2Record rec;
  const double rho = numlin::spectral_radius(sys.A());
  rec.stable = rho < 1.0;
  rec.unstable_in_kernel = rec.stable || unstable_in_kernel(sys);
  rec.hypotheses.push_back({"unstable_subspace_in_kernel", rec.unstable_in_kernel,
                            "spectral radius " + fmt(rho)});
  const Hypothesis zero_in = zero_input_hypothesis(sys);
  rec.hypotheses.push_back(zero_in);
  if (!rec.unstable_in_kernel || !zero_in.holds) {
    rec.verdict = Verdict::kInapplicable;
    return rec;
  }
  try {
    rec.distance = rec.stable
                       ? distance_or_inconclusive(sys, opts, rec.error)
                       : distance_or_inconclusive(stable_reduction(sys), opts,
                                                  rec.error);
  } catch (const Error& e) {
    rec.error = e.what();
    rec.verdict = Verdict::kInconclusive;
    return rec;
  }
  const bool positive = std::holds_alternative<LowerBound>(*rec.distance);
  rec.hypotheses.push_back({"positive_distance", positive,
                            "distance result " + result_kind(*rec.distance)});
  if (positive)
    rec.verdict = Verdict::kFiniteMemory;
  else if (std::holds_alternative<Witness>(*rec.distance))
    rec.verdict = Verdict::kInapplicable;
  else
    rec.verdict = Verdict::kInconclusive;
  return rec;
}

Thm3Record check_thm3(const QuantizedLtiSystem& sys,
                      const DistanceOptions& opts) {
  Thm3Record rec;
  const double rho = numlin::spectral_radius(sys.A());
  rec.hypotheses.push_back({"spectral_radius_below_one", rho < 1.0,
                            "spectral radius " + fmt(rho)});
  rec.hypotheses.push_back(zero_input_hypothesis(sys));
  rec.hypotheses.push_back(zero_off_breakpoints(sys));
  rec.ranks = numlin::rank_sequence(sys.C(), sys.A(), static_cast<int>(sys.n()));
  rec.rank_ok = std::all_of(rec.ranks.begin(), rec.ranks.end(),
                            [&](int r) { return r == sys.p(); });
  rec.hypotheses.push_back({"full_output_rank", rec.rank_ok,
                            "rank(C A^l) = p for l = 1..n"});
  if (!all_hold(rec.hypotheses)) {
    rec.verdict = Verdict::kInapplicable;
    return rec;
  }
  try {
    rec.intersection = distance_or_inconclusive(sys, opts, rec.error);
  } catch (const Error& e) {
    rec.error = e.what();
    rec.verdict = Verdict::kInconclusive;
    return rec;
  }
  const bool hit = std::holds_alternative<Witness>(*rec.intersection);
  rec.hypotheses.push_back({"forced_response_hits_breakpoint", hit,
                            "distance result " + result_kind(*rec.intersection)});
  if (hit)
    rec.verdict = Verdict::kNotFiniteMemory;
  else if (std::holds_alternative<LowerBound>(*rec.intersection))
    rec.verdict = Verdict::kInapplicable;
  else
    rec.verdict = Verdict::kInconclusive;
  return rec;
}

Thm4Record check_thm4(const QuantizedLtiSystem& sys, double tol) {
  Thm4Record rec;
  const double rho = numlin::spectral_radius(sys.A());
  rec.hypotheses.push_back({"spectral_radius_at_least_one", rho >= 1.0,
                            "spectral radius " + fmt(rho)});
  rec.hypotheses.push_back(zero_input_hypothesis(sys));
  rec.hypotheses.push_back(zero_off_breakpoints(sys));

  const double c_scale = tol * std::max(1.0, norm2(sys.C()));
  std::string seen = "no eigenvalue with |lambda| > 1";
  for (auto lambda : numlin::distinct_eigenvalues(sys.A())) {
    if (std::abs(lambda) <= 1.0 + tol) continue;
    const Eigen::MatrixXcd space = numlin::eigenspace(sys.A(), lambda);
    if (space.cols() == 0) continue;
    const double visible =
        (sys.C().cast<std::complex<double>>() * space).norm();
    seen = "||C v|| = " + fmt(visible) + " for lambda = " + fmt(lambda.real()) +
           (lambda.imag() != 0.0 ? "+" + fmt(lambda.imag()) + "i" : "");
    if (visible > c_scale) {
      rec.has_unstable_visible_eigvec = true;
      break;
    }
  }
  rec.hypotheses.push_back(
      {"unstable_eigenvector_visible", rec.has_unstable_visible_eigvec, seen});
  rec.zero_cell_bounded = sys.quantizer().zero_cell_bounded();
  rec.hypotheses.push_back({"zero_cell_bounded", rec.zero_cell_bounded, ""});
  rec.verdict =
      all_hold(rec.hypotheses) ? Verdict::kNotFiniteMemory : Verdict::kInapplicable;
  return rec;
}

Thm6Record check_thm6(const QuantizedLtiSystem& sys, double tol) {
  Thm6Record rec;
  rec.hypotheses.push_back({"scalar_output", sys.p() == 1,
                            "p = " + std::to_string(sys.p())});
  rec.hypotheses.push_back(zero_input_hypothesis(sys));
  double beta = 0.0;
  const bool has_beta =
      sys.p() == 1 && sys.quantizer().smallest_positive_breakpoint(0, beta);
  rec.hypotheses.push_back({"positive_breakpoint", has_beta,
                            has_beta ? "beta = " + fmt(beta) : ""});
  if (!all_hold(rec.hypotheses)) return rec;

  const double c_norm = norm2(sys.C());
  bool found_pair = false;
  for (const auto& pair : numlin::real_unstable_eigenpairs(sys.A())) {
    const Eigen::VectorXd v = pair.vector.real();
    const double cv = (sys.C() * v)(0);
    if (std::abs(cv) <= tol * std::max(1.0, c_norm)) continue;
    found_pair = true;
    const Eigen::VectorXd x_star = (beta / cv) * v;
    const Eigen::VectorXd drift = sys.A() * (sys.A() * x_star);
    const double scale = tol * std::max(1.0, drift.norm());
    for (InputIndex i = 0; i < sys.alphabet_size(); ++i) {
      const double r = (drift + sys.B() * sys.input(i)).norm();
      if (r <= scale) {
        rec.certificate = Thm6Certificate{pair.value.real(), v, x_star, i,
                                          sys.input(i), beta, r};
        break;
      }
    }
    if (rec.certificate) break;
  }
  rec.hypotheses.push_back(
      {"visible_real_eigenvalue_above_one", found_pair, ""});
  rec.hypotheses.push_back({"cancelling_input", rec.certificate.has_value(),
                            rec.certificate ? "u* is input " +
                                                  std::to_string(rec.certificate->u_star_index)
                                            : "no input cancels A^2 x*"});
  rec.verdict = rec.certificate ? Verdict::kNotAsymptoticallyObservable
                                : Verdict::kInapplicable;
  return rec;
}

ObservabilityReport full_report(const QuantizedLtiSystem& sys,
                                const AnalysisOptions& opts) {
  ObservabilityReport rep;
  rep.x0_bound = opts.x0_bound;
  DistanceOptions dopts = opts.distance;

  rep.nilpotency = check_nilpotent_output(sys);

  try {
    rep.thm2 = check_thm2(sys, dopts);
    if (rep.thm2.error) rep.errors.push_back("thm2: " + *rep.thm2.error);
  } catch (const Error& e) {
    rep.errors.push_back(std::string("thm2: ") + e.what());
  }
  try {
    rep.thm3 = check_thm3(sys, dopts);
    if (rep.thm3.error) rep.errors.push_back("thm3: " + *rep.thm3.error);
  } catch (const Error& e) {
    rep.errors.push_back(std::string("thm3: ") + e.what());
  }
  try {
    rep.thm4 = check_thm4(sys);
  } catch (const Error& e) {
    rep.errors.push_back(std::string("thm4: ") + e.what());
  }
  try {
    rep.thm6 = check_thm6(sys);
  } catch (const Error& e) {
    rep.errors.push_back(std::string("thm6: ") + e.what());
  }

  auto& sum = rep.summary;
  if (rep.nilpotency) {
    rep.chosen_T = *rep.nilpotency;
    sum.certified_by = "nilpotent_output";
  } else if (rep.thm2.verdict == Verdict::kFiniteMemory) {
    const double d = std::get<LowerBound>(*rep.thm2.distance).d;
    try {
      rep.chosen_T = rep.thm2.stable
                         ? choose_horizon_stable(sys, opts.x0_bound, d)
                         : choose_horizon_general(sys, opts.x0_bound, d);
      sum.certified_by = "positive_distance";
    } catch (const Error& e) {
      rep.errors.push_back(std::string("horizon: ") + e.what());
    }
  }

  if (rep.chosen_T) {
    sum.finite_memory = sum.weakly = sum.asymptotically = true;
    sum.verdict = Verdict::kFiniteMemory;
  }
  if (rep.thm6.certificate) {
    sum.asymptotically = false;
    if (!sum.weakly) sum.weakly = false;
    if (!sum.finite_memory) sum.finite_memory = false;
    if (!rep.chosen_T) {
      sum.verdict = Verdict::kNotAsymptoticallyObservable;
      sum.certified_by = "unobservable_family";
    }
  } else if (rep.thm3.verdict == Verdict::kNotFiniteMemory ||
             rep.thm4.verdict == Verdict::kNotFiniteMemory) {
    if (!sum.finite_memory) {
      sum.finite_memory = false;
      sum.verdict = Verdict::kNotFiniteMemory;
      sum.certified_by = rep.thm3.verdict == Verdict::kNotFiniteMemory
                             ? "breakpoint_witness"
                             : "visible_unstable_mode";
    }
  }

  // finite memory => weak => asymptotic.
  auto implies = [](const std::optional<bool>& a, const std::optional<bool>& b) {
    return !(a.value_or(false) && b.has_value() && !*b);
  };
  sum.hierarchy_consistent = implies(sum.finite_memory, sum.weakly) &&
                             implies(sum.weakly, sum.asymptotically) &&
                             implies(sum.finite_memory, sum.asymptotically);
  if (!sum.hierarchy_consistent)
    rep.errors.push_back("contradictory verdicts across checkers");
  return rep;
}

}  // namespace quantobs
