#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "quantobs/plant.hpp"

namespace quantobs {

// Certified lower bound on the distance between the forced responses and
// the quantizer discontinuities.
struct LowerBound {
  double d = 0.0;
  int k = 0;
  double min_distance = 0.0;  // smallest distance seen at depth k
  double tail = 0.0;          // bound on what later inputs can add
};

// A forced response lying on a discontinuity.
struct Witness {
  Eigen::VectorXd y;
  InputSequence tuple;  // earliest input first
  int k = 0;
  double distance = 0.0;
};

struct Inconclusive {
  int k_max = 0;
  double min_distance = 0.0;
  double tail = 0.0;
};

using DistanceResult = std::variant<LowerBound, Witness, Inconclusive>;

std::string result_kind(const DistanceResult& r);

struct DistanceOptions {
  int max_k = 12;
  std::uint64_t budget = kDefaultEnumerationBudget;
  // Defaults to 1e-12 * (1 + largest breakpoint magnitude).
  std::optional<double> witness_tol;
};

double default_witness_tol(const ProductQuantizer& q);

// Requires spectral radius < 1 and the zero input in the alphabet
// (PreconditionError otherwise). Throws BudgetError if a depth within
// max_k cannot be enumerated.
DistanceResult algorithm1(const QuantizedLtiSystem& sys,
                          const DistanceOptions& opts = {});

// Smallest l in 1..n with ||C A^l|| <= tol ||C|| ||A||^l.
std::optional<int> check_nilpotent_output(const QuantizedLtiSystem& sys,
                                          double tol = 1e-9);

// Upper bound on ||x0||_2 when every coordinate satisfies |x0_i| <= bound.
double euclidean_state_bound(double inf_bound, Eigen::Index n);

inline constexpr int kHorizonCap = 10000;

// Smallest T >= 1 with ||A^T|| < d_lower / (2 b0 ||C||), where
// b0 = neumann_sum_bound(A) * max(sqrt(n) x0_bound, max ||B u||).
int choose_horizon_stable(const QuantizedLtiSystem& sys, double x0_bound,
                          double d_lower);

double stable_horizon_lhs(const QuantizedLtiSystem& sys, int horizon);
double stable_horizon_rhs(const QuantizedLtiSystem& sys, double x0_bound,
                          double d_lower);

// Split of the state space into the invariant subspaces with |lambda| >= 1
// and |lambda| < 1. stable_coords maps x to its coordinates in the stable
// basis along the unstable subspace.
struct SpectralSplit {
  Eigen::MatrixXd unstable_basis;
  Eigen::MatrixXd stable_basis;
  Eigen::MatrixXd stable_coords;
  Eigen::MatrixXd stable_block;  // action of A in the stable basis
};

SpectralSplit spectral_split(const Eigen::MatrixXd& a);

// True iff the |lambda| >= 1 generalized eigenspace lies in ker C.
bool unstable_in_kernel(const QuantizedLtiSystem& sys);

// The realization restricted to the stable subspace. It has the same
// forced responses as sys whenever unstable_in_kernel(sys) holds.
QuantizedLtiSystem stable_reduction(const QuantizedLtiSystem& sys);

// Smallest T >= 1 with ||C A^T W_S|| b_S < d_lower / 2, where b_S bounds the
// stable coordinates of every trajectory from the x0_bound box.
// PreconditionError unless unstable_in_kernel(sys) and d_lower > 0.
int choose_horizon_general(const QuantizedLtiSystem& sys, double x0_bound,
                           double d_lower);

struct GeneralHorizonTerms {
  Eigen::MatrixXd output_map;  // C W_S
  Eigen::MatrixXd stable_block;
  double b_s = 0.0;
};
GeneralHorizonTerms general_horizon_terms(const QuantizedLtiSystem& sys,
                                          double x0_bound);
double general_horizon_lhs(const GeneralHorizonTerms& terms, int horizon);

enum class Verdict {
  kFiniteMemory,
  kNotFiniteMemory,
  kNotAsymptoticallyObservable,
  kInapplicable,
  kInconclusive,
};

std::string to_string(Verdict v);

struct Hypothesis {
  std::string name;
  bool holds = false;
  std::string detail;
};

struct Thm2Record {
  std::optional<DistanceResult> distance;
  bool stable = false;
  bool unstable_in_kernel = false;
  std::vector<Hypothesis> hypotheses;
  Verdict verdict = Verdict::kInapplicable;
  std::optional<std::string> error;
};

struct Thm3Record {
  std::vector<int> ranks;
  bool rank_ok = false;
  std::optional<DistanceResult> intersection;
  std::vector<Hypothesis> hypotheses;
  Verdict verdict = Verdict::kInapplicable;
  std::optional<std::string> error;
};

struct Thm4Record {
  bool has_unstable_visible_eigvec = false;
  bool zero_cell_bounded = false;
  std::vector<Hypothesis> hypotheses;
  Verdict verdict = Verdict::kInapplicable;
};

struct Thm6Certificate {
  double lambda = 0.0;
  Eigen::VectorXd v;
  Eigen::VectorXd x_star;
  InputIndex u_star_index = 0;
  Eigen::VectorXd u_star;
  double beta = 0.0;
  double residual = 0.0;  // ||A^2 x* + B u*||
};

struct Thm6Record {
  std::optional<Thm6Certificate> certificate;
  std::vector<Hypothesis> hypotheses;
  Verdict verdict = Verdict::kInapplicable;
};

Thm3Record check_thm3(const QuantizedLtiSystem& sys,
                      const DistanceOptions& opts = {});
Thm4Record check_thm4(const QuantizedLtiSystem& sys, double tol = 1e-9);
Thm6Record check_thm6(const QuantizedLtiSystem& sys, double tol = 1e-9);

// Internal to full_report but exposed for testing.
Thm2Record check_thm2(const QuantizedLtiSystem& sys,
                      const DistanceOptions& opts = {});

struct ObservabilitySummary {
  std::optional<bool> finite_memory;
  std::optional<bool> weakly;
  std::optional<bool> asymptotically;
  Verdict verdict = Verdict::kInconclusive;
  std::string certified_by;
  // finite memory => weak => asymptotic holds for the asserted values.
  bool hierarchy_consistent = true;
};

struct ObservabilityReport {
  std::optional<int> nilpotency;
  Thm2Record thm2;
  Thm3Record thm3;
  Thm4Record thm4;
  Thm6Record thm6;
  std::optional<int> chosen_T;
  double x0_bound = 1.0;
  ObservabilitySummary summary;
  std::vector<std::string> errors;
};

struct AnalysisOptions {
  double x0_bound = 1.0;  // bound on |x0_i|
  DistanceOptions distance;
};

// Never throws for analysis failures; they land in errors.
ObservabilityReport full_report(const QuantizedLtiSystem& sys,
                                const AnalysisOptions& opts = {});

}  // namespace quantobs
