#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "quantobs/analysis.hpp"
#include "quantobs/harness.hpp"
#include "quantobs/observer.hpp"
#include "quantobs/plant.hpp"

namespace quantobs {

// Parameters of the binary tree of indistinguishable-prefix runs built from
// an unstable visible eigenpair. Node (k, j) starts from a sum of scaled
// copies of s_o that reach x* (and fire the quantizer) at multiples of the
// stage length; the input u* one step later cancels each copy.
struct PsiParams {
  int T = 0;  // stage length
  double lambda = 0.0;
  Eigen::VectorXd v;
  Eigen::VectorXd x_star;
  InputIndex u_star_index = 0;
  InputIndex zero_index = 0;
  double beta = 0.0;
  Eigen::VectorXd s_o;  // x* / lambda^T
  double q = 0.0;       // lambda^-T
  double delta1 = 0.0;  // may be +infinity
  double delta2 = 0.0;  // may be +infinity
};

inline constexpr int kStageLengthCap = 1000;

// The five stage-length conditions for given lambda and slacks.
bool stage_length_ok(int T, double lambda, double beta, double delta1,
                     double delta2);

// Smallest T >= 2 meeting all stage-length conditions. Throws
// PreconditionError if the system lacks a zero input or has p != 1, and
// BudgetError if no T <= kStageLengthCap works.
PsiParams psi_choose_T(const QuantizedLtiSystem& sys,
                       const Thm6Certificate& cert);

// Bit l (1-based) of node (k, j).
bool psi_bit(int k, std::uint64_t j, int l);

Eigen::VectorXd psi_initial_state(int k, std::uint64_t j, const PsiParams& params);
InputSequence psi_input_segment(int k, std::uint64_t j, const PsiParams& params);

struct PsiNode {
  int k = 0;
  std::uint64_t j = 0;  // 1..2^k
  Eigen::VectorXd s;
  InputSequence inputs;                  // length kT+1
  std::vector<Eigen::VectorXd> outputs;  // length kT+1
  std::vector<Eigen::VectorXd> raw_outputs;

  std::size_t horizon(int T) const { return static_cast<std::size_t>(k) * T; }
};

struct PsiFamily {
  PsiParams params;
  int depth = 0;
  // levels[k-1][j-1] is node (k, j).
  std::vector<std::vector<PsiNode>> levels;

  const PsiNode& node(int k, std::uint64_t j) const;
  PsiNode& node(int k, std::uint64_t j);
  std::size_t size() const;
};

inline constexpr std::uint64_t kPsiBudget = 50000000;

PsiFamily psi_build(const QuantizedLtiSystem& sys, const PsiParams& params,
                    int depth, std::uint64_t budget = kPsiBudget);

struct PsiViolation {
  std::string item;  // "i", "ii", "iii"
  int k = 0;
  std::uint64_t j = 0;
  std::size_t t = 0;
  std::string message;
};

struct PsiVerification {
  bool siblings_ok = true;    // item (i)
  bool extension_ok = true;   // item (ii)
  bool paths_ok = true;       // item (iii)
  std::size_t sibling_pairs = 0;
  std::size_t extensions = 0;
  std::size_t left_paths = 0;
  double all_right_margin = 0.0;  // smallest breakpoint distance on the limit run
  std::vector<PsiViolation> violations;

  bool ok() const { return siblings_ok && extension_ok && paths_ok; }
};

// Margin the all-right limit run must keep from every breakpoint.
inline constexpr double kLimitMargin = 1e-9;

PsiVerification psi_verify(const QuantizedLtiSystem& sys, const PsiFamily& family);

struct AdversarialResult {
  // The prediction error forced at the end of each stage.
  std::vector<std::size_t> stage_error_times;
  std::vector<std::uint64_t> path;  // j(k) for k = 1..K
  // Every mismatch of a fresh observer run over the final path node.
  std::vector<std::size_t> all_mismatch_times;
  RunRecord record;
};

// Walks the tree stage by stage, each time following the sibling on which
// a fresh observer mispredicts the end-of-stage output. Throws Error if
// neither sibling is mispredicted.
AdversarialResult psi_adversarial_run(const QuantizedLtiSystem& sys,
                                      const PsiFamily& family,
                                      const ObserverFactory& factory, int depth);

}  // namespace quantobs
