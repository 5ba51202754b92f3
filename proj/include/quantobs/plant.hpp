#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "quantobs/quantizer.hpp"

namespace quantobs {

using InputIndex = std::size_t;
using InputSequence = std::vector<InputIndex>;

// x_{t+1} = A x_t + B u_t, raw output C x_t + D u_t, label Q(raw output).
// Inputs are drawn from a finite alphabet and referenced by index.
class QuantizedLtiSystem {
 public:
  QuantizedLtiSystem(Eigen::MatrixXd a, Eigen::MatrixXd b, Eigen::MatrixXd c,
                     Eigen::MatrixXd d, std::vector<Eigen::VectorXd> inputs,
                     ProductQuantizer quantizer);

  const Eigen::MatrixXd& A() const { return a_; }
  const Eigen::MatrixXd& B() const { return b_; }
  const Eigen::MatrixXd& C() const { return c_; }
  const Eigen::MatrixXd& D() const { return d_; }
  const std::vector<Eigen::VectorXd>& inputs() const { return inputs_; }
  const ProductQuantizer& quantizer() const { return quantizer_; }

  Eigen::Index n() const { return a_.rows(); }
  Eigen::Index m() const { return b_.cols(); }
  Eigen::Index p() const { return c_.rows(); }
  std::size_t alphabet_size() const { return inputs_.size(); }

  // Throws InputError for an index outside the alphabet.
  const Eigen::VectorXd& input(InputIndex i) const;
  void check_index(InputIndex i) const;

  // Index of the zero vector in the alphabet, if present.
  std::optional<InputIndex> zero_input_index() const;

  // Largest Euclidean norm of B u over the alphabet.
  double max_input_effect() const;

 private:
  Eigen::MatrixXd a_, b_, c_, d_;
  std::vector<Eigen::VectorXd> inputs_;
  ProductQuantizer quantizer_;
};

struct Trajectory {
  std::vector<Eigen::VectorXd> states;       // x_t before input t is applied
  std::vector<Eigen::VectorXd> raw_outputs;  // C x_t + D u_t
  std::vector<Eigen::VectorXd> outputs;      // quantized labels
};

// Throws InputError on a bad index and OverflowError (carrying t) on the
// first non-finite state.
Trajectory simulate(const QuantizedLtiSystem& sys, const Eigen::VectorXd& x0,
                    const InputSequence& inputs);

// Zero-initial-state raw output at time t.
Eigen::VectorXd forced_response(const QuantizedLtiSystem& sys,
                                const InputSequence& inputs, std::size_t t);

// A point of the depth-k forced response set: the raw output at the last
// time of a zero-state run of length k, with the inputs that produced it
// (earliest first).
struct ForcedPoint {
  Eigen::VectorXd value;
  InputSequence tuple;
};

inline constexpr std::uint64_t kDefaultEnumerationBudget = 1000000;

// Number of tuples at depth k, or nullopt if it exceeds the budget.
std::optional<std::uint64_t> forced_set_size(const QuantizedLtiSystem& sys,
                                             int k, std::uint64_t budget);

// Streams every depth-k point in lexicographic tuple order. The visitor
// returns false to stop early. Throws BudgetError if |U|^k > budget.
void visit_forced_response_set(
    const QuantizedLtiSystem& sys, int k, std::uint64_t budget,
    const std::function<bool(const Eigen::VectorXd&, const InputSequence&)>&
        visitor);

std::vector<ForcedPoint> forced_response_set(
    const QuantizedLtiSystem& sys, int k,
    std::uint64_t budget = kDefaultEnumerationBudget);

// [C B, C A B, ..., C A^{T-1} B].
std::vector<Eigen::MatrixXd> markov_parameters(const QuantizedLtiSystem& sys,
                                               int horizon);

}  // namespace quantobs
