#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <vector>

#include <Eigen/Dense>

#include "quantobs/observer.hpp"
#include "quantobs/plant.hpp"

namespace quantobs {

struct RunRecord {
  InputSequence inputs;
  std::vector<double> input_norms;
  std::vector<Eigen::VectorXd> outputs;
  std::vector<Eigen::VectorXd> predictions;
  std::vector<double> errors;  // ||y_t - yhat_t||
  std::optional<std::size_t> last_error_time;
  // Set when the plant state stopped being finite; the record is truncated
  // there.
  std::optional<std::size_t> overflow_time;

  std::size_t size() const { return errors.size(); }
};

// Closed loop of plant and observer: at each t the observer predicts y_t
// from u_t, then receives (u_t, y_t).
RunRecord interconnect(const QuantizedLtiSystem& sys, ObserverContract& observer,
                       const Eigen::VectorXd& x0, const InputSequence& inputs);

// Feeds a recorded input/output sequence to an observer.
RunRecord replay(const QuantizedLtiSystem& sys, ObserverContract& observer,
                 const InputSequence& inputs,
                 const std::vector<Eigen::VectorXd>& outputs);

struct GainEstimate {
  double gamma = 0.0;
  double running_sup = 0.0;
  std::size_t horizon = 0;
  std::size_t argmax_time = 0;
  // Heuristic: the supremum exceeds the threshold and was still rising in
  // the last quarter of the record. Evidence only.
  bool violated = false;
};

// sup over T of sum_{t <= T} (e_t - gamma ||u_t||). An empty record gives 0.
GainEstimate gain_functional(const RunRecord& record, double gamma,
                             double threshold = 1.0);

struct MonteCarloOptions {
  std::size_t trials = 500;
  std::size_t horizon = 100;
  double x0_bound = 1.0;  // |x0_i| <= x0_bound
  std::uint64_t seed = 1;
  unsigned threads = 0;   // 0: hardware concurrency
  // Errors at or after this time count as violations.
  std::optional<std::size_t> settle_time;
};

struct MonteCarloSummary {
  std::size_t trials = 0;
  std::optional<std::size_t> max_last_error_time;
  std::size_t trials_with_errors = 0;
  std::size_t violations = 0;
  std::size_t overflows = 0;
  std::vector<std::optional<std::size_t>> last_error_times;

  bool operator==(const MonteCarloSummary&) const = default;
};

// Independent trials with x0 uniform in the box and i.i.d. uniform input
// indices. Trial i draws from a generator seeded with (seed, i), so the
// summary does not depend on the thread count.
MonteCarloSummary monte_carlo_settling(const QuantizedLtiSystem& sys,
                                       const ObserverFactory& factory,
                                       const MonteCarloOptions& opts);

// Inputs and initial state of trial `trial`, as drawn by monte_carlo_settling.
std::pair<Eigen::VectorXd, InputSequence> monte_carlo_draw(
    const QuantizedLtiSystem& sys, const MonteCarloOptions& opts,
    std::size_t trial);

// One row per step: t,u,y,y_hat,e. Vector labels are joined with ';'.
void write_csv(std::ostream& os, const RunRecord& record);

}  // namespace quantobs
