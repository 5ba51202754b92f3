#include "quantobs/plant.hpp"

#include <algorithm>
#include <string>

#include "quantobs/errors.hpp"
#include "quantobs/numlin.hpp"

namespace quantobs {

namespace {

std::string shape(const Eigen::MatrixXd& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

}  // namespace

QuantizedLtiSystem::QuantizedLtiSystem(Eigen::MatrixXd a, Eigen::MatrixXd b,
                                       Eigen::MatrixXd c, Eigen::MatrixXd d,
                                       std::vector<Eigen::VectorXd> inputs,
                                       ProductQuantizer quantizer)
    : a_(std::move(a)),
      b_(std::move(b)),
      c_(std::move(c)),
      d_(std::move(d)),
      inputs_(std::move(inputs)),
      quantizer_(std::move(quantizer)) {
  numlin::require_square(a_, "A");
  const Eigen::Index n = a_.rows();
  if (b_.rows() != n) throw DimensionError("B is " + shape(b_) + ", A is " + shape(a_));
  if (c_.cols() != n) throw DimensionError("C is " + shape(c_) + ", A is " + shape(a_));
  if (d_.rows() != c_.rows() || d_.cols() != b_.cols())
    throw DimensionError("D is " + shape(d_) + ", expected " +
                         std::to_string(c_.rows()) + "x" +
                         std::to_string(b_.cols()));
  if (static_cast<std::size_t>(c_.rows()) != quantizer_.dims())
    throw DimensionError("quantizer has " + std::to_string(quantizer_.dims()) +
                         " dimensions, C has " + std::to_string(c_.rows()) +
                         " rows");
  numlin::require_finite(a_, "A");
  numlin::require_finite(b_, "B");
  numlin::require_finite(c_, "C");
  numlin::require_finite(d_, "D");
  if (inputs_.empty()) throw InputError("input alphabet is empty");
  for (std::size_t i = 0; i < inputs_.size(); ++i) {
    if (inputs_[i].size() != b_.cols())
      throw DimensionError("input " + std::to_string(i) + " has size " +
                           std::to_string(inputs_[i].size()) + ", B has " +
                           std::to_string(b_.cols()) + " columns");
    if (!inputs_[i].allFinite())
      throw DomainError("input " + std::to_string(i) + " is not finite");
    for (std::size_t j = 0; j < i; ++j)
      if (inputs_[i] == inputs_[j])
        throw InputError("inputs " + std::to_string(j) + " and " +
                         std::to_string(i) + " are equal");
  }
}

void QuantizedLtiSystem::check_index(InputIndex i) const {
  if (i >= inputs_.size())
    throw InputError("input index " + std::to_string(i) +
                     " out of range for alphabet of size " +
                     std::to_string(inputs_.size()));
}

const Eigen::VectorXd& QuantizedLtiSystem::input(InputIndex i) const {
  check_index(i);
  return inputs_[i];
}

std::optional<InputIndex> QuantizedLtiSystem::zero_input_index() const {
  for (std::size_t i = 0; i < inputs_.size(); ++i)
    if (inputs_[i].isZero(0.0)) return i;
  return std::nullopt;
}

double QuantizedLtiSystem::max_input_effect() const {
  double h = 0.0;
  for (const auto& u : inputs_) h = std::max(h, (b_ * u).norm());
  return h;
}

Trajectory simulate(const QuantizedLtiSystem& sys, const Eigen::VectorXd& x0,
                    const InputSequence& inputs) {
  if (x0.size() != sys.n())
    throw DimensionError("initial state has size " + std::to_string(x0.size()) +
                         ", system order is " + std::to_string(sys.n()));
  for (InputIndex i : inputs) sys.check_index(i);

  Trajectory traj;
  traj.states.reserve(inputs.size());
  traj.raw_outputs.reserve(inputs.size());
  traj.outputs.reserve(inputs.size());
  Eigen::VectorXd x = x0;
  for (std::size_t t = 0; t < inputs.size(); ++t) {
    if (!x.allFinite())
      throw OverflowError(t, "state became non-finite at t = " +
                                 std::to_string(t));
    const Eigen::VectorXd& u = sys.input(inputs[t]);
    Eigen::VectorXd y = sys.C() * x + sys.D() * u;
    traj.outputs.push_back(sys.quantizer().quantize(y));
    traj.raw_outputs.push_back(std::move(y));
    traj.states.push_back(x);
    x = sys.A() * x + sys.B() * u;
  }
  return traj;
}

Eigen::VectorXd forced_response(const QuantizedLtiSystem& sys,
                                const InputSequence& inputs, std::size_t t) {
  if (t >= inputs.size())
    throw InputError("time " + std::to_string(t) +
                     " out of range for input sequence of length " +
                     std::to_string(inputs.size()));
  for (InputIndex i : inputs) sys.check_index(i);
  Eigen::VectorXd x = Eigen::VectorXd::Zero(sys.n());
  for (std::size_t tau = 0; tau < t; ++tau)
    x = sys.A() * x + sys.B() * sys.input(inputs[tau]);
  return sys.C() * x + sys.D() * sys.input(inputs[t]);
}

std::optional<std::uint64_t> forced_set_size(const QuantizedLtiSystem& sys,
                                             int k, std::uint64_t budget) {
  std::uint64_t count = 1;
  for (int i = 0; i < k; ++i) {
    if (count > budget / sys.alphabet_size()) return std::nullopt;
    count *= sys.alphabet_size();
  }
  if (count > budget) return std::nullopt;
  return count;
}

void visit_forced_response_set(
    const QuantizedLtiSystem& sys, int k, std::uint64_t budget,
    const std::function<bool(const Eigen::VectorXd&, const InputSequence&)>&
        visitor) {
  if (k < 1) throw InputError("forced response depth must be >= 1");
  if (!forced_set_size(sys, k, budget))
    throw BudgetError("depth " + std::to_string(k) + " needs " +
                      std::to_string(sys.alphabet_size()) + "^" +
                      std::to_string(k) + " tuples, budget is " +
                      std::to_string(budget));

  const std::size_t depth = static_cast<std::size_t>(k);
  const std::size_t m = sys.alphabet_size();
  // contrib[tau][i]: effect of input i applied at time tau on the output at
  // time k-1.
  std::vector<std::vector<Eigen::VectorXd>> contrib(depth);
  Eigen::MatrixXd ca = sys.C();
  for (std::size_t tau = depth; tau-- > 0;) {
    const Eigen::MatrixXd w = (tau == depth - 1) ? sys.D() : Eigen::MatrixXd(ca * sys.B());
    if (tau != depth - 1) ca = (ca * sys.A()).eval();
    contrib[tau].reserve(m);
    for (std::size_t i = 0; i < m; ++i) contrib[tau].push_back(w * sys.input(i));
  }

  // Odometer over tuples with partial sums per prefix length.
  InputSequence tuple(depth, 0);
  std::vector<Eigen::VectorXd> prefix(depth + 1, Eigen::VectorXd::Zero(sys.p()));
  for (std::size_t tau = 0; tau < depth; ++tau)
    prefix[tau + 1] = prefix[tau] + contrib[tau][0];
  while (true) {
    if (!visitor(prefix[depth], tuple)) return;
    std::size_t pos = depth;
    while (pos > 0 && tuple[pos - 1] + 1 == m) --pos;
    if (pos == 0) return;
    ++tuple[pos - 1];
    for (std::size_t tau = pos; tau < depth; ++tau) tuple[tau] = 0;
    for (std::size_t tau = pos - 1; tau < depth; ++tau)
      prefix[tau + 1] = prefix[tau] + contrib[tau][tuple[tau]];
  }
}

std::vector<ForcedPoint> forced_response_set(const QuantizedLtiSystem& sys,
                                             int k, std::uint64_t budget) {
  std::vector<ForcedPoint> out;
  visit_forced_response_set(
      sys, k, budget,
      [&out](const Eigen::VectorXd& value, const InputSequence& tuple) {
        out.push_back({value, tuple});
        return true;
      });
  return out;
}

std::vector<Eigen::MatrixXd> markov_parameters(const QuantizedLtiSystem& sys,
                                               int horizon) {
  if (horizon <= 0)
    throw InputError("Markov parameter horizon must be positive");
  std::vector<Eigen::MatrixXd> out;
  out.reserve(static_cast<std::size_t>(horizon));
  Eigen::MatrixXd ca = sys.C();
  for (int tau = 1; tau <= horizon; ++tau) {
    out.push_back(ca * sys.B());
    ca = (ca * sys.A()).eval();
  }
  return out;
}

}  // namespace quantobs
