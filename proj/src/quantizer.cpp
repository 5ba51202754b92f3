#include "quantobs/quantizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "quantobs/errors.hpp"

namespace quantobs {

IntervalQuantizer::IntervalQuantizer(std::vector<double> breakpoints,
                                     std::vector<double> levels)
    : breakpoints_(std::move(breakpoints)), levels_(std::move(levels)) {
  if (breakpoints_.empty())
    throw DomainError("quantizer needs at least one breakpoint");
  if (levels_.size() != breakpoints_.size() + 1)
    throw DimensionError("quantizer with " +
                         std::to_string(breakpoints_.size()) +
                         " breakpoints needs " +
                         std::to_string(breakpoints_.size() + 1) +
                         " levels, got " + std::to_string(levels_.size()));
  for (double b : breakpoints_)
    if (!std::isfinite(b)) throw DomainError("non-finite breakpoint");
  for (double l : levels_)
    if (!std::isfinite(l)) throw DomainError("non-finite level");
  for (std::size_t i = 1; i < breakpoints_.size(); ++i)
    if (!(breakpoints_[i - 1] < breakpoints_[i]))
      throw DomainError("breakpoints must be strictly increasing");
  std::vector<double> sorted = levels_;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
    throw DomainError("quantizer levels must be pairwise distinct");
}

std::size_t IntervalQuantizer::cell(double value) const {
  if (std::isnan(value)) throw DomainError("cannot quantize NaN");
  // Number of breakpoints <= value.
  return static_cast<std::size_t>(
      std::upper_bound(breakpoints_.begin(), breakpoints_.end(), value) -
      breakpoints_.begin());
}

double IntervalQuantizer::quantize(double value) const {
  return levels_[cell(value)];
}

double IntervalQuantizer::breakpoint_distance(double value) const {
  double best = std::numeric_limits<double>::infinity();
  const auto it =
      std::lower_bound(breakpoints_.begin(), breakpoints_.end(), value);
  if (it != breakpoints_.end()) best = std::min(best, std::abs(*it - value));
  if (it != breakpoints_.begin())
    best = std::min(best, std::abs(*(it - 1) - value));
  return best;
}

double IntervalQuantizer::right_slack(double value) const {
  const std::size_t c = cell(value);
  if (c == breakpoints_.size()) return std::numeric_limits<double>::infinity();
  return breakpoints_[c] - value;
}

bool IntervalQuantizer::zero_cell_bounded() const {
  const std::size_t c = cell(0.0);
  return c != 0 && c != breakpoints_.size();
}

double IntervalQuantizer::min_label_gap() const {
  std::vector<double> sorted = levels_;
  std::sort(sorted.begin(), sorted.end());
  double gap = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < sorted.size(); ++i)
    gap = std::min(gap, sorted[i] - sorted[i - 1]);
  return gap;
}

ProductQuantizer::ProductQuantizer(std::vector<IntervalQuantizer> dims)
    : dims_(std::move(dims)) {
  if (dims_.empty())
    throw DimensionError("product quantizer needs at least one dimension");
}

void ProductQuantizer::check_size(const Eigen::VectorXd& y) const {
  if (static_cast<std::size_t>(y.size()) != dims_.size())
    throw DimensionError("quantizer has " + std::to_string(dims_.size()) +
                         " dimensions, got vector of size " +
                         std::to_string(y.size()));
}

Eigen::VectorXd ProductQuantizer::quantize(const Eigen::VectorXd& y) const {
  check_size(y);
  Eigen::VectorXd out(y.size());
  for (Eigen::Index i = 0; i < y.size(); ++i)
    out(i) = dims_[static_cast<std::size_t>(i)].quantize(y(i));
  return out;
}

double ProductQuantizer::breakpoint_distance(const Eigen::VectorXd& y) const {
  check_size(y);
  double best = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < y.size(); ++i)
    best = std::min(best,
                    dims_[static_cast<std::size_t>(i)].breakpoint_distance(y(i)));
  return best;
}

bool ProductQuantizer::zero_cell_bounded() const {
  return std::all_of(dims_.begin(), dims_.end(),
                     [](const IntervalQuantizer& q) {
                       return q.zero_cell_bounded();
                     });
}

Eigen::VectorXd ProductQuantizer::zero_label() const {
  return quantize(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dims_.size())));
}

double ProductQuantizer::min_label_gap() const {
  double gap = std::numeric_limits<double>::infinity();
  for (const auto& q : dims_) gap = std::min(gap, q.min_label_gap());
  return gap;
}

bool ProductQuantizer::smallest_positive_breakpoint(std::size_t i,
                                                    double& out) const {
  for (double b : dims_.at(i).breakpoints()) {
    if (b > 0.0) {
      out = b;
      return true;
    }
  }
  return false;
}

IntervalQuantizer saturating_rounding_quantizer(int r) {
  if (r < 1) throw DomainError("saturation level must be at least 1");
  std::vector<double> breakpoints;
  std::vector<double> levels;
  for (int i = -r; i < r; ++i) breakpoints.push_back(i + 0.5);
  for (int i = -r; i <= r; ++i) levels.push_back(i);
  return IntervalQuantizer(std::move(breakpoints), std::move(levels));
}

IntervalQuantizer threshold_quantizer(double threshold, double lower,
                                      double upper) {
  return IntervalQuantizer({threshold}, {lower, upper});
}

}  // namespace quantobs
