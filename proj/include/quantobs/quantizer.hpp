#pragma once

#include <vector>

#include <Eigen/Dense>

namespace quantobs {

// One-dimensional right-continuous saturating quantizer. Cell i is
// [breakpoints[i-1], breakpoints[i]) with the two outer cells unbounded;
// cell i maps to levels[i].
class IntervalQuantizer {
 public:
  IntervalQuantizer(std::vector<double> breakpoints, std::vector<double> levels);

  const std::vector<double>& breakpoints() const { return breakpoints_; }
  const std::vector<double>& levels() const { return levels_; }

  // Index of the cell containing value.
  std::size_t cell(double value) const;
  double quantize(double value) const;
  double breakpoint_distance(double value) const;

  // Largest delta with the quantizer constant on [value, value + delta);
  // +infinity in the last cell.
  double right_slack(double value) const;

  bool zero_cell_bounded() const;

  // Smallest |levels[i] - levels[j]| over distinct labels.
  double min_label_gap() const;

 private:
  std::vector<double> breakpoints_;
  std::vector<double> levels_;
};

class ProductQuantizer {
 public:
  explicit ProductQuantizer(std::vector<IntervalQuantizer> dims);

  std::size_t dims() const { return dims_.size(); }
  const IntervalQuantizer& dim(std::size_t i) const { return dims_.at(i); }
  const std::vector<IntervalQuantizer>& all_dims() const { return dims_; }

  // Throws DomainError on NaN and DimensionError on size mismatch.
  Eigen::VectorXd quantize(const Eigen::VectorXd& y) const;

  // Euclidean distance from y to the union of the axis-aligned breakpoint
  // hyperplanes.
  double breakpoint_distance(const Eigen::VectorXd& y) const;

  bool zero_cell_bounded() const;

  // Labels of the zero vector.
  Eigen::VectorXd zero_label() const;

  double min_label_gap() const;

  // Smallest strictly positive breakpoint in dimension i, if any.
  bool smallest_positive_breakpoint(std::size_t i, double& out) const;

 private:
  void check_size(const Eigen::VectorXd& y) const;

  std::vector<IntervalQuantizer> dims_;
};

// Rounds to the nearest integer with ties upward, saturating at +-r:
// breakpoints i + 0.5 for i = -r..r-1, levels -r..r.
IntervalQuantizer saturating_rounding_quantizer(int r);

// Two-level quantizer: lower label below the threshold, upper label at or
// above it.
IntervalQuantizer threshold_quantizer(double threshold, double lower = 0.0,
                                      double upper = 1.0);

}  // namespace quantobs
