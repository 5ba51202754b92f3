#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "quantobs/io.hpp"
#include "quantobs/plant.hpp"
#include "quantobs/quantizer.hpp"

namespace testsupport {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using quantobs::InputSequence;
using quantobs::QuantizedLtiSystem;

inline std::string fixture(const std::string& name) {
  return std::string(QUANTOBS_FIXTURES_DIR) + "/" + name;
}

inline quantobs::io::SystemDocument load(const std::string& name) {
  return quantobs::io::load_system_file(fixture(name));
}

inline MatrixXd mat(std::initializer_list<std::initializer_list<double>> rows) {
  const auto r = static_cast<Eigen::Index>(rows.size());
  const auto c = static_cast<Eigen::Index>(rows.begin()->size());
  MatrixXd m(r, c);
  Eigen::Index i = 0;
  for (const auto& row : rows) {
    Eigen::Index j = 0;
    for (double v : row) m(i, j++) = v;
    ++i;
  }
  return m;
}

inline VectorXd vec(std::initializer_list<double> v) {
  VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

// Scalar-input, scalar-output system with the given input values.
inline QuantizedLtiSystem scalar_system(const MatrixXd& a, const MatrixXd& b,
                                        const MatrixXd& c, const MatrixXd& d,
                                        std::vector<double> inputs,
                                        quantobs::IntervalQuantizer q) {
  std::vector<VectorXd> us;
  for (double u : inputs) us.push_back(vec({u}));
  return QuantizedLtiSystem(a, b, c, d, us, quantobs::ProductQuantizer({q}));
}

inline MatrixXd random_matrix(std::mt19937_64& rng, Eigen::Index r,
                              Eigen::Index c, double scale = 1.0) {
  std::uniform_real_distribution<double> dist(-scale, scale);
  MatrixXd m(r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = dist(rng);
  return m;
}

// Random matrix rescaled to the requested spectral radius.
inline MatrixXd random_with_radius(std::mt19937_64& rng, Eigen::Index n,
                                   double radius) {
  MatrixXd a = random_matrix(rng, n, n);
  const double rho = a.eigenvalues().cwiseAbs().maxCoeff();
  if (rho < 1e-6) return a;
  return a * (radius / rho);
}

// Forced response by explicit zero-state simulation, last time of a run of
// length k.
inline VectorXd forced_by_simulation(const QuantizedLtiSystem& sys,
                                     const InputSequence& tuple) {
  VectorXd x = VectorXd::Zero(sys.n());
  VectorXd y;
  for (std::size_t t = 0; t < tuple.size(); ++t) {
    const VectorXd& u = sys.input(tuple[t]);
    y = sys.C() * x + sys.D() * u;
    x = sys.A() * x + sys.B() * u;
  }
  return y;
}

// Every tuple of length k over the alphabet, by recursion.
inline void all_tuples(std::size_t alphabet, int k, InputSequence& prefix,
                       std::vector<InputSequence>& out) {
  if (static_cast<int>(prefix.size()) == k) {
    out.push_back(prefix);
    return;
  }
  for (std::size_t i = 0; i < alphabet; ++i) {
    prefix.push_back(i);
    all_tuples(alphabet, k, prefix, out);
    prefix.pop_back();
  }
}

inline std::vector<InputSequence> all_tuples(std::size_t alphabet, int k) {
  std::vector<InputSequence> out;
  InputSequence prefix;
  all_tuples(alphabet, k, prefix, out);
  return out;
}

// Distance to the nearest breakpoint hyperplane, computed directly.
inline double distance_to_breakpoints(const quantobs::ProductQuantizer& q,
                                      const VectorXd& y) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < q.dims(); ++i)
    for (double b : q.dim(i).breakpoints())
      best = std::min(best, std::abs(y(static_cast<Eigen::Index>(i)) - b));
  return best;
}

// Smallest breakpoint distance over the depth-k forced responses.
inline double oracle_min_distance(const QuantizedLtiSystem& sys, int k) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& tuple : all_tuples(sys.alphabet_size(), k))
    best = std::min(best, distance_to_breakpoints(sys.quantizer(),
                                                  forced_by_simulation(sys, tuple)));
  return best;
}

}  // namespace testsupport
