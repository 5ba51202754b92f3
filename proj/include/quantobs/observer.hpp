#pragma once

#include <deque>
#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "quantobs/plant.hpp"

namespace quantobs {

// A deterministic observer with a fixed initial state. Each step the
// harness first asks for the prediction of y_t given u_t, then feeds the
// pair (u_t, y_t) back.
class ObserverContract {
 public:
  virtual ~ObserverContract() = default;
  virtual Eigen::VectorXd predict(InputIndex u) const = 0;
  virtual void update(InputIndex u, const Eigen::VectorXd& y) = 0;
};

using ObserverFactory = std::function<std::unique_ptr<ObserverContract>()>;

// Shift register of the last T inputs (newest first). Once the register is
// full, the prediction is the quantized response of the stored inputs plus
// the direct feedthrough of u; before that it is a fixed default label.
class FiniteInputObserver : public ObserverContract {
 public:
  // default_label defaults to the label of zero. Throws InputError for a
  // non-positive horizon and DomainError for a label outside the level set.
  static FiniteInputObserver build(
      const QuantizedLtiSystem& sys, int horizon,
      std::optional<Eigen::VectorXd> default_label = std::nullopt);

  Eigen::VectorXd predict(InputIndex u) const override;
  // The measured output is never read.
  void update(InputIndex u, const Eigen::VectorXd& y) override;
  void push(InputIndex u);
  void reset() { register_.clear(); }

  int horizon() const { return horizon_; }
  const std::deque<InputIndex>& state() const { return register_; }
  const Eigen::VectorXd& default_label() const { return default_label_; }
  const std::vector<Eigen::MatrixXd>& markov() const { return markov_; }

  // Replaces the register; used to restore a serialized state.
  void restore(std::deque<InputIndex> reg);

 private:
  FiniteInputObserver() = default;

  std::shared_ptr<const QuantizedLtiSystem> sys_;
  int horizon_ = 0;
  std::vector<Eigen::MatrixXd> markov_;
  // contribution_[tau][i] = markov_[tau] * input i.
  std::vector<std::vector<Eigen::VectorXd>> contribution_;
  std::vector<Eigen::VectorXd> feedthrough_;
  Eigen::VectorXd default_label_;
  std::deque<InputIndex> register_;
};

ObserverFactory fio_factory(const QuantizedLtiSystem& sys, int horizon);

// Predicts the same label forever.
class ConstantObserver : public ObserverContract {
 public:
  explicit ConstantObserver(Eigen::VectorXd label) : label_(std::move(label)) {}
  Eigen::VectorXd predict(InputIndex) const override { return label_; }
  void update(InputIndex, const Eigen::VectorXd&) override {}

 private:
  Eigen::VectorXd label_;
};

ObserverFactory constant_factory(Eigen::VectorXd label);

}  // namespace quantobs
