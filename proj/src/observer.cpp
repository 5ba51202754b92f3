#include "quantobs/observer.hpp"

#include <string>

#include "quantobs/errors.hpp"

namespace quantobs {

namespace {

bool is_label(const ProductQuantizer& q, const Eigen::VectorXd& label) {
  if (static_cast<std::size_t>(label.size()) != q.dims()) return false;
  for (std::size_t i = 0; i < q.dims(); ++i) {
    bool found = false;
    for (double l : q.dim(i).levels())
      if (l == label(static_cast<Eigen::Index>(i))) found = true;
    if (!found) return false;
  }
  return true;
}

}  // namespace

FiniteInputObserver FiniteInputObserver::build(
    const QuantizedLtiSystem& sys, int horizon,
    std::optional<Eigen::VectorXd> default_label) {
  if (horizon <= 0)
    throw InputError("observer horizon must be positive, got " +
                     std::to_string(horizon));
  FiniteInputObserver obs;
  obs.sys_ = std::make_shared<const QuantizedLtiSystem>(sys);
  obs.horizon_ = horizon;
  obs.markov_ = markov_parameters(sys, horizon);
  obs.contribution_.resize(obs.markov_.size());
  for (std::size_t tau = 0; tau < obs.markov_.size(); ++tau)
    for (const auto& u : sys.inputs())
      obs.contribution_[tau].push_back(obs.markov_[tau] * u);
  for (const auto& u : sys.inputs()) obs.feedthrough_.push_back(sys.D() * u);
  if (default_label) {
    if (!is_label(sys.quantizer(), *default_label))
      throw DomainError("default label is not a quantizer level");
    obs.default_label_ = *default_label;
  } else {
    obs.default_label_ = sys.quantizer().zero_label();
  }
  return obs;
}

Eigen::VectorXd FiniteInputObserver::predict(InputIndex u) const {
  sys_->check_index(u);
  if (register_.size() < static_cast<std::size_t>(horizon_))
    return default_label_;
  Eigen::VectorXd y = feedthrough_[u];
  for (std::size_t tau = 0; tau < register_.size(); ++tau)
    y += contribution_[tau][register_[tau]];
  return sys_->quantizer().quantize(y);
}

void FiniteInputObserver::update(InputIndex u, const Eigen::VectorXd&) {
  push(u);
}

void FiniteInputObserver::push(InputIndex u) {
  sys_->check_index(u);
  register_.push_front(u);
  if (register_.size() > static_cast<std::size_t>(horizon_))
    register_.pop_back();
}

void FiniteInputObserver::restore(std::deque<InputIndex> reg) {
  if (reg.size() > static_cast<std::size_t>(horizon_))
    throw InputError("register longer than the observer horizon");
  for (InputIndex u : reg) sys_->check_index(u);
  register_ = std::move(reg);
}

ObserverFactory fio_factory(const QuantizedLtiSystem& sys, int horizon) {
  auto proto = std::make_shared<const FiniteInputObserver>(
      FiniteInputObserver::build(sys, horizon));
  return [proto]() -> std::unique_ptr<ObserverContract> {
    return std::make_unique<FiniteInputObserver>(*proto);
  };
}

ObserverFactory constant_factory(Eigen::VectorXd label) {
  return [label]() -> std::unique_ptr<ObserverContract> {
    return std::make_unique<ConstantObserver>(label);
  };
}

}  // namespace quantobs
