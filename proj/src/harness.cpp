#include "quantobs/harness.hpp"

#include <algorithm>
#include <atomic>
#include <limits>
#include <random>
#include <thread>

#include "quantobs/errors.hpp"

namespace quantobs {

namespace {

void record_step(RunRecord& rec, InputIndex u, double u_norm,
                 const Eigen::VectorXd& y, Eigen::VectorXd y_hat) {
  const double e = (y - y_hat).norm();
  if (e != 0.0) rec.last_error_time = rec.errors.size();
  rec.inputs.push_back(u);
  rec.input_norms.push_back(u_norm);
  rec.outputs.push_back(y);
  rec.predictions.push_back(std::move(y_hat));
  rec.errors.push_back(e);
}

void write_label(std::ostream& os, const Eigen::VectorXd& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i) os << ';';
    os << v(i);
  }
}

}  // namespace

RunRecord interconnect(const QuantizedLtiSystem& sys, ObserverContract& observer,
                       const Eigen::VectorXd& x0, const InputSequence& inputs) {
  if (x0.size() != sys.n())
    throw DimensionError("initial state has size " + std::to_string(x0.size()) +
                         ", system order is " + std::to_string(sys.n()));
  for (InputIndex i : inputs) sys.check_index(i);
  RunRecord rec;
  Eigen::VectorXd x = x0;
  for (std::size_t t = 0; t < inputs.size(); ++t) {
    if (!x.allFinite()) {
      rec.overflow_time = t;
      break;
    }
    const InputIndex u = inputs[t];
    const Eigen::VectorXd& uv = sys.input(u);
    const Eigen::VectorXd y = sys.quantizer().quantize(sys.C() * x + sys.D() * uv);
    Eigen::VectorXd y_hat = observer.predict(u);
    observer.update(u, y);
    record_step(rec, u, uv.norm(), y, std::move(y_hat));
    x = sys.A() * x + sys.B() * uv;
  }
  return rec;
}

RunRecord replay(const QuantizedLtiSystem& sys, ObserverContract& observer,
                 const InputSequence& inputs,
                 const std::vector<Eigen::VectorXd>& outputs) {
  if (inputs.size() != outputs.size())
    throw DimensionError("replay needs equally long input and output sequences");
  RunRecord rec;
  for (std::size_t t = 0; t < inputs.size(); ++t) {
    const InputIndex u = inputs[t];
    Eigen::VectorXd y_hat = observer.predict(u);
    observer.update(u, outputs[t]);
    record_step(rec, u, sys.input(u).norm(), outputs[t], std::move(y_hat));
  }
  return rec;
}

GainEstimate gain_functional(const RunRecord& record, double gamma,
                             double threshold) {
  if (!(gamma >= 0.0)) throw DomainError("gain must be non-negative");
  GainEstimate est;
  est.gamma = gamma;
  est.horizon = record.size();
  if (record.size() == 0) return est;
  double partial = 0.0;
  double sup = -std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t < record.size(); ++t) {
    partial += record.errors[t] - gamma * record.input_norms[t];
    if (partial > sup) {
      sup = partial;
      est.argmax_time = t;
    }
  }
  est.running_sup = sup;
  est.violated = sup > threshold && 4 * est.argmax_time >= 3 * record.size();
  return est;
}

std::pair<Eigen::VectorXd, InputSequence> monte_carlo_draw(
    const QuantizedLtiSystem& sys, const MonteCarloOptions& opts,
    std::size_t trial) {
  std::seed_seq seq{static_cast<std::uint32_t>(opts.seed),
                    static_cast<std::uint32_t>(opts.seed >> 32),
                    static_cast<std::uint32_t>(trial),
                    static_cast<std::uint32_t>(static_cast<std::uint64_t>(trial) >> 32)};
  std::mt19937_64 rng(seq);
  std::uniform_real_distribution<double> coord(-opts.x0_bound, opts.x0_bound);
  std::uniform_int_distribution<std::size_t> pick(0, sys.alphabet_size() - 1);
  Eigen::VectorXd x0(sys.n());
  for (Eigen::Index i = 0; i < x0.size(); ++i) x0(i) = coord(rng);
  InputSequence inputs(opts.horizon);
  for (auto& u : inputs) u = pick(rng);
  return {x0, inputs};
}

MonteCarloSummary monte_carlo_settling(const QuantizedLtiSystem& sys,
                                       const ObserverFactory& factory,
                                       const MonteCarloOptions& opts) {
  if (!(opts.x0_bound >= 0.0))
    throw DomainError("initial state bound must be non-negative");
  MonteCarloSummary sum;
  sum.trials = opts.trials;
  if (opts.trials == 0) return sum;

  struct TrialResult {
    std::optional<std::size_t> last_error;
    bool overflow = false;
    bool violation = false;
  };
  std::vector<TrialResult> results(opts.trials);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};

  auto worker = [&]() {
    while (!failed) {
      const std::size_t i = next++;
      if (i >= opts.trials) return;
      try {
        auto [x0, inputs] = monte_carlo_draw(sys, opts, i);
        auto observer = factory();
        const RunRecord rec = interconnect(sys, *observer, x0, inputs);
        TrialResult& r = results[i];
        r.last_error = rec.last_error_time;
        r.overflow = rec.overflow_time.has_value();
        r.violation = opts.settle_time && rec.last_error_time &&
                      *rec.last_error_time >= *opts.settle_time;
      } catch (...) {
        if (!failed.exchange(true)) failure = std::current_exception();
      }
    }
  };

  unsigned threads = opts.threads ? opts.threads : std::thread::hardware_concurrency();
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(opts.trials)));
  std::vector<std::thread> pool;
  for (unsigned i = 1; i < threads; ++i) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);

  for (const auto& r : results) {
    sum.last_error_times.push_back(r.last_error);
    if (r.last_error) {
      ++sum.trials_with_errors;
      sum.max_last_error_time =
          std::max(sum.max_last_error_time.value_or(0), *r.last_error);
    }
    if (r.overflow) ++sum.overflows;
    if (r.violation) ++sum.violations;
  }
  return sum;
}

void write_csv(std::ostream& os, const RunRecord& record) {
  os << "t,u,y,y_hat,e\n";
  for (std::size_t t = 0; t < record.size(); ++t) {
    os << t << ',' << record.inputs[t] << ',';
    write_label(os, record.outputs[t]);
    os << ',';
    write_label(os, record.predictions[t]);
    os << ',' << record.errors[t] << '\n';
  }
}

}  // namespace quantobs
