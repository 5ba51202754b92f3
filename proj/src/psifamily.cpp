#include "quantobs/psifamily.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <optional>
#include <thread>
#include <utility>

#include "quantobs/errors.hpp"

namespace quantobs {

namespace {

constexpr int kMaxDepth = 40;

void check_node_index(int k, std::uint64_t j) {
  if (k < 1 || k > kMaxDepth)
    throw InputError("stage " + std::to_string(k) + " out of range");
  if (j < 1 || j > (std::uint64_t{1} << k))
    throw InputError("node index " + std::to_string(j) + " out of range at stage " +
                     std::to_string(k));
}

// First bit of the stage-kk node with index i.
bool first_bit(int kk, std::uint64_t i) { return psi_bit(kk, i, 1); }

// (j - 1) mod 2^(kk-1) + 1
std::uint64_t wrap(int kk, std::uint64_t j) {
  return ((j - 1) & ((std::uint64_t{1} << (kk - 1)) - 1)) + 1;
}

bool same_labels(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return a.size() == b.size() && a == b;
}

}  // namespace

bool stage_length_ok(int T, double lambda, double beta, double delta1,
                     double delta2) {
  const double growth = std::pow(lambda, T);
  const double inflate = 1.0 / (1.0 - 1.0 / growth);
  if (!(growth > lambda / (lambda - 1.0))) return false;
  if (std::isfinite(delta1) && !(inflate * beta < beta + delta1)) return false;
  if (std::isfinite(delta2) &&
      !(inflate * lambda * beta < lambda * beta + delta2))
    return false;
  if (!(growth - 1.0 > 1.0)) return false;
  if (!(growth - 1.0 > lambda)) return false;
  return true;
}

PsiParams psi_choose_T(const QuantizedLtiSystem& sys,
                       const Thm6Certificate& cert) {
  if (sys.p() != 1) throw PreconditionError("family needs a scalar output");
  const auto zero = sys.zero_input_index();
  if (!zero) throw PreconditionError("family needs 0 in the input alphabet");
  if (!(cert.lambda > 1.0))
    throw PreconditionError("family needs a real eigenvalue above one");
  sys.check_index(cert.u_star_index);

  PsiParams p;
  p.lambda = cert.lambda;
  p.v = cert.v;
  p.x_star = cert.x_star;
  p.u_star_index = cert.u_star_index;
  p.zero_index = *zero;
  p.beta = cert.beta;
  const IntervalQuantizer& q = sys.quantizer().dim(0);
  p.delta1 = q.right_slack(p.beta);
  const double after_fire =
      p.lambda * p.beta + (sys.D() * sys.input(cert.u_star_index))(0);
  p.delta2 = q.right_slack(after_fire);

  for (int T = 2; T <= kStageLengthCap; ++T) {
    if (stage_length_ok(T, p.lambda, p.beta, p.delta1, p.delta2)) {
      p.T = T;
      const double growth = std::pow(p.lambda, T);
      p.q = 1.0 / growth;
      p.s_o = p.x_star / growth;
      return p;
    }
  }
  throw BudgetError("no stage length up to " + std::to_string(kStageLengthCap));
}

bool psi_bit(int k, std::uint64_t j, int l) {
  check_node_index(k, j);
  if (l < 1 || l > k) throw InputError("bit index out of range");
  const std::uint64_t period = std::uint64_t{1} << (k - l + 1);
  return (j - 1) % period >= period / 2;
}

Eigen::VectorXd psi_initial_state(int k, std::uint64_t j, const PsiParams& params) {
  check_node_index(k, j);
  double coeff = 0.0;
  double scale = 1.0;  // q^(l-1)
  for (int l = 1; l <= k; ++l) {
    if (psi_bit(k, j, l)) coeff += scale;
    scale *= params.q;
  }
  return coeff * params.s_o;
}

InputSequence psi_input_segment(int k, std::uint64_t j, const PsiParams& params) {
  check_node_index(k, j);
  InputSequence u(static_cast<std::size_t>(k) * params.T + 1, params.zero_index);
  for (int l = 1; l <= k - 1; ++l) {
    if (first_bit(k - l + 1, wrap(k - l + 2, j)))
      u[static_cast<std::size_t>(l) * params.T + 1] = params.u_star_index;
  }
  return u;
}

const PsiNode& PsiFamily::node(int k, std::uint64_t j) const {
  if (k < 1 || k > depth) throw InputError("stage out of range");
  check_node_index(k, j);
  return levels[static_cast<std::size_t>(k - 1)][j - 1];
}

PsiNode& PsiFamily::node(int k, std::uint64_t j) {
  return const_cast<PsiNode&>(std::as_const(*this).node(k, j));
}

std::size_t PsiFamily::size() const {
  std::size_t n = 0;
  for (const auto& level : levels) n += level.size();
  return n;
}

PsiFamily psi_build(const QuantizedLtiSystem& sys, const PsiParams& params,
                    int depth, std::uint64_t budget) {
  if (depth < 1) throw InputError("family depth must be >= 1");
  if (params.T < 1) throw InputError("stage length must be positive");
  if (depth > kMaxDepth ||
      (std::uint64_t{1} << depth) * static_cast<std::uint64_t>(depth) *
              static_cast<std::uint64_t>(params.T) >
          budget)
    throw BudgetError("family of depth " + std::to_string(depth) +
                      " exceeds the simulation budget");

  PsiFamily fam;
  fam.params = params;
  fam.depth = depth;
  fam.levels.resize(static_cast<std::size_t>(depth));
  for (int k = 1; k <= depth; ++k) {
    const std::uint64_t count = std::uint64_t{1} << k;
    auto& level = fam.levels[static_cast<std::size_t>(k - 1)];
    level.resize(count);
    auto fill = [&](std::uint64_t from, std::uint64_t to) {
      for (std::uint64_t j = from; j <= to; ++j) {
        PsiNode& nd = level[j - 1];
        nd.k = k;
        nd.j = j;
        nd.s = psi_initial_state(k, j, params);
        nd.inputs = psi_input_segment(k, j, params);
        Trajectory tr = simulate(sys, nd.s, nd.inputs);
        nd.outputs = std::move(tr.outputs);
        nd.raw_outputs = std::move(tr.raw_outputs);
      }
    };
    const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    const std::uint64_t workers = std::min<std::uint64_t>(hw, count / 64 + 1);
    if (workers <= 1) {
      fill(1, count);
      continue;
    }
    std::vector<std::thread> pool;
    std::exception_ptr failure;
    std::mutex guard;
    const std::uint64_t chunk = (count + workers - 1) / workers;
    for (std::uint64_t w = 0; w < workers; ++w) {
      const std::uint64_t from = w * chunk + 1;
      const std::uint64_t to = std::min(count, (w + 1) * chunk);
      if (from > to) break;
      pool.emplace_back([&, from, to]() {
        try {
          fill(from, to);
        } catch (...) {
          std::lock_guard<std::mutex> lock(guard);
          if (!failure) failure = std::current_exception();
        }
      });
    }
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);
  }
  return fam;
}

PsiVerification psi_verify(const QuantizedLtiSystem& sys, const PsiFamily& family) {
  PsiVerification rep;
  const int T = family.params.T;
  const int depth = family.depth;
  auto fail = [&rep](bool& flag, std::string item, int k, std::uint64_t j,
                     std::size_t t, std::string msg) {
    flag = false;
    rep.violations.push_back({std::move(item), k, j, t, std::move(msg)});
  };

  for (int k = 1; k <= depth; ++k) {
    const std::size_t end = static_cast<std::size_t>(k) * T;
    for (std::uint64_t j = 1; j <= (std::uint64_t{1} << k); ++j) {
      const PsiNode& nd = family.node(k, j);
      if (nd.inputs.size() != end + 1 || nd.outputs.size() != end + 1)
        fail(rep.siblings_ok, "i", k, j, 0, "segment length is not kT+1");
    }
  }
  if (!rep.ok()) return rep;

  // (i) siblings agree before the end of the stage and split at its end.
  for (int k = 1; k <= depth; ++k) {
    const std::size_t end = static_cast<std::size_t>(k) * T;
    for (std::uint64_t i = 1; i <= (std::uint64_t{1} << (k - 1)); ++i) {
      const PsiNode& a = family.node(k, 2 * i - 1);
      const PsiNode& b = family.node(k, 2 * i);
      ++rep.sibling_pairs;
      for (std::size_t t = 0; t <= end; ++t)
        if (a.inputs[t] != b.inputs[t]) {
          fail(rep.siblings_ok, "i", k, 2 * i, t, "sibling inputs differ");
          break;
        }
      for (std::size_t t = 0; t < end; ++t)
        if (!same_labels(a.outputs[t], b.outputs[t])) {
          fail(rep.siblings_ok, "i", k, 2 * i, t,
               "sibling outputs differ before the end of the stage");
          break;
        }
      if (same_labels(a.outputs[end], b.outputs[end]))
        fail(rep.siblings_ok, "i", k, 2 * i, end,
             "sibling outputs agree at the end of the stage");
    }
  }

  // (ii) children extend their parent.
  for (int k = 2; k <= depth; ++k) {
    const std::size_t prev = static_cast<std::size_t>(k - 1) * T;
    for (std::uint64_t j = 1; j <= (std::uint64_t{1} << k); ++j) {
      const PsiNode& child = family.node(k, j);
      const PsiNode& parent = family.node(k - 1, (j + 1) / 2);
      ++rep.extensions;
      for (std::size_t t = 0; t <= prev; ++t) {
        if (child.inputs[t] != parent.inputs[t] ||
            !same_labels(child.outputs[t], parent.outputs[t])) {
          fail(rep.extension_ok, "ii", k, j, t, "child does not extend parent");
          break;
        }
      }
    }
  }

  // (iii) every path that turns left forever after depth K.
  for (std::uint64_t j = 1; j <= (std::uint64_t{1} << depth); ++j) {
    const PsiNode& leaf = family.node(depth, j);
    ++rep.left_paths;
    const Eigen::VectorXd s = psi_initial_state(depth, j, family.params);
    if (s != leaf.s) {
      fail(rep.paths_ok, "iii", depth, j, 0, "leaf state differs from limit state");
      continue;
    }
    const Trajectory run = simulate(sys, s, leaf.inputs);
    for (int k = 1; k <= depth; ++k) {
      const std::uint64_t anc = ((j - 1) >> (depth - k)) + 1;
      const PsiNode& a = family.node(k, anc);
      const std::size_t end = static_cast<std::size_t>(k) * T;
      for (std::size_t t = 0; t <= end; ++t) {
        if (a.inputs[t] != leaf.inputs[t]) {
          fail(rep.paths_ok, "iii", k, anc, t, "path input is not a concatenation");
          break;
        }
        if (!same_labels(run.outputs[t], a.outputs[t])) {
          fail(rep.paths_ok, "iii", k, anc, t, "path output differs from branch");
          break;
        }
      }
    }
  }

  // The path that always turns right has the limit state s_o / (1 - q).
  {
    const std::uint64_t last = std::uint64_t{1} << depth;
    const PsiNode& leaf = family.node(depth, last);
    const Eigen::VectorXd s = family.params.s_o / (1.0 - family.params.q);
    const Trajectory run = simulate(sys, s, leaf.inputs);
    double margin = std::numeric_limits<double>::infinity();
    for (const auto& y : run.raw_outputs)
      margin = std::min(margin, sys.quantizer().breakpoint_distance(y));
    rep.all_right_margin = margin;
    if (!(margin > kLimitMargin))
      fail(rep.paths_ok, "iii", depth, last, 0,
           "limit run passes within the margin of a breakpoint");
    for (int k = 1; k <= depth; ++k) {
      const std::uint64_t anc = std::uint64_t{1} << k;
      const PsiNode& a = family.node(k, anc);
      const std::size_t end = static_cast<std::size_t>(k) * T;
      for (std::size_t t = 0; t <= end; ++t)
        if (!same_labels(run.outputs[t], a.outputs[t])) {
          fail(rep.paths_ok, "iii", k, anc, t, "limit output differs from branch");
          break;
        }
    }
  }
  return rep;
}

AdversarialResult psi_adversarial_run(const QuantizedLtiSystem& sys,
                                      const PsiFamily& family,
                                      const ObserverFactory& factory, int depth) {
  if (depth < 1 || depth > family.depth)
    throw InputError("attack depth must be in 1.." + std::to_string(family.depth));
  const int T = family.params.T;
  AdversarialResult res;
  std::uint64_t parent = 1;
  for (int k = 1; k <= depth; ++k) {
    const std::size_t end = static_cast<std::size_t>(k) * T;
    std::optional<std::uint64_t> chosen;
    for (std::uint64_t j : {2 * parent - 1, 2 * parent}) {
      const PsiNode& nd = family.node(k, j);
      auto obs = factory();
      const RunRecord rec = replay(sys, *obs, nd.inputs, nd.outputs);
      if (rec.errors[end] != 0.0) {
        chosen = j;
        break;
      }
    }
    if (!chosen)
      throw Error("observer matched both siblings at t = " + std::to_string(end) +
                  "; it is not deterministic or the family is invalid");
    res.path.push_back(*chosen);
    res.stage_error_times.push_back(end);
    parent = *chosen;
  }

  const PsiNode& last = family.node(depth, parent);
  auto obs = factory();
  res.record = replay(sys, *obs, last.inputs, last.outputs);
  for (std::size_t t = 0; t < res.record.size(); ++t)
    if (res.record.errors[t] != 0.0) res.all_mismatch_times.push_back(t);
  for (std::size_t t : res.stage_error_times)
    if (!std::binary_search(res.all_mismatch_times.begin(),
                            res.all_mismatch_times.end(), t))
      throw Error("replay along the chosen path lost the error at t = " +
                  std::to_string(t));
  return res;
}

}  // namespace quantobs
