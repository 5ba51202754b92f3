#include "quantobs/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "quantobs/errors.hpp"

namespace quantobs::io {

namespace {

const json& field(const json& doc, const char* name) {
  if (!doc.contains(name))
    throw ParseError(std::string("missing field '") + name + "'");
  return doc.at(name);
}

double number(const json& v, const std::string& where) {
  if (!v.is_number()) throw ParseError(where + ": expected a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) throw ParseError(where + ": number is not finite");
  return x;
}

std::vector<double> number_list(const json& v, const std::string& where) {
  if (!v.is_array()) throw ParseError(where + ": expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i)
    out.push_back(number(v[i], where + "[" + std::to_string(i) + "]"));
  return out;
}

Eigen::MatrixXd read_matrix(const json& doc, const char* name) {
  const json& v = field(doc, name);
  const std::string where = std::string("field '") + name + "'";
  if (!v.is_array() || v.empty())
    throw ParseError(where + ": expected a non-empty array of rows");
  std::size_t cols = 0;
  std::vector<std::vector<double>> rows;
  for (std::size_t r = 0; r < v.size(); ++r) {
    rows.push_back(number_list(v[r], where + " row " + std::to_string(r)));
    if (r == 0) cols = rows.back().size();
    if (rows.back().size() != cols)
      throw ParseError(where + " row " + std::to_string(r) + ": expected " +
                       std::to_string(cols) + " entries, got " +
                       std::to_string(rows.back().size()));
  }
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()),
                    static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < cols; ++c)
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
  return m;
}

json matrix_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

json finite_or_null(double v) {
  if (std::isfinite(v)) return v;
  return nullptr;
}

template <typename T>
json optional_json(const std::optional<T>& v) {
  if (v) return *v;
  return nullptr;
}

json hypotheses_json(const std::vector<Hypothesis>& hs) {
  json out = json::array();
  for (const auto& h : hs)
    out.push_back({{"name", h.name}, {"holds", h.holds}, {"detail", h.detail}});
  return out;
}

json sequence_json(const InputSequence& s) {
  json out = json::array();
  for (InputIndex i : s) out.push_back(i);
  return out;
}

}  // namespace

SystemDocument system_from_json(const json& doc) {
  if (!doc.is_object()) throw ParseError("system document must be a JSON object");
  Eigen::MatrixXd a = read_matrix(doc, "A");
  Eigen::MatrixXd b = read_matrix(doc, "B");
  Eigen::MatrixXd c = read_matrix(doc, "C");
  Eigen::MatrixXd d = read_matrix(doc, "D");

  const json& in = field(doc, "inputs");
  if (!in.is_array() || in.empty())
    throw ParseError("field 'inputs': expected a non-empty array");
  std::vector<Eigen::VectorXd> inputs;
  for (std::size_t i = 0; i < in.size(); ++i) {
    const std::string where = "field 'inputs'[" + std::to_string(i) + "]";
    std::vector<double> u = in[i].is_number()
                                ? std::vector<double>{number(in[i], where)}
                                : number_list(in[i], where);
    inputs.push_back(Eigen::Map<Eigen::VectorXd>(u.data(),
                                                 static_cast<Eigen::Index>(u.size())));
  }

  const json& qz = field(doc, "quantizer");
  if (!qz.is_array() || qz.empty())
    throw ParseError("field 'quantizer': expected a non-empty array of dimensions");
  std::vector<IntervalQuantizer> dims;
  for (std::size_t i = 0; i < qz.size(); ++i) {
    const std::string where = "field 'quantizer'[" + std::to_string(i) + "]";
    if (!qz[i].is_object()) throw ParseError(where + ": expected an object");
    if (!qz[i].contains("breakpoints") || !qz[i].contains("levels"))
      throw ParseError(where + ": needs 'breakpoints' and 'levels'");
    try {
      dims.emplace_back(number_list(qz[i]["breakpoints"], where + ".breakpoints"),
                        number_list(qz[i]["levels"], where + ".levels"));
    } catch (const ParseError&) {
      throw;
    } catch (const Error& e) {
      throw ParseError(where + ": " + e.what());
    }
  }

  std::optional<double> x0_bound;
  if (doc.contains("x0_bound") && !doc["x0_bound"].is_null()) {
    x0_bound = number(doc["x0_bound"], "field 'x0_bound'");
    if (*x0_bound < 0.0) throw ParseError("field 'x0_bound': must be non-negative");
  }

  try {
    return SystemDocument{QuantizedLtiSystem(std::move(a), std::move(b), std::move(c),
                                             std::move(d), std::move(inputs),
                                             ProductQuantizer(std::move(dims))),
                          x0_bound};
  } catch (const Error& e) {
    throw ParseError(std::string("inconsistent system: ") + e.what());
  }
}

SystemDocument parse_system_text(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(e.what());
  }
  return system_from_json(doc);
}

SystemDocument load_system_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return parse_system_text(buf.str());
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what());
  }
}

json to_json(const QuantizedLtiSystem& sys, std::optional<double> x0_bound) {
  json doc;
  doc["A"] = matrix_json(sys.A());
  doc["B"] = matrix_json(sys.B());
  doc["C"] = matrix_json(sys.C());
  doc["D"] = matrix_json(sys.D());
  json inputs = json::array();
  for (const auto& u : sys.inputs()) inputs.push_back(vector_json(u));
  doc["inputs"] = inputs;
  json qz = json::array();
  for (const auto& q : sys.quantizer().all_dims())
    qz.push_back({{"breakpoints", q.breakpoints()}, {"levels", q.levels()}});
  doc["quantizer"] = qz;
  if (x0_bound) doc["x0_bound"] = *x0_bound;
  return doc;
}

std::uint64_t system_hash(const QuantizedLtiSystem& sys) {
  const std::string text = to_json(sys).dump();
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

json vector_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

json labels_json(const std::vector<Eigen::VectorXd>& labels) {
  json out = json::array();
  for (const auto& l : labels) out.push_back(vector_json(l));
  return out;
}

json to_json(const DistanceResult& r) {
  return std::visit(
      [](const auto& v) -> json {
        using V = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<V, LowerBound>) {
          return {{"kind", "LowerBound"}, {"d", v.d}, {"k", v.k},
                  {"min_distance", v.min_distance}, {"tail", v.tail}};
        } else if constexpr (std::is_same_v<V, Witness>) {
          return {{"kind", "Witness"}, {"y", vector_json(v.y)},
                  {"tuple", sequence_json(v.tuple)}, {"k", v.k},
                  {"distance", v.distance}};
        } else {
          return {{"kind", "Inconclusive"}, {"k_max", v.k_max},
                  {"min_distance", finite_or_null(v.min_distance)},
                  {"tail", finite_or_null(v.tail)}};
        }
      },
      r);
}

json to_json(const ObservabilityReport& r) {
  json out;
  out["nilpotency"] = optional_json(r.nilpotency);

  json t2;
  t2["verdict"] = to_string(r.thm2.verdict);
  t2["stable"] = r.thm2.stable;
  t2["unstable_in_kernel"] = r.thm2.unstable_in_kernel;
  t2["distance"] = r.thm2.distance ? to_json(*r.thm2.distance) : json(nullptr);
  t2["hypotheses"] = hypotheses_json(r.thm2.hypotheses);
  t2["error"] = optional_json(r.thm2.error);
  out["thm2"] = t2;

  json t3;
  t3["verdict"] = to_string(r.thm3.verdict);
  t3["ranks"] = r.thm3.ranks;
  t3["rank_ok"] = r.thm3.rank_ok;
  t3["intersection"] =
      r.thm3.intersection ? to_json(*r.thm3.intersection) : json(nullptr);
  t3["hypotheses"] = hypotheses_json(r.thm3.hypotheses);
  t3["error"] = optional_json(r.thm3.error);
  out["thm3"] = t3;

  json t4;
  t4["verdict"] = to_string(r.thm4.verdict);
  t4["has_unstable_visible_eigvec"] = r.thm4.has_unstable_visible_eigvec;
  t4["zero_cell_bounded"] = r.thm4.zero_cell_bounded;
  t4["hypotheses"] = hypotheses_json(r.thm4.hypotheses);
  out["thm4"] = t4;

  json t6;
  t6["verdict"] = to_string(r.thm6.verdict);
  if (r.thm6.certificate) {
    const auto& c = *r.thm6.certificate;
    t6["certificate"] = {{"lambda", c.lambda},
                         {"v", vector_json(c.v)},
                         {"x_star", vector_json(c.x_star)},
                         {"u_star_index", c.u_star_index},
                         {"u_star", vector_json(c.u_star)},
                         {"beta", c.beta},
                         {"residual", c.residual}};
  } else {
    t6["certificate"] = nullptr;
  }
  t6["hypotheses"] = hypotheses_json(r.thm6.hypotheses);
  out["thm6"] = t6;

  out["chosen_T"] = optional_json(r.chosen_T);
  out["x0_bound"] = r.x0_bound;
  const auto& s = r.summary;
  out["summary"] = {{"verdict", to_string(s.verdict)},
                    {"certified_by", s.certified_by},
                    {"finite_memory", optional_json(s.finite_memory)},
                    {"weakly", optional_json(s.weakly)},
                    {"asymptotically", optional_json(s.asymptotically)},
                    {"hierarchy_consistent", s.hierarchy_consistent}};
  out["errors"] = r.errors;
  return out;
}

json to_json(const MonteCarloSummary& s) {
  std::size_t settled = 0;
  for (const auto& t : s.last_error_times)
    if (!t) ++settled;
  return {{"trials", s.trials},
          {"max_last_error_time", optional_json(s.max_last_error_time)},
          {"trials_with_errors", s.trials_with_errors},
          {"trials_without_errors", settled},
          {"violations", s.violations},
          {"overflows", s.overflows}};
}

json to_json(const GainEstimate& g) {
  return {{"gamma", g.gamma},
          {"running_sup", g.running_sup},
          {"horizon", g.horizon},
          {"argmax_time", g.argmax_time},
          {"violated", g.violated},
          {"evidence", "empirical"}};
}

json to_json(const PsiParams& p) {
  return {{"T", p.T},
          {"lambda", p.lambda},
          {"v", vector_json(p.v)},
          {"x_star", vector_json(p.x_star)},
          {"u_star_index", p.u_star_index},
          {"zero_index", p.zero_index},
          {"beta", p.beta},
          {"s_o", vector_json(p.s_o)},
          {"q", p.q},
          {"delta1", finite_or_null(p.delta1)},
          {"delta2", finite_or_null(p.delta2)}};
}

json to_json(const PsiFamily& f) {
  json nodes = json::array();
  for (const auto& level : f.levels)
    for (const auto& nd : level)
      nodes.push_back({{"k", nd.k},
                       {"j", nd.j},
                       {"s", vector_json(nd.s)},
                       {"inputs", sequence_json(nd.inputs)},
                       {"outputs", labels_json(nd.outputs)}});
  return {{"params", to_json(f.params)}, {"depth", f.depth},
          {"node_count", f.size()}, {"nodes", nodes}};
}

json to_json(const PsiVerification& v) {
  json viol = json::array();
  for (const auto& x : v.violations)
    viol.push_back({{"item", x.item}, {"k", x.k}, {"j", x.j}, {"t", x.t},
                    {"message", x.message}});
  return {{"ok", v.ok()},
          {"siblings", {{"ok", v.siblings_ok}, {"pairs", v.sibling_pairs}}},
          {"extensions", {{"ok", v.extension_ok}, {"checked", v.extensions}}},
          {"paths",
           {{"ok", v.paths_ok},
            {"eventually_left", v.left_paths},
            {"all_right_margin", finite_or_null(v.all_right_margin)}}},
          {"violations", viol}};
}

json to_json(const AdversarialResult& a) {
  return {{"error_times", a.stage_error_times},
          {"path", a.path},
          {"all_mismatch_times", a.all_mismatch_times}};
}

json observer_state(const FiniteInputObserver& obs) {
  json reg = json::array();
  for (InputIndex u : obs.state()) reg.push_back(u);
  return {{"T", obs.horizon()},
          {"register", reg},
          {"default_label", vector_json(obs.default_label())}};
}

void restore_observer_state(FiniteInputObserver& obs, const json& state) {
  try {
    if (state.at("T").get<int>() != obs.horizon())
      throw ParseError("observer state has a different horizon");
    std::vector<double> label = state.at("default_label").get<std::vector<double>>();
    const Eigen::VectorXd stored = Eigen::Map<Eigen::VectorXd>(
        label.data(), static_cast<Eigen::Index>(label.size()));
    if (stored.size() != obs.default_label().size() ||
        stored != obs.default_label())
      throw ParseError("observer state has a different default label");
    std::deque<InputIndex> reg;
    for (const auto& u : state.at("register")) reg.push_back(u.get<InputIndex>());
    obs.restore(std::move(reg));
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed observer state: ") + e.what());
  }
}

}  // namespace quantobs::io
