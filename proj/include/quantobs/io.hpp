#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include <json.hpp>

#include "quantobs/analysis.hpp"
#include "quantobs/harness.hpp"
#include "quantobs/observer.hpp"
#include "quantobs/plant.hpp"
#include "quantobs/psifamily.hpp"

namespace quantobs::io {

using nlohmann::json;

struct SystemDocument {
  QuantizedLtiSystem system;
  std::optional<double> x0_bound;
};

// Throws ParseError naming the offending field.
SystemDocument system_from_json(const json& doc);
// Throws ParseError with the line and column of a syntax error.
SystemDocument load_system_file(const std::string& path);
SystemDocument parse_system_text(const std::string& text);

json to_json(const QuantizedLtiSystem& sys,
             std::optional<double> x0_bound = std::nullopt);

// FNV-1a over the compact canonical dump of the system document.
std::uint64_t system_hash(const QuantizedLtiSystem& sys);
std::string hex64(std::uint64_t v);

json vector_json(const Eigen::VectorXd& v);
json labels_json(const std::vector<Eigen::VectorXd>& labels);

json to_json(const DistanceResult& r);
json to_json(const ObservabilityReport& r);
json to_json(const MonteCarloSummary& s);
json to_json(const GainEstimate& g);
json to_json(const PsiParams& p);
json to_json(const PsiFamily& f);
json to_json(const PsiVerification& v);
json to_json(const AdversarialResult& a);

json observer_state(const FiniteInputObserver& obs);
// Restores the register and checks the horizon and label agree.
void restore_observer_state(FiniteInputObserver& obs, const json& state);

}  // namespace quantobs::io
