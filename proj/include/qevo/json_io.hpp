#pragma once

#include "qevo/backtester.hpp"
#include "qevo/feature_map.hpp"
#include "qevo/islands.hpp"
#include "qevo/records.hpp"

#include <json.hpp>

#include <string>

namespace qevo {

using Json = nlohmann::ordered_json;

Json to_json(const MetricSet& m);
MetricSet metrics_from_json(const Json& j);

Json to_json(const FeatureVector& v);
FeatureVector feature_vector_from_json(const Json& j);

Json to_json(const Hypothesis& h);
Hypothesis hypothesis_from_json(const Json& j);

Json to_json(const Analysis& a);
Analysis analysis_from_json(const Json& j);

Json to_json(const Insight& i);
Insight insight_from_json(const Json& j);

/// Field order is fixed so serialized records diff cleanly.
Json to_json(const CandidateRecord& r);
CandidateRecord record_from_json(const Json& j);

Json to_json(const FeatureSpace& s);
FeatureSpace feature_space_from_json(const Json& j);

Json to_json(const MigrationEvent& e);

Json to_json(const Fill& f);
/// Fills and metrics of a report (the equity curve goes to CSV).
Json report_summary_json(const BacktestReport& report);

}  // namespace qevo
