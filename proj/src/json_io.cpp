#include "qevo/json_io.hpp"

#include "qevo/error.hpp"

namespace qevo {

namespace {

Json opt(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

std::optional<double> opt_from(const Json& j) {
    if (j.is_null()) return std::nullopt;
    return j.get<double>();
}

}  // namespace

Json to_json(const MetricSet& m) {
    Json j;
    j["sharpe"] = opt(m.sharpe);
    j["sortino"] = opt(m.sortino);
    j["information_ratio"] = opt(m.information_ratio);
    j["max_drawdown"] = m.max_drawdown;
    j["cumulative_return"] = m.cumulative_return;
    j["num_transactions"] = m.num_transactions;
    j["valid"] = m.valid;
    j["invalid_reason"] = m.invalid_reason;
    return j;
}

MetricSet metrics_from_json(const Json& j) {
    MetricSet m;
    m.sharpe = opt_from(j.at("sharpe"));
    m.sortino = opt_from(j.at("sortino"));
    m.information_ratio = opt_from(j.at("information_ratio"));
    m.max_drawdown = j.at("max_drawdown").get<double>();
    m.cumulative_return = j.at("cumulative_return").get<double>();
    m.num_transactions = j.at("num_transactions").get<std::size_t>();
    m.valid = j.at("valid").get<bool>();
    m.invalid_reason = j.value("invalid_reason", "");
    return m;
}

Json to_json(const FeatureVector& v) { return Json{{"bins", v.bins}, {"category", v.category}}; }

FeatureVector feature_vector_from_json(const Json& j) {
    FeatureVector v;
    v.bins = j.at("bins").get<std::vector<int>>();
    v.category = j.at("category").get<std::string>();
    return v;
}

Json to_json(const Hypothesis& h) {
    Json j;
    j["hypothesis"] = h.hypothesis;
    j["rationale"] = h.rationale;
    j["objectives"] = h.objectives;
    j["expected_insights"] = h.expected_insights;
    j["risks_limitations"] = h.risks_limitations;
    j["experimentation_ideas"] = h.experimentation_ideas;
    return j;
}

Hypothesis hypothesis_from_json(const Json& j) {
    Hypothesis h;
    h.hypothesis = j.at("hypothesis").get<std::string>();
    h.rationale = j.at("rationale").get<std::string>();
    h.objectives = j.at("objectives").get<std::string>();
    h.expected_insights = j.at("expected_insights").get<std::string>();
    h.risks_limitations = j.at("risks_limitations").get<std::string>();
    h.experimentation_ideas = j.at("experimentation_ideas").get<std::string>();
    return h;
}

Json to_json(const Analysis& a) {
    Json j;
    j["mode"] = a.mode;
    j["verdict"] = a.verdict;
    j["summary"] = a.summary;
    j["insight"] = a.insight;
    j["scores"] = Json::object();
    for (const auto& [k, v] : a.scores) j["scores"][k] = v;
    j["reasoning"] = Json::object();
    for (const auto& [k, v] : a.reasoning) j["reasoning"][k] = v;
    return j;
}

Analysis analysis_from_json(const Json& j) {
    Analysis a;
    a.mode = j.at("mode").get<std::string>();
    a.verdict = j.at("verdict").get<std::string>();
    a.summary = j.at("summary").get<std::string>();
    a.insight = j.at("insight").get<std::string>();
    for (auto it = j.at("scores").begin(); it != j.at("scores").end(); ++it) a.scores[it.key()] = it.value().get<double>();
    for (auto it = j.at("reasoning").begin(); it != j.at("reasoning").end(); ++it)
        a.reasoning[it.key()] = it.value().get<std::string>();
    return a;
}

Json to_json(const Insight& i) {
    Json j;
    j["island_id"] = i.island_id;
    j["generation"] = i.generation;
    j["text"] = i.text;
    j["source_candidate_id"] = i.source_candidate_id ? Json(*i.source_candidate_id) : Json(nullptr);
    j["content_hash"] = i.content_hash;
    return j;
}

Insight insight_from_json(const Json& j) {
    Insight i;
    i.island_id = j.at("island_id").get<int>();
    i.generation = j.at("generation").get<int>();
    i.text = j.at("text").get<std::string>();
    if (!j.at("source_candidate_id").is_null()) i.source_candidate_id = j.at("source_candidate_id").get<CandidateId>();
    i.content_hash = j.at("content_hash").get<std::string>();
    return i;
}

Json to_json(const CandidateRecord& r) {
    Json j;
    j["id"] = r.id;
    j["island_id"] = r.island_id;
    j["generation"] = r.generation;
    j["parent_id"] = r.parent_id ? Json(*r.parent_id) : Json(nullptr);
    j["cousin_ids"] = r.cousin_ids;
    j["tags"] = r.tags;
    j["program"] = r.program;
    j["hypothesis"] = to_json(r.hypothesis);
    j["metrics"] = to_json(r.metrics);
    j["failure"] = r.failure;
    j["feature_vector"] = r.feature_vector ? to_json(*r.feature_vector) : Json(nullptr);
    j["analysis"] = to_json(r.analysis);
    j["repair_attempts"] = r.repair_attempts;
    j["transcripts"] = r.transcripts;
    return j;
}

CandidateRecord record_from_json(const Json& j) {
    CandidateRecord r;
    r.id = j.at("id").get<CandidateId>();
    r.island_id = j.at("island_id").get<int>();
    r.generation = j.at("generation").get<int>();
    if (!j.at("parent_id").is_null()) r.parent_id = j.at("parent_id").get<CandidateId>();
    r.cousin_ids = j.at("cousin_ids").get<std::vector<CandidateId>>();
    r.tags = j.at("tags").get<std::vector<std::string>>();
    r.program = j.at("program").get<std::string>();
    r.hypothesis = hypothesis_from_json(j.at("hypothesis"));
    r.metrics = metrics_from_json(j.at("metrics"));
    r.failure = j.at("failure").get<std::string>();
    if (!j.at("feature_vector").is_null()) r.feature_vector = feature_vector_from_json(j.at("feature_vector"));
    r.analysis = analysis_from_json(j.at("analysis"));
    r.repair_attempts = j.at("repair_attempts").get<int>();
    r.transcripts = j.at("transcripts").get<std::vector<std::string>>();
    return r;
}

Json to_json(const FeatureSpace& s) {
    Json j;
    j["continuous"] = Json::array();
    for (const auto& d : s.continuous)
        j["continuous"].push_back({{"name", d.name},
                                   {"metric", std::string(to_string(d.metric))},
                                   {"range_min", d.range_min},
                                   {"range_max", d.range_max},
                                   {"bins", d.bins}});
    j["use_category"] = s.use_category;
    j["taxonomy"] = s.taxonomy.categories;
    return j;
}

FeatureSpace feature_space_from_json(const Json& j) {
    FeatureSpace s;
    for (const auto& d : j.at("continuous")) {
        auto metric = feature_metric_from_string(d.at("metric").get<std::string>());
        if (!metric) throw ConfigError("features.metric", "unknown metric " + d.at("metric").get<std::string>());
        s.continuous.push_back({d.at("name").get<std::string>(), *metric, d.at("range_min").get<double>(),
                                d.at("range_max").get<double>(), d.at("bins").get<int>()});
    }
    s.use_category = j.at("use_category").get<bool>();
    s.taxonomy.categories = j.at("taxonomy").get<std::vector<std::string>>();
    return s;
}

Json to_json(const MigrationEvent& e) {
    return Json{{"generation", e.generation},
                {"source", e.source},
                {"destination", e.destination},
                {"candidate_ids", e.candidate_ids}};
}

Json to_json(const Fill& f) {
    return Json{{"date", format_date(f.date)},
                {"symbol", f.symbol},
                {"quantity", f.quantity},
                {"price", f.price},
                {"commission", f.commission}};
}

Json report_summary_json(const BacktestReport& report) {
    Json j;
    j["initial_capital"] = report.initial_capital;
    j["final_equity"] = report.equity.empty() ? report.initial_capital : report.equity.back();
    j["num_transactions"] = report.num_transactions;
    j["metrics"] = to_json(report.metrics);
    j["fills"] = Json::array();
    for (const auto& f : report.fills) j["fills"].push_back(to_json(f));
    return j;
}

}  // namespace qevo
