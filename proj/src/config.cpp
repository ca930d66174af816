#include "qevo/config.hpp"

#include "qevo/error.hpp"
#include "qevo/json_io.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace qevo {

namespace fs = std::filesystem;

namespace {

/// JSON object accessor that reports errors with the dotted key path and
/// rejects keys it was never asked about.
class Node {
public:
    Node(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "must be an object");
    }

    std::string key(const std::string& k) const { return path_.empty() ? k : path_ + "." + k; }
    bool has(const std::string& k) {
        seen_.insert(k);
        return j_.contains(k);
    }
    const Json& raw(const std::string& k) {
        seen_.insert(k);
        if (!j_.contains(k)) throw ConfigError(key(k), "is required");
        return j_.at(k);
    }

    template <class T>
    T get(const std::string& k) {
        seen_.insert(k);
        if (!j_.contains(k)) throw ConfigError(key(k), "is required");
        try {
            return j_.at(k).get<T>();
        } catch (const nlohmann::json::exception&) {
            throw ConfigError(key(k), "has the wrong type");
        }
    }
    template <class T>
    void opt(const std::string& k, T& out) {
        if (has(k)) out = get<T>(k);
    }
    Node child(const std::string& k) {
        seen_.insert(k);
        return Node(j_.at(k), key(k));
    }

    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!seen_.count(it.key())) throw ConfigError(key(it.key()), "unknown key");
    }

private:
    const Json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

fs::path resolve(const fs::path& base, const std::string& p) {
    fs::path path(p);
    return (path.is_absolute() ? path : base / path).lexically_normal();
}

DateRange parse_range(Node& n, const std::string& k) {
    const auto v = n.get<std::vector<std::string>>(k);
    if (v.size() != 2) throw ConfigError(n.key(k), "expected [first, last]");
    try {
        return {parse_date(v[0]), parse_date(v[1])};
    } catch (const Error& e) {
        throw ConfigError(n.key(k), e.what());
    }
}

ContinuousDimension default_dimension(const std::string& name, const std::string& key, int bins) {
    for (const auto& d : FeatureSpace::defaults(Taxonomy{{"x"}}, bins).continuous)
        if (d.name == name) return d;
    throw ConfigError(key, "unknown dimension " + name);
}

void parse_features(Node n, RunConfig& run) {
    int bins = 16;
    n.opt("bins", bins);
    if (bins < 1) throw ConfigError(n.key("bins"), "must be >= 1");
    run.features = FeatureSpace::defaults(run.taxonomy, bins);
    n.opt("use_category", run.features.use_category);
    if (n.has("dimensions")) {
        const auto& dims = n.raw("dimensions");
        if (!dims.is_array()) throw ConfigError(n.key("dimensions"), "must be an array");
        run.features.continuous.clear();
        for (std::size_t i = 0; i < dims.size(); ++i) {
            const auto key = n.key("dimensions") + "[" + std::to_string(i) + "]";
            if (dims[i].is_string()) {
                run.features.continuous.push_back(default_dimension(dims[i].get<std::string>(), key, bins));
                continue;
            }
            Node d(dims[i], key);
            ContinuousDimension dim;
            dim.name = d.get<std::string>("name");
            const auto metric = feature_metric_from_string(d.get<std::string>("metric"));
            if (!metric) throw ConfigError(d.key("metric"), "unknown metric");
            dim.metric = *metric;
            dim.range_min = d.get<double>("min");
            dim.range_max = d.get<double>("max");
            dim.bins = bins;
            d.opt("bins", dim.bins);
            d.finish();
            run.features.continuous.push_back(dim);
        }
    }
    n.finish();
}

void parse_sampling(Node n, SamplingConfig& s) {
    n.opt("alpha", s.alpha);
    if (n.has("sigma_d")) {
        const auto& v = n.raw("sigma_d");
        if (v.is_number()) s.sigma_d = {v.get<double>()};
        else s.sigma_d = n.get<std::vector<double>>("sigma_d");
    }
    if (n.has("k_bf")) s.k_bf = n.get<int>("k_bf");
    n.opt("best", s.best_count);
    n.opt("diverse", s.diverse_count);
    n.opt("random", s.random_count);
    n.opt("attempts_per_diverse", s.attempts_per_diverse);
    n.finish();
}

void parse_cost(Node n, CostModel& c) {
    bool zero = false;
    n.opt("zero", zero);
    if (zero) c = CostModel::zero();
    n.opt("per_share_cost", c.per_share_cost);
    n.opt("min_trade_cost", c.min_trade_cost);
    n.opt("slippage_impact", c.slippage_impact);
    n.opt("volume_limit", c.volume_limit);
    n.opt("cap_by_volume", c.cap_by_volume);
    if (n.has("commission_mode")) {
        const auto mode = n.get<std::string>("commission_mode");
        if (mode == "per_share") c.commission_mode = CommissionMode::per_share;
        else if (mode == "percent_of_notional") c.commission_mode = CommissionMode::percent_of_notional;
        else throw ConfigError(n.key("commission_mode"), "expected per_share|percent_of_notional");
    }
    n.opt("commission_rate", c.commission_rate);
    n.finish();
}

void parse_execution(Node n, ExecutionConfig& e) {
    if (n.has("fill_mode")) {
        const auto mode = n.get<std::string>("fill_mode");
        if (mode == "same_close") e.fill_mode = FillMode::same_close;
        else if (mode == "next_open") e.fill_mode = FillMode::next_open;
        else throw ConfigError(n.key("fill_mode"), "expected same_close|next_open");
    }
    n.opt("whole_units", e.whole_units);
    n.opt("allow_short", e.allow_short);
    n.finish();
}

void parse_endpoint(Node n, EndpointConfig& e) {
    n.opt("base_url", e.base_url);
    n.opt("path", e.path);
    n.opt("model", e.model);
    n.opt("temperature", e.temperature);
    n.opt("api_key_env", e.api_key_env);
    if (n.has("timeout_ms")) e.timeout = std::chrono::milliseconds(n.get<long>("timeout_ms"));
    n.opt("max_retries", e.max_retries);
    if (n.has("backoff_ms")) e.backoff = std::chrono::milliseconds(n.get<long>("backoff_ms"));
    n.opt("max_concurrency", e.max_concurrency);
    if (e.max_concurrency < 1) throw ConfigError(n.key("max_concurrency"), "must be >= 1");
    if (e.max_retries < 0) throw ConfigError(n.key("max_retries"), "must be >= 0");
    n.finish();
}

void parse_generator(Node n, RunConfig& run, const fs::path& base) {
    std::string kind = "mutational";
    n.opt("kind", kind);
    if (kind == "mutational") run.generator = GeneratorKind::mutational;
    else if (kind == "llm") run.generator = GeneratorKind::llm;
    else throw ConfigError(n.key("kind"), "expected mutational|llm");
    if (n.has("prompts_dir")) run.prompts_dir = resolve(base, n.get<std::string>("prompts_dir"));
    n.opt("repair_budget", run.llm.repair_budget);
    n.opt("hypothesis_repairs", run.llm.hypothesis_repairs);
    if (n.has("endpoint")) parse_endpoint(n.child("endpoint"), run.endpoint);
    n.finish();
}

}  // namespace

LoadedConfig parse_config(const std::string& json_text, const fs::path& base_dir) {
    Json root;
    try {
        root = Json::parse(json_text);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("<root>", std::string("invalid JSON: ") + e.what());
    }
    LoadedConfig out;
    auto& run = out.run;
    Node n(root, "");

    if (n.has("taxonomy")) run.taxonomy.categories = n.get<std::vector<std::string>>("taxonomy");
    try {
        run.taxonomy.validate();
    } catch (const ConfigError& e) {
        throw ConfigError("taxonomy", e.what());
    }
    if (n.has("category_table")) {
        Node t = n.child("category_table");
        run.category_table.entries = n.get<std::map<std::string, std::string>>("category_table");
        for (const auto& [k, v] : run.category_table.entries) {
            (void)t.has(k);
            if (!run.taxonomy.contains(v) && !Taxonomy::equities_default().contains(v))
                throw ConfigError(t.key(k), "unknown family " + v);
        }
    }
    run.features = FeatureSpace::defaults(run.taxonomy);
    if (n.has("features")) parse_features(n.child("features"), run);

    const auto& assets = n.raw("assets");
    if (!assets.is_array() || assets.empty()) throw ConfigError("assets", "must be a non-empty array");
    for (std::size_t i = 0; i < assets.size(); ++i) {
        Node a(assets[i], "assets[" + std::to_string(i) + "]");
        AssetSpec spec;
        spec.symbol = a.get<std::string>("symbol");
        spec.path = resolve(base_dir, a.get<std::string>("path"));
        if (a.has("asset_class")) {
            try {
                spec.asset_class = parse_asset_class(a.get<std::string>("asset_class"));
            } catch (const Error& e) {
                throw ConfigError(a.key("asset_class"), e.what());
            }
        }
        a.opt("point_value", spec.point_value);
        if (!(spec.point_value > 0.0)) throw ConfigError(a.key("point_value"), "must be positive");
        if (a.has("shares")) spec.shares = a.get<double>("shares");
        a.finish();
        if (spec.shares) run.share_counts.emplace_back(spec.symbol, *spec.shares);
        out.assets.push_back(std::move(spec));
    }

    if (!n.has("split")) throw ConfigError("split", "is required");
    if (n.raw("split").is_string()) {
        const auto name = n.get<std::string>("split");
        if (name == "equities_default") out.split = SplitSpec::equities_default();
        else if (name == "futures_default") out.split = SplitSpec::futures_default();
        else throw ConfigError("split", "expected equities_default|futures_default or an object");
    } else {
        Node s = n.child("split");
        out.split = {parse_range(s, "train"), parse_range(s, "valid"), parse_range(s, "test")};
        s.finish();
    }

    if (n.has("evolution")) {
        Node e = n.child("evolution");
        e.opt("generations", run.generations);
        e.opt("migration_interval", run.migration_interval);
        e.opt("insight_interval", run.insight_interval);
        e.opt("migration_fraction", run.migration_fraction);
        e.opt("insight_max", run.insight_max);
        e.opt("master_seed", run.master_seed);
        e.opt("parallel", run.parallel);
        e.finish();
    }
    if (n.has("sampling")) parse_sampling(n.child("sampling"), run.sampling);
    if (n.has("cost")) parse_cost(n.child("cost"), run.cost);
    if (n.has("execution")) parse_execution(n.child("execution"), run.execution);
    n.opt("initial_capital", run.initial_capital);
    n.opt("benchmark", run.benchmark.kind);
    if (n.has("limits")) {
        Node l = n.child("limits");
        l.opt("min_lookback", run.param_bounds.min_lookback);
        l.opt("max_lookback", run.param_bounds.max_lookback);
        l.opt("max_indicators", run.max_indicators);
        l.opt("max_rule_nodes", run.max_rule_nodes);
        l.finish();
    }
    if (n.has("generator")) parse_generator(n.child("generator"), run, base_dir);
    if (n.has("run_dir")) run.run_dir = resolve(base_dir, n.get<std::string>("run_dir"));
    n.finish();

    run.validate();
    return out;
}

LoadedConfig load_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("<file>", "cannot read " + path.string());
    std::ostringstream text;
    text << in.rdbuf();
    auto base = fs::absolute(path).parent_path();
    auto out = parse_config(text.str(), base);
    out.source = fs::absolute(path);
    return out;
}

std::shared_ptr<const Universe> load_universe(const LoadedConfig& config) {
    std::vector<PriceSeries> series;
    for (const auto& a : config.assets) series.push_back(load_ohlcv_csv(a.path, a.symbol, a.asset_class, a.point_value));
    return std::make_shared<const Universe>(align_calendar(std::move(series)));
}

}  // namespace qevo
