#include "qevo/feature_map.hpp"

#include "qevo/error.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace qevo {

namespace {

constexpr std::pair<FeatureMetric, std::string_view> metric_names[] = {
    {FeatureMetric::num_transactions, "num_transactions"},
    {FeatureMetric::max_drawdown, "max_drawdown"},
    {FeatureMetric::sharpe, "sharpe"},
    {FeatureMetric::sortino, "sortino"},
    {FeatureMetric::cumulative_return, "cumulative_return"},
};

}  // namespace

std::string_view to_string(FeatureMetric m) {
    for (auto [k, name] : metric_names)
        if (k == m) return name;
    return "?";
}

std::optional<FeatureMetric> feature_metric_from_string(std::string_view name) {
    for (auto [k, n] : metric_names)
        if (n == name) return k;
    return std::nullopt;
}

FeatureSpace FeatureSpace::defaults(const Taxonomy& taxonomy, int bins) {
    FeatureSpace s;
    s.taxonomy = taxonomy;
    s.continuous = {
        {"num_transactions", FeatureMetric::num_transactions, 0.0, 5000.0, bins},
        {"max_drawdown", FeatureMetric::max_drawdown, -1.0, 0.0, bins},
        {"sharpe", FeatureMetric::sharpe, -2.0, 4.0, bins},
        {"sortino", FeatureMetric::sortino, -2.0, 6.0, bins},
        {"cumulative_return", FeatureMetric::cumulative_return, -1.0, 5.0, bins},
    };
    return s;
}

void FeatureSpace::validate() const {
    std::set<std::string> names;
    for (const auto& d : continuous) {
        if (d.name.empty() || d.name == "category") throw ConfigError("features", "invalid dimension name '" + d.name + "'");
        if (!names.insert(d.name).second) throw ConfigError("features." + d.name, "duplicate dimension");
        if (d.bins < 1) throw ConfigError("features." + d.name + ".bins", "must be >= 1");
        if (!(d.range_min < d.range_max) || !std::isfinite(d.range_min) || !std::isfinite(d.range_max))
            throw ConfigError("features." + d.name, "range_min must be < range_max");
    }
    if (use_category) taxonomy.validate();
}

double FeatureSpace::total_cells() const {
    double cells = 1.0;
    for (const auto& d : continuous) cells *= d.bins;
    if (use_category) cells *= std::pow(2.0, static_cast<double>(taxonomy.size()));
    return cells;
}

std::optional<std::size_t> FeatureSpace::index_of(std::string_view name) const {
    for (std::size_t i = 0; i < continuous.size(); ++i)
        if (continuous[i].name == name) return i;
    return std::nullopt;
}

std::string to_string(const FeatureVector& v) {
    std::string out;
    for (std::size_t i = 0; i < v.bins.size(); ++i) {
        if (i) out += ',';
        out += std::to_string(v.bins[i]);
    }
    if (!v.category.empty()) {
        if (!out.empty()) out += '|';
        out += v.category;
    }
    return out;
}

int bin_continuous(double value, const ContinuousDimension& dim) {
    if (!std::isfinite(value)) throw NonFiniteValue("non-finite value for dimension " + dim.name);
    const double width = (dim.range_max - dim.range_min) / dim.bins;
    const double raw = std::floor((value - dim.range_min) / width);
    return static_cast<int>(std::clamp(raw, 0.0, static_cast<double>(dim.bins - 1)));
}

std::string encode_category(const std::vector<std::string>& tags, const Taxonomy& taxonomy) {
    std::string bits(taxonomy.size(), '0');
    for (const auto& tag : tags) {
        auto idx = taxonomy.index_of(tag);
        if (!idx) throw UnknownTag("tag '" + tag + "' is not in the taxonomy");
        bits[*idx] = '1';
    }
    return bits;
}

double metric_value(const MetricSet& m, FeatureMetric metric) {
    switch (metric) {
        case FeatureMetric::num_transactions: return static_cast<double>(m.num_transactions);
        case FeatureMetric::max_drawdown: return m.max_drawdown;
        case FeatureMetric::cumulative_return: return m.cumulative_return;
        case FeatureMetric::sharpe:
            if (!m.sharpe) throw InvalidMetrics("sharpe undefined");
            return *m.sharpe;
        case FeatureMetric::sortino:
            if (!m.sortino) throw InvalidMetrics("sortino undefined");
            return *m.sortino;
    }
    throw InvalidMetrics("unknown metric");
}

FeatureVector compute_feature_vector(const MetricSet& metrics, const std::vector<std::string>& tags,
                                     const FeatureSpace& space) {
    if (!metrics.valid) throw InvalidMetrics(metrics.invalid_reason.empty() ? "invalid metrics" : metrics.invalid_reason);
    FeatureVector v;
    v.bins.reserve(space.continuous.size());
    for (const auto& d : space.continuous) v.bins.push_back(bin_continuous(metric_value(metrics, d.metric), d));
    if (space.use_category) v.category = encode_category(tags, space.taxonomy);
    return v;
}

}  // namespace qevo
