#pragma once

#include "qevo/metrics.hpp"
#include "qevo/taxonomy.hpp"

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace qevo {

/// Behavioral quantity a continuous dimension bins.
enum class FeatureMetric { num_transactions, max_drawdown, sharpe, sortino, cumulative_return };

std::string_view to_string(FeatureMetric m);
std::optional<FeatureMetric> feature_metric_from_string(std::string_view name);

struct ContinuousDimension {
    std::string name;
    FeatureMetric metric = FeatureMetric::sharpe;
    double range_min = 0.0;
    double range_max = 1.0;
    int bins = 16;

    bool operator==(const ContinuousDimension&) const = default;
};

/// Continuous dimensions plus an optional category bitstring over the
/// taxonomy.
struct FeatureSpace {
    std::vector<ContinuousDimension> continuous;
    bool use_category = true;
    Taxonomy taxonomy;

    /// sharpe [-2, 4], sortino [-2, 6], max_drawdown [-1, 0],
    /// cumulative_return [-1, 5], num_transactions [0, 5000], all with `bins`.
    static FeatureSpace defaults(const Taxonomy& taxonomy, int bins = 16);

    /// Throws ConfigError on bins < 1, an empty range or a bad taxonomy.
    void validate() const;

    /// Number of cells: product of bins times 2^n when the category is on.
    double total_cells() const;

    /// Continuous dimension index by name, or nullopt. "category" is not a
    /// continuous dimension.
    std::optional<std::size_t> index_of(std::string_view name) const;

    bool operator==(const FeatureSpace&) const = default;
};

struct FeatureVector {
    std::vector<int> bins;
    std::string category;  // '0'/'1' per taxonomy entry; empty when disabled

    auto operator<=>(const FeatureVector&) const = default;
    bool operator==(const FeatureVector&) const = default;
};

std::string to_string(const FeatureVector& v);

/// floor((value - min) / ((max - min) / B)) clamped to [0, B - 1].
/// Throws NonFiniteValue.
int bin_continuous(double value, const ContinuousDimension& dim);

/// Bit i is '1' iff taxonomy[i] is among the tags. Throws UnknownTag.
std::string encode_category(const std::vector<std::string>& tags, const Taxonomy& taxonomy);

/// Value a metric takes in a set. Throws InvalidMetrics when undefined.
double metric_value(const MetricSet& m, FeatureMetric metric);

/// Pure function of the metrics and tags. Throws InvalidMetrics.
FeatureVector compute_feature_vector(const MetricSet& metrics, const std::vector<std::string>& tags,
                                     const FeatureSpace& space);

}  // namespace qevo
