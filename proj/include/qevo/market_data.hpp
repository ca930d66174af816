#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace qevo {

using Date = std::chrono::sys_days;

/// Parses YYYY-MM-DD. Throws qevo::Error on anything else.
Date parse_date(std::string_view text);
std::string format_date(Date d);

enum class AssetClass { equity, futures };

AssetClass parse_asset_class(std::string_view text);
std::string_view to_string(AssetClass c);

struct Bar {
    Date date;
    double open = 0.0;
    double high = 0.0;
    double low = 0.0;
    double close = 0.0;
    std::int64_t volume = 0;

    bool operator==(const Bar&) const = default;
};

struct PriceSeries {
    std::string symbol;
    AssetClass asset_class = AssetClass::equity;
    double point_value = 1.0;
    std::vector<Bar> bars;

    bool operator==(const PriceSeries&) const = default;
};

/// Throws OhlcViolation (with `row`) when a bar breaks the OHLC ordering,
/// has a non-positive price or negative volume.
void validate_bar(const Bar& bar, std::size_t row);

/// Reads a CSV whose header names date,open,high,low,close,volume in any
/// order. Bars come back sorted by date and validated.
PriceSeries read_ohlcv_csv(std::istream& in, std::string symbol, AssetClass asset_class,
                           double point_value);
PriceSeries load_ohlcv_csv(const std::filesystem::path& path, std::string symbol,
                           AssetClass asset_class, double point_value);

void write_ohlcv_csv(const PriceSeries& series, std::ostream& out);
void save_ohlcv_csv(const PriceSeries& series, const std::filesystem::path& path);

/// Aligned asset universe: series[a].bars[t].date == calendar[t] for all a, t.
/// Immutable once built; share it through shared_ptr<const Universe>.
struct Universe {
    std::vector<PriceSeries> series;
    std::vector<Date> calendar;
    std::size_t dropped_bars = 0;

    std::size_t num_assets() const noexcept { return series.size(); }
    std::size_t num_days() const noexcept { return calendar.size(); }
};

/// Intersects the calendars of all series and drops bars outside the
/// intersection. No forward-fill. Throws EmptyIntersection.
Universe align_calendar(std::vector<PriceSeries> series_set);

/// A contiguous date slice [begin, end) of a shared universe.
class DatasetView {
public:
    DatasetView() = default;
    DatasetView(std::shared_ptr<const Universe> universe, std::size_t begin, std::size_t end);
    explicit DatasetView(std::shared_ptr<const Universe> universe);

    std::size_t size() const noexcept { return end_ - begin_; }
    bool empty() const noexcept { return size() == 0; }
    std::size_t num_assets() const noexcept { return universe_ ? universe_->num_assets() : 0; }

    const Bar& bar(std::size_t asset, std::size_t t) const {
        return universe_->series[asset].bars[begin_ + t];
    }
    std::span<const Bar> bars(std::size_t asset) const;
    Date date(std::size_t t) const { return universe_->calendar[begin_ + t]; }
    const std::string& symbol(std::size_t asset) const { return universe_->series[asset].symbol; }
    double point_value(std::size_t asset) const { return universe_->series[asset].point_value; }
    AssetClass asset_class(std::size_t asset) const { return universe_->series[asset].asset_class; }

    /// Sub-view over [from, to) relative to this view.
    DatasetView slice(std::size_t from, std::size_t to) const;

    std::size_t offset() const noexcept { return begin_; }
    const std::shared_ptr<const Universe>& universe() const noexcept { return universe_; }

private:
    std::shared_ptr<const Universe> universe_;
    std::size_t begin_ = 0;
    std::size_t end_ = 0;
};

struct DateRange {
    Date first;  // inclusive
    Date last;   // inclusive
};

struct SplitSpec {
    DateRange train;
    DateRange valid;
    DateRange test;

    /// Equities split used in the original study (5y / 2y / 3y).
    static SplitSpec equities_default();
    /// Futures split (3.6y / 1y / 1.4y).
    static SplitSpec futures_default();
};

struct SplitViews {
    DatasetView train;
    DatasetView valid;
    DatasetView test;
};

/// Throws Error if the ranges overlap or are out of order, EmptySplit when a
/// range holds no trading day.
SplitViews split_periods(std::shared_ptr<const Universe> universe, const SplitSpec& spec);

}  // namespace qevo
