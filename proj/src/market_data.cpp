#include "qevo/market_data.hpp"

#include "qevo/error.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <iterator>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

namespace qevo {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r'))
        s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
        s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split_csv_line(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        auto comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            out.push_back(trim(line.substr(start)));
            break;
        }
        out.push_back(trim(line.substr(start, comma - start)));
        start = comma + 1;
    }
    return out;
}

template <typename T>
bool parse_number(std::string_view text, T& value) {
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    return ec == std::errc{} && ptr == text.data() + text.size();
}

std::string shortest(double v) {
    std::array<char, 64> buf{};
    auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), ptr);
}

}  // namespace

Date parse_date(std::string_view text) {
    text = trim(text);
    int y = 0;
    unsigned m = 0;
    unsigned d = 0;
    if (text.size() != 10 || text[4] != '-' || text[7] != '-' ||
        !parse_number(text.substr(0, 4), y) || !parse_number(text.substr(5, 2), m) ||
        !parse_number(text.substr(8, 2), d))
        throw Error("invalid date '" + std::string(text) + "', expected YYYY-MM-DD");
    std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m},
                                    std::chrono::day{d}};
    if (!ymd.ok()) throw Error("invalid calendar date '" + std::string(text) + "'");
    return Date{ymd};
}

std::string format_date(Date d) {
    std::chrono::year_month_day ymd{d};
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
    return buf;
}

AssetClass parse_asset_class(std::string_view text) {
    if (text == "equity") return AssetClass::equity;
    if (text == "futures") return AssetClass::futures;
    throw Error("unknown asset class '" + std::string(text) + "' (expected equity|futures)");
}

std::string_view to_string(AssetClass c) {
    return c == AssetClass::equity ? "equity" : "futures";
}

void validate_bar(const Bar& b, std::size_t row) {
    if (!(b.open > 0.0) || !(b.high > 0.0) || !(b.low > 0.0) || !(b.close > 0.0))
        throw OhlcViolation(row, "prices must be positive");
    if (!std::isfinite(b.open) || !std::isfinite(b.high) || !std::isfinite(b.low) ||
        !std::isfinite(b.close))
        throw OhlcViolation(row, "prices must be finite");
    if (b.low > b.high) throw OhlcViolation(row, "low > high");
    if (b.low > std::min(b.open, b.close)) throw OhlcViolation(row, "low above open/close");
    if (b.high < std::max(b.open, b.close)) throw OhlcViolation(row, "high below open/close");
    if (b.volume < 0) throw OhlcViolation(row, "negative volume");
}

PriceSeries read_ohlcv_csv(std::istream& in, std::string symbol, AssetClass asset_class,
                           double point_value) {
    if (!(point_value > 0.0)) throw Error("point_value must be positive for " + symbol);
    PriceSeries series{std::move(symbol), asset_class, point_value, {}};

    std::string line;
    if (!std::getline(in, line)) throw MalformedRow(0, "missing header");
    if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) line.erase(0, 3);

    static constexpr std::array<std::string_view, 6> names = {"date", "open", "high",
                                                              "low",  "close", "volume"};
    std::array<int, 6> column{-1, -1, -1, -1, -1, -1};
    auto header = split_csv_line(line);
    for (std::size_t c = 0; c < header.size(); ++c) {
        std::string lower(header[c]);
        std::transform(lower.begin(), lower.end(), lower.begin(),
                       [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
        for (std::size_t k = 0; k < names.size(); ++k)
            if (lower == names[k]) column[k] = static_cast<int>(c);
    }
    for (std::size_t k = 0; k < names.size(); ++k)
        if (column[k] < 0) throw MalformedRow(0, "header lacks column '" + std::string(names[k]) + "'");

    std::size_t row = 0;
    while (std::getline(in, line)) {
        ++row;
        if (trim(line).empty()) continue;
        auto fields = split_csv_line(line);
        auto field = [&](std::size_t k) -> std::string_view {
            auto c = static_cast<std::size_t>(column[k]);
            if (c >= fields.size()) throw MalformedRow(row, "missing field '" + std::string(names[k]) + "'");
            return fields[c];
        };
        Bar bar;
        try {
            bar.date = parse_date(field(0));
        } catch (const MalformedRow&) {
            throw;
        } catch (const Error& e) {
            throw MalformedRow(row, e.what());
        }
        double* prices[4] = {&bar.open, &bar.high, &bar.low, &bar.close};
        for (std::size_t k = 1; k <= 4; ++k)
            if (!parse_number(field(k), *prices[k - 1]))
                throw MalformedRow(row, "bad number in '" + std::string(names[k]) + "'");
        double volume = 0.0;
        if (!parse_number(field(5), volume) || volume != std::floor(volume))
            throw MalformedRow(row, "bad volume");
        bar.volume = static_cast<std::int64_t>(volume);
        validate_bar(bar, row);
        series.bars.push_back(bar);
    }

    std::stable_sort(series.bars.begin(), series.bars.end(),
                     [](const Bar& a, const Bar& b) { return a.date < b.date; });
    for (std::size_t i = 1; i < series.bars.size(); ++i)
        if (series.bars[i].date == series.bars[i - 1].date)
            throw DuplicateDate(series.symbol + ": duplicate date " + format_date(series.bars[i].date));
    return series;
}

PriceSeries load_ohlcv_csv(const std::filesystem::path& path, std::string symbol,
                           AssetClass asset_class, double point_value) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path.string());
    return read_ohlcv_csv(in, std::move(symbol), asset_class, point_value);
}

void write_ohlcv_csv(const PriceSeries& series, std::ostream& out) {
    out << "date,open,high,low,close,volume\n";
    for (const auto& b : series.bars)
        out << format_date(b.date) << ',' << shortest(b.open) << ',' << shortest(b.high) << ','
            << shortest(b.low) << ',' << shortest(b.close) << ',' << b.volume << '\n';
}

void save_ohlcv_csv(const PriceSeries& series, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    write_ohlcv_csv(series, out);
}

Universe align_calendar(std::vector<PriceSeries> series_set) {
    if (series_set.empty()) throw EmptyIntersection("no series given");

    std::vector<Date> common;
    for (const auto& b : series_set.front().bars) common.push_back(b.date);
    for (std::size_t s = 1; s < series_set.size(); ++s) {
        std::vector<Date> dates;
        for (const auto& b : series_set[s].bars) dates.push_back(b.date);
        std::vector<Date> next;
        std::set_intersection(common.begin(), common.end(), dates.begin(), dates.end(),
                              std::back_inserter(next));
        common = std::move(next);
    }
    if (common.empty()) throw EmptyIntersection("series share no trading day");

    Universe u;
    u.calendar = common;
    for (auto& s : series_set) {
        std::vector<Bar> kept;
        kept.reserve(common.size());
        std::size_t j = 0;
        for (const auto& b : s.bars) {
            while (j < common.size() && common[j] < b.date) ++j;
            if (j < common.size() && common[j] == b.date)
                kept.push_back(b);
            else
                ++u.dropped_bars;
        }
        s.bars = std::move(kept);
        u.series.push_back(std::move(s));
    }
    return u;
}

DatasetView::DatasetView(std::shared_ptr<const Universe> universe, std::size_t begin,
                         std::size_t end)
    : universe_(std::move(universe)), begin_(begin), end_(end) {
    if (!universe_ || begin_ > end_ || end_ > universe_->num_days())
        throw Error("dataset view out of range");
}

DatasetView::DatasetView(std::shared_ptr<const Universe> universe)
    : DatasetView(universe, 0, universe ? universe->num_days() : 0) {}

std::span<const Bar> DatasetView::bars(std::size_t asset) const {
    return std::span<const Bar>(universe_->series[asset].bars).subspan(begin_, size());
}

DatasetView DatasetView::slice(std::size_t from, std::size_t to) const {
    if (from > to || to > size()) throw Error("slice out of range");
    return DatasetView(universe_, begin_ + from, begin_ + to);
}

SplitSpec SplitSpec::equities_default() {
    return {{parse_date("2015-08-01"), parse_date("2020-07-31")},
            {parse_date("2020-08-01"), parse_date("2022-07-31")},
            {parse_date("2022-08-01"), parse_date("2025-07-31")}};
}

SplitSpec SplitSpec::futures_default() {
    return {{parse_date("2018-01-01"), parse_date("2021-07-31")},
            {parse_date("2021-08-01"), parse_date("2022-07-31")},
            {parse_date("2022-08-01"), parse_date("2024-01-01")}};
}

SplitViews split_periods(std::shared_ptr<const Universe> universe, const SplitSpec& spec) {
    const DateRange* ranges[3] = {&spec.train, &spec.valid, &spec.test};
    const char* names[3] = {"train", "valid", "test"};
    for (int i = 0; i < 3; ++i)
        if (ranges[i]->first > ranges[i]->last)
            throw Error(std::string(names[i]) + " range starts after it ends");
    if (!(spec.train.last < spec.valid.first) || !(spec.valid.last < spec.test.first))
        throw Error("split ranges must be disjoint and ordered train < valid < test");

    const auto& cal = universe->calendar;
    auto view_of = [&](const DateRange& r, const char* name) {
        auto lo = std::lower_bound(cal.begin(), cal.end(), r.first);
        auto hi = std::upper_bound(cal.begin(), cal.end(), r.last);
        if (lo >= hi) throw EmptySplit(std::string(name) + " range contains no trading day");
        return DatasetView(universe, static_cast<std::size_t>(lo - cal.begin()),
                           static_cast<std::size_t>(hi - cal.begin()));
    };
    return {view_of(spec.train, "train"), view_of(spec.valid, "valid"), view_of(spec.test, "test")};
}

}  // namespace qevo
