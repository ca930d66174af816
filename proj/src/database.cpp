#include "qevo/database.hpp"

#include "qevo/error.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <set>

namespace qevo {

InsertResult EvolutionaryDatabase::insert(CandidateRecord record) {
    InsertResult result;
    result.id = static_cast<CandidateId>(archive_.size());
    record.id = result.id;
    const double score = record.score();
    if (!record.feature_vector || !std::isfinite(score)) {
        result.status = InsertResult::Status::archived_only;
        archive_.push_back(std::move(record));
        return result;
    }
    const FeatureVector key = *record.feature_vector;
    archive_.push_back(std::move(record));
    auto it = cells_.find(key);
    if (it == cells_.end()) {
        cells_.emplace(key, result.id);
        result.status = InsertResult::Status::accepted;
    } else if (archive_[static_cast<std::size_t>(it->second)].score() < score) {
        result.replaced = it->second;
        it->second = result.id;
        result.status = InsertResult::Status::accepted;
    } else {
        result.status = InsertResult::Status::rejected;
    }
    return result;
}

bool EvolutionaryDatabase::is_elite(CandidateId id) const {
    if (id >= archive_.size()) return false;
    const auto& fv = archive_[static_cast<std::size_t>(id)].feature_vector;
    if (!fv) return false;
    auto it = cells_.find(*fv);
    return it != cells_.end() && it->second == id;
}

std::optional<CandidateId> EvolutionaryDatabase::occupant(const FeatureVector& v) const {
    auto it = cells_.find(v);
    if (it == cells_.end()) return std::nullopt;
    return it->second;
}

MapStats map_stats(const EvolutionaryDatabase& db, const std::map<int, std::vector<CandidateId>>& populations) {
    MapStats s;
    s.total_cells = db.space().total_cells();
    s.filled_cells = db.cells().size();
    s.coverage = s.total_cells > 0 ? static_cast<double>(s.filled_cells) / s.total_cells : 0.0;
    for (const auto& [fv, id] : db.cells()) {
        const double score = db.get(id).score();
        s.qd_sum += score;
        if (!s.best_score || score > *s.best_score) {
            s.best_score = score;
            s.best_id = id;
        }
    }
    for (const auto& [island, members] : populations) {
        std::size_t count = 0;
        for (CandidateId id : members)
            if (db.is_elite(id)) ++count;
        s.island_cells[island] = count;
        s.island_coverage[island] = s.total_cells > 0 ? static_cast<double>(count) / s.total_cells : 0.0;
    }
    return s;
}

std::vector<std::string> projection_metrics() {
    return {"score", "sharpe", "sortino", "information_ratio", "max_drawdown", "cumulative_return", "num_transactions"};
}

std::string canonical_dimension_name(const std::string& name) {
    if (name == "mdd") return "max_drawdown";
    if (name == "sr") return "sharpe";
    if (name == "sor") return "sortino";
    if (name == "cr") return "cumulative_return";
    if (name == "trades") return "num_transactions";
    if (name == "ir") return "information_ratio";
    return name;
}

namespace {

std::optional<double> color_value(const CandidateRecord& r, const std::string& metric) {
    const auto& m = r.metrics;
    if (metric == "score") return r.score();
    if (metric == "sharpe") return m.sharpe;
    if (metric == "sortino") return m.sortino;
    if (metric == "information_ratio") return m.information_ratio;
    if (metric == "max_drawdown") return m.max_drawdown;
    if (metric == "cumulative_return") return m.cumulative_return;
    if (metric == "num_transactions") return static_cast<double>(m.num_transactions);
    return std::nullopt;
}

struct Axis {
    std::string name;
    std::optional<std::size_t> continuous;  // nullopt for the category axis
    std::vector<std::string> labels;
};

Axis make_axis(const EvolutionaryDatabase& db, const std::string& raw) {
    Axis axis;
    axis.name = canonical_dimension_name(raw);
    const auto& space = db.space();
    if (axis.name == "category") {
        if (!space.use_category) throw UnknownDimension("category dimension is disabled");
        const std::size_t n = space.taxonomy.size();
        if (n <= 12) {
            for (std::size_t mask = 0; mask < (std::size_t{1} << n); ++mask) {
                std::string bits(n, '0');
                for (std::size_t i = 0; i < n; ++i)
                    if (mask & (std::size_t{1} << i)) bits[i] = '1';
                axis.labels.push_back(bits);
            }
            std::sort(axis.labels.begin(), axis.labels.end());
        } else {
            std::set<std::string> seen;
            for (const auto& [fv, id] : db.cells()) seen.insert(fv.category);
            axis.labels.assign(seen.begin(), seen.end());
        }
        return axis;
    }
    axis.continuous = space.index_of(axis.name);
    if (!axis.continuous) {
        std::string valid = "category";
        for (const auto& d : space.continuous) valid += ", " + d.name;
        throw UnknownDimension("unknown dimension '" + raw + "' (valid: " + valid + ")");
    }
    for (int b = 0; b < space.continuous[*axis.continuous].bins; ++b) axis.labels.push_back(std::to_string(b));
    return axis;
}

std::string label_of(const Axis& axis, const FeatureVector& fv) {
    return axis.continuous ? std::to_string(fv.bins[*axis.continuous]) : fv.category;
}

}  // namespace

Projection export_projection(const EvolutionaryDatabase& db, const std::string& dim_a, const std::string& dim_b,
                             const std::string& metric) {
    const Axis a = make_axis(db, dim_a);
    const Axis b = make_axis(db, dim_b);
    if (a.name == b.name) throw UnknownDimension("projection dimensions must differ");
    const std::string color = canonical_dimension_name(metric);
    const auto metrics = projection_metrics();
    if (std::find(metrics.begin(), metrics.end(), color) == metrics.end()) {
        std::string valid;
        for (const auto& m : metrics) valid += (valid.empty() ? "" : ", ") + m;
        throw UnknownDimension("unknown metric '" + metric + "' (valid: " + valid + ")");
    }

    Projection p{a.name, b.name, color, {}};
    if (db.cells().empty()) return p;
    std::map<std::pair<std::string, std::string>, double> best;
    for (const auto& [fv, id] : db.cells()) {
        auto v = color_value(db.get(id), color);
        if (!v) continue;
        auto key = std::make_pair(label_of(a, fv), label_of(b, fv));
        auto it = best.find(key);
        if (it == best.end() || *v > it->second) best[key] = *v;
    }
    for (const auto& la : a.labels)
        for (const auto& lb : b.labels) {
            ProjectionRow row{la, lb, std::nullopt};
            if (auto it = best.find({la, lb}); it != best.end()) row.value = it->second;
            p.rows.push_back(std::move(row));
        }
    return p;
}

void write_projection_csv(const Projection& p, std::ostream& out) {
    out << p.dim_a << ',' << p.dim_b << ',' << p.metric << '\n';
    auto old = out.precision(17);
    for (const auto& r : p.rows) {
        out << r.a << ',' << r.b << ',';
        if (r.value) out << *r.value;
        out << '\n';
    }
    out.precision(old);
}

}  // namespace qevo
