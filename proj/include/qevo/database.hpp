#pragma once

#include "qevo/feature_map.hpp"
#include "qevo/records.hpp"

#include <cstddef>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace qevo {

struct InsertResult {
    enum class Status { accepted, rejected, archived_only };
    Status status = Status::rejected;
    CandidateId id = 0;
    /// Previous occupant when an accepted record displaced one.
    std::optional<CandidateId> replaced;

    bool accepted() const noexcept { return status == Status::accepted; }
};

/// The elite map plus the archive of every candidate. Records are owned by
/// the archive; cells point at archive ids.
class EvolutionaryDatabase {
public:
    EvolutionaryDatabase() = default;
    explicit EvolutionaryDatabase(FeatureSpace space) : space_(std::move(space)) {}

    const FeatureSpace& space() const noexcept { return space_; }

    /// Archives the record under the next id (its `id` field is overwritten)
    /// and places it in its cell when it has a feature vector and beats the
    /// incumbent. Score ties keep the incumbent.
    InsertResult insert(CandidateRecord record);

    const CandidateRecord& get(CandidateId id) const { return archive_.at(static_cast<std::size_t>(id)); }
    const std::vector<CandidateRecord>& archive() const noexcept { return archive_; }
    const std::map<FeatureVector, CandidateId>& cells() const noexcept { return cells_; }
    std::size_t size() const noexcept { return archive_.size(); }

    /// True when the record currently occupies its cell.
    bool is_elite(CandidateId id) const;
    std::optional<CandidateId> occupant(const FeatureVector& v) const;

    bool operator==(const EvolutionaryDatabase&) const = default;

private:
    FeatureSpace space_;
    std::vector<CandidateRecord> archive_;
    std::map<FeatureVector, CandidateId> cells_;
};

/// `populations` maps island id to its member ids; may be empty.
struct MapStats {
    std::size_t filled_cells = 0;
    double total_cells = 0.0;
    double coverage = 0.0;
    std::optional<double> best_score;
    std::optional<CandidateId> best_id;
    double qd_sum = 0.0;
    /// Island id -> cells occupied by that island's members / total cells.
    std::map<int, double> island_coverage;
    std::map<int, std::size_t> island_cells;
};

MapStats map_stats(const EvolutionaryDatabase& db,
                   const std::map<int, std::vector<CandidateId>>& populations = {});

/// Metrics a projection can be colored by.
std::vector<std::string> projection_metrics();
/// Dimension names accepted by export_projection ("category" plus the
/// continuous ones; "mdd", "sr", "sor", "cr" and "trades" are aliases).
std::string canonical_dimension_name(const std::string& name);

struct ProjectionRow {
    std::string a;
    std::string b;
    std::optional<double> value;  // empty marker when no cell projects here
};

struct Projection {
    std::string dim_a;
    std::string dim_b;
    std::string metric;
    std::vector<ProjectionRow> rows;
};

/// Max of `metric` over the cells projecting onto each (a, b) pair. Emits the
/// full grid, or no rows at all for an empty map. Throws UnknownDimension.
Projection export_projection(const EvolutionaryDatabase& db, const std::string& dim_a,
                             const std::string& dim_b, const std::string& metric);

/// Header line plus one line per row; empty cells leave the value blank.
void write_projection_csv(const Projection& p, std::ostream& out);

}  // namespace qevo
