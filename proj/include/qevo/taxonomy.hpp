#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace qevo {

/// Ordered list of strategy families. Order fixes the bit position of each
/// family in the category bitstring.
struct Taxonomy {
    std::vector<std::string> categories;

    std::size_t size() const noexcept { return categories.size(); }
    std::optional<std::size_t> index_of(std::string_view name) const;
    bool contains(std::string_view name) const { return index_of(name).has_value(); }

    /// Throws ConfigError on an empty list or duplicate names.
    void validate() const;

    /// The eight equity families.
    static Taxonomy equities_default();

    bool operator==(const Taxonomy&) const = default;
};

/// Fixed mapping from program features to strategy families, used to derive
/// category tags. Keys are indicator kind names ("rsi"), "sizing:<kind>",
/// "overlay:<name>" and "price:<field>".
struct CategoryTable {
    std::map<std::string, std::string> entries;

    std::optional<std::string> lookup(std::string_view key) const;

    static CategoryTable defaults();

    bool operator==(const CategoryTable&) const = default;
};

}  // namespace qevo
