#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "ranbn/telemetry.hpp"

namespace ranbn {

// Contingency counts of one child column against the joint configuration of
// its parent columns. Parent configurations use row-major mixed radix: the
// last parent varies fastest.
struct FamilyCounts {
    std::size_t parent_configs = 1;  // q
    std::size_t child_states = 0;    // r
    std::vector<std::int64_t> counts;  // q * r, index = config * r + state

    std::int64_t at(std::size_t config, std::size_t state) const { return counts[config * child_states + state]; }
    std::int64_t config_total(std::size_t config) const;
};

FamilyCounts count_family(const DiscreteDataset& data, std::size_t child, std::span<const std::size_t> parents);

// Mixed-radix strides for the given cardinalities (last fastest).
std::vector<std::size_t> row_major_strides(std::span<const int> cards);

}  // namespace ranbn
