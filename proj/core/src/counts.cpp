#include "ranbn/counts.hpp"

#include <numeric>

namespace ranbn {

std::int64_t FamilyCounts::config_total(std::size_t config) const {
    auto first = counts.begin() + static_cast<std::ptrdiff_t>(config * child_states);
    return std::accumulate(first, first + static_cast<std::ptrdiff_t>(child_states), std::int64_t{0});
}

std::vector<std::size_t> row_major_strides(std::span<const int> cards) {
    std::vector<std::size_t> strides(cards.size(), 1);
    for (std::size_t i = cards.size(); i-- > 1;) strides[i - 1] = strides[i] * static_cast<std::size_t>(cards[i]);
    return strides;
}

FamilyCounts count_family(const DiscreteDataset& data, std::size_t child, std::span<const std::size_t> parents) {
    FamilyCounts fc;
    fc.child_states = static_cast<std::size_t>(data.cardinality(child));
    std::vector<int> cards;
    for (auto p : parents) cards.push_back(data.cardinality(p));
    auto strides = row_major_strides(cards);
    for (int c : cards) fc.parent_configs *= static_cast<std::size_t>(c);
    fc.counts.assign(fc.parent_configs * fc.child_states, 0);

    const std::size_t n_cols = data.cols();
    const int* cells = data.cells().data();
    const std::size_t n_rows = data.rows();
    for (std::size_t r = 0; r < n_rows; ++r) {
        const int* row = cells + r * n_cols;
        std::size_t config = 0;
        for (std::size_t j = 0; j < parents.size(); ++j) config += strides[j] * static_cast<std::size_t>(row[parents[j]]);
        ++fc.counts[config * fc.child_states + static_cast<std::size_t>(row[child])];
    }
    return fc;
}

}  // namespace ranbn
