#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "hpd/corpus.hpp"

namespace hpd {

// Stratified k-fold assignment: returns the fold index of every sample. Each
// class is shuffled with its own seeded substream and dealt round-robin,
// continuing across classes, so fold sizes differ by at most one overall and
// per class. Throws ConfigError when folds < 2 or folds > n.
std::vector<std::size_t> make_folds(std::span<const Label> labels,
                                    std::size_t folds, std::uint64_t seed);

// Throws DataError naming the class and fold when some fold would lack a
// class in its held-out part.
void check_fold_feasibility(std::span<const Label> labels,
                            std::span<const std::size_t> assignment,
                            std::size_t folds);

}  // namespace hpd
