#include "hpd/folds.hpp"

#include <string>

#include "hpd/error.hpp"
#include "hpd/rng.hpp"

namespace hpd {

std::vector<std::size_t> make_folds(std::span<const Label> labels,
                                    std::size_t folds, std::uint64_t seed) {
  const std::size_t n = labels.size();
  if (folds < 2) throw ConfigError("folds must be >= 2");
  if (folds > n) {
    throw ConfigError("cannot make " + std::to_string(folds) + " folds from " +
                      std::to_string(n) + " samples");
  }
  std::vector<std::size_t> assignment(n, 0);
  std::size_t position = 0;
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < n; ++i) {
      if (class_index(labels[i]) == c) members.push_back(i);
    }
    Rng rng(substream_seed(seed, c));
    rng.shuffle(std::span<std::size_t>(members));
    for (std::size_t i : members) assignment[i] = position++ % folds;
  }
  return assignment;
}

void check_fold_feasibility(std::span<const Label> labels,
                            std::span<const std::size_t> assignment,
                            std::size_t folds) {
  std::vector<ClassCounts> counts(folds, ClassCounts{});
  for (std::size_t i = 0; i < labels.size(); ++i) {
    ++counts.at(assignment[i])[class_index(labels[i])];
  }
  for (std::size_t f = 0; f < folds; ++f) {
    for (std::size_t c = 0; c < kNumClasses; ++c) {
      if (counts[f][c] == 0) {
        throw DataError("folds", "fold " + std::to_string(f) + " has no " +
                                     std::string(label_name(label_from_index(c))) +
                                     " samples; use fewer folds or more data");
      }
    }
  }
}

}  // namespace hpd
