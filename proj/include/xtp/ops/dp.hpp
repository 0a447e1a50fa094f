#pragma once

#include <cstdint>
#include <random>
#include <string>

#include "xtp/sql/store.hpp"

namespace xtp::ops {

// Seedable Laplace sampler via inverse CDF over a 53-bit uniform draw, so
// sequences are reproducible across platforms.
class LaplaceNoise {
public:
    explicit LaplaceNoise(std::uint64_t seed) : rng_(seed) {}

    // One draw at scale b (mean 0, mean absolute deviation b).
    double sample(double scale_b);

private:
    std::mt19937_64 rng_;
};

// Per-group COUNT(*) over `view`, grouped by `group_col`, with Laplace noise
// of scale sensitivity/epsilon added to each count (rounded to the nearest
// integer on release). Sensitivity comes from the provenance contribution
// bound. Output ordered by group value.
sql::Relation dp_count(const sql::Store& store, const std::string& view,
                       const std::string& group_col, double epsilon,
                       std::int64_t sensitivity, LaplaceNoise& noise);

}  // namespace xtp::ops
