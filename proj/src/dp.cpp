#include "xtp/ops/dp.hpp"

#include <cmath>
#include <stdexcept>

namespace xtp::ops {

double LaplaceNoise::sample(double scale_b) {
    // 53-bit mantissa draw shifted off zero so u is strictly inside (0, 1).
    double u = (static_cast<double>(rng_() >> 11) + 0.5) * 0x1.0p-53;
    double x = u - 0.5;
    double sign = x < 0.0 ? -1.0 : 1.0;
    return -scale_b * sign * std::log(1.0 - 2.0 * std::fabs(x));
}

sql::Relation dp_count(const sql::Store& store, const std::string& view,
                       const std::string& group_col, double epsilon,
                       std::int64_t sensitivity, LaplaceNoise& noise) {
    if (epsilon <= 0.0) throw std::invalid_argument("epsilon must be positive");
    if (sensitivity < 1) throw std::invalid_argument("sensitivity must be >= 1");

    sql::SelectQuery q;
    q.from = view;
    q.columns.push_back({std::nullopt, group_col});
    q.count_star = true;
    q.group_by.push_back({std::nullopt, group_col});
    q.order_by = sql::OrderBy{group_col, sql::SortDir::Asc};
    sql::Relation counts = store.eval(q);

    const double b = static_cast<double>(sensitivity) / epsilon;
    for (auto& row : counts.rows) {
        auto raw = std::get<std::int64_t>(row[1]);
        row[1] = static_cast<std::int64_t>(
            std::llround(static_cast<double>(raw) + noise.sample(b)));
    }
    counts.name = view + "_dp";
    return counts;
}

}  // namespace xtp::ops
