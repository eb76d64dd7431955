#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "rmtl/dataset.hpp"
#include "rmtl/errors.hpp"

namespace rmtl {

/// 1 - sum p_c^2 for a binary label split into (positives, negatives).
inline double gini_impurity(std::size_t pos, std::size_t neg) {
    const std::size_t n = pos + neg;
    if (n == 0) return 0.0;
    const double p = static_cast<double>(pos) / static_cast<double>(n);
    const double q = static_cast<double>(neg) / static_cast<double>(n);
    return 1.0 - p * p - q * q;
}

struct GiniScore {
    std::string feature;
    double score = 0.0;
};

/// Impurity reduction of each categorical feature (user_id, item_id, and
/// every schema cat field) against one binary label: parent Gini minus the
/// value-weighted child Gini. Sorted descending, ties broken by name.
inline std::vector<GiniScore> gini_rank_features(const SessionDataset& ds,
                                                 const std::string& label_field) {
    if (label_field != "y_click" && label_field != "y_convert")
        throw ValidationError("gini_rank_features: label_field must be y_click or y_convert");
    const bool use_click = label_field == "y_click";

    struct Column {
        std::string name;
        std::vector<std::uint64_t> values;
    };
    std::vector<Column> cols;
    cols.push_back({"user_id", {}});
    cols.push_back({"item_id", {}});
    for (const auto& f : ds.schema.cat_fields) cols.push_back({f.name, {}});
    std::vector<int> labels;
    for (const auto& s : ds.sessions)
        for (const auto& r : s.rows) {
            labels.push_back(use_click ? r.y_click : r.y_convert);
            cols[0].values.push_back(r.user_id);
            cols[1].values.push_back(r.item_id);
            for (std::size_t i = 0; i < r.cats.size(); ++i)
                cols[2 + i].values.push_back(r.cats[i]);
        }
    if (labels.empty()) throw ValidationError("gini_rank_features: empty dataset");

    const std::size_t n = labels.size();
    std::size_t pos = 0;
    for (int y : labels) pos += static_cast<std::size_t>(y);
    const double parent = gini_impurity(pos, n - pos);

    std::vector<GiniScore> out;
    for (const auto& col : cols) {
        std::map<std::uint64_t, std::pair<std::size_t, std::size_t>> by_value;
        for (std::size_t i = 0; i < n; ++i) {
            auto& [p, q] = by_value[col.values[i]];
            if (labels[i])
                ++p;
            else
                ++q;
        }
        double weighted = 0.0;
        for (const auto& [v, pq] : by_value) {
            const double nv = static_cast<double>(pq.first + pq.second);
            weighted += (nv / static_cast<double>(n)) * gini_impurity(pq.first, pq.second);
        }
        out.push_back({col.name, parent - weighted});
    }
    std::sort(out.begin(), out.end(), [](const GiniScore& a, const GiniScore& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.feature < b.feature;
    });
    return out;
}

}  // namespace rmtl
