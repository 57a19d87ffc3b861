// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "exhibit/domain.hpp"

#include <algorithm>
#include <vector>

namespace exhibit {

struct SearchHit {
    MuragId id;
    double score = 0.0;

    bool operator==(const SearchHit&) const = default;
};

/// Ranked order used by every search surface: score descending, ties by id
/// ascending.
inline bool ranks_before(const SearchHit& a, const SearchHit& b)
{
    if (a.score != b.score)
        return a.score > b.score;
    return a.id < b.id;
}

inline void sort_hits(std::vector<SearchHit>& hits)
{
    std::ranges::sort(hits, ranks_before);
}

inline void to_json(nlohmann::json& j, const SearchHit& h)
{
    j = {{"murag_id", h.id}, {"score", h.score}};
}

} // namespace exhibit
