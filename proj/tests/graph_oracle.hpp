#pragma once

// Brute-force reference construction of the hierarchical graph, written
// independently of the library: full sorts for neighbor lists and an
// exhaustive scan of the coarse edge set for pruning and matching.

#include <algorithm>
#include <cmath>
#include <set>
#include <utility>
#include <vector>

#include "pointedge/geom.hpp"

namespace pointedge::testing {

struct OracleLayer {
    std::vector<std::pair<std::size_t, std::size_t>> edges;  // sorted (src, dst)
    // per edge: (coarse edge index, weight), coarse index ascending
    std::vector<std::vector<std::pair<std::size_t, double>>> matches;
};

inline double sq(const Vec3& a, const Vec3& b) {
    double s = 0;
    for (int i = 0; i < 3; ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return s;
}

/// k nearest of `q` among `ref` by (distance, index); when `self` >= 0 and the
/// point is not in the list, it replaces the front and shifts the rest.
inline std::vector<std::size_t> nearest(const Vec3& q, const Positions& ref, std::size_t k, long self = -1) {
    std::vector<std::pair<double, std::size_t>> all;
    for (std::size_t j = 0; j < ref.size(); ++j) all.emplace_back(sq(q, ref[j]), j);
    std::sort(all.begin(), all.end());
    std::vector<std::size_t> out;
    for (std::size_t j = 0; j < k; ++j) out.push_back(all[j].second);
    if (self >= 0 && std::find(out.begin(), out.end(), static_cast<std::size_t>(self)) == out.end()) {
        out.insert(out.begin(), static_cast<std::size_t>(self));
        out.pop_back();
    }
    return out;
}

inline std::vector<std::pair<std::size_t, std::size_t>> knn_edges(const Positions& pts, std::size_t k) {
    std::set<std::pair<std::size_t, std::size_t>> s;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        for (std::size_t j : nearest(pts[i], pts, k, static_cast<long>(i))) s.emplace(i, j);
    }
    return {s.begin(), s.end()};
}

/// Layer L from layer L-1. `fine_idx`/`coarse_idx` are full-resolution ids used
/// to find a point's own entry in the coarse layer.
inline OracleLayer oracle_layer(const Positions& fine, const std::vector<std::size_t>& fine_idx, std::size_t k,
                                const Positions& coarse, const std::vector<std::size_t>& coarse_idx,
                                const std::vector<std::pair<std::size_t, std::size_t>>& coarse_edges,
                                std::size_t k_interp) {
    std::vector<std::vector<std::size_t>> cross(fine.size());
    std::vector<std::vector<double>> cross_d(fine.size());
    for (std::size_t i = 0; i < fine.size(); ++i) {
        long self = -1;
        for (std::size_t c = 0; c < coarse_idx.size(); ++c) {
            if (coarse_idx[c] == fine_idx[i]) self = static_cast<long>(c);
        }
        cross[i] = nearest(fine[i], coarse, k_interp, self);
        for (std::size_t c : cross[i]) cross_d[i].push_back(static_cast<long>(c) == self ? 0.0 : std::sqrt(sq(fine[i], coarse[c])));
    }
    auto matches_of = [&](std::size_t i, std::size_t j) {
        std::vector<std::pair<std::size_t, double>> m;
        double total = 0;
        for (std::size_t e = 0; e < coarse_edges.size(); ++e) {
            const auto [a, b] = coarse_edges[e];
            auto ia = std::find(cross[i].begin(), cross[i].end(), a);
            auto jb = std::find(cross[j].begin(), cross[j].end(), b);
            if (ia == cross[i].end() || jb == cross[j].end()) continue;
            const double di = cross_d[i][static_cast<std::size_t>(ia - cross[i].begin())];
            const double dj = cross_d[j][static_cast<std::size_t>(jb - cross[j].begin())];
            const double w = 1.0 / ((di * di + 1e-8) * (dj * dj + 1e-8));
            m.emplace_back(e, w);
            total += w;
        }
        for (auto& [e, w] : m) w /= total;
        return m;
    };
    OracleLayer out;
    for (std::size_t i = 0; i < fine.size(); ++i) {
        std::vector<std::size_t> cand = nearest(fine[i], fine, k, static_cast<long>(i));
        std::sort(cand.begin(), cand.end());
        bool any = false;
        for (std::size_t j : cand) {
            auto m = matches_of(i, j);
            if (m.empty()) continue;
            any = true;
            out.edges.emplace_back(i, j);
            out.matches.push_back(std::move(m));
        }
        if (!any) {
            out.edges.emplace_back(i, i);
            out.matches.push_back(matches_of(i, i));
        }
    }
    return out;
}

}  // namespace pointedge::testing
