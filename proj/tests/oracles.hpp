// Independent reference checks shared by the unit tests and the acceptance
// runner. Nothing here calls into the geometry or shaping code under test.
#pragma once

#include <cmath>
#include <queue>
#include <vector>

#include "pbcs/maze.hpp"

namespace oracle {

/// Distance from a point to a closed rectangle (0 inside).
inline double point_rect_distance(double x, double y, const pbcs::Rect& r) {
    const double dx = std::max({r.xmin - x, 0.0, x - r.xmax});
    const double dy = std::max({r.ymin - y, 0.0, y - r.ymax});
    return std::hypot(dx, dy);
}

struct SampledHit {
    bool hit = false;        // some sample lies inside a rectangle inflated by tol
    double min_gap = 1e300;  // smallest sample-to-rectangle distance
};

/// Dense sampling of the closed segment [a, b] against all walls.
inline SampledHit sample_segment(const pbcs::State& a, const pbcs::State& b, const std::vector<pbcs::Rect>& walls,
                                 int samples, double tol) {
    SampledHit out;
    for (int i = 0; i < samples; ++i) {
        const double t = samples == 1 ? 0.0 : static_cast<double>(i) / (samples - 1);
        const double x = a.x + t * (b.x - a.x), y = a.y + t * (b.y - a.y);
        for (const auto& r : walls) {
            const double d = point_rect_distance(x, y, r);
            out.min_gap = std::min(out.min_gap, d);
            if (d <= tol) out.hit = true;
        }
    }
    return out;
}

/// Exact distance between segment [a, b] and a rectangle, by minimising
/// over the segment with a fine scan followed by golden-section refinement.
/// The distance along a segment to a convex set is convex in t.
inline double segment_rect_distance(const pbcs::State& a, const pbcs::State& b, const pbcs::Rect& r) {
    auto f = [&](double t) { return point_rect_distance(a.x + t * (b.x - a.x), a.y + t * (b.y - a.y), r); };
    double lo = 0.0, hi = 1.0;
    const double g = (std::sqrt(5.0) - 1.0) / 2.0;
    for (int it = 0; it < 200; ++it) {
        const double m1 = hi - g * (hi - lo), m2 = lo + g * (hi - lo);
        if (f(m1) <= f(m2)) hi = m2; else lo = m1;
    }
    return std::min({f(0.0), f(1.0), f(0.5 * (lo + hi))});
}

/// Cells reachable from cell (0, 0), judging adjacency by whether any wall
/// rectangle covers the midpoint of the shared border.
inline std::vector<std::vector<bool>> reachable_cells(const pbcs::MazeSpec& spec) {
    const int n = spec.size;
    auto blocked = [&](double x, double y) {
        for (const auto& r : spec.walls) {
            if (r.contains({x, y})) return true;
        }
        return false;
    };
    std::vector<std::vector<bool>> seen(n, std::vector<bool>(n, false));
    std::queue<std::pair<int, int>> q;
    q.push({0, 0});
    seen[0][0] = true;
    while (!q.empty()) {
        auto [i, j] = q.front();
        q.pop();
        const int di[] = {1, -1, 0, 0}, dj[] = {0, 0, 1, -1};
        for (int k = 0; k < 4; ++k) {
            const int ni = i + di[k], nj = j + dj[k];
            if (ni < 0 || nj < 0 || ni >= n || nj >= n || seen[ni][nj]) continue;
            const double bx = 0.5 * (i + ni) + 0.5, by = 0.5 * (j + nj) + 0.5;
            if (blocked(bx, by)) continue;
            seen[ni][nj] = true;
            q.push({ni, nj});
        }
    }
    return seen;
}

/// 1/d potential and shaped reward, written out independently.
inline double phi(double x, double y, double cx, double cy) {
    const double d = std::sqrt((x - cx) * (x - cx) + (y - cy) * (y - cy));
    return 1.0 / (d < 1e-6 ? 1e-6 : d);
}

}  // namespace oracle
