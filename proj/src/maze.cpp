#include "pbcs/maze.hpp"

#include <istream>
#include <ostream>
#include <random>

#include "pbcs/textio.hpp"

namespace pbcs {

namespace {

constexpr double kHalfWall = kWallThickness / 2.0;

void add_boundary(MazeSpec& spec) {
    const double n = spec.size;
    spec.walls.push_back({0.0, -kHalfWall, n, kHalfWall});
    spec.walls.push_back({0.0, n - kHalfWall, n, n + kHalfWall});
    spec.walls.push_back({-kHalfWall, 0.0, kHalfWall, n});
    spec.walls.push_back({n - kHalfWall, 0.0, n + kHalfWall, n});
}

}  // namespace

State default_target(int size) {
    if (size > 2) return {size - 0.5, size - 0.5};
    return {0.5, 1.5};
}

MazeSpec generate_maze(int size, std::uint64_t seed) {
    if (size < 1) throw std::invalid_argument("maze size must be >= 1, got " + std::to_string(size));

    MazeSpec spec;
    spec.size = size;
    spec.seed = seed;
    spec.target_center = default_target(size);
    spec.target_radius = kTargetRadius;
    add_boundary(spec);

    const auto n = static_cast<std::size_t>(size);
    auto idx = [n](std::size_t i, std::size_t j) { return j * n + i; };
    // open_east[c]: border between (i,j) and (i+1,j) carved; open_north likewise to (i,j+1)
    std::vector<char> visited(n * n, 0), open_east(n * n, 0), open_north(n * n, 0);

    std::mt19937_64 rng(seed);
    std::vector<std::pair<std::size_t, std::size_t>> stack{{0, 0}};
    visited[idx(0, 0)] = 1;
    while (!stack.empty()) {
        auto [i, j] = stack.back();
        std::pair<std::size_t, std::size_t> candidates[4];
        int count = 0;
        if (i + 1 < n && !visited[idx(i + 1, j)]) candidates[count++] = {i + 1, j};
        if (i > 0 && !visited[idx(i - 1, j)]) candidates[count++] = {i - 1, j};
        if (j + 1 < n && !visited[idx(i, j + 1)]) candidates[count++] = {i, j + 1};
        if (j > 0 && !visited[idx(i, j - 1)]) candidates[count++] = {i, j - 1};
        if (count == 0) {
            stack.pop_back();
            continue;
        }
        auto [ni, nj] = candidates[std::uniform_int_distribution<int>(0, count - 1)(rng)];
        if (ni == i + 1) open_east[idx(i, j)] = 1;
        else if (ni + 1 == i) open_east[idx(ni, nj)] = 1;
        else if (nj == j + 1) open_north[idx(i, j)] = 1;
        else open_north[idx(ni, nj)] = 1;
        visited[idx(ni, nj)] = 1;
        stack.emplace_back(ni, nj);
    }

    for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t i = 0; i < n; ++i) {
            const double x = static_cast<double>(i), y = static_cast<double>(j);
            if (i + 1 < n && !open_east[idx(i, j)]) {
                spec.walls.push_back({x + 1.0 - kHalfWall, y, x + 1.0 + kHalfWall, y + 1.0});
            }
            if (j + 1 < n && !open_north[idx(i, j)]) {
                spec.walls.push_back({x, y + 1.0 - kHalfWall, x + 1.0, y + 1.0 + kHalfWall});
            }
        }
    }
    return spec;
}

MazeSpec open_room(int size, State target) {
    if (size < 1) throw std::invalid_argument("room size must be >= 1");
    MazeSpec spec;
    spec.size = size;
    spec.target_center = target;
    add_boundary(spec);
    return spec;
}

bool segment_hits_rect(const State& a, const State& b, const Rect& r) {
    double t0 = 0.0, t1 = 1.0;
    auto clip_axis = [&](double p, double d, double lo, double hi) {
        if (d == 0.0) return p >= lo && p <= hi;
        double ta = (lo - p) / d, tb = (hi - p) / d;
        if (ta > tb) std::swap(ta, tb);
        if (ta > t0) t0 = ta;
        if (tb < t1) t1 = tb;
        return t0 <= t1;
    };
    return clip_axis(a.x, b.x - a.x, r.xmin, r.xmax) && clip_axis(a.y, b.y - a.y, r.ymin, r.ymax);
}

bool segment_hits_wall(const State& s, const State& s_next, const MazeSpec& spec) {
    for (const auto& w : spec.walls) {
        if (segment_hits_rect(s, s_next, w)) return true;
    }
    return false;
}

StepResult step(const State& s, Action a, const MazeSpec& spec) {
    a = clip_action(a);
    const State next{s.x + a.dx, s.y + a.dy};
    if (segment_hits_wall(s, next, spec)) return {s, -1.0, false};
    if (distance(next, spec.target_center) < spec.target_radius) return {next, 1.0, true};
    return {next, 0.0, false};
}

void write_maze(std::ostream& out, const MazeSpec& spec) {
    out << "maze v1 N=" << spec.size << " seed=" << spec.seed << "\n";
    for (const auto& w : spec.walls) {
        out << "wall " << format_real(w.xmin) << ' ' << format_real(w.ymin) << ' ' << format_real(w.xmax) << ' '
            << format_real(w.ymax) << "\n";
    }
    out << "target " << format_real(spec.target_center.x) << ' ' << format_real(spec.target_center.y) << ' '
        << format_real(spec.target_radius) << "\n";
}

MazeSpec read_maze(std::istream& in, const std::string& source) {
    LineReader reader(in, source);
    auto header = reader.expect_tokens("maze header");
    if (header.size() < 2 || header[0] != "maze" || header[1] != "v1") reader.fail("expected 'maze v1' header");
    MazeSpec spec;
    spec.walls.clear();
    try {
        auto fields = header_fields(header);
        spec.size = static_cast<int>(parse_int(require_field(fields, "N", reader)));
        spec.seed = parse_uint(require_field(fields, "seed", reader));
    } catch (const std::invalid_argument& e) {
        reader.fail(e.what());
    }
    bool have_target = false;
    std::vector<std::string> toks;
    while (reader.next_tokens(toks)) {
        try {
            if (toks[0] == "wall" && toks.size() == 5) {
                spec.walls.push_back({parse_real(toks[1]), parse_real(toks[2]), parse_real(toks[3]), parse_real(toks[4])});
            } else if (toks[0] == "target" && toks.size() == 4) {
                spec.target_center = {parse_real(toks[1]), parse_real(toks[2])};
                spec.target_radius = parse_real(toks[3]);
                have_target = true;
                break;
            } else {
                reader.fail("malformed maze line '" + toks[0] + "'");
            }
        } catch (const std::invalid_argument& e) {
            reader.fail(e.what());
        }
    }
    if (!have_target) reader.fail("maze file has no target line");
    return spec;
}

}  // namespace pbcs
