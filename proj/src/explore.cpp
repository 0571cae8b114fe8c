#include "pbcs/explore.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>

#include "pbcs/textio.hpp"

namespace pbcs {

namespace {

std::uint64_t bin_key(const BinId& b) {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(b.ix)) << 32) |
           static_cast<std::uint32_t>(b.iy);
}

template <class Rng>
std::size_t uniform_index(Rng& rng, std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

}  // namespace

BinId bin_of(const State& s) {
    return {static_cast<std::int64_t>(std::floor(s.x / kBinSize)), static_cast<std::int64_t>(std::floor(s.y / kBinSize))};
}

Archive::Archive(const State& root, std::uint64_t seed) : rng_(seed) {
    entries_.push_back({root, 0, std::nullopt, std::nullopt, 0});
    const std::size_t slot = bin_slot(bin_of(root));
    bins_[slot].members.push_back(0);
}

std::size_t Archive::bin_slot(const BinId& b) {
    auto [it, fresh] = bin_lookup_.try_emplace(bin_key(b), bins_.size());
    if (fresh) {
        if (levels_.empty()) levels_.emplace_back();
        bins_.push_back({b, 0, {}, levels_[0].size()});
        levels_[0].push_back(it->second);
        min_level_ = 0;
    }
    return it->second;
}

void Archive::move_bin_up(std::size_t slot) {
    Bin& bin = bins_[slot];
    auto& from = levels_[bin.counter];
    const std::size_t moved = from.back();
    from[bin.level_pos] = moved;
    bins_[moved].level_pos = bin.level_pos;
    from.pop_back();

    ++bin.counter;
    if (levels_.size() <= bin.counter) levels_.emplace_back();
    bin.level_pos = levels_[bin.counter].size();
    levels_[bin.counter].push_back(slot);
}

EntryId Archive::select_state() {
    if (entries_.empty()) throw std::logic_error("select_state on an empty archive");
    while (levels_[min_level_].empty()) ++min_level_;

    const auto& candidates = levels_[min_level_];
    const std::size_t slot = candidates[uniform_index(rng_, candidates.size())];
    Bin& bin = bins_[slot];
    assert(bin.counter == min_level_);

    std::uint64_t best = std::numeric_limits<std::uint64_t>::max();
    std::vector<EntryId> tied;
    for (EntryId id : bin.members) {
        const auto c = entries_[id].counter;
        if (c < best) {
            best = c;
            tied.assign(1, id);
        } else if (c == best) {
            tied.push_back(id);
        }
    }
    const EntryId chosen = tied[uniform_index(rng_, tied.size())];

    last_bin_counter_ = bin.counter;
    ++entries_[chosen].counter;
    move_bin_up(slot);
    return chosen;
}

std::optional<EntryId> Archive::insert(const State& s, EntryId parent, const Action& action) {
    const std::size_t slot = bin_slot(bin_of(s));
    for (EntryId id : bins_[slot].members) {
        if (entries_[id].state == s) return std::nullopt;
    }
    const EntryId id = entries_.size();
    entries_.push_back({s, 0, parent, action, id});
    bins_[slot].members.push_back(id);
    return id;
}

std::uint64_t Archive::bin_counter(const BinId& b) const {
    auto it = bin_lookup_.find(bin_key(b));
    if (it == bin_lookup_.end()) throw std::out_of_range("no such bin");
    return bins_[it->second].counter;
}

std::vector<EntryId> Archive::bin_members(const BinId& b) const {
    auto it = bin_lookup_.find(bin_key(b));
    if (it == bin_lookup_.end()) return {};
    return bins_[it->second].members;
}

std::uint64_t Archive::min_bin_counter_scan() const {
    std::uint64_t m = std::numeric_limits<std::uint64_t>::max();
    for (const auto& b : bins_) m = std::min(m, b.counter);
    return m;
}

ExploreOutcome explore_iteration(Archive& archive, MazeEnv& env) {
    ExploreOutcome out;
    out.source = archive.select_state();
    env.reset_to(archive.entry(out.source).state);
    std::uniform_real_distribution<double> u(-kActionBound, kActionBound);
    out.action.dx = u(archive.rng());
    out.action.dy = u(archive.rng());
    out.result = env.step(out.action);
    if (!out.result.terminal) out.inserted = archive.insert(out.result.next_state, out.source, out.action);
    return out;
}

Trajectory run_phase1(MazeEnv& env, const State& s0, std::uint64_t max_env_steps, std::uint64_t seed,
                      ExploreObserver observer, void* observer_ctx) {
    if (max_env_steps == 0) throw std::invalid_argument("phase-1 budget must be positive");
    Archive archive(s0, seed);
    for (std::uint64_t used = 0; used < max_env_steps; ++used) {
        ExploreOutcome o = explore_iteration(archive, env);
        if (observer) observer(archive, o, observer_ctx);
        if (!o.result.terminal) continue;

        Trajectory traj;
        traj.maze_size = env.spec().size;
        traj.seed = seed;
        for (std::optional<EntryId> id = o.source; id; id = archive.entry(*id).parent) {
            const auto& e = archive.entry(*id);
            traj.states.push_back(e.state);
            if (e.parent_action) traj.actions.push_back(*e.parent_action);
        }
        std::reverse(traj.states.begin(), traj.states.end());
        std::reverse(traj.actions.begin(), traj.actions.end());
        traj.states.push_back(o.result.next_state);
        traj.actions.push_back(o.action);
        return traj;
    }
    throw ExplorationFailure(archive.size(), max_env_steps);
}

Trajectory run_phase1(const MazeSpec& spec, const State& s0, std::uint64_t max_env_steps, std::uint64_t seed) {
    MazeEnv env(spec);
    return run_phase1(env, s0, max_env_steps, seed);
}

void write_trajectory(std::ostream& out, const Trajectory& traj) {
    out << "pbcs-trajectory v1 N=" << traj.maze_size << " seed=" << traj.seed << " len=" << traj.states.size()
        << "\n";
    for (std::size_t i = 0; i < traj.states.size(); ++i) {
        out << i << ' ' << format_real(traj.states[i].x) << ' ' << format_real(traj.states[i].y) << ' ';
        if (i < traj.actions.size()) {
            out << format_real(traj.actions[i].dx) << ' ' << format_real(traj.actions[i].dy) << "\n";
        } else {
            out << "_ _\n";
        }
    }
}

Trajectory read_trajectory(std::istream& in, const std::string& source) {
    LineReader reader(in, source);
    auto header = reader.expect_tokens("trajectory header");
    if (header.size() < 2 || header[0] != "pbcs-trajectory" || header[1] != "v1") {
        reader.fail("expected 'pbcs-trajectory v1' header");
    }
    Trajectory traj;
    std::size_t len = 0;
    try {
        auto fields = header_fields(header);
        traj.maze_size = static_cast<int>(parse_int(require_field(fields, "N", reader)));
        traj.seed = parse_uint(require_field(fields, "seed", reader));
        len = parse_uint(require_field(fields, "len", reader));
    } catch (const std::invalid_argument& e) {
        reader.fail(e.what());
    }
    if (len == 0) reader.fail("trajectory length must be positive");
    for (std::size_t i = 0; i < len; ++i) {
        auto toks = reader.expect_tokens("trajectory state " + std::to_string(i));
        if (toks.size() != 5) reader.fail("expected 5 fields on trajectory line");
        try {
            if (parse_uint(toks[0]) != i) reader.fail("trajectory index out of order");
            traj.states.push_back({parse_real(toks[1]), parse_real(toks[2])});
            const bool last = i + 1 == len;
            if (last) {
                if (toks[3] != "_" || toks[4] != "_") reader.fail("last trajectory line must have '_ _' action");
            } else {
                traj.actions.push_back({parse_real(toks[3]), parse_real(toks[4])});
            }
        } catch (const std::invalid_argument& e) {
            reader.fail(e.what());
        }
    }
    return traj;
}

}  // namespace pbcs
