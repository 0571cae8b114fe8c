#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "pbcs/maze.hpp"

namespace pbcs {

inline constexpr double kBinSize = 0.05;

struct BinId {
    std::int64_t ix = 0;
    std::int64_t iy = 0;

    friend bool operator==(const BinId&, const BinId&) = default;
};

/// Half-open square bins [k*0.05, (k+1)*0.05).
BinId bin_of(const State& s);

using EntryId = std::size_t;

struct ArchiveEntry {
    State state;
    std::uint64_t counter = 0;
    std::optional<EntryId> parent;
    std::optional<Action> parent_action;
    EntryId id = 0;
};

/// Visited-state store for phase-1 exploration. States are grouped into
/// square bins; selection picks a least-chosen bin, then a least-chosen
/// state in it, breaking ties uniformly at random.
class Archive {
public:
    Archive(const State& root, std::uint64_t seed);

    /// Selects an entry and increments its state and bin counters.
    EntryId select_state();

    /// Adds `s` with counter 0 unless an identical state is already
    /// stored. Returns the new id, or nullopt for a duplicate.
    std::optional<EntryId> insert(const State& s, EntryId parent, const Action& action);

    const std::vector<ArchiveEntry>& entries() const { return entries_; }
    const ArchiveEntry& entry(EntryId id) const { return entries_.at(id); }
    std::size_t size() const { return entries_.size(); }
    std::size_t bin_count() const { return bins_.size(); }

    std::uint64_t bin_counter(const BinId& b) const;
    std::vector<EntryId> bin_members(const BinId& b) const;

    /// Counter of the bin chosen by the most recent select_state(),
    /// read before it was incremented.
    std::uint64_t last_selected_bin_counter() const { return last_bin_counter_; }

    /// Minimum bin counter by exhaustive scan; used to check selection.
    std::uint64_t min_bin_counter_scan() const;

    std::mt19937_64& rng() { return rng_; }

private:
    struct Bin {
        BinId id;
        std::uint64_t counter = 0;
        std::vector<EntryId> members;
        std::size_t level_pos = 0;  // index inside levels_[counter]
    };

    std::size_t bin_slot(const BinId& b);
    void move_bin_up(std::size_t slot);

    std::vector<ArchiveEntry> entries_;
    std::vector<Bin> bins_;
    std::unordered_map<std::uint64_t, std::size_t> bin_lookup_;
    std::vector<std::vector<std::size_t>> levels_;  // bins grouped by counter value
    std::uint64_t min_level_ = 0;
    std::uint64_t last_bin_counter_ = 0;
    std::mt19937_64 rng_;
};

struct ExploreOutcome {
    EntryId source = 0;
    Action action;
    StepResult result;
    std::optional<EntryId> inserted;
};

/// One select / reset / random-step / insert round.
ExploreOutcome explore_iteration(Archive& archive, MazeEnv& env);

/// States tau_0..tau_N from the start to the rewarded state, with the
/// action taken from each state (actions.size() == states.size() - 1).
struct Trajectory {
    int maze_size = 0;
    std::uint64_t seed = 0;
    std::vector<State> states;
    std::vector<Action> actions;

    std::size_t size() const { return states.size(); }
    const State& operator[](std::size_t i) const { return states[i]; }
};

class ExplorationFailure : public std::runtime_error {
public:
    ExplorationFailure(std::size_t archive_size, std::uint64_t steps_used)
        : std::runtime_error("phase-1 exploration exhausted its budget after " + std::to_string(steps_used) +
                             " steps with " + std::to_string(archive_size) + " archived states"),
          archive_size_(archive_size),
          steps_used_(steps_used) {}
    std::size_t archive_size() const { return archive_size_; }
    std::uint64_t steps_used() const { return steps_used_; }

private:
    std::size_t archive_size_;
    std::uint64_t steps_used_;
};

/// Optional per-iteration hook, used by tests to check invariants.
using ExploreObserver = void (*)(const Archive&, const ExploreOutcome&, void* ctx);

/// Explores until the environment reward is reached, then rebuilds the
/// path from the archive's parent links. Steps go through `env`, so they
/// count toward its counter and limit.
Trajectory run_phase1(MazeEnv& env, const State& s0, std::uint64_t max_env_steps, std::uint64_t seed,
                      ExploreObserver observer = nullptr, void* observer_ctx = nullptr);

Trajectory run_phase1(const MazeSpec& spec, const State& s0, std::uint64_t max_env_steps, std::uint64_t seed);

void write_trajectory(std::ostream& out, const Trajectory& traj);
Trajectory read_trajectory(std::istream& in, const std::string& source = "<trajectory>");

}  // namespace pbcs
