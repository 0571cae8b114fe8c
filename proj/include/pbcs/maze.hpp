#pragma once

#include <cmath>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace pbcs {

/// Position of the point mass, in world units.
struct State {
    double x = 0.0;
    double y = 0.0;

    friend bool operator==(const State&, const State&) = default;
};

/// Per-step displacement.
struct Action {
    double dx = 0.0;
    double dy = 0.0;

    friend bool operator==(const Action&, const Action&) = default;
};

inline constexpr double kActionBound = 0.1;
inline constexpr double kWallThickness = 0.1;
inline constexpr double kTargetRadius = 0.2;

inline double distance(const State& a, const State& b) { return std::hypot(a.x - b.x, a.y - b.y); }

inline Action clip_action(Action a) {
    auto clip = [](double v) {
        if (std::isnan(v)) return 0.0;
        return v < -kActionBound ? -kActionBound : (v > kActionBound ? kActionBound : v);
    };
    return {clip(a.dx), clip(a.dy)};
}

/// Closed axis-aligned rectangle.
struct Rect {
    double xmin = 0.0;
    double ymin = 0.0;
    double xmax = 0.0;
    double ymax = 0.0;

    bool contains(const State& s) const { return s.x >= xmin && s.x <= xmax && s.y >= ymin && s.y <= ymax; }
    friend bool operator==(const Rect&, const Rect&) = default;
};

/// Static geometry of one maze. Immutable once built; share freely.
struct MazeSpec {
    int size = 1;
    std::vector<Rect> walls;  // first four are the boundary
    State target_center;
    double target_radius = kTargetRadius;
    std::uint64_t seed = 0;

    friend bool operator==(const MazeSpec&, const MazeSpec&) = default;
};

struct StepResult {
    State next_state;
    double reward = 0.0;
    bool terminal = false;
};

/// The canonical start state, centre of the first cell.
inline constexpr State kStartState{0.5, 0.5};

State default_target(int size);

/// Recursive-backtracker maze over an N x N grid of unit cells. Walls are
/// 0.1-thick rectangles centred on every closed cell border, plus four
/// boundary walls. Deterministic in (size, seed).
MazeSpec generate_maze(int size, std::uint64_t seed);

/// Maze with only the boundary walls and the given target.
MazeSpec open_room(int size, State target);

/// Closed segment vs closed rectangle.
bool segment_hits_rect(const State& a, const State& b, const Rect& r);

bool segment_hits_wall(const State& s, const State& s_next, const MazeSpec& spec);

/// Pure transition function; clips the action first.
StepResult step(const State& s, Action a, const MazeSpec& spec);

/// Thrown by MazeEnv when its step limit would be exceeded.
class BudgetExhausted : public std::runtime_error {
public:
    explicit BudgetExhausted(std::uint64_t limit)
        : std::runtime_error("environment step budget of " + std::to_string(limit) + " exhausted"), limit_(limit) {}
    std::uint64_t limit() const { return limit_; }

private:
    std::uint64_t limit_;
};

/// A live environment: a spec reference plus the current state and a step
/// counter. Every call to step() counts, so one instance threaded through
/// a whole run gives the global step total.
class MazeEnv {
public:
    explicit MazeEnv(const MazeSpec& spec) : spec_(&spec), state_(kStartState) {}

    const MazeSpec& spec() const { return *spec_; }
    const State& state() const { return state_; }

    State reset_to(const State& s) {
        state_ = s;
        return state_;
    }

    StepResult step(Action a) {
        if (steps_ >= limit_) throw BudgetExhausted(limit_);
        ++steps_;
        StepResult r = pbcs::step(state_, a, *spec_);
        state_ = r.next_state;
        return r;
    }

    std::uint64_t step_count() const { return steps_; }

    /// Absolute cap on step_count(); step() throws BudgetExhausted past it.
    void set_step_limit(std::uint64_t limit) { limit_ = limit; }
    std::uint64_t step_limit() const { return limit_; }
    std::uint64_t steps_remaining() const { return limit_ > steps_ ? limit_ - steps_ : 0; }

private:
    const MazeSpec* spec_;
    State state_;
    std::uint64_t steps_ = 0;
    std::uint64_t limit_ = std::numeric_limits<std::uint64_t>::max();
};

/// Environment steps of one run, split by what they were spent on.
struct StepTally {
    std::uint64_t phase1 = 0;
    std::uint64_t train = 0;
    std::uint64_t skill_eval = 0;
    std::uint64_t final_eval = 0;

    std::uint64_t total() const { return phase1 + train + skill_eval + final_eval; }
};

/// Adds the steps taken on `env` during its lifetime to `counter`, also
/// when unwinding from BudgetExhausted.
class StepScope {
public:
    StepScope(const MazeEnv& env, std::uint64_t* counter) : env_(env), counter_(counter), start_(env.step_count()) {}
    ~StepScope() {
        if (counter_) *counter_ += env_.step_count() - start_;
    }
    StepScope(const StepScope&) = delete;
    StepScope& operator=(const StepScope&) = delete;

private:
    const MazeEnv& env_;
    std::uint64_t* counter_;
    std::uint64_t start_;
};

void write_maze(std::ostream& out, const MazeSpec& spec);
MazeSpec read_maze(std::istream& in, const std::string& source = "<maze>");

}  // namespace pbcs
