#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <vector>

#include "pbcs/agents.hpp"
#include "pbcs/explore.hpp"
#include "pbcs/maze.hpp"

namespace pbcs {

inline constexpr double kPotentialFloor = 1e-6;
inline constexpr double kReachBonus = 10.0;

/// Centre and radius of the ball a skill is trained to reach.
struct ShapingTarget {
    State center;
    double radius = 0.1;
};

/// 1 / distance to the target centre, with the distance floored at 1e-6.
double potential(const State& s, const ShapingTarget& target);

struct ShapedReward {
    double reward = 0.0;
    bool reached = false;
};

/// 10 on entering the closed target ball, otherwise the potential
/// difference phi(s_next) - phi(s).
ShapedReward shaped_reward(const State& s, const State& s_next, const ShapingTarget& target);

/// Uniform sample from the closed disc of radius eps. Samples inside
/// walls are kept.
State sample_ball(const State& center, double eps, std::mt19937_64& rng);

struct BackplayStepRecord;

struct BackplayConfig {
    int alpha = 10;  // consecutive non-improving epochs that end a training phase
    int beta = 50;   // episodes per performance measurement
    double eps = 0.1;
    /// Episode cap; 0 means derive it from the segment as 2 (T - K) + 50.
    int max_steps = 0;
    bool eval_noise = false;
    AgentConfig agent;
    /// Called after each curriculum step with the target index T.
    std::function<void(std::size_t, const BackplayStepRecord&)> on_record;
};

int episode_cap(const BackplayConfig& config, std::size_t k, std::size_t t);

struct EpochResult {
    double performance = 0.0;
    int successes = 0;
    std::uint64_t steps = 0;
};

/// Runs beta shaped-reward training episodes from starts drawn in
/// B_eps(from) towards B_eps(to), updating the agent after every step.
EpochResult train_epoch(Agent& agent, MazeEnv& env, const State& from, const State& to, const BackplayConfig& config,
                        int max_steps, std::mt19937_64& rng);

/// Same episodes with the deterministic policy and no learning.
EpochResult evaluate_skill(const Policy& policy, MazeEnv& env, const State& from, const State& to,
                           const BackplayConfig& config, int max_steps, std::mt19937_64& rng);

/// One pass of the curriculum loop at start index K.
struct BackplayStepRecord {
    std::size_t k = 0;
    double initial_performance = 0.0;
    bool trained = false;
    int epochs = 0;
    double final_performance = 0.0;
    bool saved = false;
};

struct SkillCandidate {
    Policy policy;
    std::size_t k_saved = 0;
    std::size_t t = 0;
    double saved_performance = 0.0;
    std::uint64_t train_steps = 0;
    std::uint64_t eval_steps = 0;
    std::vector<BackplayStepRecord> history;
};

class BackplayFailure : public std::runtime_error {
public:
    BackplayFailure(std::size_t t, std::uint64_t train_steps, std::uint64_t eval_steps)
        : std::runtime_error("backplay towards trajectory index " + std::to_string(t) + " never saved a skill"),
          t_(t),
          train_steps_(train_steps),
          eval_steps_(eval_steps) {}
    std::size_t t() const { return t_; }
    std::uint64_t train_steps() const { return train_steps_; }
    std::uint64_t eval_steps() const { return eval_steps_; }

private:
    std::size_t t_;
    std::uint64_t train_steps_;
    std::uint64_t eval_steps_;
};

/// Deterministic Backplay on tau_0..tau_t: moves the start index K down
/// from t - 1, training a fresh agent with the shaped reward, and returns
/// the policy saved at the smallest K whose measured performance was 100%.
/// Steps are also added to `tally` (train / skill_eval) when non-null.
SkillCandidate backplay(const Trajectory& traj, std::size_t t, MazeEnv& env, const BackplayConfig& config,
                        std::uint64_t seed, StepTally* tally = nullptr);

}  // namespace pbcs
