#pragma once

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "pbcs/backplay.hpp"

namespace pbcs {

/// A trained policy that drives the state from B_eps(activation_center)
/// to B_eps(target_center); k and t index the source trajectory.
struct Skill {
    Policy policy;
    State activation_center;
    State target_center;
    double eps = 0.1;
    std::size_t k = 0;
    std::size_t t = 0;
    double saved_performance = 0.0;
    std::uint64_t train_steps = 0;
    std::uint64_t eval_steps = 0;
};

/// Skills in execution order: skills[i].t == skills[i + 1].k.
struct SkillChain {
    std::vector<Skill> skills;
    double eps = 0.1;

    std::size_t size() const { return skills.size(); }
    bool empty() const { return skills.empty(); }
};

class ChainConstructionFailure : public std::runtime_error {
public:
    explicit ChainConstructionFailure(std::size_t blocking_index)
        : std::runtime_error("no skill could be trained towards trajectory index " + std::to_string(blocking_index)),
          blocking_index_(blocking_index) {}
    std::size_t blocking_index() const { return blocking_index_; }

private:
    std::size_t blocking_index_;
};

/// Calls backplay on shrinking prefixes tau_0..tau_T, starting at T = N,
/// until the start of the trajectory is covered, then reverses the list.
/// Skill n is trained with seed derive_seed(seed, "skill", n).
SkillChain build_chain(const Trajectory& traj, MazeEnv& env, const BackplayConfig& config, std::uint64_t seed,
                       StepTally* tally = nullptr);

struct ChainExecution {
    bool success = false;
    std::vector<State> trace;           // includes the start state
    std::vector<std::size_t> active;    // active skill index per state in trace
    std::uint64_t steps = 0;
};

/// Switching controller: runs skill i until the state enters a later
/// activation ball (the highest-indexed one containing it), and succeeds
/// on entering the last skill's target ball or earning the environment
/// reward.
ChainExecution execute_chain(const SkillChain& chain, MazeEnv& env, const State& start, std::uint64_t step_budget);

void write_skill(std::ostream& out, const Skill& skill);
Skill read_skill(LineReader& reader);
void write_chain(std::ostream& out, const SkillChain& chain);
SkillChain read_chain(std::istream& in, const std::string& source = "<chain>");

}  // namespace pbcs
