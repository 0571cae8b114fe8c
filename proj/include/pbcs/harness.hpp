#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pbcs/skillchain.hpp"

namespace pbcs {

enum class Mode { VanillaDdpg, VanillaTd3, PbcsNoChain, Pbcs };

std::string to_string(Mode m);
/// Accepts vanilla-ddpg, vanilla-td3, pbcs-nochain, pbcs.
Mode mode_from_string(const std::string& s);

struct ExperimentConfig {
    int size = 2;
    std::uint64_t seed = 0;
    Mode mode = Mode::Pbcs;
    /// Unset: 0.99 for the vanilla baselines, 0.9 for backplay training.
    std::optional<double> gamma;
    double eps = 0.1;
    int alpha = 10;
    int beta = 50;
    std::uint64_t phase1_budget = 5'000'000;
    std::uint64_t phase2_budget = 25'000'000;
    std::uint64_t vanilla_budget = 1'000'000;
    std::uint64_t vanilla_eval_interval = 10'000;
    /// Vanilla episode cap; 0 means 100 * size.
    int vanilla_episode_steps = 0;
    int eval_episodes = 50;
    double vanilla_success_rate = 0.9;
    ActorUpdate actor_update = ActorUpdate::PolicyGradient;
    int argmax_samples = 64;
    std::filesystem::path out_dir = "pbcs_out";
    bool verbose = false;
};

/// Applies `key=value` lines (with `#` comments) onto `config`.
void apply_config_text(std::istream& in, ExperimentConfig& config, const std::string& source = "<config>");
void apply_config_value(ExperimentConfig& config, const std::string& key, const std::string& value);

struct SkillRecord {
    std::size_t k = 0;
    std::size_t t = 0;
    std::uint64_t train_steps = 0;
    std::uint64_t eval_steps = 0;
    double performance = 0.0;

    friend bool operator==(const SkillRecord&, const SkillRecord&) = default;
};

struct RunReport {
    Mode mode = Mode::Pbcs;
    int size = 0;
    std::uint64_t seed = 0;
    bool success = false;
    std::string outcome;  // short machine-readable reason
    StepTally steps;
    std::uint64_t steps_total = 0;
    std::size_t trajectory_length = 0;
    std::vector<SkillRecord> skills;
    std::optional<std::size_t> k_saved;  // pbcs-nochain only
    int eval_successes = 0;
    int eval_episodes = 0;
    double best_eval_rate = 0.0;
    double wall_clock_seconds = 0.0;

    /// Equality ignoring wall-clock time.
    bool same_result(const RunReport& other) const;
};

void write_report(std::ostream& out, const RunReport& report);
RunReport read_report(std::istream& in, const std::string& source = "<report>");

struct RunOutcome {
    RunReport report;
    MazeSpec maze;
    std::optional<Trajectory> trajectory;
    std::optional<SkillChain> chain;
    std::vector<std::vector<State>> traces;  // final evaluation rollouts
};

using Logger = std::function<void(const std::string&)>;

RunOutcome run_experiment(const ExperimentConfig& config, const Logger& log = {});

bool is_vanilla(Mode m);
double effective_gamma(const ExperimentConfig& config);

/// Pieces of a run, for the CLI subcommands that split the pipeline.
MazeSpec make_maze(const ExperimentConfig& config);
BackplayConfig make_backplay_config(const ExperimentConfig& config);

struct ChainEvaluation {
    int successes = 0;
    int episodes = 0;
    std::vector<std::vector<State>> traces;
};

/// Runs `episodes` chain executions from starts sampled in the first
/// activation ball, with a budget of `step_budget` steps each.
ChainEvaluation evaluate_chain(const SkillChain& chain, MazeEnv& env, int episodes, std::uint64_t step_budget,
                               std::uint64_t seed);

std::string render_svg(const MazeSpec& spec, const Trajectory* trajectory = nullptr, const SkillChain* chain = nullptr,
                       const std::vector<std::vector<State>>* traces = nullptr);

/// Writes maze.txt, trajectory.txt, chain.txt, report.txt, render.svg
/// (whichever apply) and manifest.txt; returns the written paths.
std::vector<std::filesystem::path> save_artifacts(const RunOutcome& outcome, const std::filesystem::path& dir);

struct LoadedArtifacts {
    MazeSpec maze;
    std::optional<Trajectory> trajectory;
    std::optional<SkillChain> chain;
    std::optional<RunReport> report;
};

LoadedArtifacts load_artifacts(const std::filesystem::path& dir);

}  // namespace pbcs
