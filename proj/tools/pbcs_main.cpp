// pbcs command-line front end: explore, robustify, run, evaluate, render.

#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "pbcs/harness.hpp"
#include "pbcs/seeding.hpp"
#include "pbcs/textio.hpp"

namespace {

using namespace pbcs;

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Flags {
    std::optional<int> size;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> mode;
    std::optional<double> gamma;
    std::optional<double> eps;
    std::optional<std::uint64_t> budget;
    std::optional<std::string> out;
    std::optional<std::string> config;
    bool verbose = false;
};

void add_common(CLI::App* cmd, Flags& f) {
    cmd->add_option("--size", f.size, "maze size N");
    cmd->add_option("--seed", f.seed, "root seed");
    cmd->add_option("--mode", f.mode, "vanilla-ddpg | vanilla-td3 | pbcs-nochain | pbcs");
    cmd->add_option("--gamma", f.gamma, "discount factor");
    cmd->add_option("--eps", f.eps, "activation/target ball radius");
    cmd->add_option("--budget", f.budget, "training step budget (vanilla budget or phase-2 budget)");
    cmd->add_option("--out", f.out, "artifact directory");
    cmd->add_option("--config", f.config, "key=value configuration file");
    cmd->add_flag("-v,--verbose", f.verbose, "progress log on stderr");
}

ExperimentConfig resolve(const Flags& f) {
    ExperimentConfig c;
    try {
        if (f.config) {
            std::ifstream in(*f.config);
            if (!in) throw UsageError("cannot read config file '" + *f.config + "'");
            apply_config_text(in, c, *f.config);
        }
        if (f.size) apply_config_value(c, "size", std::to_string(*f.size));
        if (f.seed) c.seed = *f.seed;
        if (f.mode) c.mode = mode_from_string(*f.mode);
        if (f.gamma) apply_config_value(c, "gamma", format_real(*f.gamma));
        if (f.eps) apply_config_value(c, "eps", format_real(*f.eps));
        if (f.budget) {
            apply_config_value(c, is_vanilla(c.mode) ? "vanilla_budget" : "phase2_budget", std::to_string(*f.budget));
        }
        if (f.out) c.out_dir = *f.out;
        if (f.verbose) c.verbose = true;
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    } catch (const ParseError& e) {
        throw UsageError(e.what());
    }
    return c;
}

Logger make_logger(const ExperimentConfig& c) {
    if (!c.verbose) return {};
    return [](const std::string& msg) { std::cerr << msg << "\n"; };
}

void print_report(const RunReport& r) { write_report(std::cout, r); }

int cmd_run(const ExperimentConfig& c) {
    RunOutcome outcome = run_experiment(c, make_logger(c));
    save_artifacts(outcome, c.out_dir);
    print_report(outcome.report);
    return outcome.report.success ? kExitOk : kExitFailure;
}

int cmd_explore(const ExperimentConfig& c) {
    RunOutcome outcome;
    outcome.maze = make_maze(c);
    outcome.report.mode = c.mode;
    outcome.report.size = c.size;
    outcome.report.seed = c.seed;
    MazeEnv env(outcome.maze);
    try {
        outcome.trajectory = run_phase1(env, kStartState, c.phase1_budget, derive_seed(c.seed, "phase1"));
        outcome.report.outcome = "explored";
        outcome.report.success = true;
        outcome.report.trajectory_length = outcome.trajectory->size();
    } catch (const ExplorationFailure& e) {
        std::cerr << e.what() << "\n";
        outcome.report.outcome = "exploration-failure";
    }
    outcome.report.steps.phase1 = outcome.report.steps_total = env.step_count();
    save_artifacts(outcome, c.out_dir);
    print_report(outcome.report);
    return outcome.report.success ? kExitOk : kExitFailure;
}

int cmd_robustify(const ExperimentConfig& c) {
    LoadedArtifacts in = load_artifacts(c.out_dir);
    if (!in.trajectory) throw UsageError("no trajectory.txt in '" + c.out_dir.string() + "'; run explore first");
    RunOutcome outcome;
    outcome.maze = in.maze;
    outcome.trajectory = in.trajectory;
    RunReport& r = outcome.report;
    r.mode = c.mode;
    r.size = in.maze.size;
    r.seed = c.seed;
    r.trajectory_length = in.trajectory->size();

    MazeEnv env(in.maze);
    env.set_step_limit(c.phase2_budget);
    BackplayConfig bp = make_backplay_config(c);
    const std::uint64_t chain_seed = derive_seed(c.seed, "chain");
    try {
        outcome.chain = build_chain(*in.trajectory, env, bp, chain_seed, &r.steps);
        r.success = true;
        r.outcome = "chain-built";
    } catch (const std::runtime_error& e) {
        std::cerr << e.what() << "\n";
        r.outcome = "chain-construction-failure";
    }
    if (outcome.chain) {
        for (const auto& s : outcome.chain->skills) {
            r.skills.push_back({s.k, s.t, s.train_steps, s.eval_steps, s.saved_performance});
        }
    }
    r.steps_total = env.step_count();
    save_artifacts(outcome, c.out_dir);
    print_report(r);
    return r.success ? kExitOk : kExitFailure;
}

int cmd_evaluate(const ExperimentConfig& c) {
    LoadedArtifacts in = load_artifacts(c.out_dir);
    if (!in.chain || in.chain->empty()) throw UsageError("no chain.txt in '" + c.out_dir.string() + "'");
    MazeEnv env(in.maze);
    const std::uint64_t budget = in.trajectory ? 10 * in.trajectory->size() : 100 * static_cast<std::uint64_t>(in.maze.size);
    ChainEvaluation eval = evaluate_chain(*in.chain, env, c.eval_episodes, budget, derive_seed(c.seed, "final-eval"));
    std::cout << "eval_successes=" << eval.successes << "\n"
              << "eval_episodes=" << eval.episodes << "\n"
              << "steps_total=" << env.step_count() << "\n";
    std::ofstream svg(c.out_dir / "render.svg");
    svg << render_svg(in.maze, in.trajectory ? &*in.trajectory : nullptr, &*in.chain, &eval.traces);
    return eval.successes == eval.episodes ? kExitOk : kExitFailure;
}

int cmd_render(const ExperimentConfig& c) {
    std::filesystem::path dir = c.out_dir;
    MazeSpec maze;
    std::optional<Trajectory> traj;
    std::optional<SkillChain> chain;
    if (std::filesystem::exists(dir / "maze.txt")) {
        LoadedArtifacts in = load_artifacts(dir);
        maze = in.maze;
        traj = std::move(in.trajectory);
        chain = std::move(in.chain);
    } else {
        maze = make_maze(c);
        std::filesystem::create_directories(dir);
    }
    const auto path = dir / "render.svg";
    std::ofstream svg(path);
    if (!svg) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
    svg << render_svg(maze, traj ? &*traj : nullptr, chain ? &*chain : nullptr);
    std::cout << path.string() << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Maze exploration and robustification with skill chaining"};
    app.require_subcommand(1);
    Flags flags;
    struct Sub {
        const char* name;
        const char* help;
        int (*fn)(const ExperimentConfig&);
    };
    const Sub subs[] = {
        {"explore", "phase 1: find a trajectory to the target", cmd_explore},
        {"robustify", "phase 2: build a skill chain from a saved trajectory", cmd_robustify},
        {"run", "one full experiment cell", cmd_run},
        {"evaluate", "execute a saved chain", cmd_evaluate},
        {"render", "draw saved artifacts as SVG", cmd_render},
    };
    std::vector<CLI::App*> cmds;
    for (const auto& s : subs) {
        CLI::App* cmd = app.add_subcommand(s.name, s.help);
        add_common(cmd, flags);
        cmds.push_back(cmd);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        const ExperimentConfig config = resolve(flags);
        for (std::size_t i = 0; i < cmds.size(); ++i) {
            if (cmds[i]->parsed()) return subs[i].fn(config);
        }
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitFailure;
    }
    return kExitUsage;
}
