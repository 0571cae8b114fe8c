#include "pbcs/harness.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

#include "pbcs/seeding.hpp"
#include "pbcs/textio.hpp"

namespace pbcs {

namespace fs = std::filesystem;

std::string to_string(Mode m) {
    switch (m) {
        case Mode::VanillaDdpg: return "vanilla-ddpg";
        case Mode::VanillaTd3: return "vanilla-td3";
        case Mode::PbcsNoChain: return "pbcs-nochain";
        case Mode::Pbcs: return "pbcs";
    }
    return "?";
}

Mode mode_from_string(const std::string& s) {
    for (Mode m : {Mode::VanillaDdpg, Mode::VanillaTd3, Mode::PbcsNoChain, Mode::Pbcs}) {
        if (to_string(m) == s) return m;
    }
    throw std::invalid_argument("unknown mode '" + s + "' (expected vanilla-ddpg, vanilla-td3, pbcs-nochain or pbcs)");
}

void apply_config_value(ExperimentConfig& c, const std::string& key, const std::string& value) {
    auto positive = [&](std::uint64_t v) {
        if (v == 0) throw std::invalid_argument(key + " must be positive");
        return v;
    };
    if (key == "size") {
        c.size = static_cast<int>(parse_int(value));
        if (c.size < 1) throw std::invalid_argument("size must be >= 1");
    } else if (key == "seed") {
        c.seed = parse_uint(value);
    } else if (key == "mode") {
        c.mode = mode_from_string(value);
    } else if (key == "gamma") {
        c.gamma = parse_real(value);
        if (!(*c.gamma > 0.0 && *c.gamma < 1.0)) throw std::invalid_argument("gamma must lie in (0, 1)");
    } else if (key == "eps") {
        c.eps = parse_real(value);
        if (!(c.eps > 0.0)) throw std::invalid_argument("eps must be positive");
    } else if (key == "alpha") {
        c.alpha = static_cast<int>(positive(parse_uint(value)));
    } else if (key == "beta") {
        c.beta = static_cast<int>(positive(parse_uint(value)));
    } else if (key == "phase1_budget") {
        c.phase1_budget = positive(parse_uint(value));
    } else if (key == "phase2_budget") {
        c.phase2_budget = positive(parse_uint(value));
    } else if (key == "vanilla_budget") {
        c.vanilla_budget = positive(parse_uint(value));
    } else if (key == "vanilla_eval_interval") {
        c.vanilla_eval_interval = positive(parse_uint(value));
    } else if (key == "vanilla_episode_steps") {
        c.vanilla_episode_steps = static_cast<int>(parse_uint(value));
    } else if (key == "eval_episodes") {
        c.eval_episodes = static_cast<int>(positive(parse_uint(value)));
    } else if (key == "actor_update") {
        if (value == "policy-gradient") c.actor_update = ActorUpdate::PolicyGradient;
        else if (value == "argmax") c.actor_update = ActorUpdate::ArgmaxSampling;
        else throw std::invalid_argument("actor_update must be policy-gradient or argmax");
    } else if (key == "argmax_samples") {
        c.argmax_samples = static_cast<int>(positive(parse_uint(value)));
    } else if (key == "out") {
        c.out_dir = value;
    } else if (key == "verbose") {
        c.verbose = value == "1" || value == "true";
    } else {
        throw std::invalid_argument("unknown configuration key '" + key + "'");
    }
}

void apply_config_text(std::istream& in, ExperimentConfig& config, const std::string& source) {
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        auto toks = split_ws(line);
        if (toks.empty()) continue;
        std::string joined;
        for (const auto& t : toks) joined += t;
        auto eq = joined.find('=');
        if (eq == std::string::npos || eq == 0) throw ParseError(source, n, "expected key=value");
        try {
            apply_config_value(config, joined.substr(0, eq), joined.substr(eq + 1));
        } catch (const std::invalid_argument& e) {
            throw ParseError(source, n, e.what());
        }
    }
}

bool RunReport::same_result(const RunReport& o) const {
    return mode == o.mode && size == o.size && seed == o.seed && success == o.success && outcome == o.outcome &&
           steps.phase1 == o.steps.phase1 && steps.train == o.steps.train && steps.skill_eval == o.steps.skill_eval &&
           steps.final_eval == o.steps.final_eval && steps_total == o.steps_total &&
           trajectory_length == o.trajectory_length && skills == o.skills && k_saved == o.k_saved &&
           eval_successes == o.eval_successes && eval_episodes == o.eval_episodes && best_eval_rate == o.best_eval_rate;
}

void write_report(std::ostream& out, const RunReport& r) {
    out << "mode=" << to_string(r.mode) << "\n"
        << "size=" << r.size << "\n"
        << "seed=" << r.seed << "\n"
        << "success=" << (r.success ? 1 : 0) << "\n"
        << "outcome=" << r.outcome << "\n"
        << "steps_total=" << r.steps_total << "\n"
        << "steps_phase1=" << r.steps.phase1 << "\n"
        << "steps_train=" << r.steps.train << "\n"
        << "steps_skill_eval=" << r.steps.skill_eval << "\n"
        << "steps_final_eval=" << r.steps.final_eval << "\n"
        << "trajectory_length=" << r.trajectory_length << "\n"
        << "skills=" << r.skills.size() << "\n";
    for (std::size_t i = 0; i < r.skills.size(); ++i) {
        const auto& s = r.skills[i];
        out << "skill." << i << "=" << s.k << "," << s.t << "," << s.train_steps << "," << s.eval_steps << ","
            << format_real(s.performance) << "\n";
    }
    if (r.k_saved) out << "k_saved=" << *r.k_saved << "\n";
    out << "eval_successes=" << r.eval_successes << "\n"
        << "eval_episodes=" << r.eval_episodes << "\n"
        << "best_eval_rate=" << format_real(r.best_eval_rate) << "\n"
        << "wall_clock_seconds=" << format_real(r.wall_clock_seconds) << "\n";
}

RunReport read_report(std::istream& in, const std::string& source) {
    RunReport r;
    std::string line;
    std::size_t n = 0;
    std::size_t declared_skills = 0;
    while (std::getline(in, line)) {
        ++n;
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos) throw ParseError(source, n, "expected key=value");
        const std::string key = line.substr(0, eq), value = line.substr(eq + 1);
        try {
            if (key == "mode") r.mode = mode_from_string(value);
            else if (key == "size") r.size = static_cast<int>(parse_int(value));
            else if (key == "seed") r.seed = parse_uint(value);
            else if (key == "success") r.success = parse_int(value) != 0;
            else if (key == "outcome") r.outcome = value;
            else if (key == "steps_total") r.steps_total = parse_uint(value);
            else if (key == "steps_phase1") r.steps.phase1 = parse_uint(value);
            else if (key == "steps_train") r.steps.train = parse_uint(value);
            else if (key == "steps_skill_eval") r.steps.skill_eval = parse_uint(value);
            else if (key == "steps_final_eval") r.steps.final_eval = parse_uint(value);
            else if (key == "trajectory_length") r.trajectory_length = parse_uint(value);
            else if (key == "skills") declared_skills = parse_uint(value);
            else if (key.rfind("skill.", 0) == 0) {
                std::string v = value;
                std::replace(v.begin(), v.end(), ',', ' ');
                auto parts = split_ws(v);
                if (parts.size() != 5) throw std::invalid_argument("skill record needs 5 fields");
                r.skills.push_back({parse_uint(parts[0]), parse_uint(parts[1]), parse_uint(parts[2]),
                                    parse_uint(parts[3]), parse_real(parts[4])});
            } else if (key == "k_saved") r.k_saved = parse_uint(value);
            else if (key == "eval_successes") r.eval_successes = static_cast<int>(parse_int(value));
            else if (key == "eval_episodes") r.eval_episodes = static_cast<int>(parse_int(value));
            else if (key == "best_eval_rate") r.best_eval_rate = parse_real(value);
            else if (key == "wall_clock_seconds") r.wall_clock_seconds = parse_real(value);
            else throw std::invalid_argument("unknown report key '" + key + "'");
        } catch (const std::invalid_argument& e) {
            throw ParseError(source, n, e.what());
        }
    }
    if (declared_skills != r.skills.size()) throw ParseError(source, n, "skill count does not match records");
    return r;
}

bool is_vanilla(Mode m) { return m == Mode::VanillaDdpg || m == Mode::VanillaTd3; }

double effective_gamma(const ExperimentConfig& config) {
    if (config.gamma) return *config.gamma;
    return is_vanilla(config.mode) ? 0.99 : 0.9;
}

MazeSpec make_maze(const ExperimentConfig& config) {
    return generate_maze(config.size, derive_seed(config.seed, "maze"));
}

BackplayConfig make_backplay_config(const ExperimentConfig& config) {
    BackplayConfig bp;
    bp.alpha = config.alpha;
    bp.beta = config.beta;
    bp.eps = config.eps;
    bp.agent.kind = AgentKind::Ddpg;
    bp.agent.gamma = effective_gamma(config);
    bp.agent.actor_update = config.actor_update;
    bp.agent.argmax_samples = config.argmax_samples;
    return bp;
}

ChainEvaluation evaluate_chain(const SkillChain& chain, MazeEnv& env, int episodes, std::uint64_t step_budget,
                               std::uint64_t seed) {
    ChainEvaluation out;
    std::mt19937_64 rng(seed);
    for (int i = 0; i < episodes; ++i) {
        const State start = sample_ball(chain.skills.front().activation_center, chain.eps, rng);
        ChainExecution run = execute_chain(chain, env, start, step_budget);
        out.successes += run.success ? 1 : 0;
        ++out.episodes;
        out.traces.push_back(std::move(run.trace));
    }
    return out;
}

namespace {

using Clock = std::chrono::steady_clock;

void log_line(const Logger& log, const std::string& msg) {
    if (log) log(msg);
}

void run_vanilla(const ExperimentConfig& config, RunOutcome& outcome, MazeEnv& env, const Logger& log) {
    RunReport& report = outcome.report;
    const int n = config.size;
    AgentConfig ac;
    ac.kind = config.mode == Mode::VanillaTd3 ? AgentKind::Td3 : AgentKind::Ddpg;
    ac.gamma = effective_gamma(config);
    ac.actor_update = config.actor_update;
    ac.argmax_samples = config.argmax_samples;
    ac.obs = {{n / 2.0, n / 2.0}, 2.0 / n};
    Agent agent(ac, derive_seed(config.seed, "agent"));
    const int cap = config.vanilla_episode_steps > 0 ? config.vanilla_episode_steps : 100 * n;

    auto evaluate = [&] {
        int successes = 0;
        for (int e = 0; e < config.eval_episodes; ++e) {
            State s = env.reset_to(kStartState);
            for (int j = 0; j < cap; ++j) {
                const StepResult r = env.step(agent.policy_action(s));
                ++report.steps.final_eval;
                s = r.next_state;
                if (r.terminal) {
                    ++successes;
                    break;
                }
            }
        }
        return successes;
    };

    std::uint64_t trained = 0;
    bool solved = false;
    while (trained < config.vanilla_budget && !solved) {
        State s = env.reset_to(kStartState);
        for (int j = 0; j < cap && trained < config.vanilla_budget; ++j) {
            const Action a = agent.act(s, ac.exploration_noise);
            const StepResult r = env.step(a);
            ++trained;
            ++report.steps.train;
            agent.observe({s, a, r.reward, r.next_state, r.terminal});
            agent.update();
            s = r.next_state;
            if (trained % config.vanilla_eval_interval == 0) {
                const int successes = evaluate();
                const double rate = static_cast<double>(successes) / config.eval_episodes;
                if (rate >= report.best_eval_rate) {
                    report.best_eval_rate = rate;
                    report.eval_successes = successes;
                }
                report.eval_episodes = config.eval_episodes;
                log_line(log, "vanilla step " + std::to_string(trained) + " eval " + std::to_string(successes) + "/" +
                                  std::to_string(config.eval_episodes));
                if (rate >= config.vanilla_success_rate) {
                    solved = true;
                    break;
                }
                env.reset_to(s);
            }
            if (r.terminal) break;
        }
    }
    report.success = solved;
    report.outcome = solved ? "solved" : "budget-exhausted";
}

void run_pbcs(const ExperimentConfig& config, RunOutcome& outcome, MazeEnv& env, const Logger& log) {
    RunReport& report = outcome.report;
    try {
        StepScope scope(env, &report.steps.phase1);
        outcome.trajectory = run_phase1(env, kStartState, config.phase1_budget, derive_seed(config.seed, "phase1"));
    } catch (const ExplorationFailure& e) {
        report.outcome = "exploration-failure";
        log_line(log, e.what());
        return;
    }
    const Trajectory& traj = *outcome.trajectory;
    report.trajectory_length = traj.size();
    log_line(log, "phase 1 found a trajectory of " + std::to_string(traj.size()) + " states in " +
                      std::to_string(report.steps.phase1) + " steps");

    BackplayConfig bp = make_backplay_config(config);
    if (log) {
        bp.on_record = [&](std::size_t t, const BackplayStepRecord& r) {
            std::ostringstream os;
            os << "backplay T=" << t << " K=" << r.k << " p0=" << r.initial_performance;
            if (r.trained) os << " epochs=" << r.epochs << " p=" << r.final_performance;
            os << (r.saved ? " saved" : "") << " steps=" << env.step_count();
            log(os.str());
        };
    }
    const std::uint64_t chain_seed = derive_seed(config.seed, "chain");
    env.set_step_limit(env.step_count() + config.phase2_budget);
    try {
        if (config.mode == Mode::PbcsNoChain) {
            SkillCandidate c = backplay(traj, traj.size() - 1, env, bp, derive_seed(chain_seed, "skill", 0), &report.steps);
            report.k_saved = c.k_saved;
            SkillChain chain;
            chain.eps = bp.eps;
            chain.skills.push_back({std::move(c.policy), traj[c.k_saved], traj[c.t], bp.eps, c.k_saved, c.t,
                                    c.saved_performance, c.train_steps, c.eval_steps});
            outcome.chain = std::move(chain);
        } else {
            outcome.chain = build_chain(traj, env, bp, chain_seed, &report.steps);
        }
    } catch (const BudgetExhausted& e) {
        report.outcome = "phase2-budget-exhausted";
        log_line(log, e.what());
    } catch (const ChainConstructionFailure& e) {
        report.outcome = "chain-construction-failure";
        log_line(log, e.what());
    } catch (const BackplayFailure& e) {
        report.outcome = "backplay-failure";
        log_line(log, e.what());
    }
    env.set_step_limit(std::numeric_limits<std::uint64_t>::max());
    if (!outcome.chain) return;

    for (const auto& s : outcome.chain->skills) {
        report.skills.push_back({s.k, s.t, s.train_steps, s.eval_steps, s.saved_performance});
    }
    if (config.mode == Mode::PbcsNoChain && report.k_saved.value_or(0) > 0) {
        report.outcome = "stopped-before-start";
        log_line(log, "single backplay stopped at K=" + std::to_string(*report.k_saved));
        return;
    }

    ChainEvaluation eval;
    {
        StepScope scope(env, &report.steps.final_eval);
        eval = evaluate_chain(*outcome.chain, env, config.eval_episodes, 10 * traj.size(),
                              derive_seed(config.seed, "final-eval"));
    }
    report.eval_successes = eval.successes;
    report.eval_episodes = eval.episodes;
    report.best_eval_rate = static_cast<double>(eval.successes) / eval.episodes;
    outcome.traces = std::move(eval.traces);
    report.success = eval.successes == eval.episodes;
    report.outcome = report.success ? "solved" : "chain-execution-failure";
    log_line(log, "chain of " + std::to_string(outcome.chain->size()) + " skills: " + std::to_string(eval.successes) +
                      "/" + std::to_string(eval.episodes) + " successes");
}

}  // namespace

RunOutcome run_experiment(const ExperimentConfig& config, const Logger& log) {
    const auto t0 = Clock::now();
    RunOutcome outcome;
    outcome.maze = make_maze(config);
    RunReport& report = outcome.report;
    report.mode = config.mode;
    report.size = config.size;
    report.seed = config.seed;

    MazeEnv env(outcome.maze);
    if (is_vanilla(config.mode)) {
        run_vanilla(config, outcome, env, log);
    } else {
        run_pbcs(config, outcome, env, log);
    }
    report.steps_total = env.step_count();
    if (report.steps.total() != report.steps_total) {
        throw std::logic_error("step accounting mismatch: categories sum to " + std::to_string(report.steps.total()) +
                               ", environment counted " + std::to_string(report.steps_total));
    }
    report.wall_clock_seconds = std::chrono::duration<double>(Clock::now() - t0).count();
    return outcome;
}

std::string render_svg(const MazeSpec& spec, const Trajectory* trajectory, const SkillChain* chain,
                       const std::vector<std::vector<State>>* traces) {
    const double n = spec.size;
    std::ostringstream svg;
    auto polyline = [&](const std::vector<State>& pts, const char* color, const char* cls) {
        svg << "    <polyline class=\"" << cls << "\" fill=\"none\" stroke=\"" << color
            << "\" stroke-width=\"0.015\" points=\"";
        for (std::size_t i = 0; i < pts.size(); ++i) {
            svg << (i ? " " : "") << format_real(pts[i].x) << ',' << format_real(pts[i].y);
        }
        svg << "\"/>\n";
    };

    svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
        << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << 100 * spec.size << "\" height=\""
        << 100 * spec.size << "\" viewBox=\"0 0 " << format_real(n) << ' ' << format_real(n) << "\">\n"
        << "  <g transform=\"translate(0," << format_real(n) << ") scale(1,-1)\">\n"
        << "    <rect class=\"background\" x=\"0\" y=\"0\" width=\"" << format_real(n) << "\" height=\""
        << format_real(n) << "\" fill=\"white\"/>\n";
    for (const auto& w : spec.walls) {
        svg << "    <rect class=\"wall\" x=\"" << format_real(w.xmin) << "\" y=\"" << format_real(w.ymin)
            << "\" width=\"" << format_real(w.xmax - w.xmin) << "\" height=\"" << format_real(w.ymax - w.ymin)
            << "\" fill=\"black\"/>\n";
    }
    svg << "    <circle class=\"target\" cx=\"" << format_real(spec.target_center.x) << "\" cy=\""
        << format_real(spec.target_center.y) << "\" r=\"" << format_real(spec.target_radius)
        << "\" fill=\"gold\" fill-opacity=\"0.6\"/>\n";
    if (trajectory) polyline(trajectory->states, "red", "trajectory");
    if (traces) {
        for (const auto& tr : *traces) polyline(tr, "green", "trace");
    }
    if (chain) {
        for (const auto& s : chain->skills) {
            svg << "    <circle class=\"activation\" cx=\"" << format_real(s.activation_center.x) << "\" cy=\""
                << format_real(s.activation_center.y) << "\" r=\"" << format_real(s.eps)
                << "\" fill=\"none\" stroke=\"purple\" stroke-width=\"0.015\"/>\n";
        }
    }
    svg << "  </g>\n</svg>\n";
    return svg.str();
}

namespace {

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
    out << content;
    if (!out) throw std::runtime_error("failed writing '" + path.string() + "'");
}

template <class Fn>
std::string to_text(Fn&& fn) {
    std::ostringstream os;
    fn(os);
    return os.str();
}

std::ifstream open_input(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open '" + path.string() + "' for reading");
    return in;
}

}  // namespace

std::vector<fs::path> save_artifacts(const RunOutcome& outcome, const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw std::runtime_error("cannot create directory '" + dir.string() + "': " + ec.message());

    std::vector<fs::path> written;
    auto emit = [&](const char* name, const std::string& content) {
        write_file(dir / name, content);
        written.push_back(dir / name);
    };
    emit("maze.txt", to_text([&](std::ostream& os) { write_maze(os, outcome.maze); }));
    if (outcome.trajectory) emit("trajectory.txt", to_text([&](std::ostream& os) { write_trajectory(os, *outcome.trajectory); }));
    if (outcome.chain) emit("chain.txt", to_text([&](std::ostream& os) { write_chain(os, *outcome.chain); }));
    emit("report.txt", to_text([&](std::ostream& os) { write_report(os, outcome.report); }));
    emit("render.svg", render_svg(outcome.maze, outcome.trajectory ? &*outcome.trajectory : nullptr,
                                  outcome.chain ? &*outcome.chain : nullptr, &outcome.traces));
    std::string manifest;
    for (const auto& p : written) manifest += p.filename().string() + "\n";
    emit("manifest.txt", manifest);
    return written;
}

LoadedArtifacts load_artifacts(const fs::path& dir) {
    LoadedArtifacts out;
    {
        auto in = open_input(dir / "maze.txt");
        out.maze = read_maze(in, (dir / "maze.txt").string());
    }
    if (fs::exists(dir / "trajectory.txt")) {
        auto in = open_input(dir / "trajectory.txt");
        out.trajectory = read_trajectory(in, (dir / "trajectory.txt").string());
    }
    if (fs::exists(dir / "chain.txt")) {
        auto in = open_input(dir / "chain.txt");
        out.chain = read_chain(in, (dir / "chain.txt").string());
    }
    if (fs::exists(dir / "report.txt")) {
        auto in = open_input(dir / "report.txt");
        out.report = read_report(in, (dir / "report.txt").string());
    }
    return out;
}

}  // namespace pbcs
