#include "pbcs/backplay.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "pbcs/seeding.hpp"

namespace pbcs {

double potential(const State& s, const ShapingTarget& target) {
    return 1.0 / std::max(distance(s, target.center), kPotentialFloor);
}

ShapedReward shaped_reward(const State& s, const State& s_next, const ShapingTarget& target) {
    if (distance(s_next, target.center) <= target.radius) return {kReachBonus, true};
    return {potential(s_next, target) - potential(s, target), false};
}

State sample_ball(const State& center, double eps, std::mt19937_64& rng) {
    if (!(eps > 0.0)) throw std::invalid_argument("ball radius must be positive");
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double r = eps * std::sqrt(u(rng));
    const double theta = 2.0 * std::numbers::pi * u(rng);
    return {center.x + r * std::cos(theta), center.y + r * std::sin(theta)};
}

int episode_cap(const BackplayConfig& config, std::size_t k, std::size_t t) {
    if (config.max_steps > 0) return config.max_steps;
    return static_cast<int>(2 * (t - k) + 50);
}

namespace {

template <class ActFn, class OnStep>
EpochResult run_episodes(MazeEnv& env, const State& from, const State& to, const BackplayConfig& config, int max_steps,
                         std::mt19937_64& rng, ActFn&& act, OnStep&& on_step) {
    const ShapingTarget target{to, config.eps};
    EpochResult out;
    const std::uint64_t steps_before = env.step_count();
    for (int episode = 0; episode < config.beta; ++episode) {
        State s = env.reset_to(sample_ball(from, config.eps, rng));
        if (distance(s, to) <= config.eps) {
            ++out.successes;
            continue;
        }
        for (int j = 0; j < max_steps; ++j) {
            const Action a = act(s);
            const StepResult r = env.step(a);
            const ShapedReward shaped = shaped_reward(s, r.next_state, target);
            on_step(Transition{s, a, shaped.reward, r.next_state, shaped.reached});
            s = r.next_state;
            if (shaped.reached) {
                ++out.successes;
                break;
            }
        }
    }
    out.steps = env.step_count() - steps_before;
    out.performance = static_cast<double>(out.successes) / config.beta;
    return out;
}

}  // namespace

EpochResult train_epoch(Agent& agent, MazeEnv& env, const State& from, const State& to, const BackplayConfig& config,
                        int max_steps, std::mt19937_64& rng) {
    const double noise = agent.config().exploration_noise;
    return run_episodes(
        env, from, to, config, max_steps, rng, [&](const State& s) { return agent.act(s, noise); },
        [&](const Transition& t) {
            agent.observe(t);
            agent.update();
        });
}

EpochResult evaluate_skill(const Policy& policy, MazeEnv& env, const State& from, const State& to,
                           const BackplayConfig& config, int max_steps, std::mt19937_64& rng) {
    std::normal_distribution<double> noise(0.0, config.agent.exploration_noise);
    return run_episodes(
        env, from, to, config, max_steps, rng,
        [&](const State& s) {
            Action a = policy(s);
            if (config.eval_noise && config.agent.exploration_noise > 0.0) {
                a.dx += noise(rng);
                a.dy += noise(rng);
            }
            return clip_action(a);
        },
        [](const Transition&) {});
}

SkillCandidate backplay(const Trajectory& traj, std::size_t t, MazeEnv& env, const BackplayConfig& config,
                        std::uint64_t seed, StepTally* tally) {
    if (t < 1 || t >= traj.size()) throw std::invalid_argument("backplay needs 1 <= T < trajectory length");
    if (config.alpha < 1 || config.beta < 1) throw std::invalid_argument("alpha and beta must be >= 1");

    const State& goal = traj[t];
    AgentConfig agent_config = config.agent;
    agent_config.obs = {goal, 1.0};
    Agent agent(agent_config, derive_seed(seed, "agent"));
    std::mt19937_64 train_rng(derive_seed(seed, "train-starts"));
    std::mt19937_64 eval_rng(derive_seed(seed, "eval-starts"));

    SkillCandidate out;
    out.t = t;
    bool have_save = false;

    auto evaluate = [&](std::size_t k) {
        StepScope scope(env, tally ? &tally->skill_eval : nullptr);
        EpochResult r = evaluate_skill(agent.policy(), env, traj[k], goal, config, episode_cap(config, k, t), eval_rng);
        out.eval_steps += r.steps;
        return r.performance;
    };
    auto save = [&](std::size_t k, double p) {
        out.policy = agent.policy();
        out.k_saved = k;
        out.saved_performance = p;
        have_save = true;
    };

    for (std::size_t k = t; k-- > 0;) {
        BackplayStepRecord rec;
        rec.k = k;
        rec.initial_performance = rec.final_performance = evaluate(k);
        if (rec.initial_performance == 1.0) {
            save(k, 1.0);
            rec.saved = true;
            out.history.push_back(rec);
            if (config.on_record) config.on_record(t, rec);
            continue;
        }

        rec.trained = true;
        const int cap = episode_cap(config, k, t);
        double best = -1.0;
        for (int stale = 0; stale < config.alpha;) {
            StepScope scope(env, tally ? &tally->train : nullptr);
            EpochResult r = train_epoch(agent, env, traj[k], goal, config, cap, train_rng);
            out.train_steps += r.steps;
            ++rec.epochs;
            if (r.performance > best) {
                best = r.performance;
                stale = 0;
            } else {
                ++stale;
            }
        }
        rec.final_performance = evaluate(k);
        out.history.push_back(rec);
        if (rec.final_performance == 1.0) {
            save(k, 1.0);
            out.history.back().saved = true;
        }
        if (config.on_record) config.on_record(t, out.history.back());
        if (rec.final_performance == 0.0 && have_save) {
            return out;
        }
    }
    if (!have_save) throw BackplayFailure(t, out.train_steps, out.eval_steps);
    return out;
}

}  // namespace pbcs
