// Acceptance runner. Prints one PASS/FAIL line per criterion; pass criterion
// numbers as arguments to run a subset. Exit status 0 iff all selected pass.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <string>

#include "oracles.hpp"
#include "pbcs/harness.hpp"

using namespace pbcs;

namespace {

// pinned thresholds
constexpr double kVanillaFailRate = 0.9;
constexpr std::uint64_t kPbcs2Steps = 1'600'000;
constexpr std::uint64_t kPbcs5Steps = 25'000'000;
constexpr std::uint64_t kPhase1AuditSteps = 100'000;
constexpr double kTelescopeTol = 1e-9;
constexpr int kTelescopeTraces = 1000;
constexpr int kBonusPairs = 100'000;
constexpr double kGradRelTol = 1e-4;
constexpr int kGradNets = 100;
constexpr int kGeometrySegments = 100'000;
constexpr int kGeometrySamples = 10'000;
constexpr double kTangencyBand = 1e-9;
constexpr std::uint64_t kSanityBudget = 200'000;
constexpr double kSanityRate = 0.9;

struct Result {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

ExperimentConfig cell(Mode mode, int size) {
    ExperimentConfig c;
    c.mode = mode;
    c.size = size;
    c.seed = 0;
    return c;
}

std::string summary(const RunReport& r) {
    return fmt("%s N=%d %s steps=%llu eval=%d/%d best=%.2f", to_string(r.mode).c_str(), r.size, r.outcome.c_str(),
               static_cast<unsigned long long>(r.steps_total), r.eval_successes, r.eval_episodes, r.best_eval_rate);
}

Result vanilla_failure() {
    Result res{true, ""};
    for (Mode m : {Mode::VanillaDdpg, Mode::VanillaTd3}) {
        for (int n : {5, 7, 10}) {
            RunReport r = run_experiment(cell(m, n)).report;
            const bool failed = !r.success && r.best_eval_rate < kVanillaFailRate && r.steps.train == 1'000'000;
            res.pass = res.pass && failed;
            res.detail += fmt("[%s N=%d best=%.2f] ", to_string(m).c_str(), n, r.best_eval_rate);
        }
    }
    return res;
}

Result pbcs_solves(int size, std::uint64_t max_steps) {
    RunReport r = run_experiment(cell(Mode::Pbcs, size)).report;
    const bool ok = r.success && r.eval_successes == 50 && r.eval_episodes == 50 && r.steps_total <= max_steps;
    return {ok, summary(r) + fmt(" skills=%zu limit=%llu", r.skills.size(), static_cast<unsigned long long>(max_steps))};
}

Result nochain_failure() {
    Result res{true, ""};
    for (int n : {5, 7, 10}) {
        RunReport r = run_experiment(cell(Mode::PbcsNoChain, n)).report;
        const bool stopped = !r.success && r.k_saved && *r.k_saved > 0;
        res.pass = res.pass && stopped;
        res.detail += fmt("[N=%d %s K_s=%s T=%zu] ", n, r.outcome.c_str(),
                          r.k_saved ? std::to_string(*r.k_saved).c_str() : "-",
                          r.trajectory_length ? r.trajectory_length - 1 : 0);
    }
    return res;
}

struct Audit {
    std::uint64_t iterations = 0, violations = 0, min_before = 0;
};

void audit(const Archive& a, const ExploreOutcome&, void* ctx) {
    auto& au = *static_cast<Audit*>(ctx);
    ++au.iterations;
    if (a.last_selected_bin_counter() != au.min_before) ++au.violations;
    au.min_before = a.min_bin_counter_scan();
}

Result phase1_suite() {
    // long audited run: a 10x10 maze is not solved within the budget
    Audit au;
    MazeSpec big = generate_maze(10, 0);
    MazeEnv env(big);
    Archive archive(kStartState, 1);
    while (au.iterations < kPhase1AuditSteps) {
        ExploreOutcome o = explore_iteration(archive, env);
        audit(archive, o, &au);
    }
    bool ok = au.violations == 0;
    std::string detail = fmt("minimality violations %llu/%llu; ", static_cast<unsigned long long>(au.violations),
                             static_cast<unsigned long long>(au.iterations));

    int replayed = 0;
    for (int n : {2, 3, 5, 7}) {
        MazeSpec m = generate_maze(n, 0);
        Trajectory t = run_phase1(m, kStartState, 5'000'000, 100 + n);
        State s = t[0];
        bool exact = t[0] == kStartState;
        for (std::size_t i = 0; i + 1 < t.size(); ++i) {
            StepResult r = step(s, t.actions[i], m);
            exact = exact && r.next_state == t[i + 1] && r.terminal == (i + 2 == t.size());
            s = r.next_state;
        }
        const double d = distance(t.states.back(), m.target_center);
        exact = exact && d < 0.2;
        ok = ok && exact;
        replayed += exact;
        detail += fmt("N=%d len=%zu end-dist=%.3f; ", n, t.size(), d);
    }
    detail += fmt("%d/4 trajectories replay exactly", replayed);
    return {ok, detail};
}

Result shaping_suite() {
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> step_d(-0.1, 0.1), pos(-2.0, 2.0);
    const ShapingTarget target{{0.0, 0.0}, 0.1};
    double worst = 0.0;
    for (int i = 0; i < kTelescopeTraces; ++i) {
        State s0{pos(rng), pos(rng)};
        if (distance(s0, target.center) <= 0.2) s0 = {1.0, 1.0};
        State s = s0;
        double sum = 0.0;
        for (int k = 0; k < 100; ++k) {
            State n{s.x + step_d(rng), s.y + step_d(rng)};
            if (distance(n, target.center) <= 0.2) continue;
            sum += shaped_reward(s, n, target).reward;
            s = n;
        }
        worst = std::max(worst, std::abs(sum - (oracle::phi(s.x, s.y, 0, 0) - oracle::phi(s0.x, s0.y, 0, 0))));
    }
    int mismatches = 0;
    std::uniform_real_distribution<double> near(-0.15, 0.15);
    for (int i = 0; i < kBonusPairs; ++i) {
        State a{near(rng), near(rng)}, b{near(rng), near(rng)};
        const bool inside = std::sqrt(b.x * b.x + b.y * b.y) <= target.radius;
        const ShapedReward r = shaped_reward(a, b, target);
        if (r.reached != inside || (inside && r.reward != 10.0)) ++mismatches;
    }
    return {worst < kTelescopeTol && mismatches == 0,
            fmt("max telescoping error %.3g over %d traces; bonus mismatches %d/%d", worst, kTelescopeTraces,
                mismatches, kBonusPairs)};
}

Result numeric_core() {
    using D = nn::Mlp<double>;
    std::mt19937_64 rng(7);
    std::uniform_int_distribution<int> size(2, 8), depth(1, 3);
    std::normal_distribution<double> w(0.0, 0.7), u(0.0, 1.0);
    const double h = 1e-5;
    double worst = 0.0;
    auto rel = [](double a, double b) {
        const double s = std::max(std::abs(a), std::abs(b));
        return s < 1e-6 ? std::abs(a - b) : std::abs(a - b) / s;
    };
    for (int trial = 0; trial < kGradNets; ++trial) {
        std::vector<int> sizes{size(rng)};
        for (int i = 0, d = depth(rng); i < d; ++i) sizes.push_back(size(rng));
        D net(sizes, trial % 2 ? nn::OutputActivation::ScaledTanh : nn::OutputActivation::Identity, 0.1);
        for (auto& p : net.params()) p = w(rng);
        D::Vector x(net.input_size()), up(net.output_size());
        for (auto& v : x) v = u(rng);
        for (auto& v : up) v = u(rng);
        auto g = nn::gradients(net, x, up);
        for (Eigen::Index i = 0; i < net.params().size(); ++i) {
            D p = net, m = net;
            p.params()[i] += h;
            m.params()[i] -= h;
            const double fd = (up.dot(p.forward(x)) - up.dot(m.forward(x))) / (2 * h);
            worst = std::max(worst, rel(g.params[i], fd));
        }
    }

    bool identities = true;
    D net({3, 4, 2}, nn::OutputActivation::Identity);
    net.init_uniform(rng);
    const D::Vector before = net.params();
    nn::AdamState<double> st(net, 1e-3);
    nn::adam_step(net, D::Vector::Zero(before.size()), st);
    identities = identities && net.params() == before;
    D src = net;
    src.params().setConstant(0.5);
    D a = net, b = net;
    nn::soft_update(a, src, 0.0);
    nn::soft_update(b, src, 1.0);
    identities = identities && a.params() == net.params() && b.params() == src.params();
    return {worst < kGradRelTol && identities,
            fmt("max relative error %.3g over %d nets; identities %s", worst, kGradNets, identities ? "exact" : "BROKEN")};
}

// minimum sampled distance from [a, b] to the walls, refined around the
// closest sample until the spacing is far below the tangency band
double dense_gap(const State& a, const State& b, const std::vector<Rect>& walls) {
    double lo = 0.0, hi = 1.0, best = 1e300;
    for (int level = 0; level < 4; ++level) {
        const int n = level == 0 ? kGeometrySamples : 1000;
        double best_t = lo;
        for (int i = 0; i < n; ++i) {
            const double t = lo + (hi - lo) * i / (n - 1);
            const State p{a.x + t * (b.x - a.x), a.y + t * (b.y - a.y)};
            double g = 1e300;
            for (const auto& r : walls) g = std::min(g, oracle::point_rect_distance(p.x, p.y, r));
            if (g < best) {
                best = g;
                best_t = t;
            }
        }
        if (best == 0.0) break;
        const double span = (hi - lo) / (n - 1);
        lo = std::max(0.0, best_t - span);
        hi = std::min(1.0, best_t + span);
    }
    return best;
}

Result geometry_oracle() {
    std::mt19937_64 rng(8);
    MazeSpec m = generate_maze(5, 3);
    std::uniform_real_distribution<double> pos(-0.2, 5.2), d(-0.3, 0.3);
    int disagreements = 0, in_band = 0, hits = 0;
    for (int i = 0; i < kGeometrySegments; ++i) {
        const State a{pos(rng), pos(rng)};
        const State b{a.x + d(rng), a.y + d(rng)};
        std::vector<Rect> near;
        for (const auto& r : m.walls) {
            if (std::min(a.x, b.x) <= r.xmax + 1e-6 && std::max(a.x, b.x) >= r.xmin - 1e-6 &&
                std::min(a.y, b.y) <= r.ymax + 1e-6 && std::max(a.y, b.y) >= r.ymin - 1e-6) {
                near.push_back(r);
            }
        }
        const bool impl = segment_hits_wall(a, b, m);
        hits += impl;
        const double gap = near.empty() ? 1e300 : dense_gap(a, b, near);
        if (impl != (gap == 0.0)) {
            if (gap <= kTangencyBand) ++in_band;
            else ++disagreements;
        }
    }
    return {disagreements == 0, fmt("%d segments (%d hits): %d disagreements outside the %.0e band, %d inside",
                                    kGeometrySegments, hits, disagreements, kTangencyBand, in_band)};
}

Result ddpg_sanity() {
    MazeSpec room = open_room(2, {1.5, 1.5});
    MazeEnv env(room);
    BackplayConfig c;
    c.agent.gamma = 0.9;
    const State start{0.5, 0.5}, goal{1.5, 1.5};
    c.agent.obs = {goal, 1.0};
    Agent agent(c.agent, 9);
    std::mt19937_64 train_rng(10), eval_rng(11);
    const int cap = 2 * 15 + 50;
    std::uint64_t steps = 0;
    double last = 0.0;
    int epochs = 0;
    while (env.step_count() < kSanityBudget) {
        train_epoch(agent, env, start, goal, c, cap, train_rng);
        ++epochs;
        steps = env.step_count();
        last = evaluate_skill(agent.policy(), env, start, goal, c, cap, eval_rng).performance;
        if (last >= kSanityRate) break;
    }
    return {last >= kSanityRate,
            fmt("success %.2f after %d epochs, %llu steps (train + eval)", last, epochs,
                static_cast<unsigned long long>(steps))};
}

Result determinism() {
    ExperimentConfig small_van = cell(Mode::VanillaTd3, 5);
    small_van.vanilla_budget = 100'000;
    bool ok = true;
    std::string detail;
    for (const ExperimentConfig& c : {cell(Mode::Pbcs, 2), cell(Mode::PbcsNoChain, 2), small_van}) {
        RunReport a = run_experiment(c).report, b = run_experiment(c).report;
        const bool same = a.same_result(b);
        ok = ok && same;
        detail += fmt("[%s N=%d %s] ", to_string(c.mode).c_str(), c.size, same ? "identical" : "DIFFERENT");
    }
    return {ok, detail};
}

}  // namespace

int main(int argc, char** argv) {
    struct Criterion {
        int id;
        const char* name;
        std::function<Result()> run;
    };
    const Criterion criteria[] = {
        {1, "vanilla DDPG/TD3 fail on N=5,7,10 within 1M steps", vanilla_failure},
        {2, "PBCS solves N=2 within 1.6M steps", [] { return pbcs_solves(2, kPbcs2Steps); }},
        {3, "PBCS solves N=5 within 25M steps", [] { return pbcs_solves(5, kPbcs5Steps); }},
        {4, "single backplay stops with K_s > 0 on N=5,7,10", nochain_failure},
        {5, "phase-1 selection, replay and endpoint properties", phase1_suite},
        {6, "shaping telescopes and the bonus fires iff d <= eps", shaping_suite},
        {7, "gradients match finite differences; optimizer identities", numeric_core},
        {8, "segment_hits_wall agrees with dense sampling", geometry_oracle},
        {9, "shaped DDPG reaches 90% in an open 2x2 room within 200k steps", ddpg_sanity},
        {10, "identical configs give identical reports", determinism},
    };
    std::set<int> selected;
    for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));

    int failures = 0;
    for (const auto& c : criteria) {
        if (!selected.empty() && !selected.count(c.id)) continue;
        const auto t0 = std::chrono::steady_clock::now();
        Result r;
        try {
            r = c.run();
        } catch (const std::exception& e) {
            r = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        failures += !r.pass;
        std::cout << "criterion " << c.id << " " << (r.pass ? "PASS" : "FAIL") << " " << c.name << " | " << r.detail
                  << fmt(" (%.1fs)", secs) << std::endl;
    }
    return failures == 0 ? 0 : 1;
}
