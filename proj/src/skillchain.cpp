#include "pbcs/skillchain.hpp"

#include <algorithm>
#include <istream>
#include <ostream>

#include "pbcs/seeding.hpp"
#include "pbcs/textio.hpp"

namespace pbcs {

SkillChain build_chain(const Trajectory& traj, MazeEnv& env, const BackplayConfig& config, std::uint64_t seed,
                       StepTally* tally) {
    if (traj.size() < 2) throw std::invalid_argument("skill chaining needs a trajectory with at least two states");
    SkillChain chain;
    chain.eps = config.eps;
    std::size_t t = traj.size() - 1;
    for (std::uint64_t n = 0; t > 0; ++n) {
        SkillCandidate c;
        try {
            c = backplay(traj, t, env, config, derive_seed(seed, "skill", n), tally);
        } catch (const BackplayFailure&) {
            throw ChainConstructionFailure(t);
        }
        Skill s;
        s.policy = std::move(c.policy);
        s.activation_center = traj[c.k_saved];
        s.target_center = traj[t];
        s.eps = config.eps;
        s.k = c.k_saved;
        s.t = t;
        s.saved_performance = c.saved_performance;
        s.train_steps = c.train_steps;
        s.eval_steps = c.eval_steps;
        chain.skills.push_back(std::move(s));
        t = c.k_saved;
    }
    std::reverse(chain.skills.begin(), chain.skills.end());
    return chain;
}

ChainExecution execute_chain(const SkillChain& chain, MazeEnv& env, const State& start, std::uint64_t step_budget) {
    if (chain.empty()) throw std::invalid_argument("cannot execute an empty skill chain");
    ChainExecution out;
    const Skill& last = chain.skills.back();
    std::size_t active = 0;
    State s = env.reset_to(start);

    auto advance = [&] {
        for (std::size_t j = chain.size(); j-- > active + 1;) {
            if (distance(s, chain.skills[j].activation_center) <= chain.skills[j].eps) {
                active = j;
                return;
            }
        }
    };

    advance();
    out.trace.push_back(s);
    out.active.push_back(active);
    if (distance(s, last.target_center) <= last.eps) {
        out.success = true;
        return out;
    }
    while (out.steps < step_budget) {
        const StepResult r = env.step(chain.skills[active].policy(s));
        ++out.steps;
        s = r.next_state;
        advance();
        out.trace.push_back(s);
        out.active.push_back(active);
        if (r.reward > 0.0 || distance(s, last.target_center) <= last.eps) {
            out.success = true;
            break;
        }
    }
    return out;
}

void write_skill(std::ostream& out, const Skill& skill) {
    out << "skill v1 K=" << skill.k << " T=" << skill.t << " eps=" << format_real(skill.eps)
        << " p=" << format_real(skill.saved_performance) << "\n";
    out << "activation " << format_real(skill.activation_center.x) << ' ' << format_real(skill.activation_center.y)
        << "\n";
    out << "target " << format_real(skill.target_center.x) << ' ' << format_real(skill.target_center.y) << "\n";
    nn::write_mlp(out, skill.policy.actor);
}

namespace {

State read_point(LineReader& reader, const std::string& tag) {
    auto toks = reader.expect_tokens(tag + " line");
    if (toks.size() != 3 || toks[0] != tag) reader.fail("expected '" + tag + " <x> <y>'");
    try {
        return {parse_real(toks[1]), parse_real(toks[2])};
    } catch (const std::invalid_argument& e) {
        reader.fail(e.what());
    }
}

}  // namespace

Skill read_skill(LineReader& reader) {
    auto header = reader.expect_tokens("skill header");
    if (header.size() < 2 || header[0] != "skill" || header[1] != "v1") reader.fail("expected 'skill v1' header");
    auto fields = header_fields(header);
    Skill skill;
    try {
        skill.k = parse_uint(require_field(fields, "K", reader));
        skill.t = parse_uint(require_field(fields, "T", reader));
        skill.eps = parse_real(require_field(fields, "eps", reader));
        if (auto it = fields.find("p"); it != fields.end()) skill.saved_performance = parse_real(it->second);
    } catch (const std::invalid_argument& e) {
        reader.fail(e.what());
    }
    if (skill.k >= skill.t) reader.fail("skill start index must be below its target index");
    skill.activation_center = read_point(reader, "activation");
    skill.target_center = read_point(reader, "target");
    skill.policy.actor = nn::read_mlp<Real>(reader);
    skill.policy.obs = {skill.target_center, 1.0};
    return skill;
}

void write_chain(std::ostream& out, const SkillChain& chain) {
    out << "chain v1 n=" << chain.size() << " eps=" << format_real(chain.eps) << "\n";
    for (const auto& s : chain.skills) write_skill(out, s);
}

SkillChain read_chain(std::istream& in, const std::string& source) {
    LineReader reader(in, source);
    auto header = reader.expect_tokens("chain header");
    if (header.size() < 2 || header[0] != "chain" || header[1] != "v1") reader.fail("expected 'chain v1' header");
    auto fields = header_fields(header);
    SkillChain chain;
    std::size_t n = 0;
    try {
        n = parse_uint(require_field(fields, "n", reader));
        chain.eps = parse_real(require_field(fields, "eps", reader));
    } catch (const std::invalid_argument& e) {
        reader.fail(e.what());
    }
    for (std::size_t i = 0; i < n; ++i) {
        chain.skills.push_back(read_skill(reader));
        if (i > 0 && chain.skills[i - 1].t != chain.skills[i].k) reader.fail("chain skills are not contiguous");
    }
    return chain;
}

}  // namespace pbcs
