#include "pbcs/agents.hpp"

#include <algorithm>
#include <istream>
#include <ostream>

#include "pbcs/seeding.hpp"
#include "pbcs/textio.hpp"

namespace pbcs {

ReplayBuffer::ReplayBuffer(std::size_t capacity, std::uint64_t seed) : capacity_(capacity), rng_(seed) {
    if (capacity == 0) throw std::invalid_argument("replay buffer capacity must be positive");
}

void ReplayBuffer::push(const Transition& t) {
    if (data_.size() < capacity_) {
        data_.push_back(t);
    } else {
        data_[head_] = t;
    }
    head_ = (head_ + 1) % capacity_;
}

void ReplayBuffer::clear() {
    data_.clear();
    head_ = 0;
}

std::vector<std::size_t> ReplayBuffer::sample_indices(std::size_t n) {
    if (data_.empty()) throw std::logic_error("sampling from an empty replay buffer");
    std::uniform_int_distribution<std::size_t> pick(0, data_.size() - 1);
    std::vector<std::size_t> out(n);
    for (auto& i : out) i = pick(rng_);
    return out;
}

std::vector<Transition> ReplayBuffer::sample(std::size_t n) {
    std::vector<Transition> out;
    out.reserve(n);
    for (std::size_t i : sample_indices(n)) out.push_back(data_[i]);
    return out;
}

namespace {

Net::Matrix encode_one(const State& s, const ObsEncoding& obs) {
    Net::Matrix m(2, 1);
    m(0, 0) = static_cast<Real>((s.x - obs.origin.x) * obs.scale);
    m(1, 0) = static_cast<Real>((s.y - obs.origin.y) * obs.scale);
    return m;
}

Action to_action(const Net::Matrix& out, Eigen::Index col) {
    return clip_action({static_cast<double>(out(0, col)), static_cast<double>(out(1, col))});
}

Net make_actor(const AgentConfig& c) {
    std::vector<int> sizes{2};
    sizes.insert(sizes.end(), c.hidden.begin(), c.hidden.end());
    sizes.push_back(2);
    return Net(sizes, nn::OutputActivation::ScaledTanh, static_cast<Real>(kActionBound));
}

Net make_critic(const AgentConfig& c) {
    std::vector<int> sizes{4};
    sizes.insert(sizes.end(), c.hidden.begin(), c.hidden.end());
    sizes.push_back(1);
    return Net(sizes, nn::OutputActivation::Identity);
}

}  // namespace

Action Policy::operator()(const State& s) const { return to_action(actor.forward(encode_one(s, obs)), 0); }

std::string to_string(AgentKind k) { return k == AgentKind::Ddpg ? "ddpg" : "td3"; }

AgentKind agent_kind_from_string(const std::string& s) {
    if (s == "ddpg") return AgentKind::Ddpg;
    if (s == "td3") return AgentKind::Td3;
    throw std::invalid_argument("unknown agent kind '" + s + "'");
}

Agent::Agent(const AgentConfig& config, std::uint64_t seed)
    : config_(config),
      actor_(make_actor(config)),
      critic_(make_critic(config)),
      critic2_(make_critic(config)),
      buffer_(config.buffer_capacity, derive_seed(seed, "replay")),
      rng_(derive_seed(seed, "agent")) {
    if (!(config.gamma > 0.0 && config.gamma < 1.0)) throw std::invalid_argument("discount must lie in (0, 1)");
    if (config.policy_delay < 1) throw std::invalid_argument("policy delay must be >= 1");
    if (config.batch_size == 0) throw std::invalid_argument("batch size must be positive");
    std::mt19937_64 init(derive_seed(seed, "init"));
    actor_.init_uniform(init);
    critic_.init_uniform(init);
    if (config.kind == AgentKind::Td3) critic2_.init_uniform(init);
    actor_target_ = actor_;
    critic_target_ = critic_;
    critic2_target_ = critic2_;
    actor_adam_ = nn::AdamState<Real>(actor_, config.actor_lr);
    critic_adam_ = nn::AdamState<Real>(critic_, config.critic_lr);
    critic2_adam_ = nn::AdamState<Real>(critic2_, config.critic_lr);
}

Action Agent::policy_action(const State& s) const { return to_action(actor_.forward(encode_one(s, config_.obs)), 0); }

Action Agent::act(const State& s, double noise_scale) {
    Action a = policy_action(s);
    if (noise_scale > 0.0) {
        std::normal_distribution<double> noise(0.0, noise_scale);
        a.dx += noise(rng_);
        a.dy += noise(rng_);
    }
    return clip_action(a);
}

Net::Matrix Agent::encode_states(std::span<const Transition> batch, bool next) const {
    Net::Matrix m(2, static_cast<Eigen::Index>(batch.size()));
    for (std::size_t j = 0; j < batch.size(); ++j) {
        const State& s = next ? batch[j].s_next : batch[j].s;
        m(0, static_cast<Eigen::Index>(j)) = static_cast<Real>((s.x - config_.obs.origin.x) * config_.obs.scale);
        m(1, static_cast<Eigen::Index>(j)) = static_cast<Real>((s.y - config_.obs.origin.y) * config_.obs.scale);
    }
    return m;
}

Net::Matrix Agent::critic_input(const Net::Matrix& obs, const Net::Matrix& actions) const {
    Net::Matrix in(4, obs.cols());
    in.topRows(2) = obs;
    in.bottomRows(2) = actions * static_cast<Real>(1.0 / kActionBound);
    return in;
}

std::vector<double> Agent::critic_targets(std::span<const Transition> batch) {
    const auto n = static_cast<Eigen::Index>(batch.size());
    const Net::Matrix obs2 = encode_states(batch, true);
    Net::Matrix a2 = actor_target_.forward(obs2);
    if (config_.kind == AgentKind::Td3 && config_.target_noise > 0.0) {
        std::normal_distribution<double> noise(0.0, config_.target_noise);
        const double c = config_.target_noise_clip;
        for (Eigen::Index j = 0; j < n; ++j) {
            for (Eigen::Index i = 0; i < 2; ++i) {
                const double e = std::clamp(noise(rng_), -c, c);
                a2(i, j) = static_cast<Real>(std::clamp(a2(i, j) + e, -kActionBound, kActionBound));
            }
        }
    }
    const Net::Matrix in2 = critic_input(obs2, a2);
    Net::Matrix q = critic_target_.forward(in2);
    if (config_.kind == AgentKind::Td3) q = q.cwiseMin(critic2_target_.forward(in2));

    std::vector<double> y(batch.size());
    for (std::size_t j = 0; j < batch.size(); ++j) {
        const double bootstrap = batch[j].terminal ? 0.0 : config_.gamma * static_cast<double>(q(0, static_cast<Eigen::Index>(j)));
        y[j] = batch[j].r + bootstrap;
    }
    return y;
}

double Agent::fit_critic(Net& critic, nn::AdamState<Real>& adam, const Net::Matrix& input, const Net::Matrix& targets) {
    Net::Tape tape;
    const Net::Matrix q = critic.forward(input, &tape);
    const Net::Matrix diff = q - targets;
    const auto n = static_cast<Real>(input.cols());
    Net::Vector grad;
    critic.backward(tape, diff * (Real(2) / n), &grad);
    nn::adam_step(critic, grad, adam);
    return static_cast<double>(diff.squaredNorm() / n);
}

double Agent::policy_gradient_step(const Net::Matrix& obs) {
    const auto n = obs.cols();
    Net::Tape actor_tape, critic_tape;
    const Net::Matrix actions = actor_.forward(obs, &actor_tape);
    const Net::Matrix q = critic_.forward(critic_input(obs, actions), &critic_tape);
    // ascend mean Q: upstream of the loss -mean(Q)
    const Net::Matrix up = Net::Matrix::Constant(1, n, Real(-1) / static_cast<Real>(n));
    const Net::Matrix d_input = critic_.backward(critic_tape, up, nullptr);
    const Net::Matrix d_action = d_input.bottomRows(2) * static_cast<Real>(1.0 / kActionBound);
    Net::Vector grad;
    actor_.backward(actor_tape, d_action, &grad);
    nn::adam_step(actor_, grad, actor_adam_);
    return static_cast<double>(q.mean());
}

double Agent::argmax_actor_update(std::span<const Transition> batch, int samples_per_state) {
    if (samples_per_state < 1) throw std::invalid_argument("argmax actor update needs at least one sample per state");
    const auto n = static_cast<Eigen::Index>(batch.size());
    const Eigen::Index k = samples_per_state;
    const Net::Matrix obs = encode_states(batch, false);

    Net::Matrix candidates(2, n * k);
    std::uniform_real_distribution<double> u(-kActionBound, kActionBound);
    for (Eigen::Index c = 0; c < n * k; ++c) {
        candidates(0, c) = static_cast<Real>(u(rng_));
        candidates(1, c) = static_cast<Real>(u(rng_));
    }
    Net::Matrix obs_rep(2, n * k);
    for (Eigen::Index j = 0; j < n; ++j) obs_rep.middleCols(j * k, k) = obs.col(j).replicate(1, k);
    const Net::Matrix q = critic_.forward(critic_input(obs_rep, candidates));

    Net::Matrix best(2, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        Eigen::Index arg = 0;
        for (Eigen::Index c = 1; c < k; ++c) {
            if (q(0, j * k + c) > q(0, j * k + arg)) arg = c;
        }
        best.col(j) = candidates.col(j * k + arg);
    }

    Net::Tape tape;
    const Net::Matrix pi = actor_.forward(obs, &tape);
    const Net::Matrix diff = pi - best;
    Net::Vector grad;
    actor_.backward(tape, diff * (Real(2) / static_cast<Real>(n)), &grad);
    nn::adam_step(actor_, grad, actor_adam_);
    return static_cast<double>(diff.squaredNorm() / static_cast<Real>(n));
}

void Agent::soft_update_targets() {
    nn::soft_update(actor_target_, actor_, config_.polyak);
    nn::soft_update(critic_target_, critic_, config_.polyak);
    if (config_.kind == AgentKind::Td3) nn::soft_update(critic2_target_, critic2_, config_.polyak);
}

UpdateStats Agent::ddpg_update(std::span<const Transition> batch) {
    UpdateStats stats;
    if (batch.empty()) return stats;
    ++update_calls_;
    const auto n = static_cast<Eigen::Index>(batch.size());
    const std::vector<double> y = critic_targets(batch);
    Net::Matrix targets(1, n), actions(2, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        targets(0, j) = static_cast<Real>(y[static_cast<std::size_t>(j)]);
        actions(0, j) = static_cast<Real>(batch[static_cast<std::size_t>(j)].a.dx);
        actions(1, j) = static_cast<Real>(batch[static_cast<std::size_t>(j)].a.dy);
    }
    const Net::Matrix obs = encode_states(batch, false);
    stats.critic_loss = fit_critic(critic_, critic_adam_, critic_input(obs, actions), targets);
    if (config_.actor_update == ActorUpdate::ArgmaxSampling) {
        stats.actor_objective = argmax_actor_update(batch, config_.argmax_samples);
    } else {
        stats.actor_objective = policy_gradient_step(obs);
    }
    soft_update_targets();
    stats.updated = stats.actor_updated = true;
    return stats;
}

UpdateStats Agent::td3_update(std::span<const Transition> batch) {
    UpdateStats stats;
    if (batch.empty()) return stats;
    ++update_calls_;
    const auto n = static_cast<Eigen::Index>(batch.size());
    const std::vector<double> y = critic_targets(batch);
    Net::Matrix targets(1, n), actions(2, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        targets(0, j) = static_cast<Real>(y[static_cast<std::size_t>(j)]);
        actions(0, j) = static_cast<Real>(batch[static_cast<std::size_t>(j)].a.dx);
        actions(1, j) = static_cast<Real>(batch[static_cast<std::size_t>(j)].a.dy);
    }
    const Net::Matrix obs = encode_states(batch, false);
    const Net::Matrix in = critic_input(obs, actions);
    stats.critic_loss = fit_critic(critic_, critic_adam_, in, targets);
    stats.critic_loss += fit_critic(critic2_, critic2_adam_, in, targets);
    stats.updated = true;
    if (update_calls_ % static_cast<std::uint64_t>(config_.policy_delay) == 0) {
        if (config_.actor_update == ActorUpdate::ArgmaxSampling) {
            stats.actor_objective = argmax_actor_update(batch, config_.argmax_samples);
        } else {
            stats.actor_objective = policy_gradient_step(obs);
        }
        soft_update_targets();
        stats.actor_updated = true;
    }
    return stats;
}

UpdateStats Agent::update() {
    if (buffer_.size() < config_.batch_size) return {};
    const std::vector<Transition> batch = buffer_.sample(config_.batch_size);
    return config_.kind == AgentKind::Td3 ? td3_update(batch) : ddpg_update(batch);
}

void Agent::write(std::ostream& out) const {
    out << "agent v1 kind=" << to_string(config_.kind) << " gamma=" << format_real(config_.gamma)
        << " obs=" << format_real(config_.obs.origin.x) << ',' << format_real(config_.obs.origin.y) << ','
        << format_real(config_.obs.scale) << "\n";
    nn::write_mlp(out, actor_);
    nn::write_mlp(out, critic_);
    nn::write_mlp(out, actor_target_);
    nn::write_mlp(out, critic_target_);
    if (config_.kind == AgentKind::Td3) {
        nn::write_mlp(out, critic2_);
        nn::write_mlp(out, critic2_target_);
    }
}

Agent Agent::read(std::istream& in, const std::string& source) {
    LineReader reader(in, source);
    auto header = reader.expect_tokens("agent header");
    if (header.size() < 2 || header[0] != "agent" || header[1] != "v1") reader.fail("expected 'agent v1' header");
    auto fields = header_fields(header);
    AgentConfig config;
    try {
        config.kind = agent_kind_from_string(require_field(fields, "kind", reader));
        config.gamma = parse_real(require_field(fields, "gamma", reader));
        if (auto it = fields.find("obs"); it != fields.end()) {
            std::string v = it->second;
            std::replace(v.begin(), v.end(), ',', ' ');
            auto parts = split_ws(v);
            if (parts.size() != 3) reader.fail("obs field needs three comma-separated values");
            config.obs = {{parse_real(parts[0]), parse_real(parts[1])}, parse_real(parts[2])};
        }
    } catch (const std::invalid_argument& e) {
        reader.fail(e.what());
    }
    Net actor = nn::read_mlp<Real>(reader);
    if (actor.layer_sizes().size() < 2) reader.fail("actor has no layers");
    config.hidden.assign(actor.layer_sizes().begin() + 1, actor.layer_sizes().end() - 1);
    Agent agent(config, 0);
    agent.actor_ = std::move(actor);
    agent.critic_ = nn::read_mlp<Real>(reader);
    agent.actor_target_ = nn::read_mlp<Real>(reader);
    agent.critic_target_ = nn::read_mlp<Real>(reader);
    if (config.kind == AgentKind::Td3) {
        agent.critic2_ = nn::read_mlp<Real>(reader);
        agent.critic2_target_ = nn::read_mlp<Real>(reader);
    }
    if (!agent.actor_.same_shape(agent.actor_target_) || !agent.critic_.same_shape(agent.critic_target_)) {
        reader.fail("target network shapes differ from live networks");
    }
    return agent;
}

}  // namespace pbcs
