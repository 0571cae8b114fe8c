#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "pbcs/maze.hpp"
#include "pbcs/nn.hpp"

namespace pbcs {

/// Scalar type used for all trained networks.
using Real = float;
using Net = nn::Mlp<Real>;

struct Transition {
    State s;
    Action a;
    double r = 0.0;
    State s_next;
    bool terminal = false;
};

/// Fixed-capacity ring of transitions, sampled uniformly with replacement.
class ReplayBuffer {
public:
    ReplayBuffer(std::size_t capacity, std::uint64_t seed);

    void push(const Transition& t);
    void clear();
    std::size_t size() const { return data_.size(); }
    std::size_t capacity() const { return capacity_; }
    const Transition& at(std::size_t i) const { return data_.at(i); }

    std::vector<std::size_t> sample_indices(std::size_t n);
    std::vector<Transition> sample(std::size_t n);

private:
    std::size_t capacity_;
    std::size_t head_ = 0;
    std::vector<Transition> data_;
    std::mt19937_64 rng_;
};

/// Affine map from world coordinates to network inputs: (s - origin) * scale.
struct ObsEncoding {
    State origin;
    double scale = 1.0;

    friend bool operator==(const ObsEncoding&, const ObsEncoding&) = default;
};

/// A deterministic actor together with the input encoding it was trained with.
struct Policy {
    Net actor;
    ObsEncoding obs;

    Action operator()(const State& s) const;
};

enum class AgentKind { Ddpg, Td3 };
enum class ActorUpdate { PolicyGradient, ArgmaxSampling };

std::string to_string(AgentKind k);
AgentKind agent_kind_from_string(const std::string& s);

struct AgentConfig {
    AgentKind kind = AgentKind::Ddpg;
    double gamma = 0.99;
    double exploration_noise = 0.02;
    double polyak = 0.005;
    std::size_t batch_size = 64;
    std::size_t buffer_capacity = 1'000'000;
    std::vector<int> hidden{64, 64};
    double actor_lr = 1e-4;
    double critic_lr = 1e-3;
    // TD3 only
    int policy_delay = 2;
    double target_noise = 0.02;
    double target_noise_clip = 0.05;
    // argmax-actor variant
    ActorUpdate actor_update = ActorUpdate::PolicyGradient;
    int argmax_samples = 64;
    ObsEncoding obs;
};

struct UpdateStats {
    bool updated = false;
    bool actor_updated = false;
    double critic_loss = 0.0;
    double actor_objective = 0.0;
};

/// Off-policy actor-critic agent. AgentKind::Ddpg keeps one critic;
/// AgentKind::Td3 adds a twin critic, target-policy smoothing and delayed
/// actor updates.
class Agent {
public:
    Agent(const AgentConfig& config, std::uint64_t seed);

    const AgentConfig& config() const { return config_; }

    /// Actor output plus N(0, noise_scale^2) per component, clipped to the box.
    Action act(const State& s, double noise_scale);
    Action policy_action(const State& s) const;
    Policy policy() const { return {actor_, config_.obs}; }

    void observe(const Transition& t) { buffer_.push(t); }
    ReplayBuffer& buffer() { return buffer_; }
    const ReplayBuffer& buffer() const { return buffer_; }

    /// One gradient step on a batch drawn from the buffer; a no-op
    /// (updated == false) while the buffer holds fewer than batch_size.
    UpdateStats update();

    UpdateStats ddpg_update(std::span<const Transition> batch);
    UpdateStats td3_update(std::span<const Transition> batch);
    /// Replaces the actor step: regress pi(s) toward the best of
    /// `samples_per_state` uniform actions under the live critic.
    double argmax_actor_update(std::span<const Transition> batch, int samples_per_state);

    /// Bootstrapped regression targets y = r + gamma (1 - terminal) Q'(s', pi'(s')),
    /// computed from target networks only. TD3 applies smoothing noise.
    std::vector<double> critic_targets(std::span<const Transition> batch);

    Net& actor() { return actor_; }
    Net& critic() { return critic_; }
    Net& critic2() { return critic2_; }
    Net& actor_target() { return actor_target_; }
    Net& critic_target() { return critic_target_; }
    Net& critic2_target() { return critic2_target_; }
    const Net& actor() const { return actor_; }
    const Net& critic() const { return critic_; }

    std::uint64_t update_calls() const { return update_calls_; }

    void write(std::ostream& out) const;
    static Agent read(std::istream& in, const std::string& source = "<agent>");

    std::mt19937_64& rng() { return rng_; }

private:
    Net::Matrix encode_states(std::span<const Transition> batch, bool next) const;
    Net::Matrix critic_input(const Net::Matrix& obs, const Net::Matrix& actions) const;
    double fit_critic(Net& critic, nn::AdamState<Real>& adam, const Net::Matrix& input, const Net::Matrix& targets);
    double policy_gradient_step(const Net::Matrix& obs);
    void soft_update_targets();

    AgentConfig config_;
    Net actor_, critic_, critic2_;
    Net actor_target_, critic_target_, critic2_target_;
    nn::AdamState<Real> actor_adam_, critic_adam_, critic2_adam_;
    ReplayBuffer buffer_;
    std::mt19937_64 rng_;
    std::uint64_t update_calls_ = 0;
};

}  // namespace pbcs
