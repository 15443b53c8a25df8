#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "common/rng.hpp"
#include "forecast/model.hpp"
#include "forecast/train.hpp"

namespace ranopt::rlapps {

using forecast::Mat;

struct EpsilonSchedule {
    double start = 1.0;
    double end = 0.05;
    long decay_steps = 20000; // counted from the end of the uniform phase
};

struct DqnConfig {
    double gamma = 0.9;
    double alpha = 0.5;  // Adam step size
    int batch_size = 32;
    long initial_explore_steps = 3000;
    long target_sync_every = 1000; // in gradient updates
    EpsilonSchedule epsilon{};
    std::size_t buffer_capacity = 50000;
    std::vector<int> hidden_dims{64, 64};
    double grad_clip = 10.0; // global L2 bound, <= 0 disables
    int train_every = 1;     // environment steps per gradient update
    std::uint64_t seed = 1;

    void validate() const;
    /// Exploration rate after `step` environment steps (1 during the uniform phase).
    double epsilon_at(long step) const;
};

nlohmann::json to_json(const DqnConfig& c);
/// Strict: unknown keys throw. Missing keys keep `base` values.
DqnConfig dqn_from_json(const nlohmann::json& j, DqnConfig base = {});

struct Transition {
    std::vector<double> state;
    int action = 0;
    double reward = 0.0;
    std::vector<double> next_state;
    bool terminal = false;
    std::vector<std::uint8_t> next_valid; // empty: every action valid
};

/// Fully connected ReLU network mapping a state to one Q value per action.
class QNetwork {
public:
    QNetwork(int state_dim, int num_actions, const std::vector<int>& hidden, std::uint64_t seed);

    int state_dim() const { return state_dim_; }
    int num_actions() const { return num_actions_; }
    forecast::ParamSet& params() { return ps_; }
    const forecast::ParamSet& params() const { return ps_; }

    /// states: B x state_dim. Returns B x num_actions.
    Mat forward(const Mat& states) const;
    std::vector<double> q_values(std::span<const double> state) const;

    /// One optimizer step on mean((Q(s_i, a_i) - y_i)^2). Returns the loss before the step.
    double fit(const Mat& states, std::span<const int> actions, std::span<const double> targets,
               forecast::Adam& opt, double grad_clip);

    /// Exact parameter copy; shapes must match.
    void copy_from(const QNetwork& other);

private:
    int state_dim_, num_actions_;
    forecast::ParamSet ps_;
    std::vector<forecast::Linear> layers_;
};

/// Lowest-index argmax over valid actions (empty mask: all valid).
int greedy_action(std::span<const double> q, std::span<const std::uint8_t> valid = {});

/// Uniform while step < initial_explore_steps, epsilon-greedy afterwards.
int select_action(std::span<const double> q, long step, const DqnConfig& cfg, Rng& rng,
                  std::span<const std::uint8_t> valid = {});
int act(const QNetwork& qnet, std::span<const double> state, long step, const DqnConfig& cfg, Rng& rng,
        std::span<const std::uint8_t> valid = {});

/// y = r for terminal transitions, r + gamma * max_a Q_target(s', a) otherwise.
std::vector<double> td_targets(std::span<const Transition> batch, const QNetwork& target, double gamma);

/// Fixed-capacity FIFO store sampled uniformly with replacement.
class ReplayBuffer {
public:
    ReplayBuffer(std::size_t capacity, int state_dim, int num_actions);

    void push(const Transition& t);
    std::size_t size() const { return size_; }
    std::size_t capacity() const { return capacity_; }
    /// i-th oldest stored transition.
    Transition at(std::size_t i) const;
    std::vector<Transition> sample(std::size_t n, Rng& rng) const;

private:
    std::size_t capacity_, size_ = 0, head_ = 0;
    int sdim_, nact_;
    std::vector<double> s_, s2_, r_;
    std::vector<int> a_;
    std::vector<std::uint8_t> term_, valid_, has_valid_;
};

/// One gradient step on a uniform batch; every target_sync_every-th update
/// copies online into target. Returns nullopt (and does nothing) when the
/// buffer holds fewer than batch_size transitions.
std::optional<double> train_step(QNetwork& online, QNetwork& target, const ReplayBuffer& buffer, const DqnConfig& cfg,
                                 forecast::Adam& opt, Rng& rng, long& updates);

/// Online and target networks, replay memory and step counters.
class DqnAgent {
public:
    DqnAgent(int state_dim, int num_actions, DqnConfig cfg);

    const DqnConfig& config() const { return cfg_; }
    int state_dim() const { return online_.state_dim(); }
    int num_actions() const { return online_.num_actions(); }
    long steps() const { return steps_; }
    long updates() const { return updates_; }
    double epsilon() const { return cfg_.epsilon_at(steps_); }
    const QNetwork& online() const { return online_; }
    QNetwork& online() { return online_; }
    const QNetwork& target() const { return target_; }
    const ReplayBuffer& buffer() const { return buffer_; }

    int act(std::span<const double> state, std::span<const std::uint8_t> valid = {});
    int greedy(std::span<const double> state, std::span<const std::uint8_t> valid = {}) const;
    /// Actions for B states at the current step. explore=false is greedy.
    std::vector<int> act_batch(const Mat& states, const std::vector<std::vector<std::uint8_t>>& valid, bool explore);

    /// Stores a transition, advances the step counter and trains every train_every steps.
    void observe(const Transition& t);
    std::optional<double> train_step();

    /// Mean loss since the last call (NaN when no update happened).
    double take_mean_loss();

    void save(const std::string& path, const std::string& app) const;
    static DqnAgent load(const std::string& path, const std::string& app);

private:
    DqnConfig cfg_;
    QNetwork online_, target_;
    ReplayBuffer buffer_;
    forecast::Adam opt_;
    Rng act_rng_, sample_rng_;
    long steps_ = 0, updates_ = 0;
    double loss_sum_ = 0.0;
    long loss_n_ = 0;
};

struct EpisodeRecord {
    int episode = 0;
    long steps = 0;
    long updates = 0;
    double mean_reward = 0.0;
    double epsilon = 0.0;
    double mean_loss = 0.0;
};

void write_reward_csv(const std::string& path, const std::vector<EpisodeRecord>& rows);

} // namespace ranopt::rlapps
