#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "netsim/netsim.hpp"
#include "rlapps/dqn.hpp"

namespace ranopt::rlapps {

struct SteeringConfig {
    double w_t = 0.5;
    double w_d = 0.5;
    double load_clip = 2.0;     // loads are clamped to [0, load_clip] then scaled to [0, 1]
    double sinr_min_db = -10.0; // SINR normalization range
    double sinr_max_db = 40.0;
    double min_link_sinr_db = 5.0; // small cells below this SINR are not offered as actions
    DqnConfig dqn{};
};

/// Per-flow reward: w_t min(1, tput/qos_tput) - w_d min(1, delay/budget).
/// Delay is the bit-weighted queueing delay with dropped bits charged the full
/// budget. A flow that saw no traffic scores 0.
double steering_reward(const SteeringConfig& cfg, const traffic::TrafficClassSpec& spec,
                       const netsim::FlowOutcome& out, double frame_s);

/// Traffic-steering xApp: chooses, for every flow carrying new demand this
/// frame, one of the UE's candidate BSs (macro plus strongest small cells).
class SteeringXApp {
public:
    SteeringXApp(SteeringConfig cfg, int num_candidates);

    int num_candidates() const { return ncand_; }
    int state_dim() const { return 3 + 2 * ncand_; }
    const SteeringConfig& config() const { return cfg_; }
    DqnAgent& agent() { return *agent_; }
    const DqnAgent& agent() const { return *agent_; }
    void replace_agent(DqnAgent a);

    bool active() const { return active_; }
    void set_active(bool on) {
        active_ = on;
        if (!on) prev_assign_.clear();
    }

    /// Share of BS b's capacity that `bits` of this flow's demand would use in one frame.
    static double load_share(const netsim::Network& net, std::size_t flow, std::size_t b, std::int64_t bits);
    /// Projected per-BS load of this frame's demand under an assignment.
    static std::vector<double> projected_loads(const netsim::Network& net, std::span<const std::int64_t> demand,
                                               std::span<const std::size_t> assignment);

    /// [class one-hot, candidate loads, candidate SINRs]; loads are per-BS load
    /// excluding this flow. Sleeping candidates read load 1 and SINR 0.
    std::vector<double> state(const netsim::Network& net, std::size_t flow, std::span<const double> bs_load) const;
    std::vector<std::uint8_t> valid_actions(const netsim::Network& net, std::size_t ue) const;

    /// Assignment for the next frame. Flows are placed one at a time in index
    /// order; each sees the projected loads of the others (previous frame's
    /// assignment for flows not yet placed). Flows without demand keep their
    /// previous BS. learn=true explores and remembers decisions for feedback().
    /// Throws ConstraintViolation when the app is not active.
    std::vector<std::size_t> decide(const netsim::Network& net, std::span<const std::int64_t> demand, bool learn);

    /// Scores the last decisions and, when learning, stores the transitions.
    /// Returns the mean reward over decided flows (0 when none).
    double feedback(const netsim::Network& net, const netsim::FrameResult& res);

    /// Forget undelivered decisions (episode end or deactivation).
    void reset_pending() {
        pending_.clear();
        prev_assign_.clear();
    }

private:
    struct Pending {
        std::size_t flow;
        std::vector<double> state;
        int action;
        double share; // own load on the chosen BS
    };
    SteeringConfig cfg_;
    int ncand_;
    std::unique_ptr<DqnAgent> agent_;
    bool active_ = false;
    std::vector<Pending> pending_;
    std::vector<std::size_t> prev_assign_;
    std::vector<double> last_loads_;
};

enum class SleepReward { NetworkEe, PerBsSum };
std::string to_string(SleepReward r);
SleepReward sleep_reward_from_string(const std::string& s);

struct SleepingConfig {
    double lambda = 1.0;
    int epoch_frames = 60;
    SleepReward reward = SleepReward::NetworkEe;
    double load_clip = 2.0;
    double queue_scale_mbit = 10.0; // queue lengths are divided by this and clamped to 1
    DqnConfig dqn{};
};

/// Frame reward of the sleeping rApp: efficiency term (network-wide Mbit/J,
/// or the sum of per-BS Mbit/J) minus lambda per overloaded active BS.
double sleeping_reward(const SleepingConfig& cfg, const netsim::FrameResult& res, double frame_s);

/// Cell-sleeping rApp: once per decision epoch picks a sleep bitmask over the
/// small cells (bit i = i-th non-macro BS in index order).
class SleepingRApp {
public:
    SleepingRApp(SleepingConfig cfg, std::size_t num_bs);

    int state_dim() const { return static_cast<int>(2 * nbs_ + 2); }
    int num_actions() const { return 1 << (nbs_ - 1); }
    const SleepingConfig& config() const { return cfg_; }
    DqnAgent& agent() { return *agent_; }
    const DqnAgent& agent() const { return *agent_; }
    void replace_agent(DqnAgent a);

    bool active() const { return active_; }
    void set_active(bool on) { active_ = on; }

    /// [per-BS load, per-BS queue, sin/cos time of day]
    std::vector<double> state(const netsim::Network& net, double time_of_day_s) const;

    /// Call once per frame while active, before the frame is simulated. At
    /// each epoch boundary closes the previous transition (when learning),
    /// picks a new mask and applies it. Returns true when a decision was made.
    bool on_frame(netsim::Network& net, double time_of_day_s, bool learn);
    /// Accumulates the frame reward for the current epoch.
    void after_frame(const netsim::FrameResult& res, double frame_s);
    /// Wakes every small cell and drops the open epoch.
    void deactivate(netsim::Network& net);

    std::uint32_t mask() const { return mask_; }
    /// Mean frame reward over the last closed epoch.
    double last_epoch_reward() const { return last_reward_; }
    long epochs_closed() const { return epochs_; }
    double reward_sum() const { return reward_total_; }

    static void apply_mask(netsim::Network& net, std::uint32_t mask);

private:
    SleepingConfig cfg_;
    std::size_t nbs_;
    std::unique_ptr<DqnAgent> agent_;
    bool active_ = false;
    std::uint32_t mask_ = 0;
    int frame_in_epoch_ = 0;
    bool open_ = false;
    std::vector<double> open_state_;
    int open_action_ = 0;
    double acc_ = 0.0;
    int acc_n_ = 0;
    double last_reward_ = 0.0;
    double reward_total_ = 0.0;
    long epochs_ = 0;
};

} // namespace ranopt::rlapps
