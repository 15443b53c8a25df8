#include "rlapps/apps.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "common/error.hpp"

namespace ranopt::rlapps {

namespace {

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

bool link_ok(const netsim::Network& net, std::size_t ue, std::size_t b, double min_sinr_db) {
    if (!net.active(b)) return false;
    return b == net.macro_index() || net.sinr_db(ue, b) >= min_sinr_db;
}

} // namespace

double steering_reward(const SteeringConfig& cfg, const traffic::TrafficClassSpec& spec,
                       const netsim::FlowOutcome& out, double frame_s) {
    const std::int64_t total = out.served_bits + out.dropped_bits;
    if (total == 0) return 0.0;
    const double tput_mbps = static_cast<double>(out.served_bits) / frame_s * 1e-6;
    const double budget = spec.qos_delay_budget_ms;
    const double delay = (out.delay_bit_ms + static_cast<double>(out.dropped_bits) * budget) / static_cast<double>(total);
    return cfg.w_t * std::min(1.0, tput_mbps / spec.qos_throughput_mbps) - cfg.w_d * std::min(1.0, delay / budget);
}

// ---------------------------------------------------------------- steering

SteeringXApp::SteeringXApp(SteeringConfig cfg, int num_candidates)
    : cfg_(std::move(cfg)), ncand_(num_candidates),
      agent_(std::make_unique<DqnAgent>(3 + 2 * num_candidates, num_candidates, cfg_.dqn)) {
    if (num_candidates < 1) throw Error("rlapps", "steering needs at least one candidate");
}

void SteeringXApp::replace_agent(DqnAgent a) {
    if (a.state_dim() != state_dim() || a.num_actions() != ncand_)
        throw Error("rlapps", "steering agent shape does not match the scenario");
    agent_ = std::make_unique<DqnAgent>(std::move(a));
}

double SteeringXApp::load_share(const netsim::Network& net, std::size_t flow, std::size_t b, std::int64_t bits) {
    if (bits <= 0) return 0.0;
    const double rate = net.peak_rate_mbps(net.ue_of_flow(flow), b) * 1e6 * net.options().frame_ms * 1e-3;
    return rate > 0.0 ? static_cast<double>(bits) / rate : 0.0;
}

std::vector<double> SteeringXApp::projected_loads(const netsim::Network& net, std::span<const std::int64_t> demand,
                                                  std::span<const std::size_t> assignment) {
    std::vector<double> l(net.num_bs(), 0.0);
    for (std::size_t f = 0; f < demand.size(); ++f)
        if (demand[f] > 0 && net.active(assignment[f])) l[assignment[f]] += load_share(net, f, assignment[f], demand[f]);
    return l;
}

std::vector<double> SteeringXApp::state(const netsim::Network& net, std::size_t flow, std::span<const double> bs_load) const {
    std::vector<double> s(static_cast<std::size_t>(state_dim()), 0.0);
    s[static_cast<std::size_t>(net.flow_spec(flow).name)] = 1.0;
    const std::size_t ue = net.ue_of_flow(flow);
    const auto& cand = net.candidates(ue);
    for (int i = 0; i < ncand_; ++i) {
        double load = 1.0, sinr = 0.0;
        if (static_cast<std::size_t>(i) < cand.size() && net.active(cand[static_cast<std::size_t>(i)])) {
            const std::size_t b = cand[static_cast<std::size_t>(i)];
            load = std::clamp(bs_load[b], 0.0, cfg_.load_clip) / cfg_.load_clip;
            sinr = clamp01((net.sinr_db(ue, b) - cfg_.sinr_min_db) / (cfg_.sinr_max_db - cfg_.sinr_min_db));
        }
        s[static_cast<std::size_t>(3 + i)] = load;
        s[static_cast<std::size_t>(3 + ncand_ + i)] = sinr;
    }
    return s;
}

std::vector<std::uint8_t> SteeringXApp::valid_actions(const netsim::Network& net, std::size_t ue) const {
    std::vector<std::uint8_t> v(static_cast<std::size_t>(ncand_), 0);
    const auto& cand = net.candidates(ue);
    for (int i = 0; i < ncand_; ++i)
        if (static_cast<std::size_t>(i) < cand.size() && link_ok(net, ue, cand[static_cast<std::size_t>(i)], cfg_.min_link_sinr_db)) v[static_cast<std::size_t>(i)] = 1;
    return v;
}

std::vector<std::size_t> SteeringXApp::decide(const netsim::Network& net, std::span<const std::int64_t> demand, bool learn) {
    if (!active_) throw ConstraintViolation("rlapps", "steering xApp invoked while inactive");
    if (demand.size() != net.num_flows()) throw Error("rlapps", "demand size does not match the flow count");
    auto assign = net.default_assignment();
    if (prev_assign_.size() == assign.size())
        for (std::size_t f = 0; f < assign.size(); ++f)
            if (net.active(prev_assign_[f])) assign[f] = prev_assign_[f];
    pending_.clear();

    auto loads = projected_loads(net, demand, assign);
    for (std::size_t f = 0; f < demand.size(); ++f) {
        if (demand[f] <= 0) continue;
        loads[assign[f]] -= load_share(net, f, assign[f], demand[f]);
        auto s = state(net, f, loads);
        const auto valid = valid_actions(net, net.ue_of_flow(f));
        int a;
        if (std::count(valid.begin(), valid.end(), 1) == 1)
            a = static_cast<int>(std::find(valid.begin(), valid.end(), 1) - valid.begin());
        else
            a = learn ? agent_->act(s, valid) : agent_->greedy(s, valid);
        const std::size_t b = net.candidates(net.ue_of_flow(f))[static_cast<std::size_t>(a)];
        assign[f] = b;
        const double share = load_share(net, f, b, demand[f]);
        loads[b] += share;
        if (learn) pending_.push_back({f, std::move(s), a, share});
    }
    prev_assign_ = assign;
    last_loads_ = std::move(loads);
    return assign;
}

double SteeringXApp::feedback(const netsim::Network& net, const netsim::FrameResult& res) {
    const double frame_s = net.options().frame_ms * 1e-3;
    double sum = 0.0;
    auto loads = last_loads_;
    for (const auto& p : pending_) {
        const double r = steering_reward(cfg_, net.flow_spec(p.flow), res.flows[p.flow], frame_s);
        sum += r;
        Transition t;
        t.state = p.state;
        t.action = p.action;
        t.reward = r;
        const std::size_t b = prev_assign_[p.flow];
        loads[b] -= p.share;
        t.next_state = state(net, p.flow, loads);
        loads[b] += p.share;
        t.next_valid = valid_actions(net, net.ue_of_flow(p.flow));
        agent_->observe(t);
    }
    const double mean = pending_.empty() ? 0.0 : sum / static_cast<double>(pending_.size());
    pending_.clear();
    return mean;
}

// ---------------------------------------------------------------- sleeping

std::string to_string(SleepReward r) { return r == SleepReward::NetworkEe ? "network_ee" : "per_bs_sum"; }

SleepReward sleep_reward_from_string(const std::string& s) {
    if (s == "network_ee") return SleepReward::NetworkEe;
    if (s == "per_bs_sum") return SleepReward::PerBsSum;
    throw Error("rlapps", "unknown sleeping reward form '" + s + "' (network_ee | per_bs_sum)");
}

double sleeping_reward(const SleepingConfig& cfg, const netsim::FrameResult& res, double frame_s) {
    double eff = 0.0;
    int overloaded = 0;
    if (cfg.reward == SleepReward::NetworkEe) {
        eff = res.kpi.energy_efficiency;
    } else {
        for (const auto& b : res.bs)
            if (b.power_w > 0.0) eff += static_cast<double>(b.served_bits) * 1e-6 / (b.power_w * frame_s);
    }
    for (const auto& b : res.bs)
        if (b.overloaded) ++overloaded;
    return eff - cfg.lambda * overloaded;
}

SleepingRApp::SleepingRApp(SleepingConfig cfg, std::size_t num_bs) : cfg_(std::move(cfg)), nbs_(num_bs) {
    if (num_bs < 2 || num_bs > 17) throw Error("rlapps", "sleeping rApp supports 1 to 16 small cells");
    if (cfg_.epoch_frames < 1) throw Error("rlapps", "epoch_frames must be >= 1");
    agent_ = std::make_unique<DqnAgent>(state_dim(), num_actions(), cfg_.dqn);
}

void SleepingRApp::replace_agent(DqnAgent a) {
    if (a.state_dim() != state_dim() || a.num_actions() != num_actions())
        throw Error("rlapps", "sleeping agent shape does not match the scenario");
    agent_ = std::make_unique<DqnAgent>(std::move(a));
}

std::vector<double> SleepingRApp::state(const netsim::Network& net, double time_of_day_s) const {
    if (net.num_bs() != nbs_) throw Error("rlapps", "network size does not match the sleeping rApp");
    std::vector<double> s(static_cast<std::size_t>(state_dim()), 0.0);
    const auto& stats = net.last_bs_stats();
    for (std::size_t b = 0; b < nbs_; ++b) {
        const double l = stats.empty() ? 0.0 : stats[b].load;
        s[b] = std::clamp(l, 0.0, cfg_.load_clip) / cfg_.load_clip;
        s[nbs_ + b] = clamp01(static_cast<double>(net.queued_bits(b)) * 1e-6 / cfg_.queue_scale_mbit);
    }
    const double ang = 2.0 * std::numbers::pi * time_of_day_s / traffic::kDaySeconds;
    s[2 * nbs_] = std::sin(ang);
    s[2 * nbs_ + 1] = std::cos(ang);
    return s;
}

void SleepingRApp::apply_mask(netsim::Network& net, std::uint32_t mask) {
    std::size_t bit = 0;
    for (std::size_t b = 0; b < net.num_bs(); ++b) {
        if (b == net.macro_index()) continue;
        net.set_sleep(b, (mask >> bit) & 1u);
        ++bit;
    }
    if ((mask >> bit) != 0) throw Error("rlapps", "sleep mask has bits beyond the small-cell count");
}

bool SleepingRApp::on_frame(netsim::Network& net, double time_of_day_s, bool learn) {
    if (!active_) throw ConstraintViolation("rlapps", "sleeping rApp invoked while inactive");
    if (frame_in_epoch_ > 0 && frame_in_epoch_ < cfg_.epoch_frames) {
        ++frame_in_epoch_;
        return false;
    }
    auto s = state(net, time_of_day_s);
    if (open_ && acc_n_ > 0) {
        last_reward_ = acc_ / acc_n_;
        reward_total_ += last_reward_;
        ++epochs_;
        if (learn) {
            Transition t;
            t.state = open_state_;
            t.action = open_action_;
            t.reward = last_reward_;
            t.next_state = s;
            agent_->observe(t);
        }
    }
    const int a = learn ? agent_->act(s) : agent_->greedy(s);
    mask_ = static_cast<std::uint32_t>(a);
    apply_mask(net, mask_);
    open_ = true;
    open_state_ = std::move(s);
    open_action_ = a;
    acc_ = 0.0;
    acc_n_ = 0;
    frame_in_epoch_ = 1;
    return true;
}

void SleepingRApp::after_frame(const netsim::FrameResult& res, double frame_s) {
    if (!open_) return;
    acc_ += sleeping_reward(cfg_, res, frame_s);
    ++acc_n_;
}

void SleepingRApp::deactivate(netsim::Network& net) {
    apply_mask(net, 0);
    mask_ = 0;
    open_ = false;
    acc_ = 0.0;
    acc_n_ = 0;
    frame_in_epoch_ = 0;
    active_ = false;
}

} // namespace ranopt::rlapps
