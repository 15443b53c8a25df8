#include "netsim/netsim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "common/error.hpp"
#include "common/rng.hpp"

namespace ranopt::netsim {

namespace {

constexpr double kThermalDbmPerHz = -174.0;

double db_to_lin(double db) { return std::pow(10.0, db / 10.0); }

} // namespace

double dbm_to_w(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }

double pathloss_db(double distance_m, const PathlossParams& p) {
    const double d = std::max(distance_m, 1.0);
    return p.pl0_db + 10.0 * p.exponent * std::log10(d / p.d0_m);
}

PathlossParams default_pathloss(PathlossModel model) {
    if (model == PathlossModel::UrbanMacro) return {128.1, 3.76, 1000.0};
    return {140.7, 3.67, 1000.0};
}

std::vector<BaseStationConfig> default_topology(double off) {
    std::vector<BaseStationConfig> out;
    BaseStationConfig macro;
    macro.id = "macro";
    macro.rat = Rat::LTE;
    macro.bandwidth_mhz = 10.0;
    macro.carrier_ghz = 0.8;
    macro.max_tx_dbm = 38.0;
    macro.power = {130.0, 4.7, 75.0};
    macro.pathloss = PathlossModel::UrbanMacro;
    macro.is_macro = true;
    out.push_back(macro);
    const double pos[4][2] = {{off, 0.0}, {0.0, off}, {-off, 0.0}, {0.0, -off}};
    for (int i = 0; i < 4; ++i) {
        BaseStationConfig s;
        s.id = "small" + std::to_string(i + 1);
        s.rat = Rat::NR;
        s.bandwidth_mhz = 20.0;
        s.carrier_ghz = 3.5;
        s.max_tx_dbm = 43.0;
        s.power = {56.0, 2.6, 6.0};
        s.pathloss = PathlossModel::UrbanMicro;
        s.x_m = pos[i][0];
        s.y_m = pos[i][1];
        out.push_back(s);
    }
    return out;
}

std::vector<UePosition> place_ues(int n, double radius_m, std::uint64_t seed) {
    Rng rng(derive_seed(seed, {0x0e5ULL}));
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<UePosition> out;
    out.reserve(static_cast<std::size_t>(std::max(n, 0)));
    for (int i = 0; i < n; ++i) {
        const double r = radius_m * std::sqrt(u(rng));
        const double th = 2.0 * std::numbers::pi * u(rng);
        out.push_back({r * std::cos(th), r * std::sin(th)});
    }
    return out;
}

Network::Network(std::vector<BaseStationConfig> stations, std::vector<UePosition> ues,
                 std::vector<const traffic::TrafficClassSpec*> flow_specs, RadioConfig radio, NetworkOptions opts)
    : ues_(std::move(ues)), flow_specs_(std::move(flow_specs)), radio_(radio), opts_(opts) {
    if (stations.empty()) throw Error("netsim", "topology has no base stations");
    if (!(opts_.frame_ms > 0.0) || !(opts_.slot_ms > 0.0)) throw Error("netsim", "frame and slot length must be > 0");
    const double ratio = opts_.frame_ms / opts_.slot_ms;
    slots_per_frame_ = static_cast<int>(std::llround(ratio));
    if (slots_per_frame_ < 1 || std::abs(ratio - slots_per_frame_) > 1e-9)
        throw Error("netsim", "frame length must be a whole number of slots");
    if (!ues_.empty()) {
        if (flow_specs_.size() % ues_.size() != 0) throw Error("netsim", "flows must split evenly over UEs");
        flows_per_ue_ = flow_specs_.size() / ues_.size();
        if (flows_per_ue_ == 0) flows_per_ue_ = 1;
    }

    bool have_macro = false;
    for (std::size_t b = 0; b < stations.size(); ++b) {
        const auto& c = stations[b];
        if (c.power.p_sleep_w >= c.power.p_fixed_w)
            throw Error("netsim", c.id + ": sleep power must be below fixed power");
        if (c.is_macro) {
            if (have_macro) throw Error("netsim", "more than one macro BS");
            have_macro = true;
            macro_ = b;
        }
        Station s;
        s.cfg = c;
        bs_.push_back(std::move(s));
    }
    if (!have_macro) throw Error("netsim", "topology needs a macro BS");

    rx_dbm_.assign(ues_.size(), std::vector<double>(bs_.size(), 0.0));
    for (std::size_t u = 0; u < ues_.size(); ++u) {
        for (std::size_t b = 0; b < bs_.size(); ++b) {
            const auto& c = bs_[b].cfg;
            const double d = std::hypot(ues_[u].x_m - c.x_m, ues_[u].y_m - c.y_m);
            const auto& pl = c.pathloss == PathlossModel::UrbanMacro ? radio_.urban_macro : radio_.urban_micro;
            rx_dbm_[u][b] = c.max_tx_dbm - pathloss_db(d, pl);
        }
    }
    recompute_sinr();

    candidates_.resize(ues_.size());
    for (std::size_t u = 0; u < ues_.size(); ++u) {
        std::vector<std::size_t> smalls;
        for (std::size_t b = 0; b < bs_.size(); ++b)
            if (b != macro_) smalls.push_back(b);
        std::stable_sort(smalls.begin(), smalls.end(),
                         [&](std::size_t a, std::size_t b) { return rx_dbm_[u][a] > rx_dbm_[u][b]; });
        candidates_[u].push_back(macro_);
        const auto keep = std::min<std::size_t>(smalls.size(), static_cast<std::size_t>(std::max(radio_.small_candidates, 0)));
        for (std::size_t i = 0; i < keep; ++i) candidates_[u].push_back(smalls[i]);
    }
    last_bs_.assign(bs_.size(), BsFrameStats{});
}

void Network::recompute_sinr() {
    sinr_db_.assign(ues_.size(), std::vector<double>(bs_.size(), -std::numeric_limits<double>::infinity()));
    rate_.assign(ues_.size(), std::vector<double>(bs_.size(), 0.0));
    const double slot_s = opts_.slot_ms * 1e-3;
    const double cap_lin = db_to_lin(radio_.max_sinr_db);
    for (std::size_t u = 0; u < ues_.size(); ++u) {
        for (std::size_t b = 0; b < bs_.size(); ++b) {
            if (bs_[b].state != BsState::Active) continue;
            const auto& c = bs_[b].cfg;
            const double noise_mw = db_to_lin(kThermalDbmPerHz + 10.0 * std::log10(c.bandwidth_mhz * 1e6) + radio_.noise_figure_db);
            double interf_mw = 0.0;
            if (radio_.interference) {
                for (std::size_t o = 0; o < bs_.size(); ++o) {
                    if (o == b || bs_[o].state != BsState::Active) continue;
                    const auto& oc = bs_[o].cfg;
                    if (oc.rat != c.rat || oc.carrier_ghz != c.carrier_ghz) continue;
                    const double activity = radio_.load_coupled ? bs_[o].last_used : 1.0;
                    interf_mw += activity * db_to_lin(rx_dbm_[u][o]);
                }
            }
            const double sinr = db_to_lin(rx_dbm_[u][b]) / (noise_mw + interf_mw);
            sinr_db_[u][b] = 10.0 * std::log10(sinr);
            const double se = radio_.efficiency * std::log2(1.0 + std::min(sinr, cap_lin));
            rate_[u][b] = c.bandwidth_mhz * 1e6 * se * slot_s;
        }
    }
}

double Network::sinr_db(std::size_t ue, std::size_t b) const {
    if (!active(b)) throw Error("netsim", "SINR requested towards sleeping BS " + bs_[b].cfg.id);
    return sinr_db_[ue][b];
}

double Network::spectral_efficiency(std::size_t ue, std::size_t b) const {
    if (!active(b)) throw Error("netsim", "spectral efficiency requested towards sleeping BS " + bs_[b].cfg.id);
    const double slot_s = opts_.slot_ms * 1e-3;
    return rate_[ue][b] / (bs_[b].cfg.bandwidth_mhz * 1e6 * slot_s);
}

double Network::peak_rate_mbps(std::size_t ue, std::size_t b) const {
    if (!active(b)) return 0.0;
    return rate_[ue][b] / (opts_.slot_ms * 1e-3) / 1e6;
}

double Network::rate_bits_per_slot(std::size_t ue, std::size_t b) const { return rate_[ue][b]; }

std::size_t Network::class_index(std::size_t f) const { return static_cast<std::size_t>(flow_specs_[f]->name); }

bool Network::usable(std::size_t ue, std::size_t b) const {
    if (!active(b)) return false;
    return b == macro_ || sinr_db_[ue][b] >= radio_.nr_min_sinr_db;
}

std::size_t Network::default_bs(std::size_t ue) const {
    std::size_t best = macro_;
    double best_sinr = -std::numeric_limits<double>::infinity();
    for (auto b : candidates_[ue]) {
        if (b == macro_ || !active(b)) continue;
        if (sinr_db_[ue][b] > best_sinr) {
            best_sinr = sinr_db_[ue][b];
            best = b;
        }
    }
    return best_sinr >= radio_.nr_min_sinr_db ? best : macro_;
}

std::vector<std::size_t> Network::default_assignment() const {
    std::vector<std::size_t> a(flow_specs_.size());
    for (std::size_t f = 0; f < a.size(); ++f) a[f] = default_bs(ue_of_flow(f));
    return a;
}

void Network::enqueue_sorted(std::deque<Chunk>& q, const Chunk& c) {
    auto it = std::upper_bound(q.begin(), q.end(), c.enq_slot,
                               [](std::int64_t s, const Chunk& x) { return s < x.enq_slot; });
    q.insert(it, c);
}

void Network::set_sleep(std::size_t b, bool sleeping) {
    if (b >= bs_.size()) throw Error("netsim", "BS index out of range");
    if (bs_[b].cfg.is_macro && sleeping) throw Error("netsim", "the macro BS cannot be put to sleep");
    const BsState target = sleeping ? BsState::Sleeping : BsState::Active;
    if (bs_[b].state == target) return;
    bs_[b].state = target;
    recompute_sinr();
    if (!sleeping) return;
    // Hand queued bits (with their timestamps) to each UE's best remaining BS.
    for (auto& q : bs_[b].queues) {
        for (const auto& c : q) {
            const std::size_t dst = default_bs(ue_of_flow(c.flow));
            enqueue_sorted(bs_[dst].queues[class_index(c.flow)], c);
        }
        q.clear();
    }
    bs_[b].last_used = 0.0;
}

std::int64_t Network::queued_bits(std::size_t b) const {
    std::int64_t s = 0;
    for (const auto& q : bs_[b].queues)
        for (const auto& c : q) s += c.bits;
    return s;
}

std::int64_t Network::total_queued_bits() const {
    std::int64_t s = 0;
    for (std::size_t b = 0; b < bs_.size(); ++b) s += queued_bits(b);
    return s;
}

double Network::frame_power() const {
    double p = 0.0;
    for (const auto& s : bs_) {
        if (s.state == BsState::Sleeping) {
            p += s.cfg.power.p_sleep_w;
        } else {
            p += s.cfg.power.p_fixed_w + s.cfg.power.tx_slope * dbm_to_w(s.cfg.max_tx_dbm) * s.last_used;
        }
    }
    return p;
}

FrameResult Network::step_frame(std::span<const std::int64_t> demand, std::span<const std::size_t> assignment) {
    const std::size_t nf = flow_specs_.size();
    if (demand.size() != nf || assignment.size() != nf) throw Error("netsim", "demand/assignment size mismatch");
    for (std::size_t f = 0; f < nf; ++f) {
        if (assignment[f] >= bs_.size()) throw Error("netsim", "assignment to unknown BS");
        if (!active(assignment[f]))
            throw Error("netsim", "flow " + std::to_string(f) + " assigned to sleeping BS " + bs_[assignment[f]].cfg.id);
        if (demand[f] < 0) throw Error("netsim", "negative demand");
    }

    if (radio_.load_coupled && radio_.interference) recompute_sinr();
    const int S = slots_per_frame_;
    const double slot_ms = opts_.slot_ms;
    FrameResult res;
    res.flows.assign(nf, FlowOutcome{});
    res.bs.assign(bs_.size(), BsFrameStats{});
    res.slot_offered_mbit.assign(static_cast<std::size_t>(S), 0.0);

    for (std::size_t b = 0; b < bs_.size(); ++b)
        for (std::size_t c = 0; c < traffic::kNumClasses; ++c)
            for (const auto& ch : bs_[b].queues[c]) res.audit[c].queued_before += ch.bits;

    std::vector<double> load_sum(bs_.size(), 0.0), used_sum(bs_.size(), 0.0);
    std::array<double, traffic::kNumClasses> need{};

    for (int k = 0; k < S; ++k) {
        const std::int64_t abs_slot = frame_ * S + k;
        std::int64_t slot_bits = 0;
        for (std::size_t f = 0; f < nf; ++f) {
            const std::int64_t d = demand[f];
            if (d == 0) continue;
            const std::int64_t arr = d / S + (k < d % S ? 1 : 0);
            if (arr == 0) continue;
            const std::size_t c = class_index(f);
            bs_[assignment[f]].queues[c].push_back({f, arr, abs_slot});
            res.flows[f].offered_bits += arr;
            res.audit[c].arrived += arr;
            slot_bits += arr;
        }
        res.slot_offered_mbit[static_cast<std::size_t>(k)] = static_cast<double>(slot_bits) * 1e-6;

        for (std::size_t b = 0; b < bs_.size(); ++b) {
            auto& st = bs_[b];
            if (st.state != BsState::Active) continue;
            double total_need = 0.0;
            for (std::size_t c = 0; c < traffic::kNumClasses; ++c) {
                auto& q = st.queues[c];
                while (!q.empty()) {
                    const auto& h = q.front();
                    const double age = static_cast<double>(abs_slot - h.enq_slot) * slot_ms + 0.5 * slot_ms;
                    if (age <= flow_specs_[h.flow]->qos_delay_budget_ms) break;
                    res.flows[h.flow].dropped_bits += h.bits;
                    res.audit[c].dropped += h.bits;
                    q.pop_front();
                }
                double n = 0.0;
                for (const auto& ch : q) {
                    const double r = rate_[ue_of_flow(ch.flow)][b];
                    n += r > 0.0 ? static_cast<double>(ch.bits) / r : std::numeric_limits<double>::max() / 16.0;
                }
                need[c] = n;
                total_need += n;
            }
            if (total_need == 0.0) continue;
            load_sum[b] += total_need;
            used_sum[b] += std::min(total_need, 1.0);
            const bool fits = total_need <= 1.0;
            const double share = fits ? 1.0 : 1.0 / total_need;

            for (std::size_t c = 0; c < traffic::kNumClasses; ++c) {
                auto& q = st.queues[c];
                double budget = need[c] * share;
                while (!q.empty()) {
                    auto& h = q.front();
                    const double r = rate_[ue_of_flow(h.flow)][b];
                    const double delay = static_cast<double>(abs_slot - h.enq_slot) * slot_ms + 0.5 * slot_ms;
                    std::int64_t served = 0;
                    if (fits) {
                        served = h.bits;
                    } else {
                        const double chunk_need = r > 0.0 ? static_cast<double>(h.bits) / r : std::numeric_limits<double>::infinity();
                        if (chunk_need <= budget) {
                            served = h.bits;
                            budget -= chunk_need;
                        } else {
                            served = std::min<std::int64_t>(h.bits, static_cast<std::int64_t>(std::floor(budget * r)));
                            budget = 0.0;
                        }
                    }
                    if (served > 0) {
                        res.flows[h.flow].served_bits += served;
                        res.flows[h.flow].delay_bit_ms += static_cast<double>(served) * delay;
                        res.audit[c].served += served;
                        res.bs[b].served_bits += served;
                        h.bits -= served;
                    }
                    if (h.bits > 0) break;
                    q.pop_front();
                    if (!fits && budget <= 0.0) break;
                }
            }
        }
    }

    // Per-BS statistics and power.
    for (std::size_t b = 0; b < bs_.size(); ++b) {
        auto& st = bs_[b];
        auto& out = res.bs[b];
        out.load = load_sum[b] / S;
        out.used_fraction = used_sum[b] / S;
        st.last_used = st.state == BsState::Active ? out.used_fraction : 0.0;
        out.queued_bits = queued_bits(b);
        out.overloaded = st.state == BsState::Active && out.load > opts_.overload_threshold;
        out.power_w = st.state == BsState::Sleeping
                          ? st.cfg.power.p_sleep_w
                          : st.cfg.power.p_fixed_w + st.cfg.power.tx_slope * dbm_to_w(st.cfg.max_tx_dbm) * st.last_used;
    }
    for (std::size_t b = 0; b < bs_.size(); ++b)
        for (std::size_t c = 0; c < traffic::kNumClasses; ++c)
            for (const auto& ch : bs_[b].queues[c]) res.audit[c].queued_after += ch.bits;

    // KPIs.
    const double frame_s = opts_.frame_ms * 1e-3;
    auto& kpi = res.kpi;
    kpi.frame_index = frame_;
    std::array<std::int64_t, traffic::kNumClasses> served{}, dropped{};
    std::array<double, traffic::kNumClasses> delay{};
    std::int64_t offered = 0;
    for (std::size_t f = 0; f < nf; ++f) {
        const auto c = class_index(f);
        served[c] += res.flows[f].served_bits;
        dropped[c] += res.flows[f].dropped_bits;
        delay[c] += res.flows[f].delay_bit_ms;
        offered += demand[f];
    }
    std::int64_t served_all = 0, dropped_all = 0;
    for (std::size_t c = 0; c < traffic::kNumClasses; ++c) {
        kpi.class_throughput_mbps[c] = static_cast<double>(served[c]) / frame_s * 1e-6;
        kpi.mean_latency_ms[c] = served[c] > 0 ? delay[c] / static_cast<double>(served[c]) : 0.0;
        const auto tot = served[c] + dropped[c];
        kpi.class_drop_rate[c] = tot > 0 ? static_cast<double>(dropped[c]) / static_cast<double>(tot) : 0.0;
        served_all += served[c];
        dropped_all += dropped[c];
    }
    kpi.delivered_bits = served_all;
    kpi.throughput_mbps = static_cast<double>(served_all) / frame_s * 1e-6;
    kpi.drop_rate = served_all + dropped_all > 0
                        ? static_cast<double>(dropped_all) / static_cast<double>(served_all + dropped_all)
                        : 0.0;
    kpi.offered_mbps = static_cast<double>(offered) / frame_s * 1e-6;
    kpi.power_w = frame_power();
    kpi.energy_j = kpi.power_w * frame_s;
    kpi.energy_efficiency = kpi.energy_j > 0.0 ? static_cast<double>(served_all) * 1e-6 / kpi.energy_j : 0.0;

    last_bs_ = res.bs;
    ++frame_;
    return res;
}

} // namespace ranopt::netsim
