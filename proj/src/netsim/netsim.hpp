#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <span>
#include <string>
#include <vector>

#include "traffic/traffic.hpp"

namespace ranopt::netsim {

enum class Rat { LTE, NR };
enum class PathlossModel { UrbanMacro, UrbanMicro };
enum class BsState { Active, Sleeping };

struct PathlossParams {
    double pl0_db = 128.1;   // loss at the reference distance
    double exponent = 3.76;  // n in 10 n log10(d / d0)
    double d0_m = 1000.0;
};

/// Log-distance loss, PL0 + 10 n log10(d / d0). Distances under 1 m are clamped to 1 m.
double pathloss_db(double distance_m, const PathlossParams& p);

PathlossParams default_pathloss(PathlossModel model);

struct PowerModel {
    double p_fixed_w = 56.0;
    double tx_slope = 2.6;
    double p_sleep_w = 6.0;
};

struct BaseStationConfig {
    std::string id;
    Rat rat = Rat::NR;
    double bandwidth_mhz = 20.0;
    double carrier_ghz = 3.5;
    double max_tx_dbm = 43.0;
    PowerModel power;
    PathlossModel pathloss = PathlossModel::UrbanMicro;
    double x_m = 0.0;
    double y_m = 0.0;
    bool is_macro = false;
};

struct RadioConfig {
    double noise_figure_db = 9.0;
    double efficiency = 0.75;
    double max_sinr_db = 30.0;
    bool interference = true;
    /// Weight each interferer by the resource share it used in the previous
    /// frame (an idle cell radiates nothing); false means full-buffer interference.
    bool load_coupled = true;
    /// Default association sends a flow over NR when its best active small cell
    /// clears this SINR; otherwise over the LTE macro.
    double nr_min_sinr_db = 5.0;
    int small_candidates = 2;
    PathlossParams urban_macro = default_pathloss(PathlossModel::UrbanMacro);
    PathlossParams urban_micro = default_pathloss(PathlossModel::UrbanMicro);
};

struct UePosition {
    double x_m = 0.0;
    double y_m = 0.0;
};

double dbm_to_w(double dbm);

/// Per-frame KPIs. Latency and drop rate are per class (Video, Gaming, Voice)
/// plus an overall drop rate; energy efficiency is delivered Mbit per joule.
struct KpiRecord {
    std::int64_t frame_index = 0;
    double throughput_mbps = 0.0;
    std::array<double, traffic::kNumClasses> class_throughput_mbps{};
    std::array<double, traffic::kNumClasses> mean_latency_ms{};
    std::array<double, traffic::kNumClasses> class_drop_rate{};
    double drop_rate = 0.0;
    double power_w = 0.0;
    double energy_efficiency = 0.0;
    double offered_mbps = 0.0;
    std::int64_t delivered_bits = 0;
    double energy_j = 0.0;
};

struct FlowOutcome {
    std::int64_t offered_bits = 0;
    std::int64_t served_bits = 0;
    std::int64_t dropped_bits = 0;
    double delay_bit_ms = 0.0; // sum over served bits of their delay
};

struct BsFrameStats {
    double load = 0.0;           // mean resource demand per slot relative to capacity (may exceed 1)
    double used_fraction = 0.0;  // mean resource actually used, in [0, 1]
    std::int64_t queued_bits = 0;
    std::int64_t served_bits = 0;
    double power_w = 0.0;
    bool overloaded = false;
};

/// Byte audit per class for one frame: arrived + queued_before == served + dropped + queued_after.
struct ClassAudit {
    std::int64_t arrived = 0;
    std::int64_t served = 0;
    std::int64_t dropped = 0;
    std::int64_t queued_before = 0;
    std::int64_t queued_after = 0;
};

struct FrameResult {
    KpiRecord kpi;
    std::vector<FlowOutcome> flows;
    std::vector<BsFrameStats> bs;
    std::array<ClassAudit, traffic::kNumClasses> audit{};
    /// Offered Mbit per scheduling slot, summed over flows.
    std::vector<double> slot_offered_mbit;
};

struct NetworkOptions {
    double frame_ms = 1000.0;
    double slot_ms = 10.0;
    double overload_threshold = 0.9;
};

/// Flow-level downlink model: one LTE macro plus NR small cells, static UEs
/// carrying one flow per configured class. Each scheduling slot, every active
/// BS shares its Shannon capacity among queued bits in proportion to their
/// resource demand, FIFO inside each class, and drops bits whose queueing
/// delay would exceed the class budget.
///
/// Single-writer: only step_frame and set_sleep mutate state.
class Network {
public:
    Network(std::vector<BaseStationConfig> stations, std::vector<UePosition> ues,
            std::vector<const traffic::TrafficClassSpec*> flow_specs, RadioConfig radio, NetworkOptions opts);

    std::size_t num_bs() const { return bs_.size(); }
    std::size_t num_ues() const { return ues_.size(); }
    std::size_t num_flows() const { return flow_specs_.size(); }
    std::size_t flows_per_ue() const { return flows_per_ue_; }
    std::size_t macro_index() const { return macro_; }
    const BaseStationConfig& bs_config(std::size_t b) const { return bs_[b].cfg; }
    BsState state(std::size_t b) const { return bs_[b].state; }
    bool active(std::size_t b) const { return bs_[b].state == BsState::Active; }
    std::size_t ue_of_flow(std::size_t f) const { return f / flows_per_ue_; }
    const traffic::TrafficClassSpec& flow_spec(std::size_t f) const { return *flow_specs_[f]; }
    const NetworkOptions& options() const { return opts_; }
    const RadioConfig& radio() const { return radio_; }
    int slots_per_frame() const { return slots_per_frame_; }

    /// Current SINR (dB) of a UE towards an active BS. Throws for a sleeping BS.
    double sinr_db(std::size_t ue, std::size_t b) const;
    /// Spectral efficiency after the implementation factor and SINR cap, bit/s/Hz.
    double spectral_efficiency(std::size_t ue, std::size_t b) const;
    /// Peak rate a UE would get from BS b if it had all resources, Mbps.
    double peak_rate_mbps(std::size_t ue, std::size_t b) const;

    /// Macro followed by the UE's strongest small cells (received power).
    const std::vector<std::size_t>& candidates(std::size_t ue) const { return candidates_[ue]; }
    /// Active and, for a small cell, SINR at or above the NR attach threshold.
    bool usable(std::size_t ue, std::size_t b) const;
    /// Default association among active candidates.
    std::size_t default_bs(std::size_t ue) const;
    std::vector<std::size_t> default_assignment() const;

    void set_sleep(std::size_t b, bool sleeping);
    /// Serve one frame of demand under the given flow -> BS assignment.
    FrameResult step_frame(std::span<const std::int64_t> demand, std::span<const std::size_t> assignment);
    /// Power of the last frame under the current sleep states.
    double frame_power() const;

    std::int64_t queued_bits(std::size_t b) const;
    std::int64_t total_queued_bits() const;
    std::int64_t frame_index() const { return frame_; }
    const std::vector<BsFrameStats>& last_bs_stats() const { return last_bs_; }

private:
    struct Chunk {
        std::size_t flow;
        std::int64_t bits;
        std::int64_t enq_slot;
    };
    struct Station {
        BaseStationConfig cfg;
        BsState state = BsState::Active;
        std::array<std::deque<Chunk>, traffic::kNumClasses> queues;
        double last_used = 0.0;
    };

    void recompute_sinr();
    void enqueue_sorted(std::deque<Chunk>& q, const Chunk& c);
    std::size_t class_index(std::size_t f) const;
    double rate_bits_per_slot(std::size_t ue, std::size_t b) const;

    std::vector<Station> bs_;
    std::vector<UePosition> ues_;
    std::vector<const traffic::TrafficClassSpec*> flow_specs_;
    std::size_t flows_per_ue_ = 1;
    RadioConfig radio_;
    NetworkOptions opts_;
    int slots_per_frame_ = 100;
    std::size_t macro_ = 0;
    std::vector<std::vector<double>> rx_dbm_;   // [ue][bs]
    std::vector<std::vector<double>> sinr_db_;  // [ue][bs], -inf for sleeping
    std::vector<std::vector<double>> rate_;     // [ue][bs] bits per slot
    std::vector<std::vector<std::size_t>> candidates_;
    std::vector<BsFrameStats> last_bs_;
    std::int64_t frame_ = 0;
};

/// 1 LTE macro at the origin and four NR small cells at (+-offset, 0), (0, +-offset).
std::vector<BaseStationConfig> default_topology(double small_offset_m = 250.0);

/// UEs uniform in a disc (area-uniform radius), seeded.
std::vector<UePosition> place_ues(int n, double radius_m, std::uint64_t seed);

} // namespace ranopt::netsim
