#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "common/rng.hpp"

namespace ranopt::traffic {

enum class TrafficClass { Video = 0, Gaming = 1, Voice = 2 };
enum class ArrivalKind { Pareto, Uniform, Poisson };

inline constexpr std::size_t kNumClasses = 3;

std::string to_string(TrafficClass c);
std::string to_string(ArrivalKind k);
TrafficClass class_from_string(const std::string& s);
ArrivalKind arrival_from_string(const std::string& s);

struct TrafficClassSpec {
    TrafficClass name = TrafficClass::Video;
    ArrivalKind arrival = ArrivalKind::Pareto;
    double mean_interarrival_ms = 12.5;
    double packet_size_bytes = 250.0;
    double qos_throughput_mbps = 10.0;
    double qos_delay_budget_ms = 80.0;
    double pareto_shape = 2.5;
    /// Uniform range is mean * (1 +/- uniform_half_width).
    double uniform_half_width = 0.5;

    /// Throws on a non-positive mean, size or budget, or a Pareto shape <= 1.
    void validate() const;

    /// Long-run offered rate of one flow of this class, Mbps.
    double mean_rate_mbps() const { return packet_size_bytes * 8.0 / mean_interarrival_ms / 1000.0; }
};

/// Video / Gaming / Voice rows with their QoS budgets.
std::array<TrafficClassSpec, kNumClasses> default_traffic_table();

/// Pareto draws are capped at this multiple of the mean.
inline constexpr double kParetoCapFactor = 100.0;

/// Draws one inter-arrival time in milliseconds. Pareto uses scale
/// mean*(shape-1)/shape, Uniform a symmetric range around the mean, Poisson an
/// exponential gap. Non-finite draws are rejected and redrawn.
double sample_interarrival(const TrafficClassSpec& spec, Rng& rng);

/// 24-hour load multiplier. Control points are joined by half-cosine segments
/// and the curve wraps around midnight.
struct DiurnalProfile {
    std::vector<std::pair<double, double>> control_points; // (time of day s, multiplier)
    double peak_target_mbps = 0.0;
    double trough_target_mbps = 0.0;

    double multiplier_at(double time_of_day_s) const;
    double min_multiplier() const;
    double max_multiplier() const;
};

inline constexpr double kDaySeconds = 86400.0;

/// Single-period cosine day whose extreme multipliers map base demand onto
/// trough/peak. The trough sits at `trough_time_s`, the peak 12 h later.
/// peak == trough gives a flat day; peak < trough or trough <= 0 throws.
DiurnalProfile calibrate_profile(double peak_mbps, double trough_mbps, double base_demand_mbps,
                                 double trough_time_s = 4.0 * 3600.0);

/// Same calibration but with a user-supplied day shape: the shape's min and max
/// are affinely mapped onto trough/base and peak/base.
DiurnalProfile calibrate_shape(const std::vector<std::pair<double, double>>& shape, double peak_mbps,
                               double trough_mbps, double base_demand_mbps);

/// Additive low-frequency noise on the multiplier: independent N(0, sigma)
/// values at knots every `knot_s` seconds of profile time, cosine-interpolated.
class LowFrequencyNoise {
public:
    LowFrequencyNoise() = default;
    LowFrequencyNoise(std::uint64_t seed, double sigma, double knot_s);

    double at(double profile_time_s) const;

private:
    double knot_value(std::int64_t k) const;

    std::uint64_t seed_ = 0;
    double sigma_ = 0.0;
    double knot_s_ = 3600.0;
};

struct FlowSource {
    int ue_id = 0;
    int flow_index = 0;
    const TrafficClassSpec* spec = nullptr;
    Rng rng;
    std::int64_t next_arrival_ns = 0;
};

/// Offered load generator for a fixed population of flows.
class TrafficGenerator {
public:
    struct Options {
        std::uint64_t seed = 1;
        double time_warp = 1.0;            // profile seconds per simulated second
        double profile_offset_s = 0.0;     // profile time at simulated t = 0
        double noise_sigma = 0.03;         // fraction of the mean multiplier
        double noise_knot_s = 3600.0;      // profile-time spacing of noise knots
    };

    /// One source per (ue, class) in `flow_classes`; flow index = ue * n + k.
    TrafficGenerator(std::span<const TrafficClassSpec> table, int num_ues,
                     const std::vector<TrafficClass>& flow_classes, DiurnalProfile profile, Options opts);

    std::size_t num_flows() const { return sources_.size(); }
    const FlowSource& source(std::size_t i) const { return sources_[i]; }
    const TrafficClassSpec& spec_of(std::size_t flow) const { return *sources_[flow].spec; }

    /// Analytic mean offered load of the population with multiplier 1, Mbps.
    double base_demand_mbps() const;

    /// Multiplier (profile + noise) at simulated time t.
    double multiplier_at(double sim_time_s) const;

    /// Replace the profile with a constant multiplier (used by volume sweeps).
    void set_constant_multiplier(double m);

    /// Offered bits per flow in [start, start+length). Packets arriving in the
    /// frame times packet size times 8, scaled by the multiplier at the frame
    /// midpoint, rounded to whole bits.
    std::vector<std::int64_t> generate_frame_demand(std::int64_t frame_start_ns, std::int64_t frame_length_ns);

private:
    std::vector<TrafficClassSpec> table_;
    std::vector<FlowSource> sources_;
    DiurnalProfile profile_;
    Options opts_;
    LowFrequencyNoise noise_;
    double noise_scale_ = 0.0;
    bool constant_ = false;
    double constant_multiplier_ = 1.0;
};

/// Packet count in [start, end) for one source, advancing its arrival clock.
std::int64_t count_arrivals(FlowSource& src, std::int64_t start_ns, std::int64_t end_ns);

} // namespace ranopt::traffic
