#include "traffic/traffic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "common/error.hpp"

namespace ranopt::traffic {

std::string to_string(TrafficClass c) {
    switch (c) {
    case TrafficClass::Video: return "Video";
    case TrafficClass::Gaming: return "Gaming";
    case TrafficClass::Voice: return "Voice";
    }
    return "?";
}

std::string to_string(ArrivalKind k) {
    switch (k) {
    case ArrivalKind::Pareto: return "Pareto";
    case ArrivalKind::Uniform: return "Uniform";
    case ArrivalKind::Poisson: return "Poisson";
    }
    return "?";
}

TrafficClass class_from_string(const std::string& s) {
    if (s == "Video") return TrafficClass::Video;
    if (s == "Gaming") return TrafficClass::Gaming;
    if (s == "Voice") return TrafficClass::Voice;
    throw Error("traffic", "unknown traffic class '" + s + "'");
}

ArrivalKind arrival_from_string(const std::string& s) {
    if (s == "Pareto") return ArrivalKind::Pareto;
    if (s == "Uniform") return ArrivalKind::Uniform;
    if (s == "Poisson") return ArrivalKind::Poisson;
    throw Error("traffic", "unknown arrival kind '" + s + "'");
}

void TrafficClassSpec::validate() const {
    if (!(mean_interarrival_ms > 0.0)) throw Error("traffic", to_string(name) + ": mean_interarrival must be > 0");
    if (!(packet_size_bytes > 0.0)) throw Error("traffic", to_string(name) + ": packet_size must be > 0");
    if (!(qos_delay_budget_ms > 0.0)) throw Error("traffic", to_string(name) + ": qos_delay_budget must be > 0");
    if (arrival == ArrivalKind::Pareto && !(pareto_shape > 1.0))
        throw Error("traffic", to_string(name) + ": Pareto shape must exceed 1 for a finite mean");
    if (arrival == ArrivalKind::Uniform && !(uniform_half_width >= 0.0 && uniform_half_width < 1.0))
        throw Error("traffic", to_string(name) + ": uniform half-width must be in [0, 1)");
}

std::array<TrafficClassSpec, kNumClasses> default_traffic_table() {
    TrafficClassSpec video;
    video.name = TrafficClass::Video;
    video.arrival = ArrivalKind::Pareto;
    video.mean_interarrival_ms = 12.5;
    video.packet_size_bytes = 250.0;
    video.qos_throughput_mbps = 10.0;
    video.qos_delay_budget_ms = 80.0;

    TrafficClassSpec gaming;
    gaming.name = TrafficClass::Gaming;
    gaming.arrival = ArrivalKind::Uniform;
    gaming.mean_interarrival_ms = 40.0;
    gaming.packet_size_bytes = 120.0;
    gaming.qos_throughput_mbps = 5.0;
    gaming.qos_delay_budget_ms = 40.0;

    TrafficClassSpec voice;
    voice.name = TrafficClass::Voice;
    voice.arrival = ArrivalKind::Poisson;
    voice.mean_interarrival_ms = 0.1;
    voice.packet_size_bytes = 30.0;
    voice.qos_throughput_mbps = 0.1;
    voice.qos_delay_budget_ms = 100.0;

    return {video, gaming, voice};
}

double sample_interarrival(const TrafficClassSpec& spec, Rng& rng) {
    const double mean = spec.mean_interarrival_ms;
    for (;;) {
        double x = 0.0;
        switch (spec.arrival) {
        case ArrivalKind::Pareto: {
            const double a = spec.pareto_shape;
            const double scale = mean * (a - 1.0) / a;
            x = scale / std::pow(uniform_open0(rng), 1.0 / a);
            if (std::isfinite(x)) x = std::min(x, kParetoCapFactor * mean);
            break;
        }
        case ArrivalKind::Uniform: {
            const double hw = spec.uniform_half_width * mean;
            if (hw == 0.0) return mean;
            std::uniform_real_distribution<double> u(mean - hw, mean + hw);
            x = u(rng);
            break;
        }
        case ArrivalKind::Poisson:
            x = -mean * std::log(uniform_open0(rng));
            break;
        }
        if (std::isfinite(x) && x > 0.0) return x;
    }
}

namespace {

double cosine_blend(double a, double b, double frac) {
    const double w = 0.5 - 0.5 * std::cos(std::numbers::pi * frac);
    return a + (b - a) * w;
}

} // namespace

double DiurnalProfile::multiplier_at(double t) const {
    if (control_points.empty()) return 1.0;
    if (control_points.size() == 1) return control_points.front().second;
    t = std::fmod(t, kDaySeconds);
    if (t < 0) t += kDaySeconds;
    const auto& pts = control_points;
    // Find segment [i, i+1) containing t, wrapping past the last point.
    std::size_t hi = 0;
    while (hi < pts.size() && pts[hi].first <= t) ++hi;
    const auto& p0 = hi == 0 ? pts.back() : pts[hi - 1];
    const auto& p1 = hi == pts.size() ? pts.front() : pts[hi];
    double t0 = p0.first, t1 = p1.first;
    if (hi == 0) t0 -= kDaySeconds;
    if (hi == pts.size()) t1 += kDaySeconds;
    const double span = t1 - t0;
    if (span <= 0.0) return p1.second;
    return cosine_blend(p0.second, p1.second, (t - t0) / span);
}

double DiurnalProfile::min_multiplier() const {
    double m = control_points.empty() ? 1.0 : control_points.front().second;
    for (const auto& [t, v] : control_points) m = std::min(m, v);
    return m;
}

double DiurnalProfile::max_multiplier() const {
    double m = control_points.empty() ? 1.0 : control_points.front().second;
    for (const auto& [t, v] : control_points) m = std::max(m, v);
    return m;
}

DiurnalProfile calibrate_profile(double peak, double trough, double base, double trough_time_s) {
    if (!(trough > 0.0)) throw Error("traffic", "profile trough must be > 0");
    if (peak < trough) throw Error("traffic", "profile peak must not be below trough");
    if (!(base > 0.0)) throw Error("traffic", "base demand must be > 0");
    DiurnalProfile p;
    p.peak_target_mbps = peak;
    p.trough_target_mbps = trough;
    double t_lo = std::fmod(trough_time_s, kDaySeconds);
    if (t_lo < 0) t_lo += kDaySeconds;
    const double t_hi = std::fmod(t_lo + kDaySeconds / 2.0, kDaySeconds);
    p.control_points = {{t_lo, trough / base}, {t_hi, peak / base}};
    std::sort(p.control_points.begin(), p.control_points.end());
    return p;
}

DiurnalProfile calibrate_shape(const std::vector<std::pair<double, double>>& shape, double peak, double trough,
                               double base) {
    if (shape.size() < 2) throw Error("traffic", "profile shape needs at least two control points");
    if (!(trough > 0.0) || peak < trough || !(base > 0.0)) throw Error("traffic", "invalid profile targets");
    DiurnalProfile p;
    p.peak_target_mbps = peak;
    p.trough_target_mbps = trough;
    double lo = shape.front().second, hi = lo;
    for (const auto& [t, v] : shape) {
        if (t < 0.0 || t >= kDaySeconds) throw Error("traffic", "profile control point time outside [0, 86400)");
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    for (const auto& [t, v] : shape) {
        const double frac = hi > lo ? (v - lo) / (hi - lo) : 0.5;
        p.control_points.emplace_back(t, (trough + frac * (peak - trough)) / base);
    }
    std::sort(p.control_points.begin(), p.control_points.end());
    return p;
}

LowFrequencyNoise::LowFrequencyNoise(std::uint64_t seed, double sigma, double knot_s)
    : seed_(seed), sigma_(sigma), knot_s_(knot_s) {
    if (!(knot_s > 0.0)) throw Error("traffic", "noise knot spacing must be > 0");
}

double LowFrequencyNoise::knot_value(std::int64_t k) const {
    Rng rng(derive_seed(seed_, {static_cast<std::uint64_t>(k)}));
    std::normal_distribution<double> n(0.0, 1.0);
    return sigma_ * n(rng);
}

double LowFrequencyNoise::at(double t) const {
    if (sigma_ == 0.0) return 0.0;
    const double pos = t / knot_s_;
    const auto k = static_cast<std::int64_t>(std::floor(pos));
    return cosine_blend(knot_value(k), knot_value(k + 1), pos - static_cast<double>(k));
}

std::int64_t count_arrivals(FlowSource& src, std::int64_t start_ns, std::int64_t end_ns) {
    (void)start_ns;
    if (src.next_arrival_ns >= end_ns) return 0;
    const auto& spec = *src.spec;
    const double mean_ns = spec.mean_interarrival_ms * 1e6;
    if (spec.arrival == ArrivalKind::Poisson) {
        // Memoryless: count the remaining arrivals in one draw, restart the clock at the frame end.
        std::poisson_distribution<std::int64_t> pd(static_cast<double>(end_ns - src.next_arrival_ns) / mean_ns);
        const std::int64_t n = 1 + pd(src.rng);
        src.next_arrival_ns = end_ns + std::max<std::int64_t>(1, std::llround(sample_interarrival(spec, src.rng) * 1e6));
        return n;
    }
    std::int64_t n = 0;
    while (src.next_arrival_ns < end_ns) {
        ++n;
        src.next_arrival_ns += std::max<std::int64_t>(1, std::llround(sample_interarrival(spec, src.rng) * 1e6));
    }
    return n;
}

TrafficGenerator::TrafficGenerator(std::span<const TrafficClassSpec> table, int num_ues,
                                   const std::vector<TrafficClass>& flow_classes, DiurnalProfile profile,
                                   Options opts)
    : table_(table.begin(), table.end()), profile_(std::move(profile)), opts_(opts) {
    if (num_ues < 0) throw Error("traffic", "negative UE count");
    for (const auto& s : table_) s.validate();
    if (!(opts_.time_warp > 0.0)) throw Error("traffic", "time warp must be > 0");

    auto find_spec = [&](TrafficClass c) -> const TrafficClassSpec* {
        for (const auto& s : table_)
            if (s.name == c) return &s;
        throw Error("traffic", "no table row for class " + to_string(c));
    };

    sources_.reserve(static_cast<std::size_t>(num_ues) * flow_classes.size());
    for (int ue = 0; ue < num_ues; ++ue) {
        for (std::size_t k = 0; k < flow_classes.size(); ++k) {
            FlowSource src;
            src.ue_id = ue;
            src.flow_index = static_cast<int>(sources_.size());
            src.spec = find_spec(flow_classes[k]);
            src.rng.seed(derive_seed(opts_.seed, {static_cast<std::uint64_t>(ue),
                                                  static_cast<std::uint64_t>(flow_classes[k]), 0x7a11ULL}));
            const double mean_ns = src.spec->mean_interarrival_ms * 1e6;
            if (src.spec->arrival == ArrivalKind::Poisson) {
                src.next_arrival_ns = std::llround(sample_interarrival(*src.spec, src.rng) * 1e6);
            } else {
                std::uniform_real_distribution<double> phase(0.0, mean_ns);
                src.next_arrival_ns = static_cast<std::int64_t>(phase(src.rng));
            }
            sources_.push_back(std::move(src));
        }
    }

    double mean_mult = 0.0;
    constexpr int kSamples = 1440;
    for (int i = 0; i < kSamples; ++i) mean_mult += profile_.multiplier_at(kDaySeconds * i / kSamples);
    mean_mult /= kSamples;
    noise_scale_ = mean_mult;
    noise_ = LowFrequencyNoise(derive_seed(opts_.seed, {0x401feULL}), opts_.noise_sigma * mean_mult, opts_.noise_knot_s);
}

double TrafficGenerator::base_demand_mbps() const {
    double total = 0.0;
    for (const auto& s : sources_) total += s.spec->mean_rate_mbps();
    return total;
}

double TrafficGenerator::multiplier_at(double sim_time_s) const {
    if (constant_) return constant_multiplier_;
    const double pt = opts_.profile_offset_s + sim_time_s * opts_.time_warp;
    const double m = profile_.multiplier_at(pt) + noise_.at(pt);
    return std::max(m, 0.01 * noise_scale_);
}

void TrafficGenerator::set_constant_multiplier(double m) {
    if (!(m >= 0.0)) throw Error("traffic", "constant multiplier must be >= 0");
    constant_ = true;
    constant_multiplier_ = m;
}

std::vector<std::int64_t> TrafficGenerator::generate_frame_demand(std::int64_t start_ns, std::int64_t length_ns) {
    if (length_ns <= 0) throw Error("traffic", "frame length must be > 0");
    const std::int64_t end_ns = start_ns + length_ns;
    const double mid_s = (static_cast<double>(start_ns) + 0.5 * static_cast<double>(length_ns)) * 1e-9;
    const double m = multiplier_at(mid_s);
    std::vector<std::int64_t> bits(sources_.size(), 0);
    for (std::size_t i = 0; i < sources_.size(); ++i) {
        auto& src = sources_[i];
        const std::int64_t n = count_arrivals(src, start_ns, end_ns);
        bits[i] = std::llround(static_cast<double>(n) * src.spec->packet_size_bytes * 8.0 * m);
    }
    return bits;
}

} // namespace ranopt::traffic
