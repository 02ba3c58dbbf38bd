#ifndef NRTOMO_SCENE_SIM_HPP
#define NRTOMO_SCENE_SIM_HPP

#include <array>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "nrtomo/common.hpp"

namespace nrtomo {

struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;
};

inline double distance(const Vec3& a, const Vec3& b) {
    const double dx = a.x - b.x;
    const double dy = a.y - b.y;
    const double dz = a.z - b.z;
    return std::sqrt(dx * dx + dy * dy + dz * dz);
}

/// Active (subcarrier, symbol) set. Entries are sorted row-major, subcarrier
/// index outer, symbol index inner — the same order observation vectors and
/// the binary file format use.
struct IndexSet {
    int n_subcarriers = 0;
    int n_symbols = 0;
    std::vector<std::pair<int, int>> entries;
    bool full_grid = false;

    std::size_t size() const { return entries.size(); }
};

IndexSet make_full_grid(int n_subcarriers, int n_symbols);

/// SSB-like sparse mask: a contiguous block of subcarriers, active on bursts
/// of `burst_len` symbols every `burst_period` symbols.
IndexSet make_ssb_mask(int n_subcarriers, int n_symbols, int first_subcarrier,
                       int block_subcarriers, int burst_len, int burst_period);

struct WaveformConfig {
    int n_subcarriers = 0;             // N
    int n_symbols = 0;                 // M (symbols per snapshot)
    double scs_hz = 0.0;               // subcarrier spacing
    double symbol_duration_s = 0.0;    // T0 = 1/scs
    double cp_duration_s = 0.0;
    double carrier_frequency_hz = 0.0;
    double wavelength_m = 0.0;
    IndexSet omega;                    // active index set
    // Fast-time gating: delays are synthesized (and estimated) relative to
    // this window start. Zero disables gating.
    double delay_reference_s = 0.0;

    void validate() const;
};

WaveformConfig make_waveform(int n_subcarriers, int n_symbols, double scs_hz,
                             double carrier_frequency_hz, double cp_duration_s = 0.0);

struct GroundReflection {
    cpx coefficient{0.0, 0.0};  // |coefficient| <= 1
};

struct Target {
    Vec3 position_m;                 // z >= 0, below every baseline altitude
    double rcs_m2 = 1.0;
    std::optional<GroundReflection> ground_reflection;
};

struct Scene {
    double platform_reference_altitude_m = 0.0;  // h0
    double baseline_spacing_m = 0.0;             // dh
    int n_baselines = 1;                         // L
    double platform_velocity_mps = 0.0;          // along +y
    double platform_start_y_m = 0.0;
    double pri_s = 0.0;                          // slow-time snapshot interval
    std::vector<Target> targets;
    double tx_gain = 1.0;
    double rx_gain = 1.0;
    double noise_power = 0.0;  // per-sample complex variance
    // Rescale all path gains so the reference LoS gain has unit magnitude
    // (noise_power is then relative to it). Keeps every ratio intact while
    // avoiding tiny absolute magnitudes at km-scale geometry.
    bool normalize_gains = false;

    double baseline_altitude(int i) const {
        return platform_reference_altitude_m + i * baseline_spacing_m;
    }
    Vec3 platform_position(int baseline_index, int slow_time_index) const {
        return Vec3{0.0, platform_start_y_m + platform_velocity_mps * pri_s * slow_time_index,
                    baseline_altitude(baseline_index)};
    }
    void validate() const;
};

enum class PathKind { LoS, GroundReflection, Other };

struct PathGroundTruth {
    double delay_s = 0.0;    // window-relative delay actually embedded in the data
    double doppler_hz = 0.0;
    cpx gain{0.0, 0.0};      // equivalent complex path gain
    PathKind kind = PathKind::Other;
    int target_index = -1;
};

struct ChannelObservation {
    int baseline_index = 0;
    int slow_time_index = 0;
    std::vector<cpx> values;                  // indexed by omega entries
    std::vector<PathGroundTruth> ground_truth;  // simulation only
};

/// Round-trip LoS delay 2R/c.
double los_delay(const Vec3& platform_pos, const Target& target);

/// LoS complex gain: magnitude lambda*sqrt(Gt*Gr*rcs)/((4pi)^{3/2} R^2),
/// phase -4*pi*R/lambda. Throws DegenerateGeometry at R = 0.
cpx los_gain(const Vec3& platform_pos, const Target& target, const WaveformConfig& wf,
             const Scene& scene);

struct GroundBounceGeometry {
    double delay_s = 0.0;  // round-trip 2*R_gr/c via the image-target construction
    double r_ts = 0.0;     // platform-to-specular-point leg (= R_gr)
    double r_st = 0.0;     // specular-point-to-target leg (= R_gr)
};

/// Specular ground-bounce geometry (ground plane z = 0, image target at -z).
/// Requires the target to have a ground_reflection configured.
GroundBounceGeometry ground_reflection_path(const Vec3& platform_pos, const Target& target);

/// Ground-reflection complex gain per the two-leg spreading model, phase
/// -(2pi/lambda)(R_ts + R_st).
cpx ground_reflection_gain(const Vec3& platform_pos, const Target& target,
                           const WaveformConfig& wf, const Scene& scene);

/// Delay/Doppler atom over the active index set:
/// a[(k,m)] = exp(-j 2 pi k scs tau) * exp(+j 2 pi m T0 v).
std::vector<cpx> steering_vector(double tau_s, double doppler_hz, const WaveformConfig& wf);

/// Enumerates the propagation paths (with gains and Doppler) seen from one
/// (baseline, snapshot) platform position. Used by synthesis and by tests
/// that need exact ground truth without noise.
std::vector<PathGroundTruth> enumerate_paths(const Scene& scene, const WaveformConfig& wf,
                                             int baseline_index, int slow_time_index);

/// Gain magnitude used by normalize_gains: |LoS gain| of target 0 seen from
/// baseline 0, snapshot 0.
double reference_los_gain_magnitude(const Scene& scene, const WaveformConfig& wf);

/// Synthesizes one channel observation: sum of path atoms plus circularly
/// symmetric complex Gaussian noise, ground truth recorded.
ChannelObservation synthesize_observation(const Scene& scene, const WaveformConfig& wf,
                                          int baseline_index, int slow_time_index,
                                          std::uint64_t noise_seed);

}  // namespace nrtomo

#endif  // NRTOMO_SCENE_SIM_HPP
