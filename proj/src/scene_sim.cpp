#include "nrtomo/scene_sim.hpp"

#include <cmath>
#include <random>

namespace nrtomo {

IndexSet make_full_grid(int n_subcarriers, int n_symbols) {
    if (n_subcarriers <= 0 || n_symbols <= 0) throw ConfigError("grid dimensions must be positive");
    IndexSet set;
    set.n_subcarriers = n_subcarriers;
    set.n_symbols = n_symbols;
    set.full_grid = true;
    set.entries.reserve(static_cast<std::size_t>(n_subcarriers) * n_symbols);
    for (int k = 0; k < n_subcarriers; ++k)
        for (int m = 0; m < n_symbols; ++m) set.entries.emplace_back(k, m);
    return set;
}

IndexSet make_ssb_mask(int n_subcarriers, int n_symbols, int first_subcarrier,
                       int block_subcarriers, int burst_len, int burst_period) {
    if (first_subcarrier < 0 || block_subcarriers <= 0 ||
        first_subcarrier + block_subcarriers > n_subcarriers || burst_len <= 0 ||
        burst_period < burst_len) {
        throw ConfigError("invalid SSB mask parameters");
    }
    IndexSet set;
    set.n_subcarriers = n_subcarriers;
    set.n_symbols = n_symbols;
    for (int k = first_subcarrier; k < first_subcarrier + block_subcarriers; ++k)
        for (int m = 0; m < n_symbols; ++m)
            if (m % burst_period < burst_len) set.entries.emplace_back(k, m);
    if (set.entries.empty()) throw ConfigError("SSB mask selects no samples");
    set.full_grid =
        set.entries.size() == static_cast<std::size_t>(n_subcarriers) * n_symbols;
    return set;
}

void WaveformConfig::validate() const {
    if (n_subcarriers <= 0 || n_symbols <= 0) throw ConfigError("waveform grid must be positive");
    if (!(scs_hz > 0.0) || !(carrier_frequency_hz > 0.0))
        throw ConfigError("waveform frequencies must be positive");
    if (std::abs(symbol_duration_s * scs_hz - 1.0) > 1e-12)
        throw ConfigError("symbol duration must equal 1/scs");
    if (omega.entries.empty()) throw ConfigError("active index set is empty");
    if (omega.n_subcarriers != n_subcarriers || omega.n_symbols != n_symbols)
        throw ConfigError("active index set does not match the waveform grid");
    for (const auto& [k, m] : omega.entries)
        if (k < 0 || k >= n_subcarriers || m < 0 || m >= n_symbols)
            throw ConfigError("active index set outside the grid");
}

WaveformConfig make_waveform(int n_subcarriers, int n_symbols, double scs_hz,
                             double carrier_frequency_hz, double cp_duration_s) {
    WaveformConfig wf;
    wf.n_subcarriers = n_subcarriers;
    wf.n_symbols = n_symbols;
    wf.scs_hz = scs_hz;
    wf.symbol_duration_s = 1.0 / scs_hz;
    wf.cp_duration_s = cp_duration_s;
    wf.carrier_frequency_hz = carrier_frequency_hz;
    wf.wavelength_m = constants::speed_of_light / carrier_frequency_hz;
    wf.omega = make_full_grid(n_subcarriers, n_symbols);
    wf.validate();
    return wf;
}

void Scene::validate() const {
    if (!(platform_reference_altitude_m > 0.0)) throw ConfigError("platform altitude must be positive");
    if (n_baselines <= 0) throw ConfigError("need at least one baseline");
    if (noise_power < 0.0) throw ConfigError("noise power must be non-negative");
    if (targets.empty()) throw ConfigError("scene has no targets");
    for (const auto& t : targets) {
        if (t.position_m.z < 0.0) throw ConfigError("target below the ground plane");
        if (t.position_m.z >= platform_reference_altitude_m)
            throw ConfigError("target at or above the reference altitude");
        if (!(t.rcs_m2 > 0.0)) throw ConfigError("target RCS must be positive");
        if (t.ground_reflection && std::abs(t.ground_reflection->coefficient) > 1.0 + 1e-12)
            throw ConfigError("|reflection coefficient| must be <= 1");
    }
}

double los_delay(const Vec3& platform_pos, const Target& target) {
    return 2.0 * distance(platform_pos, target.position_m) / constants::speed_of_light;
}

cpx los_gain(const Vec3& platform_pos, const Target& target, const WaveformConfig& wf,
             const Scene& scene) {
    const double r = distance(platform_pos, target.position_m);
    if (r <= 0.0) throw DegenerateGeometry("LoS gain undefined at zero range");
    const double lambda = wf.wavelength_m;
    const double magnitude =
        lambda * std::sqrt(scene.tx_gain * scene.rx_gain * target.rcs_m2) /
        (std::pow(4.0 * constants::pi, 1.5) * r * r);
    const double phase = -4.0 * constants::pi * r / lambda;
    return std::polar(magnitude, phase);
}

GroundBounceGeometry ground_reflection_path(const Vec3& platform_pos, const Target& target) {
    if (!target.ground_reflection)
        throw ConfigError("target has no ground reflection configured");
    // Image-target construction: specular bounce off z = 0 has the same path
    // length as the direct ray to the target mirrored below the plane.
    Vec3 image = target.position_m;
    image.z = -image.z;
    const double r_gr = distance(platform_pos, image);
    if (r_gr <= 0.0) throw DegenerateGeometry("platform coincides with the image target");
    GroundBounceGeometry g;
    g.r_ts = r_gr;
    g.r_st = r_gr;
    g.delay_s = 2.0 * r_gr / constants::speed_of_light;
    return g;
}

cpx ground_reflection_gain(const Vec3& platform_pos, const Target& target,
                           const WaveformConfig& wf, const Scene& scene) {
    const auto geom = ground_reflection_path(platform_pos, target);
    if (geom.r_ts <= 0.0 || geom.r_st <= 0.0)
        throw DegenerateGeometry("ground bounce leg has zero length");
    const cpx gamma = target.ground_reflection->coefficient;
    const double lambda = wf.wavelength_m;
    const double spreading = lambda / (4.0 * constants::pi * geom.r_ts) *
                             std::sqrt(target.rcs_m2) / (4.0 * constants::pi * geom.r_st);
    const double phase = -constants::two_pi / lambda * (geom.r_ts + geom.r_st);
    return gamma * std::sqrt(scene.tx_gain * scene.rx_gain) * spreading *
           std::polar(1.0, phase);
}

std::vector<cpx> steering_vector(double tau_s, double doppler_hz, const WaveformConfig& wf) {
    std::vector<cpx> atom;
    atom.reserve(wf.omega.size());
    // Per-axis phase tables; the atom is separable across (k, m).
    std::vector<cpx> col(wf.n_subcarriers), row(wf.n_symbols);
    for (int k = 0; k < wf.n_subcarriers; ++k)
        col[k] = std::polar(1.0, -constants::two_pi * k * wf.scs_hz * tau_s);
    for (int m = 0; m < wf.n_symbols; ++m)
        row[m] = std::polar(1.0, constants::two_pi * m * wf.symbol_duration_s * doppler_hz);
    for (const auto& [k, m] : wf.omega.entries) atom.push_back(col[k] * row[m]);
    return atom;
}

namespace {

// Range rate between the moving platform and a fixed point; platform moves
// along +y at scene velocity.
double range_rate(const Vec3& platform_pos, double platform_velocity, const Vec3& point) {
    const double r = distance(platform_pos, point);
    if (r <= 0.0) return 0.0;
    return platform_velocity * (platform_pos.y - point.y) / r;
}

}  // namespace

std::vector<PathGroundTruth> enumerate_paths(const Scene& scene, const WaveformConfig& wf,
                                             int baseline_index, int slow_time_index) {
    const Vec3 pos = scene.platform_position(baseline_index, slow_time_index);
    const double lambda = wf.wavelength_m;
    std::vector<PathGroundTruth> paths;
    for (int ti = 0; ti < static_cast<int>(scene.targets.size()); ++ti) {
        const Target& target = scene.targets[ti];

        PathGroundTruth los;
        los.kind = PathKind::LoS;
        los.target_index = ti;
        const double tau_los = los_delay(pos, target);
        los.delay_s = tau_los - wf.delay_reference_s;
        // Stop-and-hop: Doppler frozen at the snapshot's instantaneous
        // radial rate, v expressed in Hz.
        los.doppler_hz =
            -2.0 * range_rate(pos, scene.platform_velocity_mps, target.position_m) / lambda;
        // Equivalent gain; the phase -2 pi fc tau is already the phase the
        // Eq-style spreading gain carries, applied once.
        los.gain = los_gain(pos, target, wf, scene);
        if (los.delay_s < 0.0)
            throw ConfigError("delay reference exceeds a path delay");
        paths.push_back(los);

        if (target.ground_reflection) {
            const auto geom = ground_reflection_path(pos, target);
            PathGroundTruth gr;
            gr.kind = PathKind::GroundReflection;
            gr.target_index = ti;
            gr.delay_s = geom.delay_s - wf.delay_reference_s;
            Vec3 image = target.position_m;
            image.z = -image.z;
            gr.doppler_hz =
                -2.0 * range_rate(pos, scene.platform_velocity_mps, image) / lambda;
            gr.gain = ground_reflection_gain(pos, target, wf, scene);
            paths.push_back(gr);
        }
    }
    const double window = 1.0 / wf.scs_hz;
    for (const auto& p : paths)
        if (p.delay_s >= window)
            throw ConfigError("path delay exceeds the unambiguous window; adjust the delay reference");
    return paths;
}

double reference_los_gain_magnitude(const Scene& scene, const WaveformConfig& wf) {
    const Vec3 pos = scene.platform_position(0, 0);
    return std::abs(los_gain(pos, scene.targets.at(0), wf, scene));
}

ChannelObservation synthesize_observation(const Scene& scene, const WaveformConfig& wf,
                                          int baseline_index, int slow_time_index,
                                          std::uint64_t noise_seed) {
    scene.validate();
    wf.validate();
    if (baseline_index < 0 || baseline_index >= scene.n_baselines)
        throw ConfigError("baseline index out of range");

    ChannelObservation obs;
    obs.baseline_index = baseline_index;
    obs.slow_time_index = slow_time_index;
    obs.ground_truth = enumerate_paths(scene, wf, baseline_index, slow_time_index);

    double scale = 1.0;
    if (scene.normalize_gains) {
        const double ref = reference_los_gain_magnitude(scene, wf);
        if (ref > 0.0) scale = 1.0 / ref;
    }
    for (auto& p : obs.ground_truth) p.gain *= scale;

    obs.values.assign(wf.omega.size(), cpx{0.0, 0.0});
    for (const auto& path : obs.ground_truth) {
        const auto atom = steering_vector(path.delay_s, path.doppler_hz, wf);
        for (std::size_t i = 0; i < atom.size(); ++i) obs.values[i] += path.gain * atom[i];
    }

    if (scene.noise_power > 0.0) {
        std::mt19937_64 rng(noise_seed);
        std::normal_distribution<double> normal(0.0, std::sqrt(scene.noise_power / 2.0));
        for (auto& v : obs.values) {
            const double re = normal(rng);
            const double im = normal(rng);
            v += cpx{re, im};
        }
    }
    return obs;
}

}  // namespace nrtomo
