#include "nrtomo/bench.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <thread>

namespace nrtomo {

std::string algorithm_name(Algorithm a) {
    switch (a) {
        case Algorithm::EdNomp: return "ed-nomp";
        case Algorithm::Nomp: return "nomp";
        case Algorithm::Omp: return "omp";
    }
    return "unknown";
}

Algorithm algorithm_from_name(const std::string& name) {
    if (name == "ed-nomp" || name == "ED-NOMP" || name == "ednomp") return Algorithm::EdNomp;
    if (name == "nomp" || name == "NOMP") return Algorithm::Nomp;
    if (name == "omp" || name == "OMP") return Algorithm::Omp;
    throw ConfigError("unknown algorithm '" + name + "'");
}

void ExperimentSpec::validate() const {
    waveform.validate();
    scene.validate();
    detector.validate();
    classifier.validate();
    elevation.validate();
    if (n_trials < 1) throw ConfigError("n_trials must be >= 1");
    if (n_snapshots < 1) throw ConfigError("n_snapshots must be >= 1");
    if (snr_grid_db.empty()) throw ConfigError("snr grid is empty");
    for (int l : baseline_counts)
        if (l < 2) throw ConfigError("every baseline count must be >= 2");
    if (baseline_counts.empty()) throw ConfigError("baseline counts are empty");
    if (!seed) throw ConfigError("a seed is required for reproducible runs");
}

NumerologyPlan plan_frame(const RadarRequirements& req, MuTieBreak tie) {
    return select_numerology(req, tie);
}

namespace {

struct TrialContext {
    Scene scene;
    WaveformConfig wf;
    std::vector<ChannelObservation> observations;  // index = i * n_snapshots + eta
    int n_baselines = 0;
    int n_snapshots = 0;
};

double min_los_delay(const Scene& scene, int n_snapshots) {
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i < scene.n_baselines; ++i)
        for (int eta = 0; eta < n_snapshots; ++eta) {
            const Vec3 pos = scene.platform_position(i, eta);
            for (const auto& t : scene.targets) best = std::min(best, los_delay(pos, t));
        }
    return best;
}

TrialContext build_trial_context(const ExperimentSpec& spec, int n_baselines, double snr_db,
                                 int snr_index, int trial_index) {
    TrialContext ctx;
    ctx.n_baselines = n_baselines;
    ctx.n_snapshots = spec.n_snapshots;
    ctx.scene = spec.scene;
    ctx.scene.n_baselines = n_baselines;
    ctx.wf = spec.waveform;

    // Per-sample SNR convention: |beta_los|^2 / noise_power.
    const double ref_mag =
        ctx.scene.normalize_gains ? 1.0 : reference_los_gain_magnitude(ctx.scene, ctx.wf);
    ctx.scene.noise_power = ref_mag * ref_mag * std::pow(10.0, -snr_db / 10.0);

    // Fast-time gating: park the earliest arrival a few fine cells into the
    // delay window.
    const double fine_cell =
        1.0 / (static_cast<double>(spec.detector.oversampling_factor) * ctx.wf.n_subcarriers *
               ctx.wf.scs_hz);
    const double tau_min = min_los_delay(ctx.scene, ctx.n_snapshots);
    ctx.wf.delay_reference_s = std::max(0.0, tau_min - 3.0 * fine_cell);

    const std::uint64_t seed = spec.seed.value_or(0);
    ctx.observations.reserve(static_cast<std::size_t>(n_baselines) * ctx.n_snapshots);
    for (int i = 0; i < n_baselines; ++i)
        for (int eta = 0; eta < ctx.n_snapshots; ++eta) {
            const std::uint64_t obs_seed = mix_seed(
                seed, static_cast<std::uint64_t>(snr_index),
                static_cast<std::uint64_t>(trial_index),
                (static_cast<std::uint64_t>(i) << 16) | static_cast<std::uint64_t>(eta));
            ctx.observations.push_back(
                synthesize_observation(ctx.scene, ctx.wf, i, eta, obs_seed));
        }
    return ctx;
}

struct FamilyOutcome {
    bool ok = false;
    std::string failure;
    double range_error_m = 0.0;
    double velocity_error_mps = 0.0;
    double mean_detected_paths = 0.0;
    double z_music_m = 0.0;
    std::optional<double> z_gr_m;
    FusionDiagnostics diag;
    std::optional<MusicResult> music;
    double z_true_m = 0.0;
};

double nearest_target_height(double z_hat, const Scene& scene) {
    double best = scene.targets.front().position_m.z;
    for (const auto& t : scene.targets)
        if (std::abs(z_hat - t.position_m.z) < std::abs(z_hat - best)) best = t.position_m.z;
    return best;
}

const PathGroundTruth& los_truth(const ChannelObservation& obs) {
    for (const auto& p : obs.ground_truth)
        if (p.kind == PathKind::LoS && p.target_index == 0) return p;
    throw ConfigError("observation has no LoS ground truth");
}

FamilyOutcome run_family(const ExperimentSpec& spec, const TrialContext& ctx, bool omp_family,
                         bool capture_spectrum) {
    FamilyOutcome out;
    const int l = ctx.n_baselines;
    const int s = ctx.n_snapshots;
    const double w = static_cast<double>(ctx.wf.omega.size());
    const double lambda = ctx.wf.wavelength_m;

    std::vector<ClassifiedPaths> classified(static_cast<std::size_t>(l) * s);
    std::vector<double> range_hats(classified.size(), 0.0);
    double paths_sum = 0.0;

    // Ground-reflection aggregation across every observation.
    double zb_sum = 0.0, zb_var_sum = 0.0;
    int zb_count = 0;

    try {
        for (int i = 0; i < l; ++i) {
            for (int eta = 0; eta < s; ++eta) {
                const std::size_t idx = static_cast<std::size_t>(i) * s + eta;
                const ChannelObservation& obs = ctx.observations[idx];
                const EstimationResult est = omp_family
                                                 ? omp_baseline(obs, ctx.wf, spec.detector)
                                                 : detect_all(obs, ctx.wf, spec.detector);
                paths_sum += static_cast<double>(est.paths.size());
                if (est.paths.empty()) throw NoPathsDetected("detector returned no paths");

                // Back to absolute delays before the geometric inversion.
                std::vector<PathEstimate> abs_paths = est.paths;
                for (auto& p : abs_paths) p.delay_s += ctx.wf.delay_reference_s;

                const double h_i = ctx.scene.baseline_altitude(i);
                classified[idx] = classify_paths(abs_paths, lambda, h_i, spec.classifier);
                range_hats[idx] = classified[idx].range_m;

                if (const auto zb = gr_height(classified[idx])) {
                    // Reliability of this observation's height inversion,
                    // propagated from single-tone delay precision.
                    const double sigma2_res =
                        std::max(est.residual_energy_trace.back() / w, 0.0);
                    const GrCandidate* best = &classified[idx].gr_candidates.front();
                    for (const auto& cand : classified[idx].gr_candidates)
                        if (std::abs(cand.path.gain) > std::abs(best->path.gain))
                            best = &cand;
                    const double snr_los =
                        std::norm(classified[idx].los.gain) * w / std::max(sigma2_res, 1e-300);
                    const double snr_gr =
                        std::norm(best->path.gain) * w / std::max(sigma2_res, 1e-300);
                    const double sigma_cells =
                        spec.fusion.delay_sigma_cells *
                        std::sqrt(1.0 / std::max(snr_los, 1e-12) +
                                  1.0 / std::max(snr_gr, 1e-12));
                    const double sigma_dtau =
                        sigma_cells / (ctx.wf.n_subcarriers * ctx.wf.scs_hz);
                    const double sigma_z = constants::speed_of_light *
                                           classified[idx].range_m * sigma_dtau / (4.0 * h_i);
                    zb_sum += *zb;
                    zb_var_sum += sigma_z * sigma_z;
                    ++zb_count;
                }
            }
        }

        // Reference geometry from the estimates themselves (baseline 0).
        double r0 = 0.0;
        for (int eta = 0; eta < s; ++eta) r0 += range_hats[eta];
        r0 /= s;
        const double h0 = ctx.scene.baseline_altitude(0);
        const double ground_range =
            std::sqrt(std::max(r0 * r0 - h0 * h0, 1.0));

        std::vector<BaselineStack> stacks;
        stacks.reserve(s);
        for (int eta = 0; eta < s; ++eta) {
            BaselineStack stack;
            stack.gains.resize(l);
            stack.altitudes_m.resize(l);
            for (int i = 0; i < l; ++i) {
                stack.gains(i) = classified[static_cast<std::size_t>(i) * s + eta].los.gain;
                stack.altitudes_m(i) = ctx.scene.baseline_altitude(i);
            }
            stack.reference_range_m = r0;
            stack.wavelength_m = lambda;
            stacks.push_back(deramp_ground_phase(stack, ground_range));
        }

        const MusicResult music = music_elevation(stacks, spec.elevation);
        out.z_music_m = music.z_hat_m;
        if (capture_spectrum) out.music = music;

        const double rayleigh = rayleigh_elevation_resolution(stacks.front());
        const double sigma_a = std::max(spec.fusion.music_sigma_scale * rayleigh, 1e-6);
        out.diag.snr_a = 1.0 / (sigma_a * sigma_a);
        if (zb_count > 0) {
            out.z_gr_m = zb_sum / zb_count;
            const double sigma_b =
                std::max(std::sqrt(zb_var_sum) / zb_count, 1e-6);  // sqrt(mean var / n)
            out.diag.snr_b = 1.0 / (sigma_b * sigma_b);
            const double sigma_c = std::max(0.5 * rayleigh, 1e-6);
            const double dz = out.z_music_m - *out.z_gr_m;
            out.diag.consistency = std::exp(-dz * dz / (2.0 * sigma_c * sigma_c));
        }

        // Range and velocity are reported at the reference observation.
        const PathGroundTruth& gt = los_truth(ctx.observations.front());
        const double r_true = constants::speed_of_light *
                              (gt.delay_s + ctx.wf.delay_reference_s) / 2.0;
        const double v_true = lambda * gt.doppler_hz / 2.0;
        out.range_error_m = classified.front().range_m - r_true;
        out.velocity_error_mps = classified.front().radial_velocity_mps - v_true;
        out.mean_detected_paths = paths_sum / static_cast<double>(l * s);
        out.z_true_m = nearest_target_height(out.z_music_m, ctx.scene);
        out.ok = true;
    } catch (const NoPathsDetected& e) {
        out.failure = std::string("no_paths: ") + e.what();
    } catch (const DegenerateLoS& e) {
        out.failure = std::string("degenerate_los: ") + e.what();
    } catch (const RankDeficientCovariance& e) {
        out.failure = std::string("rank_deficient: ") + e.what();
    } catch (const InvalidGeometry& e) {
        out.failure = std::string("invalid_geometry: ") + e.what();
    }
    return out;
}

struct AlgoTrialErrors {
    bool ok = false;
    double height_err = 0.0;
    double range_err = 0.0;
    double velocity_err = 0.0;
    double mean_paths = 0.0;
};

AlgoTrialErrors errors_for(const ExperimentSpec& spec, const FamilyOutcome& fam,
                           Algorithm algo, const Scene& scene) {
    AlgoTrialErrors e;
    if (!fam.ok) return e;
    double z_hat = fam.z_music_m;
    if (algo == Algorithm::EdNomp) {
        z_hat = fuse_heights(fam.z_music_m, fam.z_gr_m, fam.diag).z_fused_m;
    }
    e.ok = true;
    e.height_err = z_hat - nearest_target_height(z_hat, scene);
    e.range_err = fam.range_error_m;
    e.velocity_err = fam.velocity_error_mps;
    e.mean_paths = fam.mean_detected_paths;
    return e;
}

}  // namespace

TrialResult run_trial(const ExperimentSpec& spec, Algorithm algo, int n_baselines,
                      double snr_db, int snr_index, int trial_index, bool capture_spectrum) {
    const TrialContext ctx =
        build_trial_context(spec, n_baselines, snr_db, snr_index, trial_index);
    const FamilyOutcome fam =
        run_family(spec, ctx, algo == Algorithm::Omp, capture_spectrum);
    TrialResult out;
    out.ok = fam.ok;
    out.failure = fam.failure;
    if (!fam.ok) return out;
    out.z_music_m = fam.z_music_m;
    out.z_gr_m = fam.z_gr_m;
    out.music = fam.music;
    out.fused = (algo == Algorithm::EdNomp)
                    ? fuse_heights(fam.z_music_m, fam.z_gr_m, fam.diag)
                    : fuse_heights(fam.z_music_m, std::nullopt, fam.diag);
    const AlgoTrialErrors e = errors_for(spec, fam, algo, ctx.scene);
    out.height_error_m = e.height_err;
    out.range_error_m = e.range_err;
    out.velocity_error_mps = e.velocity_err;
    out.mean_detected_paths = e.mean_paths;
    return out;
}

RmseReport run_experiment(const ExperimentSpec& spec) {
    spec.validate();
    const bool want_ed = std::count(spec.algorithms.begin(), spec.algorithms.end(),
                                    Algorithm::EdNomp) > 0;
    const bool want_nomp = std::count(spec.algorithms.begin(), spec.algorithms.end(),
                                      Algorithm::Nomp) > 0;
    const bool want_omp = std::count(spec.algorithms.begin(), spec.algorithms.end(),
                                     Algorithm::Omp) > 0;
    const bool need_nomp_family = want_ed || want_nomp;

    const int n_l = static_cast<int>(spec.baseline_counts.size());
    const int n_snr = static_cast<int>(spec.snr_grid_db.size());
    const int n_trials = spec.n_trials;

    int top_snr_index = 0;
    for (int i = 1; i < n_snr; ++i)
        if (spec.snr_grid_db[i] > spec.snr_grid_db[top_snr_index]) top_snr_index = i;

    struct Slot {
        AlgoTrialErrors ed, nomp, omp;
        double ms = 0.0;
        std::optional<MusicResult> nomp_music, omp_music;
    };
    std::vector<Slot> slots(static_cast<std::size_t>(n_l) * n_snr * n_trials);
    auto slot_at = [&](int li, int si, int t) -> Slot& {
        return slots[(static_cast<std::size_t>(li) * n_snr + si) * n_trials + t];
    };

    struct Task {
        int li, si, trial;
    };
    std::vector<Task> tasks;
    tasks.reserve(slots.size());
    for (int li = 0; li < n_l; ++li)
        for (int si = 0; si < n_snr; ++si)
            for (int t = 0; t < n_trials; ++t) tasks.push_back(Task{li, si, t});

    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        while (true) {
            const std::size_t k = next.fetch_add(1);
            if (k >= tasks.size()) break;
            const Task task = tasks[k];
            const int l = spec.baseline_counts[task.li];
            const double snr = spec.snr_grid_db[task.si];
            const bool capture = spec.emit_spectra && task.trial == 0 &&
                                 task.si == top_snr_index;
            const auto t0 = std::chrono::steady_clock::now();
            const TrialContext ctx =
                build_trial_context(spec, l, snr, task.si, task.trial);
            Slot& slot = slot_at(task.li, task.si, task.trial);
            if (need_nomp_family) {
                const FamilyOutcome fam = run_family(spec, ctx, false, capture);
                slot.ed = errors_for(spec, fam, Algorithm::EdNomp, ctx.scene);
                slot.nomp = errors_for(spec, fam, Algorithm::Nomp, ctx.scene);
                if (capture && fam.music) slot.nomp_music = fam.music;
            }
            if (want_omp) {
                const FamilyOutcome fam = run_family(spec, ctx, true, capture);
                slot.omp = errors_for(spec, fam, Algorithm::Omp, ctx.scene);
                if (capture && fam.music) slot.omp_music = fam.music;
            }
            slot.ms = std::chrono::duration<double, std::milli>(
                          std::chrono::steady_clock::now() - t0)
                          .count();
        }
    };

    int n_threads = spec.n_threads > 0
                        ? spec.n_threads
                        : static_cast<int>(std::thread::hardware_concurrency());
    n_threads = std::max(1, std::min<int>(n_threads, static_cast<int>(tasks.size())));
    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    for (int i = 0; i < n_threads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();

    RmseReport report;
    for (Algorithm algo : spec.algorithms) {
        for (int li = 0; li < n_l; ++li) {
            for (int si = 0; si < n_snr; ++si) {
                RmseCell cell;
                cell.algorithm = algo;
                cell.n_baselines = spec.baseline_counts[li];
                cell.snr_db = spec.snr_grid_db[si];
                double sh = 0.0, sr = 0.0, sv = 0.0, sp = 0.0, ms = 0.0;
                int ok_count = 0;
                for (int t = 0; t < n_trials; ++t) {
                    const Slot& slot = slot_at(li, si, t);
                    const AlgoTrialErrors& e = (algo == Algorithm::EdNomp)  ? slot.ed
                                               : (algo == Algorithm::Nomp) ? slot.nomp
                                                                           : slot.omp;
                    ms += slot.ms;
                    if (!e.ok) continue;
                    ++ok_count;
                    sh += e.height_err * e.height_err;
                    sr += e.range_err * e.range_err;
                    sv += e.velocity_err * e.velocity_err;
                    sp += e.mean_paths;
                }
                cell.trial_count = ok_count;
                cell.failures = n_trials - ok_count;
                if (ok_count > 0) {
                    cell.rmse_height_m = std::sqrt(sh / ok_count);
                    cell.rmse_range_m = std::sqrt(sr / ok_count);
                    cell.rmse_velocity_mps = std::sqrt(sv / ok_count);
                    cell.mean_detected_paths = sp / ok_count;
                }
                cell.mean_trial_ms = ms / n_trials;
                report.cells.push_back(cell);
            }
        }
    }

    if (spec.emit_spectra) {
        for (Algorithm algo : spec.algorithms) {
            for (int li = 0; li < n_l; ++li) {
                const Slot& slot = slot_at(li, top_snr_index, 0);
                const std::optional<MusicResult>& mr =
                    (algo == Algorithm::Omp) ? slot.omp_music : slot.nomp_music;
                if (!mr) continue;
                SpectrumCapture cap;
                cap.algorithm = algo;
                cap.n_baselines = spec.baseline_counts[li];
                cap.snr_db = spec.snr_grid_db[top_snr_index];
                cap.z_grid_m = mr->z_grid_m;
                cap.spectrum = mr->spectrum;
                report.spectra.push_back(cap);
            }
        }
    }
    return report;
}

}  // namespace nrtomo
