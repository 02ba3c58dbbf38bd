#ifndef NRTOMO_BENCH_HPP
#define NRTOMO_BENCH_HPP

#include <optional>
#include <string>
#include <vector>

#include "nrtomo/common.hpp"
#include "nrtomo/nomp_core.hpp"
#include "nrtomo/nr_frame.hpp"
#include "nrtomo/path_classify.hpp"
#include "nrtomo/scene_sim.hpp"
#include "nrtomo/tomo_fusion.hpp"

namespace nrtomo {

inline constexpr const char* kToolVersion = "0.1.0";

enum class Algorithm { EdNomp, Nomp, Omp };

std::string algorithm_name(Algorithm a);
Algorithm algorithm_from_name(const std::string& name);

/// Reliability model behind the fusion weights (documented heuristic):
/// sigma_A = music_sigma_scale * Rayleigh resolution, sigma_B propagated
/// from per-path delay precision delay_sigma_cells / sqrt(post SNR).
struct FusionWeightConfig {
    double music_sigma_scale = 0.1;
    double delay_sigma_cells = 0.39;  // (1/2pi)*sqrt(6), single-tone precision scale
};

struct ExperimentSpec {
    WaveformConfig waveform;
    Scene scene;
    DetectorConfig detector;
    ClassifierConfig classifier;
    ElevationConfig elevation;
    FusionWeightConfig fusion;
    std::optional<RadarRequirements> radar;

    std::vector<double> snr_grid_db{-10.0, -5.0, 0.0, 5.0, 10.0};
    std::vector<int> baseline_counts{6, 8, 10};
    int n_trials = 100;
    int n_snapshots = 3;
    std::vector<Algorithm> algorithms{Algorithm::EdNomp, Algorithm::Nomp, Algorithm::Omp};
    std::optional<std::uint64_t> seed;
    bool emit_spectra = true;
    int n_threads = 0;  // 0 = hardware concurrency

    void validate() const;
};

struct RmseCell {
    Algorithm algorithm = Algorithm::Nomp;
    int n_baselines = 0;
    double snr_db = 0.0;
    double rmse_height_m = 0.0;
    double rmse_range_m = 0.0;
    double rmse_velocity_mps = 0.0;
    double mean_detected_paths = 0.0;
    int trial_count = 0;  // successes
    int failures = 0;
    double mean_trial_ms = 0.0;  // wall time; reported separately, not in rmse.csv
};

struct SpectrumCapture {
    Algorithm algorithm = Algorithm::Nomp;
    int n_baselines = 0;
    double snr_db = 0.0;
    Eigen::VectorXd z_grid_m;
    Eigen::VectorXd spectrum;
};

struct RmseReport {
    std::vector<RmseCell> cells;
    std::vector<SpectrumCapture> spectra;
};

/// Single-trial pipeline product for one detector family; exposed for tests.
struct TrialResult {
    bool ok = false;
    std::string failure;
    double height_error_m = 0.0;
    double range_error_m = 0.0;
    double velocity_error_mps = 0.0;
    double mean_detected_paths = 0.0;
    double z_music_m = 0.0;
    std::optional<double> z_gr_m;
    FusedHeight fused;
    std::optional<MusicResult> music;  // captured on request
};

/// Runs one Monte-Carlo trial for one algorithm at the given cell.
TrialResult run_trial(const ExperimentSpec& spec, Algorithm algo, int n_baselines,
                      double snr_db, int snr_index, int trial_index, bool capture_spectrum);

/// Full sweep over (algorithm, baseline count, SNR, trial); deterministic
/// under a fixed seed, trials run on a thread pool.
RmseReport run_experiment(const ExperimentSpec& spec);

/// Numerology planning front-end (the `plan` subcommand).
NumerologyPlan plan_frame(const RadarRequirements& req,
                          MuTieBreak tie = MuTieBreak::PreferSmallest);

}  // namespace nrtomo

#endif  // NRTOMO_BENCH_HPP
