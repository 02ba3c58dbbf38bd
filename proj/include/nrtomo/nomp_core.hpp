#ifndef NRTOMO_NOMP_CORE_HPP
#define NRTOMO_NOMP_CORE_HPP

#include <Eigen/Dense>
#include <vector>

#include "nrtomo/common.hpp"
#include "nrtomo/scene_sim.hpp"

namespace nrtomo {

struct DetectorConfig {
    // Absolute stop threshold for max|C|^2. <= 0 selects the CFAR-style
    // rule delta = ln(n_bins / false_alarm_rate) * sigma^2 * |omega|.
    double stop_threshold = 0.0;
    int oversampling_factor = 4;   // gamma, both axes
    int max_paths = 8;
    double newton_tolerance = 1e-6;  // step norm in grid cells
    int max_newton_iterations = 20;
    int global_rounds = 10;
    // Cyclic refinement sweeps over all detected paths after each new
    // detection; clears inter-path leakage before the next stop test.
    int refine_rounds_per_detection = 3;
    double false_alarm_rate = 0.01;
    // Known noise variance per sample; NaN estimates it from the residual
    // spectrum median.
    double noise_variance_hint = std::numeric_limits<double>::quiet_NaN();

    void validate() const;
};

struct PathEstimate {
    double delay_s = 0.0;
    double doppler_hz = 0.0;
    cpx gain{0.0, 0.0};
    double objective_value = 0.0;  // |<a(theta), h with path re-added>|^2 / |omega|
};

struct EstimationResult {
    std::vector<PathEstimate> paths;
    std::vector<double> residual_energy_trace;  // E_0 then one entry per accepted step
    int n_coarse_detections = 0;
    bool max_paths_reached = false;
};

/// Detection state kept between the greedy stage and global refinement.
struct DetectionState {
    std::vector<PathEstimate> paths;
    std::vector<cpx> residual;
    std::vector<double> energy_trace;
    int n_coarse_detections = 0;
    bool max_paths_reached = false;
};

/// 2D delay/Doppler correlation spectrum of the residual, oversampled by
/// cfg.oversampling_factor on both axes. Entry (p, q) is the exact inner
/// product <a(tau_p, v_q), residual> with tau_p = p / (gamma N scs) and
/// v_q = (q - floor(gamma M / 2)) / (gamma M T0) (Doppler axis fftshifted).
Eigen::MatrixXcd correlation_spectrum(const std::vector<cpx>& residual,
                                      const WaveformConfig& wf, const DetectorConfig& cfg);

double spectrum_delay_at(int p, const WaveformConfig& wf, const DetectorConfig& cfg);
double spectrum_doppler_at(int q, const WaveformConfig& wf, const DetectorConfig& cfg);

struct CoarseDetection {
    double delay_s = 0.0;
    double doppler_hz = 0.0;
    cpx gain{0.0, 0.0};
    double peak_power = 0.0;  // max |C|^2
};

/// Peak pick on the correlation spectrum; ties resolved toward the lowest
/// delay index, then the lowest Doppler index.
CoarseDetection coarse_detect(const std::vector<cpx>& residual, const WaveformConfig& wf,
                              const DetectorConfig& cfg);

/// Concentrated objective S(theta) = |a(theta)^H h|^2 / |omega|.
double concentrated_objective(double tau_s, double doppler_hz, const std::vector<cpx>& obs,
                              const WaveformConfig& wf);

/// Objective with derivatives in grid-cell coordinates
/// (x1 = tau * N * scs, x2 = v * M * T0).
struct ObjectiveEval {
    double value = 0.0;
    Eigen::Vector2d gradient = Eigen::Vector2d::Zero();
    Eigen::Matrix2d hessian = Eigen::Matrix2d::Zero();
    cpx beta{0.0, 0.0};  // optimal amplitude at theta
};

ObjectiveEval evaluate_objective_scaled(double x1, double x2, const std::vector<cpx>& obs,
                                        const WaveformConfig& wf);

struct RefineResult {
    double delay_s = 0.0;
    double doppler_hz = 0.0;
    cpx gain{0.0, 0.0};
    int n_iterations = 0;
    double objective = 0.0;
};

/// Newton-refines one path against the observation that still contains it.
/// Steps are accepted only when they strictly increase the concentrated
/// objective; a safeguarded ascent step replaces Newton when the Hessian is
/// not negative definite. Never returns a worse point than the start.
RefineResult newton_refine_single(double tau0_s, double doppler0_hz,
                                  const std::vector<cpx>& observation_for_path,
                                  const WaveformConfig& wf, const DetectorConfig& cfg);

/// Greedy stage only: coarse detect, locally refine the newest path,
/// subtract, repeat until the stop rule or max_paths.
DetectionState detect_paths(const std::vector<cpx>& observation, const WaveformConfig& wf,
                            const DetectorConfig& cfg);

/// Cyclic re-add / refine / re-solve / subtract sweeps over all paths for
/// cfg.global_rounds rounds. Residual energy never increases.
void global_refine(DetectionState& state, const WaveformConfig& wf, const DetectorConfig& cfg);

/// Full estimator: detection, global refinement, per-path objective values.
EstimationResult detect_all(const std::vector<cpx>& observation, const WaveformConfig& wf,
                            const DetectorConfig& cfg);
EstimationResult detect_all(const ChannelObservation& observation, const WaveformConfig& wf,
                            const DetectorConfig& cfg);

/// Grid-only baseline: same detector and stop rule, no Newton refinement,
/// joint least-squares amplitude re-solve over the selected atoms each
/// iteration.
EstimationResult omp_baseline(const std::vector<cpx>& observation, const WaveformConfig& wf,
                              const DetectorConfig& cfg);
EstimationResult omp_baseline(const ChannelObservation& observation, const WaveformConfig& wf,
                              const DetectorConfig& cfg);

double residual_energy(const std::vector<cpx>& residual);

}  // namespace nrtomo

#endif  // NRTOMO_NOMP_CORE_HPP
