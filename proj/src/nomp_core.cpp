#include "nrtomo/nomp_core.hpp"

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <limits>

namespace nrtomo {

void DetectorConfig::validate() const {
    if (oversampling_factor < 1) throw ConfigError("oversampling factor must be >= 1");
    if (max_paths <= 0) throw ConfigError("max_paths must be positive");
    if (!(newton_tolerance > 0.0)) throw ConfigError("newton tolerance must be positive");
    if (max_newton_iterations <= 0) throw ConfigError("newton iteration cap must be positive");
    if (global_rounds < 1) throw ConfigError("global_rounds must be >= 1");
    if (!(false_alarm_rate > 0.0) && stop_threshold <= 0.0)
        throw ConfigError("false alarm rate must be positive under the automatic stop rule");
}

double residual_energy(const std::vector<cpx>& residual) {
    double e = 0.0;
    for (const auto& v : residual) e += std::norm(v);
    return e;
}

double spectrum_delay_at(int p, const WaveformConfig& wf, const DetectorConfig& cfg) {
    const double gn = static_cast<double>(cfg.oversampling_factor) * wf.n_subcarriers;
    return p / (gn * wf.scs_hz);
}

double spectrum_doppler_at(int q, const WaveformConfig& wf, const DetectorConfig& cfg) {
    const int gm = cfg.oversampling_factor * wf.n_symbols;
    const int half = gm / 2;
    return (q - half) / (static_cast<double>(gm) * wf.symbol_duration_s);
}

Eigen::MatrixXcd correlation_spectrum(const std::vector<cpx>& residual,
                                      const WaveformConfig& wf, const DetectorConfig& cfg) {
    if (residual.size() != wf.omega.size())
        throw ConfigError("residual length does not match the active index set");
    const int gn = cfg.oversampling_factor * wf.n_subcarriers;
    const int gm = cfg.oversampling_factor * wf.n_symbols;
    const int half = gm / 2;

    // Zero-filled residual matrix, subcarrier-major.
    Eigen::MatrixXcd r = Eigen::MatrixXcd::Zero(wf.n_subcarriers, gm);
    for (std::size_t i = 0; i < wf.omega.entries.size(); ++i) {
        const auto& [k, m] = wf.omega.entries[i];
        r(k, m) = residual[i];
    }

    Eigen::FFT<double> fft;
    // Forward DFT along the symbol axis: sum_m R[k,m] e^{-j2pi m q / (gm)}.
    Eigen::MatrixXcd stage(wf.n_subcarriers, gm);
    Eigen::VectorXcd in(gm), out(gm);
    for (int k = 0; k < wf.n_subcarriers; ++k) {
        in = r.row(k).transpose();
        fft.fwd(out, in);
        stage.row(k) = out.transpose();
    }
    // Unnormalized inverse DFT along the subcarrier axis via
    // conj(fwd(conj(x))): sum_k X[k,q] e^{+j2pi k p / (gn)}.
    Eigen::MatrixXcd raw(gn, gm);
    Eigen::VectorXcd col = Eigen::VectorXcd::Zero(gn), colout(gn);
    for (int q = 0; q < gm; ++q) {
        col.setZero();
        col.head(wf.n_subcarriers) = stage.col(q).conjugate();
        fft.fwd(colout, col);
        raw.col(q) = colout.conjugate();
    }
    // fftshift the Doppler axis so column q maps to (q - gm/2) bins.
    Eigen::MatrixXcd shifted(gn, gm);
    for (int q = 0; q < gm; ++q) {
        const int b = ((q - half) % gm + gm) % gm;
        shifted.col(q) = raw.col(b);
    }
    return shifted;
}

CoarseDetection coarse_detect(const std::vector<cpx>& residual, const WaveformConfig& wf,
                              const DetectorConfig& cfg) {
    const Eigen::MatrixXcd c = correlation_spectrum(residual, wf, cfg);
    CoarseDetection det;
    int best_p = 0, best_q = 0;
    double best = -1.0;
    for (int p = 0; p < c.rows(); ++p) {
        for (int q = 0; q < c.cols(); ++q) {
            const double power = std::norm(c(p, q));
            if (power > best) {
                best = power;
                best_p = p;
                best_q = q;
            }
        }
    }
    det.delay_s = spectrum_delay_at(best_p, wf, cfg);
    det.doppler_hz = spectrum_doppler_at(best_q, wf, cfg);
    det.gain = c(best_p, best_q) / static_cast<double>(wf.omega.size());
    det.peak_power = best;
    return det;
}

namespace {

// Weighted correlations G_rs = sum u_k^r w_m^s conj(a)_km h_km over omega,
// with u_k = 2 pi k / N, w_m = 2 pi m / M and the atom expressed in grid
// cells (x1 = tau N scs, x2 = v M T0).
struct Correlations {
    cpx g00, g10, g01, g20, g02, g11;
};

Correlations weighted_correlations(double x1, double x2, const std::vector<cpx>& obs,
                                   const WaveformConfig& wf) {
    const int n = wf.n_subcarriers;
    const int m = wf.n_symbols;
    thread_local std::vector<cpx> col, row;
    thread_local std::vector<double> uk, wm;
    col.resize(n);
    row.resize(m);
    uk.resize(n);
    wm.resize(m);
    for (int k = 0; k < n; ++k) {
        uk[k] = constants::two_pi * k / n;
        col[k] = std::polar(1.0, uk[k] * x1);  // conj of the atom's delay factor
    }
    for (int j = 0; j < m; ++j) {
        wm[j] = constants::two_pi * j / m;
        row[j] = std::polar(1.0, -wm[j] * x2);  // conj of the Doppler factor
    }
    Correlations c{};
    for (std::size_t i = 0; i < wf.omega.entries.size(); ++i) {
        const auto& [k, j] = wf.omega.entries[i];
        const cpx base = col[k] * row[j] * obs[i];
        c.g00 += base;
        c.g10 += uk[k] * base;
        c.g01 += wm[j] * base;
        c.g20 += uk[k] * uk[k] * base;
        c.g02 += wm[j] * wm[j] * base;
        c.g11 += uk[k] * wm[j] * base;
    }
    return c;
}

double objective_only(double x1, double x2, const std::vector<cpx>& obs,
                      const WaveformConfig& wf) {
    const int n = wf.n_subcarriers;
    const int m = wf.n_symbols;
    thread_local std::vector<cpx> col, row;
    col.resize(n);
    row.resize(m);
    for (int k = 0; k < n; ++k) col[k] = std::polar(1.0, constants::two_pi * k * x1 / n);
    for (int j = 0; j < m; ++j) row[j] = std::polar(1.0, -constants::two_pi * j * x2 / m);
    cpx g00{0.0, 0.0};
    for (std::size_t i = 0; i < wf.omega.entries.size(); ++i) {
        const auto& [k, j] = wf.omega.entries[i];
        g00 += col[k] * row[j] * obs[i];
    }
    return std::norm(g00) / static_cast<double>(wf.omega.size());
}

}  // namespace

ObjectiveEval evaluate_objective_scaled(double x1, double x2, const std::vector<cpx>& obs,
                                        const WaveformConfig& wf) {
    const double w = static_cast<double>(wf.omega.size());
    const Correlations c = weighted_correlations(x1, x2, obs, wf);
    ObjectiveEval eval;
    eval.value = std::norm(c.g00) / w;
    eval.beta = c.g00 / w;
    const cpx g00c = std::conj(c.g00);
    eval.gradient(0) = -2.0 / w * std::imag(g00c * c.g10);
    eval.gradient(1) = 2.0 / w * std::imag(g00c * c.g01);
    eval.hessian(0, 0) = 2.0 / w * (std::norm(c.g10) - std::real(g00c * c.g20));
    eval.hessian(1, 1) = 2.0 / w * (std::norm(c.g01) - std::real(g00c * c.g02));
    eval.hessian(0, 1) = 2.0 / w *
                         (std::real(g00c * c.g11) - std::real(std::conj(c.g01) * c.g10));
    eval.hessian(1, 0) = eval.hessian(0, 1);
    return eval;
}

double concentrated_objective(double tau_s, double doppler_hz, const std::vector<cpx>& obs,
                              const WaveformConfig& wf) {
    const double x1 = tau_s * wf.n_subcarriers * wf.scs_hz;
    const double x2 = doppler_hz * wf.n_symbols * wf.symbol_duration_s;
    return objective_only(x1, x2, obs, wf);
}

RefineResult newton_refine_single(double tau0_s, double doppler0_hz,
                                  const std::vector<cpx>& observation_for_path,
                                  const WaveformConfig& wf, const DetectorConfig& cfg) {
    const double delay_scale = wf.n_subcarriers * wf.scs_hz;
    const double doppler_scale = wf.n_symbols * wf.symbol_duration_s;
    double x1 = tau0_s * delay_scale;
    double x2 = doppler0_hz * doppler_scale;

    ObjectiveEval cur = evaluate_objective_scaled(x1, x2, observation_for_path, wf);
    int iters = 0;
    constexpr int kMaxBacktracks = 12;
    constexpr double kAscentStep = 0.25;  // grid cells

    for (; iters < cfg.max_newton_iterations; ++iters) {
        Eigen::Vector2d dir;
        const double det = cur.hessian.determinant();
        const bool negative_definite = cur.hessian(0, 0) < 0.0 && det > 0.0;
        if (negative_definite) {
            dir = -cur.hessian.inverse() * cur.gradient;
        } else {
            // Ridge of the objective: fall back to a short ascent step.
            const double gnorm = cur.gradient.norm();
            if (gnorm == 0.0) break;
            dir = cur.gradient * (kAscentStep / gnorm);
        }

        // Backtrack until the step strictly improves the objective.
        bool accepted = false;
        double step_norm = 0.0;
        for (int bt = 0; bt < kMaxBacktracks; ++bt) {
            const double nx1 = x1 + dir(0);
            const double nx2 = x2 + dir(1);
            const double s = objective_only(nx1, nx2, observation_for_path, wf);
            if (s > cur.value) {
                step_norm = dir.norm();
                x1 = nx1;
                x2 = nx2;
                cur = evaluate_objective_scaled(x1, x2, observation_for_path, wf);
                accepted = true;
                break;
            }
            dir *= 0.5;
        }
        if (!accepted) break;                       // no improving step: keep best-so-far
        if (step_norm < cfg.newton_tolerance) {
            ++iters;
            break;
        }
    }

    RefineResult out;
    out.delay_s = x1 / delay_scale;
    out.doppler_hz = x2 / doppler_scale;
    out.gain = cur.beta;
    out.n_iterations = std::max(iters, 1);
    out.objective = cur.value;
    return out;
}

namespace {

void subtract_atom(std::vector<cpx>& residual, const cpx& beta, double tau_s,
                   double doppler_hz, const WaveformConfig& wf) {
    const auto atom = steering_vector(tau_s, doppler_hz, wf);
    for (std::size_t i = 0; i < residual.size(); ++i) residual[i] -= beta * atom[i];
}

double resolve_stop_threshold(const Eigen::MatrixXcd& first_spectrum, double initial_energy,
                              const WaveformConfig& wf, const DetectorConfig& cfg) {
    if (cfg.stop_threshold > 0.0) return cfg.stop_threshold;
    const double w = static_cast<double>(wf.omega.size());
    double sigma2 = cfg.noise_variance_hint;
    if (!std::isfinite(sigma2)) {
        // Median of the per-bin spectrum power; |C|^2 / (sigma^2 W) is unit
        // exponential for white noise, so the median sits at W sigma^2 ln 2.
        std::vector<double> powers;
        powers.reserve(static_cast<std::size_t>(first_spectrum.size()));
        for (int p = 0; p < first_spectrum.rows(); ++p)
            for (int q = 0; q < first_spectrum.cols(); ++q)
                powers.push_back(std::norm(first_spectrum(p, q)));
        auto mid = powers.begin() + powers.size() / 2;
        std::nth_element(powers.begin(), mid, powers.end());
        sigma2 = *mid / (w * std::log(2.0));
    }
    // Numerical floor keeps noise-free runs from chasing round-off residue.
    sigma2 = std::max(sigma2, 1e-13 * initial_energy / w);
    const double n_bins = static_cast<double>(first_spectrum.rows()) *
                          static_cast<double>(first_spectrum.cols());
    const double kappa = std::log(n_bins / cfg.false_alarm_rate);
    return kappa * sigma2 * w;
}

PathEstimate to_path(const RefineResult& r) {
    PathEstimate p;
    p.delay_s = r.delay_s;
    p.doppler_hz = r.doppler_hz;
    p.gain = r.gain;
    p.objective_value = r.objective;
    return p;
}

EstimationResult finalize(DetectionState&& state, const WaveformConfig& wf) {
    // Per-path objective over the residual with that path re-added.
    for (auto& path : state.paths) {
        std::vector<cpx> with_path = state.residual;
        const auto atom = steering_vector(path.delay_s, path.doppler_hz, wf);
        for (std::size_t i = 0; i < with_path.size(); ++i)
            with_path[i] += path.gain * atom[i];
        path.objective_value =
            concentrated_objective(path.delay_s, path.doppler_hz, with_path, wf);
    }
    EstimationResult result;
    result.paths = std::move(state.paths);
    result.residual_energy_trace = std::move(state.energy_trace);
    result.n_coarse_detections = state.n_coarse_detections;
    result.max_paths_reached = state.max_paths_reached;
    return result;
}

}  // namespace

DetectionState detect_paths(const std::vector<cpx>& observation, const WaveformConfig& wf,
                            const DetectorConfig& cfg) {
    wf.validate();
    cfg.validate();
    if (observation.size() != wf.omega.size())
        throw ConfigError("observation length does not match the active index set");

    DetectionState state;
    state.residual = observation;
    const double e0 = residual_energy(state.residual);
    state.energy_trace.push_back(e0);
    if (e0 == 0.0) return state;

    double delta = -1.0;
    while (static_cast<int>(state.paths.size()) < cfg.max_paths) {
        const Eigen::MatrixXcd c = correlation_spectrum(state.residual, wf, cfg);
        if (delta < 0.0) delta = resolve_stop_threshold(c, e0, wf, cfg);

        int best_p = 0, best_q = 0;
        double peak = -1.0;
        for (int p = 0; p < c.rows(); ++p)
            for (int q = 0; q < c.cols(); ++q)
                if (std::norm(c(p, q)) > peak) {
                    peak = std::norm(c(p, q));
                    best_p = p;
                    best_q = q;
                }
        if (peak < delta || peak == 0.0) return state;

        const double tau = spectrum_delay_at(best_p, wf, cfg);
        const double dop = spectrum_doppler_at(best_q, wf, cfg);
        const RefineResult refined =
            newton_refine_single(tau, dop, state.residual, wf, cfg);

        std::vector<cpx> saved = state.residual;
        subtract_atom(state.residual, refined.gain, refined.delay_s, refined.doppler_hz, wf);
        const double e = residual_energy(state.residual);
        if (e > state.energy_trace.back()) {
            // Round-off floor: subtracting the best atom no longer reduces
            // energy, so stop detecting.
            state.residual = std::move(saved);
            return state;
        }
        state.paths.push_back(to_path(refined));
        state.energy_trace.push_back(e);
        ++state.n_coarse_detections;
    }
    // Ran into the path cap; check whether the detector would have continued.
    const Eigen::MatrixXcd c = correlation_spectrum(state.residual, wf, cfg);
    double peak = 0.0;
    for (int p = 0; p < c.rows(); ++p)
        for (int q = 0; q < c.cols(); ++q) peak = std::max(peak, std::norm(c(p, q)));
    state.max_paths_reached = peak >= delta && peak > 0.0;
    return state;
}

namespace {

void cyclic_sweeps(DetectionState& state, const WaveformConfig& wf, const DetectorConfig& cfg,
                   int rounds);

}  // namespace

void global_refine(DetectionState& state, const WaveformConfig& wf,
                   const DetectorConfig& cfg) {
    cyclic_sweeps(state, wf, cfg, cfg.global_rounds);
}

namespace {

void cyclic_sweeps(DetectionState& state, const WaveformConfig& wf, const DetectorConfig& cfg,
                   int rounds) {
    if (state.paths.empty()) return;
    for (int round = 0; round < rounds; ++round) {
        for (std::size_t p = 0; p < state.paths.size(); ++p) {
            PathEstimate& path = state.paths[p];
            const PathEstimate saved_path = path;
            std::vector<cpx> saved_residual = state.residual;

            // Re-add this path's contribution, refine against it, re-solve
            // the amplitude, subtract the updated contribution.
            std::vector<cpx> with_path = state.residual;
            const auto atom = steering_vector(path.delay_s, path.doppler_hz, wf);
            for (std::size_t i = 0; i < with_path.size(); ++i)
                with_path[i] += path.gain * atom[i];

            const RefineResult refined =
                newton_refine_single(path.delay_s, path.doppler_hz, with_path, wf, cfg);

            state.residual = with_path;
            subtract_atom(state.residual, refined.gain, refined.delay_s, refined.doppler_hz,
                          wf);
            const double e = residual_energy(state.residual);
            if (e > state.energy_trace.back()) {
                // Keep the trace non-increasing even against round-off.
                state.residual = std::move(saved_residual);
                state.paths[p] = saved_path;
                continue;
            }
            state.paths[p] = to_path(refined);
            state.energy_trace.push_back(e);
        }
    }
}

EstimationResult detect_all(const std::vector<cpx>& observation, const WaveformConfig& wf,
                            const DetectorConfig& cfg) {
    DetectionState state = detect_paths(observation, wf, cfg);
    global_refine(state, wf, cfg);
    return finalize(std::move(state), wf);
}

EstimationResult detect_all(const ChannelObservation& observation, const WaveformConfig& wf,
                            const DetectorConfig& cfg) {
    return detect_all(observation.values, wf, cfg);
}

EstimationResult omp_baseline(const std::vector<cpx>& observation, const WaveformConfig& wf,
                              const DetectorConfig& cfg) {
    wf.validate();
    cfg.validate();
    if (observation.size() != wf.omega.size())
        throw ConfigError("observation length does not match the active index set");

    DetectionState state;
    state.residual = observation;
    const double e0 = residual_energy(state.residual);
    state.energy_trace.push_back(e0);
    if (e0 == 0.0) return finalize(std::move(state), wf);

    const std::size_t w = wf.omega.size();
    Eigen::MatrixXcd atoms(static_cast<Eigen::Index>(w), 0);
    Eigen::Map<const Eigen::VectorXcd> h(observation.data(), static_cast<Eigen::Index>(w));

    double delta = -1.0;
    while (static_cast<int>(state.paths.size()) < cfg.max_paths) {
        const Eigen::MatrixXcd c = correlation_spectrum(state.residual, wf, cfg);
        if (delta < 0.0) delta = resolve_stop_threshold(c, e0, wf, cfg);

        int best_p = 0, best_q = 0;
        double peak = -1.0;
        for (int p = 0; p < c.rows(); ++p)
            for (int q = 0; q < c.cols(); ++q)
                if (std::norm(c(p, q)) > peak) {
                    peak = std::norm(c(p, q));
                    best_p = p;
                    best_q = q;
                }
        if (peak < delta || peak == 0.0) break;

        PathEstimate path;
        path.delay_s = spectrum_delay_at(best_p, wf, cfg);
        path.doppler_hz = spectrum_doppler_at(best_q, wf, cfg);

        const auto atom = steering_vector(path.delay_s, path.doppler_hz, wf);
        atoms.conservativeResize(Eigen::NoChange, atoms.cols() + 1);
        for (std::size_t i = 0; i < w; ++i)
            atoms(static_cast<Eigen::Index>(i), atoms.cols() - 1) = atom[i];

        // Joint least-squares amplitudes over every selected atom.
        const Eigen::VectorXcd beta = atoms.colPivHouseholderQr().solve(h);
        const Eigen::VectorXcd res = h - atoms * beta;
        const double e = res.squaredNorm();
        if (e > state.energy_trace.back()) {
            atoms.conservativeResize(Eigen::NoChange, atoms.cols() - 1);
            break;
        }
        state.paths.push_back(path);
        for (std::size_t i = 0; i < state.paths.size(); ++i)
            state.paths[i].gain = beta(static_cast<Eigen::Index>(i));
        for (std::size_t i = 0; i < w; ++i)
            state.residual[i] = res(static_cast<Eigen::Index>(i));
        state.energy_trace.push_back(e);
        ++state.n_coarse_detections;
    }
    if (static_cast<int>(state.paths.size()) == cfg.max_paths) {
        const Eigen::MatrixXcd c = correlation_spectrum(state.residual, wf, cfg);
        double peak = 0.0;
        for (int p = 0; p < c.rows(); ++p)
            for (int q = 0; q < c.cols(); ++q) peak = std::max(peak, std::norm(c(p, q)));
        state.max_paths_reached = peak >= delta && peak > 0.0;
    }
    return finalize(std::move(state), wf);
}

EstimationResult omp_baseline(const ChannelObservation& observation, const WaveformConfig& wf,
                              const DetectorConfig& cfg) {
    return omp_baseline(observation.values, wf, cfg);
}

}  // namespace nrtomo
