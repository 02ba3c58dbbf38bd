#include "nrtomo/tomo_fusion.hpp"

#include <algorithm>
#include <cmath>

namespace nrtomo {

void BaselineStack::validate() const {
    if (gains.size() < 2) throw ConfigError("baseline stack needs at least two baselines");
    if (gains.size() != altitudes_m.size())
        throw ConfigError("gains and altitudes must have equal length");
    if (!(reference_range_m > 0.0)) throw ConfigError("reference range must be positive");
    if (!(wavelength_m > 0.0)) throw ConfigError("wavelength must be positive");
}

void ElevationConfig::validate() const {
    if (n_grid < 2) throw ConfigError("elevation grid needs at least two points");
    if (!(z_grid_min_m < z_grid_max_m)) throw ConfigError("elevation grid bounds inverted");
    if (n_sources < 1) throw ConfigError("n_sources must be positive");
    if (smoothing_subaperture && *smoothing_subaperture < 2)
        throw ConfigError("smoothing subaperture must be >= 2");
}

Eigen::VectorXcd flat_earth_phase(const BaselineStack& stack, double ground_range_m) {
    stack.validate();
    if (!(ground_range_m > 0.0)) throw InvalidGeometry("ground range must be positive");
    Eigen::VectorXcd factors(stack.size());
    for (int i = 0; i < stack.size(); ++i) {
        const double h = stack.altitudes_m(i);
        const double r0 = std::hypot(ground_range_m, h);
        factors(i) = std::polar(1.0, 4.0 * constants::pi * r0 / stack.wavelength_m);
    }
    return factors;
}

BaselineStack deramp_ground_phase(const BaselineStack& stack, double ground_range_m) {
    const Eigen::VectorXcd factors = flat_earth_phase(stack, ground_range_m);
    BaselineStack out = stack;
    out.gains = stack.gains.cwiseProduct(factors);
    return out;
}

Eigen::VectorXcd elevation_steering(double z_m, const BaselineStack& stack) {
    stack.validate();
    Eigen::VectorXcd a(stack.size());
    const double scale =
        4.0 * constants::pi / (stack.wavelength_m * stack.reference_range_m);
    for (int i = 0; i < stack.size(); ++i)
        a(i) = std::polar(1.0, scale * stack.altitudes_m(i) * z_m);
    return a;
}

double rayleigh_elevation_resolution(const BaselineStack& stack) {
    stack.validate();
    const double aperture =
        stack.size() * std::abs(stack.altitudes_m(std::min(1, stack.size() - 1)) -
                                stack.altitudes_m(0));
    if (aperture <= 0.0) throw InvalidGeometry("degenerate elevation aperture");
    return stack.wavelength_m * stack.reference_range_m / (2.0 * aperture);
}

namespace {

Eigen::MatrixXcd sample_covariance(const std::vector<BaselineStack>& snapshots) {
    const int l = snapshots.front().size();
    Eigen::MatrixXcd cov = Eigen::MatrixXcd::Zero(l, l);
    for (const auto& s : snapshots) {
        if (s.size() != l) throw ConfigError("snapshot stacks differ in baseline count");
        cov.noalias() += s.gains * s.gains.adjoint();
    }
    return cov / static_cast<double>(snapshots.size());
}

// Forward-backward averaged spatial smoothing over subapertures of length
// l_sub; restores covariance rank for coherent or single-snapshot data on a
// uniform baseline.
Eigen::MatrixXcd smooth_covariance(const Eigen::MatrixXcd& cov, int l_sub) {
    const int l = static_cast<int>(cov.rows());
    const int n_sub = l - l_sub + 1;
    Eigen::MatrixXcd sm = Eigen::MatrixXcd::Zero(l_sub, l_sub);
    for (int k = 0; k < n_sub; ++k) sm += cov.block(k, k, l_sub, l_sub);
    sm /= static_cast<double>(n_sub);
    Eigen::MatrixXcd j = Eigen::MatrixXcd::Zero(l_sub, l_sub);
    for (int i = 0; i < l_sub; ++i) j(i, l_sub - 1 - i) = 1.0;
    return 0.5 * (sm + j * sm.conjugate() * j);
}

}  // namespace

MusicResult music_elevation(const std::vector<BaselineStack>& snapshots,
                            const ElevationConfig& cfg) {
    cfg.validate();
    if (snapshots.empty()) throw ConfigError("no snapshots given");
    const BaselineStack& ref = snapshots.front();
    ref.validate();

    Eigen::MatrixXcd cov = sample_covariance(snapshots);
    BaselineStack steer_stack = ref;
    int l_eff = ref.size();
    int effective_snapshots = static_cast<int>(snapshots.size());
    if (cfg.smoothing_subaperture) {
        const int l_sub = *cfg.smoothing_subaperture;
        if (l_sub > ref.size()) throw ConfigError("smoothing subaperture exceeds the stack");
        cov = smooth_covariance(cov, l_sub);
        l_eff = l_sub;
        effective_snapshots *= 2 * (ref.size() - l_sub + 1);
        steer_stack.gains = ref.gains.head(l_sub);
        steer_stack.altitudes_m = ref.altitudes_m.head(l_sub);
    }
    if (cfg.n_sources >= l_eff)
        throw RankDeficientCovariance("noise subspace is empty: n_sources >= baseline count");
    if (effective_snapshots < cfg.n_sources)
        throw RankDeficientCovariance(
            "fewer effective snapshots than assumed sources and no smoothing enabled");

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(cov);
    if (eig.info() != Eigen::Success)
        throw RankDeficientCovariance("eigendecomposition of the covariance failed");
    const int n_noise = l_eff - cfg.n_sources;
    const Eigen::MatrixXcd noise_subspace = eig.eigenvectors().leftCols(n_noise);

    MusicResult result;
    result.eigenvalues = eig.eigenvalues();
    const double noise_level =
        std::max(result.eigenvalues.head(n_noise).mean(), 1e-300);
    result.snr_estimate = result.eigenvalues(l_eff - 1) / noise_level;

    result.z_grid_m.resize(cfg.n_grid);
    result.spectrum.resize(cfg.n_grid);
    const double dz = (cfg.z_grid_max_m - cfg.z_grid_min_m) / (cfg.n_grid - 1);
    int best = 0;
    for (int i = 0; i < cfg.n_grid; ++i) {
        const double z = cfg.z_grid_min_m + i * dz;
        result.z_grid_m(i) = z;
        const Eigen::VectorXcd a = elevation_steering(z, steer_stack);
        const double denom = (noise_subspace.adjoint() * a).squaredNorm();
        result.spectrum(i) = 1.0 / std::max(denom, 1e-300);
        if (result.spectrum(i) > result.spectrum(best)) best = i;
    }

    double z_hat = result.z_grid_m(best);
    if (best > 0 && best < cfg.n_grid - 1) {
        // Quadratic interpolation through the log-spectrum around the peak.
        const double y0 = std::log(result.spectrum(best - 1));
        const double y1 = std::log(result.spectrum(best));
        const double y2 = std::log(result.spectrum(best + 1));
        const double denom = y0 - 2.0 * y1 + y2;
        if (denom < 0.0) {
            const double offset = 0.5 * (y0 - y2) / denom;
            z_hat += std::clamp(offset, -0.5, 0.5) * dz;
        }
    }
    result.z_hat_m = z_hat;
    return result;
}

MusicResult music_elevation(const BaselineStack& stack, const ElevationConfig& cfg) {
    return music_elevation(std::vector<BaselineStack>{stack}, cfg);
}

std::optional<double> gr_height(const ClassifiedPaths& classified) {
    if (classified.gr_candidates.empty()) return std::nullopt;
    const GrCandidate* best = &classified.gr_candidates.front();
    for (const auto& cand : classified.gr_candidates)
        if (std::abs(cand.path.gain) > std::abs(best->path.gain)) best = &cand;
    return best->implied_height_m;
}

FusedHeight fuse_heights(double z_a_m, std::optional<double> z_b_m,
                         const FusionDiagnostics& diag) {
    FusedHeight fused;
    fused.z_music_m = z_a_m;
    fused.z_gr_m = z_b_m;
    if (!z_b_m) {
        fused.w_a = std::max(diag.snr_a, 0.0);
        if (fused.w_a == 0.0) fused.w_a = 1.0;
        fused.w_b = 0.0;
        fused.z_fused_m = z_a_m;
        return fused;
    }
    const double consistency = std::clamp(diag.consistency, 0.0, 1.0);
    fused.w_a = std::max(diag.snr_a, 0.0) * consistency;
    fused.w_b = std::max(diag.snr_b, 0.0);
    if (fused.w_a + fused.w_b <= 0.0) {
        fused.w_a = 1.0;
        fused.w_b = 0.0;
        fused.z_fused_m = z_a_m;
        return fused;
    }
    const double z = (fused.w_a * z_a_m + fused.w_b * *z_b_m) / (fused.w_a + fused.w_b);
    fused.z_fused_m = std::clamp(z, std::min(z_a_m, *z_b_m), std::max(z_a_m, *z_b_m));
    return fused;
}

}  // namespace nrtomo
