#ifndef NRTOMO_TOMO_FUSION_HPP
#define NRTOMO_TOMO_FUSION_HPP

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "nrtomo/common.hpp"
#include "nrtomo/path_classify.hpp"

namespace nrtomo {

/// One snapshot of LoS gains across the baseline stack, plus the geometry
/// the elevation model needs.
struct BaselineStack {
    Eigen::VectorXcd gains;      // beta_LoS per baseline
    Eigen::VectorXd altitudes_m; // h_i, uniform spacing
    double reference_range_m = 0.0;  // slant range at the reference baseline
    double wavelength_m = 0.0;

    int size() const { return static_cast<int>(gains.size()); }
    void validate() const;
};

struct ElevationConfig {
    double z_grid_min_m = 0.0;
    double z_grid_max_m = 150.0;
    int n_grid = 512;
    int n_sources = 1;
    std::optional<int> smoothing_subaperture;  // enables FB-averaged spatial smoothing

    void validate() const;
};

struct FusedHeight {
    double z_music_m = 0.0;
    std::optional<double> z_gr_m;
    double w_a = 0.0;
    double w_b = 0.0;
    double z_fused_m = 0.0;
};

struct FusionDiagnostics {
    double snr_a = 1.0;        // TomoSAR reliability weight before consistency
    double snr_b = 1.0;        // ground-reflection reliability weight
    double consistency = 1.0;  // agreement between the two estimates, in (0, 1]
};

struct MusicResult {
    double z_hat_m = 0.0;
    Eigen::VectorXd z_grid_m;
    Eigen::VectorXd spectrum;
    Eigen::VectorXd eigenvalues;  // ascending
    double snr_estimate = 0.0;    // largest signal eigenvalue / mean noise eigenvalue
};

/// Flat-earth reference phases e^{+j 4 pi R_i(z=0) / lambda} for a zero
/// height scatterer at the given ground range.
Eigen::VectorXcd flat_earth_phase(const BaselineStack& stack, double ground_range_m);

/// Removes the flat-earth phase ramp so the residual phase across baselines
/// encodes only elevation.
BaselineStack deramp_ground_phase(const BaselineStack& stack, double ground_range_m);

/// Elevation steering vector after deramping, far-field two-way phase
/// e^{+j 4 pi h_i z / (lambda R)} (unit modulus entries).
Eigen::VectorXcd elevation_steering(double z_m, const BaselineStack& stack);

/// lambda R / (2 L dh): classical resolvability limit of the aperture.
double rayleigh_elevation_resolution(const BaselineStack& stack);

/// MUSIC pseudo-spectrum over the z grid from the sample covariance of the
/// (deramped) snapshot stacks; grid argmax refined by quadratic
/// interpolation. Throws RankDeficientCovariance when the noise subspace is
/// empty or the snapshot count cannot support n_sources without smoothing.
MusicResult music_elevation(const std::vector<BaselineStack>& snapshots,
                            const ElevationConfig& cfg);
MusicResult music_elevation(const BaselineStack& stack, const ElevationConfig& cfg);

/// Ground-reflection height: the implied height of the strongest-gain
/// candidate, when any survived the gates.
std::optional<double> gr_height(const ClassifiedPaths& classified);

/// Confidence-weighted fusion. w_a = snr_a * consistency, w_b = snr_b when a
/// ground-reflection estimate exists (otherwise 0, falling back to the
/// TomoSAR estimate alone). The result is always a convex combination.
FusedHeight fuse_heights(double z_a_m, std::optional<double> z_b_m,
                         const FusionDiagnostics& diag);

}  // namespace nrtomo

#endif  // NRTOMO_TOMO_FUSION_HPP
