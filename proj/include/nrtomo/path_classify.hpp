#ifndef NRTOMO_PATH_CLASSIFY_HPP
#define NRTOMO_PATH_CLASSIFY_HPP

#include <vector>

#include "nrtomo/common.hpp"
#include "nrtomo/nomp_core.hpp"

namespace nrtomo {

struct ClassifierConfig {
    double z_min_m = 1.0;
    double z_max_m = 150.0;
    double rho_min = 0.05;
    double rho_max = 0.95;

    void validate() const;
};

struct LosIdentification {
    PathEstimate los;
    double range_m = 0.0;
    double radial_velocity_mps = 0.0;
    std::size_t los_index = 0;
};

struct GrCandidate {
    PathEstimate path;
    double implied_height_m = 0.0;
    double amplitude_ratio = 0.0;
};

struct ClassifiedPaths {
    PathEstimate los;
    double range_m = 0.0;
    double radial_velocity_mps = 0.0;
    std::vector<GrCandidate> gr_candidates;
    std::vector<PathEstimate> rejected;
};

/// LoS = minimum-delay path (ties within 1e-12 s resolved toward the larger
/// |gain|); converts it to range and radial velocity. Throws NoPathsDetected
/// on an empty list.
LosIdentification identify_los(const std::vector<PathEstimate>& paths, double wavelength_m);

/// Candidate height implied by a path's excess delay over the LoS delay:
/// c * range * (tau_p - tau_los) / (4 h_i). Throws InvalidGeometry for
/// non-positive platform altitude.
double implied_height(const PathEstimate& path, const PathEstimate& los, double range_m,
                      double platform_altitude_m);

/// Splits non-LoS paths into ground-reflection candidates (height gate and
/// amplitude-ratio gate both satisfied) and rejects. Throws DegenerateLoS
/// when the LoS gain is zero.
ClassifiedPaths gate_candidates(const std::vector<PathEstimate>& paths,
                                const LosIdentification& los, double platform_altitude_m,
                                const ClassifierConfig& cfg);

/// Convenience: identify_los followed by gate_candidates.
ClassifiedPaths classify_paths(const std::vector<PathEstimate>& paths, double wavelength_m,
                               double platform_altitude_m, const ClassifierConfig& cfg);

}  // namespace nrtomo

#endif  // NRTOMO_PATH_CLASSIFY_HPP
