#include "nrtomo/path_classify.hpp"

#include <cmath>

namespace nrtomo {

void ClassifierConfig::validate() const {
    if (!(z_min_m >= 0.0) || !(z_min_m < z_max_m))
        throw ConfigError("height gate requires 0 <= z_min < z_max");
    if (!(rho_min >= 0.0) || !(rho_min < rho_max) || !(rho_max <= 1.0))
        throw ConfigError("amplitude gate requires 0 <= rho_min < rho_max <= 1");
}

LosIdentification identify_los(const std::vector<PathEstimate>& paths, double wavelength_m) {
    if (paths.empty()) throw NoPathsDetected("no paths to identify the LoS from");
    std::size_t best = 0;
    for (std::size_t i = 1; i < paths.size(); ++i) {
        const double d = paths[i].delay_s - paths[best].delay_s;
        if (d < -1e-12) {
            best = i;
        } else if (std::abs(d) <= 1e-12 &&
                   std::abs(paths[i].gain) > std::abs(paths[best].gain)) {
            // Equal minimal delay: the direct path dominates in magnitude.
            best = i;
        }
    }
    LosIdentification id;
    id.los = paths[best];
    id.los_index = best;
    id.range_m = constants::speed_of_light * id.los.delay_s / 2.0;
    id.radial_velocity_mps = wavelength_m * id.los.doppler_hz / 2.0;
    return id;
}

double implied_height(const PathEstimate& path, const PathEstimate& los, double range_m,
                      double platform_altitude_m) {
    if (!(platform_altitude_m > 0.0))
        throw InvalidGeometry("platform altitude must be positive");
    const double delta_tau = path.delay_s - los.delay_s;
    return constants::speed_of_light * range_m * delta_tau / (4.0 * platform_altitude_m);
}

ClassifiedPaths gate_candidates(const std::vector<PathEstimate>& paths,
                                const LosIdentification& los, double platform_altitude_m,
                                const ClassifierConfig& cfg) {
    cfg.validate();
    const double los_mag = std::abs(los.los.gain);
    if (los_mag == 0.0) throw DegenerateLoS("LoS path has zero gain");

    ClassifiedPaths out;
    out.los = los.los;
    out.range_m = los.range_m;
    out.radial_velocity_mps = los.radial_velocity_mps;
    for (std::size_t i = 0; i < paths.size(); ++i) {
        if (i == los.los_index) continue;
        const double z = implied_height(paths[i], los.los, los.range_m, platform_altitude_m);
        const double rho = std::abs(paths[i].gain) / los_mag;
        if (z >= cfg.z_min_m && z <= cfg.z_max_m && rho >= cfg.rho_min && rho <= cfg.rho_max) {
            out.gr_candidates.push_back(GrCandidate{paths[i], z, rho});
        } else {
            out.rejected.push_back(paths[i]);
        }
    }
    return out;
}

ClassifiedPaths classify_paths(const std::vector<PathEstimate>& paths, double wavelength_m,
                               double platform_altitude_m, const ClassifierConfig& cfg) {
    const LosIdentification id = identify_los(paths, wavelength_m);
    return gate_candidates(paths, id, platform_altitude_m, cfg);
}

}  // namespace nrtomo
