#ifndef NRTOMO_IO_HPP
#define NRTOMO_IO_HPP

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "nrtomo/bench.hpp"

namespace nrtomo {

using ordered_json = nlohmann::ordered_json;

// ---- configuration ---------------------------------------------------------

ExperimentSpec experiment_spec_from_json(const ordered_json& j);
ExperimentSpec load_experiment_spec(const std::filesystem::path& config_path);
RadarRequirements radar_requirements_from_json(const ordered_json& j);

ordered_json experiment_spec_to_json(const ExperimentSpec& spec);
ordered_json numerology_plan_to_json(const NumerologyPlan& plan);
ordered_json estimation_result_to_json(const EstimationResult& result);

// ---- observation files -----------------------------------------------------
// Layout: header of four little-endian uint32 (N, M, |omega|, baseline
// count), then per baseline |omega| little-endian float64 re/im pairs in
// row-major order over omega (subcarrier outer, symbol inner).

void write_observation_file(const std::filesystem::path& path,
                            const std::vector<ChannelObservation>& per_baseline,
                            const WaveformConfig& wf);

struct ObservationFile {
    std::uint32_t n_subcarriers = 0;
    std::uint32_t n_symbols = 0;
    std::uint32_t omega_size = 0;
    std::uint32_t n_baselines = 0;
    std::vector<std::vector<cpx>> values;  // per baseline
};

ObservationFile read_observation_file(const std::filesystem::path& path);

// ---- reports ----------------------------------------------------------------

std::string rmse_csv(const RmseReport& report);
RmseReport parse_rmse_csv(const std::string& csv);

ordered_json build_manifest(const ExperimentSpec& spec, const RmseReport& report,
                            const std::string& timestamp);

/// Writes manifest.json, rmse.csv, timing.csv, spectra/*.csv, plotdata/ and
/// plot.gp under out_dir.
void emit_reports(const RmseReport& report, const ExperimentSpec& spec,
                  const std::filesystem::path& out_dir);

std::string format_double(double v);
std::string iso8601_now();

}  // namespace nrtomo

#endif  // NRTOMO_IO_HPP
