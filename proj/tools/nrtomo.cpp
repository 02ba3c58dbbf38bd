#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "nrtomo/bench.hpp"
#include "nrtomo/io.hpp"

namespace fs = std::filesystem;
using nrtomo::ordered_json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitConfig = 2;
constexpr int kExitInfeasible = 3;

fs::path resolve_out_dir(const std::string& cli_value, const std::string& fallback) {
    if (!cli_value.empty()) return cli_value;
    if (const char* env = std::getenv("NRTOMO_OUT_DIR")) return env;
    return fallback;
}

int run_plan(const std::string& config_path, nrtomo::RadarRequirements req, bool have_flags,
             const std::string& tie) {
    if (!config_path.empty()) {
        std::ifstream in(config_path);
        if (!in) throw nrtomo::IoError("cannot open config file: " + config_path);
        ordered_json j;
        in >> j;
        const auto& block = j.contains("radar_requirements") ? j.at("radar_requirements") : j;
        req = nrtomo::radar_requirements_from_json(block);
    } else if (!have_flags) {
        throw nrtomo::ConfigError("plan needs --config or the requirement flags");
    }
    const auto tiebreak = tie == "largest" ? nrtomo::MuTieBreak::PreferLargest
                                           : nrtomo::MuTieBreak::PreferSmallest;
    const nrtomo::NumerologyPlan plan = nrtomo::plan_frame(req, tiebreak);
    std::cout << nrtomo::numerology_plan_to_json(plan).dump(2) << "\n";
    return kExitOk;
}

int run_simulate(const std::string& config_path, const std::string& out,
                 std::uint64_t seed, bool seed_set) {
    nrtomo::ExperimentSpec spec = nrtomo::load_experiment_spec(config_path);
    if (seed_set) spec.seed = seed;
    if (!spec.seed) throw nrtomo::ConfigError("simulate needs --seed (or experiment.seed)");
    const fs::path out_dir = resolve_out_dir(out, "nrtomo_sim");
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw nrtomo::IoError("cannot create " + out_dir.string() + ": " + ec.message());

    ordered_json truth;
    for (int eta = 0; eta < spec.n_snapshots; ++eta) {
        std::vector<nrtomo::ChannelObservation> per_baseline;
        for (int i = 0; i < spec.scene.n_baselines; ++i) {
            const std::uint64_t obs_seed = nrtomo::mix_seed(
                *spec.seed, 0, 0,
                (static_cast<std::uint64_t>(i) << 16) | static_cast<std::uint64_t>(eta));
            per_baseline.push_back(
                nrtomo::synthesize_observation(spec.scene, spec.waveform, i, eta, obs_seed));
        }
        const fs::path path =
            out_dir / ("obs_snapshot" + std::to_string(eta) + ".bin");
        nrtomo::write_observation_file(path, per_baseline, spec.waveform);

        ordered_json snap;
        snap["snapshot"] = eta;
        snap["file"] = path.filename().string();
        snap["paths"] = ordered_json::array();
        for (const auto& obs : per_baseline) {
            ordered_json bj;
            bj["baseline"] = obs.baseline_index;
            for (const auto& p : obs.ground_truth) {
                ordered_json pj;
                pj["delay_s"] = p.delay_s;
                pj["doppler_hz"] = p.doppler_hz;
                pj["gain_re"] = p.gain.real();
                pj["gain_im"] = p.gain.imag();
                pj["kind"] = p.kind == nrtomo::PathKind::LoS ? "los"
                             : p.kind == nrtomo::PathKind::GroundReflection
                                 ? "ground_reflection"
                                 : "other";
                pj["target"] = p.target_index;
                bj["paths"].push_back(pj);
            }
            snap["paths"].push_back(bj);
        }
        truth.push_back(snap);
    }
    std::ofstream gt(out_dir / "ground_truth.json");
    if (!gt) throw nrtomo::IoError("cannot write ground_truth.json");
    gt << truth.dump(2) << "\n";
    std::cout << "wrote " << spec.n_snapshots << " snapshot file(s) to " << out_dir.string()
              << "\n";
    return kExitOk;
}

int run_estimate(const std::string& config_path, const std::string& input, int baseline,
                 const std::string& algorithm, const std::string& out) {
    nrtomo::ExperimentSpec spec = nrtomo::load_experiment_spec(config_path);
    const nrtomo::ObservationFile file = nrtomo::read_observation_file(input);
    if (file.n_subcarriers != static_cast<std::uint32_t>(spec.waveform.n_subcarriers) ||
        file.n_symbols != static_cast<std::uint32_t>(spec.waveform.n_symbols) ||
        file.omega_size != spec.waveform.omega.size()) {
        throw nrtomo::ConfigError("observation file does not match the configured waveform");
    }
    if (baseline < 0 || baseline >= static_cast<int>(file.n_baselines))
        throw nrtomo::ConfigError("baseline index out of range for this file");

    nrtomo::EstimationResult result;
    if (algorithm == "omp") {
        result = nrtomo::omp_baseline(file.values[baseline], spec.waveform, spec.detector);
    } else if (algorithm == "nomp") {
        result = nrtomo::detect_all(file.values[baseline], spec.waveform, spec.detector);
    } else {
        throw nrtomo::ConfigError("estimate algorithm must be nomp or omp");
    }
    const ordered_json j = nrtomo::estimation_result_to_json(result);
    if (out.empty()) {
        std::cout << j.dump(2) << "\n";
    } else {
        std::ofstream os(out);
        if (!os) throw nrtomo::IoError("cannot write " + out);
        os << j.dump(2) << "\n";
    }
    return kExitOk;
}

int run_bench(const std::string& config_path, std::uint64_t seed, bool seed_set,
              const std::string& out, int trials, int threads,
              const std::vector<double>& snr, const std::vector<int>& baselines,
              const std::vector<std::string>& algorithms) {
    nrtomo::ExperimentSpec spec = nrtomo::load_experiment_spec(config_path);
    if (seed_set) spec.seed = seed;
    if (!spec.seed)
        throw nrtomo::ConfigError("bench needs --seed (or experiment.seed in the config)");
    if (trials > 0) spec.n_trials = trials;
    if (threads > 0) spec.n_threads = threads;
    if (!snr.empty()) spec.snr_grid_db = snr;
    if (!baselines.empty()) spec.baseline_counts = baselines;
    if (!algorithms.empty()) {
        spec.algorithms.clear();
        for (const auto& a : algorithms)
            spec.algorithms.push_back(nrtomo::algorithm_from_name(a));
    }
    spec.validate();
    const fs::path out_dir = resolve_out_dir(out, "nrtomo_out");
    const nrtomo::RmseReport report = nrtomo::run_experiment(spec);
    nrtomo::emit_reports(report, spec, out_dir);
    std::cout << "wrote reports to " << out_dir.string() << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"5G NR SSB TomoSAR simulator and multipath-aware estimator benchmark"};
    app.require_subcommand(1);

    // plan
    auto* plan = app.add_subcommand("plan", "select an NR numerology from radar requirements");
    std::string plan_config, plan_tie = "smallest";
    nrtomo::RadarRequirements req;
    plan->add_option("--config", plan_config, "JSON config with a radar_requirements block");
    auto* o1 = plan->add_option("--range-resolution", req.range_resolution_m, "m");
    plan->add_option("--unambiguous-range", req.max_unambiguous_range_m, "m");
    plan->add_option("--unambiguous-velocity", req.max_unambiguous_velocity_mps, "m/s");
    plan->add_option("--carrier-frequency", req.carrier_frequency_hz, "Hz");
    plan->add_option("--ssb-period-slots", req.ssb_period_slots, "n0");
    plan->add_option("--frame-slots", req.frame_length_slots, "L0");
    plan->add_option("--tie", plan_tie, "smallest|largest")
        ->check(CLI::IsMember({"smallest", "largest"}));

    // simulate
    auto* sim = app.add_subcommand("simulate", "write observation files for a scenario");
    std::string sim_config, sim_out;
    std::uint64_t sim_seed = 0;
    sim->add_option("--config", sim_config, "experiment JSON config")->required();
    sim->add_option("--out", sim_out, "output directory");
    auto* sim_seed_opt = sim->add_option("--seed", sim_seed, "RNG seed");

    // estimate
    auto* est = app.add_subcommand("estimate", "run the estimator on one observation file");
    std::string est_config, est_input, est_algo = "nomp", est_out;
    int est_baseline = 0;
    est->add_option("--config", est_config, "experiment JSON config")->required();
    est->add_option("--input", est_input, "observation .bin file")->required();
    est->add_option("--baseline", est_baseline, "baseline index in the file");
    est->add_option("--algorithm", est_algo, "nomp|omp")
        ->check(CLI::IsMember({"nomp", "omp"}));
    est->add_option("--out", est_out, "output JSON path (stdout when omitted)");

    // bench
    auto* bench = app.add_subcommand("bench", "run the Monte-Carlo RMSE sweep");
    std::string bench_config, bench_out;
    std::uint64_t bench_seed = 0;
    int bench_trials = 0, bench_threads = 0;
    std::vector<double> bench_snr;
    std::vector<int> bench_baselines;
    std::vector<std::string> bench_algos;
    bench->add_option("--config", bench_config, "experiment JSON config")->required();
    auto* bench_seed_opt = bench->add_option("--seed", bench_seed, "RNG seed (required)");
    bench->add_option("--out", bench_out, "output directory (env NRTOMO_OUT_DIR overrides)");
    bench->add_option("--trials", bench_trials, "override n_trials");
    bench->add_option("--threads", bench_threads, "worker threads (0 = auto)");
    bench->add_option("--snr", bench_snr, "override SNR grid (dB)")->delimiter(',');
    bench->add_option("--baselines", bench_baselines, "override baseline counts")
        ->delimiter(',');
    bench->add_option("--algorithms", bench_algos, "subset of ed-nomp,nomp,omp")
        ->delimiter(',');

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    }

    try {
        if (plan->parsed())
            return run_plan(plan_config, req, o1->count() > 0, plan_tie);
        if (sim->parsed())
            return run_simulate(sim_config, sim_out, sim_seed, sim_seed_opt->count() > 0);
        if (est->parsed())
            return run_estimate(est_config, est_input, est_baseline, est_algo, est_out);
        if (bench->parsed())
            return run_bench(bench_config, bench_seed, bench_seed_opt->count() > 0, bench_out,
                             bench_trials, bench_threads, bench_snr, bench_baselines,
                             bench_algos);
    } catch (const nrtomo::InfeasibleError& e) {
        std::cerr << "infeasible: " << e.what() << "\n";
        return kExitInfeasible;
    } catch (const nrtomo::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const nrtomo::IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return kExitError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitError;
    }
    return kExitConfig;
}
