#include "nrtomo/nr_frame.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace nrtomo {

namespace {
constexpr int kMuMin = 0;
constexpr int kMuMax = 6;
}  // namespace

void RadarRequirements::validate() const {
    if (!(range_resolution_m > 0.0) || !(max_unambiguous_range_m > 0.0) ||
        !(max_unambiguous_velocity_mps > 0.0) || !(carrier_frequency_hz > 0.0) ||
        ssb_period_slots <= 0 || frame_length_slots <= 0) {
        throw ConfigError("radar requirements must be strictly positive");
    }
}

double scs_from_mu(int mu) {
    return std::ldexp(constants::base_scs_hz, mu);  // 2^mu * 15 kHz, exact
}

int mu_lower_bound_resolution(const RadarRequirements& req) {
    const double arg =
        constants::speed_of_light / (2.0 * constants::ssb_subcarriers *
                                     constants::base_scs_hz * req.range_resolution_m);
    const int raw = static_cast<int>(std::ceil(std::log2(arg)));
    return std::max(raw, kMuMin);
}

int mu_upper_bound_range(const RadarRequirements& req) {
    const double arg = constants::speed_of_light /
                       (2.0 * constants::base_scs_hz * req.max_unambiguous_range_m);
    const int raw = static_cast<int>(std::floor(std::log2(arg)));
    return std::min(raw, kMuMax);
}

int mu_lower_bound_prf(const RadarRequirements& req) {
    const double n0L0 = static_cast<double>(req.ssb_period_slots) *
                        static_cast<double>(req.frame_length_slots);
    const double arg = 4.0 * req.carrier_frequency_hz * req.max_unambiguous_velocity_mps *
                       n0L0 / (10.0 * constants::speed_of_light);
    const int raw = static_cast<int>(std::ceil(std::log2(arg)));
    return std::max(raw, kMuMin);
}

double pri_from_mu(int mu, int n0, int L0) {
    if (mu < kMuMin || mu > kMuMax) throw ConfigError("mu out of {0..6}");
    if (n0 <= 0 || L0 <= 0) throw ConfigError("n0 and L0 must be positive");
    // n0 * L0 * (10 ms / (10 * 2^mu slots)); both operands are exact
    // integers, so the single division is correctly rounded.
    const double numerator = static_cast<double>(n0) * static_cast<double>(L0);
    const double denominator = 1000.0 * std::ldexp(1.0, mu);
    return numerator / denominator;
}

bool mu_feasible(int mu, const RadarRequirements& req) {
    if (mu < kMuMin || mu > kMuMax) return false;
    const double scs = scs_from_mu(mu);
    // Achieved resolution from the SSB bandwidth at this spacing.
    const double achieved_res =
        constants::speed_of_light / (2.0 * constants::ssb_subcarriers * scs);
    if (achieved_res > req.range_resolution_m) return false;
    // Achieved unambiguous range from the subcarrier spacing.
    const double achieved_unamb = constants::speed_of_light / (2.0 * scs);
    if (achieved_unamb < req.max_unambiguous_range_m) return false;
    // PRF proxy: 2^mu * 10c >= 4 fc v n0 L0.
    const double n0L0 = static_cast<double>(req.ssb_period_slots) *
                        static_cast<double>(req.frame_length_slots);
    const double lhs = std::ldexp(1.0, mu) * 10.0 * constants::speed_of_light;
    const double rhs =
        4.0 * req.carrier_frequency_hz * req.max_unambiguous_velocity_mps * n0L0;
    return lhs >= rhs;
}

NumerologyPlan plan_for_mu(int mu, const RadarRequirements& req, const CpConvention& cp) {
    if (mu < kMuMin || mu > kMuMax) throw ConfigError("mu out of {0..6}");
    NumerologyPlan plan;
    plan.mu = mu;
    plan.scs_hz = scs_from_mu(mu);
    plan.ssb_bandwidth_hz = constants::ssb_subcarriers * plan.scs_hz;
    plan.range_resolution_m = constants::speed_of_light / (2.0 * plan.ssb_bandwidth_hz);
    plan.unambiguous_range_m = constants::speed_of_light / (2.0 * plan.scs_hz);
    plan.pri_s = pri_from_mu(mu, req.ssb_period_slots, req.frame_length_slots);
    plan.prf_hz = (1000.0 * std::ldexp(1.0, mu)) /
                  (static_cast<double>(req.ssb_period_slots) *
                   static_cast<double>(req.frame_length_slots));
    plan.symbol_duration_s = 1.0 / plan.scs_hz;
    plan.cp_duration_s =
        plan.symbol_duration_s * static_cast<double>(cp.cp_samples) / cp.fft_size;
    return plan;
}

NumerologyPlan select_numerology(const RadarRequirements& req, MuTieBreak tie,
                                 const CpConvention& cp) {
    req.validate();
    const int mu_min =
        std::max(mu_lower_bound_resolution(req), mu_lower_bound_prf(req));
    const int mu_max = mu_upper_bound_range(req);
    if (mu_min > mu_max) {
        std::ostringstream msg;
        msg << "no feasible numerology: window [" << mu_min << ", " << mu_max
            << "] is empty over {0..6}";
        throw InfeasibleError(msg.str());
    }
    const int mu = (tie == MuTieBreak::PreferSmallest) ? mu_min : mu_max;
    return plan_for_mu(mu, req, cp);
}

}  // namespace nrtomo
