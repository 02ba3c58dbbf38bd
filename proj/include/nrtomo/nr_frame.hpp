#ifndef NRTOMO_NR_FRAME_HPP
#define NRTOMO_NR_FRAME_HPP

#include "nrtomo/common.hpp"

namespace nrtomo {

/// Radar-side requirements that constrain the usable NR numerology.
struct RadarRequirements {
    double range_resolution_m = 0.0;          // required resolution (<=)
    double max_unambiguous_range_m = 0.0;     // required unambiguous range (>=)
    double max_unambiguous_velocity_mps = 0.0;
    double carrier_frequency_hz = 0.0;
    int ssb_period_slots = 1;                 // n0: SSB burst period in frames
    int frame_length_slots = 10;              // L0: frame length in slots

    void validate() const;
};

/// CP sizing convention (normal CP, expressed against the FFT grid).
struct CpConvention {
    int cp_samples = 288;
    int fft_size = 4096;
};

/// Resolved numerology with the frame-timing quantities derived from it.
struct NumerologyPlan {
    int mu = 0;
    double scs_hz = 0.0;
    double ssb_bandwidth_hz = 0.0;
    double range_resolution_m = 0.0;   // achieved
    double unambiguous_range_m = 0.0;  // achieved
    double pri_s = 0.0;
    double prf_hz = 0.0;
    double cp_duration_s = 0.0;
    double symbol_duration_s = 0.0;
};

enum class MuTieBreak {
    PreferSmallest,  // maximize unambiguous range
    PreferLargest,   // maximize resolution headroom
};

/// Smallest numerology index whose SSB bandwidth meets the required range
/// resolution. Clamped below at 0.
int mu_lower_bound_resolution(const RadarRequirements& req);

/// Largest numerology index whose subcarrier spacing still covers the
/// required unambiguous range. Clamped above at 6.
int mu_upper_bound_range(const RadarRequirements& req);

/// Smallest numerology index compatible with the PRF needed for the required
/// unambiguous velocity. Clamped below at 0.
int mu_lower_bound_prf(const RadarRequirements& req);

/// SSB burst period in seconds for numerology mu (frame = 10 ms, 10*2^mu
/// slots per frame, L0 slots per frame period, n0 frames per burst).
double pri_from_mu(int mu, int n0, int L0);

double scs_from_mu(int mu);

/// True when mu satisfies all three requirement inequalities.
bool mu_feasible(int mu, const RadarRequirements& req);

/// Combines the three bounds into a feasible window over {0..6} and returns
/// the plan for the tie-break choice. Throws InfeasibleError when the window
/// is empty.
NumerologyPlan select_numerology(const RadarRequirements& req,
                                 MuTieBreak tie = MuTieBreak::PreferSmallest,
                                 const CpConvention& cp = {});

/// Plan for a fixed mu (no feasibility check beyond the {0..6} domain).
NumerologyPlan plan_for_mu(int mu, const RadarRequirements& req, const CpConvention& cp = {});

}  // namespace nrtomo

#endif  // NRTOMO_NR_FRAME_HPP
