#ifndef NRTOMO_COMMON_HPP
#define NRTOMO_COMMON_HPP

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace nrtomo {

using cpx = std::complex<double>;

namespace constants {
// Propagation speed used throughout (radar convention, 3e8 m/s).
inline constexpr double speed_of_light = 3.0e8;
inline constexpr double base_scs_hz = 15.0e3;   // NR numerology 0 subcarrier spacing
inline constexpr int ssb_subcarriers = 240;     // SSB occupies 20 RB = 240 subcarriers
inline constexpr double pi = 3.141592653589793238462643383279502884;
inline constexpr double two_pi = 2.0 * pi;
}  // namespace constants

// ---------------------------------------------------------------------------
// Error taxonomy. Config/setup problems map to exit code 2 at the CLI,
// infeasible numerology windows to exit code 3.
// ---------------------------------------------------------------------------

struct InfeasibleError : std::runtime_error {
    explicit InfeasibleError(const std::string& what) : std::runtime_error(what) {}
};

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

struct DegenerateGeometry : std::runtime_error {
    explicit DegenerateGeometry(const std::string& what) : std::runtime_error(what) {}
};

struct InvalidGeometry : std::runtime_error {
    explicit InvalidGeometry(const std::string& what) : std::runtime_error(what) {}
};

struct NoPathsDetected : std::runtime_error {
    explicit NoPathsDetected(const std::string& what) : std::runtime_error(what) {}
};

struct DegenerateLoS : std::runtime_error {
    explicit DegenerateLoS(const std::string& what) : std::runtime_error(what) {}
};

struct RankDeficientCovariance : std::runtime_error {
    explicit RankDeficientCovariance(const std::string& what) : std::runtime_error(what) {}
};

struct IoError : std::runtime_error {
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

// splitmix64; used to derive independent per-task RNG streams from one seed.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0,
                              std::uint64_t c = 0) {
    std::uint64_t s = splitmix64(seed ^ (0x510e527fade682d1ULL + a));
    s = splitmix64(s ^ (0x9b05688c2b3e6c1fULL + b));
    return splitmix64(s ^ (0x1f83d9abfb41bd6bULL + c));
}

}  // namespace nrtomo

#endif  // NRTOMO_COMMON_HPP
