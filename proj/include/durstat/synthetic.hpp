#pragma once

#include "durstat/density.hpp"
#include "durstat/durations.hpp"
#include "durstat/events.hpp"

#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace durstat {

/// Counter-based SplitMix64 stream. Draw i of stream (seed, s) is a pure
/// function of (seed, s, i), so independent streams can be generated in any
/// order or in parallel with identical results.
class CounterRng {
public:
    using result_type = std::uint64_t;

    explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0);

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
    result_type operator()();

    /// Uniform on the open interval (0, 1).
    double uniform();
    double normal();

    CounterRng split(std::uint64_t stream) const { return CounterRng(seed_, stream_ * 0x100000001b3ULL + stream + 1); }

private:
    std::uint64_t seed_;
    std::uint64_t stream_;
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

std::vector<double> gen_poisson_durations(double rate, std::size_t n, std::uint64_t seed);
std::vector<double> gen_weibull_iid(const WeibullParams& p, std::size_t n, std::uint64_t seed);
/// Inverse-CDF sampling of the q-exponential; requires 1 < q < 2.
std::vector<double> gen_qexp_iid(const QExpParams& p, std::size_t n, std::uint64_t seed);

/// Fractional Gaussian noise with unit variance by circulant embedding.
std::vector<double> gen_fgn(double hurst, std::size_t n, std::uint64_t seed);

/// Gaussian copula: fGn -> standard normal CDF -> Weibull quantile.
std::vector<double> gen_longmem_weibull(const WeibullParams& p, double hurst, std::size_t n, std::uint64_t seed);

/// Binomial multiplicative cascade of total mass 1 and length 2^levels. With
/// `shuffle`, the side receiving weight p is drawn per split.
std::vector<double> gen_binomial_cascade(double p, int levels, std::uint64_t seed, bool shuffle = false);

/// Closed-form MF-DFA exponent of the cascade: 1/q - ln(p^q + (1-p)^q)/(q ln 2).
double cascade_hurst(double p, double q);

enum class GeneratorKind { poisson, weibull_iid, qexp_iid, fgn, longmem_weibull, binomial_cascade };

std::string_view generator_name(GeneratorKind k);
GeneratorKind parse_generator(std::string_view text);

struct GeneratorSpec {
    GeneratorKind kind = GeneratorKind::poisson;
    std::map<std::string, double> params;
    std::size_t length = 0;
    std::uint64_t seed = 0;
};

std::vector<double> generate(const GeneratorSpec& spec);

/// Seeded permutation of each member's values in place of the originals;
/// tags stay where they were, so only the ordering within a member changes.
EnsembleSeries shuffle_within_members(const EnsembleSeries& ensemble, std::uint64_t seed);

/// Two-sided synthetic event stream laid out over a session calendar.
struct StreamSpec {
    std::string symbol = "SYN";
    std::int32_t first_day = 12054;  // 2003-01-02
    std::size_t days = 5;
    double mean_gap = 2.0;      // seconds between events before modulation
    double shape = 0.67;        // Weibull shape of the gaps
    double hurst = 0.5;         // copula memory of the gap sequence
    double buy_fraction = 0.5;
    double modulation = 0.0;    // inverse-U amplitude of the intraday gap profile
    double simultaneous = 0.0;  // chance of an opposite-side twin at the same instant
    std::uint64_t seed = 1;
};

/// Relative gap multiplier at trading-day fraction x in [0, 1].
double inverse_u_modulation(double amplitude, double x);

EventSeries gen_event_stream(const StreamSpec& spec, const SessionCalendar& calendar = SessionCalendar::szse2003());

}  // namespace durstat
