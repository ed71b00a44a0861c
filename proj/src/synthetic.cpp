#include "durstat/synthetic.hpp"

#include "durstat/error.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <string>

#include <fftw3.h>

namespace durstat {

namespace {

constexpr std::uint64_t golden_gamma = 0x9E3779B97F4A7C15ULL;

std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

double param(const GeneratorSpec& spec, const std::string& name) {
    const auto it = spec.params.find(name);
    if (it == spec.params.end())
        throw InvalidArgument(std::string("generator '") + std::string(generator_name(spec.kind)) +
                              "' needs parameter '" + name + "'");
    return it->second;
}

void check_hurst(double hurst) {
    if (!(hurst > 0.0 && hurst < 1.0)) throw InvalidArgument("Hurst exponent must lie in (0, 1)");
}

}  // namespace

CounterRng::CounterRng(std::uint64_t seed, std::uint64_t stream)
    : seed_(seed), stream_(stream), key_(mix64(seed + golden_gamma) ^ mix64(~stream * golden_gamma + 0x632BE59BD9B4E019ULL)) {}

CounterRng::result_type CounterRng::operator()() { return mix64(key_ + (++counter_) * golden_gamma); }

double CounterRng::uniform() { return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53; }

double CounterRng::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double phi = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(phi);
    has_spare_ = true;
    return r * std::cos(phi);
}

std::vector<double> gen_poisson_durations(double rate, std::size_t n, std::uint64_t seed) {
    if (!(rate > 0.0) || !std::isfinite(rate)) throw InvalidArgument("Poisson rate must be positive");
    CounterRng rng(seed);
    std::vector<double> out(n);
    for (auto& v : out) v = -std::log(rng.uniform()) / rate;
    return out;
}

std::vector<double> gen_weibull_iid(const WeibullParams& p, std::size_t n, std::uint64_t seed) {
    validate(p);
    CounterRng rng(seed);
    std::vector<double> out(n);
    for (auto& v : out) v = p.scale * std::pow(-std::log(rng.uniform()), 1.0 / p.shape);
    return out;
}

std::vector<double> gen_qexp_iid(const QExpParams& p, std::size_t n, std::uint64_t seed) {
    validate(p);
    if (!(p.q > 1.0)) throw InvalidArgument("q-exponential sampler requires q > 1");
    if (p.q >= 2.0) throw InvalidArgument("q-exponential with q >= 2 has no finite mean; refusing to sample");
    CounterRng rng(seed);
    // Survival S(tau) = u^(1/(1-q)), u = 1 + (q-1) tau/mu; invert at S = U.
    const double k = p.q - 1.0;
    std::vector<double> out(n);
    for (auto& v : out) v = p.scale * std::expm1(-k * std::log(rng.uniform())) / k;
    return out;
}

std::vector<double> gen_fgn(double hurst, std::size_t n, std::uint64_t seed) {
    check_hurst(hurst);
    if (n == 0) throw InvalidArgument("fGn length must be positive");
    const std::size_t m = 2 * n;
    const double two_h = 2.0 * hurst;
    // second difference of k^2H; the expm1 form avoids cancellation at large lags
    auto gamma = [two_h](double k) {
        if (k < 2.0)
            return 0.5 * (std::pow(k + 1.0, two_h) - 2.0 * std::pow(k, two_h) + std::pow(std::abs(k - 1.0), two_h));
        const double up = std::expm1(two_h * std::log1p(1.0 / k));
        const double down = std::expm1(two_h * std::log1p(-1.0 / k));
        return 0.5 * std::pow(k, two_h) * (up + down);
    };

    auto* buf = reinterpret_cast<std::complex<double>*>(fftw_malloc(sizeof(fftw_complex) * m));
    if (!buf) throw std::bad_alloc();
    auto* raw = reinterpret_cast<fftw_complex*>(buf);
    const fftw_plan plan = fftw_plan_dft_1d(static_cast<int>(m), raw, raw, FFTW_FORWARD, FFTW_ESTIMATE);

    for (std::size_t j = 0; j <= n; ++j) buf[j] = gamma(static_cast<double>(j));
    for (std::size_t j = n + 1; j < m; ++j) buf[j] = buf[m - j];
    fftw_execute(plan);

    std::vector<double> eig(m);
    double top = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
        eig[k] = buf[k].real();
        top = std::max(top, eig[k]);
    }
    for (auto& l : eig) {
        if (l < -1e-10 * top) {
            fftw_destroy_plan(plan);
            fftw_free(buf);
            throw NumericError("circulant embedding is not positive definite for H = " + std::to_string(hurst));
        }
        l = std::max(l, 0.0);
    }

    CounterRng rng(seed);
    const double inv_m = 1.0 / static_cast<double>(m);
    for (std::size_t k = 0; k < m; ++k) {
        const double a = rng.normal();
        const double b = rng.normal();
        buf[k] = std::sqrt(eig[k] * inv_m) * std::complex<double>(a, b);
    }
    fftw_execute(plan);
    std::vector<double> out(n);
    for (std::size_t j = 0; j < n; ++j) out[j] = buf[j].real();
    fftw_destroy_plan(plan);
    fftw_free(buf);
    return out;
}

std::vector<double> gen_longmem_weibull(const WeibullParams& p, double hurst, std::size_t n, std::uint64_t seed) {
    validate(p);
    auto x = gen_fgn(hurst, n, seed);
    for (auto& v : x) {
        const double survival = 0.5 * std::erfc(v / std::numbers::sqrt2);
        v = p.scale * std::pow(-std::log(survival), 1.0 / p.shape);
    }
    return x;
}

std::vector<double> gen_binomial_cascade(double p, int levels, std::uint64_t seed, bool shuffle) {
    if (!(p > 0.0 && p < 1.0)) throw InvalidArgument("cascade weight must lie in (0, 1)");
    if (levels < 0) throw InvalidArgument("cascade levels must be non-negative");
    if (levels > 26) throw InvalidArgument("cascade levels above 26 exceed the size guard");
    CounterRng rng(seed);
    std::vector<double> cur{1.0};
    for (int l = 0; l < levels; ++l) {
        std::vector<double> next(cur.size() * 2);
        for (std::size_t i = 0; i < cur.size(); ++i) {
            const double left = cur[i] * p;
            const double right = cur[i] - left;
            const bool swap = shuffle && (rng() >> 63) != 0;
            next[2 * i] = swap ? right : left;
            next[2 * i + 1] = swap ? left : right;
        }
        cur.swap(next);
    }
    return cur;
}

double cascade_hurst(double p, double q) {
    if (q == 0.0) return -0.5 * (std::log2(p) + std::log2(1.0 - p));
    return 1.0 / q - std::log(std::pow(p, q) + std::pow(1.0 - p, q)) / (q * std::numbers::ln2);
}

std::string_view generator_name(GeneratorKind k) {
    switch (k) {
        case GeneratorKind::poisson: return "poisson";
        case GeneratorKind::weibull_iid: return "weibull_iid";
        case GeneratorKind::qexp_iid: return "qexp_iid";
        case GeneratorKind::fgn: return "fgn";
        case GeneratorKind::longmem_weibull: return "longmem_weibull";
        case GeneratorKind::binomial_cascade: return "binomial_cascade";
    }
    return "poisson";
}

GeneratorKind parse_generator(std::string_view text) {
    for (auto k : {GeneratorKind::poisson, GeneratorKind::weibull_iid, GeneratorKind::qexp_iid, GeneratorKind::fgn,
                   GeneratorKind::longmem_weibull, GeneratorKind::binomial_cascade})
        if (generator_name(k) == text) return k;
    throw InvalidArgument("unknown generator kind '" + std::string(text) + "'");
}

std::vector<double> generate(const GeneratorSpec& spec) {
    if (spec.length == 0 && spec.kind != GeneratorKind::binomial_cascade)
        throw InvalidArgument("generator length must be positive");
    switch (spec.kind) {
        case GeneratorKind::poisson:
            return gen_poisson_durations(param(spec, "rate"), spec.length, spec.seed);
        case GeneratorKind::weibull_iid:
            return gen_weibull_iid({param(spec, "alpha"), param(spec, "beta")}, spec.length, spec.seed);
        case GeneratorKind::qexp_iid:
            return gen_qexp_iid({param(spec, "mu"), param(spec, "q")}, spec.length, spec.seed);
        case GeneratorKind::fgn:
            return gen_fgn(param(spec, "H"), spec.length, spec.seed);
        case GeneratorKind::longmem_weibull:
            return gen_longmem_weibull({param(spec, "alpha"), param(spec, "beta")}, param(spec, "H"), spec.length,
                                       spec.seed);
        case GeneratorKind::binomial_cascade: {
            int levels = 0;
            if (spec.params.count("levels")) {
                levels = static_cast<int>(param(spec, "levels"));
            } else {
                if (spec.length == 0 || (spec.length & (spec.length - 1)) != 0)
                    throw InvalidArgument("cascade length must be a power of two");
                while ((std::size_t{1} << levels) < spec.length) ++levels;
            }
            const bool shuffle = spec.params.count("shuffle") && param(spec, "shuffle") != 0.0;
            return gen_binomial_cascade(param(spec, "p"), levels, spec.seed, shuffle);
        }
    }
    throw InvalidArgument("unhandled generator kind");
}

double inverse_u_modulation(double amplitude, double x) {
    return 1.0 + amplitude * (std::sin(std::numbers::pi * x) - 2.0 / std::numbers::pi);
}

EventSeries gen_event_stream(const StreamSpec& spec, const SessionCalendar& calendar) {
    if (spec.days == 0) throw InvalidArgument("event stream needs at least one day");
    if (!(spec.mean_gap > 0.0)) throw InvalidArgument("mean gap must be positive");
    if (!(spec.buy_fraction >= 0.0 && spec.buy_fraction <= 1.0)) throw InvalidArgument("buy fraction outside [0, 1]");
    if (std::abs(spec.modulation) >= 1.0 / (1.0 - 2.0 / std::numbers::pi))
        throw InvalidArgument("modulation amplitude makes gaps non-positive");
    const WeibullParams gap{spec.mean_gap / std::tgamma(1.0 + 1.0 / spec.shape), spec.shape};

    double day_seconds = 0.0;
    for (const auto& s : calendar.sessions()) day_seconds += static_cast<double>(s.close - s.open) / centis_per_second;
    const double min_mod = 1.0 - std::abs(spec.modulation) * 2.0 / std::numbers::pi;
    const double expected = static_cast<double>(spec.days) * day_seconds / (spec.mean_gap * min_mod);
    std::size_t block = 1024;
    while (static_cast<double>(block) < 1.25 * expected + 1024.0) block *= 2;

    std::uint64_t block_index = 0;
    auto next_block = [&]() {
        const std::uint64_t s = spec.seed * 0x9E3779B97F4A7C15ULL + block_index++;
        return spec.hurst == 0.5 ? gen_weibull_iid(gap, block, s) : gen_longmem_weibull(gap, spec.hurst, block, s);
    };
    auto gaps = next_block();
    std::size_t used = 0;
    auto draw_gap = [&]() {
        if (used == gaps.size()) {
            gaps = next_block();
            used = 0;
        }
        return gaps[used++];
    };

    CounterRng rng(spec.seed, 1);
    EventSeries out;
    out.symbol = spec.symbol;
    out.calendar = calendar;
    const double minutes = static_cast<double>(calendar.minutes_per_day());
    std::vector<std::int32_t> days;
    if (!calendar.days().empty()) {
        for (auto day : calendar.days())
            if (day >= spec.first_day && days.size() < spec.days) days.push_back(day);
    } else {
        for (std::int32_t day = spec.first_day; days.size() < spec.days; ++day) {
            const int weekday = (day + 4) % 7;  // 0 = Sunday
            if (weekday != 0 && weekday != 6) days.push_back(day);
        }
    }
    for (const auto day : days) {
        for (const auto& s : calendar.sessions()) {
            const double open = static_cast<double>(s.open) / centis_per_second;
            const double close = static_cast<double>(s.close) / centis_per_second;
            double t = open;
            while (true) {
                const auto here = static_cast<Centis>(std::llround(t * centis_per_second));
                const double x = (calendar.minute_index(std::min<Centis>(here, s.close)) - 0.5) / minutes;
                t += draw_gap() * inverse_u_modulation(spec.modulation, x);
                if (t > close) break;
                const auto tod = std::min<Centis>(static_cast<Centis>(std::llround(t * centis_per_second)), s.close);
                const Direction dir = rng.uniform() < spec.buy_fraction ? Direction::buy : Direction::sell;
                out.events.push_back({day, tod, dir});
                if (spec.simultaneous > 0.0 && rng.uniform() < spec.simultaneous)
                    out.events.push_back({day, tod, dir == Direction::buy ? Direction::sell : Direction::buy});
            }
        }
    }
    return out;
}

EnsembleSeries shuffle_within_members(const EnsembleSeries& ensemble, std::uint64_t seed) {
    EnsembleSeries out = ensemble;
    std::size_t begin = 0;
    while (begin < out.size()) {
        std::size_t end = begin + 1;
        while (end < out.size() && out.member[end] == out.member[begin]) ++end;
        CounterRng rng(seed, out.member[begin]);
        for (std::size_t i = end - begin; i > 1; --i) {
            const auto j = static_cast<std::size_t>(rng.uniform() * static_cast<double>(i));
            std::swap(out.values[begin + i - 1], out.values[begin + std::min(j, i - 1)]);
        }
        begin = end;
    }
    return out;
}

}  // namespace durstat
