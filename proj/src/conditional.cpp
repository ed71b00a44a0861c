#include "durstat/conditional.hpp"

#include "durstat/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace durstat {

OctilePartition partition_octiles(const EnsembleSeries& ensemble) {
    const std::size_t n = ensemble.size();
    if (n < static_cast<std::size_t>(octile_count))
        throw InvalidArgument("octile partition needs at least 8 values");
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return ensemble.values[a] < ensemble.values[b]; });

    OctilePartition part;
    part.group_of.resize(n);
    for (int g = 0; g < octile_count; ++g) {
        const std::size_t begin = n * static_cast<std::size_t>(g) / octile_count;
        const std::size_t end = n * static_cast<std::size_t>(g + 1) / octile_count;
        part.counts[g] = end - begin;
        part.lower[g] = ensemble.values[order[begin]];
        part.upper[g] = ensemble.values[order[end - 1]];
        for (std::size_t r = begin; r < end; ++r) part.group_of[order[r]] = static_cast<std::uint8_t>(g);
    }
    for (int g = 1; g < octile_count; ++g) {
        if (part.lower[g] == part.upper[g - 1]) {
            part.degenerate = true;
            part.warnings.push_back("groups " + std::to_string(g) + " and " + std::to_string(g + 1) +
                                    " share boundary value " + std::to_string(part.lower[g]));
        }
    }
    if (part.lower.front() == part.upper.back()) part.warnings.push_back("all octile boundaries are equal");
    return part;
}

std::vector<double> conditional_successors(const EnsembleSeries& ensemble, const OctilePartition& part, int group) {
    if (group < 1 || group > octile_count) throw InvalidArgument("octile group must be in 1..8");
    if (part.group_of.size() != ensemble.size()) throw InvalidArgument("partition does not match the ensemble");
    std::vector<double> out;
    const auto g = static_cast<std::uint8_t>(group - 1);
    for (std::size_t i = 0; i + 1 < ensemble.size(); ++i)
        if (part.group_of[i] == g && ensemble.has_successor(i)) out.push_back(ensemble.values[i + 1]);
    return out;
}

DensityEstimate conditional_density(const EnsembleSeries& ensemble, const OctilePartition& part, int group,
                                    int bins_per_decade) {
    auto succ = conditional_successors(ensemble, part, group);
    std::erase_if(succ, [](double v) { return !(v > 0.0); });
    if (succ.empty()) throw EmptySeriesError("octile group " + std::to_string(group) + " has no positive successors");
    return empirical_density(succ, bins_per_decade, 1);
}

DensityEstimate conditional_density(const EnsembleSeries& ensemble, int group, int bins_per_decade) {
    return conditional_density(ensemble, partition_octiles(ensemble), group, bins_per_decade);
}

bool ConditionalCurve::strictly_increasing() const {
    for (int g = 1; g < octile_count; ++g)
        if (!(points[g].cond_mean > points[g - 1].cond_mean)) return false;
    return true;
}

SlopeEstimate ConditionalCurve::wls_slope() const {
    double sw = 0, swx = 0, swy = 0;
    for (const auto& p : points) {
        const double w = p.std_error > 0.0 ? 1.0 / (p.std_error * p.std_error) : 0.0;
        sw += w;
        swx += w * p.g0_mean;
        swy += w * p.cond_mean;
    }
    if (!(sw > 0.0)) throw DegenerateSeriesError("conditional curve has no positive standard errors");
    const double xm = swx / sw, ym = swy / sw;
    double sxx = 0, sxy = 0;
    for (const auto& p : points) {
        const double w = p.std_error > 0.0 ? 1.0 / (p.std_error * p.std_error) : 0.0;
        sxx += w * (p.g0_mean - xm) * (p.g0_mean - xm);
        sxy += w * (p.g0_mean - xm) * (p.cond_mean - ym);
    }
    if (!(sxx > 0.0)) throw DegenerateSeriesError("conditional curve has no spread in g0");
    return {sxy / sxx, std::sqrt(1.0 / sxx)};
}

ConditionalCurve conditional_mean_curve(const EnsembleSeries& ensemble, const OctilePartition& part) {
    ConditionalCurve curve;
    std::array<double, octile_count> member_sum{};
    for (std::size_t i = 0; i < ensemble.size(); ++i) member_sum[part.group_of[i]] += ensemble.values[i];

    long double total = 0.0L;
    for (int g = 0; g < octile_count; ++g) {
        const auto succ = conditional_successors(ensemble, part, g + 1);
        if (succ.empty()) throw EmptySeriesError("octile group " + std::to_string(g + 1) + " has no successors");
        auto& p = curve.points[g];
        p.g0_mean = member_sum[g] / static_cast<double>(part.counts[g]);
        p.count = succ.size();
        long double s = 0.0L;
        for (double v : succ) s += v;
        total += s;
        p.cond_mean = static_cast<double>(s / static_cast<long double>(succ.size()));
        if (succ.size() > 1) {
            long double ss = 0.0L;
            for (double v : succ) ss += (v - p.cond_mean) * (v - p.cond_mean);
            p.std_error = std::sqrt(static_cast<double>(ss / static_cast<long double>(succ.size() - 1)) /
                                 static_cast<double>(succ.size()));
        }
        curve.successor_count += succ.size();
    }
    curve.successor_mean = static_cast<double>(total / static_cast<long double>(curve.successor_count));
    return curve;
}

ConditionalCurve conditional_mean_curve(const EnsembleSeries& ensemble) {
    return conditional_mean_curve(ensemble, partition_octiles(ensemble));
}

}  // namespace durstat
