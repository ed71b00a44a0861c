#pragma once

#include "durstat/density.hpp"
#include "durstat/durations.hpp"

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace durstat {

inline constexpr int octile_count = 8;

/// Equal-count split of the pooled values by rank. Ranks come from a stable
/// sort, so ties straddling a boundary are split by position and group sizes
/// never differ by more than one.
struct OctilePartition {
    std::array<double, octile_count> lower{};
    std::array<double, octile_count> upper{};
    std::array<std::size_t, octile_count> counts{};
    std::vector<std::uint8_t> group_of;  // 0-based group of every ensemble value
    bool degenerate = false;             // some adjacent groups share a boundary value
    std::vector<std::string> warnings;
};

OctilePartition partition_octiles(const EnsembleSeries& ensemble);

/// Successors g(t) whose predecessor g(t-1) lies in group `group` (1..8).
/// Pairs never cross a member or segment boundary.
std::vector<double> conditional_successors(const EnsembleSeries& ensemble, const OctilePartition& part, int group);

DensityEstimate conditional_density(const EnsembleSeries& ensemble, const OctilePartition& part, int group,
                                    int bins_per_decade = default_bins_per_decade);
DensityEstimate conditional_density(const EnsembleSeries& ensemble, int group,
                                    int bins_per_decade = default_bins_per_decade);

struct ConditionalPoint {
    double g0_mean = 0.0;    // mean of the group itself
    double cond_mean = 0.0;  // mean of the successors
    double std_error = 0.0;
    std::size_t count = 0;   // successors
};

struct SlopeEstimate {
    double slope = 0.0;
    double std_error = 0.0;
};

struct ConditionalCurve {
    std::array<ConditionalPoint, octile_count> points{};
    double successor_mean = 0.0;
    std::size_t successor_count = 0;

    bool strictly_increasing() const;
    /// Inverse-variance weighted least-squares slope of cond_mean on g0_mean.
    SlopeEstimate wls_slope() const;
};

ConditionalCurve conditional_mean_curve(const EnsembleSeries& ensemble);
ConditionalCurve conditional_mean_curve(const EnsembleSeries& ensemble, const OctilePartition& part);

}  // namespace durstat
