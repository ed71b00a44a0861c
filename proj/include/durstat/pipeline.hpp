#pragma once

#include "durstat/durations.hpp"
#include "durstat/synthetic.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace durstat {

inline constexpr std::string_view version_string = "0.1.0";
inline constexpr std::string_view workers_env = "DURSTAT_WORKERS";

struct SyntheticSettings {
    std::size_t symbols = 0;
    std::size_t days = 5;
    double mean_gap = 2.0;
    double shape = 0.67;
    double hurst = 0.5;
    double buy_fraction = 0.5;
    double modulation = 0.0;
    double simultaneous = 0.0;
};

/// Declarative run description, read from "key = value" lines ('#' starts a
/// comment). Relative paths resolve against `base_dir`.
struct PipelineConfig {
    std::filesystem::path base_dir = ".";
    std::string output_dir = "durstat-out";
    std::string calendar = "default-szse2003";
    std::vector<DirectionClass> classes{DirectionClass::all, DirectionClass::buy, DirectionClass::sell};
    int bins_per_decade = 20;
    int dfa_order = 1;
    double q_min = -6.0;
    double q_max = 6.0;
    int profile_degree = 6;
    std::uint64_t seed = 1;
    std::string schema;  // empty: detect the default or the canonical layout
    std::map<std::string, std::string> inputs;  // symbol -> path
    SyntheticSettings synthetic;

    static PipelineConfig parse(std::string_view text, std::filesystem::path base_dir = ".");
    static PipelineConfig load(const std::filesystem::path& path);

    /// Throws ValidationError; touches the file system only to check that
    /// referenced files exist.
    void validate() const;

    std::filesystem::path resolve(const std::string& path) const;
    /// Sorted key = value text of every setting except the output location.
    std::string canonical_text() const;
    std::string hash() const;
};

/// Seed of synthetic symbol `index` under the run seed.
std::uint64_t synthetic_seed(std::uint64_t run_seed, std::size_t index);
std::string synthetic_symbol(std::size_t index);

enum class IdentityStatus { pass, fail, not_applicable };
std::string_view identity_status_name(IdentityStatus s);

struct IdentityCheck {
    std::string name;
    IdentityStatus status = IdentityStatus::not_applicable;
    std::string detail;
};

struct IdentityReport {
    std::vector<IdentityCheck> checks;
    bool passed() const;
    const IdentityCheck& operator[](std::string_view name) const;
};

/// Per-class bookkeeping for the identity checks. `mean` is NaN when the
/// class has no durations.
struct ClassSummary {
    std::size_t events = 0;
    std::size_t zeros = 0;
    std::size_t durations = 0;
    double mean = 0.0;
};

ClassSummary summarize_class(const EventSeries& series, DirectionClass cls);

/// N = N^b + N^s, N0 >= N0^b + N0^s, <tau^b> > <tau>, <tau^s> > <tau>.
/// Throws InvalidArgument when a class is missing.
IdentityReport validate_identities(const std::map<DirectionClass, ClassSummary>& by_class);

struct StageStatus {
    std::string symbol;
    std::string cls;
    std::string stage;
    std::string status;  // ok, failed, skipped, not_applicable
    std::string message;
};

struct RunReport {
    std::vector<StageStatus> stages;
    std::size_t class_analyses_completed = 0;
    std::size_t class_analyses_total = 0;
    int exit_code = 0;
    std::filesystem::path output_dir;
};

/// Worker count from the environment, at least 1.
unsigned workers_from_env();

/// Validates, then runs every stage and writes tables, plot data and
/// manifest.json under the output directory. workers = 0 reads the
/// environment. Throws ValidationError before any output is written.
RunReport run_pipeline(const PipelineConfig& config, unsigned workers = 0);

}  // namespace durstat
