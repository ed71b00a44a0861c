#include "durstat/pipeline.hpp"

#include "durstat/conditional.hpp"
#include "durstat/error.hpp"
#include "durstat/fit.hpp"
#include "durstat/fractal.hpp"
#include "durstat/intraday.hpp"
#include "durstat/text_io.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <mutex>
#include <optional>
#include <sstream>
#include <thread>

namespace durstat {

namespace fs = std::filesystem;

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

template <class T>
T parse_int_value(const std::string& key, const std::string& value) {
    try {
        std::size_t pos = 0;
        const long long v = std::stoll(value, &pos);
        if (pos != value.size()) throw std::invalid_argument(value);
        if (v < static_cast<long long>(std::numeric_limits<T>::min()) ||
            static_cast<unsigned long long>(v) > static_cast<unsigned long long>(std::numeric_limits<T>::max()))
            throw std::out_of_range(value);
        return static_cast<T>(v);
    } catch (const std::logic_error&) {
        throw ValidationError("'" + key + "' expects an integer, got '" + value + "'");
    }
}

double parse_double_value(const std::string& key, const std::string& value) {
    try {
        return parse_number(value);
    } catch (const Error&) {
        throw ValidationError("'" + key + "' expects a number, got '" + value + "'");
    }
}

std::string hex64(unsigned long long v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", v);
    return buf;
}

}  // namespace

PipelineConfig PipelineConfig::parse(std::string_view text, fs::path base_dir) {
    PipelineConfig cfg;
    cfg.base_dir = std::move(base_dir);
    std::map<std::string, std::string> seen;
    std::size_t line_no = 0;
    std::istringstream in{std::string(text)};
    std::string raw;
    while (std::getline(in, raw)) {
        ++line_no;
        const auto hash = raw.find('#');
        const std::string line = trim(std::string_view(raw).substr(0, hash));
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ValidationError("line " + std::to_string(line_no) + ": expected 'key = value'");
        const std::string key = trim(std::string_view(line).substr(0, eq));
        const std::string value = trim(std::string_view(line).substr(eq + 1));
        if (key.empty()) throw ValidationError("line " + std::to_string(line_no) + ": empty key");
        if (!seen.emplace(key, value).second)
            throw ValidationError("line " + std::to_string(line_no) + ": duplicate key '" + key + "'");

        if (key == "output_dir") {
            cfg.output_dir = value;
        } else if (key == "calendar") {
            cfg.calendar = value;
        } else if (key == "classes") {
            cfg.classes.clear();
            for (const auto& f : split_fields(value, ',')) {
                try {
                    const auto c = parse_class(trim(f));
                    if (std::find(cfg.classes.begin(), cfg.classes.end(), c) == cfg.classes.end())
                        cfg.classes.push_back(c);
                } catch (const Error& e) {
                    throw ValidationError(std::string("classes: ") + e.what());
                }
            }
            std::sort(cfg.classes.begin(), cfg.classes.end());
        } else if (key == "bins_per_decade") {
            cfg.bins_per_decade = parse_int_value<int>(key, value);
        } else if (key == "dfa_order") {
            cfg.dfa_order = parse_int_value<int>(key, value);
        } else if (key == "q_min") {
            cfg.q_min = parse_double_value(key, value);
        } else if (key == "q_max") {
            cfg.q_max = parse_double_value(key, value);
        } else if (key == "profile_degree") {
            cfg.profile_degree = parse_int_value<int>(key, value);
        } else if (key == "seed") {
            cfg.seed = parse_int_value<std::uint64_t>(key, value);
        } else if (key == "schema") {
            cfg.schema = value;
        } else if (key.rfind("input.", 0) == 0) {
            const std::string sym = key.substr(6);
            if (sym.empty()) throw ValidationError("line " + std::to_string(line_no) + ": input without a symbol");
            cfg.inputs[sym] = value;
        } else if (key == "synthetic.symbols") {
            cfg.synthetic.symbols = parse_int_value<std::size_t>(key, value);
        } else if (key == "synthetic.days") {
            cfg.synthetic.days = parse_int_value<std::size_t>(key, value);
        } else if (key == "synthetic.mean_gap") {
            cfg.synthetic.mean_gap = parse_double_value(key, value);
        } else if (key == "synthetic.shape") {
            cfg.synthetic.shape = parse_double_value(key, value);
        } else if (key == "synthetic.hurst") {
            cfg.synthetic.hurst = parse_double_value(key, value);
        } else if (key == "synthetic.buy_fraction") {
            cfg.synthetic.buy_fraction = parse_double_value(key, value);
        } else if (key == "synthetic.modulation") {
            cfg.synthetic.modulation = parse_double_value(key, value);
        } else if (key == "synthetic.simultaneous") {
            cfg.synthetic.simultaneous = parse_double_value(key, value);
        } else {
            throw ValidationError("line " + std::to_string(line_no) + ": unknown key '" + key + "'");
        }
    }
    return cfg;
}

PipelineConfig PipelineConfig::load(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open config '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    auto base = path.parent_path();
    if (base.empty()) base = ".";
    return parse(ss.str(), base);
}

fs::path PipelineConfig::resolve(const std::string& path) const {
    const fs::path p(path);
    return p.is_absolute() ? p : base_dir / p;
}

void PipelineConfig::validate() const {
    if (classes.empty()) throw ValidationError("no direction classes selected");
    if (bins_per_decade < 1 || bins_per_decade > 200) throw ValidationError("bins_per_decade must lie in [1, 200]");
    if (dfa_order < 0 || dfa_order > 5) throw ValidationError("dfa_order must lie in [0, 5]");
    if (!(q_min < q_max) || !std::isfinite(q_min) || !std::isfinite(q_max))
        throw ValidationError("q_min must be below q_max");
    if (!(q_min <= 2.0 && q_max >= 2.0)) throw ValidationError("the q range must contain 2");
    if (profile_degree < 0 || profile_degree > 12) throw ValidationError("profile_degree must lie in [0, 12]");
    if (output_dir.empty()) throw ValidationError("output_dir is empty");
    if (inputs.empty() && synthetic.symbols == 0) throw ValidationError("no inputs and no synthetic symbols");
    for (const auto& [sym, path] : inputs) {
        if (sym.find_first_of("/\\,\"") != std::string::npos)
            throw ValidationError("symbol '" + sym + "' contains a reserved character");
        const auto p = resolve(path);
        if (!fs::is_regular_file(p)) throw ValidationError("input for '" + sym + "' not found: " + p.string());
    }
    if (calendar != "default-szse2003") {
        const auto p = resolve(calendar);
        if (!fs::is_regular_file(p)) throw ValidationError("calendar file not found: " + p.string());
        try {
            (void)SessionCalendar::load(p.string());
        } catch (const Error& e) {
            throw ValidationError(std::string("calendar: ") + e.what());
        }
    }
    if (!schema.empty()) {
        try {
            (void)EventSchema::parse(schema);
        } catch (const Error& e) {
            throw ValidationError(std::string("schema: ") + e.what());
        }
    }
    if (synthetic.symbols > 0) {
        const auto& s = synthetic;
        if (s.symbols > 999) throw ValidationError("synthetic.symbols must not exceed 999");
        if (s.days < 1) throw ValidationError("synthetic.days must be positive");
        if (!(s.mean_gap > 0.0)) throw ValidationError("synthetic.mean_gap must be positive");
        if (!(s.shape > 0.0)) throw ValidationError("synthetic.shape must be positive");
        if (!(s.hurst > 0.0 && s.hurst < 1.0)) throw ValidationError("synthetic.hurst must lie in (0, 1)");
        if (!(s.buy_fraction >= 0.0 && s.buy_fraction <= 1.0))
            throw ValidationError("synthetic.buy_fraction must lie in [0, 1]");
        if (!(s.modulation >= 0.0 && s.modulation < 1.0))
            throw ValidationError("synthetic.modulation must lie in [0, 1)");
        if (!(s.simultaneous >= 0.0 && s.simultaneous <= 1.0))
            throw ValidationError("synthetic.simultaneous must lie in [0, 1]");
        for (std::size_t i = 0; i < s.symbols; ++i)
            if (inputs.count(synthetic_symbol(i)))
                throw ValidationError("input symbol '" + synthetic_symbol(i) + "' clashes with a synthetic symbol");
    }
}

std::string PipelineConfig::canonical_text() const {
    std::map<std::string, std::string> kv;
    kv["calendar"] = calendar;
    std::string cls;
    for (auto c : classes) cls += (cls.empty() ? "" : ",") + std::string(class_name(c));
    kv["classes"] = cls;
    kv["bins_per_decade"] = std::to_string(bins_per_decade);
    kv["dfa_order"] = std::to_string(dfa_order);
    kv["q_min"] = format_number(q_min);
    kv["q_max"] = format_number(q_max);
    kv["profile_degree"] = std::to_string(profile_degree);
    kv["seed"] = std::to_string(seed);
    kv["schema"] = schema;
    for (const auto& [sym, path] : inputs) kv["input." + sym] = path;
    kv["synthetic.symbols"] = std::to_string(synthetic.symbols);
    if (synthetic.symbols > 0) {
        kv["synthetic.days"] = std::to_string(synthetic.days);
        kv["synthetic.mean_gap"] = format_number(synthetic.mean_gap);
        kv["synthetic.shape"] = format_number(synthetic.shape);
        kv["synthetic.hurst"] = format_number(synthetic.hurst);
        kv["synthetic.buy_fraction"] = format_number(synthetic.buy_fraction);
        kv["synthetic.modulation"] = format_number(synthetic.modulation);
        kv["synthetic.simultaneous"] = format_number(synthetic.simultaneous);
    }
    std::string out;
    for (const auto& [k, v] : kv) out += k + " = " + v + "\n";
    return out;
}

std::string PipelineConfig::hash() const { return hex64(fnv1a64(canonical_text())); }

std::uint64_t synthetic_seed(std::uint64_t run_seed, std::size_t index) {
    CounterRng rng(run_seed, 0x5eed0000ULL + index);
    return rng();
}

std::string synthetic_symbol(std::size_t index) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "SYN%02zu", index + 1);
    return buf;
}

std::string_view identity_status_name(IdentityStatus s) {
    switch (s) {
        case IdentityStatus::pass: return "pass";
        case IdentityStatus::fail: return "fail";
        case IdentityStatus::not_applicable: return "not_applicable";
    }
    return "?";
}

bool IdentityReport::passed() const {
    return std::none_of(checks.begin(), checks.end(), [](const auto& c) { return c.status == IdentityStatus::fail; });
}

const IdentityCheck& IdentityReport::operator[](std::string_view name) const {
    for (const auto& c : checks)
        if (c.name == name) return c;
    throw InvalidArgument("no identity named '" + std::string(name) + "'");
}

ClassSummary summarize_class(const EventSeries& series, DirectionClass cls) {
    ClassSummary s;
    s.mean = std::numeric_limits<double>::quiet_NaN();
    try {
        const auto ds = compute_durations(series, cls);
        s.events = ds.event_count;
        s.zeros = ds.zero_count;
        s.durations = ds.size();
        s.mean = sample_mean(ds.durations);
    } catch (const EmptySeriesError&) {
        for (const auto& e : series.events)
            if (cls == DirectionClass::all || (cls == DirectionClass::buy) == (e.direction == Direction::buy))
                ++s.events;
    }
    return s;
}

IdentityReport validate_identities(const std::map<DirectionClass, ClassSummary>& by_class) {
    for (auto c : {DirectionClass::all, DirectionClass::buy, DirectionClass::sell})
        if (!by_class.count(c))
            throw InvalidArgument("identity check needs all three classes; '" + std::string(class_name(c)) +
                                  "' is missing");
    const auto& a = by_class.at(DirectionClass::all);
    const auto& b = by_class.at(DirectionClass::buy);
    const auto& s = by_class.at(DirectionClass::sell);
    IdentityReport r;

    IdentityCheck n{"N = Nb + Ns", IdentityStatus::fail, ""};
    n.status = a.events == b.events + s.events ? IdentityStatus::pass : IdentityStatus::fail;
    n.detail = std::to_string(a.events) + " vs " + std::to_string(b.events) + " + " + std::to_string(s.events);
    r.checks.push_back(n);

    IdentityCheck z{"N0 >= N0b + N0s", IdentityStatus::fail, ""};
    z.status = a.zeros >= b.zeros + s.zeros ? IdentityStatus::pass : IdentityStatus::fail;
    z.detail = std::to_string(a.zeros) + " vs " + std::to_string(b.zeros) + " + " + std::to_string(s.zeros);
    r.checks.push_back(z);

    for (const auto& [name, side] : {std::pair<const char*, const ClassSummary*>{"<tau_b> > <tau>", &b},
                                     std::pair<const char*, const ClassSummary*>{"<tau_s> > <tau>", &s}}) {
        IdentityCheck m{name, IdentityStatus::not_applicable, "a class has no durations"};
        if (side->durations > 0 && a.durations > 0 && b.durations > 0 && s.durations > 0) {
            m.status = side->mean > a.mean ? IdentityStatus::pass : IdentityStatus::fail;
            m.detail = format_number(side->mean) + " vs " + format_number(a.mean);
        }
        r.checks.push_back(m);
    }
    return r;
}

unsigned workers_from_env() {
    if (const char* v = std::getenv(std::string(workers_env).c_str())) {
        try {
            const long n = std::stol(v);
            if (n >= 1) return static_cast<unsigned>(std::min(n, 256L));
        } catch (const std::logic_error&) {
        }
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

namespace {

constexpr std::string_view ensemble_symbol = "_ensemble";

struct FitRow {
    std::string cls;
    FitResult fit;
};

struct ClassWork {
    DirectionClass cls = DirectionClass::all;
    std::optional<DurationSeries> durations;
    std::optional<SummaryStats> summary;
    std::optional<RescaledSeries> rescaled;
    std::vector<FitResult> fits;
    std::optional<DfaResult> dfa, dfa_adjusted;
    std::optional<MultifractalResult> mf, mf_adjusted;
    std::size_t n_days = 0;
};

struct SymbolWork {
    std::string symbol;
    std::optional<std::uint64_t> seed;
    std::size_t raw_records = 0, malformed = 0, removed = 0, retained = 0;
    std::optional<IdentityReport> identities;
    std::vector<ClassWork> classes;
    std::vector<StageStatus> stages;
};

class StageLog {
public:
    explicit StageLog(std::vector<StageStatus>& out) : out_(out) {}

    template <class F>
    bool run(const std::string& symbol, std::string_view cls, const std::string& stage, bool ready, F&& f) {
        if (!ready) {
            out_.push_back({symbol, std::string(cls), stage, "skipped", "upstream stage failed"});
            return false;
        }
        try {
            f();
            out_.push_back({symbol, std::string(cls), stage, "ok", ""});
            return true;
        } catch (const std::exception& e) {
            out_.push_back({symbol, std::string(cls), stage, "failed", e.what()});
            return false;
        }
    }

    void note(const std::string& symbol, std::string_view cls, const std::string& stage, const std::string& status,
              const std::string& message) {
        out_.push_back({symbol, std::string(cls), stage, status, message});
    }

private:
    std::vector<StageStatus>& out_;
};

void write_file(const fs::path& path, const std::string& text) {
    fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write '" + path.string() + "'");
    out << text;
    if (!out) throw Error("write failed for '" + path.string() + "'");
}

std::string num(double v) { return std::isfinite(v) ? format_number(v) : std::string(); }

EventSchema detect_schema(const std::string& header, const std::string& configured) {
    if (!configured.empty()) return EventSchema::parse(configured);
    return EventSchema::detect(header);
}

std::string density_csv(const DensityEstimate& d) {
    std::string s = "g,density,count\n";
    for (std::size_t i = 0; i < d.bins(); ++i) {
        if (d.empty_bin(i)) continue;
        s += format_number(d.centers[i]) + "," + format_number(d.density[i]) + "," + std::to_string(d.counts[i]) + "\n";
    }
    return s;
}

void write_fractal(const fs::path& stem, const MultifractalResult& mf) {
    const auto& sf = mf.surface;
    std::string fl = "s,q,F\n";
    for (std::size_t si = 0; si < sf.scales.size(); ++si)
        for (std::size_t qi = 0; qi < sf.q.size(); ++qi)
            fl += std::to_string(sf.scales[si]) + "," + format_number(sf.q[qi]) + "," + num(sf.at(qi, si)) + "\n";
    write_file(stem.string() + "_fluctuation.csv", fl);
    std::string ex = "q,h,stderr\n";
    for (std::size_t qi = 0; qi < sf.q.size(); ++qi)
        ex += format_number(sf.q[qi]) + "," + num(mf.h[qi]) + "," + num(mf.h_std_error[qi]) + "\n";
    write_file(stem.string() + "_exponents.csv", ex);
    std::string sp = "q,alpha,f_alpha\n";
    for (std::size_t qi = 0; qi < sf.q.size(); ++qi)
        sp += format_number(sf.q[qi]) + "," + num(mf.spectrum.alpha[qi]) + "," + num(mf.spectrum.f[qi]) + "\n";
    write_file(stem.string() + "_spectrum.csv", sp);
}

const std::pair<Family, Estimator> fit_plan[] = {
    {Family::weibull, Estimator::mle},
    {Family::qexp, Estimator::mle},
    {Family::weibull, Estimator::nlse},
    {Family::qexp, Estimator::nlse},
};

std::string fit_stage_name(Family fam, Estimator est) {
    return "fit:" + std::string(family_name(fam)) + ":" + std::string(estimator_name(est));
}

void process_symbol(SymbolWork& w, const PipelineConfig& cfg, const SessionCalendar& calendar, const fs::path& out) {
    StageLog log(w.stages);
    const std::string& sym = w.symbol;
    EventSeries events;

    const bool loaded = log.run(sym, "", "load", true, [&] {
        if (w.seed) {
            StreamSpec spec;
            spec.symbol = sym;
            spec.days = cfg.synthetic.days;
            spec.mean_gap = cfg.synthetic.mean_gap;
            spec.shape = cfg.synthetic.shape;
            spec.hurst = cfg.synthetic.hurst;
            spec.buy_fraction = cfg.synthetic.buy_fraction;
            spec.modulation = cfg.synthetic.modulation;
            spec.simultaneous = cfg.synthetic.simultaneous;
            spec.seed = *w.seed;
            events = gen_event_stream(spec, calendar);
            w.raw_records = w.retained = events.size();
        } else {
            std::ifstream in(cfg.resolve(cfg.inputs.at(sym)), std::ios::binary);
            if (!in) throw Error("cannot open input for '" + sym + "'");
            std::ostringstream ss;
            ss << in.rdbuf();
            const std::string text = ss.str();
            const auto schema = detect_schema(text.substr(0, text.find('\n')), cfg.schema);
            std::istringstream body(text);
            auto parsed = parse_event_stream(body, schema, sym);
            w.raw_records = parsed.raw_records;
            w.malformed = parsed.errors.size();
            auto filtered = filter_to_sessions(parsed.series, calendar);
            w.removed = filtered.removed;
            events = std::move(filtered.series);
            w.retained = events.size();
            if (events.empty()) throw EmptySeriesError("no events of '" + sym + "' fall inside the sessions");
        }
        std::ostringstream ev;
        write_events_csv(ev, events);
        write_file(out / "events" / (sym + ".csv"), ev.str());
    });

    log.run(sym, "", "identities", loaded, [&] {
        std::map<DirectionClass, ClassSummary> by;
        for (auto c : {DirectionClass::all, DirectionClass::buy, DirectionClass::sell})
            by[c] = summarize_class(events, c);
        w.identities = validate_identities(by);
    });

    const auto q_grid = make_q_grid(cfg.q_min, cfg.q_max);
    FitOptions fopt;
    fopt.bins_per_decade = cfg.bins_per_decade;

    for (auto cls : cfg.classes) {
        ClassWork cw;
        cw.cls = cls;
        const auto cname = class_name(cls);
        const std::string tag = sym + "_" + std::string(cname);

        const bool have_durations = log.run(sym, cname, "durations", loaded, [&] {
            cw.durations = compute_durations(events, cls);
            cw.n_days = events.trading_days();
            std::ostringstream ds;
            write_durations_csv(ds, *cw.durations);
            write_file(out / "durations" / (tag + ".csv"), ds.str());
        });

        log.run(sym, cname, "summary", have_durations, [&] { cw.summary = summarize(*cw.durations, cw.n_days); });

        const bool have_rescaled = log.run(sym, cname, "rescale", have_durations, [&] {
            cw.rescaled = rescale(*cw.durations);
            std::vector<double> pos;
            pos.reserve(cw.rescaled->size());
            for (double g : cw.rescaled->values)
                if (g > 0.0) pos.push_back(g);
            write_file(out / "densities" / (tag + ".csv"),
                       density_csv(empirical_density(pos, cfg.bins_per_decade, 1)));
        });

        std::vector<double> positive;
        if (have_rescaled)
            for (double g : cw.rescaled->values)
                if (g > 0.0) positive.push_back(g);
        for (const auto& [fam, est] : fit_plan)
            log.run(sym, cname, fit_stage_name(fam, est), have_rescaled,
                    [&] { cw.fits.push_back(fit(positive, fam, est, fopt)); });

        std::optional<DurationSeries> adjusted;
        const bool have_profile = log.run(sym, cname, "intraday", have_durations, [&] {
            auto profile = intraday_mean_profile(*cw.durations, cw.n_days, calendar.minutes_per_day());
            profile.fit = fit_profile_polynomial(profile, cfg.profile_degree);
            std::string pc = "minute,mean_duration,n_days,poly_fit\n";
            for (int m = 1; m <= profile.minutes(); ++m) {
                const auto i = static_cast<std::size_t>(m - 1);
                pc += std::to_string(m) + "," + (profile.defined[i] ? num(profile.mean[i]) : std::string()) + "," +
                      std::to_string(profile.day_counts[i]) + "," + num((*profile.fit)(m)) + "\n";
            }
            write_file(out / "intraday" / (tag + "_profile.csv"), pc);
            adjusted = adjust_durations(*cw.durations, profile);
            std::ostringstream as;
            write_durations_csv(as, *adjusted);
            write_file(out / "intraday" / (tag + "_adjusted.csv"), as.str());
        });

        log.run(sym, cname, "dfa", have_durations,
                [&] { cw.dfa = dfa(cw.durations->durations, {}, cfg.dfa_order); });
        log.run(sym, cname, "mfdfa", have_durations, [&] {
            cw.mf = mfdfa(cw.durations->durations, q_grid, {}, cfg.dfa_order);
            write_fractal(out / "fractal" / (tag + "_original"), *cw.mf);
        });
        log.run(sym, cname, "dfa_adjusted", have_profile,
                [&] { cw.dfa_adjusted = dfa(adjusted->durations, {}, cfg.dfa_order); });
        log.run(sym, cname, "mfdfa_adjusted", have_profile, [&] {
            cw.mf_adjusted = mfdfa(adjusted->durations, q_grid, {}, cfg.dfa_order);
            write_fractal(out / "fractal" / (tag + "_adjusted"), *cw.mf_adjusted);
        });

        w.classes.push_back(std::move(cw));
    }
}

std::string fit_row(const std::string& lead, const FitResult& f, const std::string& settings) {
    std::string alpha, beta, mu, q;
    if (f.family == Family::weibull) {
        alpha = format_number(f.weibull().scale);
        beta = format_number(f.weibull().shape);
    } else {
        mu = format_number(f.qexp().scale);
        q = format_number(f.qexp().q);
    }
    return lead + "," + std::string(family_name(f.family)) + "," + std::string(estimator_name(f.estimator)) + "," +
           alpha + "," + beta + "," + mu + "," + q + "," + format_number(f.chi) + "," +
           std::to_string(f.sample_size) + "," + std::string(version_string) + "," + settings + "\n";
}

}  // namespace

RunReport run_pipeline(const PipelineConfig& cfg, unsigned workers) {
    cfg.validate();
    const auto calendar = cfg.calendar == "default-szse2003" ? SessionCalendar::szse2003()
                                                              : SessionCalendar::load(cfg.resolve(cfg.calendar).string());
    if (workers == 0) workers = workers_from_env();

    std::vector<SymbolWork> work;
    for (const auto& [sym, path] : cfg.inputs) {
        SymbolWork w;
        w.symbol = sym;
        work.push_back(std::move(w));
    }
    for (std::size_t i = 0; i < cfg.synthetic.symbols; ++i) {
        SymbolWork w;
        w.symbol = synthetic_symbol(i);
        w.seed = synthetic_seed(cfg.seed, i);
        work.push_back(std::move(w));
    }
    std::sort(work.begin(), work.end(), [](const auto& a, const auto& b) { return a.symbol < b.symbol; });

    const fs::path out = cfg.resolve(cfg.output_dir);
    fs::create_directories(out);

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < work.size(); i = next++) process_symbol(work[i], cfg, calendar, out);
    };
    const unsigned n_threads = std::min<unsigned>(workers, static_cast<unsigned>(work.size()));
    if (n_threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < n_threads; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    RunReport report;
    report.output_dir = out;
    for (const auto& w : work) report.stages.insert(report.stages.end(), w.stages.begin(), w.stages.end());

    const std::string bpd_settings = "bpd=" + std::to_string(cfg.bins_per_decade) + ";units=sigma";
    const std::string fractal_settings = "order=" + std::to_string(cfg.dfa_order) + ";q=" + format_number(cfg.q_min) +
                                         ".." + format_number(cfg.q_max) + ";smin=20;smax=N/4";

    std::string t1 = "symbol,class,N,N0,mean_s,std_s,events_per_day,version,settings\n";
    std::string t2 = "symbol,class,family,estimator,alpha,beta,mu,q,chi,n,version,settings\n";
    std::string t4 =
        "symbol,class,events_per_day,H,H_stderr,H_adjusted,H_adjusted_stderr,delta_alpha,delta_alpha_adjusted,"
        "version,settings\n";
    std::string ids = "symbol,identity,status,detail\n";
    std::string ingest = "symbol,source,seed,raw_records,malformed,removed,retained\n";
    for (const auto& w : work) {
        ingest += w.symbol + "," + (w.seed ? "synthetic" : "file") + "," + (w.seed ? std::to_string(*w.seed) : "") +
                  "," + std::to_string(w.raw_records) + "," + std::to_string(w.malformed) + "," +
                  std::to_string(w.removed) + "," + std::to_string(w.retained) + "\n";
        if (w.identities)
            for (const auto& c : w.identities->checks)
                ids += w.symbol + "," + c.name + "," + std::string(identity_status_name(c.status)) + "," + c.detail +
                       "\n";
        for (const auto& c : w.classes) {
            const std::string lead = w.symbol + "," + std::string(class_name(c.cls));
            if (c.summary)
                t1 += lead + "," + std::to_string(c.summary->n) + "," + std::to_string(c.summary->n0) + "," +
                      num(c.summary->mean) + "," + num(c.summary->stddev) + "," + num(c.summary->events_per_day) + "," +
                      std::string(version_string) + ",calendar=" + cfg.calendar + "\n";
            for (const auto& f : c.fits) t2 += fit_row(lead, f, bpd_settings);
            if (c.dfa || c.mf) {
                const double nt = c.summary ? c.summary->events_per_day : std::numeric_limits<double>::quiet_NaN();
                auto opt = [](const auto& o, auto get) {
                    return o ? num(get(*o)) : std::string();
                };
                t4 += lead + "," + num(nt) + "," + opt(c.dfa, [](const DfaResult& d) { return d.hurst; }) + "," +
                      opt(c.dfa, [](const DfaResult& d) { return d.std_error; }) + "," +
                      opt(c.dfa_adjusted, [](const DfaResult& d) { return d.hurst; }) + "," +
                      opt(c.dfa_adjusted, [](const DfaResult& d) { return d.std_error; }) + "," +
                      opt(c.mf, [](const MultifractalResult& m) { return m.spectrum.width; }) + "," +
                      opt(c.mf_adjusted, [](const MultifractalResult& m) { return m.spectrum.width; }) + "," +
                      std::string(version_string) + "," + fractal_settings + "\n";
            }
        }
    }

    // Ensemble stages, one class at a time, over symbols in sorted order.
    StageLog log(report.stages);
    const std::string ens(ensemble_symbol);
    std::string t3 = "class,family,estimator,alpha,beta,mu,q,chi,n,version,settings\n";
    std::string collapse = "class,members,metric,version,settings\n";
    FitOptions fopt;
    fopt.bins_per_decade = cfg.bins_per_decade;
    for (auto cls : cfg.classes) {
        const auto cname = class_name(cls);
        std::vector<RescaledSeries> members;
        for (const auto& w : work)
            for (const auto& c : w.classes)
                if (c.cls == cls && c.rescaled) members.push_back(*c.rescaled);
        const bool have = !members.empty();
        if (!have) log.note(ens, cname, "ensemble", "skipped", "no member series");
        std::optional<EnsembleSeries> pooled;
        if (have) pooled = pool_ensemble(members);
        std::vector<double> positive;
        if (pooled)
            for (double g : pooled->values)
                if (g > 0.0) positive.push_back(g);
        for (const auto& [fam, est] : fit_plan)
            log.run(ens, cname, fit_stage_name(fam, est), have, [&] {
                t3 += fit_row(std::string(cname), fit(positive, fam, est, fopt), bpd_settings);
            });
        if (members.size() < 2) {
            log.note(ens, cname, "collapse", "not_applicable", "needs at least two members");
        } else {
            log.run(ens, cname, "collapse", true, [&] {
                std::vector<DensityEstimate> dens;
                for (const auto& m : members) {
                    std::vector<double> pos;
                    for (double g : m.values)
                        if (g > 0.0) pos.push_back(g);
                    dens.push_back(empirical_density(pos, cfg.bins_per_decade, 1));
                }
                collapse += std::string(cname) + "," + std::to_string(members.size()) + "," +
                            format_number(collapse_metric(dens)) + "," + std::string(version_string) + "," +
                            bpd_settings + ";min_count=10\n";
            });
        }
        log.run(ens, cname, "conditional", have, [&] {
            const auto part = partition_octiles(*pooled);
            const auto curve = conditional_mean_curve(*pooled, part);
            std::string cc = "i,g0_mean,cond_mean,stderr\n";
            for (std::size_t i = 0; i < curve.points.size(); ++i) {
                const auto& p = curve.points[i];
                cc += std::to_string(i + 1) + "," + num(p.g0_mean) + "," + num(p.cond_mean) + "," + num(p.std_error) +
                      "\n";
            }
            write_file(out / "conditional" / (std::string(cname) + "_curve.csv"), cc);
            for (int g = 1; g <= octile_count; ++g) {
                std::string dc;
                try {
                    dc = density_csv(conditional_density(*pooled, part, g, cfg.bins_per_decade));
                } catch (const Error&) {
                    dc = "g,density,count\n";
                }
                write_file(out / "conditional" / (std::string(cname) + "_Q" + std::to_string(g) + ".csv"), dc);
            }
        });
    }

    write_file(out / "table1_summary.csv", t1);
    write_file(out / "table2_fits.csv", t2);
    write_file(out / "table3_ensemble_fits.csv", t3);
    write_file(out / "table4_fractal.csv", t4);
    write_file(out / "collapse.csv", collapse);
    write_file(out / "identities.csv", ids);
    write_file(out / "ingest.csv", ingest);

    bool any_failed = false;
    for (const auto& s : report.stages) any_failed = any_failed || s.status == "failed" || s.status == "skipped";

    using ojson = nlohmann::ordered_json;
    ojson m;
    m["tool"] = "durstat";
    m["version"] = std::string(version_string);
    m["config_hash"] = cfg.hash();
    m["seed"] = cfg.seed;
    ojson seeds = ojson::object();
    for (const auto& w : work)
        if (w.seed) seeds[w.symbol] = *w.seed;
    m["synthetic_seeds"] = seeds;
    ojson syms = ojson::array();
    for (const auto& w : work) syms.push_back(w.symbol);
    m["symbols"] = syms;
    ojson analyses = ojson::array();
    for (const auto& w : work) {
        for (auto cls : cfg.classes) {
            const auto cname = std::string(class_name(cls));
            bool ok = true;
            for (const auto& s : w.stages)
                if ((s.cls == cname || s.cls.empty()) && s.status != "ok") ok = false;
            analyses.push_back({{"symbol", w.symbol}, {"class", cname}, {"status", ok ? "completed" : "incomplete"}});
            ++report.class_analyses_total;
            if (ok) ++report.class_analyses_completed;
        }
    }
    m["class_analyses"] = analyses;
    m["class_analyses_completed"] = report.class_analyses_completed;
    ojson stages = ojson::array();
    for (const auto& s : report.stages)
        stages.push_back({{"symbol", s.symbol}, {"class", s.cls}, {"stage", s.stage}, {"status", s.status},
                          {"message", s.message}});
    m["stages"] = stages;
    m["status"] = any_failed ? "partial" : "complete";
    m["outputs"] = {"table1_summary.csv", "table2_fits.csv", "table3_ensemble_fits.csv", "table4_fractal.csv",
                    "collapse.csv", "identities.csv", "ingest.csv"};
    write_file(out / "manifest.json", m.dump(2) + "\n");

    report.exit_code = any_failed ? 3 : 0;
    return report;
}

}  // namespace durstat
