#include "durstat/conditional.hpp"
#include "durstat/density.hpp"
#include "durstat/durations.hpp"
#include "durstat/error.hpp"
#include "durstat/events.hpp"
#include "durstat/fit.hpp"
#include "durstat/fractal.hpp"
#include "durstat/intraday.hpp"
#include "durstat/pipeline.hpp"
#include "durstat/synthetic.hpp"
#include "durstat/text_io.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

using namespace durstat;
namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

std::ofstream open_out(const std::string& path) {
    const fs::path p(path);
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) throw InvalidArgument("cannot write " + path);
    return out;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidArgument("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

DurationSeries load_durations(const std::string& path, const std::string& calendar) {
    return read_durations_file(path, SessionCalendar::load(calendar));
}

std::vector<double> positive_values(const std::vector<double>& v) {
    std::vector<double> out;
    for (double x : v)
        if (x > 0.0) out.push_back(x);
    return out;
}

ojson fit_json(const FitResult& f) {
    ojson j;
    j["family"] = std::string(family_name(f.family));
    j["estimator"] = std::string(estimator_name(f.estimator));
    if (f.family == Family::weibull) {
        j["alpha"] = f.weibull().scale;
        j["beta"] = f.weibull().shape;
    } else {
        j["mu"] = f.qexp().scale;
        j["q"] = f.qexp().q;
    }
    j["chi"] = f.chi;
    j["n"] = f.sample_size;
    j["iterations"] = f.iterations;
    return j;
}

void write_density(const fs::path& path, const DensityEstimate& d) {
    auto out = open_out(path.string());
    out << "g,density,count\n";
    for (std::size_t i = 0; i < d.bins(); ++i)
        if (!d.empty_bin(i))
            out << format_number(d.centers[i]) << ',' << format_number(d.density[i]) << ',' << d.counts[i] << '\n';
}

std::vector<std::vector<std::string>> read_csv_rows(const fs::path& path) {
    std::vector<std::vector<std::string>> rows;
    std::istringstream in(slurp(path));
    std::string line;
    while (std::getline(in, line))
        if (!line.empty()) rows.push_back(split_fields(line));
    return rows;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Inter-event duration statistics: fitting, conditioning, intraday and fractal analysis"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(version_string));

    // ingest
    auto* ingest = app.add_subcommand("ingest", "Parse, session-filter and sort an event file");
    std::string in_path, schema_text, calendar_spec = "default-szse2003", out_path, report_path, symbol;
    ingest->add_option("--input", in_path, "Delimited event file")->required();
    ingest->add_option("--schema", schema_text, "Column mapping, e.g. date=Date,time=Time,direction=Side (default: detected from the header)");
    ingest->add_option("--calendar", calendar_spec, "default-szse2003 or a JSON calendar")->capture_default_str();
    ingest->add_option("--out", out_path, "Canonical event CSV")->required();
    ingest->add_option("--report", report_path, "Write the JSON report here instead of stdout");
    ingest->add_option("--symbol", symbol, "Symbol name (default: input file stem)");

    // durations
    auto* durations = app.add_subcommand("durations", "Inter-event durations of one direction class");
    std::string events_path, class_text = "all";
    durations->add_option("--events", events_path, "Canonical event CSV")->required();
    durations->add_option("--class", class_text, "all, buy or sell")->capture_default_str();
    durations->add_option("--calendar", calendar_spec, "Session calendar")->capture_default_str();
    durations->add_option("--out", out_path, "Durations CSV")->required();

    // summary
    auto* summary = app.add_subcommand("summary", "Bookkeeping statistics of a durations file");
    std::string durations_path;
    bool as_json = false;
    summary->add_option("--durations", durations_path, "Durations CSV")->required();
    summary->add_option("--calendar", calendar_spec, "Session calendar")->capture_default_str();
    summary->add_flag("--json", as_json, "Emit JSON");

    // fit
    auto* fitc = app.add_subcommand("fit", "Fit a Weibull or q-exponential density");
    std::string family_text = "weibull", estimator_text = "mle", column = "duration_s";
    int bpd = default_bins_per_decade;
    bool do_rescale = false;
    fitc->add_option("--durations", durations_path, "Durations CSV or one value per line")->required();
    fitc->add_option("--family", family_text, "weibull or qexp")->capture_default_str();
    fitc->add_option("--estimator", estimator_text, "mle or nlse")->capture_default_str();
    fitc->add_option("--bins-per-decade", bpd, "Log bins per decade")->capture_default_str();
    fitc->add_option("--column", column, "CSV column holding the values")->capture_default_str();
    fitc->add_flag("--rescale", do_rescale, "Divide by the sample standard deviation first");
    fitc->add_flag("--json", as_json, "Emit JSON");

    // collapse
    auto* collapse = app.add_subcommand("collapse", "Spread of rescaled densities across series");
    std::vector<std::string> inputs;
    collapse->add_option("--inputs", inputs, "Durations files")->required();
    collapse->add_option("--bins-per-decade", bpd, "Log bins per decade")->capture_default_str();
    collapse->add_option("--column", column, "CSV column holding the values")->capture_default_str();
    collapse->add_flag("--json", as_json, "Emit JSON");

    // conditional
    auto* conditional = app.add_subcommand("conditional", "Octile-conditioned successor statistics");
    std::string out_densities, out_curve;
    conditional->add_option("--inputs", inputs, "Durations files")->required();
    conditional->add_option("--out-densities", out_densities, "Directory for conditional densities")->required();
    conditional->add_option("--out-curve", out_curve, "Conditional mean curve CSV")->required();
    conditional->add_option("--calendar", calendar_spec, "Session calendar")->capture_default_str();
    conditional->add_option("--bins-per-decade", bpd, "Log bins per decade")->capture_default_str();

    // intraday
    auto* intraday = app.add_subcommand("intraday", "Minute-of-day profile and adjusted durations");
    int degree = 6;
    std::string out_profile, out_adjusted, averaging = "days-with-data";
    intraday->add_option("--durations", durations_path, "Durations CSV")->required();
    intraday->add_option("--degree", degree, "Polynomial degree")->capture_default_str();
    intraday->add_option("--out-profile", out_profile, "Profile CSV")->required();
    intraday->add_option("--out-adjusted", out_adjusted, "Adjusted durations CSV")->required();
    intraday->add_option("--calendar", calendar_spec, "Session calendar")->capture_default_str();
    intraday->add_option("--averaging", averaging, "days-with-data or all-days")
        ->check(CLI::IsMember({"days-with-data", "all-days"}))
        ->capture_default_str();

    // dfa
    auto* dfac = app.add_subcommand("dfa", "Detrended fluctuation analysis");
    std::string series_path, smax_text = "auto", out_fluct;
    int order = 1;
    std::size_t smin = 20;
    dfac->add_option("--series", series_path, "Series file")->required();
    dfac->add_option("--order", order, "Detrending polynomial order")->capture_default_str();
    dfac->add_option("--smin", smin, "Smallest window")->capture_default_str();
    dfac->add_option("--smax", smax_text, "Largest window or auto (N/4)")->capture_default_str();
    dfac->add_option("--column", column, "CSV column holding the values")->capture_default_str();
    dfac->add_option("--out-fluctuation", out_fluct, "Fluctuation CSV (s, q, F)");
    dfac->add_flag("--json", as_json, "Emit JSON");

    // mfdfa
    auto* mfc = app.add_subcommand("mfdfa", "Multifractal DFA");
    double qmin = -6.0, qmax = 6.0;
    std::string out_prefix;
    mfc->add_option("--series", series_path, "Series file")->required();
    mfc->add_option("--qmin", qmin, "Smallest q")->capture_default_str();
    mfc->add_option("--qmax", qmax, "Largest q")->capture_default_str();
    mfc->add_option("--order", order, "Detrending polynomial order")->capture_default_str();
    mfc->add_option("--smin", smin, "Smallest window")->capture_default_str();
    mfc->add_option("--smax", smax_text, "Largest window or auto (N/4)")->capture_default_str();
    mfc->add_option("--column", column, "CSV column holding the values")->capture_default_str();
    mfc->add_option("--out-prefix", out_prefix, "Write <prefix>_fluctuation/_exponents/_spectrum.csv");
    mfc->add_flag("--json", as_json, "Emit JSON");

    // synth
    auto* synth = app.add_subcommand("synth", "Seeded synthetic series or event streams");
    std::string kind, params_text = "{}";
    std::size_t length = 0;
    std::uint64_t seed = 1;
    synth->add_option("--kind", kind,
                      "poisson, weibull_iid, qexp_iid, fgn, longmem_weibull, binomial_cascade or events")
        ->required();
    synth->add_option("--params", params_text, "JSON object of generator parameters")->capture_default_str();
    synth->add_option("--n", length, "Series length (ignored for events)");
    synth->add_option("--seed", seed, "Seed")->capture_default_str();
    synth->add_option("--out", out_path, "Output file")->required();
    synth->add_option("--calendar", calendar_spec, "Session calendar for events")->capture_default_str();

    // run
    auto* run = app.add_subcommand("run", "Run the full pipeline from a config file");
    std::string config_path;
    unsigned workers = 0;
    run->add_option("--config", config_path, "key = value config file")->required();
    run->add_option("--workers", workers, "Worker threads (default: environment, then cores)");

    // report
    auto* report = app.add_subcommand("report", "Summarize a pipeline output directory");
    std::string dir, format = "csv";
    report->add_option("--dir", dir, "Output directory")->required();
    report->add_option("--format", format, "csv or json")->check(CLI::IsMember({"csv", "json"}))->capture_default_str();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*ingest) {
            const auto cal = SessionCalendar::load(calendar_spec);
            std::ifstream in(in_path, std::ios::binary);
            if (!in) throw InvalidArgument("cannot open " + in_path);
            std::string header;
            std::getline(in, header);
            in.clear();
            in.seekg(0);
            const auto schema = schema_text.empty() ? EventSchema::detect(header) : EventSchema::parse(schema_text);
            if (symbol.empty()) symbol = fs::path(in_path).stem().string();
            auto parsed = parse_event_stream(in, schema, symbol);
            auto filtered = filter_to_sessions(parsed.series, cal);
            {
                auto out = open_out(out_path);
                write_events_csv(out, filtered.series);
            }
            ojson rep;
            rep["symbol"] = symbol;
            rep["records"] = parsed.raw_records;
            rep["retained"] = filtered.series.size();
            rep["removed"] = filtered.removed;
            rep["malformed"] = parsed.errors.size();
            ojson errs = ojson::array();
            for (const auto& e : parsed.errors) errs.push_back({{"line", e.line}, {"message", e.message}});
            rep["errors"] = errs;
            if (report_path.empty()) {
                std::cout << rep.dump(2) << '\n';
            } else {
                auto out = open_out(report_path);
                out << rep.dump(2) << '\n';
            }
        } else if (*durations) {
            const auto cal = SessionCalendar::load(calendar_spec);
            std::ifstream in(events_path, std::ios::binary);
            if (!in) throw InvalidArgument("cannot open " + events_path);
            auto parsed = parse_event_stream(in, EventSchema::canonical(), fs::path(events_path).stem().string());
            if (!parsed.errors.empty())
                throw InvalidArgument("line " + std::to_string(parsed.errors.front().line) + ": " +
                                      parsed.errors.front().message);
            const auto filtered = filter_to_sessions(parsed.series, cal);
            const auto ds = compute_durations(filtered.series, parse_class(class_text));
            auto out = open_out(out_path);
            write_durations_csv(out, ds);
        } else if (*summary) {
            const auto ds = load_durations(durations_path, calendar_spec);
            const auto days = ds.distinct_days();
            const auto s = summarize(ds, days);
            if (as_json) {
                ojson j{{"symbol", ds.symbol}, {"N", s.n},         {"N0", s.n0},
                        {"mean_s", s.mean},    {"std_s", s.stddev}, {"events_per_day", s.events_per_day},
                        {"days", days}};
                std::cout << j.dump(2) << '\n';
            } else {
                std::cout << "symbol,N,N0,mean_s,std_s,events_per_day\n"
                          << ds.symbol << ',' << s.n << ',' << s.n0 << ',' << format_number(s.mean) << ','
                          << format_number(s.stddev) << ',' << format_number(s.events_per_day) << '\n';
            }
        } else if (*fitc) {
            auto values = read_series_file(durations_path, column);
            if (do_rescale) values = rescale(make_duration_series(values)).values;
            FitOptions opts;
            opts.bins_per_decade = bpd;
            const auto f = fit(positive_values(values), parse_family(family_text), parse_estimator(estimator_text), opts);
            const auto j = fit_json(f);
            if (as_json) {
                std::cout << j.dump(2) << '\n';
            } else {
                bool first = true;
                for (auto it = j.begin(); it != j.end(); ++it) std::cout << (first ? "" : ",") << it.key(), first = false;
                std::cout << '\n';
                first = true;
                for (const auto& v : j)
                    std::cout << (first ? "" : ",") << (v.is_string() ? v.get<std::string>() : v.dump()), first = false;
                std::cout << '\n';
            }
        } else if (*collapse) {
            std::vector<DensityEstimate> dens;
            for (const auto& p : inputs) {
                const auto g = rescale(make_duration_series(read_series_file(p, column))).values;
                dens.push_back(empirical_density(positive_values(g), bpd, 1));
            }
            const double metric = collapse_metric(dens);
            if (as_json)
                std::cout << ojson{{"members", inputs.size()}, {"bins_per_decade", bpd}, {"metric", metric}}.dump(2)
                          << '\n';
            else
                std::cout << format_number(metric) << '\n';
        } else if (*conditional) {
            const auto cal = SessionCalendar::load(calendar_spec);
            std::vector<RescaledSeries> members;
            for (const auto& p : inputs) members.push_back(rescale(read_durations_file(p, cal)));
            const auto ens = pool_ensemble(members);
            const auto part = partition_octiles(ens);
            for (const auto& w : part.warnings) std::cerr << "warning: " << w << '\n';
            const auto curve = conditional_mean_curve(ens, part);
            {
                auto out = open_out(out_curve);
                out << "i,g0_mean,cond_mean,stderr\n";
                for (std::size_t i = 0; i < curve.points.size(); ++i) {
                    const auto& p = curve.points[i];
                    out << i + 1 << ',' << format_number(p.g0_mean) << ',' << format_number(p.cond_mean) << ','
                        << format_number(p.std_error) << '\n';
                }
            }
            fs::create_directories(out_densities);
            for (int g = 1; g <= octile_count; ++g)
                write_density(fs::path(out_densities) / ("Q" + std::to_string(g) + ".csv"),
                              conditional_density(ens, part, g, bpd));
        } else if (*intraday) {
            const auto cal = SessionCalendar::load(calendar_spec);
            const auto ds = read_durations_file(durations_path, cal);
            auto profile = intraday_mean_profile(
                ds, ds.distinct_days(), cal.minutes_per_day(),
                averaging == "all-days" ? DayAveraging::all_days : DayAveraging::days_with_data);
            profile.fit = fit_profile_polynomial(profile, degree);
            {
                auto out = open_out(out_profile);
                out << "minute,mean_duration,n_days,poly_fit\n";
                for (int m = 1; m <= profile.minutes(); ++m) {
                    out << m << ',';
                    if (profile.is_defined(m)) out << format_number(profile.at(m));
                    out << ',' << profile.day_counts[static_cast<std::size_t>(m - 1)] << ','
                        << format_number((*profile.fit)(m)) << '\n';
                }
            }
            auto out = open_out(out_adjusted);
            write_durations_csv(out, adjust_durations(ds, profile));
        } else if (*dfac || *mfc) {
            const auto x = read_series_file(series_path, column);
            const std::size_t smax = smax_text == "auto" ? 0 : static_cast<std::size_t>(std::stoul(smax_text));
            const auto scales = make_scale_grid(x.size(), smin, smax);
            if (*dfac) {
                const auto r = dfa(x, scales, order);
                if (!out_fluct.empty()) {
                    auto out = open_out(out_fluct);
                    out << "s,q,F\n";
                    for (std::size_t i = 0; i < r.scales.size(); ++i)
                        out << r.scales[i] << ",2," << format_number(r.fluctuation[i]) << '\n';
                }
                if (as_json)
                    std::cout << ojson{{"H", r.hurst}, {"stderr", r.std_error}, {"n", x.size()}, {"order", order}}.dump(2)
                              << '\n';
                else
                    std::cout << format_number(r.hurst) << ',' << format_number(r.std_error) << '\n';
            } else {
                const auto r = mfdfa(x, make_q_grid(qmin, qmax), scales, order);
                if (!out_prefix.empty()) {
                    const auto& sf = r.surface;
                    auto fl = open_out(out_prefix + "_fluctuation.csv");
                    fl << "s,q,F\n";
                    for (std::size_t si = 0; si < sf.scales.size(); ++si)
                        for (std::size_t qi = 0; qi < sf.q.size(); ++qi)
                            fl << sf.scales[si] << ',' << format_number(sf.q[qi]) << ','
                               << format_number(sf.at(qi, si)) << '\n';
                    auto ex = open_out(out_prefix + "_exponents.csv");
                    ex << "q,h,stderr\n";
                    for (std::size_t qi = 0; qi < sf.q.size(); ++qi)
                        ex << format_number(sf.q[qi]) << ',' << format_number(r.h[qi]) << ','
                           << format_number(r.h_std_error[qi]) << '\n';
                    auto sp = open_out(out_prefix + "_spectrum.csv");
                    sp << "q,alpha,f_alpha\n";
                    for (std::size_t qi = 0; qi < sf.q.size(); ++qi)
                        sp << format_number(sf.q[qi]) << ',' << format_number(r.spectrum.alpha[qi]) << ','
                           << format_number(r.spectrum.f[qi]) << '\n';
                }
                if (!r.spectrum.monotone) std::cerr << "warning: alpha(q) is not monotone\n";
                ojson j{{"H", r.hurst},
                        {"stderr", r.hurst_std_error},
                        {"delta_alpha", r.spectrum.width},
                        {"monotone", r.spectrum.monotone}};
                if (as_json)
                    std::cout << j.dump(2) << '\n';
                else
                    std::cout << format_number(r.hurst) << ',' << format_number(r.hurst_std_error) << ','
                              << format_number(r.spectrum.width) << '\n';
            }
        } else if (*synth) {
            const auto params = nlohmann::json::parse(params_text);
            if (!params.is_object()) throw InvalidArgument("--params must be a JSON object");
            if (kind == "events") {
                StreamSpec spec;
                spec.seed = seed;
                for (auto it = params.begin(); it != params.end(); ++it) {
                    const auto& k = it.key();
                    if (k == "symbol") spec.symbol = it->get<std::string>();
                    else if (k == "days") spec.days = it->get<std::size_t>();
                    else if (k == "mean_gap") spec.mean_gap = it->get<double>();
                    else if (k == "shape") spec.shape = it->get<double>();
                    else if (k == "hurst") spec.hurst = it->get<double>();
                    else if (k == "buy_fraction") spec.buy_fraction = it->get<double>();
                    else if (k == "modulation") spec.modulation = it->get<double>();
                    else if (k == "simultaneous") spec.simultaneous = it->get<double>();
                    else throw InvalidArgument("unknown event-stream parameter '" + k + "'");
                }
                auto out = open_out(out_path);
                write_events_csv(out, gen_event_stream(spec, SessionCalendar::load(calendar_spec)));
            } else {
                GeneratorSpec spec;
                spec.kind = parse_generator(kind);
                spec.length = length;
                spec.seed = seed;
                for (auto it = params.begin(); it != params.end(); ++it) {
                    if (it->is_boolean()) spec.params[it.key()] = it->get<bool>() ? 1.0 : 0.0;
                    else spec.params[it.key()] = it->get<double>();
                }
                auto out = open_out(out_path);
                write_series(out, generate(spec));
            }
        } else if (*run) {
            const auto cfg = PipelineConfig::load(config_path);
            const auto rep = run_pipeline(cfg, workers);
            for (const auto& s : rep.stages)
                if (s.status == "failed")
                    std::cerr << "failed: " << s.symbol << ' ' << s.cls << ' ' << s.stage << ": " << s.message << '\n';
            std::cout << rep.class_analyses_completed << '/' << rep.class_analyses_total
                      << " class analyses completed; outputs in " << rep.output_dir.string() << '\n';
            return rep.exit_code;
        } else if (*report) {
            const fs::path root(dir);
            const auto manifest = nlohmann::ordered_json::parse(slurp(root / "manifest.json"));
            if (format == "json") {
                ojson j;
                j["status"] = manifest.at("status");
                j["config_hash"] = manifest.at("config_hash");
                j["class_analyses"] = manifest.at("class_analyses");
                for (const auto& name : manifest.at("outputs")) {
                    const auto rows = read_csv_rows(root / name.get<std::string>());
                    ojson table = ojson::array();
                    for (std::size_t r = 1; r < rows.size(); ++r) {
                        ojson row;
                        for (std::size_t c = 0; c < rows[0].size(); ++c)
                            row[rows[0][c]] = c < rows[r].size() ? rows[r][c] : std::string();
                        table.push_back(row);
                    }
                    j["tables"][fs::path(name.get<std::string>()).stem().string()] = table;
                }
                std::cout << j.dump(2) << '\n';
            } else {
                std::cout << "symbol,class,stage,status,message\n";
                for (const auto& s : manifest.at("stages"))
                    std::cout << s.at("symbol").get<std::string>() << ',' << s.at("class").get<std::string>() << ','
                              << s.at("stage").get<std::string>() << ',' << s.at("status").get<std::string>() << ','
                              << s.at("message").get<std::string>() << '\n';
            }
            return manifest.at("status") == "complete" ? 0 : 3;
        }
    } catch (const ValidationError& e) {
        std::cerr << "validation error: " << e.what() << '\n';
        return 2;
    } catch (const InvalidArgument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
