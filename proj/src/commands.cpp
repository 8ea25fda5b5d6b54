#include "qmix/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

#include "qmix/diagnostics.hpp"

namespace qmix {

using nlohmann::json;
namespace fs = std::filesystem;

std::string format_number(double x)
{
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

namespace {

std::string short_number(double x)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.10g", x);
    return buf;
}

}  // namespace

std::string mode_label(const Vec& k)
{
    std::string s;
    for (int a = 0; a < k.dim; ++a) {
        if (a) s += "x";
        s += short_number(k[a]);
    }
    return s;
}

namespace {

class Csv {
public:
    explicit Csv(const std::vector<std::string>& header)
    {
        for (std::size_t i = 0; i < header.size(); ++i) os_ << (i ? "," : "") << header[i];
        os_ << '\n';
    }
    void row(const std::vector<double>& xs)
    {
        for (std::size_t i = 0; i < xs.size(); ++i) os_ << (i ? "," : "") << format_number(xs[i]);
        os_ << '\n';
    }
    void comment(const std::string& s) { os_ << "# " << s << '\n'; }
    void write(const fs::path& path, std::uint64_t hash)
    {
        os_ << "# meta: config_hash=" << hash_hex(hash) << '\n';
        write_file(path, os_.str());
    }
    static void write_file(const fs::path& path, const std::string& text)
    {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw Error("cannot write " + path.string());
        out << text;
        if (!out) throw Error("write failed for " + path.string());
    }

private:
    std::ostringstream os_;
};

fs::path output_dir(const RunConfig& cfg, const CommandOptions& opt)
{
    fs::path p = opt.output_dir.empty() ? fs::path(cfg.output_dir) : fs::path(opt.output_dir);
    fs::create_directories(p);
    return p;
}

json number(double x)
{
    if (!std::isfinite(x)) return nullptr;
    return x;
}

json complex_json(cplx z) { return json::array({number(z.real()), number(z.imag())}); }

void write_json(const fs::path& path, json j, std::uint64_t hash)
{
    j["config_hash"] = hash_hex(hash);
    Csv::write_file(path, j.dump(2) + "\n");
}

const InitialWigner& need_initial(const RunConfig& cfg)
{
    if (!cfg.initial) throw ConfigError("config.initial: missing");
    return *cfg.initial;
}

const SimConfig& need_simulation(const RunConfig& cfg)
{
    if (!cfg.simulation) throw ConfigError("config.simulation: missing");
    return *cfg.simulation;
}

double max_abs(const std::vector<cplx>& v)
{
    double m = 0.0;
    for (const cplx& z : v) m = std::max(m, std::abs(z));
    return m;
}

std::string fit_text(const DensityTrace& tr)
{
    try {
        return format_number(decay_fit(tr, DecayWeight::kt_bracket).exponent);
    } catch (const InsufficientDataError&) {
        return "nan";
    }
}

// Least-squares slope of log y against log x over positive pairs.
double log_slope(const std::vector<double>& x, const std::vector<double>& y)
{
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < x.size(); ++i)
        if (x[i] > 0.0 && y[i] > 0.0) {
            lx.push_back(std::log(x[i]));
            ly.push_back(std::log(y[i]));
        }
    if (lx.size() < 2) return std::nan("");
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        mx += lx[i];
        my += ly[i];
    }
    mx /= lx.size();
    my /= ly.size();
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
    }
    return sxx > 0 ? sxy / sxx : std::nan("");
}

}  // namespace

int cmd_penrose(const RunConfig& cfg, const CommandOptions& opt, std::ostream& log)
{
    const PenroseSettings& ps = cfg.penrose;
    PenroseReport rep = penrose_margin(cfg.kernel, cfg.profile, cfg.hbar_set, ps.K, ps.Lambda, ps.resolution);
    fs::path dir = output_dir(cfg, opt);

    json j;
    j["kappa"] = number(rep.kappa);
    j["argmin"] = {{"lambda", complex_json(rep.argmin.lambda)}, {"k", rep.argmin.k}, {"hbar", rep.argmin.hbar}};
    j["stable"] = rep.stable();
    j["verdict"] = rep.stable() ? "stable" : "unstable";
    j["tail_certificate"] = number(rep.tail_certificate);
    j["K"] = rep.K;
    j["Lambda"] = rep.Lambda;
    j["dk"] = rep.dk;
    j["dtau"] = rep.dtau;
    j["points_scanned"] = rep.points_scanned;
    j["resolution"] = {{"n_k", rep.resolution.n_k},
                       {"n_tau", rep.resolution.n_tau},
                       {"n_interior_re", rep.resolution.n_interior_re},
                       {"n_interior_im", rep.resolution.n_interior_im},
                       {"n_shell", rep.resolution.n_shell}};
    json windings = json::array();
    std::vector<double> curve_k = ps.nyquist_k;
    bool pick = curve_k.empty();
    if (pick) curve_k.push_back(rep.argmin.k);
    json roots = json::array();
    for (const auto& w : rep.winding_numbers) {
        windings.push_back({{"k", w.k}, {"hbar", w.hbar}, {"winding", w.winding}, {"tau_extent", w.tau_extent}});
        if (w.winding == 0) continue;
        if (pick && std::find(curve_k.begin(), curve_k.end(), w.k) == curve_k.end()) curve_k.push_back(w.k);
        if (roots.size() < 8) {
            auto r = find_unstable_root(cfg.kernel, cfg.profile, w.k, w.hbar, ps.Lambda);
            json e = {{"k", w.k}, {"hbar", w.hbar}};
            e["lambda"] = r ? complex_json(*r) : json(nullptr);
            roots.push_back(e);
        }
    }
    j["winding_numbers"] = windings;
    j["unstable_roots"] = roots;
    json conds = json::array();
    for (Condition c : {Condition::smallness, Condition::repulsive_decreasing}) {
        ConditionOptions co;
        co.K = ps.K;
        co.Lambda = ps.Lambda;
        co.hbar_set = cfg.hbar_set;
        ConditionReport cr = sufficient_condition(cfg.kernel, cfg.profile, c, co);
        conds.push_back({{"condition", c == Condition::smallness ? "smallness" : "repulsive_decreasing"},
                         {"passed", cr.passed},
                         {"value", number(cr.value)},
                         {"note", cr.note}});
    }
    j["sufficient_conditions"] = conds;

    int n_tau = std::max(3, rep.resolution.n_tau);
    std::vector<double> taus(n_tau);
    for (int i = 0; i < n_tau; ++i) taus[i] = -ps.Lambda + 2.0 * ps.Lambda * i / (n_tau - 1);
    json files = json::array();
    for (double k : curve_k) {
        for (double h : cfg.hbar_set) {
            Vec kv = Vec::along(cfg.dim, k);
            auto curve = nyquist_curve(cfg.kernel, cfg.profile, kv, h, taus);
            Csv csv({"re_L", "im_L"});
            for (const cplx& z : curve) csv.row({z.real(), z.imag()});
            std::string name = "nyquist_" + mode_label(kv) + "_" + short_number(h) + ".csv";
            csv.write(dir / name, cfg.hash);
            files.push_back(name);
        }
    }
    j["nyquist_files"] = files;
    write_json(dir / "penrose_report.json", j, cfg.hash);
    log << "penrose: kappa = " << format_number(rep.kappa) << ", verdict " << (rep.stable() ? "stable" : "unstable")
        << "\n";
    return kExitOk;
}

namespace {

bool precheck(const RunConfig& cfg, double K, std::ostream& log)
{
    ScanResolution res = cfg.penrose.resolution;
    PenroseReport rep = penrose_margin(cfg.kernel, cfg.profile, {cfg.hbar}, K, cfg.penrose.Lambda, res);
    if (!rep.stable())
        log << "Penrose pre-check failed: kappa = " << format_number(rep.kappa) << ", tail "
            << format_number(rep.tail_certificate) << "\n";
    return rep.stable();
}

}  // namespace

int cmd_linear(const RunConfig& cfg, const CommandOptions& opt, std::ostream& log)
{
    const InitialWigner& W0 = need_initial(cfg);
    if (cfg.traced.empty()) throw ConfigError("config.traced_modes: linear needs at least one mode");
    double K = 0.0;
    for (const Vec& k : cfg.traced) K = std::max(K, k.norm());
    if (!opt.force && K > 0.0 && !precheck(cfg, std::max(K, cfg.penrose.K), log)) return kExitRefused;
    fs::path dir = output_dir(cfg, opt);
    const LinearSettings& ls = cfg.linear;
    for (const Vec& k : cfg.traced) {
        DensityTrace v = linear_density_volterra(W0, cfg.kernel, cfg.profile, cfg.hbar, k, ls.dt, ls.T);
        DensityTrace g = linear_density_green(W0, cfg.kernel, cfg.profile, cfg.hbar, k, ls.dt, ls.T, ls.green);
        DensityTrace f = free_trace(W0, k, ls.dt, ls.T, cfg.hbar);
        Csv csv({"t", "re_volterra", "im_volterra", "re_green", "im_green", "abs_free"});
        double gap = 0.0;
        for (std::size_t i = 0; i < v.values.size(); ++i) {
            csv.row({v.times[i], v.values[i].real(), v.values[i].imag(), g.values[i].real(), g.values[i].imag(),
                     std::abs(f.values[i])});
            gap = std::max(gap, std::abs(v.values[i] - g.values[i]));
        }
        double fm = max_abs(f.values);
        double rel = fm > 0.0 ? gap / fm : gap;
        csv.comment("summary: max_rel_gap=" + format_number(rel) + ",decay_exponent=" + fit_text(v));
        csv.write(dir / ("linear_" + mode_label(k) + ".csv"), cfg.hash);
        log << "linear " << k.str() << ": gap " << format_number(rel) << "\n";
    }
    return kExitOk;
}

int cmd_simulate(const RunConfig& cfg, const CommandOptions& opt, std::ostream& log)
{
    SimConfig sc = need_simulation(cfg);
    const InitialWigner& W0 = need_initial(cfg);
    if (opt.force) sc.skip_penrose = true;
    SimOutput out = simulate(sc, W0);
    fs::path dir = output_dir(cfg, opt);

    // linearized comparison at the same amplitude and time step
    double factor = amplitude_factor(sc, W0);
    InitialWigner Wl = W0.scaled(factor);
    std::vector<DensityTrace> lin;
    double lin_gap = 0.0, lin_scale = 0.0;
    for (const DensityTrace& tr : out.traces) {
        std::size_t n = tr.values.size();
        double T = out.dt * static_cast<double>(n - 1);
        if (n < 2) {
            lin.push_back(tr);
            continue;
        }
        lin.push_back(linear_density_volterra(Wl, sc.kernel, sc.profile, sc.hbar, tr.k, out.dt, T));
        for (std::size_t i = 0; i < n && i < lin.back().values.size(); ++i) {
            lin_gap = std::max(lin_gap, std::abs(tr.values[i] - lin.back().values[i]));
            lin_scale = std::max(lin_scale, std::abs(lin.back().values[i]));
        }
    }

    std::vector<std::string> header{"t"};
    for (const DensityTrace& tr : out.traces) {
        std::string l = mode_label(tr.k);
        header.push_back("re_" + l);
        header.push_back("im_" + l);
        header.push_back("re_linear_" + l);
        header.push_back("im_linear_" + l);
    }
    Csv dens(header);
    for (std::size_t i = 0; i < out.slices.size(); ++i) {
        std::vector<double> row{out.slices[i].t};
        for (std::size_t m = 0; m < out.traces.size(); ++m) {
            cplx v = out.traces[m].values[i];
            cplx l = i < lin[m].values.size() ? lin[m].values[i] : cplx(std::nan(""), std::nan(""));
            row.insert(row.end(), {v.real(), v.imag(), l.real(), l.imag()});
        }
        dens.row(row);
    }
    double rel = lin_scale > 0.0 ? lin_gap / lin_scale : lin_gap;
    dens.comment("linear_match: max_rel_gap=" + format_number(rel) + ",epsilon=" + format_number(sc.epsilon));
    dens.write(dir / "density.csv", cfg.hash);

    Csv mon({"t", "B1", "B2", "B3", "B4", "B5"});
    const MonitorSeries& ms = out.monitors;
    for (std::size_t i = 0; i < ms.times.size(); ++i)
        mon.row({ms.times[i], ms.B1[i], ms.B2[i], ms.B3[i], ms.B4[i], ms.B5[i]});
    if (ms.thresholds) {
        std::string s = "thresholds:";
        for (double v : *ms.thresholds) s += " " + format_number(v);
        mon.comment(s);
    }
    mon.write(dir / "monitors.csv", cfg.hash);

    json sj;
    sj["available"] = out.scattering.has_value();
    if (out.scattering) {
        const ScatteringResult& r = *out.scattering;
        sj["rate_exponent"] = number(r.rate_exponent);
        sj["increment_exponent"] = number(r.increment_exponent);
        sj["reference_exponent"] = number(r.reference_exponent);
        sj["naive_exponent"] = number(r.naive_exponent);
        sj["fit_residual"] = number(r.fit_residual);
        sj["monotone_after_transient"] = r.monotone;
        sj["transient"] = r.transient;
        sj["times"] = r.times;
        sj["residuals"] = r.cauchy_residuals;
        sj["increment_times"] = r.increment_times;
        sj["increments"] = r.increments;
    }
    sj["expected_rate"] = 0.5 * sc.dim;
    sj["note"] = sc.dim < 3 ? "theorem hypotheses need d >= 3; this run is an empirical surrogate"
                            : "surrogate of the scattering statement";
    sj["dt"] = out.dt;
    sj["steps"] = out.steps;
    sj["scheme"] = out.scheme == RhsScheme::sheared ? "sheared" : "direct";
    sj["max_trace_drift"] = out.max_trace_drift;
    sj["max_conjugate_defect"] = out.max_conjugate_defect;
    sj["max_boundary_ratio"] = out.max_boundary_ratio;
    sj["unstable"] = out.unstable;
    write_json(dir / "scattering.json", sj, cfg.hash);

    std::string wl;
    for (const auto& w : out.warnings) wl += w + "\n";
    Csv::write_file(dir / "warnings.log", wl);
    log << "simulate: " << out.steps << " steps, dt " << format_number(out.dt) << "\n";
    return out.unstable ? kExitNumerical : kExitOk;
}

int cmd_sweep_hbar(const RunConfig& cfg, const CommandOptions& opt, std::ostream& log)
{
    SimConfig base = need_simulation(cfg);
    const InitialWigner& W0 = need_initial(cfg);
    if (cfg.hbar_sweep.empty()) throw ConfigError("config.hbar_sweep: missing");
    std::vector<double> hs = cfg.hbar_sweep;
    std::sort(hs.begin(), hs.end());
    hs.erase(std::unique(hs.begin(), hs.end()), hs.end());
    if (hs.front() != 0.0) hs.insert(hs.begin(), 0.0);
    if (opt.force) base.skip_penrose = true;
    base.keep_snapshots = false;
    base.monitors = false;

    std::vector<SimOutput> runs;
    for (double h : hs) {
        SimConfig c = base;
        c.hbar = h;
        if (!runs.empty()) c.dt = runs.front().dt;
        runs.push_back(simulate(c, W0));
        if (runs.back().unstable) {
            log << "sweep: run at hbar " << h << " aborted as unstable\n";
            return kExitNumerical;
        }
    }
    const SimOutput& ref = runs.front();
    NormParams np{base.sigma.sigma0, base.sigma.M, WeightMode::plain, 0.0};
    std::vector<double> dd(hs.size()), ds(hs.size());
    for (std::size_t r = 0; r < runs.size(); ++r) {
        double m = 0.0;
        for (std::size_t i = 0; i < ref.slices.size() && i < runs[r].slices.size(); ++i) {
            const auto& a = runs[r].slices[i].rho;
            const auto& b = ref.slices[i].rho;
            if (base.traced.empty()) {
                for (std::size_t q = 0; q < a.size(); ++q) m = std::max(m, std::abs(a[q] - b[q]));
            } else {
                for (std::size_t q = 0; q < runs[r].traces.size(); ++q)
                    m = std::max(m, std::abs(runs[r].traces[q].values[i] - ref.traces[q].values[i]));
            }
        }
        dd[r] = m;
        ds[r] = weighted_distance(runs[r].final_field, ref.final_field, np);
    }
    std::vector<double> hp, dp, sp;
    for (std::size_t r = 1; r < hs.size(); ++r) {
        hp.push_back(hs[r]);
        dp.push_back(dd[r]);
        sp.push_back(ds[r]);
    }
    Csv csv({"hbar", "density_distance", "scattering_distance", "local_order_density", "local_order_scattering"});
    for (std::size_t r = 0; r < hs.size(); ++r) {
        double od = std::nan(""), os = std::nan("");
        if (r + 1 < hs.size() && r > 0 && dd[r] > 0 && dd[r + 1] > 0)
            od = std::log(dd[r + 1] / dd[r]) / std::log(hs[r + 1] / hs[r]);
        if (r + 1 < hs.size() && r > 0 && ds[r] > 0 && ds[r + 1] > 0)
            os = std::log(ds[r + 1] / ds[r]) / std::log(hs[r + 1] / hs[r]);
        csv.row({hs[r], dd[r], ds[r], od, os});
    }
    csv.comment("fit: density_order=" + format_number(log_slope(hp, dp)) +
                ",scattering_order=" + format_number(log_slope(hp, sp)));
    fs::path dir = output_dir(cfg, opt);
    csv.write(dir / "sweep.csv", cfg.hash);
    log << "sweep: " << hs.size() << " runs\n";
    return kExitOk;
}

int run_command(const std::string& command, const std::string& config_path, const CommandOptions& opt,
                std::ostream& log)
{
    try {
        RunConfig cfg = load_config(config_path);
        if (command == "penrose") return cmd_penrose(cfg, opt, log);
        if (command == "linear") return cmd_linear(cfg, opt, log);
        if (command == "simulate") return cmd_simulate(cfg, opt, log);
        if (command == "sweep-hbar") return cmd_sweep_hbar(cfg, opt, log);
        log << "error: unknown command " << command << "\n";
        return kExitConfig;
    } catch (const ConfigError& e) {
        log << "configuration error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const StabilityRefusal& e) {
        log << "refused: " << e.what() << "\n";
        return kExitRefused;
    } catch (const std::exception& e) {
        log << "numerical failure: " << e.what() << "\n";
        return kExitNumerical;
    }
}

}  // namespace qmix
