#include "qmix/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace qmix {

using nlohmann::json;

namespace {

// Strict view of a JSON object: every key must be read, or the leftover
// keys are reported as unknown.
class Obj {
public:
    Obj(const json& j, std::string path) : j_(j), path_(std::move(path))
    {
        if (!j_.is_object()) fail(path_, "expected an object");
    }

    [[noreturn]] static void fail(const std::string& path, const std::string& msg)
    {
        throw ConfigError(path + ": " + msg);
    }

    std::string at(const std::string& key) const { return path_ + "." + key; }
    bool has(const std::string& key)
    {
        used_.insert(key);
        return j_.contains(key);
    }
    const json& raw(const std::string& key)
    {
        used_.insert(key);
        if (!j_.contains(key)) fail(at(key), "missing");
        return j_.at(key);
    }

    double num(const std::string& key)
    {
        const json& v = raw(key);
        if (!v.is_number()) fail(at(key), "expected a number");
        double x = v.get<double>();
        if (!std::isfinite(x)) fail(at(key), "expected a finite number");
        return x;
    }
    double num(const std::string& key, double def) { return has(key) ? num(key) : def; }

    long integer(const std::string& key)
    {
        const json& v = raw(key);
        if (!v.is_number_integer()) fail(at(key), "expected an integer");
        return v.get<long>();
    }
    long integer(const std::string& key, long def) { return has(key) ? integer(key) : def; }

    bool flag(const std::string& key, bool def)
    {
        if (!has(key)) return def;
        const json& v = raw(key);
        if (!v.is_boolean()) fail(at(key), "expected true or false");
        return v.get<bool>();
    }

    std::string str(const std::string& key)
    {
        const json& v = raw(key);
        if (!v.is_string()) fail(at(key), "expected a string");
        return v.get<std::string>();
    }
    std::string str(const std::string& key, const std::string& def) { return has(key) ? str(key) : def; }

    std::vector<double> nums(const std::string& key)
    {
        const json& v = raw(key);
        if (!v.is_array()) fail(at(key), "expected an array of numbers");
        std::vector<double> out;
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (!v[i].is_number()) fail(at(key) + "[" + std::to_string(i) + "]", "expected a number");
            out.push_back(v[i].get<double>());
        }
        return out;
    }

    Obj sub(const std::string& key) { return Obj(raw(key), at(key)); }

    void finish() const
    {
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!used_.count(it.key())) fail(at(it.key()), "unknown key");
    }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> used_;
};

Vec vec_of(const std::vector<double>& xs, int dim, const std::string& path)
{
    if (static_cast<int>(xs.size()) != dim) Obj::fail(path, "expected " + std::to_string(dim) + " components");
    Vec v(dim);
    for (int a = 0; a < dim; ++a) v[a] = xs[a];
    return v;
}

template <class F>
auto guarded(const std::string& path, F&& f) -> decltype(f())
{
    try {
        return f();
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        Obj::fail(path, e.what());
    }
}

VelocityProfile parse_profile(Obj o, int dim)
{
    std::string kind = o.str("kind");
    VelocityProfile p = VelocityProfile::gaussian(dim, 1.0);
    if (kind == "gaussian") {
        double scale = o.num("scale");
        double amp = o.num("amplitude", 1.0);
        p = guarded(o.at("scale"), [&] { return VelocityProfile::gaussian(dim, scale, amp); });
    } else if (kind == "tabulated") {
        auto samples = o.nums("samples");
        double step = o.num("step");
        double amp = o.num("amplitude", 1.0);
        p = guarded(o.at("samples"), [&] { return VelocityProfile::tabulated(dim, samples, step, amp); });
    } else {
        Obj::fail(o.at("kind"), "expected gaussian or tabulated");
    }
    o.finish();
    return p;
}

InteractionKernel parse_kernel(Obj o, int dim)
{
    std::string kind = o.str("kind");
    InteractionKernel w = InteractionKernel::zero(dim);
    if (kind == "yukawa") {
        double alpha = o.num("alpha");
        double s = o.num("strength", 1.0);
        w = guarded(o.at("alpha"), [&] { return InteractionKernel::yukawa(dim, alpha, s); });
    } else if (kind == "gaussian") {
        double width = o.num("width");
        double s = o.num("strength", 1.0);
        w = guarded(o.at("width"), [&] { return InteractionKernel::gaussian(dim, width, s); });
    } else if (kind == "zero") {
        w = InteractionKernel::zero(dim);
    } else if (kind == "tabulated") {
        auto samples = o.nums("samples");
        double step = o.num("step");
        double l1 = o.num("l1", -1.0);
        w = guarded(o.at("samples"), [&] { return InteractionKernel::tabulated(dim, samples, step, l1); });
    } else {
        Obj::fail(o.at("kind"), "expected yukawa, gaussian, zero or tabulated");
    }
    double scale = o.num("scale", 1.0);
    o.finish();
    return scale == 1.0 ? w : w.scaled(scale);
}

InitialWigner parse_initial(Obj o, int dim)
{
    std::string kind = o.str("kind");
    double amp = o.num("amplitude", 1.0);
    double wk = o.num("width_k");
    double we = o.num("width_eta");
    InitialWigner W = InitialWigner::gaussian(dim, 1.0, 1.0, 1.0);
    if (kind == "gaussian") {
        W = guarded(o.at("width_k"), [&] { return InitialWigner::gaussian(dim, amp, wk, we); });
    } else if (kind == "rational") {
        double power = o.num("power");
        W = guarded(o.at("power"), [&] { return InitialWigner::rational(dim, amp, wk, we, power); });
    } else {
        Obj::fail(o.at("kind"), "expected gaussian or rational");
    }
    Vec x0(dim), v0(dim);
    if (o.has("x0")) x0 = vec_of(o.nums("x0"), dim, o.at("x0"));
    if (o.has("v0")) v0 = vec_of(o.nums("v0"), dim, o.at("v0"));
    o.finish();
    return W.with_shift(x0, v0);
}

AxisGrid axis(Obj& o, const std::string& extent_key, const std::string& step_key)
{
    double ext = o.num(extent_key), step = o.num(step_key);
    if (!(ext > 0.0)) Obj::fail(o.at(extent_key), "must be positive");
    if (!(step > 0.0)) Obj::fail(o.at(step_key), "must be positive");
    double r = ext / step;
    long half = std::lround(r);
    if (half < 1 || std::abs(r - half) > 1e-9 * std::max(1.0, r))
        Obj::fail(o.at(step_key), "must divide " + extent_key + " into a whole number of steps");
    return AxisGrid{static_cast<int>(2 * half + 1), ext / half};
}

void check_hbar_list(const std::vector<double>& hs, const std::string& path)
{
    if (hs.empty()) Obj::fail(path, "must not be empty");
    for (double h : hs)
        if (!(h >= 0.0 && h <= 1.0)) Obj::fail(path, "entries must lie in [0, 1]");
}

SimConfig parse_simulation(Obj o, const RunConfig& rc)
{
    SimConfig s;
    s.dim = rc.dim;
    s.hbar = rc.hbar;
    s.kernel = rc.kernel;
    s.profile = rc.profile;
    s.traced = rc.traced;
    s.epsilon = o.num("epsilon");
    std::string amp = o.str("amplitude", "sup");
    if (amp == "sup")
        s.amplitude = Amplitude::sup;
    else if (amp == "bootstrap")
        s.amplitude = Amplitude::bootstrap;
    else if (amp == "raw")
        s.amplitude = Amplitude::raw;
    else
        Obj::fail(o.at("amplitude"), "expected sup, bootstrap or raw");
    s.k_axis = axis(o, "k_max", "dk");
    s.eta_axis = axis(o, "eta_max", "deta");
    s.dt = o.num("dt", 0.0);
    s.T = o.num("T");
    s.output_interval = o.num("output_interval", 1.0);
    std::string scheme = o.str("scheme", "auto");
    if (scheme == "auto")
        s.scheme = RhsScheme::automatic;
    else if (scheme == "direct")
        s.scheme = RhsScheme::direct;
    else if (scheme == "sheared")
        s.scheme = RhsScheme::sheared;
    else
        Obj::fail(o.at("scheme"), "expected auto, direct or sheared");
    if (o.has("sigma")) {
        Obj g = o.sub("sigma");
        s.sigma.sigma0 = g.num("sigma0", s.sigma.sigma0);
        s.sigma.sigma1 = g.num("sigma1", s.sigma.sigma1);
        s.sigma.sigma2 = g.num("sigma2", s.sigma.sigma2);
        s.sigma.sigma3 = g.num("sigma3", s.sigma.sigma3);
        s.sigma.sigma4 = g.num("sigma4", s.sigma.sigma4);
        s.sigma.N0 = g.num("N0", s.sigma.N0);
        s.sigma.delta = g.num("delta", s.sigma.delta);
        s.sigma.M = static_cast<int>(g.integer("M", s.sigma.M));
        g.finish();
    }
    if (o.has("K")) s.K = o.nums("K");
    s.skip_penrose = o.flag("skip_penrose", false);
    s.max_halvings = static_cast<int>(o.integer("max_halvings", s.max_halvings));
    s.dt_tolerance = o.num("dt_tolerance", s.dt_tolerance);
    o.finish();
    guarded("config.simulation", [&] {
        s.validate();
        return 0;
    });
    return s;
}

}  // namespace

std::uint64_t fnv1a(const std::string& s)
{
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::string hash_hex(std::uint64_t h)
{
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

RunConfig parse_config(const json& j)
{
    RunConfig rc;
    Obj o(j, "config");
    long schema = o.integer("schema");
    if (schema != 1) Obj::fail(o.at("schema"), "unsupported schema version " + std::to_string(schema));
    rc.dim = static_cast<int>(o.integer("dim"));
    if (rc.dim < 1 || rc.dim > 3) Obj::fail(o.at("dim"), "must be 1, 2 or 3");
    rc.profile = parse_profile(o.sub("profile"), rc.dim);
    rc.kernel = parse_kernel(o.sub("kernel"), rc.dim);
    rc.hbar = o.num("hbar", rc.hbar);
    if (!(rc.hbar >= 0.0 && rc.hbar <= 1.0)) Obj::fail(o.at("hbar"), "must lie in [0, 1]");
    if (o.has("hbar_set")) {
        rc.hbar_set = o.nums("hbar_set");
        check_hbar_list(rc.hbar_set, o.at("hbar_set"));
    }
    if (o.has("hbar_sweep")) {
        rc.hbar_sweep = o.nums("hbar_sweep");
        check_hbar_list(rc.hbar_sweep, o.at("hbar_sweep"));
    }
    if (o.has("traced_modes")) {
        const json& t = o.raw("traced_modes");
        if (!t.is_array()) Obj::fail(o.at("traced_modes"), "expected an array of vectors");
        for (std::size_t i = 0; i < t.size(); ++i) {
            std::string p = o.at("traced_modes") + "[" + std::to_string(i) + "]";
            if (!t[i].is_array()) Obj::fail(p, "expected an array of numbers");
            std::vector<double> xs;
            for (const auto& x : t[i]) {
                if (!x.is_number()) Obj::fail(p, "expected an array of numbers");
                xs.push_back(x.get<double>());
            }
            rc.traced.push_back(vec_of(xs, rc.dim, p));
        }
    }
    if (o.has("penrose")) {
        Obj p = o.sub("penrose");
        rc.penrose.K = p.num("K", rc.penrose.K);
        rc.penrose.Lambda = p.num("Lambda", rc.penrose.Lambda);
        if (!(rc.penrose.K > 0.0)) Obj::fail(p.at("K"), "must be positive");
        if (!(rc.penrose.Lambda > 0.0)) Obj::fail(p.at("Lambda"), "must be positive");
        ScanResolution& r = rc.penrose.resolution;
        r.n_k = static_cast<int>(p.integer("n_k", r.n_k));
        r.n_tau = static_cast<int>(p.integer("n_tau", r.n_tau));
        r.n_interior_re = static_cast<int>(p.integer("n_interior_re", r.n_interior_re));
        r.n_interior_im = static_cast<int>(p.integer("n_interior_im", r.n_interior_im));
        r.n_shell = static_cast<int>(p.integer("n_shell", r.n_shell));
        if (r.n_k < 1 || r.n_tau < 3 || r.n_interior_re < 1 || r.n_interior_im < 1 || r.n_shell < 3)
            Obj::fail(p.at("n_k"), "scan resolution too small");
        if (p.has("nyquist_k")) rc.penrose.nyquist_k = p.nums("nyquist_k");
        p.finish();
    }
    if (o.has("initial")) rc.initial = parse_initial(o.sub("initial"), rc.dim);
    if (o.has("linear")) {
        Obj l = o.sub("linear");
        rc.linear.dt = l.num("dt", rc.linear.dt);
        rc.linear.T = l.num("T", rc.linear.T);
        rc.linear.green.tau_max = l.num("tau_max", 0.0);
        rc.linear.green.n_tau = static_cast<int>(l.integer("n_tau", rc.linear.green.n_tau));
        if (!(rc.linear.dt > 0.0)) Obj::fail(l.at("dt"), "must be positive");
        if (!(rc.linear.T >= rc.linear.dt)) Obj::fail(l.at("T"), "must be at least dt");
        if (rc.linear.green.n_tau < 2) Obj::fail(l.at("n_tau"), "must be at least 2");
        l.finish();
    }
    if (o.has("simulation")) rc.simulation = parse_simulation(o.sub("simulation"), rc);
    rc.output_dir = o.str("output_dir", rc.output_dir);
    if (o.has("seed")) {
        long s = o.integer("seed");
        if (s < 0) Obj::fail(o.at("seed"), "must be nonnegative");
        rc.seed = static_cast<std::uint64_t>(s);
    }
    o.finish();
    rc.canonical = j.dump();
    rc.hash = fnv1a(rc.canonical);
    return rc;
}

RunConfig load_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw ConfigError(path + ": cannot open");
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(path + ": " + e.what());
    }
    return parse_config(j);
}

}  // namespace qmix
