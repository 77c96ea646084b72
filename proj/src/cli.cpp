#include "fracfourier/cli.hpp"

#include <charconv>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "cli_internal.hpp"

namespace fracfourier::cli {

namespace fs = std::filesystem;

// ---------------------------------------------------------------- Node

Node::Node(const Json* j, std::string path, Node* parent, std::string key)
    : j_(j), path_(std::move(path)), parent_(parent), key_(std::move(key)) {
    if (!j_->is_object()) fail(ErrorKind::Schema, path_ + " must be an object");
}

bool Node::has(const std::string& k) const { return j_->contains(k); }

void Node::bad(const std::string& k, const std::string& what) const {
    fail(ErrorKind::Schema, path_ + "." + k + ": " + what);
}

const Json& Node::at(const std::string& k) {
    used_.insert(k);
    if (!j_->contains(k)) bad(k, "missing required key");
    return (*j_)[k];
}

double Node::number(const std::string& k, std::optional<double> def) {
    double v;
    if (has(k)) {
        const Json& x = at(k);
        if (!x.is_number()) bad(k, "expected a number");
        v = x.get<double>();
        if (!std::isfinite(v)) bad(k, "expected a finite number");
    } else {
        used_.insert(k);
        if (!def) bad(k, "missing required key");
        v = *def;
    }
    resolved[k] = v;
    return v;
}

std::int64_t Node::integer(const std::string& k, std::optional<std::int64_t> def, std::int64_t lo, std::int64_t hi) {
    std::int64_t v;
    if (has(k)) {
        const Json& x = at(k);
        if (!x.is_number_integer()) bad(k, "expected an integer");
        if (x.is_number_unsigned() && x.get<std::uint64_t>() > static_cast<std::uint64_t>(INT64_MAX))
            bad(k, "integer out of range");
        v = x.get<std::int64_t>();
    } else {
        used_.insert(k);
        if (!def) bad(k, "missing required key");
        v = *def;
    }
    if (v < lo || v > hi) bad(k, "value " + std::to_string(v) + " outside [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
    resolved[k] = v;
    return v;
}

std::uint64_t Node::unsigned_integer(const std::string& k) {
    const Json& x = at(k);
    if (!x.is_number_integer() || (!x.is_number_unsigned() && x.get<std::int64_t>() < 0))
        bad(k, "expected a non-negative integer");
    std::uint64_t v = x.get<std::uint64_t>();
    resolved[k] = v;
    return v;
}

bool Node::boolean(const std::string& k, std::optional<bool> def) {
    bool v;
    if (has(k)) {
        const Json& x = at(k);
        if (!x.is_boolean()) bad(k, "expected true or false");
        v = x.get<bool>();
    } else {
        used_.insert(k);
        if (!def) bad(k, "missing required key");
        v = *def;
    }
    resolved[k] = v;
    return v;
}

std::string Node::text(const std::string& k, std::optional<std::string> def, const std::vector<std::string>& allowed) {
    std::string v;
    if (has(k)) {
        const Json& x = at(k);
        if (!x.is_string()) bad(k, "expected a string");
        v = x.get<std::string>();
    } else {
        used_.insert(k);
        if (!def) bad(k, "missing required key");
        v = *def;
    }
    if (!allowed.empty() && std::find(allowed.begin(), allowed.end(), v) == allowed.end()) {
        std::string list;
        for (const auto& a : allowed) list += (list.empty() ? "" : ", ") + a;
        bad(k, "'" + v + "' is not one of: " + list);
    }
    resolved[k] = v;
    return v;
}

std::vector<double> Node::numbers(const std::string& k, std::optional<std::vector<double>> def) {
    std::vector<double> v;
    if (has(k)) {
        const Json& x = at(k);
        if (!x.is_array()) bad(k, "expected an array of numbers");
        for (const auto& e : x) {
            if (!e.is_number()) bad(k, "expected an array of numbers");
            v.push_back(e.get<double>());
            if (!std::isfinite(v.back())) bad(k, "expected finite numbers");
        }
    } else {
        used_.insert(k);
        if (!def) bad(k, "missing required key");
        v = *def;
    }
    resolved[k] = v;
    return v;
}

std::vector<std::int64_t> Node::integers(const std::string& k, std::optional<std::vector<std::int64_t>> def,
                                         std::int64_t lo, std::int64_t hi) {
    std::vector<std::int64_t> v;
    if (has(k)) {
        const Json& x = at(k);
        if (!x.is_array()) bad(k, "expected an array of integers");
        for (const auto& e : x) {
            if (!e.is_number_integer()) bad(k, "expected an array of integers");
            v.push_back(e.get<std::int64_t>());
        }
    } else {
        used_.insert(k);
        if (!def) bad(k, "missing required key");
        v = *def;
    }
    for (auto e : v)
        if (e < lo || e > hi) bad(k, "entry " + std::to_string(e) + " outside [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
    resolved[k] = v;
    return v;
}

const Json& Node::raw(const std::string& k) {
    const Json& x = at(k);
    resolved[k] = x;
    return x;
}

Node Node::child(const std::string& k) {
    used_.insert(k);
    if (has(k)) {
        if (!(*j_)[k].is_object()) bad(k, "expected an object");
        return Node(&(*j_)[k], path_ + "." + k, this, k);
    }
    return Node(&empty_, path_ + "." + k, this, k);
}

std::vector<Node> Node::children(const std::string& k) {
    const Json& x = at(k);
    if (!x.is_array()) bad(k, "expected an array of objects");
    std::vector<Node> out;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!x[i].is_object()) bad(k, "expected an array of objects");
        out.emplace_back(&x[i], path_ + "." + k + "[" + std::to_string(i) + "]");
    }
    resolved[k] = x;
    return out;
}

void Node::close() {
    for (auto it = j_->begin(); it != j_->end(); ++it)
        if (!used_.count(it.key())) fail(ErrorKind::Schema, path_ + ": unknown key '" + it.key() + "'");
    if (parent_) parent_->resolved[key_] = resolved;
}

// ---------------------------------------------------------------- ledger and series

void Ledger::add(const char* kind, const std::string& name, bool pass, Json detail) {
    Json e = Json::object();
    e["name"] = name;
    e["kind"] = kind;
    e["status"] = pass ? "pass" : "fail";
    for (auto it = detail.begin(); it != detail.end(); ++it) e[it.key()] = it.value();
    entries_.push_back(std::move(e));
}

void Ledger::contract(const std::string& name, bool pass, Json detail) {
    add("contract", name, pass, std::move(detail));
    if (!pass) ok_ = false;
}

void Ledger::observe(const std::string& name, bool pass, Json detail) { add("observation", name, pass, std::move(detail)); }

std::string format_double(double v) {
    char buf[64];
    auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

void SeriesWriter::add(const std::string& name, std::size_t declared, const std::vector<Column>& cols,
                       const std::vector<PlotSpec>& plots) {
    const std::string file = "series_" + name + ".csv";
    std::ofstream f(dir_ / file, std::ios::binary);
    if (!f) fail(ErrorKind::Domain, "cannot write " + (dir_ / file).string());
    std::size_t rows = cols.empty() ? 0 : cols.front().size();
    bool same = true;
    for (const auto& c : cols) same = same && c.size() == rows;
    for (std::size_t i = 0; i < cols.size(); ++i) f << (i ? "," : "") << cols[i].name;
    f << "\n";
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t i = 0; i < cols.size(); ++i) {
            if (i) f << ",";
            if (r >= cols[i].size()) continue;
            f << (cols[i].is_text ? cols[i].text[r] : format_double(cols[i].num[r]));
        }
        f << "\n";
    }
    Json m = Json::object();
    m["name"] = name;
    m["file"] = file;
    m["rows"] = rows;
    m["declared"] = declared;
    Json cn = Json::array();
    for (const auto& c : cols) cn.push_back(c.name);
    m["columns"] = cn;
    Json ps = Json::array();
    for (const auto& p : plots) {
        for (const auto& axis : {p.x, p.y}) {
            bool found = false;
            for (const auto& c : cols) found = found || c.name == axis;
            if (!found) fail(ErrorKind::Domain, "plot " + p.name + " names missing column " + axis);
        }
        ps.push_back({{"name", p.name}, {"x", p.x}, {"y", p.y}, {"log2x", p.log2x}, {"log2y", p.log2y}});
    }
    m["plots"] = ps;
    meta_.push_back(m);
    ledger_.contract("rows of series_" + name + " equal the declared grid size", same && rows == declared,
                     {{"rows", rows}, {"declared", declared}});
}

std::uint64_t Context::require_seed(const std::string& why) const {
    if (!seed) fail(ErrorKind::Schema, "a seed is required (" + why + "): set \"seed\" in the config or pass --seed");
    return *seed;
}

// ---------------------------------------------------------------- systems and potentials

SystemConfig parse_system(Node n, const std::vector<std::string>& allowed) {
    SystemConfig c;
    c.kind = n.text("name", std::nullopt, allowed);
    if (c.kind == "doubling") {
        c.Phi = n.text("Phi", "cos", PeriodicFunction::registry());
        c.delta = n.number("delta", 0.05);
    } else if (c.kind == "linear") {
        const Json& p = n.raw("pieces");
        if (!p.is_array() || p.empty()) fail(ErrorKind::Schema, n.path() + ".pieces: expected [[left, ratio], ...]");
        for (const auto& e : p) {
            if (!e.is_array() || e.size() != 2 || !e[0].is_number() || !e[1].is_number())
                fail(ErrorKind::Schema, n.path() + ".pieces: expected [[left, ratio], ...]");
            c.pieces.push_back({e[0].get<double>(), e[1].get<double>()});
        }
    } else if (c.kind == "julia") {
        auto v = n.numbers("c");
        if (v.size() != 2) fail(ErrorKind::Schema, n.path() + ".c: expected [re, im]");
        c.c = {v[0], v[1]};
    } else if (c.kind == "solenoid") {
        c.N_max = static_cast<int>(n.integer("N_max", 6, 1, 12));
        c.precision = n.text("precision", "working", {"working", "decimal"});
        c.eps = n.number("eps", 0.0);
        c.with_g = n.boolean("g", true);
    } else if (c.kind == "schottky") {
        for (Node g : n.children("generators")) {
            SchottkyGenerator s;
            if (g.has("matrix")) {
                const Json& m = g.raw("matrix");
                Mat3 M{};
                bool ok = m.is_array() && m.size() == 3;
                for (std::size_t i = 0; ok && i < 3; ++i) {
                    ok = m[i].is_array() && m[i].size() == 3;
                    for (std::size_t j = 0; ok && j < 3; ++j) {
                        ok = m[i][j].is_number();
                        if (ok) M[i][j] = m[i][j].get<double>();
                    }
                }
                if (!ok) fail(ErrorKind::Schema, g.path() + ".matrix: expected a 3x3 array of numbers");
                // only boosts through o are accepted: symmetric, M00 = cosh(length)
                if (!(M[0][0] > 1)) fail(ErrorKind::Schema, g.path() + ".matrix: not hyperbolic (M00 <= 1)");
                s.axis = std::atan2(M[2][0], M[1][0]);
                s.length = std::acosh(M[0][0]);
                const Mat3 B = MoebiusMap::boost(s.axis, s.length).matrix();
                double err = 0;
                for (int i = 0; i < 3; ++i)
                    for (int j = 0; j < 3; ++j) err = std::max(err, std::fabs(B[i][j] - M[i][j]));
                if (err > 1e-9 * M[0][0])
                    fail(ErrorKind::Schema, g.path() + ".matrix: only translations along a diameter are supported");
            } else {
                s.axis = g.number("axis");
                s.length = g.number("length");
                if (!(s.length > 0)) fail(ErrorKind::Schema, g.path() + ".length: must be positive");
            }
            g.close();
            c.generators.push_back(s);
        }
        if (c.generators.empty()) fail(ErrorKind::Schema, n.path() + ".generators: need at least one generator");
    }
    n.close();
    return c;
}

SystemHandle build_system(const SystemConfig& c) {
    SystemHandle h;
    h.kind = c.kind;
    if (c.kind == "doubling") {
        h.doubling = build_doubling(c.Phi, c.delta);
        h.branch = h.doubling;
        h.circle = h.doubling.get();
    } else if (c.kind == "cantor") {
        h.linear = LinearIFS::cantor();
        h.branch = h.linear;
    } else if (c.kind == "halves") {
        h.linear = LinearIFS::halves();
        h.branch = h.linear;
    } else if (c.kind == "linear") {
        h.linear = std::make_shared<LinearIFS>("linear", c.pieces);
        h.branch = h.linear;
    } else if (c.kind == "julia") {
        h.julia = julia_build(c.c);
        h.branch = h.julia;
    } else if (c.kind == "solenoid") {
        auto policy = c.precision == "decimal" ? PrecisionPolicy::DecimalExpansion : PrecisionPolicy::WorkingPrecision;
        h.solenoid = std::make_shared<SolenoidSystem>(c.N_max, policy, c.eps, c.with_g);
        h.circle = h.solenoid.get();
    } else if (c.kind == "schottky") {
        h.schottky = std::make_shared<SchottkyGroup>(c.generators);
        h.branch = h.schottky;
    }
    return h;
}

PotentialConfig parse_potential(Node n, const std::string& default_kind) {
    PotentialConfig p;
    p.kind = n.text("name", default_kind,
                    {"zero", "constant", "geometric", "bernoulli", "locally-constant", "periodic", "smoothed-indicator"});
    if (p.kind == "constant") p.c = n.number("c");
    if (p.kind == "geometric") p.s = n.number("s", -1.0);
    if (p.kind == "bernoulli") {
        p.p = n.number("p");
        if (!(p.p > 0 && p.p < 1)) fail(ErrorKind::Schema, n.path() + ".p: must lie in (0,1)");
    }
    if (p.kind == "locally-constant") p.values = n.numbers("values");
    if (p.kind == "periodic") {
        p.function = n.text("function", "cos", PeriodicFunction::registry());
        p.scale = n.number("scale", 1.0);
    }
    if (p.kind == "smoothed-indicator") {
        p.lo = n.number("lo", 0.0);
        p.hi = n.number("hi", 0.5);
        p.width = n.number("width", 0.3);
        if (!(p.lo < p.hi && p.width > 0 && p.hi - p.lo + p.width < 1))
            fail(ErrorKind::Schema, n.path() + ": need lo < hi and hi - lo + width < 1");
    }
    p.normalize = n.boolean("normalize", false);
    n.close();
    return p;
}

namespace {

// quintic smoothstep on [0,1]
double smoothstep(double t) {
    t = std::clamp(t, 0.0, 1.0);
    return t * t * t * (10 - 15 * t + 6 * t * t);
}

double frac(double x) { return x - std::floor(x); }

}  // namespace

PotentialHandle build_potential(const PotentialConfig& c, const SystemHandle& sys, int grid_points) {
    if (!sys.branch) fail(ErrorKind::Schema, "potential needs a branch system");
    PotentialHandle h;
    h.cfg = c;
    const int k = sys.branch->piece_count();
    auto need_real = [&] {
        if (sys.branch->phase_dim() != 1) fail(ErrorKind::Schema, "potential '" + c.kind + "' needs a real system");
    };
    if (c.kind == "zero") h.spec = constant_potential(0.0);
    else if (c.kind == "constant") h.spec = constant_potential(c.c);
    else if (c.kind == "geometric") h.spec = scaled_log_expansion(sys.branch, c.s);
    else if (c.kind == "bernoulli") {
        if (k != 2) fail(ErrorKind::Schema, "bernoulli potential needs two pieces");
        h.spec = locally_constant({std::log(c.p), std::log1p(-c.p)});
    } else if (c.kind == "locally-constant") {
        if (static_cast<int>(c.values.size()) != k)
            fail(ErrorKind::Schema, "locally-constant potential needs one value per piece (" + std::to_string(k) + ")");
        h.spec = locally_constant(c.values);
    } else if (c.kind == "periodic") {
        need_real();
        auto F = PeriodicFunction::by_name(c.function);
        auto S = sys.branch;
        double scale = c.scale;
        h.spec.label = "periodic " + c.function;
        h.spec.eval = [F, S, scale](int a, double u) { return scale * F.f(frac(S->point(a, u).real())); };
    } else if (c.kind == "smoothed-indicator") {
        need_real();
        auto S = sys.branch;
        double lo = c.lo, hi = c.hi, w = c.width;
        h.spec.label = "smoothed indicator";
        h.spec.eval = [S, lo, hi, w](int a, double u) {
            double x = frac(S->point(a, u).real()), v = 0;
            for (int s = -1; s <= 1; ++s)
                v += smoothstep((x + s - lo + 0.5 * w) / w) - smoothstep((x + s - hi + 0.5 * w) / w);
            return v;
        };
    }
    if (c.normalize) {
        NormalizedPotential np = normalize_potential(sys.branch, h.spec, grid_points);
        h.spec = np.phi;
        h.normalize_defect = np.max_defect;
    }
    return h;
}

double log_spectral_radius(const TransitionMatrix& m) {
    const int n = m.size();
    std::vector<double> v(static_cast<std::size_t>(n), 1.0), w(v.size());
    double logr = 0;
    for (int it = 0; it < 2000; ++it) {
        for (int a = 0; a < n; ++a) {
            double s = 0;
            for (int b = 0; b < n; ++b)
                if (m.allowed(a, b)) s += v[static_cast<std::size_t>(b)];
            w[static_cast<std::size_t>(a)] = s;
        }
        double mx = *std::max_element(w.begin(), w.end());
        double prev = logr;
        logr = std::log(mx / *std::max_element(v.begin(), v.end()));
        for (std::size_t i = 0; i < v.size(); ++i) v[i] = w[i] / mx;
        if (it > 10 && std::fabs(logr - prev) < 1e-15) break;
    }
    return logr;
}

std::size_t admissible_count(const TransitionMatrix& m, int n) {
    const int k = m.size();
    std::vector<std::size_t> c(static_cast<std::size_t>(k), 1), d(c.size());
    for (int len = 2; len <= n; ++len) {
        for (int b = 0; b < k; ++b) {
            std::size_t s = 0;
            for (int a = 0; a < k; ++a)
                if (m.allowed(a, b)) s += c[static_cast<std::size_t>(a)];
            d[static_cast<std::size_t>(b)] = s;
        }
        c = d;
    }
    std::size_t t = 0;
    for (auto x : c) t += x;
    return t;
}

std::optional<double> closed_form_pressure(const SystemHandle& sys, const PotentialConfig& pot) {
    if (!sys.branch || pot.normalize) return std::nullopt;
    const TransitionMatrix& M = sys.branch->transitions();
    bool full = true;
    for (int a = 0; a < M.size(); ++a)
        for (int b = 0; b < M.size(); ++b) full = full && M.allowed(a, b);
    if (pot.kind == "zero") return log_spectral_radius(M);
    if (pot.kind == "constant") return log_spectral_radius(M) + pot.c;
    if (!full) return std::nullopt;
    if (pot.kind == "bernoulli") return 0.0;
    if (pot.kind == "locally-constant") return log_sum_exp(pot.values);
    if (pot.kind == "geometric") {
        if (sys.linear) {
            std::vector<double> v;
            for (const auto& p : sys.linear->pieces()) v.push_back(-pot.s * std::log(p.ratio));
            return log_sum_exp(v);
        }
        if (sys.doubling) {
            if (sys.doubling->delta() == 0.0) return (1 + pot.s) * kLn2;
            if (pot.s == -1.0) return 0.0;
        }
    }
    return std::nullopt;
}

// ---------------------------------------------------------------- measures and frequencies

MeasureConfig parse_measure(Node& params, int default_depth) {
    MeasureConfig m;
    m.kind = params.text("measure", "equilibrium", {"equilibrium", "lebesgue", "cantor-digits", "patterson-sullivan"});
    m.depth = static_cast<int>(params.integer("depth", default_depth, 1, 24));
    m.grid_points = static_cast<int>(params.integer("grid_points", 4096, 16, 1 << 16));
    m.bins = static_cast<int>(params.integer("bins", 32, 1, 1 << 16));
    return m;
}

BuiltMeasure build_measure(const MeasureConfig& m, int depth, const SystemHandle* sys, const PotentialHandle* pot) {
    BuiltMeasure b;
    if (m.kind == "lebesgue") {
        b.atoms = lebesgue_atoms(depth);
    } else if (m.kind == "cantor-digits") {
        b.atoms = cantor_atoms(depth);
    } else if (m.kind == "patterson-sullivan") {
        if (!sys || !sys->schottky) fail(ErrorKind::Schema, "patterson-sullivan measure needs a schottky system");
        b.ps = ps_measure(sys->schottky, depth, m.grid_points);
        b.atoms = b.ps->atoms;
    } else {
        if (!sys || !sys->branch || !pot) fail(ErrorKind::Schema, "equilibrium measure needs a system and a potential");
        EquilibriumOptions o;
        o.grid_points = m.grid_points;
        o.bins = std::min(m.bins, m.grid_points);
        auto r = equilibrium(sys->branch, pot->spec, depth, o);
        b.atoms = std::move(r.atoms);
        b.eq = std::move(r.data);
    }
    return b;
}

FrequencyGrid parse_frequencies(Node n) {
    std::string scheme = n.text("scheme", "dyadic", {"dyadic", "explicit", "integers"});
    FrequencyGrid g;
    if (scheme == "dyadic") {
        int lo = static_cast<int>(n.integer("j_min", 0, -60, 60));
        int hi = static_cast<int>(n.integer("j_max", 12, lo, 60));
        int per = static_cast<int>(n.integer("per_octave", 4, 1, 4096));
        double base = n.number("base", 2.0);
        if (!(base > 1)) fail(ErrorKind::Schema, n.path() + ".base: must exceed 1");
        g = FrequencyGrid::dyadic(lo, hi, per, base);
    } else if (scheme == "explicit") {
        auto v = n.numbers("values");
        double base = n.number("base", 2.0);
        if (v.empty()) fail(ErrorKind::Schema, n.path() + ".values: empty");
        for (double x : v)
            if (!(x > 0)) fail(ErrorKind::Schema, n.path() + ".values: frequencies must be positive");
        g = FrequencyGrid::explicit_values(v, base);
    } else {
        auto mx = n.integer("max", std::nullopt, 1, 1 << 24);
        std::vector<double> v;
        for (std::int64_t m = 1; m <= mx; ++m) v.push_back(static_cast<double>(m));
        g = FrequencyGrid::explicit_values(v, 2.0);
    }
    g.direction = n.number("direction", 0.0);
    n.close();
    return g;
}

Json complex_json(cplx z) { return Json::array({z.real(), z.imag()}); }

Json to_json(const DecayReport& r) {
    Json j = Json::object();
    j["scheme"] = r.grid.scheme;
    j["base"] = r.grid.base;
    j["grid_size"] = r.grid.size();
    j["window"] = {r.window_lo, r.window_hi};
    j["rho"] = r.rho ? Json(*r.rho) : Json(nullptr);
    j["intercept"] = r.intercept;
    j["r_squared"] = r.r_squared;
    j["truncation_bound"] = r.truncation_bound;
    j["truncation_limited"] = r.truncation_limited;
    j["octaves"] = r.octaves;
    j["octave_sup"] = r.octave_sup;
    return j;
}

// ---------------------------------------------------------------- plots

namespace {

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur += ch;
        }
    }
    out.push_back(cur);
    return out;
}

double parse_cell(const std::string& s) {
    double v = NAN;
    auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc() || r.ptr != s.data() + s.size()) return NAN;
    return v;
}

}  // namespace

void write_plots(const Json& report, const fs::path& series_dir, const fs::path& out_dir) {
    if (!report.contains("series") || !report["series"].is_array()) fail(ErrorKind::Domain, "report has no series list");
    for (const auto& s : report["series"]) {
        const auto& plots = s["plots"];
        if (plots.empty()) continue;
        const fs::path file = series_dir / s["file"].get<std::string>();
        std::ifstream in(file, std::ios::binary);
        if (!in) fail(ErrorKind::Domain, "missing series file " + file.string());
        std::string line;
        std::getline(in, line);
        auto header = split_csv(line);
        std::vector<std::vector<std::string>> rows;
        while (std::getline(in, line))
            if (!line.empty()) rows.push_back(split_csv(line));
        for (const auto& p : plots) {
            auto col = [&](const std::string& name) {
                auto it = std::find(header.begin(), header.end(), name);
                if (it == header.end()) fail(ErrorKind::Domain, "series " + file.string() + " lacks column " + name);
                return static_cast<std::size_t>(it - header.begin());
            };
            std::size_t cx = col(p["x"]), cy = col(p["y"]);
            bool lx = p["log2x"], ly = p["log2y"];
            std::ofstream out(out_dir / ("plot_" + p["name"].get<std::string>() + ".dat"), std::ios::binary);
            if (!out) fail(ErrorKind::Domain, "cannot write plot file in " + out_dir.string());
            std::string xs = p["x"], ys = p["y"];
            out << "# " << p["name"].get<std::string>() << " from " << s["file"].get<std::string>() << "\n";
            out << "# x: " << (lx ? "log2 " + xs : xs) << "\n";
            out << "# y: " << (ly ? "log2 " + ys : ys) << "\n";
            for (const auto& r : rows) {
                if (cx >= r.size() || cy >= r.size()) continue;
                double x = parse_cell(r[cx]), y = parse_cell(r[cy]);
                if (lx) x = x > 0 ? std::log2(x) : NAN;
                if (ly) y = y > 0 ? std::log2(y) : NAN;
                if (!std::isfinite(x) || !std::isfinite(y)) continue;
                out << format_double(x) << " " << format_double(y) << "\n";
            }
        }
    }
}

// ---------------------------------------------------------------- runner

namespace {

std::string utc_now() {
    std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void write_report(const fs::path& dir, const Json& report) {
    std::ofstream f(dir / "report.json", std::ios::binary);
    if (!f) fail(ErrorKind::Domain, "cannot write " + (dir / "report.json").string());
    f << report.dump(2) << "\n";
}

std::optional<unsigned> env_threads() {
    const char* e = std::getenv("FRACFOURIER_THREADS");
    if (!e || !*e) return std::nullopt;
    unsigned v = 0;
    auto r = std::from_chars(e, e + std::strlen(e), v);
    if (r.ec != std::errc() || *r.ptr != '\0' || v == 0)
        fail(ErrorKind::Schema, std::string("FRACFOURIER_THREADS must be a positive integer, got '") + e + "'");
    return v;
}

}  // namespace

std::vector<std::string> experiment_names() {
    std::vector<std::string> v;
    for (const auto& e : experiment_table()) v.push_back(e.name);
    return v;
}

int run(const RunOptions& opts) {
    const auto start = std::chrono::steady_clock::now();
    const ExperimentEntry* entry = nullptr;
    for (const auto& e : experiment_table())
        if (opts.experiment == e.name) entry = &e;
    Json cfg;
    fs::path out;
    std::optional<Node> root;
    std::optional<Context> ctx;
    try {
        if (!entry) fail(ErrorKind::Schema, "unknown experiment '" + opts.experiment + "'");
        std::ifstream in(opts.config_path, std::ios::binary);
        if (!in) fail(ErrorKind::Schema, "cannot read config " + opts.config_path);
        try {
            cfg = Json::parse(in);
        } catch (const nlohmann::json::parse_error& e) {
            fail(ErrorKind::Schema, "config is not valid JSON: " + std::string(e.what()));
        }
        root.emplace(&cfg, "config");
        std::string name = root->text("experiment");
        if (name != opts.experiment)
            fail(ErrorKind::Schema, "config.experiment is '" + name + "' but the subcommand is '" + opts.experiment + "'");
        ctx.emplace(*root);
        if (root->has("seed")) ctx->seed = root->unsigned_integer("seed");
        if (opts.seed) ctx->seed = opts.seed;
        std::string dir = root->has("output") ? root->text("output") : ".";
        root->resolved.erase("output");
        out = opts.out_dir ? fs::path(*opts.out_dir) : fs::path(dir);
        std::optional<unsigned> th = opts.threads ? opts.threads : env_threads();
        set_thread_count(th ? *th : std::max(1u, std::thread::hardware_concurrency()));
        std::error_code ec;
        fs::create_directories(out, ec);
        if (ec) fail(ErrorKind::Schema, "cannot create output directory " + out.string() + ": " + ec.message());
        ctx->series = std::make_unique<SeriesWriter>(out, ctx->ledger);
    } catch (const Error& e) {
        std::cerr << "error: " << to_string(e.kind()) << ": " << e.what() << "\n";
        return kExitSchema;
    }

    std::optional<Error> failure;
    try {
        entry->fn(*ctx);
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::Schema) {
            std::cerr << "error: " << to_string(e.kind()) << ": " << e.what() << "\n";
            return kExitSchema;
        }
        failure = e;
    } catch (const std::exception& e) {
        failure = Error(ErrorKind::Domain, e.what());
    }
    if (failure && failure->kind() == ErrorKind::Contract)
        ctx->ledger.contract("module contract", false, {{"message", failure->what()}});

    Json report = Json::object();
    report["tool"] = {{"name", "fracfourier"}, {"version", kToolVersion}};
    report["experiment"] = opts.experiment;
    report["seed"] = ctx->seed ? Json(*ctx->seed) : Json(nullptr);
    report["config"] = cfg;
    report["resolved"] = root->resolved;
    report["payload"] = ctx->payload;
    report["series"] = ctx->series->meta();
    report["ledger"] = ctx->ledger.entries();
    int code = kExitOk;
    if (failure && failure->kind() != ErrorKind::Contract) {
        report["status"] = "error";
        report["error"] = {{"kind", to_string(failure->kind())}, {"message", failure->what()}};
        code = kExitError;
    } else {
        report["status"] = ctx->ledger.ok() ? "ok" : "contract-violation";
        code = ctx->ledger.ok() ? kExitOk : kExitContract;
    }
    double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    report["timestamp"] = {{"utc", utc_now()}, {"wall_seconds", wall}};
    try {
        write_report(out, report);
        write_plots(report, out, out);
    } catch (const Error& e) {
        std::cerr << "error: " << to_string(e.kind()) << ": " << e.what() << "\n";
        return kExitError;
    }
    if (failure) std::cerr << "error: " << to_string(failure->kind()) << ": " << failure->what() << "\n";
    if (code == kExitContract) {
        std::cerr << "contract violations:\n";
        for (const auto& e : ctx->ledger.entries())
            if (e["kind"] == "contract" && e["status"] == "fail") std::cerr << "  FAIL " << e["name"].get<std::string>() << "\n";
    }
    return code;
}

int plotdata(const std::string& report_path, const std::optional<std::string>& out_dir) {
    try {
        std::ifstream in(report_path, std::ios::binary);
        if (!in) fail(ErrorKind::Domain, "missing report " + report_path);
        Json report;
        try {
            report = Json::parse(in);
        } catch (const nlohmann::json::parse_error& e) {
            fail(ErrorKind::Domain, "report is not valid JSON: " + std::string(e.what()));
        }
        fs::path dir = fs::path(report_path).parent_path();
        if (dir.empty()) dir = ".";
        fs::path out = out_dir ? fs::path(*out_dir) : dir;
        std::error_code ec;
        fs::create_directories(out, ec);
        write_plots(report, dir, out);
    } catch (const Error& e) {
        std::cerr << "error: " << to_string(e.kind()) << ": " << e.what() << "\n";
        return kExitError;
    }
    return kExitOk;
}

int main(int argc, char** argv) {
    CLI::App app{"fracfourier: fractal measures, transfer operators and Fourier decay experiments"};
    app.require_subcommand(1);
    struct Sub {
        CLI::App* app;
        RunOptions opts;
        std::uint64_t seed = 0;
        unsigned threads = 0;
        std::string out;
    };
    std::vector<std::unique_ptr<Sub>> subs;
    for (const auto& e : experiment_table()) {
        auto s = std::make_unique<Sub>();
        s->opts.experiment = e.name;
        s->app = app.add_subcommand(e.name, e.summary);
        s->app->add_option("--config", s->opts.config_path, "experiment config (JSON)")->required();
        s->app->add_option("--out", s->out, "output directory");
        s->app->add_option("--seed", s->seed, "seed for stochastic experiments");
        s->app->add_option("--threads", s->threads, "worker threads")->check(CLI::PositiveNumber);
        subs.push_back(std::move(s));
    }
    std::string report, plot_out;
    CLI::App* plot = app.add_subcommand("plotdata", "write plot_*.dat files for a report");
    plot->add_option("--report", report, "path of report.json")->required();
    plot->add_option("--out", plot_out, "output directory (default: the report's directory)");
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int r = app.exit(e);
        return r == 0 ? kExitOk : kExitSchema;
    }
    if (plot->parsed()) return plotdata(report, plot_out.empty() ? std::nullopt : std::optional<std::string>(plot_out));
    for (auto& s : subs) {
        if (!s->app->parsed()) continue;
        if (s->app->count("--out")) s->opts.out_dir = s->out;
        if (s->app->count("--seed")) s->opts.seed = s->seed;
        if (s->app->count("--threads")) s->opts.threads = s->threads;
        return run(s->opts);
    }
    return kExitSchema;
}

}  // namespace fracfourier::cli
