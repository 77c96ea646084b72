// Acceptance run: one PASS/FAIL line per criterion, through the command-line tool
// where the criterion is about its reports, and through the library for oracles.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <unistd.h>
#include <vector>

#include "json.hpp"

#include "fracfourier/fourier.hpp"
#include "fracfourier/systems.hpp"
#include "fracfourier/thermo.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using Json = nlohmann::json;

namespace {

fs::path work_dir() {
    static fs::path d = [] {
        fs::path p = fs::temp_directory_path() / ("fracfourier_acceptance_" + std::to_string(::getpid()));
        fs::remove_all(p);
        fs::create_directories(p);
        return p;
    }();
    return d;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

struct Run {
    int code = -1;
    double seconds = 0;
    fs::path dir;
    Json report;
};

Run cli(const std::string& sub, const Json& cfg, const std::string& name, const std::string& extra = "") {
    Run r;
    r.dir = work_dir() / name;
    fs::path cfg_path = work_dir() / (name + ".json");
    std::ofstream(cfg_path) << cfg.dump();
    std::string cmd = std::string(FRACFOURIER_BIN) + " " + sub + " --config " + cfg_path.string() + " --out " +
                      r.dir.string() + " " + extra + " > " + (work_dir() / (name + ".log")).string() + " 2>&1";
    auto t0 = std::chrono::steady_clock::now();
    int st = std::system(cmd.c_str());
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    r.code = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
    if (fs::exists(r.dir / "report.json")) r.report = Json::parse(slurp(r.dir / "report.json"));
    return r;
}

const Json& entry(const Run& r, const std::string& name) {
    static const Json missing = Json::object();
    for (const auto& e : r.report["ledger"])
        if (e["name"] == name) return e;
    return missing;
}

bool ok(const Run& r, const std::string& name) { return entry(r, name).value("status", "") == "pass"; }

double num(const Json& j) { return j.is_number() ? j.get<double>() : NAN; }

std::string fmt(double v) {
    char b[32];
    std::snprintf(b, sizeof b, "%.4g", v);
    return b;
}

// accumulates sub-checks of one criterion
struct Verdict {
    bool pass = true;
    std::string detail;
    void check(bool c, const std::string& what) {
        if (!c) pass = false;
        if (!detail.empty()) detail += "; ";
        detail += (c ? "" : "NOT ") + what;
    }
};

std::vector<double> csv_column(const fs::path& p, const std::string& col) {
    std::ifstream in(p);
    std::string line, cell;
    std::getline(in, line);
    std::stringstream h(line);
    int idx = -1, i = 0;
    while (std::getline(h, cell, ',')) {
        if (cell == col) idx = i;
        ++i;
    }
    std::vector<double> out;
    while (std::getline(in, line)) {
        std::stringstream row(line);
        for (int k = 0; std::getline(row, cell, ','); ++k)
            if (k == idx) out.push_back(std::strtod(cell.c_str(), nullptr));
    }
    return out;
}

Json doubling(double delta) { return {{"name", "doubling"}, {"delta", delta}}; }

Json schottky(double length) {
    return {{"name", "schottky"},
            {"generators", Json::array({{{"axis", 0.0}, {"length", length}}, {{"axis", M_PI / 2}, {"length", length}}})}};
}

// ---------------------------------------------------------------- criteria

Verdict pressure_basics() {
    Verdict v;
    Run a = cli("pressure", {{"experiment", "pressure"}, {"system", {{"name", "halves"}}}, {"potential", {{"name", "zero"}}}},
                "c1_shift");
    v.check(a.code == 0, "exit 0");
    v.check(std::fabs(num(a.report["payload"]["pressure"]) - std::log(2.0)) <= 1e-9, "P(0) = ln 2");
    v.check(ok(a, "P(phi + c) - P(phi) = c"), "shift identity for 3 constants");
    v.check(a.report["resolved"]["params"]["shifts"].size() == 3, "3 shifts");
    v.check(a.seconds < 5, "full shift in " + fmt(a.seconds) + " s");
    Run b = cli("pressure",
                {{"experiment", "pressure"}, {"system", doubling(0.05)}, {"potential", {{"name", "geometric"}, {"s", -1.0}}}},
                "c1_geom");
    v.check(b.code == 0, "exit 0");
    double p = num(b.report["payload"]["pressure"]);
    v.check(std::fabs(p) <= 1e-8, "P(-log f') = " + fmt(p));
    v.check(ok(b, "P(phi + c) - P(phi) = c"), "shift identity on the perturbed map");
    v.check(b.seconds < 5, "perturbed map in " + fmt(b.seconds) + " s");
    return v;
}

Verdict gibbs() {
    Verdict v;
    Run r = cli("equilibrium",
                {{"experiment", "equilibrium"},
                 {"system", doubling(0.05)},
                 {"potential", {{"name", "geometric"}, {"normalize", true}}},
                 {"params", {{"depth", 14}, {"gibbs_depths", {8, 10, 12, 14}}}}},
                "c2");
    v.check(r.code == 0, "exit 0");
    const Json& e = entry(r, "Gibbs constant stable across depths");
    double var = num(e["variation"]);
    v.check(e.value("status", "") == "pass" && var < 0.1, "variation " + fmt(var) + " < 10%");
    v.check(r.seconds < 60, fmt(r.seconds) + " s");
    return v;
}

Verdict cantor() {
    Verdict v;
    Json freqs = Json::array();
    for (int k = 0; k <= 12; ++k) freqs.push_back(std::pow(3.0, k));
    Run r = cli("fourier-decay",
                {{"experiment", "fourier-decay"},
                 {"params",
                  {{"measure", "cantor-digits"},
                   {"depth", 20},
                   {"frequencies", {{"scheme", "explicit"}, {"values", freqs}, {"base", 3}}},
                   {"window", {{"lo", 0}, {"hi", 12}}},
                   {"regularity_radii", {1e-4, 3e-4, 1e-3, 3e-3, 1e-2, 3e-2}}}}},
                "c3");
    v.check(r.code == 0, "exit 0");
    v.check(ok(r, "|transform(3^k) - transform(1)| <= 2 pi 3^(k-m)"), "tripling invariance");
    double rho = num(r.report["payload"]["decay"]["rho"]);
    v.check(std::fabs(rho) <= 0.05, "rho = " + fmt(rho));
    double reg = num(r.report["payload"]["regularity"]["exponent"]);
    v.check(std::fabs(reg - std::log(2.0) / std::log(3.0)) <= 0.05, "regularity " + fmt(reg));
    // transform column against the product formula
    auto mod = csv_column(r.dir / "series_decay.csv", "modulus");
    double worst = 0;
    for (std::size_t k = 0; k < mod.size(); ++k)
        worst = std::max(worst, std::fabs(mod[k] - std::abs(oracle::cantor_transform(std::pow(3.0, k), 20))));
    v.check(mod.size() == 13 && worst < 1e-9, "product formula error " + fmt(worst));
    v.check(r.seconds < 30, fmt(r.seconds) + " s");
    return v;
}

Verdict linear_doubling() {
    Verdict v;
    Run a = cli("equilibrium",
                {{"experiment", "equilibrium"}, {"system", doubling(0.0)}, {"potential", {{"name", "zero"}}}, {"params", {{"depth", 14}}}},
                "c4_eq");
    v.check(a.code == 0 && ok(a, "weights equal k^-n for the linear map"), "weights 2^-n");
    double err = num(a.report["payload"]["uniform_weight_error"]);
    v.check(err == 0.0, "weight error " + fmt(err));
    Run b = cli("fourier-decay",
                {{"experiment", "fourier-decay"},
                 {"params", {{"measure", "lebesgue"}, {"depth", 12}, {"frequencies", {{"scheme", "integers"}, {"max", 300}}}}}},
                "c4_leb");
    const Json& e = entry(b, "Lebesgue atoms vanish at resolved integers");
    v.check(b.code == 0 && e.value("status", "") == "pass", "Lebesgue transform vanishes at integers");
    auto mod = csv_column(b.dir / "series_decay.csv", "modulus");
    double worst = 0;
    for (double m : mod) worst = std::max(worst, m);
    v.check(!mod.empty() && worst <= 1e-10, "max |mu(m)| = " + fmt(worst));
    return v;
}

Verdict uni() {
    Verdict v;
    Run a = cli("uni-check", {{"experiment", "uni-check"}, {"system", doubling(0.05)}, {"params", {{"n", {6, 7, 8, 9, 10}}}}},
                "c5_uni");
    double c0 = num(a.report["payload"]["c0_hat_min"]);
    v.check(a.code == 0 && ok(a, "c0_hat bounded below across n") && c0 > 0, "c0_hat min " + fmt(c0));
    Run b = cli("tree-bound", {{"experiment", "tree-bound"}, {"system", doubling(0.05)}, {"params", {{"n", 12}}}}, "c5_tree");
    std::size_t checks = b.report["payload"].value("checks", 0);
    v.check(b.code == 0 && ok(b, "tree-lemma bound holds on the sweep"), "tree bound holds");
    v.check(checks == 16 * 6 * 8, std::to_string(checks) + " sweep points");
    v.check(a.seconds + b.seconds < 600, fmt(a.seconds + b.seconds) + " s");
    return v;
}

Verdict derivative() {
    Verdict v;
    auto ratios_in_band = [](const Run& r) {
        const Json& q = r.report["payload"]["derivative"]["ratios"];
        bool in = q.size() >= 2;
        for (const auto& x : q) in = in && num(x) >= 0.3 && num(x) <= 0.7;
        return in;
    };
    Run a = cli("pressure",
                Json::parse(R"({"experiment":"pressure","system":{"name":"halves"},
                    "potential":{"name":"bernoulli","p":0.3},
                    "params":{"derivative":{"psi":{"name":"locally-constant","values":[1.0,-0.5]}}}})"),
                "c6_bern");
    double integral = num(a.report["payload"]["derivative"]["integral"]);
    double exact = oracle::bernoulli_derivative({0.3, 0.7}, {1.0, -0.5}, 0.0);
    v.check(a.code == 0 && ratios_in_band(a), "Bernoulli ratios in [0.3, 0.7]");
    v.check(std::fabs(integral - exact) <= 1e-6, "Bernoulli integral error " + fmt(std::fabs(integral - exact)));
    Run b = cli("pressure",
                Json::parse(R"({"experiment":"pressure","system":{"name":"doubling","delta":0.05},
                    "potential":{"name":"geometric","s":-1},
                    "params":{"derivative":{"psi":{"name":"periodic","function":"cos"}}}})"),
                "c6_geom");
    v.check(b.code == 0 && ratios_in_band(b), "geometric/periodic ratios in [0.3, 0.7]");
    return v;
}

Verdict large_deviations() {
    Verdict v;
    Run r = cli("equilibrium",
                Json::parse(R"({"experiment":"equilibrium","system":{"name":"doubling","delta":0.05},
                    "potential":{"name":"geometric","normalize":true},
                    "params":{"depth":17,"large_deviation":{"psi":{"name":"smoothed-indicator"}}}})"),
                "c7");
    const Json& ld = r.report["payload"]["large_deviation"];
    double rate = num(ld["rate"]), r2 = num(ld["r_squared"]);
    v.check(r.code == 0 && ok(r, "large deviation rate positive with r^2 >= 0.9"),
            "rate " + fmt(rate) + ", r^2 " + fmt(r2));
    // the probe against exact cylinder counts on the linear map
    auto sys = fracfourier::LinearIFS::halves();
    auto eq = fracfourier::equilibrium(sys, fracfourier::constant_potential(0.0), 17);
    std::vector<int> ns;
    for (int n = 6; n <= 16; ++n) ns.push_back(n);
    auto probe = fracfourier::large_deviation_probe(*sys, eq.data, fracfourier::locally_constant({1.0, 0.0}), 0.15, ns);
    double worst = 0;
    for (std::size_t i = 0; i < ns.size(); ++i) worst = std::max(worst, std::fabs(probe.mass[i] - oracle::binomial_tail(ns[i], 0.15)));
    v.check(worst <= 1e-14, "binomial tail error " + fmt(worst));
    return v;
}

Verdict solenoid_closed_forms(const Run& q) {
    Verdict v;
    v.check(ok(q, "periodic point returns after N steps"), "periodic returns");
    v.check(ok(q, "closed-form Lyapunov matches the orbit product"), "Lyapunov closed form");
    v.check(ok(q, "det dF^N equals 16^-N prod f'"), "determinant closed form");
    auto N = csv_column(q.dir / "series_solenoid_periodic.csv", "N");
    v.check(N == std::vector<double>{2, 3, 4, 5, 6}, "N = 2..6");
    return v;
}

Verdict qnl(const Run& a, const Run& b) {
    Verdict v;
    for (const Run* r : {&a, &b}) {
        std::string s = "seed " + std::to_string(r->report.value("seed", 0));
        v.check(r->code == 0, s + " exit 0");
        const Json& self = entry(*r, "Delta(p,p) = 0");
        v.check(self.value("status", "") == "pass" && self.value("pairs", 0) >= 1000, s + " Delta(p,p) = 0 on 1000 pairs");
        v.check(ok(*r, "Delta symmetric"), s + " symmetric");
        v.check(ok(*r, "linear base gives Delta = 0"), s + " linear base");
        v.check(ok(*r, "doubling K moves Delta by less than the tail bound"), s + " depth doubling");
        const Json& g = entry(*r, "QNL exponent positive with bootstrap interval above 0");
        v.check(g.value("status", "") == "pass",
                s + " gamma " + fmt(num(g["gamma"])) + " in [" + fmt(num(g["lo"])) + ", " + fmt(num(g["hi"])) + "]");
    }
    v.check(a.seconds + b.seconds < 300, fmt(a.seconds + b.seconds) + " s");
    return v;
}

Verdict sum_product() {
    Verdict v;
    Run a = cli("conv-power", {{"experiment", "conv-power"}, {"params", {{"k", 3}}}}, "c10_k3");
    Run b = cli("conv-power", {{"experiment", "conv-power"}, {"params", {{"k", 1}}}}, "c10_k1");
    v.check(a.code == 0 && ok(a, "modulus decreases as h decreases (one inversion allowed)"), "decreasing");
    double e = num(a.report["payload"]["exponent_in_h"]);
    v.check(ok(a, "fitted exponent in h positive") && e > 0, "exponent " + fmt(e));
    double e1 = num(b.report["payload"]["exponent_in_h"]);
    v.check(b.code == 0 && std::fabs(e1) < 1e-9, "k = 1 exponent " + fmt(e1));
    auto h = csv_column(a.dir / "series_conv_power.csv", "h");
    auto m = csv_column(a.dir / "series_conv_power.csv", "modulus");
    double worst = 0;
    int compared = 0;
    for (std::size_t i = 0; i < h.size() && compared < 2; ++i, ++compared)
        worst = std::max(worst, std::fabs(m[i] - oracle::sum_product_modulus(h[i], 3)));
    v.check(compared == 2 && worst < 1e-12, "integer-exact oracle at 2 h, error " + fmt(worst));
    return v;
}

Verdict exp_sum() {
    Verdict v;
    Run a = cli("exp-sum", {{"experiment", "exp-sum"}, {"system", doubling(0.0)}, {"seed", 7}, {"params", {{"n", 8}, {"k", 2}}}},
                "c11_lin");
    v.check(a.code == 0 && ok(a, "linear map gives modulus 1"), "delta 0 modulus 1");
    Run b = cli("exp-sum", {{"experiment", "exp-sum"}, {"system", doubling(0.05)}, {"seed", 7}, {"params", {{"n", 8}, {"k", 2}}}},
                "c11");
    double mx = num(b.report["payload"]["max_mean_modulus"]);
    v.check(b.code == 0 && mx < 0.9, "mean modulus " + fmt(mx) + " < 0.9");
    v.check(ok(b, "A-averaged modulus decreases across the window"), "decreasing trend");
    return v;
}

Verdict twisted() {
    Verdict v;
    Json base = {{"experiment", "twisted-contraction"}, {"system", doubling(0.05)}};
    Json zero = base;
    zero["params"] = {{"xi", 0.0}};
    Run a = cli("twisted-contraction", zero, "c12_xi0");
    v.check(a.code == 0 && ok(a, "untwisted normalized operator keeps |L^n 1| = 1"), "xi = 0 norm 1");
    Json lin = base;
    lin["system"] = doubling(0.0);
    Run b = cli("twisted-contraction", lin, "c12_lin");
    double rl = num(b.report["payload"]["rho"][0]);
    v.check(b.code == 0 && ok(b, "linear map shows no contraction") && std::fabs(rl - 1) <= 1e-6, "linear rho " + fmt(rl));
    Run c = cli("twisted-contraction", base, "c12");
    const Json& rho = c.report["payload"]["rho"];
    double r0 = num(rho[0]), r1 = num(rho[1]);
    v.check(c.code == 0 && r0 < 1 && r1 < 1 && std::fabs(r0 - r1) <= 0.05,
            "xi = 40 rho " + fmt(r0) + ", " + fmt(r1));
    return v;
}

Verdict geometry(const Run& ps) {
    Verdict v;
    v.check(ok(ps, "group law: word of w1 w2 equals the product (relative to |a||b|)"), "group law (matrices)");
    v.check(ok(ps, "group law: product acts as the composition on the disk"), "group law (action)");
    v.check(ok(ps, "tau_b(0) = b"), "tau_b(0) = b");
    v.check(ok(ps, "q-form preserved (relative to |M|^2)"), "q-form");
    v.check(ok(ps, "visual distance ratio within e^{+-d(x,y)}"), "visual band");
    v.check(ok(ps, "contraction constant c stable across scales (spread <= 20%)"), "contraction stable at 3 scales");
    return v;
}

Verdict ps_measure(const Run& ps) {
    Verdict v;
    const Json& sh = entry(ps, "shadow constant finite and stable across lengths (spread <= 10%)");
    v.check(sh.value("status", "") == "pass" && sh["C"].size() == 4, "shadow C stable over lengths 3..6");
    const Json& tv = entry(ps, "conformality TV within tolerance");
    v.check(tv.value("status", "") == "pass", "TV " + fmt(num(tv["tv"])) + " <= 0.02");
    v.check(ok(ps, "conformality TV decreasing with depth"), "TV decreasing with depth");
    const Json& box = entry(ps, "pressure root within 0.05 of the box-counting dimension");
    v.check(box.value("status", "") == "pass", "delta " + fmt(num(box["delta"])) + " vs box " + fmt(num(box["box"])));
    return v;
}

Verdict stationary() {
    Verdict v;
    Run r = cli("stationary-fit", {{"experiment", "stationary-fit"}, {"system", schottky(3.0)}}, "c15");
    v.check(r.code == 0, "exit " + std::to_string(r.code));
    v.check(ok(r, "sup R_n <= (1 - beta/A^2)^n at every level"), "bound_ok");
    v.check(ok(r, "sum nu + int R_n dmu = 1"), "mass identity");
    const Json& chk = entry(r, "check_stationary <= residual + conformality tolerance");
    v.check(chk.value("status", "") == "pass", "check " + fmt(num(chk["discrepancy"])) + " <= " + fmt(num(chk["residual"])));
    v.check(r.report["resolved"]["params"].value("modes", 0) <= 32 &&
                csv_column(r.dir / "series_stationary_modes.csv", "mode").size() == 33,
            "m <= 32");
    v.check(ok(r, "exponential moment finite and stable under n_max + 1"), "moment stable");
    v.check(r.seconds < 600, fmt(r.seconds) + " s");
    return v;
}

Verdict determinism() {
    Verdict v;
    auto strip = [](const fs::path& p) {
        Json j = Json::parse(slurp(p));
        j.erase("timestamp");
        return j.dump();
    };
    struct Case {
        std::string sub;
        Json cfg;
    };
    std::vector<Case> cases = {
        {"qnl", {{"experiment", "qnl"}, {"system", {{"name", "solenoid"}}}, {"seed", 5}, {"params", {{"pairs", 5000}}}}},
        {"bms-decay", {{"experiment", "bms-decay"}, {"system", schottky(2.5)}, {"seed", 5}}},
        {"zeta-collisions", {{"experiment", "zeta-collisions"}, {"system", doubling(0.05)}, {"seed", 3}}},
    };
    int i = 0;
    for (const auto& c : cases) {
        Run a = cli(c.sub, c.cfg, "c16_" + std::to_string(i) + "a", "--threads 1");
        Run b = cli(c.sub, c.cfg, "c16_" + std::to_string(i) + "b", "--threads 4");
        bool same = a.code == b.code && strip(a.dir / "report.json") == strip(b.dir / "report.json");
        for (const auto& e : fs::directory_iterator(a.dir)) {
            std::string name = e.path().filename().string();
            if (name != "report.json") same = same && slurp(e.path()) == slurp(b.dir / name);
        }
        v.check(same, c.sub + " identical across runs and thread counts");
        ++i;
    }
    return v;
}

}  // namespace

int main() {
    struct Item {
        int id;
        const char* title;
        std::function<Verdict()> run;
    };
    // shared runs for criteria that read the same report
    Run q1, q2, ps;
    auto need_qnl = [&] {
        if (q1.code < 0) {
            Json cfg = {{"experiment", "qnl"}, {"system", {{"name", "solenoid"}}}};
            cfg["seed"] = 11;
            q1 = cli("qnl", cfg, "c9_seed11");
            cfg["seed"] = 12;
            q2 = cli("qnl", cfg, "c9_seed12");
        }
    };
    auto need_ps = [&] {
        if (ps.code < 0) ps = cli("ps-measure", {{"experiment", "ps-measure"}, {"system", schottky(2.5)}, {"seed", 5}}, "c13");
    };
    std::vector<Item> items = {
        {1, "pressure basics", pressure_basics},
        {2, "Gibbs constant across depths", gibbs},
        {3, "Cantor transform, decay fit and regularity", cantor},
        {4, "linear doubling weights and Lebesgue zeros", linear_doubling},
        {5, "UNI lower bound and tree bound", uni},
        {6, "pressure derivative", derivative},
        {7, "large deviations", large_deviations},
        {8, "solenoid closed forms", [&] { need_qnl(); return solenoid_closed_forms(q1); }},
        {9, "temporal distance and QNL", [&] { need_qnl(); return qnl(q1, q2); }},
        {10, "sum-product decay", sum_product},
        {11, "exponential sums", exp_sum},
        {12, "twisted contraction", twisted},
        {13, "hyperbolic geometry audit", [&] { need_ps(); return geometry(ps); }},
        {14, "Patterson-Sullivan measure", [&] { need_ps(); return ps_measure(ps); }},
        {15, "stationary synthesis", stationary},
        {16, "determinism", determinism},
    };
    int failed = 0;
    for (const auto& it : items) {
        Verdict v;
        auto t0 = std::chrono::steady_clock::now();
        try {
            v = it.run();
        } catch (const std::exception& e) {
            v.pass = false;
            v.detail = std::string("exception: ") + e.what();
        }
        double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::printf("%s %2d %s [%s] (%.1f s)\n", v.pass ? "PASS" : "FAIL", it.id, it.title, v.detail.c_str(), s);
        std::fflush(stdout);
        if (!v.pass) ++failed;
    }
    std::printf("%d of %zu criteria pass\n", static_cast<int>(items.size()) - failed, items.size());
    fs::remove_all(work_dir());
    return failed == 0 ? 0 : 1;
}
