#include <algorithm>
#include <numeric>

#include "cli_internal.hpp"
#include "fracfourier/nonconc.hpp"

namespace fracfourier::cli {

namespace {

using Strings = std::vector<std::string>;

const Strings kBranchSystems{"doubling", "cantor", "halves", "linear", "julia", "schottky"};

std::vector<int> to_ints(const std::vector<std::int64_t>& v) {
    std::vector<int> out;
    for (auto x : v) out.push_back(static_cast<int>(x));
    return out;
}

std::string word_text(const std::vector<int>& w) {
    std::string s;
    for (std::size_t i = 0; i < w.size(); ++i) s += (i ? "-" : "") + std::to_string(w[i]);
    return s;
}

double max_abs(const std::vector<double>& v) {
    double m = 0;
    for (double x : v) m = std::max(m, std::fabs(x));
    return m;
}

// fit window defaults to the grid's octave range
std::pair<int, int> parse_window(Node& p, const FrequencyGrid& g) {
    int lo = *std::min_element(g.octave.begin(), g.octave.end());
    int hi = *std::max_element(g.octave.begin(), g.octave.end());
    Node w = p.child("window");
    lo = static_cast<int>(w.integer("lo", lo, -60, 60));
    hi = static_cast<int>(w.integer("hi", hi, lo, 60));
    w.close();
    return {lo, hi};
}

struct OptionalSystem {
    std::optional<SystemConfig> sys;
    std::optional<PotentialConfig> pot;
};

// system and potential are needed only by some measure kinds
OptionalSystem parse_measure_source(Context& c, const MeasureConfig& m) {
    OptionalSystem o;
    if (m.kind == "equilibrium") {
        o.sys = parse_system(c.root.child("system"), kBranchSystems);
        o.pot = parse_potential(c.root.child("potential"));
    } else if (m.kind == "patterson-sullivan") {
        o.sys = parse_system(c.root.child("system"), {"schottky"});
    }
    return o;
}

BuiltMeasure measure_from(const MeasureConfig& m, int depth, const OptionalSystem& src) {
    std::optional<SystemHandle> sys;
    std::optional<PotentialHandle> pot;
    if (src.sys) sys = build_system(*src.sys);
    if (src.pot) pot = build_potential(*src.pot, *sys, m.grid_points);
    return build_measure(m, depth, sys ? &*sys : nullptr, pot ? &*pot : nullptr);
}

void mass_contract(Context& c, const AtomicMeasure& mu, const std::string& what) {
    double err = std::fabs(mu.total_mass() - 1);
    c.ledger.contract(what + " weights sum to 1", err <= 1e-10, {{"error", err}, {"tolerance", 1e-10}});
}

// ---------------------------------------------------------------- pressure

void run_pressure(Context& c) {
    auto sc = parse_system(c.root.child("system"), kBranchSystems);
    auto pc = parse_potential(c.root.child("potential"));
    Node p = c.root.child("params");
    int n_max = static_cast<int>(p.integer("n_max", 14, 4, 24));
    double tol = p.number("tol", 1e-9);
    int G = static_cast<int>(p.integer("grid_points", 4096, 16, 1 << 16));
    auto shifts = p.numbers("shifts", std::vector<double>{0.5, -1.0, 2.25});
    double op_tol = p.number("operator_tolerance", 1e-6);
    bool want_dim = p.boolean("dimension", false);
    std::optional<PotentialConfig> psi;
    std::vector<double> ts;
    if (p.has("derivative")) {
        Node d = p.child("derivative");
        psi = parse_potential(d.child("psi"), "constant");
        ts = d.numbers("t", std::vector<double>{1e-2, 5e-3, 2.5e-3});
        d.close();
        for (double t : ts)
            if (!(t > 0)) fail(ErrorKind::Schema, "config.params.derivative.t: steps must be positive");
    }
    p.close();
    c.root.close();

    auto sys = build_system(sc);
    auto pot = build_potential(pc, sys, G);
    Json& out = c.payload;
    out["system"] = sys.branch->name();
    out["potential"] = pot.spec.label;
    if (pc.normalize) out["normalize_defect"] = pot.normalize_defect;

    PressureResult P = pressure(*sys.branch, pot.spec, n_max, tol);
    out["pressure"] = P.value;
    out["converged"] = P.converged;
    out["n_used"] = P.n_used;
    out["rate"] = P.rate;
    c.ledger.observe("pressure extrapolation converged", P.converged, {{"n_used", P.n_used}, {"rate", P.rate}});

    TransferOperator L(*sys.branch, pot.spec, G);
    EigenData eig = leading_eigen(L);
    out["operator_pressure"] = eig.pressure;
    out["operator_residual"] = std::max(eig.residual_h, eig.residual_m);
    double op_err = std::fabs(eig.pressure - P.value);
    c.ledger.contract("word-sum pressure matches the discretized operator", op_err <= op_tol,
                      {{"error", op_err}, {"tolerance", op_tol}});

    std::vector<double> idx;
    for (std::size_t i = 0; i < P.sequence.size(); ++i) idx.push_back(static_cast<double>(i + 1));
    c.series->add("pressure_sequence", P.sequence.size(), {Column("n", idx), Column("q", P.sequence)});

    if (auto cf = closed_form_pressure(sys, pc)) {
        double err = std::fabs(P.value - *cf);
        out["closed_form"] = *cf;
        c.ledger.contract("pressure equals its closed form", err <= 1e-6, {{"error", err}, {"tolerance", 1e-6}});
    }

    std::vector<double> dp, derr;
    for (double s : shifts) {
        PressureResult Ps = pressure(*sys.branch, add(pot.spec, constant_potential(s)), n_max, tol);
        dp.push_back(Ps.value - P.value);
        derr.push_back(std::fabs(Ps.value - P.value - s));
    }
    double shift_err = max_abs(derr);
    c.ledger.contract("P(phi + c) - P(phi) = c", shift_err <= 1e-8, {{"max_error", shift_err}, {"tolerance", 1e-8}});
    c.series->add("pressure_shifts", shifts.size(), {Column("c", shifts), Column("delta_P", dp), Column("error", derr)});

    if (want_dim) {
        DimensionResult d = dimension_root(*sys.branch, n_max);
        out["dimension"] = {{"delta", d.delta}, {"pressure_at_root", d.pressure_at_root},
                            {"bisection_steps", d.bisection_steps}, {"monotone", d.monotone}};
        c.ledger.contract("pressure monotone along the dimension bisection", d.monotone);
        std::optional<double> oracle;
        if (sys.linear) {
            auto pieces = sys.linear->pieces();
            oracle = bisect(
                [&](double s) {
                    double t = 0;
                    for (const auto& q : pieces) t += std::pow(q.ratio, s);
                    return 1 - t;
                },
                0.0, 10.0, 1e-14);
        } else if (sys.doubling) {
            oracle = 1.0;
        }
        if (oracle) {
            double err = std::fabs(d.delta - *oracle);
            out["dimension"]["closed_form"] = *oracle;
            c.ledger.contract("dimension root equals its closed form", err <= 1e-5, {{"error", err}, {"tolerance", 1e-5}});
        }
    }

    if (psi) {
        auto q = build_potential(*psi, sys, G);
        PressureDerivativeCheck chk(sys.branch, pot.spec, q.spec, n_max);
        std::vector<double> fd, in, dis;
        for (double t : ts) {
            PressureDerivative r = chk.at(t);
            fd.push_back(r.finite_difference);
            in.push_back(r.integral);
            dis.push_back(r.discrepancy);
        }
        Json d = Json::object();
        d["integral"] = chk.integral();
        std::optional<double> closed;
        if (psi->kind == "constant") closed = psi->c;
        if (pc.kind == "bernoulli" && psi->kind == "locally-constant" && psi->values.size() == 2)
            closed = pc.p * psi->values[0] + (1 - pc.p) * psi->values[1];
        if (closed) {
            double err = std::fabs(chk.integral() - *closed);
            d["closed_form"] = *closed;
            c.ledger.contract("integral of psi equals its closed form", err <= 1e-6, {{"error", err}, {"tolerance", 1e-6}});
        }
        bool exact = max_abs(dis) <= 1e-6;
        bool halves = true;
        std::vector<double> ratios;
        for (std::size_t i = 1; i < dis.size(); ++i) {
            double r = dis[i] / dis[i - 1];
            ratios.push_back(r);
            halves = halves && r >= 0.3 && r <= 0.7;
        }
        d["ratios"] = ratios;
        d["exact"] = exact;
        out["derivative"] = d;
        c.ledger.contract("pressure derivative discrepancy is O(t)", exact || halves,
                          {{"exact", exact}, {"ratios", ratios}, {"band", {0.3, 0.7}}});
        c.series->add("pressure_derivative", ts.size(),
                      {Column("t", ts), Column("finite_difference", fd), Column("integral", in), Column("discrepancy", dis)},
                      {{"derivative_discrepancy", "t", "discrepancy", true, true}});
    }
}

// ---------------------------------------------------------------- equilibrium

void run_equilibrium(Context& c) {
    auto sc = parse_system(c.root.child("system"), kBranchSystems);
    auto pc = parse_potential(c.root.child("potential"));
    Node p = c.root.child("params");
    int depth = static_cast<int>(p.integer("depth", 10, 1, 22));
    EquilibriumOptions o;
    o.grid_points = static_cast<int>(p.integer("grid_points", 4096, 16, 1 << 16));
    o.bins = static_cast<int>(p.integer("bins", 32, 1, o.grid_points));
    o.mode = p.text("mode", "equilibrium", {"equilibrium", "conformal"}) == "conformal" ? WeightMode::Conformal
                                                                                        : WeightMode::Equilibrium;
    o.gibbs_depths = to_ints(p.integers("gibbs_depths", std::vector<std::int64_t>{depth}, 1, depth));
    double gibbs_tol = p.number("gibbs_tolerance", 0.1);
    bool write_atoms = p.boolean("atoms", false);
    std::optional<PotentialConfig> psi;
    double ld_eps = 0;
    std::vector<int> ld_n;
    if (p.has("large_deviation")) {
        Node d = p.child("large_deviation");
        psi = parse_potential(d.child("psi"), "smoothed-indicator");
        ld_eps = d.number("eps", 0.2);
        std::vector<std::int64_t> def;
        for (int n = 6; n <= std::min(16, depth - 1); ++n) def.push_back(n);
        ld_n = to_ints(d.integers("n", def, 1, depth - 1));
        d.close();
    }
    p.close();
    c.root.close();

    auto sys = build_system(sc);
    auto pot = build_potential(pc, sys, o.grid_points);
    auto res = equilibrium(sys.branch, pot.spec, depth, o);
    const EquilibriumData& eq = res.data;
    Json& out = c.payload;
    out["system"] = sys.branch->name();
    out["potential"] = pot.spec.label;
    out["depth"] = depth;
    out["pressure"] = eq.pressure;
    out["lyapunov"] = eq.lyapunov;
    out["dimension"] = eq.dimension;
    out["integral_phi"] = eq.integral_phi;
    out["renormalization"] = eq.renormalization;
    out["eigen_residual"] = eq.residual;
    out["converged"] = eq.converged;
    out["diameter_bound"] = res.atoms.diameter_bound;
    c.ledger.observe("eigen iteration converged", eq.converged, {{"residual", eq.residual}});

    double sum_err = 0, refine_err = 0;
    const int k = sys.branch->piece_count();
    for (int d = 1; d <= depth; ++d) {
        const CylinderLevel& lv = eq.level(d);
        sum_err = std::max(sum_err, std::fabs(compensated_sum(lv.weights) - 1));
        if (d == depth) continue;
        const CylinderLevel& nx = eq.level(d + 1);
        for (std::size_t i = 0; i < lv.codes.size(); ++i) {
            auto lo = std::lower_bound(nx.codes.begin(), nx.codes.end(), lv.codes[i] * static_cast<std::uint64_t>(k));
            auto hi = std::lower_bound(nx.codes.begin(), nx.codes.end(), (lv.codes[i] + 1) * static_cast<std::uint64_t>(k));
            CompensatedSum s;
            for (auto it = lo; it != hi; ++it) s.add(nx.weights[static_cast<std::size_t>(it - nx.codes.begin())]);
            refine_err = std::max(refine_err, std::fabs(s.value() - lv.weights[i]));
        }
    }
    c.ledger.contract("cylinder weights sum to 1 at every depth", sum_err <= 1e-8, {{"max_error", sum_err}, {"tolerance", 1e-8}});
    c.ledger.contract("refinement consistency of cylinder weights", refine_err <= 1e-8,
                      {{"max_error", refine_err}, {"tolerance", 1e-8}});
    mass_contract(c, res.atoms, "atom");

    const CylinderLevel& top = eq.level(depth);
    bool uniform_case = (sys.doubling && sys.doubling->delta() == 0.0) || sc.kind == "halves";
    if (uniform_case && !pc.normalize && (pc.kind == "zero" || pc.kind == "constant" || pc.kind == "geometric")) {
        double target = std::pow(static_cast<double>(k), -depth), err = 0;
        for (double w : top.weights) err = std::max(err, std::fabs(w - target));
        out["uniform_weight_error"] = err;
        c.ledger.contract("weights equal k^-n for the linear map", err == 0.0, {{"max_error", err}});
    }
    if (pc.kind == "bernoulli" && !pc.normalize) {
        double err = 0;
        for (std::size_t i = 0; i < top.codes.size(); ++i) {
            Word w = Word::from_code(top.codes[i], k, depth);
            double prod = 1;
            for (int a : w.letters) prod *= a == 0 ? pc.p : 1 - pc.p;
            err = std::max(err, std::fabs(top.weights[i] / prod - 1));
        }
        out["bernoulli_relative_error"] = err;
        c.ledger.contract("Bernoulli weights equal the product measure", err <= 1e-9, {{"max_relative_error", err}, {"tolerance", 1e-9}});
    }

    std::vector<double> codes;
    for (auto x : top.codes) codes.push_back(static_cast<double>(x));
    c.series->add("cylinders", admissible_count(sys.branch->transitions(), depth),
                  {Column("code", codes), Column("weight", top.weights)});

    if (!eq.gibbs_by_depth.empty()) {
        std::vector<double> gd, gc;
        for (auto [d, C0] : eq.gibbs_by_depth) gd.push_back(d), gc.push_back(C0);
        double hi = *std::max_element(gc.begin(), gc.end()), lo = *std::min_element(gc.begin(), gc.end());
        double var = hi / lo - 1;
        out["gibbs"] = {{"depths", gd}, {"constants", gc}, {"variation", var}};
        if (gc.size() >= 2)
            c.ledger.contract("Gibbs constant stable across depths", var <= gibbs_tol, {{"variation", var}, {"tolerance", gibbs_tol}});
        c.series->add("gibbs", o.gibbs_depths.size(), {Column("depth", gd), Column("C0", gc)});
    }
    if (psi) {
        auto q = build_potential(*psi, sys, o.grid_points);
        auto ld = large_deviation_probe(*sys.branch, eq, q.spec, ld_eps, ld_n);
        out["large_deviation"] = {{"eps", ld_eps}, {"mean", ld.mean}, {"rate", ld.rate}, {"r_squared", ld.r_squared}};
        c.ledger.observe("large deviation rate positive with r^2 >= 0.9", ld.rate > 0 && ld.r_squared >= 0.9,
                         {{"rate", ld.rate}, {"r_squared", ld.r_squared}});
        c.series->add("large_deviation", ld_n.size(),
                      {Column("n", std::vector<double>(ld.n.begin(), ld.n.end())), Column("mass", ld.mass)},
                      {{"large_deviation", "n", "mass", false, true}});
    }
    if (write_atoms) {
        std::vector<double> x, y;
        for (std::size_t i = 0; i < res.atoms.size(); ++i) {
            x.push_back(res.atoms.x(i, 0));
            y.push_back(res.atoms.dim > 1 ? res.atoms.x(i, 1) : 0.0);
        }
        c.series->add("atoms", top.codes.size(), {Column("x", x), Column("y", y), Column("weight", res.atoms.weights)});
    }
}

// ---------------------------------------------------------------- fourier-decay

void run_fourier_decay(Context& c) {
    Node p = c.root.child("params");
    auto m = parse_measure(p, 12);
    auto src = parse_measure_source(c, m);
    FrequencyGrid grid = parse_frequencies(p.child("frequencies"));
    auto [lo, hi] = parse_window(p, grid);
    std::vector<double> radii = p.numbers("regularity_radii", std::vector<double>{});
    p.close();
    c.root.close();

    auto b = measure_from(m, m.depth, src);
    const AtomicMeasure& mu = b.atoms;
    auto z = fourier_transform_grid(mu, grid);
    std::vector<double> re, im, mod;
    for (cplx v : z) re.push_back(v.real()), im.push_back(v.imag()), mod.push_back(std::abs(v));
    DecayReport rep = fit_decay(grid, mod, lo, hi, mu.diameter_bound);
    Json& out = c.payload;
    out["measure"] = {{"kind", m.kind}, {"label", mu.label}, {"depth", m.depth}, {"atoms", mu.size()},
                      {"diameter_bound", mu.diameter_bound}};
    out["decay"] = to_json(rep);
    c.ledger.observe("decay fit above the truncation bound", !rep.truncation_limited,
                     {{"truncation_bound", rep.truncation_bound}});
    mass_contract(c, mu, "atom");
    double mx = *std::max_element(mod.begin(), mod.end());
    c.ledger.contract("|transform| <= 1", mx <= 1 + 1e-12, {{"max", mx}});

    if (m.kind == "cantor-digits") {
        cplx one = fourier_transform(mu, 1.0);
        double worst = -INFINITY;
        Json rows = Json::array();
        for (int k = 0; k <= m.depth - 6; ++k) {
            double xi = std::pow(3.0, k);
            double d = std::abs(fourier_transform(mu, xi) - one);
            double bound = kTwoPi * std::pow(3.0, k - m.depth);
            worst = std::max(worst, d - bound);
            rows.push_back({{"k", k}, {"difference", d}, {"bound", bound}});
        }
        out["cantor_invariance"] = rows;
        c.ledger.contract("|transform(3^k) - transform(1)| <= 2 pi 3^(k-m)", worst <= 0, {{"worst_excess", worst}});
    }
    if (m.kind == "lebesgue") {
        double worst = 0;
        std::size_t checked = 0;
        double period = std::ldexp(1.0, m.depth);
        for (std::size_t i = 0; i < grid.size(); ++i) {
            double xi = grid.values[i];
            if (xi != std::floor(xi) || std::fmod(xi, period) == 0) continue;
            worst = std::max(worst, mod[i]);
            ++checked;
        }
        if (checked)
            c.ledger.contract("Lebesgue atoms vanish at resolved integers", worst <= 1e-10,
                              {{"max", worst}, {"checked", checked}, {"tolerance", 1e-10}});
    }
    if (!radii.empty()) {
        auto r = regularity_exponent(mu, radii);
        out["regularity"] = {{"exponent", r.exponent}, {"r_squared", r.r_squared}, {"degenerate", r.degenerate}};
        c.series->add("regularity", radii.size(), {Column("radius", r.radii), Column("sup_mass", r.sup_mass)},
                      {{"regularity", "radius", "sup_mass", true, true}});
    }
    c.series->add("decay", grid.size(),
                  {Column("xi", grid.values), Column("re", re), Column("im", im), Column("modulus", mod)},
                  {{"decay", "xi", "modulus", true, true}});
    c.series->add("decay_octaves", static_cast<std::size_t>(hi - lo + 1),
                  {Column("octave", std::vector<double>(rep.octaves.begin(), rep.octaves.end())),
                   Column("sup_modulus", rep.octave_sup)});
}

// ---------------------------------------------------------------- phase-decay

void run_phase_decay(Context& c) {
    Node p = c.root.child("params");
    auto m = parse_measure(p, 16);
    if (!c.root.has("params") || !c.root.child("params").has("measure")) {}
    auto src = parse_measure_source(c, m);
    Node ph = p.child("phase");
    std::string pk = ph.text("name", "quadratic", {"quadratic", "affine"});
    double center = 0.5, a = 1, b0 = 0;
    if (pk == "quadratic") center = ph.number("center", 0.5);
    else a = ph.number("a"), b0 = ph.number("b", 0.0);
    ph.close();
    Node wt = p.child("weight");
    std::string wk = wt.text("name", "bump", {"one", "bump"});
    double wlo = 0.2, whi = 0.8;
    if (wk == "bump") {
        wlo = wt.number("lo", 0.2);
        whi = wt.number("hi", 0.8);
        if (!(wlo < whi)) fail(ErrorKind::Schema, "config.params.weight: need lo < hi");
    }
    wt.close();
    FrequencyGrid grid = parse_frequencies(p.child("frequencies"));
    auto [lo, hi] = parse_window(p, grid);
    p.close();
    c.root.close();

    auto built = measure_from(m, m.depth, src);
    const AtomicMeasure& mu = built.atoms;
    AtomFunction psi = pk == "quadratic" ? AtomFunction([center](cplx z) { return (z.real() - center) * (z.real() - center); })
                                         : AtomFunction([a, b0](cplx z) { return a * z.real() + b0; });
    double lip = pk == "quadratic" ? 2 * std::max(std::fabs(center), std::fabs(1 - center)) : std::fabs(a);
    AtomFunction chi = wk == "one" ? AtomFunction([](cplx) { return 1.0; }) : AtomFunction([wlo, whi](cplx z) {
        double t = (2 * z.real() - wlo - whi) / (whi - wlo);
        return std::fabs(t) < 1 ? std::exp(1 - 1 / (1 - t * t)) : 0.0;
    });
    std::vector<PhaseValue> vals(grid.size());
    parallel_for(grid.size(), [&](std::size_t i) { vals[i] = phase_pushforward(mu, psi, chi, grid.values[i], lip, 1.0); });
    std::vector<double> re, im, mod, bound;
    for (const auto& v : vals)
        re.push_back(v.value.real()), im.push_back(v.value.imag()), mod.push_back(std::abs(v.value)),
            bound.push_back(v.truncation_bound);
    DecayReport rep = fit_decay(grid, mod, lo, hi, mu.diameter_bound, &bound);
    Json& out = c.payload;
    out["measure"] = {{"kind", m.kind}, {"label", mu.label}, {"depth", m.depth}, {"atoms", mu.size()}};
    out["phase"] = pk;
    out["weight"] = wk;
    out["decay"] = to_json(rep);
    c.ledger.observe("decay fit above the truncation bound", !rep.truncation_limited,
                     {{"truncation_bound", rep.truncation_bound}});
    CompensatedSum chi_mass;
    for (std::size_t i = 0; i < mu.size(); ++i) chi_mass.add(mu.weights[i] * std::fabs(chi(mu.z(i))));
    double mx = *std::max_element(mod.begin(), mod.end());
    c.ledger.contract("|integral| <= integral of |chi|", mx <= chi_mass.value() + 1e-12, {{"max", mx}, {"chi_mass", chi_mass.value()}});
    if (pk == "affine" && wk == "one") {
        double worst = 0;
        for (std::size_t i = 0; i < grid.size(); ++i) {
            double xi = grid.values[i];
            cplx ref = std::polar(1.0, xi * b0) * fourier_transform(mu, -a * xi / kTwoPi);
            double tol = 1e-12 * std::max(1.0, std::fabs(xi * a));
            worst = std::max(worst, std::abs(ref - vals[i].value) / tol);
        }
        c.ledger.contract("affine phase equals the transform at the rescaled frequency", worst <= 1,
                          {{"worst_over_tolerance", worst}, {"tolerance", "1e-12 max(1, |a xi|)"}});
    }
    c.series->add("phase", grid.size(),
                  {Column("xi", grid.values), Column("re", re), Column("im", im), Column("modulus", mod),
                   Column("truncation_bound", bound)},
                  {{"phase_decay", "xi", "modulus", true, true}});
}

// ---------------------------------------------------------------- energy

void run_energy(Context& c) {
    Node p = c.root.child("params");
    auto m = parse_measure(p, 10);
    auto src = parse_measure_source(c, m);
    auto depths = to_ints(p.integers("depths", std::vector<std::int64_t>{m.depth}, 1, 16));
    auto betas = p.numbers("beta", std::vector<double>{0.5});
    bool merge = p.boolean("merge_coincident", false);
    p.close();
    c.root.close();

    std::vector<double> cd, cb, cv, cp;
    Json rows = Json::array();
    std::vector<std::vector<double>> table(betas.size());
    for (int d : depths) {
        auto built = measure_from(m, d, src);
        mass_contract(c, built.atoms, "depth " + std::to_string(d) + " atom");
        for (std::size_t j = 0; j < betas.size(); ++j) {
            EnergyResult e = energy_integral(built.atoms, betas[j], merge);
            cd.push_back(d), cb.push_back(betas[j]), cv.push_back(e.value), cp.push_back(static_cast<double>(e.coincident_pairs));
            table[j].push_back(e.value);
            rows.push_back({{"depth", d}, {"beta", betas[j]}, {"energy", e.value}, {"coincident_pairs", e.coincident_pairs}});
        }
    }
    Json& out = c.payload;
    out["measure"] = m.kind;
    out["table"] = rows;
    Json growth = Json::array();
    for (std::size_t j = 0; j < betas.size(); ++j)
        growth.push_back({{"beta", betas[j]}, {"last_over_first", table[j].back() / table[j].front()}});
    out["growth"] = growth;
    c.series->add("energy", depths.size() * betas.size(),
                  {Column("depth", cd), Column("beta", cb), Column("energy", cv), Column("coincident_pairs", cp)});
}

// ---------------------------------------------------------------- conv-power

void run_conv_power(Context& c) {
    Node p = c.root.child("params");
    int k = static_cast<int>(p.integer("k", 3, 1, 8));
    auto ex = to_ints(p.integers("h_exponents", std::vector<std::int64_t>{5, 6, 7, 8, 9}, 2, 40));
    Kernel kernel = p.text("kernel", "transform", {"transform", "plain"}) == "plain" ? Kernel::Plain : Kernel::Transform;
    auto oracle_terms = static_cast<std::size_t>(p.integer("oracle_terms", 1 << 22, 0, std::int64_t(1) << 32));
    p.close();
    c.root.close();

    std::sort(ex.begin(), ex.end());
    std::vector<double> hs, mod, sup, terms;
    double oracle_err = 0;
    std::size_t oracles = 0;
    for (int e : ex) {
        double h = std::ldexp(1.0, -e);
        SumProductValue v = sum_product_probe(h, k, kernel);
        hs.push_back(h), mod.push_back(v.modulus), sup.push_back(static_cast<double>(v.support)),
            terms.push_back(static_cast<double>(v.terms));
        if (v.terms <= oracle_terms) {
            AtomicMeasure base = uniform_atoms(sum_product_support(h));
            AtomicMeasure conv = base;
            for (int i = 1; i < k; ++i) conv = mult_convolution(conv, base);
            double eta = 1 / h;
            cplx ref = kernel == Kernel::Transform ? fourier_transform(conv, eta) : fourier_transform(conv, -eta / kTwoPi);
            oracle_err = std::max(oracle_err, std::abs(ref - v.value));
            ++oracles;
        }
    }
    Json& out = c.payload;
    out["k"] = k;
    out["kernel"] = kernel == Kernel::Plain ? "plain" : "transform";
    if (oracles)
        c.ledger.contract("direct sum equals the merged convolution transform", oracle_err <= 1e-9,
                          {{"max_error", oracle_err}, {"checked", oracles}, {"tolerance", 1e-9}});
    double mx = *std::max_element(mod.begin(), mod.end());
    c.ledger.contract("modulus <= 1", mx <= 1 + 1e-12, {{"max", mx}});
    int inversions = 0;
    for (std::size_t i = 1; i < mod.size(); ++i) inversions += mod[i] > mod[i - 1] ? 1 : 0;  // h decreasing along i
    std::vector<double> lh, lm;
    for (std::size_t i = 0; i < hs.size(); ++i)
        if (mod[i] > 0) lh.push_back(std::log(hs[i])), lm.push_back(std::log(mod[i]));
    // ex is ascending, so hs is descending
    double expo = lh.size() >= 2 ? fit_line(lh, lm).slope : 0.0;
    out["exponent_in_h"] = expo;
    out["inversions"] = inversions;
    c.ledger.observe("modulus decreases as h decreases (one inversion allowed)", inversions <= 1, {{"inversions", inversions}});
    c.ledger.observe("fitted exponent in h positive", expo > 0, {{"exponent", expo}});
    c.series->add("conv_power", ex.size(),
                  {Column("h", hs), Column("modulus", mod), Column("support", sup), Column("terms", terms)},
                  {{"conv_power", "h", "modulus", true, true}});
}

// ---------------------------------------------------------------- exp-sum

void run_exp_sum(Context& c) {
    auto sc = parse_system(c.root.child("system"), {"doubling"});
    Node p = c.root.child("params");
    int n = static_cast<int>(p.integer("n", 8, 1, 24));
    int k = static_cast<int>(p.integer("k", 2, 1, 24));
    std::vector<double> etas;
    if (p.has("eta")) {
        etas = p.numbers("eta");
    } else {
        Node w = p.child("eta_window");
        double e0 = w.number("eps0", 0.05);
        int count = static_cast<int>(w.integer("count", 8, 2, 4096));
        w.close();
        double a = std::exp(e0 * n / 2), b = std::exp(2 * e0 * n);
        for (int i = 0; i < count; ++i) etas.push_back(a + (b - a) * i / (count - 1));
    }
    std::vector<std::vector<int>> blocks;
    if (p.has("blocks")) {
        const Json& bl = p.raw("blocks");
        if (!bl.is_array()) fail(ErrorKind::Schema, "config.params.blocks: expected a list of code lists");
        for (const auto& A : bl) {
            if (!A.is_array()) fail(ErrorKind::Schema, "config.params.blocks: expected a list of code lists");
            std::vector<int> v;
            for (const auto& x : A) {
                if (!x.is_number_integer()) fail(ErrorKind::Schema, "config.params.blocks: codes must be integers");
                v.push_back(x.get<int>());
            }
            blocks.push_back(v);
        }
    }
    int random_blocks = static_cast<int>(p.integer("random_blocks", blocks.empty() ? 16 : 0, 0, 1 << 20));
    p.close();
    c.root.close();
    std::uint64_t seed = random_blocks > 0 ? c.require_seed("random A-blocks") : 0;

    auto sys = build_system(sc);
    std::vector<double> mean, lo, hi;
    Json rows = Json::array();
    double mx = 0, dev1 = 0;
    ExpSumResult last;
    for (double eta : etas) {
        auto r = exp_sum_probe(*sys.doubling, n, k, eta, blocks, random_blocks, seed);
        mean.push_back(r.mean_modulus);
        lo.push_back(*std::min_element(r.moduli.begin(), r.moduli.end()));
        hi.push_back(*std::max_element(r.moduli.begin(), r.moduli.end()));
        mx = std::max(mx, hi.back());
        for (double v : r.moduli) dev1 = std::max(dev1, std::fabs(v - 1));
        last = r;
    }
    Json& out = c.payload;
    out["n"] = n;
    out["k"] = k;
    out["blocks"] = last.blocks;
    out["zeta_range"] = {last.zeta_min, last.zeta_max};
    c.ledger.contract("modulus <= 1", mx <= 1 + 1e-12, {{"max", mx}});
    if (sys.doubling->delta() == 0.0)
        c.ledger.contract("linear map gives modulus 1", dev1 <= 1e-12, {{"max_deviation", dev1}, {"tolerance", 1e-12}});
    double worst = *std::max_element(mean.begin(), mean.end());
    double slope = etas.size() >= 2 ? fit_line(etas, mean).slope : 0.0;
    out["max_mean_modulus"] = worst;
    out["trend_slope"] = slope;
    c.ledger.observe("A-averaged modulus < 0.9 across the window", worst < 0.9, {{"max_mean", worst}});
    c.ledger.observe("A-averaged modulus decreases across the window", slope < 0, {{"slope", slope}});
    c.series->add("exp_sum", etas.size(),
                  {Column("eta", etas), Column("mean_modulus", mean), Column("min_modulus", lo), Column("max_modulus", hi)},
                  {{"exp_sum", "eta", "mean_modulus", false, false}});
}

// ---------------------------------------------------------------- uni-check

void run_uni_check(Context& c) {
    auto sc = parse_system(c.root.child("system"), {"doubling"});
    Node p = c.root.child("params");
    auto ns = to_ints(p.integers("n", std::vector<std::int64_t>{6, 7, 8, 9, 10}, 1, 12));
    int grid = static_cast<int>(p.integer("x_grid", 1024, 8, 1 << 16));
    bool certify = p.boolean("certify", true);
    int n_max = static_cast<int>(p.integer("n_max", 12, 1, 12));
    p.close();
    c.root.close();

    auto sys = build_system(sc);
    const auto& Phi = sys.doubling->Phi();
    std::vector<double> cn, chat, osc, cert, pairs;
    for (int n : ns) {
        UniScan s = uni_scan(*sys.doubling, Phi, n, grid);
        cn.push_back(n), chat.push_back(s.c0_hat), osc.push_back(s.oscillation), cert.push_back(s.c0_certified),
            pairs.push_back(static_cast<double>(s.pairs_scanned));
    }
    Json& out = c.payload;
    double floor_hat = *std::min_element(chat.begin(), chat.end());
    out["c0_hat_min"] = floor_hat;
    out["second_derivative_bound"] = birkhoff_second_derivative_bound(*sys.doubling, Phi);
    c.ledger.observe("c0_hat bounded below across n", floor_hat > 0, {{"min", floor_hat}});
    if (certify) {
        UniCertificate u = certify_uni(*sys.doubling, Phi, n_max, grid);
        out["certificate"] = {{"found", u.found}, {"N", u.N}, {"c0", u.c0}, {"kappa_max", u.kappa_max}, {"tail", u.tail}};
        c.ledger.observe("UNI certificate found", u.found, {{"N", u.N}, {"c0", u.c0}});
    }
    c.series->add("uni", ns.size(),
                  {Column("n", cn), Column("c0_hat", chat), Column("oscillation", osc), Column("c0_certified", cert),
                   Column("pairs_scanned", pairs)});
}

// ---------------------------------------------------------------- tree-bound

void run_tree_bound(Context& c) {
    auto sc = parse_system(c.root.child("system"), {"doubling"});
    Node p = c.root.child("params");
    int n = static_cast<int>(p.integer("n", 12, 1, 14));
    std::optional<int> N;
    std::optional<double> c0;
    if (p.has("N") || p.has("c0")) {
        N = static_cast<int>(p.integer("N", std::nullopt, 1, 14));
        c0 = p.number("c0");
        if (!(*c0 > 0)) fail(ErrorKind::Schema, "config.params.c0: must be positive");
    }
    int a_count = static_cast<int>(p.integer("a_count", 16, 1, 4096));
    auto sig = to_ints(p.integers("sigma_exponents", std::vector<std::int64_t>{1, 2, 3, 4, 5, 6}, -10, 60));
    int bases = static_cast<int>(p.integer("base_points", 8, 1, 1024));
    int n_max = static_cast<int>(p.integer("certify_n_max", 12, 1, 12));
    p.close();
    c.root.close();

    auto sys = build_system(sc);
    const auto& Phi = sys.doubling->Phi();
    Json& out = c.payload;
    if (!N) {
        UniCertificate u = certify_uni(*sys.doubling, Phi, n_max);
        if (!u.found) fail(ErrorKind::Domain, "no UNI certificate up to n = " + std::to_string(n_max) + "; pass N and c0");
        N = u.N;
        c0 = u.c0;
        out["certificate"] = {{"N", u.N}, {"c0", u.c0}, {"tail", u.tail}};
    }
    out["N"] = *N;
    out["c0"] = *c0;
    out["gamma"] = tree_gamma(*N);
    std::vector<double> cx, ca, cs, cf, cb;
    std::size_t fails = 0;
    double worst = -INFINITY;
    for (int i = 0; i < bases; ++i) {
        double x0 = (i + 0.5) / bases;
        auto v = birkhoff_derivative_values(*sys.doubling, Phi, n, x0);
        std::sort(v.begin(), v.end());
        for (int j = 0; j < a_count; ++j) {
            double a = a_count == 1 ? 0.5 * (v.front() + v.back())
                                    : v.front() + (v.back() - v.front()) * j / (a_count - 1);
            for (int e : sig) {
                double sigma = std::ldexp(1.0, -e);
                TreeBound t = tree_bound_check(v, n, sigma, a, *N, *c0);
                cx.push_back(x0), ca.push_back(a), cs.push_back(sigma), cf.push_back(t.fraction), cb.push_back(t.bound);
                fails += t.pass ? 0 : 1;
                worst = std::max(worst, t.fraction - t.bound);
            }
        }
    }
    out["checks"] = cx.size();
    out["failures"] = fails;
    out["worst_excess"] = worst;
    c.ledger.contract("tree-lemma bound holds on the sweep", fails == 0, {{"failures", fails}, {"worst_excess", worst}});
    c.series->add("tree_bound", static_cast<std::size_t>(bases) * a_count * sig.size(),
                  {Column("x0", cx), Column("a", ca), Column("sigma", cs), Column("fraction", cf), Column("bound", cb)},
                  {{"tree_fraction", "sigma", "fraction", false, false}, {"tree_bound", "sigma", "bound", false, false}});
}

// ---------------------------------------------------------------- regular-words

void run_regular_words(Context& c) {
    auto sc = parse_system(c.root.child("system"), kBranchSystems);
    auto pc = parse_potential(c.root.child("potential"), "geometric");
    Node p = c.root.child("params");
    auto ns = to_ints(p.integers("n", std::vector<std::int64_t>{6, 8, 10}, 1, 20));
    double eps = p.number("eps", 0.1);
    int G = static_cast<int>(p.integer("grid_points", 4096, 16, 1 << 16));
    p.close();
    c.root.close();

    auto sys = build_system(sc);
    auto pot = build_potential(pc, sys, G);
    int depth = *std::max_element(ns.begin(), ns.end()) + 1;
    EquilibriumOptions o;
    o.grid_points = G;
    auto eq = equilibrium(sys.branch, pot.spec, depth, o).data;
    std::vector<double> cn, cm, ct, cc;
    bool sane = true, decreasing = true;
    for (int n : ns) {
        RegularWordSet r = regular_words(sys.branch, eq, pot.spec, n, eps);
        cn.push_back(n), cm.push_back(static_cast<double>(r.members.size())), ct.push_back(static_cast<double>(r.total)),
            cc.push_back(r.complement_mass);
        sane = sane && r.members.size() <= r.total && r.total == admissible_count(sys.branch->transitions(), n + 1) &&
               r.complement_mass >= -1e-12 && r.complement_mass <= 1 + 1e-12;
        if (cc.size() >= 2 && cc.back() > cc[cc.size() - 2]) decreasing = false;
        c.payload["lambda"] = r.lambda;
        c.payload["delta"] = r.delta;
    }
    c.payload["eps"] = eps;
    c.ledger.contract("regular sets are subsets with complement mass in [0,1]", sane);
    c.ledger.observe("complement mass non-increasing in n", decreasing, {{"complement_mass", cc}});
    c.series->add("regular_words", ns.size(),
                  {Column("n", cn), Column("members", cm), Column("total", ct), Column("complement_mass", cc)},
                  {{"regular_complement", "n", "complement_mass", false, true}});
}

// ---------------------------------------------------------------- zeta-collisions

void run_zeta_collisions(Context& c) {
    auto sc = parse_system(c.root.child("system"), {"doubling"});
    Node p = c.root.child("params");
    int n = static_cast<int>(p.integer("n", 8, 1, 20));
    int j = static_cast<int>(p.integer("j", 1, 1, 64));
    std::vector<int> A;
    if (p.has("A")) A = to_ints(p.integers("A", std::nullopt, 0, (std::int64_t(1) << n) - 1));
    auto sig = to_ints(p.integers("sigma_exponents", std::vector<std::int64_t>{1, 2, 3, 4, 5, 6, 7, 8, 9, 10}, -10, 60));
    p.close();
    c.root.close();
    if (A.empty()) {
        CounterRng rng(c.require_seed("random A-block"), 0x2e7a);
        for (int i = 0; i <= j; ++i) A.push_back(static_cast<int>(rng.below(std::uint64_t(1) << n)));
    }
    if (static_cast<int>(A.size()) <= j) fail(ErrorKind::Schema, "config.params.A: needs at least j+1 codes");

    auto sys = build_system(sc);
    ZetaFamily fam = zeta_family(*sys.doubling, n, A, j);
    std::vector<double> sigma;
    for (int e : sig) sigma.push_back(std::ldexp(1.0, -e));
    std::sort(sigma.begin(), sigma.end());
    CollisionResult r = zeta_collisions(fam, sigma);
    const double N = static_cast<double>(fam.table.size());
    bool monotone = true, bounded = true;
    for (std::size_t i = 0; i < r.count.size(); ++i) {
        if (i && r.count[i] < r.count[i - 1]) monotone = false;
        if (r.count[i] < N || r.count[i] > N * N) bounded = false;
    }
    Json& out = c.payload;
    out["A"] = A;
    out["j"] = j;
    out["words"] = fam.table.size();
    out["nominal"] = fam.nominal;
    out["normalization"] = fam.normalization;
    out["kappa_range"] = fam.kappa_range;
    out["gamma"] = r.gamma;
    c.ledger.contract("collision counts nondecreasing in sigma", monotone);
    c.ledger.contract("N <= count <= N^2", bounded);
    c.ledger.observe("fitted collision exponent positive", r.gamma > 0, {{"gamma", r.gamma}});
    c.series->add("zeta_collisions", sig.size(), {Column("sigma", r.sigma), Column("count", r.count)},
                  {{"zeta_collisions", "sigma", "count", true, true}});
}

// ---------------------------------------------------------------- qnl

void run_qnl(Context& c) {
    auto sc = parse_system(c.root.child("system"), {"solenoid", "doubling"});
    Node p = c.root.child("params");
    QnlOptions o;
    o.pairs = static_cast<std::size_t>(p.integer("pairs", 100000, 10, 1 << 26));
    o.K = static_cast<std::size_t>(p.integer("K", 40, 1, 1000));
    o.forward_depth = static_cast<int>(p.integer("forward_depth", 40, 1, 1000));
    o.bootstrap = static_cast<int>(p.integer("bootstrap", 200, 0, 100000));
    o.depth_check = p.boolean("depth_check", true);
    auto sig = to_ints(p.integers("sigma_exponents", std::vector<std::int64_t>{4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14}, -10, 60));
    auto audit = static_cast<std::size_t>(p.integer("audit_pairs", 1000, 1, 1 << 20));
    std::vector<int> periodic;
    if (sc.kind == "solenoid")
        periodic = to_ints(p.integers("periodic_N", std::vector<std::int64_t>{2, 3, 4, 5, 6}, 1, sc.N_max));
    p.close();
    c.root.close();
    o.seed = c.require_seed("pair sampling and bootstrap");

    auto sys = build_system(sc);
    const CircleExpandingMap& f = *sys.circle;
    Json& out = c.payload;

    auto pairs = sample_pairs(f, audit, o.K, o.forward_depth, o.seed);
    double self = 0, sym = 0;
    for (const auto& [a, b] : pairs) {
        self = std::max(self, std::fabs(solenoid_delta(f, a, a, o.K).value));
        sym = std::max(sym, std::fabs(solenoid_delta(f, a, b, o.K).value - solenoid_delta(f, b, a, o.K).value));
    }
    c.ledger.contract("Delta(p,p) = 0", self == 0.0, {{"max", self}, {"pairs", pairs.size()}});
    c.ledger.contract("Delta symmetric", sym <= 1e-12, {{"max", sym}, {"tolerance", 1e-12}});
    {
        SystemConfig lin = sc;
        lin.with_g = false;
        lin.eps = 0.0;
        lin.delta = 0.0;
        auto ls = build_system(lin);
        double mx = 0;
        for (const auto& [a, b] : pairs) mx = std::max(mx, std::fabs(solenoid_delta(*ls.circle, a, b, o.K).value));
        c.ledger.contract("linear base gives Delta = 0", mx <= 1e-12, {{"max", mx}, {"tolerance", 1e-12}});
    }

    std::vector<double> sigma;
    for (int e : sig) sigma.push_back(std::ldexp(1.0, -e));
    std::sort(sigma.begin(), sigma.end());
    QnlResult r = qnl_probe(f, sigma, o);
    out["pairs"] = r.pairs;
    out["gamma"] = r.gamma;
    out["r_squared"] = r.r_squared;
    out["bootstrap"] = {{"replicates", o.bootstrap}, {"lo", r.boot_lo}, {"hi", r.boot_hi}};
    out["max_tail"] = r.max_tail;
    out["max_abs_delta"] = r.max_abs_delta;
    if (r.depth_checked) {
        out["depth_doubling"] = {{"max_excess", r.depth_excess}, {"violations", r.depth_violations}};
        c.ledger.contract("doubling K moves Delta by less than the tail bound", r.depth_violations == 0,
                          {{"violations", r.depth_violations}, {"max_excess", r.depth_excess}});
    }
    c.ledger.observe("QNL exponent positive with bootstrap interval above 0", r.gamma > 0 && r.boot_lo > 0,
                     {{"gamma", r.gamma}, {"lo", r.boot_lo}, {"hi", r.boot_hi}});
    c.series->add("qnl", sig.size(), {Column("sigma", r.sigma), Column("mass", r.mass)}, {{"qnl", "sigma", "mass", true, true}});

    if (sys.solenoid && !periodic.empty()) {
        std::vector<double> cN, th, ret, lc, lo, dp, df;
        double worst_ret = 0, worst_lyap = 0, worst_det = 0;
        for (int N : periodic) {
            PeriodicData d = solenoid_periodic(*sys.solenoid, N);
            cN.push_back(N), th.push_back(d.theta), ret.push_back(d.return_error), lc.push_back(d.lyapunov_closed),
                lo.push_back(d.lyapunov_orbit), dp.push_back(d.det_product), df.push_back(d.det_formula);
            worst_ret = std::max(worst_ret, d.return_error);
            worst_lyap = std::max(worst_lyap, std::fabs(d.lyapunov_closed - d.lyapunov_orbit));
            worst_det = std::max(worst_det, std::fabs(d.det_product / d.det_formula - 1));
        }
        c.ledger.contract("periodic point returns after N steps", worst_ret <= 1e-9, {{"max_error", worst_ret}, {"tolerance", 1e-9}});
        c.ledger.contract("closed-form Lyapunov matches the orbit product", worst_lyap <= 1e-9,
                          {{"max_error", worst_lyap}, {"tolerance", 1e-9}});
        c.ledger.contract("det dF^N equals 16^-N prod f'", worst_det <= 1e-9, {{"max_relative_error", worst_det}, {"tolerance", 1e-9}});
        c.series->add("solenoid_periodic", periodic.size(),
                      {Column("N", cN), Column("theta", th), Column("return_error", ret), Column("lyapunov_closed", lc),
                       Column("lyapunov_orbit", lo), Column("det_product", dp), Column("det_formula", df)});
    }
}

// ---------------------------------------------------------------- twisted-contraction

void run_twisted_contraction(Context& c) {
    auto sc = parse_system(c.root.child("system"), kBranchSystems);
    auto pc = parse_potential(c.root.child("potential"), "geometric");
    Node p = c.root.child("params");
    double xi = p.number("xi", 40.0);
    int l = static_cast<int>(p.integer("l", 0, -1000, 1000));
    int n_max = static_cast<int>(p.integer("n_max", 18, 2, 10000));
    int G = static_cast<int>(p.integer("grid_points", 4096, 16, 1 << 16));
    double stab = p.number("stability", 0.05);
    std::vector<std::pair<int, int>> windows{{10, 14}, {14, 18}};
    if (p.has("windows")) {
        windows.clear();
        const Json& w = p.raw("windows");
        if (!w.is_array() || w.empty()) fail(ErrorKind::Schema, "config.params.windows: expected [[lo, hi], ...]");
        for (const auto& e : w) {
            if (!e.is_array() || e.size() != 2 || !e[0].is_number_integer() || !e[1].is_number_integer())
                fail(ErrorKind::Schema, "config.params.windows: expected [[lo, hi], ...]");
            windows.emplace_back(e[0].get<int>(), e[1].get<int>());
        }
    }
    p.close();
    c.root.close();
    for (auto [a, b] : windows)
        if (a < 0 || b > n_max || b - a < 2) fail(ErrorKind::Schema, "config.params.windows: need 0 <= lo, hi <= n_max, hi - lo >= 2");
    pc.normalize = true;

    auto sys = build_system(sc);
    auto pot = build_potential(pc, sys, G);
    TwistedResult r = twisted_contraction_probe(sys.branch, pot.spec, xi, l, n_max, windows[0].first, windows[0].second, G);
    std::vector<double> rhos;
    for (auto [a, b] : windows) rhos.push_back(fit_rho(r.norms, a, b));
    Json& out = c.payload;
    out["xi"] = xi;
    out["l"] = l;
    out["normalize_defect"] = pot.normalize_defect;
    out["rho"] = rhos;
    out["r_squared"] = r.r_squared;
    if (xi == 0 && l == 0) {
        double dev = 0;
        for (double v : r.norms) dev = std::max(dev, std::fabs(v - 1));
        c.ledger.contract("untwisted normalized operator keeps |L^n 1| = 1", dev <= 1e-9, {{"max_deviation", dev}, {"tolerance", 1e-9}});
    }
    bool linear = (sys.doubling && sys.doubling->delta() == 0.0) || sc.kind == "halves";
    if (linear && l == 0) {
        double dev = 0;
        for (double v : rhos) dev = std::max(dev, std::fabs(v - 1));
        c.ledger.contract("linear map shows no contraction", dev <= 1e-6, {{"max_deviation", dev}, {"tolerance", 1e-6}});
    }
    double spread = *std::max_element(rhos.begin(), rhos.end()) - *std::min_element(rhos.begin(), rhos.end());
    c.ledger.observe("rho < 1 - 1e-6 and stable across windows", rhos.front() < 1 - 1e-6 && spread <= stab,
                     {{"rho", rhos}, {"spread", spread}});
    std::vector<double> ns;
    for (std::size_t i = 0; i < r.norms.size(); ++i) ns.push_back(static_cast<double>(i));
    c.series->add("twisted", static_cast<std::size_t>(n_max) + 1, {Column("n", ns), Column("norm", r.norms)},
                  {{"twisted", "n", "norm", false, true}});
}

// ---------------------------------------------------------------- hyperbolic geometry helpers

double angle_gap(double a, double b) { return std::fabs(std::remainder(a - b, kTwoPi)); }

cplx random_disk_point(CounterRng& rng, double rmax) {
    return std::polar(rmax * std::sqrt(rng.uniform()), kTwoPi * rng.uniform());
}

// `after`: letter the word must be able to follow without cancellation (-1: none)
std::vector<int> random_reduced_word(CounterRng& rng, int letters, int length, int after = -1) {
    std::vector<int> w;
    for (int i = 0; i < length; ++i) {
        int prev = w.empty() ? after : w.back();
        int a;
        do a = static_cast<int>(rng.below(static_cast<std::uint64_t>(letters)));
        while (prev >= 0 && a == (prev ^ 1));
        w.push_back(a);
    }
    return w;
}

// box-counting dimension of boundary atoms between two dyadic arc scales
double box_dimension(const std::vector<double>& angles, int j1, int j2) {
    auto count = [&](int j) {
        std::vector<std::int64_t> cells;
        double m = std::ldexp(1.0, j);
        for (double a : angles) cells.push_back(static_cast<std::int64_t>(std::floor((a + kPi) / kTwoPi * m)));
        std::sort(cells.begin(), cells.end());
        return static_cast<double>(std::unique(cells.begin(), cells.end()) - cells.begin());
    };
    return std::log(count(j2) / count(j1)) / ((j2 - j1) * kLn2);
}

// ---------------------------------------------------------------- ps-measure

void run_ps_measure(Context& c) {
    auto sc = parse_system(c.root.child("system"), {"schottky"});
    Node p = c.root.child("params");
    int depth = static_cast<int>(p.integer("depth", 12, 2, 16));
    int G = static_cast<int>(p.integer("grid_points", 4096, 16, 1 << 16));
    auto tv_depths = to_ints(p.integers("tv_depths", std::vector<std::int64_t>{8, 10}, 2, 16));
    double tv_tol = p.number("tv_tolerance", 0.02);
    Node sh = p.child("shadow");
    double R = sh.number("R", 1.5);
    auto lengths = to_ints(sh.integers("lengths", std::vector<std::int64_t>{3, 4, 5, 6}, 1, 10));
    sh.close();
    Node ct = p.child("contraction");
    double Cc = ct.number("C", 4.0);
    auto eps_list = ct.numbers("eps", std::vector<double>{0.1, 0.01, 0.001});
    ct.close();
    Node au = p.child("audit");
    int samples = static_cast<int>(au.integer("samples", 100, 1, 1 << 20));
    int max_len = static_cast<int>(au.integer("max_length", 6, 1, 12));
    au.close();
    auto box = to_ints(p.integers("box_scales", std::vector<std::int64_t>{10, 16}, 1, 40));
    auto radii_exp = to_ints(p.integers("regularity_exponents", std::vector<std::int64_t>{6, 7, 8, 9, 10, 11, 12}, 1, 40));
    bool write_atoms = p.boolean("atoms", false);
    p.close();
    c.root.close();
    if (box.size() != 2 || box[0] >= box[1]) fail(ErrorKind::Schema, "config.params.box_scales: need two increasing scales");
    std::uint64_t seed = c.require_seed("random words and points for the geometry audit");

    auto sys = build_system(sc);
    const SchottkyGroup& g = *sys.schottky;
    Json& out = c.payload;
    out["generators"] = Json::array();
    for (const auto& gen : g.generators()) out["generators"].push_back({{"axis", gen.axis}, {"length", gen.length}});
    out["arc_gap"] = g.arc_gap();
    c.ledger.contract("Schottky arcs pairwise disjoint", g.arc_gap() > 0, {{"gap", g.arc_gap()}});
    {
        bool ok = true;
        for (int n = 1; n <= 4; ++n) {
            std::size_t formula = 2 * g.generators().size();
            for (int i = 1; i < n; ++i) formula *= 2 * g.generators().size() - 1;
            ok = ok && g.reduced_words(n).size() == formula && g.reduced_count(n) == formula;
        }
        c.ledger.contract("reduced word count 2k(2k-1)^(n-1)", ok);
    }

    // geometry audit
    CounterRng rng(seed, 0x6e0);
    double law = 0, law_matrix = 0, law_boundary = 0, qdef = 0, tau0 = 0, normal = 0, band = 0, cocycle = 0, add_err = 0;
    for (int s = 0; s < samples; ++s) {
        // w1 w2 stays reduced; with cancellation |ab| << |a||b| and absolute errors swamp ab
        auto w1 = random_reduced_word(rng, g.letters(), 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(max_len))));
        auto w2 = random_reduced_word(rng, g.letters(), 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(max_len))),
                                      w1.back());
        MoebiusMap a = g.word_map(w1), b = g.word_map(w2), ab = a * b;
        auto w12 = w1;
        w12.insert(w12.end(), w2.begin(), w2.end());
        const Mat3& M = g.word_map(w12).matrix();
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                law_matrix = std::max(law_matrix, std::fabs(M[i][j] - ab.matrix()[i][j]) / (a.norm() * b.norm()));
        cplx x = random_disk_point(rng, 0.9);
        law = std::max(law, std::abs(ab.apply(x) - a.apply(b.apply(x))));
        double th = kTwoPi * rng.uniform() - kPi;
        law_boundary = std::max(law_boundary, angle_gap(ab.boundary(th), a.boundary(b.boundary(th))));
        qdef = std::max(qdef, ab.q_defect() / (ab.norm() * ab.norm()));
        cplx bpt = random_disk_point(rng, 0.99);
        tau0 = std::max(tau0, std::abs(hyperbolic_translation(bpt).apply(cplx(0, 0)) - bpt));
        MoebiusMap gam = hyperbolic_translation(random_disk_point(rng, 0.95)) * MoebiusMap::rotation(kTwoPi * rng.uniform());
        MoebiusMap rot = hyperbolic_translation(gam.origin_image()).inverse() * gam;
        const Mat3& R = rot.matrix();
        normal = std::max({normal, std::fabs(R[0][0] - 1), std::fabs(R[0][1]), std::fabs(R[0][2]), std::fabs(R[1][0]),
                           std::fabs(R[2][0])});
        cplx y = random_disk_point(rng, 0.9), z = random_disk_point(rng, 0.9);
        double xi = kTwoPi * rng.uniform() - kPi, eta = kTwoPi * rng.uniform() - kPi;
        double ratio = visual_distance(x, xi, eta) / visual_distance(y, xi, eta);
        double dxy = hyperbolic_distance(x, y);
        band = std::max(band, std::fabs(std::log(ratio)) - dxy);
        double delta = 0.5;
        double cxy = gibbs_cocycle_checked(delta, xi, x, y), cyz = gibbs_cocycle_checked(delta, xi, y, z);
        double cxz = gibbs_cocycle_checked(delta, xi, x, z);
        add_err = std::max(add_err, std::fabs(cxz - cxy - cyz));
        cocycle = std::max(cocycle, std::fabs(cxy - gibbs_cocycle_truncated(delta, xi, x, y).value));
    }
    c.ledger.contract("group law: word of w1 w2 equals the product (relative to |a||b|)", law_matrix <= 1e-10,
                      {{"max_error", law_matrix}, {"tolerance", 1e-10}});
    c.ledger.contract("group law: product acts as the composition on the disk", law <= 1e-10,
                      {{"max_error", law}, {"tolerance", 1e-10}});
    c.ledger.contract("q-form preserved (relative to |M|^2)", qdef <= 1e-10, {{"max_defect", qdef}, {"tolerance", 1e-10}});
    c.ledger.contract("tau_b(0) = b", tau0 <= 1e-12, {{"max_error", tau0}, {"tolerance", 1e-12}});
    c.ledger.contract("tau_{g(0)}^-1 g is a rotation", normal <= 1e-10, {{"max_error", normal}, {"tolerance", 1e-10}});
    c.ledger.contract("visual distance ratio within e^{+-d(x,y)}", band <= 1e-12, {{"worst_excess", band}});
    c.ledger.contract("Gibbs cocycle additive", add_err <= 1e-8, {{"max_error", add_err}, {"tolerance", 1e-8}});
    out["audit"] = {{"samples", samples}, {"group_law_matrix", law_matrix}, {"group_law_disk", law},
                    {"group_law_boundary", law_boundary}, {"q_defect", qdef}, {"tau0", tau0}, {"normal_form", normal},
                    {"band_excess", band}, {"cocycle_vs_truncated", cocycle}, {"cocycle_additivity", add_err}};

    // contraction lemma at several scales
    std::vector<double> ce, cc, cC, ccC;
    for (double e : eps_list) {
        if (!(e > 0 && e < 1)) fail(ErrorKind::Schema, "config.params.contraction.eps: values must lie in (0,1)");
        double len = std::log(2 / e - 1);
        MoebiusMap m = MoebiusMap::rotation(0.7) * MoebiusMap::boost(0.3, len);
        ContractionScale s = contraction_lemma(m, Cc);
        ce.push_back(s.eps), cc.push_back(s.c), cC.push_back(s.C), ccC.push_back(s.c_times_C);
    }
    {
        double hi = *std::max_element(cc.begin(), cc.end()), lo = *std::min_element(cc.begin(), cc.end());
        c.ledger.observe("contraction constant c stable across scales (spread <= 20%)", hi <= 1.2 * lo, {{"c", cc}});
    }
    c.series->add("contraction", eps_list.size(), {Column("eps", ce), Column("c", cc), Column("C", cC), Column("c_times_C", ccC)});

    // the measure
    PsMeasure ps = ps_measure(sys.schottky, depth, G);
    out["delta"] = ps.delta;
    out["delta_word_sums"] = ps.root.delta;
    out["grid_pressure"] = ps.grid_pressure;
    out["atoms"] = ps.atoms.size();
    out["diameter_bound"] = ps.atoms.diameter_bound;
    mass_contract(c, ps.atoms, "PS atom");
    {
        bool inside = true;
        for (double a : ps.angles) {
            bool any = false;
            for (int l = 0; l < g.letters(); ++l) any = any || g.arc(l).contains(a);
            inside = inside && any;
        }
        c.ledger.contract("PS atoms inside the Schottky arcs", inside);
    }
    std::vector<int> all = tv_depths;
    all.push_back(depth);
    std::sort(all.begin(), all.end());
    all.erase(std::unique(all.begin(), all.end()), all.end());
    std::vector<double> td, tv, diam;
    for (int d : all) {
        if (d == depth) {
            td.push_back(d), tv.push_back(ps.tv_max), diam.push_back(ps.atoms.diameter_bound);
            continue;
        }
        PsMeasure q = ps_measure(sys.schottky, d, G);
        td.push_back(d), tv.push_back(q.tv_max), diam.push_back(q.atoms.diameter_bound);
    }
    out["tv"] = ps.tv;
    c.ledger.contract("conformality TV within tolerance", ps.tv_max <= tv_tol, {{"tv", ps.tv_max}, {"tolerance", tv_tol}});
    bool decreasing = true;
    for (std::size_t i = 1; i < tv.size(); ++i) decreasing = decreasing && tv[i] < tv[i - 1];
    c.ledger.observe("conformality TV decreasing with depth", decreasing, {{"tv", tv}});
    c.series->add("ps_tv", all.size(), {Column("depth", td), Column("tv", tv), Column("diameter_bound", diam)});

    double dbox = box_dimension(ps.angles, box[0], box[1]);
    out["box_dimension"] = dbox;
    c.ledger.observe("pressure root within 0.05 of the box-counting dimension", std::fabs(dbox - ps.delta) <= 0.05,
                     {{"delta", ps.delta}, {"box", dbox}});

    std::vector<double> sl, smin, smax, sC;
    for (int L : lengths) {
        ShadowRatios r = shadow_ratios(g, ps, L, R);
        sl.push_back(L), smin.push_back(r.min_ratio), smax.push_back(r.max_ratio), sC.push_back(r.C);
    }
    {
        double hi = *std::max_element(sC.begin(), sC.end()), lo = *std::min_element(sC.begin(), sC.end());
        out["shadow"] = {{"R", R}, {"C", hi}};
        c.ledger.observe("shadow constant finite and stable across lengths (spread <= 10%)", std::isfinite(hi) && hi <= 1.1 * lo,
                         {{"C", sC}});
    }
    c.series->add("shadow", lengths.size(), {Column("length", sl), Column("min_ratio", smin), Column("max_ratio", smax), Column("C", sC)});

    std::vector<double> radii;
    for (int e : radii_exp) radii.push_back(std::ldexp(1.0, -e));
    std::sort(radii.begin(), radii.end());
    auto reg = regularity_exponent(ps.atoms, radii);
    out["regularity"] = {{"exponent", reg.exponent}, {"r_squared", reg.r_squared}};
    c.ledger.observe("PS upper regularity exponent positive", reg.exponent > 0, {{"exponent", reg.exponent}});
    c.series->add("ps_regularity", radii.size(), {Column("radius", reg.radii), Column("sup_mass", reg.sup_mass)},
                  {{"ps_regularity", "radius", "sup_mass", true, true}});
    if (write_atoms)
        c.series->add("ps_atoms", ps.atoms.size(), {Column("angle", ps.angles), Column("weight", ps.atoms.weights)});
}

// ---------------------------------------------------------------- stationary-fit

void run_stationary_fit(Context& c) {
    auto sc = parse_system(c.root.child("system"), {"schottky"});
    Node p = c.root.child("params");
    int depth = static_cast<int>(p.integer("depth", 10, 2, 14));
    int G = static_cast<int>(p.integer("grid_points", 4096, 16, 1 << 16));
    StationaryParams sp;
    sp.C_gamma = p.number("C_gamma", 1.5);
    sp.n_max = static_cast<int>(p.integer("n_max", 3, 1, 8));
    sp.safety = p.number("safety", 1.5);
    sp.beta = p.number("beta", 0.0);
    sp.A = p.number("A", 0.0);
    sp.holder_samples = static_cast<int>(p.integer("holder_samples", 64, 1, 1 << 20));
    int modes = static_cast<int>(p.integer("modes", 32, 0, 1 << 16));
    bool moment_check = p.boolean("moment_check", true);
    double mass_tol = p.number("mass_tolerance", 1e-4);
    double moment_tol = p.number("moment_tolerance", 0.25);
    p.close();
    c.root.close();
    sp.weigh_next = moment_check;

    auto sys = build_system(sc);
    const SchottkyGroup& g = *sys.schottky;
    PsMeasure ps = ps_measure(sys.schottky, depth, G);
    StationarySynthesis st = stationary_synthesis(g, ps, sp);
    Json& out = c.payload;
    out["delta"] = ps.delta;
    out["tv"] = ps.tv_max;
    out["C_gamma"] = st.C_gamma;
    out["alpha_hat"] = st.alpha_hat;
    out["beta"] = st.beta;
    out["A"] = st.A;
    out["eps0"] = st.eps0;
    out["n_max"] = st.n_max;
    out["nu_total"] = st.nu_total;
    out["residual"] = st.residual;
    out["residual_mean"] = st.residual_mean;
    out["mass_identity_defect"] = st.mass_identity_defect;
    out["eta_over_r"] = st.eta_max_over_r;
    out["eta_over_r2"] = st.eta_max_over_r2;
    out["moment"] = {{"eps", st.moment_eps}, {"threshold", st.moment_threshold}};

    c.ledger.contract("sup R_n <= (1 - beta/A^2)^n at every level", st.bound_ok);
    bool positive = true;
    double partial = 0;
    bool partial_ok = true;
    for (const auto& e : st.nu) {
        positive = positive && e.weight > 0;
        partial += e.weight;
        partial_ok = partial_ok && partial <= 1 + 1e-12;
    }
    c.ledger.contract("nu weights positive with partial sums <= 1", positive && partial_ok);
    c.ledger.contract("sum nu + int R_n dmu = 1", st.mass_identity_defect <= mass_tol,
                      {{"defect", st.mass_identity_defect}, {"tolerance", mass_tol}});
    int cover_min = INT32_MAX, cover_max = 0;
    for (const auto& lv : st.levels) cover_min = std::min(cover_min, lv.cover_min), cover_max = std::max(cover_max, lv.cover_max);
    c.ledger.contract("shadows B_gamma cover the limit-set atoms", cover_min >= 1, {{"min", cover_min}, {"max", cover_max}});
    c.ledger.observe("int f_gamma dmu = 1 on level 1 (1e-6)", st.f_integral_defect <= 1e-6, {{"defect", st.f_integral_defect}});
    c.ledger.observe("d(eta_gamma, x_gamma) <= 10 r^2", st.eta_max_over_r2 <= 10, {{"max_over_r2", st.eta_max_over_r2}, {"max_over_r", st.eta_max_over_r}});

    std::vector<std::pair<MoebiusMap, double>> nu;
    for (const auto& e : st.nu) nu.push_back({g.word_map(e.word), e.weight});
    StationaryCheck chk = check_stationary(nu, ps, modes);
    out["check"] = {{"modes", modes}, {"discrepancy", chk.discrepancy}};
    c.ledger.contract("check_stationary <= residual + conformality tolerance", chk.discrepancy <= st.residual + ps.tv_max,
                      {{"discrepancy", chk.discrepancy}, {"residual", st.residual}, {"tolerance", ps.tv_max}});
    std::vector<double> mi;
    for (int m = 0; m <= modes; ++m) mi.push_back(m);
    c.series->add("stationary_modes", static_cast<std::size_t>(modes) + 1, {Column("mode", mi), Column("discrepancy", chk.per_mode)});

    auto level_series = [&](const std::string& name, const StationarySynthesis& s) {
        std::vector<double> n, el, sup, inf, bd, nm, cmin, cmax, mom, fd;
        for (const auto& lv : s.levels)
            n.push_back(lv.n), el.push_back(static_cast<double>(lv.elements)), sup.push_back(lv.sup_R), inf.push_back(lv.inf_R),
                bd.push_back(lv.bound), nm.push_back(lv.nu_mass), cmin.push_back(lv.cover_min), cmax.push_back(lv.cover_max),
                mom.push_back(lv.moment_partial), fd.push_back(lv.f_defect);
        c.series->add(name, static_cast<std::size_t>(s.n_max),
                      {Column("n", n), Column("elements", el), Column("sup_R", sup), Column("inf_R", inf), Column("bound", bd),
                       Column("nu_mass", nm), Column("cover_min", cmin), Column("cover_max", cmax),
                       Column("moment_partial", mom), Column("f_defect", fd)},
                      {{name, "n", "sup_R", false, true}});
    };
    level_series("stationary_levels", st);
    std::vector<std::string> words;
    std::vector<double> wts, kap, lvl;
    for (const auto& e : st.nu)
        words.push_back(word_text(e.word)), wts.push_back(e.weight), kap.push_back(e.kappa), lvl.push_back(e.level);
    c.series->add("nu", st.nu.size(), {Column("word", words), Column("weight", wts), Column("kappa", kap), Column("level", lvl)});

    if (moment_check) {
        // level n_max + 1 weighed on the same R; the eps of both truncations comes from levels 1..n_max
        const SynthesisLevel& a = st.levels.back();
        const SynthesisLevel& b = *st.next;
        double rel = std::fabs(b.moment_extrapolated - a.moment_extrapolated) / b.moment_extrapolated;
        bool finite = std::isfinite(a.moment_extrapolated) && std::isfinite(b.moment_extrapolated);
        out["moment"]["partial"] = {a.moment_partial, b.moment_partial};
        out["moment"]["extrapolated"] = {a.moment_extrapolated, b.moment_extrapolated};
        out["moment"]["relative_change"] = finite ? Json(rel) : Json(nullptr);
        out["moment"]["next_level"] = {{"elements", b.elements}, {"nu_mass", b.nu_mass}};
        c.ledger.observe("exponential moment finite and stable under n_max + 1", finite && rel <= moment_tol,
                         {{"extrapolated", {a.moment_extrapolated, b.moment_extrapolated}},
                          {"relative_change", finite ? Json(rel) : Json(nullptr)},
                          {"tolerance", moment_tol}});
    }
}

// ---------------------------------------------------------------- bms-decay

void run_bms_decay(Context& c) {
    auto sc = parse_system(c.root.child("system"), {"schottky"});
    Node p = c.root.child("params");
    int depth = static_cast<int>(p.integer("depth", 10, 2, 14));
    int G = static_cast<int>(p.integer("grid_points", 4096, 16, 1 << 16));
    auto count = static_cast<std::size_t>(p.integer("count", 100000, 1, 1 << 26));
    double floor_ = p.number("floor", 1e-3);
    double window = p.number("window", 1.0);
    int gap_pairs = static_cast<int>(p.integer("gap_pairs", 100, 1, 1 << 20));
    int j_min = static_cast<int>(p.integer("mode_octave_min", 0, 0, 30));
    int j_max = static_cast<int>(p.integer("mode_octave_max", 10, j_min, 30));
    int per = static_cast<int>(p.integer("modes_per_octave", 4, 1, 64));
    p.close();
    c.root.close();
    std::uint64_t seed = c.require_seed("BMS sampling");

    auto sys = build_system(sc);
    PsMeasure ps = ps_measure(sys.schottky, depth, G);
    BmsSample s = bms_sample(ps, count, seed, floor_, window);
    Json& out = c.payload;
    out["delta"] = ps.delta;
    out["draws"] = s.draws;
    out["rejected_mass"] = s.rejected_mass;
    out["floor"] = s.floor;
    out["window"] = s.window;

    CounterRng rng(seed, 0x9a9);
    double gap_err = 0;
    for (int i = 0; i < gap_pairs; ++i) {
        double a = ps.angles[rng.below(ps.angles.size())], b = ps.angles[rng.below(ps.angles.size())];
        if (a == b) continue;
        TruncatedValue t = gap_truncated(ps.delta, a, b);
        gap_err = std::max(gap_err, std::fabs(gap_closed_form(ps.delta, a, b) - t.value) - t.tail_bound);
    }
    c.ledger.contract("gap closed form matches the truncated limit", gap_err <= 1e-4, {{"worst_excess", gap_err}, {"tolerance", 1e-4}});
    double sym = 0;
    for (int i = 0; i < 1000; ++i) {
        std::size_t a = rng.below(ps.angles.size()), b = rng.below(ps.angles.size());
        double da = visual_distance(cplx(0, 0), ps.angles[a], ps.angles[b]);
        double db = visual_distance(cplx(0, 0), ps.angles[b], ps.angles[a]);
        if (da == 0) continue;
        double wa = ps.atoms.weights[a] * ps.atoms.weights[b] / std::pow(da, 2 * ps.delta);
        double wb = ps.atoms.weights[b] * ps.atoms.weights[a] / std::pow(db, 2 * ps.delta);
        sym = std::max(sym, std::fabs(wa / wb - 1));
    }
    c.ledger.contract("BMS weights symmetric under swapping endpoints", sym <= 1e-14, {{"max_relative", sym}});

    // t marginal: Kolmogorov-Smirnov distance to uniform, weights included
    std::vector<std::pair<double, double>> tw;
    for (std::size_t i = 0; i < s.atoms.size(); ++i) tw.push_back({s.atoms.x(i, 2) / window, s.atoms.weights[i]});
    std::sort(tw.begin(), tw.end());
    double cum = 0, ks = 0, W = s.atoms.total_mass();
    double w2 = 0;
    for (auto [t, w] : tw) {
        ks = std::max(ks, std::fabs(cum / W - t));
        cum += w;
        ks = std::max(ks, std::fabs(cum / W - t));
        w2 += w * w;
    }
    double neff = W * W / w2;
    out["t_marginal"] = {{"ks", ks}, {"effective_size", neff}};
    c.ledger.observe("t marginal uniform (KS at 1% level)", ks <= 1.63 / std::sqrt(neff), {{"ks", ks}, {"bound", 1.63 / std::sqrt(neff)}});

    std::vector<double> modes;
    for (int j = j_min; j <= j_max; ++j)
        for (int i = 0; i < per; ++i) {
            double m = std::round(std::ldexp(std::exp2(static_cast<double>(i) / per), j));
            if (modes.empty() || m > modes.back()) modes.push_back(m);
        }
    FrequencyGrid grid = FrequencyGrid::explicit_values(modes, 2.0);
    std::vector<double> mod(modes.size()), re(modes.size()), im(modes.size());
    parallel_for(modes.size(), [&](std::size_t k) {
        CompensatedComplexSum z;
        for (std::size_t i = 0; i < s.atoms.size(); ++i) z.add(s.atoms.weights[i] * std::polar(1.0, -modes[k] * s.atoms.x(i, 0)));
        cplx v = z.value() / W;
        re[k] = v.real(), im[k] = v.imag(), mod[k] = std::abs(v);
    });
    // sampling noise floor ~ 1/sqrt(neff) plays the role of the truncation bound
    std::vector<double> bound(modes.size(), 1 / std::sqrt(neff));
    DecayReport rep = fit_decay(grid, mod, grid.octave.front(), grid.octave.back(), 0.0, &bound);
    out["decay"] = to_json(rep);
    c.ledger.observe("forward-endpoint marginal decays (rho > 0)", rep.rho && *rep.rho > 0,
                     {{"rho", rep.rho ? Json(*rep.rho) : Json(nullptr)}, {"truncation_limited", rep.truncation_limited}});
    c.series->add("bms_modes", modes.size(), {Column("mode", modes), Column("re", re), Column("im", im), Column("modulus", mod)},
                  {{"bms_decay", "mode", "modulus", true, true}});
}

}  // namespace

const std::vector<ExperimentEntry>& experiment_table() {
    static const std::vector<ExperimentEntry> t{
        {"pressure", run_pressure, "pressure by word sums, shift identity, closed forms, derivative"},
        {"equilibrium", run_equilibrium, "equilibrium cylinder weights, Gibbs constants, large deviations"},
        {"fourier-decay", run_fourier_decay, "Fourier transform of an atomic measure and its decay fit"},
        {"phase-decay", run_phase_decay, "oscillatory integral with a phase and weight, decay fit"},
        {"energy", run_energy, "Frostman energy integrals across depths"},
        {"conv-power", run_conv_power, "multiplicative convolution powers (sum-product probe)"},
        {"exp-sum", run_exp_sum, "exponential sums of zeta products for the perturbed doubling map"},
        {"uni-check", run_uni_check, "UNI scan and certificate"},
        {"tree-bound", run_tree_bound, "tree-lemma bound on Birkhoff-sum derivatives"},
        {"regular-words", run_regular_words, "regular word sets and their complement mass"},
        {"zeta-collisions", run_zeta_collisions, "collision counts of zeta values"},
        {"qnl", run_qnl, "temporal distance statistics and QNL exponent"},
        {"twisted-contraction", run_twisted_contraction, "twisted transfer operator norms"},
        {"ps-measure", run_ps_measure, "Patterson-Sullivan measure of a Schottky group, geometry audit"},
        {"stationary-fit", run_stationary_fit, "stationary measure synthesis for the PS measure"},
        {"bms-decay", run_bms_decay, "Hopf-coordinate sampling and boundary Fourier decay"},
    };
    return t;
}

}  // namespace fracfourier::cli
