#include "fracfourier/hypgeom.hpp"

#include <algorithm>
#include <cmath>

#include "fracfourier/error.hpp"

namespace fracfourier {

namespace {

double wrap(double a) { return std::remainder(a, kTwoPi); }

cplx on_circle(double theta) { return {std::cos(theta), std::sin(theta)}; }

// distance with 1 - |p|^2 supplied exactly (points near the boundary)
double distance_with(cplx x, double one_minus_x2, cplx p, double one_minus_p2) {
    return 2.0 * std::asinh(std::abs(x - p) / std::sqrt(one_minus_x2 * one_minus_p2));
}

double one_minus_sq(cplx x) { return (1.0 - std::abs(x)) * (1.0 + std::abs(x)); }

// ray point at time t toward e^{i xi}, with 1 - |p|^2 = 1/cosh^2(t/2)
std::pair<cplx, double> ray_point(double xi, double t) {
    double ch = std::cosh(0.5 * t);
    return {std::tanh(0.5 * t) * on_circle(xi), 1.0 / (ch * ch)};
}

// e^{-delta kappa} f_gamma at theta; f_gamma = |(gamma^{-1})'|^delta
double scaled_kernel(double delta, double em1, double phi, double theta) {
    double s = std::sin(0.5 * (theta - phi));
    return std::exp(-delta * std::log1p(em1 * s * s));
}

}  // namespace

// ---------------------------------------------------------------- MoebiusMap

MoebiusMap::MoebiusMap() : m_{{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}} {}

MoebiusMap::MoebiusMap(const Mat3& m) : m_(m) {
    if (!(m_[0][0] >= 1.0 - 1e-9)) fail(ErrorKind::Domain, "matrix does not preserve the upper sheet");
}

MoebiusMap MoebiusMap::rotation(double a) {
    double c = std::cos(a), s = std::sin(a);
    return MoebiusMap(Mat3{{{1, 0, 0}, {0, c, -s}, {0, s, c}}});
}

MoebiusMap MoebiusMap::boost(double axis, double length) {
    double ex = std::cos(axis), ey = std::sin(axis);
    double c = std::cosh(length), sh = std::sinh(length);
    double cm = 2 * std::sinh(0.5 * length) * std::sinh(0.5 * length);  // cosh - 1 without cancellation
    return MoebiusMap(Mat3{{{c, sh * ex, sh * ey},
                            {sh * ex, 1 + cm * ex * ex, cm * ex * ey},
                            {sh * ey, cm * ex * ey, 1 + cm * ey * ey}}});
}

MoebiusMap MoebiusMap::operator*(const MoebiusMap& o) const {
    Mat3 r{};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            double s = 0;
            for (int k = 0; k < 3; ++k) s += m_[i][k] * o.m_[k][j];
            r[i][j] = s;
        }
    MoebiusMap out;
    out.m_ = r;
    return out;
}

MoebiusMap MoebiusMap::inverse() const {
    // J M^T J
    Mat3 r{};
    const double J[3] = {-1, 1, 1};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) r[i][j] = J[i] * m_[j][i] * J[j];
    MoebiusMap out;
    out.m_ = r;
    return out;
}

Vec3 MoebiusMap::apply(const Vec3& v) const {
    Vec3 r{};
    for (int i = 0; i < 3; ++i) r[static_cast<std::size_t>(i)] = m_[i][0] * v[0] + m_[i][1] * v[1] + m_[i][2] * v[2];
    return r;
}

cplx MoebiusMap::apply(cplx x) const { return from_hyperboloid(apply(to_hyperboloid(x))); }

double MoebiusMap::boundary(double theta) const {
    Vec3 v = apply(Vec3{1.0, std::cos(theta), std::sin(theta)});
    return std::atan2(v[2], v[1]);
}

double MoebiusMap::boundary_derivative(double theta) const {
    Vec3 v = apply(Vec3{1.0, std::cos(theta), std::sin(theta)});
    return 1.0 / v[0];
}

double MoebiusMap::kappa() const { return std::acosh(std::max(1.0, m_[0][0])); }
double MoebiusMap::norm() const { return std::exp(kappa()); }
double MoebiusMap::epsilon() const { return 2.0 / (1.0 + std::exp(kappa())); }
cplx MoebiusMap::origin_image() const { return cplx(m_[1][0], m_[2][0]) / (1.0 + m_[0][0]); }
double MoebiusMap::attracting_angle() const { return std::atan2(m_[2][0], m_[1][0]); }

double MoebiusMap::q_defect() const {
    const double J[3] = {-1, 1, 1};
    double worst = 0;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            double s = 0;
            for (int k = 0; k < 3; ++k) s += m_[k][i] * J[k] * m_[k][j];
            worst = std::max(worst, std::fabs(s - (i == j ? J[i] : 0.0)));
        }
    return worst;
}

MoebiusMap hyperbolic_translation(cplx b) {
    double r = std::abs(b);
    if (!(r < 1.0)) fail(ErrorKind::Domain, "translation point must lie in the open disk");
    if (r == 0.0) return MoebiusMap();
    return MoebiusMap::boost(std::arg(b), 2.0 * std::atanh(r));
}

Vec3 to_hyperboloid(cplx x) {
    double d = one_minus_sq(x);
    if (!(d > 0)) fail(ErrorKind::Domain, "point outside the open disk");
    double r2 = std::norm(x);
    return {(1 + r2) / d, 2 * x.real() / d, 2 * x.imag() / d};
}

cplx from_hyperboloid(const Vec3& v) { return cplx(v[1], v[2]) / (1.0 + v[0]); }

double hyperbolic_distance(cplx x, cplx y) { return distance_with(x, one_minus_sq(x), y, one_minus_sq(y)); }

double busemann(double xi, cplx x, cplx y) {
    cplx e = on_circle(xi);
    return std::log(std::norm(x - e) / one_minus_sq(x)) - std::log(std::norm(y - e) / one_minus_sq(y));
}

double visual_distance(cplx x, double xi, double eta) {
    cplx a = on_circle(xi), b = on_circle(eta);
    double num = std::fabs(std::sin(0.5 * (xi - eta)));
    if (num == 0.0) return 0.0;
    return num * one_minus_sq(x) / (std::abs(x - a) * std::abs(x - b));
}

double gibbs_cocycle(double delta, double xi, cplx x, cplx y) { return delta * busemann(xi, x, y); }

TruncatedValue gibbs_cocycle_truncated(double delta, double xi, cplx x, cplx y, double t) {
    auto [p, dp] = ray_point(xi, t);
    double dx = distance_with(x, one_minus_sq(x), p, dp);
    double dy = distance_with(y, one_minus_sq(y), p, dp);
    cplx e = on_circle(xi);
    TruncatedValue r;
    r.value = -delta * (dy - dx);
    r.tail_bound = std::fabs(delta) * 8.0 * std::exp(-t) * (1.0 / std::norm(x - e) + 1.0 / std::norm(y - e));
    return r;
}

double gibbs_cocycle_checked(double delta, double xi, cplx x, cplx y, double tol) {
    double c = gibbs_cocycle(delta, xi, x, y);
    TruncatedValue q = gibbs_cocycle_truncated(delta, xi, x, y);
    if (std::fabs(c - q.value) > tol + q.tail_bound)
        fail(ErrorKind::Contract, "Gibbs cocycle closed form and truncated limit disagree");
    return c;
}

double gap_closed_form(double delta, double xi, double eta) {
    return std::pow(visual_distance(cplx(0, 0), xi, eta), delta);
}

TruncatedValue gap_truncated(double delta, double xi, double eta, double t) {
    auto [p, dp] = ray_point(xi, t);
    auto [q, dq] = ray_point(eta, t);
    double d = distance_with(p, dp, q, dq);
    TruncatedValue r;
    r.value = std::exp(-0.5 * delta * (2 * t - d));
    double s = std::fabs(std::sin(0.5 * (xi - eta)));
    r.tail_bound = r.value * std::fabs(delta) * 4.0 * std::exp(-t) / std::max(s * s, 1e-300);
    return r;
}

bool Arc::contains(double theta) const { return full || std::fabs(wrap(theta - center)) <= half_width; }

Arc shadow(cplx x, cplx y, double R) {
    Arc a;
    double d = hyperbolic_distance(x, y);
    if (d <= R) {
        a.full = true;
        a.half_width = kPi;
        return a;
    }
    MoebiusMap T = hyperbolic_translation(x);
    cplx yo = T.inverse().apply(y);
    double c = std::arg(yo);
    double h = std::asin(std::min(1.0, std::sinh(R) / std::sinh(d)));
    if (x == cplx(0, 0)) {
        a.center = c;
        a.half_width = h;
        return a;
    }
    double e1 = T.boundary(c - h), e2 = T.boundary(c + h);
    double w = e2 - e1;
    w -= kTwoPi * std::floor(w / kTwoPi);
    a.center = wrap(e1 + 0.5 * w);
    a.half_width = 0.5 * w;
    return a;
}

ContractionScale contraction_lemma(const MoebiusMap& g, double C, int mesh) {
    require(C > 0 && mesh >= 16, "contraction probe needs C > 0 and a mesh");
    ContractionScale s;
    s.eps = g.epsilon();
    s.C = C;
    double xm = g.attracting_angle();
    double xr = g.inverse().attracting_angle();
    double hA = C * s.eps;
    std::vector<double> pts;
    for (int j = 0; j < mesh; ++j) pts.push_back(-kPi + kTwoPi * j / mesh);
    if (hA < 2.0) {
        double w = std::acos(1.0 - hA);
        pts.push_back(xr + w);
        pts.push_back(xr - w);
    }
    double worst = 0;
    for (double th : pts) {
        double sr = std::sin(0.5 * (th - xr));
        if (2 * sr * sr < hA * (1 - 1e-12)) continue;
        ++s.mesh;
        double sm = std::sin(0.5 * (g.boundary(th) - xm));
        worst = std::max(worst, 2 * sm * sm);
    }
    s.c = worst / s.eps;
    s.c_times_C = s.c * C;
    return s;
}

// ---------------------------------------------------------------- SchottkyGroup

SchottkyGroup::SchottkyGroup(std::vector<SchottkyGenerator> gens) : gens_(std::move(gens)) {
    require(gens_.size() >= 2, "Schottky group needs at least two generators");
    for (const auto& g : gens_) {
        require(g.length > 0, "translation length must be positive");
        for (int s = 0; s < 2; ++s) {
            double axis = wrap(g.axis + s * kPi);
            maps_.push_back(MoebiusMap::boost(axis, g.length));
            Arc a;
            a.center = axis;
            a.half_width = std::acos(std::tanh(0.5 * g.length));
            arcs_.push_back(a);
        }
    }
    if (!(arc_gap() > 0)) fail(ErrorKind::Domain, "Schottky arcs are not pairwise disjoint");
    std::vector<std::vector<int>> rows(maps_.size(), std::vector<int>(maps_.size(), 1));
    for (std::size_t a = 0; a < maps_.size(); ++a) rows[a][a ^ 1u] = 0;
    m_ = TransitionMatrix(rows);
    init_bounds();
}

std::string SchottkyGroup::name() const { return "schottky"; }

double SchottkyGroup::angle(int a, double u) const {
    const Arc& r = arcs_[static_cast<std::size_t>(a)];
    return wrap(r.center - r.half_width + 2 * r.half_width * u);
}

double SchottkyGroup::chart(int a, double theta) const {
    const Arc& r = arcs_[static_cast<std::size_t>(a)];
    return (wrap(theta - r.center) + r.half_width) / (2 * r.half_width);
}

double SchottkyGroup::arc_gap() const {
    double gap = INFINITY;
    for (std::size_t a = 0; a < arcs_.size(); ++a)
        for (std::size_t b = a + 1; b < arcs_.size(); ++b)
            gap = std::min(gap, std::fabs(wrap(arcs_[a].center - arcs_[b].center)) - arcs_[a].half_width -
                                    arcs_[b].half_width);
    return gap;
}

cplx SchottkyGroup::point(int a, double u) const { return on_circle(angle(a, u)); }

double SchottkyGroup::branch(int a, int b, double u) const {
    return std::clamp(chart(a, maps_[static_cast<std::size_t>(a)].boundary(angle(b, u))), 0.0, 1.0);
}

ChartPoint SchottkyGroup::forward(int a, double u) const {
    double t = maps_[static_cast<std::size_t>(a ^ 1)].boundary(angle(a, u));
    // chart points in the gaps of the limit set land between arcs; they carry no
    // measure and are pinned to the nearest arc end
    int best = 0;
    double gap = INFINITY;
    for (int b = 0; b < letters(); ++b) {
        const Arc& r = arcs_[static_cast<std::size_t>(b)];
        double d = std::fabs(wrap(t - r.center)) - r.half_width;
        if (d < gap) gap = d, best = b;
    }
    return {best, std::clamp(chart(best, t), 0.0, 1.0)};
}

double SchottkyGroup::log_expansion(int a, double u) const {
    return std::log(maps_[static_cast<std::size_t>(a ^ 1)].boundary_derivative(angle(a, u)));
}

MoebiusMap SchottkyGroup::word_map(const std::vector<int>& w) const {
    MoebiusMap m;
    for (int a : w) m = m * maps_[static_cast<std::size_t>(a)];
    return m;
}

std::size_t SchottkyGroup::reduced_count(int n) const {
    if (n == 0) return 1;
    std::size_t k = maps_.size(), c = k;
    for (int i = 1; i < n; ++i) c *= k - 1;
    return c;
}

std::vector<std::vector<int>> SchottkyGroup::reduced_words(int n) const {
    std::vector<std::vector<int>> out{{}};
    for (int len = 0; len < n; ++len) {
        std::vector<std::vector<int>> next;
        for (const auto& w : out)
            for (int a = 0; a < letters(); ++a) {
                if (!w.empty() && a == (w.back() ^ 1)) continue;
                auto v = w;
                v.push_back(a);
                next.push_back(std::move(v));
            }
        out.swap(next);
    }
    return out;
}

std::vector<GroupElement> elements_by_kappa(const SchottkyGroup& g, double lo, double hi) {
    double margin = 0;
    for (const auto& s : g.generators()) margin = std::max(margin, s.length);
    std::vector<GroupElement> out;
    std::vector<GroupElement> stack;
    stack.push_back({{}, MoebiusMap(), 0.0});
    while (!stack.empty()) {
        GroupElement e = std::move(stack.back());
        stack.pop_back();
        if (!e.word.empty() && e.kappa > lo && e.kappa <= hi) out.push_back(e);
        if (e.kappa > hi + margin) continue;
        for (int a = g.letters() - 1; a >= 0; --a) {
            if (!e.word.empty() && a == (e.word.back() ^ 1)) continue;
            GroupElement c;
            c.word = e.word;
            c.word.push_back(a);
            c.map = e.map * g.letter_map(a);
            c.kappa = c.map.kappa();
            stack.push_back(std::move(c));
        }
    }
    return out;
}

// ---------------------------------------------------------------- PS measure

std::vector<double> conformality_audit(const SchottkyGroup& g, const EquilibriumData& eq, const AtomicMeasure& atoms,
                                       double delta, int depth) {
    require(depth >= 2 && depth <= eq.depth, "audit depth outside the cylinder table");
    const CylinderLevel& top = eq.level(depth);
    const CylinderLevel& sub = eq.level(depth - 1);
    require(atoms.size() == top.codes.size(), "atoms do not match the cylinder level");
    const std::uint64_t K = static_cast<std::uint64_t>(g.letters());
    std::uint64_t kpow = 1;
    for (int i = 1; i < depth - 1; ++i) kpow *= K;  // weight of the first letter in a (depth-1)-code
    auto find = [&](std::uint64_t code) -> std::ptrdiff_t {
        auto it = std::lower_bound(top.codes.begin(), top.codes.end(), code);
        if (it == top.codes.end() || *it != code) return -1;
        return it - top.codes.begin();
    };
    std::vector<double> tv(static_cast<std::size_t>(g.letters()));
    for (int a = 0; a < g.letters(); ++a) {
        const MoebiusMap& ga = g.letter_map(a);
        CompensatedSum s;
        for (std::size_t w = 0; w < sub.codes.size(); ++w) {
            std::uint64_t cw = sub.codes[w];
            int first = static_cast<int>(cw / kpow);
            if (first == (a ^ 1)) continue;
            std::ptrdiff_t t = find(static_cast<std::uint64_t>(a) * kpow * K + cw);
            if (t < 0) fail(ErrorKind::Contract, "missing cylinder in conformality audit");
            double pred = 0;
            int last = static_cast<int>(cw % K);
            for (int c = 0; c < g.letters(); ++c) {
                if (c == (last ^ 1)) continue;
                std::ptrdiff_t i = find(cw * K + static_cast<std::uint64_t>(c));
                if (i < 0) continue;
                double th = std::arg(atoms.z(static_cast<std::size_t>(i)));
                pred += atoms.weights[static_cast<std::size_t>(i)] * std::pow(ga.boundary_derivative(th), delta);
            }
            s.add(std::fabs(top.weights[static_cast<std::size_t>(t)] - pred));
        }
        tv[static_cast<std::size_t>(a)] = 0.5 * s.value();
    }
    return tv;
}

PsMeasure ps_measure(SchottkyPtr g, int depth, int grid_points) {
    require(depth >= 2, "PS measure needs depth >= 2");
    PsMeasure ps;
    ps.root = dimension_root(*g, 10);
    // polish on the discretized operator so the eigenmeasure is conformal with factor 1
    auto grid_pressure = [&](double s) {
        TransferOperator L(*g, scaled_log_expansion(g, -s), grid_points);
        return leading_eigen(L).pressure;
    };
    double s0 = ps.root.delta, p0 = grid_pressure(s0);
    double s1 = s0 + 1e-4, p1 = grid_pressure(s1);
    for (int it = 0; it < 8 && std::fabs(p1) > 1e-13 && p1 != p0; ++it) {
        double s2 = s1 - p1 * (s1 - s0) / (p1 - p0);
        s0 = s1, p0 = p1;
        s1 = s2, p1 = grid_pressure(s1);
    }
    ps.delta = s1;
    ps.grid_pressure = p1;
    EquilibriumOptions o;
    o.grid_points = grid_points;
    o.mode = WeightMode::Conformal;
    o.bins = 256;
    auto res = equilibrium(g, scaled_log_expansion(g, -ps.delta), depth, o);
    ps.eq = std::move(res.data);
    ps.atoms = std::move(res.atoms);
    ps.atoms.label = "patterson-sullivan";
    ps.angles.resize(ps.atoms.size());
    for (std::size_t i = 0; i < ps.atoms.size(); ++i) ps.angles[i] = std::arg(ps.atoms.z(i));
    ps.tv = conformality_audit(*g, ps.eq, ps.atoms, ps.delta, depth);
    ps.tv_max = *std::max_element(ps.tv.begin(), ps.tv.end());
    ps.tv_depth = depth;
    return ps;
}

double arc_mass(const std::vector<double>& a, const std::vector<double>& prefix, const Arc& arc) {
    if (arc.full) return prefix.back();
    auto mass = [&](double lo, double hi) {  // [lo, hi] inside [-pi, pi]
        auto i = std::lower_bound(a.begin(), a.end(), lo) - a.begin();
        auto j = std::upper_bound(a.begin(), a.end(), hi) - a.begin();
        return j > i ? prefix[static_cast<std::size_t>(j)] - prefix[static_cast<std::size_t>(i)] : 0.0;
    };
    double lo = arc.center - arc.half_width, hi = arc.center + arc.half_width;
    if (lo < -kPi) return mass(-kPi, hi) + mass(lo + kTwoPi, kPi);
    if (hi > kPi) return mass(lo, kPi) + mass(-kPi, hi - kTwoPi);
    return mass(lo, hi);
}

namespace {

struct SortedAtoms {
    std::vector<double> angles, prefix;
};

SortedAtoms sort_atoms(const PsMeasure& ps) {
    std::vector<std::size_t> idx(ps.angles.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](std::size_t x, std::size_t y) { return ps.angles[x] < ps.angles[y]; });
    SortedAtoms s;
    s.prefix.push_back(0.0);
    for (std::size_t i : idx) {
        s.angles.push_back(ps.angles[i]);
        s.prefix.push_back(s.prefix.back() + ps.atoms.weights[i]);
    }
    return s;
}

}  // namespace

ShadowRatios shadow_ratios(const SchottkyGroup& g, const PsMeasure& ps, int length, double R) {
    SortedAtoms s = sort_atoms(ps);
    ShadowRatios r;
    r.length = length;
    r.min_ratio = INFINITY;
    for (const auto& w : g.reduced_words(length)) {
        MoebiusMap m = g.word_map(w);
        Arc arc = shadow(cplx(0, 0), m.origin_image(), R);
        double ratio = arc_mass(s.angles, s.prefix, arc) / std::exp(-ps.delta * m.kappa());
        r.min_ratio = std::min(r.min_ratio, ratio);
        r.max_ratio = std::max(r.max_ratio, ratio);
        ++r.words;
    }
    r.C = r.min_ratio > 0 ? std::max(r.max_ratio, 1.0 / r.min_ratio) : INFINITY;
    return r;
}

// ---------------------------------------------------------------- stationary synthesis

StationarySynthesis stationary_synthesis(const SchottkyGroup& g, const PsMeasure& ps, const StationaryParams& p) {
    require(p.C_gamma > 0 && p.n_max >= 1, "synthesis needs C_gamma > 0 and n_max >= 1");
    StationarySynthesis out;
    out.C_gamma = p.C_gamma;
    out.n_max = p.n_max;
    out.delta = ps.delta;
    const double delta = ps.delta, C = p.C_gamma;

    struct Elem {
        std::vector<int> word;
        double kappa, em1, phi, eta;
        double sh, ch;     // sin, cos of phi/2
        std::size_t grid;  // index of eta in the grid
    };
    const int n_top = p.n_max + (p.weigh_next ? 1 : 0);
    std::vector<std::vector<Elem>> S(static_cast<std::size_t>(n_top) + 1);
    std::vector<double> grid = ps.angles;
    const std::size_t n_atoms = grid.size();
    for (int n = 1; n <= n_top; ++n) {
        auto els = elements_by_kappa(g, 4 * C * n, 4 * C * n + 2 * C);
        if (els.empty()) fail(ErrorKind::Domain, "empty level S_n: C_gamma too small for the generators");
        for (auto& e : els) {
            Elem x;
            x.word = e.word;
            x.kappa = e.kappa;
            x.em1 = std::expm1(2 * e.kappa);
            x.phi = e.map.attracting_angle();
            x.sh = std::sin(0.5 * x.phi);
            x.ch = std::cos(0.5 * x.phi);
            // eta = gamma(center of an arc far from the repelling direction)
            double rep = e.map.inverse().attracting_angle();
            int last = e.word.back();
            double best = -1, hat = 0;
            for (int b = 0; b < g.letters(); ++b) {
                if (b == (last ^ 1)) continue;
                double d = visual_distance(cplx(0, 0), g.arc(b).center, rep);
                if (d > best) best = d, hat = g.arc(b).center;
            }
            x.eta = e.map.boundary(hat);
            double r = std::exp(-e.kappa);
            double dm = visual_distance(cplx(0, 0), x.eta, x.phi);
            if (n <= p.n_max) {
                out.eta_max_over_r = std::max(out.eta_max_over_r, dm / r);
                out.eta_max_over_r2 = std::max(out.eta_max_over_r2, dm / (r * r));
            }
            x.grid = grid.size();
            grid.push_back(x.eta);
            S[static_cast<std::size_t>(n)].push_back(std::move(x));
        }
    }

    // Hoelder exponent of f_gamma ratios at scale r_gamma
    {
        std::vector<double> slopes;
        const auto& L1 = S[1];
        std::size_t step = std::max<std::size_t>(1, L1.size() / static_cast<std::size_t>(std::max(1, p.holder_samples)));
        for (std::size_t i = 0; i < L1.size(); i += step) {
            const Elem& e = L1[i];
            double r = std::exp(-e.kappa);
            std::vector<double> x, y;
            for (int j = 1; j <= 10; ++j) {
                double d = r * std::ldexp(1.0, -j);
                double f0 = scaled_kernel(delta, e.em1, e.phi, e.eta);
                double f1 = scaled_kernel(delta, e.em1, e.phi, e.eta + 2 * std::asin(d));
                double v = std::fabs(f1 / f0 - 1);
                if (v > 0) {
                    x.push_back(std::log(d / r));
                    y.push_back(std::log(v));
                }
            }
            if (x.size() >= 3) slopes.push_back(fit_line(x, y).slope);
        }
        std::sort(slopes.begin(), slopes.end());
        out.alpha_hat = slopes.empty() ? 1.0 : std::min(1.0, slopes[slopes.size() / 2]);
    }
    out.beta = p.beta > 0 ? p.beta : 0.5 * (1 - std::exp(-4 * C * out.alpha_hat));
    require(out.beta > 0 && out.beta < 1, "beta outside (0,1)");
    out.eps0 = -std::log1p(-out.beta) / (4 * C);

    // level n only needs P_n on the atoms and on the anchors of later levels
    std::vector<std::size_t> later(static_cast<std::size_t>(n_top) + 2, grid.size());
    for (int n = n_top; n >= 1; --n)
        later[static_cast<std::size_t>(n) - 1] =
            S[static_cast<std::size_t>(n)].empty() ? later[static_cast<std::size_t>(n)] : S[static_cast<std::size_t>(n)].front().grid;
    auto active = [&](int n) {
        std::vector<std::size_t> idx(n_atoms);
        for (std::size_t k = 0; k < n_atoms; ++k) idx[k] = k;
        for (std::size_t k = later[static_cast<std::size_t>(n)]; k < grid.size(); ++k) idx.push_back(k);
        return idx;
    };
    // sin((th - phi)/2) from half-angle products; same rounding scale as the direct difference
    auto apply_P = [&](int n, const std::vector<double>& R, const std::vector<std::size_t>& idx) {
        const auto& L = S[static_cast<std::size_t>(n)];
        std::vector<double> w(L.size());
        for (std::size_t i = 0; i < L.size(); ++i) w[i] = R[L[i].grid];
        std::vector<double> P(idx.size());
        parallel_for(idx.size(), [&](std::size_t j) {
            CompensatedSum s;
            double th = grid[idx[j]];
            double sh = std::sin(0.5 * th), ch = std::cos(0.5 * th);
            for (std::size_t i = 0; i < L.size(); ++i) {
                const Elem& e = L[i];
                double sn = sh * e.ch - ch * e.sh;
                s.add(w[i] * std::exp(-delta * std::log1p(e.em1 * sn * sn)));
            }
            P[j] = s.value();
        });
        return P;
    };

    std::vector<double> R(grid.size(), 1.0);
    if (p.A > 0) {
        out.A = p.A;
    } else {
        auto P1 = apply_P(1, R, active(0));
        double hi = 0, lo = INFINITY;
        for (double v : P1) hi = std::max(hi, v), lo = std::min(lo, v);
        out.A = p.safety * std::max(hi, 1.0 / lo);
    }
    const double ba = out.beta / out.A;
    const double contraction = 1 - out.beta / (out.A * out.A);

    std::vector<double> sorted_angles(ps.angles);
    std::sort(sorted_angles.begin(), sorted_angles.end());
    for (int n = 1; n <= p.n_max; ++n) {
        const auto& L = S[static_cast<std::size_t>(n)];
        auto idx = active(n);
        auto P = apply_P(n, R, idx);
        SynthesisLevel lv;
        lv.n = n;
        lv.elements = L.size();
        for (const Elem& e : L) {
            NuEntry nu;
            nu.word = e.word;
            nu.kappa = e.kappa;
            nu.level = n;
            nu.weight = ba * R[e.grid] * std::exp(-delta * e.kappa);
            lv.nu_mass += nu.weight;
            out.nu.push_back(std::move(nu));
        }
        lv.sup_R = -INFINITY;
        lv.inf_R = INFINITY;
        for (std::size_t j = 0; j < idx.size(); ++j) {
            double v = R[idx[j]] -= ba * P[j];
            lv.sup_R = std::max(lv.sup_R, v);
            lv.inf_R = std::min(lv.inf_R, v);
        }
        if (!(lv.inf_R > 0))
            fail(ErrorKind::Contract, "R_n turned non-positive at level " + std::to_string(n) + ": parameters invalid");
        lv.bound = std::pow(contraction, n);
        if (lv.sup_R > lv.bound * (1 + 1e-12)) out.bound_ok = false;
        // covering multiplicity of the shadows B_gamma over the atoms: +1/-1 events on sorted angles
        std::vector<int> diff(n_atoms + 1, 0);
        auto mark = [&](double lo, double hi) {  // [lo, hi] inside [-pi, pi]
            auto i = std::lower_bound(sorted_angles.begin(), sorted_angles.end(), lo) - sorted_angles.begin();
            auto j = std::upper_bound(sorted_angles.begin(), sorted_angles.end(), hi) - sorted_angles.begin();
            if (j > i) ++diff[static_cast<std::size_t>(i)], --diff[static_cast<std::size_t>(j)];
        };
        for (const Elem& e : L) {
            double s = std::sinh(C) / std::sinh(e.kappa);
            if (s >= 1) {
                mark(-kPi, kPi);
                continue;
            }
            double lo = e.phi - std::asin(s), hi = e.phi + std::asin(s);
            if (lo < -kPi) mark(-kPi, hi), mark(lo + kTwoPi, kPi);
            else if (hi > kPi) mark(lo, kPi), mark(-kPi, hi - kTwoPi);
            else mark(lo, hi);
        }
        lv.cover_min = INT32_MAX;
        lv.cover_max = 0;
        for (std::size_t k = 0, c = 0; k < n_atoms; ++k) {
            c = static_cast<std::size_t>(static_cast<std::ptrdiff_t>(c) + diff[k]);
            lv.cover_min = std::min(lv.cover_min, static_cast<int>(c));
            lv.cover_max = std::max(lv.cover_max, static_cast<int>(c));
        }
        out.levels.push_back(lv);
    }

    if (p.weigh_next) {
        SynthesisLevel lv;
        lv.n = n_top;
        lv.elements = S[static_cast<std::size_t>(n_top)].size();
        for (const Elem& e : S[static_cast<std::size_t>(n_top)]) {
            NuEntry nu;
            nu.word = e.word;
            nu.kappa = e.kappa;
            nu.level = n_top;
            nu.weight = ba * R[e.grid] * std::exp(-delta * e.kappa);
            lv.nu_mass += nu.weight;
            out.nu_next.push_back(std::move(nu));
        }
        out.next = lv;
    }

    // exponential moment: threshold from the level decay of nu mass
    {
        std::vector<double> x, y;
        for (const auto& lv : out.levels)
            if (lv.nu_mass > 0) {
                x.push_back(lv.n);
                y.push_back(std::log(lv.nu_mass));
            }
        double rate = x.size() >= 2 ? -fit_line(x, y).slope : 0.0;
        out.moment_threshold = std::max(0.0, rate) / (4 * C);
        out.moment_eps = 0.5 * out.moment_threshold;
        std::vector<double> per_level(out.levels.size(), 0.0);
        for (const auto& nu : out.nu)
            per_level[static_cast<std::size_t>(nu.level - 1)] += nu.weight * std::exp(out.moment_eps * nu.kappa);
        if (out.next) {
            double m = 0;
            for (const auto& nu : out.nu_next) m += nu.weight * std::exp(out.moment_eps * nu.kappa);
            per_level.push_back(m);
        }
        double acc = 0;
        for (std::size_t i = 0; i < per_level.size(); ++i) {
            acc += per_level[i];
            SynthesisLevel& lv = i < out.levels.size() ? out.levels[i] : *out.next;
            lv.moment_partial = acc;
            double q = i > 0 && per_level[i - 1] > 0 ? per_level[i] / per_level[i - 1] : 1.0;
            lv.moment_extrapolated = q < 1 ? acc + per_level[i] * q / (1 - q) : INFINITY;
        }
    }

    CompensatedSum tot, mean;
    for (const auto& nu : out.nu) tot.add(nu.weight);
    out.nu_total = tot.value();
    out.R_atoms.assign(R.begin(), R.begin() + static_cast<std::ptrdiff_t>(n_atoms));
    out.residual = *std::max_element(out.R_atoms.begin(), out.R_atoms.end());
    for (std::size_t k = 0; k < n_atoms; ++k) mean.add(ps.atoms.weights[k] * out.R_atoms[k]);
    out.residual_mean = mean.value();

    // int f_gamma dmu = 1 on a sample of every level; deep kernels are narrower than the atoms resolve
    for (int n = 1; n <= p.n_max; ++n) {
        const auto& L = S[static_cast<std::size_t>(n)];
        std::size_t step = std::max<std::size_t>(1, L.size() / 32);
        std::vector<std::size_t> pick;
        for (std::size_t i = 0; i < L.size(); i += step) pick.push_back(i);
        std::vector<double> defect(pick.size());
        parallel_for(pick.size(), [&](std::size_t j) {
            const Elem& e = L[pick[j]];
            CompensatedSum s;
            for (std::size_t k = 0; k < n_atoms; ++k)
                s.add(ps.atoms.weights[k] * std::exp(delta * e.kappa) * scaled_kernel(delta, e.em1, e.phi, grid[k]));
            defect[j] = std::fabs(s.value() - 1);
        });
        double d = *std::max_element(defect.begin(), defect.end());
        out.levels[static_cast<std::size_t>(n) - 1].f_defect = d;
        if (n == 1) out.f_integral_defect = d;
    }
    out.mass_identity_defect = std::fabs(out.nu_total + out.residual_mean - 1);
    return out;
}

StationaryCheck check_stationary(const std::vector<std::pair<MoebiusMap, double>>& nu, const PsMeasure& ps, int M) {
    require(M >= 0, "mode bound must be >= 0");
    const std::size_t n = ps.angles.size();
    struct K {
        double kappa, em1, sh, ch, w;
    };
    std::vector<K> ks;
    for (const auto& [m, w] : nu) {
        double phi = m.attracting_angle();
        ks.push_back({m.kappa(), std::expm1(2 * m.kappa()), std::sin(0.5 * phi), std::cos(0.5 * phi), w});
    }
    std::vector<double> dens(n);
    parallel_for(n, [&](std::size_t i) {
        CompensatedSum s;
        double sh = std::sin(0.5 * ps.angles[i]), ch = std::cos(0.5 * ps.angles[i]);
        for (const K& k : ks) {
            double sn = sh * k.ch - ch * k.sh;
            s.add(k.w * std::exp(ps.delta * (k.kappa - std::log1p(k.em1 * sn * sn))));
        }
        dens[i] = s.value() - 1.0;
    });
    StationaryCheck c;
    for (int m = 0; m <= M; ++m) {
        CompensatedComplexSum s;
        for (std::size_t i = 0; i < n; ++i) s.add(ps.atoms.weights[i] * dens[i] * std::polar(1.0, -m * ps.angles[i]));
        double v = std::abs(s.value());
        c.per_mode.push_back(v);
        c.discrepancy = std::max(c.discrepancy, v);
    }
    return c;
}

// ---------------------------------------------------------------- BMS

BmsSample bms_sample(const PsMeasure& ps, std::size_t count, std::uint64_t seed, double floor, double window) {
    require(count >= 1 && window > 0 && floor >= 0, "bms sampling needs count, window > 0, floor >= 0");
    std::vector<double> cum(ps.atoms.size());
    double acc = 0;
    for (std::size_t i = 0; i < cum.size(); ++i) cum[i] = acc += ps.atoms.weights[i];
    CounterRng rng(seed, 0xb5);
    auto draw = [&]() {
        double u = rng.uniform() * acc;
        auto it = std::upper_bound(cum.begin(), cum.end(), u);
        return static_cast<std::size_t>(std::min<std::ptrdiff_t>(it - cum.begin(), static_cast<std::ptrdiff_t>(cum.size()) - 1));
    };
    BmsSample b;
    b.floor = floor;
    b.window = window;
    b.atoms.dim = 3;
    b.atoms.label = "bms";
    b.atoms.diameter_bound = ps.atoms.diameter_bound;
    std::size_t rejected = 0;
    const std::size_t cap = 4 * count + 1000;
    while (b.atoms.size() < count) {
        if (b.draws >= cap) fail(ErrorKind::Domain, "BMS rejection rate above 50%: floor too high");
        ++b.draws;
        double xi = ps.angles[draw()], eta = ps.angles[draw()];
        double t = window * rng.uniform();
        double d = visual_distance(cplx(0, 0), xi, eta);
        if (d < floor) {
            ++rejected;
            continue;
        }
        b.atoms.coords.insert(b.atoms.coords.end(), {xi, eta, t});
        b.atoms.weights.push_back(std::pow(d, -2 * ps.delta));
    }
    b.rejected_mass = static_cast<double>(rejected) / static_cast<double>(b.draws);
    if (b.rejected_mass > 0.5) fail(ErrorKind::Domain, "BMS rejection rate above 50%: floor too high");
    double tot = 0;
    for (double w : b.atoms.weights) tot += w;
    for (double& w : b.atoms.weights) w /= tot;
    return b;
}

}  // namespace fracfourier
