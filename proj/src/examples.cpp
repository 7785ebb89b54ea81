#include <cmath>
#include <memory>
#include <numbers>

#include "cusppinn/bench.hpp"
#include "cusppinn/errors.hpp"

namespace cusppinn::bench {

namespace {

using geometry::BallDomain;
using geometry::BcTag;
using geometry::BoxDomain;
using geometry::CollocationCounts;
using geometry::FlowerDomain;
using geometry::IntervalDomain;
using geometry::PointLevelSet;
using geometry::ShellDomain;
using geometry::SphereLevelSet;
using geometry::StarLevelSet;
using problem::InterfaceProblem;

constexpr double kPi = std::numbers::pi;

VectorXd zero_vec(int d) { return VectorXd::Zero(d); }

/// Skeleton with unit beta, zero alpha/sources and exact-solution boundary
/// data wired up through the region sign (the inner shell boundary of the
/// last example lies inside Omega-, so the side dispatch matters).
InterfaceProblem base_problem(int dim, std::shared_ptr<const problem::LevelSet> ls,
                              std::shared_ptr<const problem::Domain> domain,
                              const ExactSolution& exact) {
    InterfaceProblem p;
    p.dim = dim;
    p.level_set = ls;
    p.domain = domain;
    p.alpha = [](const VectorXd&) { return 0.0; };
    p.beta_minus = [](const VectorXd&) { return 1.0; };
    p.beta_plus = [](const VectorXd&) { return 1.0; };
    p.grad_beta_minus = [dim](const VectorXd&) { return zero_vec(dim); };
    p.grad_beta_plus = [dim](const VectorXd&) { return zero_vec(dim); };
    p.f_minus = [](const VectorXd&) { return 0.0; };
    p.f_plus = [](const VectorXd&) { return 0.0; };
    p.rho = [](const VectorXd&) { return 0.0; };
    p.g = [ls, exact](const VectorXd& x, BcTag tag, const VectorXd& n) {
        const int side = ls->phi(x) > 0.0 ? 1 : -1;
        if (tag == BcTag::Dirichlet) return exact.value(x, side);
        return exact.gradient(x, side).dot(n);
    };
    return p;
}

double knob(const std::optional<double>& v, double def) { return v.value_or(def); }

// --------------------------------------------------------------------------
// ex1: 1-D Poisson with a derivative jump at x = x_gamma

ExampleSpec make_ex1(const ExampleKnobs& k) {
    const double xg = knob(k.x_gamma, 1.0 / 3.0);
    if (!(xg > 0.0 && xg < 1.0)) throw config_error("x_gamma must lie in (0,1)");

    ExampleSpec spec;
    spec.id = "ex1";
    spec.title = "1-D Poisson, unit flux jump at an interior point";
    spec.dim = 1;
    spec.exact.eval = [xg](const std::vector<Dual2>& v, int side) {
        if (side < 0) return (xg - 1.0) * v[0];
        return xg * (v[0] - 1.0);
    };
    auto ls = std::make_shared<PointLevelSet>(xg);
    auto dom = std::make_shared<IntervalDomain>(0.0, 1.0);
    spec.prob = base_problem(1, ls, dom, spec.exact);
    spec.prob.rho = [](const VectorXd&) { return 1.0; };

    spec.default_counts = {10, 1, 2};
    spec.default_arch = {1, 2};
    spec.eps_theta = 1e-10;
    spec.table_archs = {{1, 2}};
    return spec;
}

// --------------------------------------------------------------------------
// ex2: 2-D piecewise-constant coefficient, circular interface in a square

ExampleSpec make_ex2(const ExampleKnobs& k) {
    const double eta = knob(k.eta, 10.0);
    const double gamma = knob(k.gamma, 2.0);
    const double alpha = knob(k.alpha, 1.0);
    const bool mixed = k.mixed_bc.value_or(true);
    if (!(eta > 0.0)) throw config_error("eta must be positive");

    ExampleSpec spec;
    spec.id = "ex2";
    spec.title = "2-D piecewise-constant coefficient, circle in a square";
    spec.dim = 2;
    spec.exact.eval = [eta, gamma](const std::vector<Dual2>& v, int side) {
        const Dual2 s = v[0] * v[0] + v[1] * v[1];
        if (side < 0) return 1.0 - exp((4.0 * s - 1.0) / eta);
        return -gamma * log(4.0 * s);
    };

    auto ls = std::make_shared<SphereLevelSet>(2, 0.5, 4.0); // phi = 4(x^2+y^2) - 1
    std::vector<BcTag> tags(4, BcTag::Dirichlet);
    if (mixed) tags = {BcTag::Dirichlet, BcTag::Dirichlet, BcTag::Neumann, BcTag::Neumann};
    auto dom = std::make_shared<BoxDomain>(VectorXd::Constant(2, -1.0),
                                           VectorXd::Constant(2, 1.0), tags);
    spec.prob = base_problem(2, ls, dom, spec.exact);
    spec.prob.alpha = [alpha](const VectorXd&) { return alpha; };
    spec.prob.beta_minus = [eta](const VectorXd&) { return eta; };
    spec.prob.f_minus = [eta, alpha](const VectorXd& x) {
        const double s = x.squaredNorm();
        const double e = std::exp((4.0 * s - 1.0) / eta);
        return -e * (64.0 * s / eta + 16.0) - alpha * (1.0 - e);
    };
    spec.prob.f_plus = [gamma, alpha](const VectorXd& x) {
        return alpha * gamma * std::log(4.0 * x.squaredNorm());
    };
    spec.prob.rho = [gamma](const VectorXd&) { return -4.0 * (gamma - 1.0); };

    spec.default_m0 = 30;
    spec.counts_from_m0 = [](int m0) {
        return CollocationCounts{m0 * m0, 3 * m0, 4 * m0};
    };
    spec.default_counts = spec.counts_from_m0(30);
    spec.default_arch = {1, 40};
    spec.eps_theta = 1e-10;
    spec.table_archs = {{1, 20}, {1, 30}, {1, 40}, {1, 50}};
    return spec;
}

// --------------------------------------------------------------------------
// ex3: high-contrast coefficients in a five-fold flower domain

ExampleSpec make_ex3(const ExampleKnobs& k) {
    const double eta = knob(k.eta, 1e4);
    if (!(eta > 0.0)) throw config_error("eta must be positive");

    ExampleSpec spec;
    spec.id = "ex3";
    spec.title = "2-D high-contrast coefficients, circle in a flower domain";
    spec.dim = 2;
    spec.exact.eval = [eta](const std::vector<Dual2>& v, int side) {
        const Dual2 s = v[0] * v[0] + v[1] * v[1];
        const Dual2 r3 = s * sqrt(s);
        if (side < 0) return (r3 - 0.125) / eta;
        return 3.0 * (r3 - 0.125);
    };

    auto ls = std::make_shared<SphereLevelSet>(2, 0.5, 4.0);
    auto dom = std::make_shared<FlowerDomain>();
    spec.prob = base_problem(2, ls, dom, spec.exact);
    spec.prob.beta_minus = [eta](const VectorXd&) { return eta; };
    spec.prob.f_minus = [](const VectorXd& x) { return 9.0 * x.norm(); };
    spec.prob.f_plus = [](const VectorXd& x) { return 27.0 * x.norm(); };
    spec.prob.rho = [](const VectorXd&) { return 1.5; };

    if (eta >= 1.0) {
        spec.default_counts = {1138, 120, 240};
        spec.default_arch = {2, 15};
    } else {
        spec.default_counts = {2519, 200, 240};
        spec.default_arch = {2, 28};
    }
    spec.eps_theta = 1e-10;
    spec.table_archs = {{1, 63}, {2, 15}, {3, 11}, {1, 190}, {2, 28}, {3, 20}};
    return spec;
}

// --------------------------------------------------------------------------
// ex4: 3-D variable coefficient inside a sphere, cube domain

ExampleSpec make_ex4(const ExampleKnobs& k) {
    const double b = knob(k.b, 10.0);
    if (!(b > 0.0)) throw config_error("b must be positive");

    ExampleSpec spec;
    spec.id = "ex4";
    spec.title = "3-D variable coefficient, sphere in a cube";
    spec.dim = 3;
    spec.exact.eval = [b](const std::vector<Dual2>& v, int side) {
        const Dual2 s = v[0] * v[0] + v[1] * v[1] + v[2] * v[2];
        if (side < 0) return s;
        // r0 = 1/2: r0^2 = 0.25, r0^4/2 + r0^2 = 0.28125
        return 0.25 + (s * s * 0.5 + s - 0.28125) / b;
    };

    auto ls = std::make_shared<SphereLevelSet>(3, 0.5, 4.0);
    auto dom = std::make_shared<BoxDomain>(VectorXd::Constant(3, -1.0),
                                           VectorXd::Constant(3, 1.0));
    spec.prob = base_problem(3, ls, dom, spec.exact);
    spec.prob.beta_minus = [](const VectorXd& x) { return x.squaredNorm() + 1.0; };
    spec.prob.beta_plus = [b](const VectorXd&) { return b; };
    spec.prob.grad_beta_minus = [](const VectorXd& x) { return VectorXd(2.0 * x); };
    const auto f = [](const VectorXd& x) { return 10.0 * x.squaredNorm() + 6.0; };
    spec.prob.f_minus = f;
    spec.prob.f_plus = f;

    spec.default_counts = {800, 160, 2400};
    spec.default_arch = {1, 40};
    spec.eps_theta = 1e-10;
    spec.table_archs = {{1, 40}, {2, 12}, {3, 9}};
    return spec;
}

// --------------------------------------------------------------------------
// ex5: six-dimensional spheres

ExampleSpec make_ex5(const ExampleKnobs&) {
    ExampleSpec spec;
    spec.id = "ex5";
    spec.title = "6-D Poisson, sphere in a larger sphere";
    spec.dim = 6;
    spec.exact.eval = [](const std::vector<Dual2>& v, int side) {
        Dual2 s = v[0] * v[0];
        for (int i = 1; i < 6; ++i) s = s + v[i] * v[i];
        Dual2 trig = sin(v[0]);
        for (int i = 1; i < 5; ++i) trig = trig + sin(v[i]);
        if (side > 0) return exp(0.25 - s) + trig;
        return 1.0 + 2.0 * sin(0.25 - s) + trig;
    };

    auto ls = std::make_shared<SphereLevelSet>(6, 0.5, 4.0); // (|x|/0.5)^2 - 1
    auto dom = std::make_shared<BallDomain>(6, 0.6);
    spec.prob = base_problem(6, ls, dom, spec.exact);
    spec.prob.f_plus = [](const VectorXd& x) {
        const double s = x.squaredNorm();
        double trig = 0.0;
        for (int i = 0; i < 5; ++i) trig += std::sin(x(i));
        return (4.0 * s - 12.0) * std::exp(0.25 - s) - trig;
    };
    spec.prob.f_minus = [](const VectorXd& x) {
        const double s = x.squaredNorm();
        double trig = 0.0;
        for (int i = 0; i < 5; ++i) trig += std::sin(x(i));
        return -24.0 * std::cos(0.25 - s) - 8.0 * s * std::sin(0.25 - s) - trig;
    };
    spec.prob.rho = [](const VectorXd&) { return 1.0; };

    spec.default_counts = {500, 1064, 1064};
    spec.default_arch = {1, 40};
    spec.eps_theta = 1e-10;
    spec.table_archs = {{1, 10}, {1, 20}, {1, 30}, {1, 40}};
    return spec;
}

// --------------------------------------------------------------------------
// ex6: discontinuous solution across a circle, square domain

ExampleSpec make_ex6(const ExampleKnobs&) {
    ExampleSpec spec;
    spec.id = "ex6";
    spec.title = "2-D discontinuous solution across a circle";
    spec.dim = 2;
    spec.exact.eval = [](const std::vector<Dual2>& v, int side) {
        if (side < 0) return sin(4.0 * kPi * v[0]) * sin(4.0 * kPi * v[1]) + 7.0;
        return 5.0 * exp(-(v[0] * v[0] + v[1] * v[1]));
    };

    auto ls = std::make_shared<SphereLevelSet>(2, 2.0 / 3.0, 1.0); // x^2+y^2-(2/3)^2
    auto dom = std::make_shared<BoxDomain>(VectorXd::Constant(2, -1.0),
                                           VectorXd::Constant(2, 1.0));
    spec.prob = base_problem(2, ls, dom, spec.exact);
    spec.prob.beta_minus = [](const VectorXd&) { return 2.0; };
    spec.prob.beta_plus = [](const VectorXd&) { return 3.0; };
    spec.prob.f_minus = [](const VectorXd& x) {
        return -64.0 * kPi * kPi * std::sin(4.0 * kPi * x(0)) * std::sin(4.0 * kPi * x(1));
    };
    spec.prob.f_plus = [](const VectorXd& x) {
        const double s = x.squaredNorm();
        return 60.0 * (s - 1.0) * std::exp(-s);
    };
    spec.prob.rho = [](const VectorXd& x) {
        const double s = x.squaredNorm();
        const double r = std::sqrt(s);
        const double radial = x(0) * std::cos(4.0 * kPi * x(0)) * std::sin(4.0 * kPi * x(1)) +
                              x(1) * std::sin(4.0 * kPi * x(0)) * std::cos(4.0 * kPi * x(1));
        return -30.0 * r * std::exp(-s) - (8.0 * kPi / r) * radial;
    };
    spec.prob.lambda = [](const VectorXd& x) {
        const double s = x.squaredNorm();
        return 5.0 * std::exp(-s) -
               std::sin(4.0 * kPi * x(0)) * std::sin(4.0 * kPi * x(1)) - 7.0;
    };

    spec.default_counts = {2550, 200, 400};
    spec.default_arch = {1, 155};
    spec.eps_theta = 1e-12;
    spec.discontinuous = true;
    spec.jump_fit = JumpFitSpec{100, 1000, 1000};
    spec.table_archs = {{1, 155}, {2, 25}, {3, 20}};
    return spec;
}

// --------------------------------------------------------------------------
// ex7: star-shaped interface inside a spherical shell, variable beta inside,
// discontinuous solution

ExampleSpec make_ex7(const ExampleKnobs&) {
    ExampleSpec spec;
    spec.id = "ex7";
    spec.title = "3-D star interface in a spherical shell, discontinuous solution";
    spec.dim = 3;
    spec.exact.eval = [](const std::vector<Dual2>& v, int side) {
        if (side < 0) return sin(2.0 * v[0]) * cos(2.0 * v[1]) * exp(v[2]);
        const Dual2 t = (v[1] - v[0]) / 3.0;
        const Dual2 p = 16.0 * pow_int(t, 5) - 20.0 * pow_int(t, 3) + 5.0 * t;
        return p * log(v[0] + v[1] + 3.0) * cos(v[2]);
    };

    auto ls = std::make_shared<StarLevelSet>(0.483, std::vector<double>{0.1, -0.1, 0.15},
                                             std::vector<int>{3, 4, 7},
                                             std::vector<double>{0.5, 1.8, 0.0});
    auto dom = std::make_shared<ShellDomain>(0.151, 0.911);
    spec.prob = base_problem(3, ls, dom, spec.exact);

    spec.prob.beta_minus = [](const VectorXd& x) {
        return 10.0 * (1.0 + 0.2 * std::cos(2.0 * kPi * (x(0) + x(1))) *
                                 std::sin(2.0 * kPi * (x(0) - x(1))) * std::cos(x(2)));
    };
    spec.prob.grad_beta_minus = [](const VectorXd& x) {
        const double A = std::cos(2.0 * kPi * (x(0) + x(1)));
        const double SA = std::sin(2.0 * kPi * (x(0) + x(1)));
        const double B = std::sin(2.0 * kPi * (x(0) - x(1)));
        const double CB = std::cos(2.0 * kPi * (x(0) - x(1)));
        const double C = std::cos(x(2));
        VectorXd g(3);
        g(0) = 4.0 * kPi * C * (A * CB - SA * B);
        g(1) = -4.0 * kPi * C * (SA * B + A * CB);
        g(2) = -2.0 * A * B * std::sin(x(2));
        return g;
    };

    // minus side: u = sin(2x) cos(2y) e^z, so Lap u = -7 u
    const auto grad_u_minus = [](const VectorXd& x) {
        VectorXd g(3);
        const double ez = std::exp(x(2));
        g(0) = 2.0 * std::cos(2.0 * x(0)) * std::cos(2.0 * x(1)) * ez;
        g(1) = -2.0 * std::sin(2.0 * x(0)) * std::sin(2.0 * x(1)) * ez;
        g(2) = std::sin(2.0 * x(0)) * std::cos(2.0 * x(1)) * ez;
        return g;
    };
    const auto beta_minus = spec.prob.beta_minus;
    const auto grad_beta_minus = spec.prob.grad_beta_minus;
    spec.prob.f_minus = [beta_minus, grad_beta_minus, grad_u_minus](const VectorXd& x) {
        const double u = std::sin(2.0 * x(0)) * std::cos(2.0 * x(1)) * std::exp(x(2));
        return beta_minus(x) * (-7.0 * u) + grad_beta_minus(x).dot(grad_u_minus(x));
    };

    // plus side: u = P((y-x)/3) log(x+y+3) cos z with P the degree-5 Chebyshev
    const auto grad_u_plus = [](const VectorXd& x) {
        const double t = (x(1) - x(0)) / 3.0;
        const double t2 = t * t;
        const double P = ((16.0 * t2 - 20.0) * t2 + 5.0) * t;
        const double Pp = (80.0 * t2 - 60.0) * t2 + 5.0;
        const double w = x(0) + x(1) + 3.0;
        const double Q = std::log(w);
        const double cz = std::cos(x(2));
        VectorXd g(3);
        g(0) = (-Pp / 3.0 * Q + P / w) * cz;
        g(1) = (Pp / 3.0 * Q + P / w) * cz;
        g(2) = -P * Q * std::sin(x(2));
        return g;
    };
    spec.prob.f_plus = [](const VectorXd& x) {
        const double t = (x(1) - x(0)) / 3.0;
        const double t2 = t * t;
        const double P = ((16.0 * t2 - 20.0) * t2 + 5.0) * t;
        const double Ppp = (320.0 * t2 - 120.0) * t;
        const double w = x(0) + x(1) + 3.0;
        const double Q = std::log(w);
        const double cz = std::cos(x(2));
        return (2.0 / 9.0) * Ppp * Q * cz - 2.0 * P * cz / (w * w) - P * Q * cz;
    };
    spec.prob.rho = [ls, beta_minus, grad_u_minus, grad_u_plus](const VectorXd& x) {
        const VectorXd n = geometry::unit_normal(*ls, x);
        return grad_u_plus(x).dot(n) - beta_minus(x) * grad_u_minus(x).dot(n);
    };
    spec.prob.lambda = [](const VectorXd& x) {
        const double t = (x(1) - x(0)) / 3.0;
        const double t2 = t * t;
        const double P = ((16.0 * t2 - 20.0) * t2 + 5.0) * t;
        const double up = P * std::log(x(0) + x(1) + 3.0) * std::cos(x(2));
        const double um = std::sin(2.0 * x(0)) * std::cos(2.0 * x(1)) * std::exp(x(2));
        return up - um;
    };

    spec.default_counts = {801, 752, 907};
    spec.default_arch = {1, 50};
    spec.eps_theta = 1e-12;
    spec.discontinuous = true;
    spec.jump_fit = JumpFitSpec{100, 752, 1000};
    spec.table_archs = {{1, 25}, {1, 50}, {1, 100}};
    return spec;
}

} // namespace

std::vector<std::string> example_ids() {
    return {"ex1", "ex2", "ex3", "ex4", "ex5", "ex6", "ex7"};
}

ExampleSpec make_example(const std::string& id, const ExampleKnobs& knobs) {
    if (id == "ex1") return make_ex1(knobs);
    if (id == "ex2") return make_ex2(knobs);
    if (id == "ex3") return make_ex3(knobs);
    if (id == "ex4") return make_ex4(knobs);
    if (id == "ex5") return make_ex5(knobs);
    if (id == "ex6") return make_ex6(knobs);
    if (id == "ex7") return make_ex7(knobs);
    throw config_error("unknown example id '" + id + "'");
}

} // namespace cusppinn::bench
