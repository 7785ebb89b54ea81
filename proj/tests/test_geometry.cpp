#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <memory>

#include "cusppinn/errors.hpp"
#include "cusppinn/geometry.hpp"
#include "cusppinn/rng.hpp"

using namespace cusppinn;
using namespace cusppinn::geometry;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

VectorXd vec2(double x, double y) {
    VectorXd v(2);
    v << x, y;
    return v;
}

std::unique_ptr<StarLevelSet> make_star() {
    return std::make_unique<StarLevelSet>(0.483, std::vector<double>{0.1, -0.1, 0.15},
                                          std::vector<int>{3, 4, 7},
                                          std::vector<double>{0.5, 1.8, 0.0});
}

// finite-difference consistency of analytic level-set derivatives
void check_levelset_derivatives(const LevelSet& ls, const MatrixXd& pts) {
    const double h = 1e-5;
    const int d = ls.dim();
    for (int i = 0; i < pts.rows(); ++i) {
        const VectorXd x = pts.row(i).transpose();
        const VectorXd g = ls.grad_phi(x);
        double lap_fd = 0.0;
        const double f0 = ls.phi(x);
        for (int c = 0; c < d; ++c) {
            VectorXd xp = x, xm = x;
            xp(c) += h;
            xm(c) -= h;
            const double fp = ls.phi(xp), fm = ls.phi(xm);
            const double gfd = (fp - fm) / (2 * h);
            CHECK(std::abs(g(c) - gfd) / std::max(1.0, std::abs(g(c))) < 1e-6);
            lap_fd += (fp - 2 * f0 + fm) / (h * h);
        }
        CHECK(std::abs(ls.lap_phi(x) - lap_fd) / std::max(1.0, std::abs(ls.lap_phi(x))) <
              1e-4);
    }
}

} // namespace

TEST_CASE("latin hypercube stratifies every coordinate") {
    VectorXd lo = VectorXd::Zero(1), hi = VectorXd::Ones(1);
    const MatrixXd pts = latin_hypercube(4, lo, hi, 5);
    std::vector<int> hits(4, 0);
    for (int i = 0; i < 4; ++i) {
        CHECK(pts(i, 0) >= 0.0);
        CHECK(pts(i, 0) < 1.0);
        hits[static_cast<int>(pts(i, 0) * 4)] += 1;
    }
    for (int h : hits) CHECK(h == 1);

    VectorXd lo2 = vec2(-2.0, 1.0), hi2 = vec2(0.0, 4.0);
    const int n = 100;
    const MatrixXd p2 = latin_hypercube(n, lo2, hi2, 17);
    for (int c = 0; c < 2; ++c) {
        std::vector<int> strata(n, 0);
        for (int i = 0; i < n; ++i) {
            const double u = (p2(i, c) - lo2(c)) / (hi2(c) - lo2(c));
            strata[static_cast<int>(u * n)] += 1;
        }
        CHECK(*std::max_element(strata.begin(), strata.end()) == 1);
    }

    CHECK(latin_hypercube(7, lo2, hi2, 3) == latin_hypercube(7, lo2, hi2, 3));
    CHECK(latin_hypercube(7, lo2, hi2, 3) != latin_hypercube(7, lo2, hi2, 4));
    CHECK_THROWS_AS((void)latin_hypercube(0, lo, hi, 1), config_error);
}

TEST_CASE("cusp transform on a 1-D linear level set") {
    PointLevelSet ls(1.0 / 3.0);
    VectorXd x(1);
    x << 0.0;
    const auto c = cusp_eval(ls, x);
    CHECK(c.phi_a == doctest::Approx(1.0 / 3.0));
    CHECK(c.grad_phi_a(0) == doctest::Approx(-1.0));
    CHECK(c.lap_phi_a == 0.0);
    CHECK(c.sign == -1);

    VectorXd on(1);
    on << 1.0 / 3.0;
    CHECK_THROWS_AS((void)cusp_eval(ls, on), geometry_error);
}

TEST_CASE("cusp transform on the scaled circle") {
    // phi = x^2/0.25 + y^2/0.25 - 1 at (1, 0)
    SphereLevelSet ls(2, 0.5, 4.0);
    const auto c = cusp_eval(ls, vec2(1.0, 0.0));
    CHECK(c.phi_a == doctest::Approx(3.0));
    CHECK(c.grad_phi_a(0) == doctest::Approx(8.0));
    CHECK(c.grad_phi_a(1) == doctest::Approx(0.0));
    CHECK(c.lap_phi_a == doctest::Approx(16.0));
    CHECK(c.sign == 1);

    Rng rng(1);
    for (int i = 0; i < 50; ++i) {
        const VectorXd x = vec2(rng.uniform(-1, 1), rng.uniform(-1, 1));
        if (std::abs(ls.phi(x)) < kInterfaceBand) continue;
        CHECK(cusp_eval(ls, x).phi_a >= 0.0);
    }
}

TEST_CASE("unit normals") {
    SphereLevelSet circle(2, 0.5, 1.0);
    const VectorXd n = unit_normal(circle, vec2(0.5, 0.0));
    CHECK(n(0) == doctest::Approx(1.0));
    CHECK(n(1) == doctest::Approx(0.0));

    PointLevelSet line(0.25);
    VectorXd x(1);
    x << 0.9;
    CHECK(unit_normal(line, x)(0) == 1.0);

    auto star = make_star();
    MatrixXd pts, normals;
    star->sample_surface(20, 7, pts, normals);
    const double h = 1e-6;
    for (int i = 0; i < pts.rows(); ++i) {
        CHECK(std::abs(normals.row(i).norm() - 1.0) < 1e-12);
        // finite-difference direction of grad phi agrees
        VectorXd g(3);
        const VectorXd x0 = pts.row(i).transpose();
        for (int c = 0; c < 3; ++c) {
            VectorXd xp = x0, xm = x0;
            xp(c) += h;
            xm(c) -= h;
            g(c) = (star->phi(xp) - star->phi(xm)) / (2 * h);
        }
        g.normalize();
        CHECK((g - normals.row(i).transpose()).norm() < 1e-5);
    }
}

TEST_CASE("built-in level sets: analytic derivatives match finite differences") {
    Rng rng(23);
    const int n = 1000;

    SphereLevelSet s2(2, 0.5, 4.0);
    MatrixXd pts(n, 2);
    for (int i = 0; i < n; ++i)
        pts.row(i) << rng.uniform(0.1, 1.0), rng.uniform(0.1, 1.0);
    check_levelset_derivatives(s2, pts);

    auto star = make_star();
    MatrixXd p3(n, 3);
    for (int i = 0; i < n; ++i) {
        VectorXd dir(3);
        for (int c = 0; c < 3; ++c) dir(c) = rng.gaussian();
        dir.normalize();
        p3.row(i) = (rng.uniform(0.2, 0.9) * dir).transpose();
    }
    check_levelset_derivatives(*star, p3);
}

TEST_CASE("interior sampling respects the domain and the interface band") {
    auto ls = std::make_shared<SphereLevelSet>(2, 0.5, 4.0);
    BoxDomain box(VectorXd::Constant(2, -1.0), VectorXd::Constant(2, 1.0));
    CollocationSet c;
    sample_interior(box, *ls, 900, 99, c);
    CHECK(c.m_interior() == 900);
    for (int i = 0; i < 900; ++i) {
        const VectorXd x = c.interior.row(i).transpose();
        CHECK(box.contains(x));
        CHECK(std::abs(ls->phi(x)) > kInterfaceBand);
        CHECK(c.interior_sign(i) == (ls->phi(x) > 0 ? 1 : -1));
        CHECK(c.interior_sign(i) == cusp_eval(*ls, x).sign);
    }

    // flower domain: every accepted point satisfies r <= 1 - 0.2 cos(5 theta)
    FlowerDomain flower;
    CollocationSet f;
    sample_interior(flower, *ls, 500, 3, f);
    for (int i = 0; i < 500; ++i) {
        const double x = f.interior(i, 0), y = f.interior(i, 1);
        const double r = std::hypot(x, y);
        CHECK(r <= 1.0 - 0.2 * std::cos(5.0 * std::atan2(y, x)));
    }
}

TEST_CASE("interface sampling lands on the surface with unit normals") {
    // circle with the plain (unscaled) form
    SphereLevelSet circle(2, 0.5, 1.0);
    CollocationSet c;
    sample_interface(circle, 4, 11, c);
    for (int i = 0; i < 4; ++i)
        CHECK(std::abs(c.interface_pts.row(i).norm() - 0.5) < 1e-12);

    SphereLevelSet sphere(3, 0.5, 4.0);
    CollocationSet s;
    sample_interface(sphere, 160, 12, s);
    for (int i = 0; i < 160; ++i) {
        CHECK(std::abs(sphere.phi(s.interface_pts.row(i).transpose())) <= kInterfaceTol);
        CHECK(std::abs(s.interface_normals.row(i).norm() - 1.0) < 1e-12);
    }

    SphereLevelSet s6(6, 0.5, 4.0);
    CollocationSet h;
    sample_interface(s6, 64, 13, h);
    for (int i = 0; i < 64; ++i)
        CHECK(std::abs(s6.phi(h.interface_pts.row(i).transpose())) <= kInterfaceTol);

    auto star = make_star();
    CollocationSet st;
    sample_interface(*star, 752, 14, st);
    for (int i = 0; i < 752; ++i)
        CHECK(std::abs(star->phi(st.interface_pts.row(i).transpose())) <= kInterfaceTol);
}

TEST_CASE("boundary sampling per domain kind") {
    IntervalDomain iv(0.0, 1.0);
    const auto s = iv.sample_boundary(2, 0);
    CHECK(s.points(0, 0) == 0.0);
    CHECK(s.points(1, 0) == 1.0);
    CHECK(s.normals(0, 0) == -1.0);
    CHECK(s.normals(1, 0) == 1.0);
    CHECK_THROWS_AS((void)iv.sample_boundary(3, 0), config_error);

    BoxDomain square(VectorXd::Constant(2, -1.0), VectorXd::Constant(2, 1.0),
                     {BcTag::Dirichlet, BcTag::Dirichlet, BcTag::Neumann, BcTag::Neumann});
    const auto b = square.sample_boundary(120, 5);
    CHECK(b.points.rows() == 120);
    int neumann = 0;
    for (int i = 0; i < 120; ++i) {
        const double x = b.points(i, 0), y = b.points(i, 1);
        CHECK(std::max(std::abs(x), std::abs(y)) == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(std::abs(b.normals.row(i).norm() - 1.0) < 1e-12);
        if (b.tags[i] == BcTag::Neumann) {
            ++neumann;
            CHECK(std::abs(y) == doctest::Approx(1.0)); // Neumann faces are y = +-1
        }
    }
    CHECK(neumann == 60);
    CHECK_THROWS_AS((void)square.sample_boundary(121, 5), config_error);

    BoxDomain cube(VectorXd::Constant(3, -1.0), VectorXd::Constant(3, 1.0));
    const auto cb = cube.sample_boundary(2400, 6);
    CHECK(cb.points.rows() == 2400);

    BallDomain ball(6, 0.6);
    const auto bb = ball.sample_boundary(50, 7);
    for (int i = 0; i < 50; ++i)
        CHECK(std::abs(bb.points.row(i).norm() - 0.6) < 1e-12);

    FlowerDomain flower;
    const auto fb = flower.sample_boundary(240, 8);
    for (int i = 0; i < 240; ++i) {
        const double x = fb.points(i, 0), y = fb.points(i, 1);
        const double r = std::hypot(x, y);
        CHECK(std::abs(r - (1.0 - 0.2 * std::cos(5.0 * std::atan2(y, x)))) < 1e-12);
        CHECK(std::abs(fb.normals.row(i).norm() - 1.0) < 1e-12);
    }

    ShellDomain shell(0.151, 0.911);
    const auto sb = shell.sample_boundary(907, 9);
    int outer = 0, inner = 0;
    for (int i = 0; i < 907; ++i) {
        const double r = sb.points.row(i).norm();
        const double rdotn = sb.points.row(i).dot(sb.normals.row(i)) / r;
        if (std::abs(r - 0.911) < 1e-12) {
            ++outer;
            CHECK(rdotn == doctest::Approx(1.0)); // outward
        } else {
            CHECK(std::abs(r - 0.151) < 1e-12);
            ++inner;
            CHECK(rdotn == doctest::Approx(-1.0)); // toward the origin
        }
    }
    // proportional-to-area split
    CHECK(outer + inner == 907);
    const double frac = 0.911 * 0.911 / (0.911 * 0.911 + 0.151 * 0.151);
    CHECK(std::abs(outer - 907 * frac) <= 1.0);
}

TEST_CASE("full collocation assembly and CSV export") {
    auto ls = std::make_shared<SphereLevelSet>(2, 0.5, 4.0);
    auto box = std::make_shared<BoxDomain>(VectorXd::Constant(2, -1.0),
                                           VectorXd::Constant(2, 1.0));
    const auto c = sample_collocation(*box, *ls, {100, 30, 40}, 2024);
    CHECK(c.m_total() == 170);

    const auto c2 = sample_collocation(*box, *ls, {100, 30, 40}, 2024);
    CHECK(c.interior == c2.interior); // determinism
    CHECK(c.interface_pts == c2.interface_pts);
    CHECK(c.boundary_pts == c2.boundary_pts);

    const auto path = std::filesystem::temp_directory_path() / "cusppinn_points.csv";
    write_points_csv(c, path.string());
    std::ifstream in(path);
    std::string header;
    std::getline(in, header);
    CHECK(header == "x1,x2,tag,n1,n2");
    int rows = 0;
    for (std::string line; std::getline(in, line);) ++rows;
    CHECK(rows == 170);
    std::filesystem::remove(path);
}
