#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "cusppinn/bench.hpp"
#include "cusppinn/errors.hpp"
#include "cusppinn/optim.hpp"
#include "cusppinn/rng.hpp"

using namespace cusppinn;
using namespace cusppinn::optim;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

/// Linear least-squares "network": r(theta) = A theta - y, J = A.
struct LinearSystem {
    MatrixXd A;
    VectorXd y;

    problem::ResidualSystem operator()(const net::NetworkParams& p) const {
        problem::ResidualSystem sys;
        const VectorXd theta = net::flatten(p);
        sys.r = A * theta - y;
        sys.J = A;
        sys.loss = sys.r.squaredNorm();
        return sys;
    }
};

} // namespace

TEST_CASE("lm_step closed-form cases") {
    MatrixXd J = MatrixXd::Identity(2, 2);
    VectorXd r(2);
    r << 1.0, 2.0;
    const auto d0 = lm_step(r, J, 0.0);
    REQUIRE(d0.has_value());
    CHECK((*d0)(0) == doctest::Approx(-1.0));
    CHECK((*d0)(1) == doctest::Approx(-2.0));

    const auto d1 = lm_step(r, J, 1.0);
    REQUIRE(d1.has_value());
    CHECK((*d1)(0) == doctest::Approx(-0.5));
    CHECK((*d1)(1) == doctest::Approx(-1.0));
}

TEST_CASE("lm_step satisfies the damped normal equations") {
    Rng rng(2);
    for (int rep = 0; rep < 10; ++rep) {
        const int m = 30, n = 8;
        MatrixXd J(m, n);
        VectorXd r(m);
        for (int i = 0; i < m; ++i) {
            r(i) = rng.uniform(-1, 1);
            for (int j = 0; j < n; ++j) J(i, j) = rng.uniform(-1, 1);
        }
        const double mu = rng.uniform(1e-6, 1.0);
        const auto delta = lm_step(r, J, mu);
        REQUIRE(delta.has_value());
        const VectorXd jtr = J.transpose() * r;
        const VectorXd resid =
            (J.transpose() * J + mu * MatrixXd::Identity(n, n)) * (*delta) + jtr;
        CHECK(resid.norm() <= 1e-10 * jtr.norm());
    }
}

TEST_CASE("lm_step approaches the gradient-descent limit for huge damping") {
    Rng rng(3);
    const int m = 40, n = 6;
    MatrixXd J(m, n);
    VectorXd r(m);
    for (int i = 0; i < m; ++i) {
        r(i) = rng.uniform(-1, 1);
        for (int j = 0; j < n; ++j) J(i, j) = rng.uniform(-1, 1);
    }
    const double mu = 1e8;
    const auto delta = lm_step(r, J, mu);
    REQUIRE(delta.has_value());
    const VectorXd limit = -(J.transpose() * r) / mu;
    CHECK((*delta - limit).norm() / limit.norm() < 1e-4);
}

TEST_CASE("LM reaches the optimum of a linear least-squares problem") {
    Rng rng(5);
    const int m = 24, n = 10;
    LinearSystem sys;
    sys.A.resize(m, n);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) sys.A(i, j) = rng.uniform(-1, 1);
    VectorXd theta_star(n);
    for (int j = 0; j < n; ++j) theta_star(j) = rng.uniform(-2, 2);
    sys.y = sys.A * theta_star;

    // any parameter container with n entries serves as the state
    auto p0 = net::init_params({3, 2, 1}, 9);
    REQUIRE(p0.param_count() == n);
    LMConfig cfg;
    cfg.max_epochs = 5;
    cfg.loss_threshold = 1e-20;
    const auto rep = train_lm_core(
        sys, [&](const net::NetworkParams& p) { return sys(p).loss; }, p0, cfg);
    CHECK(rep.final_loss <= 1e-20);
    CHECK(rep.reason == Termination::Threshold);
    CHECK(rep.epochs <= 5);
    CHECK((net::flatten(rep.params) - theta_star).norm() < 1e-9);
}

TEST_CASE("LM training run: monotone accepted losses, bounded damping, determinism") {
    const auto spec = bench::make_example("ex1");
    const auto colloc = geometry::sample_collocation(*spec.prob.domain, *spec.prob.level_set,
                                                     spec.default_counts, 31);
    const problem::AssemblyContext ctx(colloc, spec.prob, problem::Augmentation::PhiAbs);
    const auto p0 = net::init_params({2, 2, 1}, 11);
    LMConfig cfg;
    cfg.max_epochs = 150;
    cfg.loss_threshold = 1e-12;

    const auto rep = train_lm(ctx, p0, cfg);
    REQUIRE(rep.loss_history.size() >= 2);
    for (size_t e = 1; e < rep.loss_history.size(); ++e) {
        CHECK(rep.loss_history[e] <= rep.loss_history[e - 1]); // non-increasing
        if (rep.accepted_flags[e - 1])
            CHECK(rep.loss_history[e] < rep.loss_history[e - 1]); // strict on accepts
    }
    for (double mu : rep.mu_history) {
        CHECK(mu >= cfg.mu_min);
        CHECK(mu <= cfg.mu_max);
    }
    CHECK(rep.final_loss == rep.loss_history.back());
    CHECK(rep.final_loss < 1e-8); // the 1-D problem trains fast

    const auto rep2 = train_lm(ctx, p0, cfg);
    CHECK(rep2.loss_history == rep.loss_history); // bit-identical rerun
}

TEST_CASE("LM stagnates cleanly when no step can improve") {
    // zero Jacobian: every proposal is rejected
    const auto assemble = [](const net::NetworkParams& p) {
        problem::ResidualSystem sys;
        sys.r = VectorXd::Ones(4);
        sys.J = MatrixXd::Zero(4, p.param_count());
        sys.loss = 4.0;
        return sys;
    };
    const auto p0 = net::init_params({2, 2, 1}, 1);
    LMConfig cfg;
    cfg.max_epochs = 50;
    cfg.loss_threshold = 1e-30;
    const auto rep = train_lm_core(
        assemble, [&](const net::NetworkParams& p) { return assemble(p).loss; }, p0, cfg);
    CHECK(rep.reason == Termination::Stagnation);
    CHECK(rep.rejected >= cfg.max_rejections);
    CHECK(rep.final_loss == 4.0);
}

TEST_CASE("Adam: monotone trend on a quadratic bowl and FD-consistent gradient") {
    Rng rng(6);
    const int m = 16, n = 10;
    LinearSystem sys;
    sys.A.resize(m, n);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) sys.A(i, j) = rng.uniform(-1, 1);
    sys.y = VectorXd::Zero(m);
    auto p0 = net::init_params({3, 2, 1}, 12);
    REQUIRE(p0.param_count() == n);

    AdamConfig cfg;
    cfg.lr = 5e-3;
    cfg.epochs = 400;
    const auto rep = train_adam_core(sys, p0, cfg);
    CHECK(rep.final_loss < 0.2 * rep.loss_history.front());
    CHECK(rep.final_loss < rep.loss_history[20]);

    // gradient used by Adam equals finite differences of the loss
    const auto spec = bench::make_example("ex1");
    const auto colloc = geometry::sample_collocation(*spec.prob.domain, *spec.prob.level_set,
                                                     spec.default_counts, 3);
    const problem::AssemblyContext ctx(colloc, spec.prob, problem::Augmentation::PhiAbs);
    auto params = net::init_params({2, 3, 1}, 4);
    const auto asys = ctx.assemble(params);
    const VectorXd grad = 2.0 * (asys.J.transpose() * asys.r);
    const VectorXd theta = net::flatten(params);
    const double h = 1e-6;
    auto trial = params;
    for (int j = 0; j < theta.size(); ++j) {
        VectorXd tp = theta, tm = theta;
        tp(j) += h;
        tm(j) -= h;
        net::set_flat(trial, tp);
        const double lp = ctx.loss_only(trial);
        net::set_flat(trial, tm);
        const double lm = ctx.loss_only(trial);
        const double fd = (lp - lm) / (2 * h);
        CHECK(std::abs(grad(j) - fd) / std::max(1.0, std::abs(fd)) < 1e-5);
    }
}

TEST_CASE("Adam reports divergence on an explosive learning rate") {
    const auto spec = bench::make_example("ex1");
    const auto colloc = geometry::sample_collocation(*spec.prob.domain, *spec.prob.level_set,
                                                     spec.default_counts, 5);
    const problem::AssemblyContext ctx(colloc, spec.prob, problem::Augmentation::PhiAbs);
    const auto p0 = net::init_params({2, 2, 1}, 2);
    AdamConfig cfg;
    cfg.lr = 1e160;
    cfg.epochs = 200;
    const auto rep = train_adam(ctx, p0, cfg);
    CHECK(rep.reason == Termination::Divergence);
}

TEST_CASE("history CSV export") {
    const auto spec = bench::make_example("ex1");
    const auto colloc = geometry::sample_collocation(*spec.prob.domain, *spec.prob.level_set,
                                                     spec.default_counts, 7);
    const problem::AssemblyContext ctx(colloc, spec.prob, problem::Augmentation::PhiAbs);
    LMConfig cfg;
    cfg.max_epochs = 10;
    const auto rep = train_lm(ctx, net::init_params({2, 2, 1}, 3), cfg);
    const auto path = std::filesystem::temp_directory_path() / "cusppinn_hist.csv";
    write_history_csv(rep, path.string());
    std::ifstream in(path);
    std::string header;
    std::getline(in, header);
    CHECK(header == "epoch,loss,mu,accepted");
    int rows = 0;
    for (std::string line; std::getline(in, line);) ++rows;
    CHECK(rows == static_cast<int>(rep.loss_history.size()));
    std::filesystem::remove(path);
}
