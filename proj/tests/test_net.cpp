#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <vector>

#include "cusppinn/errors.hpp"
#include "cusppinn/net.hpp"
#include "cusppinn/rng.hpp"

using namespace cusppinn;
using net::NetworkParams;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

// straight-line re-implementation of the forward map, no Eigen
double forward_reference(const NetworkParams& p, const VectorXd& in) {
    std::vector<double> v(in.data(), in.data() + in.size());
    const int L = p.depth();
    for (int l = 0; l < L; ++l) {
        const int rows = p.layer_sizes[l + 1], cols = p.layer_sizes[l];
        std::vector<double> next(rows);
        for (int k = 0; k < rows; ++k) {
            double a = p.biases[l](k);
            for (int j = 0; j < cols; ++j) a += p.weights[l](k, j) * v[j];
            next[k] = 1.0 / (1.0 + std::exp(-a));
        }
        v = std::move(next);
    }
    double out = 0.0;
    for (int k = 0; k < p.layer_sizes[L]; ++k) out += p.weights[L](0, k) * v[k];
    return out;
}

VectorXd random_input(int d, Rng& rng) {
    VectorXd x(d);
    for (int i = 0; i < d; ++i) x(i) = rng.uniform(-1.5, 1.5);
    return x;
}

double rel_gap(double a, double b, double scale) {
    return std::abs(a - b) / std::max(scale, 1e-12);
}

} // namespace

TEST_CASE("parameter count follows the fan-in formula") {
    CHECK(net::init_params({2, 2, 1}, 7).param_count() == 8); // N_L + sum (N_{l-1}+1) N_l
    CHECK(net::init_params({3, 40, 1}, 0).param_count() == 200);
    CHECK(net::init_params({3, 15, 15, 1}, 0).param_count() == 315);
    CHECK(net::init_params({4, 40, 1}, 0).param_count() == 240);
    CHECK(net::init_params({7, 40, 1}, 0).param_count() == 360);
}

TEST_CASE("initialization is bounded by the fan-in rule and deterministic") {
    const auto p = net::init_params({2, 2, 1}, 7);
    for (int l = 0; l < 2; ++l) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(p.layer_sizes[l]));
        CHECK(p.weights[l].cwiseAbs().maxCoeff() <= bound);
    }
    CHECK(p.biases[0].cwiseAbs().maxCoeff() <= 1.0 / std::sqrt(2.0));

    const auto q = net::init_params({2, 2, 1}, 7);
    CHECK(net::flatten(p) == net::flatten(q)); // bit-identical
    const auto r = net::init_params({2, 2, 1}, 8);
    CHECK(net::flatten(p) != net::flatten(r));
}

TEST_CASE("invalid layer sizes are rejected") {
    CHECK_THROWS_AS((void)net::init_params({2, 1}, 0), config_error);
    CHECK_THROWS_AS((void)net::init_params({2, 0, 1}, 0), config_error);
    CHECK_THROWS_AS((void)net::init_params({2, 3, 2}, 0), config_error);
}

TEST_CASE("flatten/unflatten round-trips bit-exactly") {
    Rng rng(3);
    for (const auto& sizes :
         std::vector<std::vector<int>>{{2, 2, 1}, {3, 7, 5, 1}, {7, 4, 4, 4, 1}}) {
        const auto p = net::init_params(sizes, rng.below(1u << 30));
        const VectorXd theta = net::flatten(p);
        const auto q = net::unflatten(sizes, theta);
        for (size_t l = 0; l < p.weights.size(); ++l) CHECK(p.weights[l] == q.weights[l]);
        for (size_t l = 0; l < p.biases.size(); ++l) CHECK(p.biases[l] == q.biases[l]);
        CHECK(net::flatten(q) == theta);
    }
}

TEST_CASE("forward matches an independent straight-line evaluation") {
    Rng rng(11);
    for (int rep = 0; rep < 20; ++rep) {
        const int d = 1 + static_cast<int>(rng.below(4));
        const std::vector<int> sizes = {d + 1, 5, 4, 1};
        const auto p = net::init_params(sizes, rng.below(1u << 30));
        const VectorXd x = random_input(d + 1, rng);
        const double got = net::forward(p, x);
        const double want = forward_reference(p, x);
        CHECK(rel_gap(got, want, std::max(1.0, std::abs(want))) < 1e-14);
    }
}

TEST_CASE("forward closed-form values") {
    auto p = net::init_params({2, 1, 1}, 0);
    p.weights[0].setZero();
    p.biases[0].setZero();
    p.weights[1](0, 0) = 2.0;
    VectorXd x(2);
    x << 0.3, -1.2;
    CHECK(net::forward(p, x) == 1.0); // 2 * sigmoid(0)

    auto z = net::init_params({3, 4, 1}, 5);
    net::set_flat(z, VectorXd::Zero(z.param_count()));
    VectorXd y(3);
    y << 1.0, 2.0, 3.0;
    CHECK(net::forward(z, y) == 0.0);
    const auto jet = net::forward_jet(z, y);
    CHECK(jet.grad.isZero(0.0));
    CHECK(jet.hess.isZero(0.0));
}

TEST_CASE("forward_jet value equals forward bit-for-bit") {
    Rng rng(21);
    for (int rep = 0; rep < 30; ++rep) {
        const int d = 1 + static_cast<int>(rng.below(6));
        const std::vector<int> sizes = {d + 1, 6, 1};
        const auto p = net::init_params(sizes, rng.below(1u << 30));
        const VectorXd x = random_input(d + 1, rng);
        CHECK(net::forward_jet(p, x).value == net::forward(p, x));
    }
}

TEST_CASE("dimension mismatch raises a contract violation") {
    const auto p = net::init_params({3, 4, 1}, 0);
    CHECK_THROWS_AS((void)net::forward(p, VectorXd::Zero(2)), dimension_error);
    CHECK_THROWS_AS((void)net::forward_jet(p, VectorXd::Zero(4)), dimension_error);
}

TEST_CASE("jet gradient and Hessian match central finite differences") {
    Rng rng(31);
    const double h = 1e-4;
    for (int d : {1, 2, 3, 6}) {
        for (int rep = 0; rep < 25; ++rep) {
            const int D = d + 1;
            const std::vector<int> sizes =
                rep % 2 == 0 ? std::vector<int>{D, 8, 1} : std::vector<int>{D, 5, 5, 1};
            const auto p = net::init_params(sizes, rng.below(1u << 30));
            const VectorXd x = random_input(D, rng);
            const auto jet = net::forward_jet(p, x);

            CHECK(jet.hess == jet.hess.transpose().eval()); // exact symmetry

            VectorXd fd_grad(D);
            MatrixXd fd_hess(D, D);
            const double f0 = net::forward(p, x);
            for (int i = 0; i < D; ++i) {
                VectorXd xp = x, xm = x;
                xp(i) += h;
                xm(i) -= h;
                const double fp = net::forward(p, xp), fm = net::forward(p, xm);
                fd_grad(i) = (fp - fm) / (2.0 * h);
                fd_hess(i, i) = (fp - 2.0 * f0 + fm) / (h * h);
                for (int j = i + 1; j < D; ++j) {
                    VectorXd xpp = x, xpm = x, xmp = x, xmm = x;
                    xpp(i) += h; xpp(j) += h;
                    xpm(i) += h; xpm(j) -= h;
                    xmp(i) -= h; xmp(j) += h;
                    xmm(i) -= h; xmm(j) -= h;
                    fd_hess(i, j) = fd_hess(j, i) =
                        (net::forward(p, xpp) - net::forward(p, xpm) -
                         net::forward(p, xmp) + net::forward(p, xmm)) /
                        (4.0 * h * h);
                }
            }
            // safeguarded relative error: second differences at step 1e-4
            // carry ~1e-7 |f| roundoff, so tiny Hessians are compared on the
            // unit scale
            const double gscale = std::max(jet.grad.cwiseAbs().maxCoeff(), 1.0);
            const double hscale = std::max(jet.hess.cwiseAbs().maxCoeff(), 1.0);
            CHECK((jet.grad - fd_grad).cwiseAbs().maxCoeff() / gscale < 1e-6);
            CHECK((jet.hess - fd_hess).cwiseAbs().maxCoeff() / hscale < 1e-4);
        }
    }
}

TEST_CASE("parameter sensitivities match finite differences over theta") {
    Rng rng(41);
    const double h = 1e-5;
    for (int d : {1, 2, 3, 6}) {
        for (int rep = 0; rep < 3; ++rep) {
            const int D = d + 1;
            const std::vector<int> sizes =
                rep % 2 == 0 ? std::vector<int>{D, 4, 1} : std::vector<int>{D, 3, 3, 1};
            const auto p = net::init_params(sizes, rng.below(1u << 30));
            const VectorXd x = random_input(D, rng);
            const auto [jet, sens] = net::param_jacobian_of_jet(p, x);
            const int nt = p.param_count();
            const VectorXd theta = net::flatten(p);

            double max_gap = 0.0, scale = 1e-6;
            for (int t = 0; t < nt; ++t) {
                VectorXd tp = theta, tm = theta;
                tp(t) += h;
                tm(t) -= h;
                const auto jp = net::forward_jet(net::unflatten(sizes, tp), x);
                const auto jm = net::forward_jet(net::unflatten(sizes, tm), x);
                max_gap = std::max(max_gap,
                                   std::abs(sens.d_value(t) - (jp.value - jm.value) / (2 * h)));
                scale = std::max(scale, std::abs(sens.d_value(t)));
                for (int i = 0; i < D; ++i) {
                    max_gap = std::max(
                        max_gap,
                        std::abs(sens.d_grad(i, t) - (jp.grad(i) - jm.grad(i)) / (2 * h)));
                    scale = std::max(scale, std::abs(sens.d_grad(i, t)));
                    for (int j = 0; j < D; ++j) {
                        max_gap = std::max(max_gap,
                                           std::abs(sens.d_hess_flat(i * D + j, t) -
                                                    (jp.hess(i, j) - jm.hess(i, j)) / (2 * h)));
                        scale = std::max(scale, std::abs(sens.d_hess_flat(i * D + j, t)));
                    }
                }
            }
            CHECK(max_gap / scale < 1e-5);
        }
    }
}

TEST_CASE("sensitivity of the value w.r.t. output weights equals the hidden output") {
    Rng rng(51);
    const auto p = net::init_params({3, 6, 1}, 99);
    const VectorXd x = random_input(3, rng);
    const auto [jet, sens] = net::param_jacobian_of_jet(p, x);
    // recompute the top hidden activations independently
    VectorXd a = p.weights[0] * x + p.biases[0];
    for (int k = 0; k < a.size(); ++k) a(k) = 1.0 / (1.0 + std::exp(-a(k)));
    const int off = p.param_count() - 6;
    for (int k = 0; k < 6; ++k)
        CHECK(rel_gap(sens.d_value(off + k), a(k), std::max(1.0, std::abs(a(k)))) < 1e-15);
}

TEST_CASE("hand-derived sensitivity of dU/dz for a one-neuron net") {
    // U = w_out sigmoid(w_x x + w_z z + b); flat order [w_x, w_z, b, w_out]
    const std::vector<int> sizes = {2, 1, 1};
    VectorXd theta(4);
    theta << 0.7, -0.4, 0.2, 1.3;
    const auto p = net::unflatten(sizes, theta);
    VectorXd in(2);
    in << 0.5, -0.8;
    const double a = 0.7 * 0.5 + (-0.4) * (-0.8) + 0.2;
    const double s = 1.0 / (1.0 + std::exp(-a));
    const double sp = s * (1.0 - s);
    const double spp = sp * (1.0 - 2.0 * s);

    const auto [jet, sens] = net::param_jacobian_of_jet(p, in);
    CHECK(rel_gap(jet.grad(1), 1.3 * sp * (-0.4), 1.0) < 1e-15);
    // d(dU/dz)/d theta by hand
    const double d_wx = 1.3 * (-0.4) * spp * 0.5;
    const double d_wz = 1.3 * (spp * (-0.8) * (-0.4) + sp);
    const double d_b = 1.3 * (-0.4) * spp;
    const double d_wout = sp * (-0.4);
    CHECK(rel_gap(sens.d_grad(1, 0), d_wx, 1.0) < 1e-14);
    CHECK(rel_gap(sens.d_grad(1, 1), d_wz, 1.0) < 1e-14);
    CHECK(rel_gap(sens.d_grad(1, 2), d_b, 1.0) < 1e-14);
    CHECK(rel_gap(sens.d_grad(1, 3), d_wout, 1.0) < 1e-14);
}

TEST_CASE("binary serialization round-trips bit-exactly") {
    const auto p = net::init_params({4, 9, 5, 1}, 1234);
    const auto path = std::filesystem::temp_directory_path() / "cusppinn_net_test.bin";
    net::save_binary(p, path.string());
    const auto q = net::load_binary(path.string());
    CHECK(q.layer_sizes == p.layer_sizes);
    CHECK(net::flatten(q) == net::flatten(p));
    std::filesystem::remove(path);

    const auto r = net::from_json_string(net::to_json_string(p));
    CHECK(net::flatten(r) == net::flatten(p));
}
