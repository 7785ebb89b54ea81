#include "cusppinn/jumplift.hpp"

#include <cmath>
#include <memory>

#include "cusppinn/errors.hpp"

namespace cusppinn::jumplift {

namespace {

/// Residual system of the supervised fit: rows sqrt(1/M) (V(x_i) + lambda_i).
problem::ResidualSystem fit_system(const net::NetworkParams& p, const MatrixXd& pts,
                                   const VectorXd& lambdas, bool with_jacobian) {
    const int m = static_cast<int>(pts.rows());
    const double w = std::sqrt(1.0 / m);
    problem::ResidualSystem sys;
    sys.r.resize(m);
    if (with_jacobian) sys.J.resize(m, p.param_count());
    net::JetWorkspace ws;
    VectorXd grad(p.param_count());
    net::JetSeeds seeds;
    const int D = p.input_dim();
    seeds.v = w;
    seeds.g = VectorXd::Zero(D);
    seeds.H = MatrixXd::Zero(D, D);
    for (int i = 0; i < m; ++i) {
        net::forward_jet_ws(p, pts.row(i).transpose(), ws);
        sys.r(i) = w * (ws.jet.value + lambdas(i));
        if (with_jacobian) {
            net::backward_param_gradient(p, ws, seeds, grad);
            sys.J.row(i) = grad.transpose();
        }
    }
    sys.loss = sys.r.squaredNorm();
    return sys;
}

} // namespace

JumpLift fit_jump_network(const problem::ScalarFn& lambda, const MatrixXd& interface_points,
                          int neurons, uint64_t seed, int epochs, double loss_threshold) {
    const int m = static_cast<int>(interface_points.rows());
    if (m < 1) throw config_error("jump fit needs at least one interface point");
    const int d = static_cast<int>(interface_points.cols());

    VectorXd lambdas(m);
    for (int i = 0; i < m; ++i) lambdas(i) = lambda(interface_points.row(i).transpose());

    net::NetworkParams p0 = net::init_params({d, neurons, 1}, seed);
    optim::LMConfig cfg;
    cfg.max_epochs = epochs;
    cfg.loss_threshold = loss_threshold;

    const auto assemble = [&](const net::NetworkParams& p) {
        return fit_system(p, interface_points, lambdas, true);
    };
    const auto loss_only = [&](const net::NetworkParams& p) {
        return fit_system(p, interface_points, lambdas, false).loss;
    };

    JumpLift lift;
    lift.fit_report = optim::train_lm_core(assemble, loss_only, p0, cfg);
    lift.v_params = lift.fit_report.params;
    lift.fit_loss = lift.fit_report.final_loss;
    if (!std::isfinite(lift.fit_loss)) throw numerics_error("jump fit diverged");
    return lift;
}

problem::InterfaceProblem lift_problem(const problem::InterfaceProblem& prob,
                                       const JumpLift& lift) {
    if (!prob.has_lambda())
        throw config_error("lift_problem requires a problem with a solution jump");

    auto v_net = std::make_shared<net::NetworkParams>(lift.v_params);

    problem::InterfaceProblem out = prob;
    out.lambda = nullptr;

    const auto f_minus_old = prob.f_minus;
    const auto beta_minus = prob.beta_minus;
    const auto grad_beta_minus = prob.grad_beta_minus;
    const auto alpha = prob.alpha;
    out.f_minus = [=](const VectorXd& x) {
        const net::Jet2 jv = net::forward_jet(*v_net, x);
        const double div_term = beta_minus(x) * jv.hess.trace() +
                                grad_beta_minus(x).dot(jv.grad);
        return f_minus_old(x) - div_term + alpha(x) * jv.value;
    };

    const auto rho_old = prob.rho;
    const auto ls = prob.level_set;
    out.rho = [=](const VectorXd& x) {
        const net::Jet2 jv = net::forward_jet(*v_net, x);
        const VectorXd n = geometry::unit_normal(*ls, x);
        return rho_old(x) + beta_minus(x) * jv.grad.dot(n);
    };

    // Boundary faces inside Omega- (a hole enclosed by the interface) see
    // v = V there, so the datum for w is g - V (or g - dV/dn for Neumann).
    // Faces in Omega+ are untouched since v = 0 there.
    const auto g_old = prob.g;
    out.g = [=](const VectorXd& x, geometry::BcTag tag, const VectorXd& n) {
        const double g = g_old(x, tag, n);
        if (ls->phi(x) >= 0.0) return g;
        const net::Jet2 jv = net::forward_jet(*v_net, x);
        if (tag == geometry::BcTag::Dirichlet) return g - jv.value;
        return g - jv.grad.dot(n);
    };
    return out;
}

double compose_solution(const JumpLift& lift, const net::NetworkParams& w_params,
                        const problem::LevelSet& ls, const VectorXd& x) {
    return compose_prediction(lift, w_params, ls, x).value;
}

problem::Prediction compose_prediction(const JumpLift& lift,
                                       const net::NetworkParams& w_params,
                                       const problem::LevelSet& ls, const VectorXd& x) {
    const double ph = ls.phi(x);
    if (std::abs(ph) < geometry::kInterfaceBand)
        throw geometry_error("composed solution is two-valued on the interface");
    problem::Prediction pred = problem::predict(w_params, ls, x, problem::Augmentation::PhiAbs);
    if (ph < 0.0) {
        const net::Jet2 jv = net::forward_jet(lift.v_params, x);
        pred.value += jv.value;
        pred.grad += jv.grad;
    }
    return pred;
}

} // namespace cusppinn::jumplift
