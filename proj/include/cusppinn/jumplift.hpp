#pragma once

#include <Eigen/Dense>

#include "cusppinn/net.hpp"
#include "cusppinn/optim.hpp"
#include "cusppinn/problem.hpp"

namespace cusppinn::jumplift {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Carrier of a prescribed solution jump: v = V on Omega-, v = 0 on Omega+,
/// with V a small network over x fitted so that V = -lambda on the interface.
struct JumpLift {
    net::NetworkParams v_params;
    double fit_loss = 0.0;
    optim::TrainReport fit_report;
};

/// Supervised LM fit of a one-hidden-layer network V on the interface points,
/// minimizing mean((V + lambda)^2). Training stops at loss_threshold or after
/// `epochs` LM epochs, whichever comes first.
JumpLift fit_jump_network(const problem::ScalarFn& lambda, const MatrixXd& interface_points,
                          int neurons, uint64_t seed, int epochs,
                          double loss_threshold = 1e-16);

/// Rewrites the problem for the continuous remainder w = u - v: the interior
/// source on Omega- gains -div(beta grad V) + alpha V, the flux jump gains
/// beta- dV/dn, and the solution jump is cleared. Boundary data is unchanged.
problem::InterfaceProblem lift_problem(const problem::InterfaceProblem& prob,
                                       const JumpLift& lift);

/// u(x) = V(x) + w(x) on Omega-, w(x) on Omega+, with w = U_w(x, phi_a(x)).
double compose_solution(const JumpLift& lift, const net::NetworkParams& w_params,
                        const problem::LevelSet& ls, const VectorXd& x);

/// Composed value and gradient for error evaluation.
problem::Prediction compose_prediction(const JumpLift& lift,
                                       const net::NetworkParams& w_params,
                                       const problem::LevelSet& ls, const VectorXd& x);

} // namespace cusppinn::jumplift
