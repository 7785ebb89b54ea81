#pragma once

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <optional>
#include <string>

#include "cusppinn/geometry.hpp"
#include "cusppinn/net.hpp"

namespace cusppinn::problem {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using geometry::BcTag;
using geometry::CollocationSet;
using geometry::CuspEval;
using geometry::Domain;
using geometry::LevelSet;

using ScalarFn = std::function<double(const VectorXd&)>;
using VectorFn = std::function<VectorXd(const VectorXd&)>;
/// Boundary datum: Dirichlet value or Neumann normal-derivative value.
using BoundaryFn = std::function<double(const VectorXd&, BcTag, const VectorXd& normal)>;

/// div(beta grad u) - alpha u = f in Omega+-, with [u] = lambda (zero when
/// absent), [beta du/dn] = rho on the interface, and g on the outer boundary.
struct InterfaceProblem {
    int dim = 0;
    std::shared_ptr<const LevelSet> level_set;
    std::shared_ptr<const Domain> domain;
    ScalarFn alpha;
    ScalarFn beta_minus, beta_plus;
    VectorFn grad_beta_minus, grad_beta_plus;
    ScalarFn f_minus, f_plus;
    ScalarFn rho;
    BoundaryFn g;
    ScalarFn lambda; // solution jump; empty when the solution is continuous
    double c_gamma = 1.0;
    double c_b = 1.0;

    bool has_lambda() const { return static_cast<bool>(lambda); }
};

/// Which feature the network sees besides x: the cusp transform |phi|, the
/// smooth level set phi (comparison variant), or nothing.
enum class Augmentation { PhiAbs, Phi, None };

std::string augmentation_name(Augmentation a);
Augmentation augmentation_from_name(const std::string& s);

/// Network input width for a d-dimensional problem under a given augmentation.
inline int input_width(int dim, Augmentation a) {
    return a == Augmentation::None ? dim : dim + 1;
}

/// div(beta grad u) at one off-interface point, rewritten in terms of the
/// network jet at (x, phi_a(x)):
///   beta (Lap_x U + 2 grad(phi_a) . grad_x dU/dz + |grad phi|^2 d2U/dz2
///         + dU/dz Lap(phi_a)) + grad(beta) . (grad_x U + dU/dz grad(phi_a)).
double elliptic_operator(const net::Jet2& jet, const CuspEval& cusp, double beta,
                         const VectorXd& grad_beta);

double interior_residual(const net::NetworkParams& p, const VectorXd& x,
                         const InterfaceProblem& prob,
                         Augmentation mode = Augmentation::PhiAbs);

/// [beta] dU/dn + (beta+ + beta-) dU/dz |grad phi| - rho at (x_gamma, 0).
double interface_residual(const net::NetworkParams& p, const VectorXd& x_gamma,
                          const VectorXd& normal, const InterfaceProblem& prob);

/// Smooth-augmentation variant: [beta] (dU/dn + dU/dz |grad phi|) - rho.
/// With [beta] = 0 this is -rho independently of the parameters.
double interface_residual_smooth(const net::NetworkParams& p, const VectorXd& x_gamma,
                                 const VectorXd& normal, const InterfaceProblem& prob);

double boundary_residual(const net::NetworkParams& p, const VectorXd& x_b,
                         const VectorXd& normal, BcTag tag, const InterfaceProblem& prob,
                         Augmentation mode = Augmentation::PhiAbs);

/// Weighted residual vector and its exact parameter Jacobian. Row order is
/// fixed: interior points in sampler order, then interface, then boundary.
/// Row weights are sqrt(1/M_I), sqrt(c_gamma/M_G), sqrt(c_b/M_B), so
/// loss = |r|^2 is the weighted mean-squared residual.
struct ResidualSystem {
    VectorXd r;
    MatrixXd J;
    double loss = 0.0;
};

enum class ExecPolicy { Serial, Parallel };

/// Geometry, coefficient and datum values frozen per collocation point so the
/// per-epoch assembly touches only the network. Rows are pure functions of
/// theta and one point; the parallel policy assembles them concurrently.
class AssemblyContext {
public:
    AssemblyContext(const CollocationSet& colloc, const InterfaceProblem& prob,
                    Augmentation mode);

    ResidualSystem assemble(const net::NetworkParams& p,
                            ExecPolicy policy = ExecPolicy::Parallel) const;

    /// Residual vector and loss only (no Jacobian); used for cheap step trials.
    double loss_only(const net::NetworkParams& p,
                     ExecPolicy policy = ExecPolicy::Parallel) const;

    int rows() const { return static_cast<int>(inputs_.rows()); }
    int input_width() const { return static_cast<int>(inputs_.cols()); }
    Augmentation mode() const { return mode_; }
    const CollocationSet& collocation() const { return colloc_; }

private:
    void residual_and_maybe_jacobian(const net::NetworkParams& p, ExecPolicy policy,
                                     VectorXd& r, MatrixXd* J) const;

    CollocationSet colloc_;
    Augmentation mode_;
    // one row per residual: network input, seed coefficients, constant, weight
    MatrixXd inputs_;   // rows x D
    VectorXd seed_v_;   // value coefficient
    MatrixXd seed_g_;   // rows x D
    MatrixXd seed_H_;   // rows x D*D (symmetric per row)
    VectorXd constant_; // additive datum term
    VectorXd weight_;
};

ResidualSystem assemble(const net::NetworkParams& p, const CollocationSet& colloc,
                        const InterfaceProblem& prob,
                        Augmentation mode = Augmentation::PhiAbs,
                        ExecPolicy policy = ExecPolicy::Parallel);

/// Solution and gradient of the composed prediction u(x) = U(x, z(x)).
struct Prediction {
    double value;
    VectorXd grad;
};

Prediction predict(const net::NetworkParams& p, const LevelSet& ls, const VectorXd& x,
                   Augmentation mode = Augmentation::PhiAbs);

void write_residual_csv(const ResidualSystem& sys, const std::string& path);
void write_jacobian_binary(const ResidualSystem& sys, const std::string& path);

} // namespace cusppinn::problem
