#include "cusppinn/problem.hpp"

#include <cmath>
#include <fstream>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "cusppinn/errors.hpp"

namespace cusppinn::problem {

namespace {

int max_threads() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

/// z-feature data at a point: value, gradient and Laplacian of phi_a (PhiAbs)
/// or of phi itself (Phi). grad_sq is |grad phi|^2 in both cases.
struct ZData {
    double z = 0.0;
    VectorXd grad;
    double lap = 0.0;
    double grad_sq = 0.0;
    int sign = 1;
};

ZData z_data(const LevelSet& ls, const VectorXd& x, Augmentation mode) {
    ZData out;
    if (mode == Augmentation::PhiAbs) {
        const CuspEval c = geometry::cusp_eval(ls, x);
        out.z = c.phi_a;
        out.grad = c.grad_phi_a;
        out.lap = c.lap_phi_a;
        out.grad_sq = c.grad_phi_sq;
        out.sign = c.sign;
    } else {
        const double ph = ls.phi(x);
        out.z = ph;
        out.grad = ls.grad_phi(x);
        out.lap = ls.lap_phi(x);
        out.grad_sq = out.grad.squaredNorm();
        out.sign = ph > 0.0 ? 1 : -1;
    }
    return out;
}

VectorXd augmented_input(const VectorXd& x, double z, Augmentation mode) {
    if (mode == Augmentation::None) return x;
    VectorXd in(x.size() + 1);
    in.head(x.size()) = x;
    in(x.size()) = z;
    return in;
}

} // namespace

std::string augmentation_name(Augmentation a) {
    switch (a) {
        case Augmentation::PhiAbs: return "phi_abs";
        case Augmentation::Phi: return "phi";
        case Augmentation::None: return "none";
    }
    return "phi_abs";
}

Augmentation augmentation_from_name(const std::string& s) {
    if (s == "phi_abs") return Augmentation::PhiAbs;
    if (s == "phi") return Augmentation::Phi;
    if (s == "none") return Augmentation::None;
    throw config_error("unknown augmentation mode '" + s + "'");
}

double elliptic_operator(const net::Jet2& jet, const CuspEval& cusp, double beta,
                         const VectorXd& grad_beta) {
    const int d = static_cast<int>(cusp.grad_phi_a.size());
    double lap_x = 0.0;
    for (int i = 0; i < d; ++i) lap_x += jet.hess(i, i);
    double cross = 0.0;
    for (int i = 0; i < d; ++i) cross += cusp.grad_phi_a(i) * jet.hess(i, d);
    const double dz = jet.grad(d);
    double out = beta * (lap_x + 2.0 * cross + cusp.grad_phi_sq * jet.hess(d, d) +
                         dz * cusp.lap_phi_a);
    out += grad_beta.dot(jet.grad.head(d) + dz * cusp.grad_phi_a);
    return out;
}

double interior_residual(const net::NetworkParams& p, const VectorXd& x,
                         const InterfaceProblem& prob, Augmentation mode) {
    const ZData zd = z_data(*prob.level_set, x, mode);
    const net::Jet2 jet = net::forward_jet(p, augmented_input(x, zd.z, mode));
    const bool minus = zd.sign < 0;
    const double beta = minus ? prob.beta_minus(x) : prob.beta_plus(x);
    const VectorXd gb = minus ? prob.grad_beta_minus(x) : prob.grad_beta_plus(x);
    const double f = minus ? prob.f_minus(x) : prob.f_plus(x);
    double op;
    if (mode == Augmentation::None) {
        op = beta * jet.hess.trace() + gb.dot(jet.grad);
    } else {
        CuspEval c;
        c.phi_a = zd.z;
        c.grad_phi_a = zd.grad;
        c.lap_phi_a = zd.lap;
        c.grad_phi_sq = zd.grad_sq;
        c.sign = zd.sign;
        op = elliptic_operator(jet, c, beta, gb);
    }
    return op - prob.alpha(x) * jet.value - f;
}

double interface_residual(const net::NetworkParams& p, const VectorXd& x_gamma,
                          const VectorXd& normal, const InterfaceProblem& prob) {
    const double gn = prob.level_set->grad_phi(x_gamma).norm();
    if (gn < 1e-14) throw geometry_error("degenerate interface: |grad phi| = 0");
    const int d = prob.dim;
    const net::Jet2 jet =
        net::forward_jet(p, augmented_input(x_gamma, 0.0, Augmentation::PhiAbs));
    const double bp = prob.beta_plus(x_gamma), bm = prob.beta_minus(x_gamma);
    return (bp - bm) * jet.grad.head(d).dot(normal) + (bp + bm) * jet.grad(d) * gn -
           prob.rho(x_gamma);
}

double interface_residual_smooth(const net::NetworkParams& p, const VectorXd& x_gamma,
                                 const VectorXd& normal, const InterfaceProblem& prob) {
    const double gn = prob.level_set->grad_phi(x_gamma).norm();
    if (gn < 1e-14) throw geometry_error("degenerate interface: |grad phi| = 0");
    const int d = prob.dim;
    const net::Jet2 jet =
        net::forward_jet(p, augmented_input(x_gamma, 0.0, Augmentation::Phi));
    const double jump = prob.beta_plus(x_gamma) - prob.beta_minus(x_gamma);
    return jump * (jet.grad.head(d).dot(normal) + jet.grad(d) * gn) - prob.rho(x_gamma);
}

double boundary_residual(const net::NetworkParams& p, const VectorXd& x_b,
                         const VectorXd& normal, BcTag tag, const InterfaceProblem& prob,
                         Augmentation mode) {
    const ZData zd = z_data(*prob.level_set, x_b, mode);
    const net::Jet2 jet = net::forward_jet(p, augmented_input(x_b, zd.z, mode));
    const double g = prob.g(x_b, tag, normal);
    switch (tag) {
        case BcTag::Dirichlet:
            return jet.value - g;
        case BcTag::Neumann: {
            const int d = prob.dim;
            if (mode == Augmentation::None) return jet.grad.dot(normal) - g;
            return jet.grad.head(d).dot(normal) + jet.grad(d) * zd.grad.dot(normal) - g;
        }
    }
    throw config_error("unknown boundary tag");
}

AssemblyContext::AssemblyContext(const CollocationSet& colloc,
                                 const InterfaceProblem& prob, Augmentation mode)
    : colloc_(colloc), mode_(mode) {
    const int d = prob.dim;
    const int D = problem::input_width(d, mode);
    const int mi = colloc.m_interior(), mg = colloc.m_interface(), mb = colloc.m_boundary();
    const int rows = mi + mg + mb;
    if (mi < 1 || mg < 1 || mb < 1)
        throw config_error("collocation set must have interior, interface and boundary points");

    inputs_.resize(rows, D);
    seed_v_ = VectorXd::Zero(rows);
    seed_g_ = MatrixXd::Zero(rows, D);
    seed_H_ = MatrixXd::Zero(rows, D * D);
    constant_.resize(rows);
    weight_.resize(rows);

    const double wi = std::sqrt(1.0 / mi);
    const double wg = std::sqrt(prob.c_gamma / mg);
    const double wb = std::sqrt(prob.c_b / mb);

    const LevelSet& ls = *prob.level_set;
    int row = 0;
    for (int i = 0; i < mi; ++i, ++row) {
        const VectorXd x = colloc.interior.row(i).transpose();
        const ZData zd = z_data(ls, x, mode);
        const bool minus = zd.sign < 0;
        const double beta = minus ? prob.beta_minus(x) : prob.beta_plus(x);
        const VectorXd gb = minus ? prob.grad_beta_minus(x) : prob.grad_beta_plus(x);
        const double f = minus ? prob.f_minus(x) : prob.f_plus(x);

        inputs_.row(row) = augmented_input(x, zd.z, mode).transpose();
        seed_v_(row) = -prob.alpha(x);
        constant_(row) = -f;
        weight_(row) = wi;
        if (mode == Augmentation::None) {
            seed_g_.row(row).head(d) = gb.transpose();
            for (int k = 0; k < d; ++k) seed_H_(row, k * D + k) = beta;
        } else {
            seed_g_.row(row).head(d) = gb.transpose();
            seed_g_(row, d) = beta * zd.lap + gb.dot(zd.grad);
            for (int k = 0; k < d; ++k) {
                seed_H_(row, k * D + k) = beta;
                // the 2 grad(phi_a) . grad_x dU/dz term, split across the
                // symmetric pair (k, z) and (z, k)
                seed_H_(row, k * D + d) = beta * zd.grad(k);
                seed_H_(row, d * D + k) = beta * zd.grad(k);
            }
            seed_H_(row, d * D + d) = beta * zd.grad_sq;
        }
    }
    for (int i = 0; i < mg; ++i, ++row) {
        const VectorXd x = colloc.interface_pts.row(i).transpose();
        const VectorXd n = colloc.interface_normals.row(i).transpose();
        const double gn = ls.grad_phi(x).norm();
        if (gn < 1e-14) throw geometry_error("degenerate interface point in collocation");
        const double bp = prob.beta_plus(x), bm = prob.beta_minus(x);
        inputs_.row(row) = augmented_input(x, 0.0, mode).transpose();
        constant_(row) = -prob.rho(x);
        weight_(row) = wg;
        switch (mode) {
            case Augmentation::PhiAbs:
                seed_g_.row(row).head(d) = (bp - bm) * n.transpose();
                seed_g_(row, d) = (bp + bm) * gn;
                break;
            case Augmentation::Phi:
                seed_g_.row(row).head(d) = (bp - bm) * n.transpose();
                seed_g_(row, d) = (bp - bm) * gn;
                break;
            case Augmentation::None:
                seed_g_.row(row).head(d) = (bp - bm) * n.transpose();
                break;
        }
    }
    for (int i = 0; i < mb; ++i, ++row) {
        const VectorXd x = colloc.boundary_pts.row(i).transpose();
        const VectorXd n = colloc.boundary_normals.row(i).transpose();
        const BcTag tag = colloc.boundary_tags[i];
        const ZData zd = z_data(ls, x, mode);
        inputs_.row(row) = augmented_input(x, zd.z, mode).transpose();
        constant_(row) = -prob.g(x, tag, n);
        weight_(row) = wb;
        if (tag == BcTag::Dirichlet) {
            seed_v_(row) = 1.0;
        } else {
            seed_g_.row(row).head(d) = n.transpose();
            if (mode != Augmentation::None) seed_g_(row, d) = zd.grad.dot(n);
        }
    }
}

void AssemblyContext::residual_and_maybe_jacobian(const net::NetworkParams& p,
                                                  ExecPolicy policy, VectorXd& r,
                                                  MatrixXd* J) const {
    const int n = rows();
    const int D = input_width();
    if (p.input_dim() != D)
        throw dimension_error("network input width does not match augmentation mode");
    r.resize(n);
    if (J) J->resize(n, p.param_count());

    const int nthreads = policy == ExecPolicy::Parallel ? max_threads() : 1;
    std::vector<net::JetWorkspace> ws(nthreads);
    std::vector<VectorXd> grad_buf(nthreads);

#pragma omp parallel for schedule(static) num_threads(nthreads) if (nthreads > 1)
    for (int i = 0; i < n; ++i) {
#ifdef _OPENMP
        const int t = omp_get_thread_num();
#else
        const int t = 0;
#endif
        net::JetWorkspace& w = ws[t];
        net::forward_jet_ws(p, inputs_.row(i).transpose(), w);
        const net::Jet2& jet = w.jet;

        double res = seed_v_(i) * jet.value + constant_(i);
        res += seed_g_.row(i).dot(jet.grad);
        for (int a = 0; a < D; ++a)
            for (int b = 0; b < D; ++b) res += seed_H_(i, a * D + b) * jet.hess(a, b);
        r(i) = weight_(i) * res;

        if (J) {
            net::JetSeeds seeds;
            seeds.v = weight_(i) * seed_v_(i);
            seeds.g = weight_(i) * seed_g_.row(i).transpose();
            seeds.H.resize(D, D);
            for (int a = 0; a < D; ++a)
                for (int b = 0; b < D; ++b)
                    seeds.H(a, b) = weight_(i) * seed_H_(i, a * D + b);
            net::backward_param_gradient(p, w, seeds, grad_buf[t]);
            J->row(i) = grad_buf[t].transpose();
        }
    }
}

ResidualSystem AssemblyContext::assemble(const net::NetworkParams& p,
                                         ExecPolicy policy) const {
    ResidualSystem sys;
    residual_and_maybe_jacobian(p, policy, sys.r, &sys.J);
    sys.loss = sys.r.squaredNorm();
    return sys;
}

double AssemblyContext::loss_only(const net::NetworkParams& p, ExecPolicy policy) const {
    VectorXd r;
    residual_and_maybe_jacobian(p, policy, r, nullptr);
    return r.squaredNorm();
}

ResidualSystem assemble(const net::NetworkParams& p, const CollocationSet& colloc,
                        const InterfaceProblem& prob, Augmentation mode,
                        ExecPolicy policy) {
    return AssemblyContext(colloc, prob, mode).assemble(p, policy);
}

Prediction predict(const net::NetworkParams& p, const LevelSet& ls, const VectorXd& x,
                   Augmentation mode) {
    const ZData zd = z_data(ls, x, mode);
    const net::Jet2 jet = net::forward_jet(p, augmented_input(x, zd.z, mode));
    Prediction out;
    out.value = jet.value;
    if (mode == Augmentation::None) {
        out.grad = jet.grad;
    } else {
        const int d = static_cast<int>(x.size());
        out.grad = jet.grad.head(d) + jet.grad(d) * zd.grad;
    }
    return out;
}

void write_residual_csv(const ResidualSystem& sys, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw config_error("cannot open '" + path + "' for writing");
    out << "row,residual\n";
    out.precision(17);
    for (Eigen::Index i = 0; i < sys.r.size(); ++i) out << i << "," << sys.r(i) << "\n";
}

void write_jacobian_binary(const ResidualSystem& sys, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw config_error("cannot open '" + path + "' for writing");
    const int64_t rows = sys.J.rows(), cols = sys.J.cols();
    out.write(reinterpret_cast<const char*>(&rows), sizeof(rows));
    out.write(reinterpret_cast<const char*>(&cols), sizeof(cols));
    // row-major stream so each residual row is contiguous
    std::vector<double> row(static_cast<size_t>(cols));
    for (int64_t i = 0; i < rows; ++i) {
        for (int64_t j = 0; j < cols; ++j) row[static_cast<size_t>(j)] = sys.J(i, j);
        out.write(reinterpret_cast<const char*>(row.data()),
                  static_cast<std::streamsize>(sizeof(double) * row.size()));
    }
}

} // namespace cusppinn::problem
