#include "cusppinn/geometry.hpp"

#include <cmath>
#include <fstream>
#include <numbers>

#include "cusppinn/dual2.hpp"
#include "cusppinn/errors.hpp"
#include "cusppinn/rng.hpp"

namespace cusppinn::geometry {

namespace {

constexpr double kPi = std::numbers::pi;

VectorXd random_unit_vector(int d, Rng& rng) {
    VectorXd v(d);
    double norm2;
    do {
        for (int i = 0; i < d; ++i) v(i) = rng.gaussian();
        norm2 = v.squaredNorm();
    } while (norm2 < 1e-24);
    return v / std::sqrt(norm2);
}

} // namespace

// ---------------------------------------------------------------------------
// level sets

void SphereLevelSet::sample_surface(int n, uint64_t seed, MatrixXd& points,
                                    MatrixXd& normals) const {
    points.resize(n, d_);
    normals.resize(n, d_);
    Rng rng(seed);
    if (d_ == 2) {
        // one angle per stratum, Latin-hypercube style
        const auto perm = rng.permutation(static_cast<uint32_t>(n));
        for (int i = 0; i < n; ++i) {
            const double theta = 2.0 * kPi * (perm[i] + rng.uniform01()) / n;
            points(i, 0) = r0_ * std::cos(theta);
            points(i, 1) = r0_ * std::sin(theta);
        }
    } else if (d_ == 3) {
        // Fibonacci lattice, jittered by a random rotation about z plus a
        // random offset in the golden-angle sequence
        const double golden = kPi * (3.0 - std::sqrt(5.0));
        const double rot = rng.uniform(0.0, 2.0 * kPi);
        const double off = rng.uniform01();
        for (int i = 0; i < n; ++i) {
            const double z = 1.0 - 2.0 * (i + 0.5) / n;
            const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
            const double theta = golden * (i + off) + rot;
            points(i, 0) = r0_ * rho * std::cos(theta);
            points(i, 1) = r0_ * rho * std::sin(theta);
            points(i, 2) = r0_ * z;
        }
    } else {
        // uniform on the sphere in any dimension
        for (int i = 0; i < n; ++i)
            points.row(i) = r0_ * random_unit_vector(d_, rng).transpose();
    }
    for (int i = 0; i < n; ++i) normals.row(i) = points.row(i) / points.row(i).norm();
}

void PointLevelSet::sample_surface(int n, uint64_t, MatrixXd& points,
                                   MatrixXd& normals) const {
    points = MatrixXd::Constant(n, 1, x0_);
    normals = MatrixXd::Ones(n, 1);
}

namespace {

Dual2 star_phi_dual(const VectorXd& x, double r0, const std::vector<double>& a,
                    const std::vector<int>& nk, const std::vector<double>& tk) {
    const auto v = Dual2::seed(x);
    const Dual2 r2 = v[0] * v[0] + v[1] * v[1] + v[2] * v[2];
    const Dual2 r = sqrt(r2);
    const Dual2 q = (v[0] * v[0] + v[1] * v[1]) / r2;
    const Dual2 th = atan2(v[1], v[0]);
    Dual2 s = Dual2::constant(0.0, 3);
    for (size_t k = 0; k < a.size(); ++k) s = s + a[k] * cos(nk[k] * th - (nk[k] * tk[k]));
    return r - r0 * (1.0 + q * q * s);
}

} // namespace

double StarLevelSet::phi(const VectorXd& x) const {
    // value-only path, no duals
    const double r2 = x.squaredNorm();
    const double r = std::sqrt(r2);
    const double q = (x(0) * x(0) + x(1) * x(1)) / r2;
    const double th = std::atan2(x(1), x(0));
    double s = 0.0;
    for (size_t k = 0; k < a_.size(); ++k) s += a_[k] * std::cos(n_[k] * (th - t_[k]));
    return r - r0_ * (1.0 + q * q * s);
}

VectorXd StarLevelSet::grad_phi(const VectorXd& x) const {
    return star_phi_dual(x, r0_, a_, n_, t_).grad;
}

double StarLevelSet::lap_phi(const VectorXd& x) const {
    return star_phi_dual(x, r0_, a_, n_, t_).hess.trace();
}

double StarLevelSet::radius_in_direction(const VectorXd& dir) const {
    // phi(t*dir) is exactly linear in t (q and theta are scale invariant), so
    // Newton from t = r0 lands on the surface in one step; iterate for safety.
    double t = r0_;
    for (int it = 0; it < 50; ++it) {
        VectorXd p = t * dir;
        const double f = phi(p);
        if (std::abs(f) <= kInterfaceTol) return t;
        const double df = grad_phi(p).dot(dir);
        if (std::abs(df) < 1e-14)
            throw sampling_error("degenerate ray in star-surface projection");
        t -= f / df;
    }
    throw sampling_error("Newton projection onto the star surface did not converge");
}

void StarLevelSet::sample_surface(int n, uint64_t seed, MatrixXd& points,
                                  MatrixXd& normals) const {
    points.resize(n, 3);
    normals.resize(n, 3);
    Rng rng(seed);
    for (int i = 0; i < n; ++i) {
        const VectorXd dir = random_unit_vector(3, rng);
        const double t = radius_in_direction(dir);
        points.row(i) = (t * dir).transpose();
        normals.row(i) = unit_normal(*this, points.row(i).transpose()).transpose();
    }
}

// ---------------------------------------------------------------------------
// domains

void IntervalDomain::bounding_box(VectorXd& lo, VectorXd& hi) const {
    lo = VectorXd::Constant(1, a_);
    hi = VectorXd::Constant(1, b_);
}

BoundarySample IntervalDomain::sample_boundary(int n, uint64_t) const {
    if (n != 2) throw config_error("an interval boundary has exactly 2 points");
    BoundarySample s;
    s.points.resize(2, 1);
    s.normals.resize(2, 1);
    s.points << a_, b_;
    s.normals << -1.0, 1.0;
    s.tags = {BcTag::Dirichlet, BcTag::Dirichlet};
    return s;
}

BoxDomain::BoxDomain(VectorXd lo, VectorXd hi, std::vector<BcTag> face_tags)
    : lo_(std::move(lo)), hi_(std::move(hi)), face_tags_(std::move(face_tags)) {
    if (face_tags_.empty()) face_tags_.assign(2 * lo_.size(), BcTag::Dirichlet);
    if (face_tags_.size() != static_cast<size_t>(2 * lo_.size()))
        throw config_error("box needs one boundary tag per face");
}

bool BoxDomain::contains(const VectorXd& x) const {
    for (int i = 0; i < lo_.size(); ++i)
        if (x(i) <= lo_(i) || x(i) >= hi_(i)) return false;
    return true;
}

void BoxDomain::bounding_box(VectorXd& lo, VectorXd& hi) const {
    lo = lo_;
    hi = hi_;
}

BoundarySample BoxDomain::sample_boundary(int n, uint64_t seed) const {
    const int d = dim();
    const int faces = 2 * d;
    if (n % faces != 0)
        throw config_error("boundary count " + std::to_string(n) +
                           " is not divisible by the " + std::to_string(faces) +
                           " box faces");
    const int per_face = n / faces;
    BoundarySample s;
    s.points.resize(n, d);
    s.normals = MatrixXd::Zero(n, d);
    s.tags.resize(n);
    int row = 0;
    for (int axis = 0; axis < d; ++axis) {
        for (int side = 0; side < 2; ++side) {
            const int face = 2 * axis + side;
            if (d == 1) {
                // degenerate: face is a point
                for (int i = 0; i < per_face; ++i) {
                    s.points(row, 0) = side ? hi_(0) : lo_(0);
                    s.normals(row, 0) = side ? 1.0 : -1.0;
                    s.tags[row] = face_tags_[face];
                    ++row;
                }
                continue;
            }
            VectorXd flo(d - 1), fhi(d - 1);
            int j = 0;
            for (int i = 0; i < d; ++i) {
                if (i == axis) continue;
                flo(j) = lo_(i);
                fhi(j) = hi_(i);
                ++j;
            }
            const MatrixXd pts =
                latin_hypercube(per_face, flo, fhi, derive_seed(seed, face));
            for (int i = 0; i < per_face; ++i) {
                j = 0;
                for (int c = 0; c < d; ++c) {
                    if (c == axis)
                        s.points(row, c) = side ? hi_(axis) : lo_(axis);
                    else
                        s.points(row, c) = pts(i, j++);
                }
                s.normals(row, axis) = side ? 1.0 : -1.0;
                s.tags[row] = face_tags_[face];
                ++row;
            }
        }
    }
    return s;
}

void BallDomain::bounding_box(VectorXd& lo, VectorXd& hi) const {
    lo = VectorXd::Constant(d_, -R_);
    hi = VectorXd::Constant(d_, R_);
}

BoundarySample BallDomain::sample_boundary(int n, uint64_t seed) const {
    BoundarySample s;
    s.points.resize(n, d_);
    s.normals.resize(n, d_);
    s.tags.assign(n, BcTag::Dirichlet);
    Rng rng(seed);
    for (int i = 0; i < n; ++i) {
        const VectorXd u = random_unit_vector(d_, rng);
        s.points.row(i) = (R_ * u).transpose();
        s.normals.row(i) = u.transpose();
    }
    return s;
}

bool FlowerDomain::contains(const VectorXd& x) const {
    const double r = x.norm();
    if (r == 0.0) return true;
    return r < boundary_radius(std::atan2(x(1), x(0)));
}

void FlowerDomain::bounding_box(VectorXd& lo, VectorXd& hi) const {
    lo = VectorXd::Constant(2, -1.2);
    hi = VectorXd::Constant(2, 1.2);
}

BoundarySample FlowerDomain::sample_boundary(int n, uint64_t seed) const {
    BoundarySample s;
    s.points.resize(n, 2);
    s.normals.resize(n, 2);
    s.tags.assign(n, BcTag::Dirichlet);
    Rng rng(seed);
    const auto perm = rng.permutation(static_cast<uint32_t>(n));
    for (int i = 0; i < n; ++i) {
        const double th = 2.0 * kPi * (perm[i] + rng.uniform01()) / n;
        const double r = boundary_radius(th), dr = boundary_radius_d(th);
        const double c = std::cos(th), sn = std::sin(th);
        s.points(i, 0) = r * c;
        s.points(i, 1) = r * sn;
        // outward normal of the counterclockwise curve (r cos, r sin)
        const double tx = dr * c - r * sn, ty = dr * sn + r * c;
        const double tn = std::hypot(tx, ty);
        s.normals(i, 0) = ty / tn;
        s.normals(i, 1) = -tx / tn;
    }
    return s;
}

void ShellDomain::bounding_box(VectorXd& lo, VectorXd& hi) const {
    lo = VectorXd::Constant(3, -rout_);
    hi = VectorXd::Constant(3, rout_);
}

BoundarySample ShellDomain::sample_boundary(int n, uint64_t seed) const {
    const double a_out = rout_ * rout_;
    const double a_in = rin_ * rin_;
    int n_out = static_cast<int>(std::lround(n * a_out / (a_out + a_in)));
    n_out = std::min(std::max(n_out, 1), n - 1);
    const int n_in = n - n_out;

    SphereLevelSet outer(3, rout_, 1.0), inner(3, rin_, 1.0);
    MatrixXd po, no, pi, ni;
    outer.sample_surface(n_out, derive_seed(seed, 0), po, no);
    inner.sample_surface(n_in, derive_seed(seed, 1), pi, ni);

    BoundarySample s;
    s.points.resize(n, 3);
    s.normals.resize(n, 3);
    s.tags.assign(n, BcTag::Dirichlet);
    s.points.topRows(n_out) = po;
    s.normals.topRows(n_out) = no;
    s.points.bottomRows(n_in) = pi;
    s.normals.bottomRows(n_in) = -ni; // outward for the domain = toward the origin
    return s;
}

// ---------------------------------------------------------------------------
// operations

CuspEval cusp_eval(const LevelSet& ls, const VectorXd& x) {
    const double ph = ls.phi(x);
    if (std::abs(ph) < kInterfaceBand)
        throw geometry_error("cusp_eval at a point on the interface");
    CuspEval c;
    c.sign = ph > 0.0 ? 1 : -1;
    c.phi_a = std::abs(ph);
    c.grad_phi_a = static_cast<double>(c.sign) * ls.grad_phi(x);
    c.lap_phi_a = static_cast<double>(c.sign) * ls.lap_phi(x);
    c.grad_phi_sq = c.grad_phi_a.squaredNorm();
    return c;
}

VectorXd unit_normal(const LevelSet& ls, const VectorXd& x_gamma) {
    const VectorXd g = ls.grad_phi(x_gamma);
    const double n = g.norm();
    if (n < 1e-14) throw geometry_error("vanishing level-set gradient on the interface");
    return g / n;
}

MatrixXd latin_hypercube(int n, const VectorXd& lo, const VectorXd& hi, uint64_t seed) {
    if (n < 1) throw config_error("latin_hypercube needs n >= 1");
    if (lo.size() != hi.size() || (hi - lo).minCoeff() <= 0.0)
        throw config_error("invalid Latin-hypercube bounds");
    const int d = static_cast<int>(lo.size());
    MatrixXd pts(n, d);
    Rng rng(seed);
    for (int j = 0; j < d; ++j) {
        const auto perm = rng.permutation(static_cast<uint32_t>(n));
        for (int i = 0; i < n; ++i) {
            const double u = (perm[i] + rng.uniform01()) / n;
            pts(i, j) = lo(j) + (hi(j) - lo(j)) * u;
        }
    }
    return pts;
}

void sample_interior(const Domain& domain, const LevelSet& ls, int m_i, uint64_t seed,
                     CollocationSet& out) {
    if (m_i < 1) throw config_error("interior count must be >= 1");
    VectorXd lo, hi;
    domain.bounding_box(lo, hi);
    out.dim = domain.dim();
    out.interior.resize(m_i, domain.dim());
    out.interior_sign.resize(m_i);

    int accepted = 0;
    long drawn = 0;
    const long budget = static_cast<long>(kRejectionBudgetFactor) * m_i;
    uint64_t batch_index = 0;
    int batch = m_i;
    while (accepted < m_i) {
        const MatrixXd cand = latin_hypercube(batch, lo, hi, derive_seed(seed, batch_index++));
        for (int i = 0; i < batch && accepted < m_i; ++i) {
            const VectorXd x = cand.row(i).transpose();
            if (!domain.contains(x)) continue;
            const double ph = ls.phi(x);
            if (std::abs(ph) <= kInterfaceBand) continue;
            out.interior.row(accepted) = x.transpose();
            out.interior_sign(accepted) = ph > 0.0 ? 1 : -1;
            ++accepted;
        }
        drawn += batch;
        if (accepted < m_i && drawn >= budget)
            throw geometry_error("interior sampling acceptance rate below budget; "
                                 "domain and level set look inconsistent");
        // grow the batch when the acceptance rate is low
        const double rate = std::max(1e-3, static_cast<double>(accepted) / drawn);
        const long need = std::max<long>(m_i - accepted, 16);
        batch = static_cast<int>(std::min<long>(static_cast<long>(need / rate) + 1,
                                                8l * m_i));
    }
}

void sample_interface(const LevelSet& ls, int m_g, uint64_t seed, CollocationSet& out) {
    if (m_g < 1) throw config_error("interface count must be >= 1");
    ls.sample_surface(m_g, seed, out.interface_pts, out.interface_normals);
}

void sample_boundary(const Domain& domain, int m_b, uint64_t seed, CollocationSet& out) {
    BoundarySample s = domain.sample_boundary(m_b, seed);
    out.boundary_pts = std::move(s.points);
    out.boundary_normals = std::move(s.normals);
    out.boundary_tags = std::move(s.tags);
}

CollocationSet sample_collocation(const Domain& domain, const LevelSet& ls,
                                  const CollocationCounts& counts, uint64_t seed) {
    CollocationSet c;
    c.dim = domain.dim();
    sample_interior(domain, ls, counts.interior, derive_seed(seed, kSeedInterior), c);
    sample_interface(ls, counts.interface, derive_seed(seed, kSeedInterface), c);
    sample_boundary(domain, counts.boundary, derive_seed(seed, kSeedBoundary), c);
    return c;
}

void write_points_csv(const CollocationSet& c, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw config_error("cannot open '" + path + "' for writing");
    const int d = c.dim;
    for (int i = 0; i < d; ++i) out << "x" << i + 1 << ",";
    out << "tag";
    for (int i = 0; i < d; ++i) out << ",n" << i + 1;
    out << "\n";
    out.precision(17);
    for (int i = 0; i < c.m_interior(); ++i) {
        for (int j = 0; j < d; ++j) out << c.interior(i, j) << ",";
        out << (c.interior_sign(i) < 0 ? "interior-" : "interior+");
        for (int j = 0; j < d; ++j) out << ",";
        out << "\n";
    }
    for (int i = 0; i < c.m_interface(); ++i) {
        for (int j = 0; j < d; ++j) out << c.interface_pts(i, j) << ",";
        out << "interface";
        for (int j = 0; j < d; ++j) out << "," << c.interface_normals(i, j);
        out << "\n";
    }
    for (int i = 0; i < c.m_boundary(); ++i) {
        for (int j = 0; j < d; ++j) out << c.boundary_pts(i, j) << ",";
        out << "boundary";
        for (int j = 0; j < d; ++j) out << "," << c.boundary_normals(i, j);
        out << "\n";
    }
}

} // namespace cusppinn::geometry
