#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace cusppinn::geometry {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Implicit interface: phi < 0 inside (Omega-), phi > 0 outside (Omega+),
/// phi = 0 on the interface. Gradient and Laplacian are analytic.
class LevelSet {
public:
    virtual ~LevelSet() = default;
    virtual int dim() const = 0;
    virtual double phi(const VectorXd& x) const = 0;
    virtual VectorXd grad_phi(const VectorXd& x) const = 0;
    virtual double lap_phi(const VectorXd& x) const = 0;
    /// n points with |phi| <= 1e-10, one unit normal per point.
    virtual void sample_surface(int n, uint64_t seed, MatrixXd& points,
                                MatrixXd& normals) const = 0;
};

/// phi(x) = scale * (|x|^2 - r0^2): spheres in any dimension, with the scaling
/// convention of the problem at hand baked in (it changes |grad phi|).
class SphereLevelSet final : public LevelSet {
public:
    SphereLevelSet(int dim, double r0, double scale) : d_(dim), r0_(r0), c_(scale) {}
    int dim() const override { return d_; }
    double phi(const VectorXd& x) const override { return c_ * (x.squaredNorm() - r0_ * r0_); }
    VectorXd grad_phi(const VectorXd& x) const override { return 2.0 * c_ * x; }
    double lap_phi(const VectorXd&) const override { return 2.0 * c_ * d_; }
    void sample_surface(int n, uint64_t seed, MatrixXd& points,
                        MatrixXd& normals) const override;
    double radius() const { return r0_; }

private:
    int d_;
    double r0_, c_;
};

/// phi(x) = x - x0 on the line; the interface is the single point x0.
class PointLevelSet final : public LevelSet {
public:
    explicit PointLevelSet(double x0) : x0_(x0) {}
    int dim() const override { return 1; }
    double phi(const VectorXd& x) const override { return x(0) - x0_; }
    VectorXd grad_phi(const VectorXd&) const override { return VectorXd::Ones(1); }
    double lap_phi(const VectorXd&) const override { return 0.0; }
    void sample_surface(int n, uint64_t seed, MatrixXd& points,
                        MatrixXd& normals) const override;

private:
    double x0_;
};

/// Star-shaped surface in 3-D given as a radial perturbation of a sphere:
///   phi = r - r0 (1 + ((x^2+y^2)/r^2)^2 sum_k a_k cos(n_k (atan2(y,x) - t_k))).
/// Derivatives are evaluated exactly via second-order duals.
class StarLevelSet final : public LevelSet {
public:
    StarLevelSet(double r0, std::vector<double> amp, std::vector<int> freq,
                 std::vector<double> phase)
        : r0_(r0), a_(std::move(amp)), n_(std::move(freq)), t_(std::move(phase)) {}
    int dim() const override { return 3; }
    double phi(const VectorXd& x) const override;
    VectorXd grad_phi(const VectorXd& x) const override;
    double lap_phi(const VectorXd& x) const override;
    void sample_surface(int n, uint64_t seed, MatrixXd& points,
                        MatrixXd& normals) const override;

private:
    double radius_in_direction(const VectorXd& dir) const;
    double r0_;
    std::vector<double> a_;
    std::vector<int> n_;
    std::vector<double> t_;
};

enum class BcTag { Dirichlet, Neumann };

struct BoundarySample {
    MatrixXd points;
    MatrixXd normals;
    std::vector<BcTag> tags;
};

/// Bounded computational domain with an axis-aligned bounding box and a
/// boundary sampler that yields points, outward unit normals, and the
/// boundary-condition tag of the face each point lies on.
class Domain {
public:
    virtual ~Domain() = default;
    virtual int dim() const = 0;
    virtual bool contains(const VectorXd& x) const = 0;
    virtual void bounding_box(VectorXd& lo, VectorXd& hi) const = 0;
    virtual BoundarySample sample_boundary(int n, uint64_t seed) const = 0;
    virtual std::string kind() const = 0;
};

class IntervalDomain final : public Domain {
public:
    IntervalDomain(double a, double b) : a_(a), b_(b) {}
    int dim() const override { return 1; }
    bool contains(const VectorXd& x) const override { return x(0) > a_ && x(0) < b_; }
    void bounding_box(VectorXd& lo, VectorXd& hi) const override;
    BoundarySample sample_boundary(int n, uint64_t seed) const override;
    std::string kind() const override { return "interval"; }

private:
    double a_, b_;
};

/// Axis-aligned box; 2*dim faces in the order (x1-, x1+, x2-, x2+, ...), each
/// carrying its own boundary-condition tag. n must be divisible by the face
/// count; points are Latin-hypercube sampled per face.
class BoxDomain final : public Domain {
public:
    BoxDomain(VectorXd lo, VectorXd hi, std::vector<BcTag> face_tags = {});
    int dim() const override { return static_cast<int>(lo_.size()); }
    bool contains(const VectorXd& x) const override;
    void bounding_box(VectorXd& lo, VectorXd& hi) const override;
    BoundarySample sample_boundary(int n, uint64_t seed) const override;
    std::string kind() const override { return "box"; }

private:
    VectorXd lo_, hi_;
    std::vector<BcTag> face_tags_;
};

/// Ball of radius R about the origin, any dimension; Dirichlet boundary.
class BallDomain final : public Domain {
public:
    BallDomain(int dim, double radius) : d_(dim), R_(radius) {}
    int dim() const override { return d_; }
    bool contains(const VectorXd& x) const override { return x.norm() < R_; }
    void bounding_box(VectorXd& lo, VectorXd& hi) const override;
    BoundarySample sample_boundary(int n, uint64_t seed) const override;
    std::string kind() const override { return "ball"; }

private:
    int d_;
    double R_;
};

/// Five-fold flower in the plane: r(t) <= 1 - 0.2 cos(5 t).
class FlowerDomain final : public Domain {
public:
    int dim() const override { return 2; }
    bool contains(const VectorXd& x) const override;
    void bounding_box(VectorXd& lo, VectorXd& hi) const override;
    BoundarySample sample_boundary(int n, uint64_t seed) const override;
    std::string kind() const override { return "flower"; }

private:
    static double boundary_radius(double theta) { return 1.0 - 0.2 * std::cos(5.0 * theta); }
    static double boundary_radius_d(double theta) { return std::sin(5.0 * theta); }
};

/// Spherical shell r_in < |x| < r_out in 3-D. Boundary points are split
/// between the two spheres proportionally to surface area.
class ShellDomain final : public Domain {
public:
    ShellDomain(double r_in, double r_out) : rin_(r_in), rout_(r_out) {}
    int dim() const override { return 3; }
    bool contains(const VectorXd& x) const override {
        const double r = x.norm();
        return r > rin_ && r < rout_;
    }
    void bounding_box(VectorXd& lo, VectorXd& hi) const override;
    BoundarySample sample_boundary(int n, uint64_t seed) const override;
    std::string kind() const override { return "spherical-shell"; }

private:
    double rin_, rout_;
};

/// Off-interface evaluation of the cusp transform phi_a = |phi|.
struct CuspEval {
    double phi_a;        // |phi(x)|
    VectorXd grad_phi_a; // sign(phi) * grad phi
    double lap_phi_a;    // sign(phi) * lap phi
    int sign;            // region sign of x
    double grad_phi_sq;  // |grad phi|^2 (shared by phi and phi_a)
};

/// Throws geometry_error when x lies inside the 1e-12 interface band, where
/// phi_a is not differentiable.
CuspEval cusp_eval(const LevelSet& ls, const VectorXd& x);

/// grad phi / |grad phi| at an interface point; points from Omega- to Omega+.
VectorXd unit_normal(const LevelSet& ls, const VectorXd& x_gamma);

/// n-point Latin hypercube in the box [lo, hi]: per coordinate, exactly one
/// point per stratum, strata assigned by a random permutation.
MatrixXd latin_hypercube(int n, const VectorXd& lo, const VectorXd& hi, uint64_t seed);

constexpr double kInterfaceBand = 1e-12;      // interior points keep |phi| above this
constexpr double kInterfaceTol = 1e-10;       // interface samples satisfy |phi| below this
constexpr int kRejectionBudgetFactor = 1000;  // oversampling cap before giving up

struct CollocationSet {
    int dim = 0;
    MatrixXd interior;             // M_I x d
    Eigen::VectorXi interior_sign; // +-1 per interior point
    MatrixXd interface_pts;        // M_G x d
    MatrixXd interface_normals;    // M_G x d
    MatrixXd boundary_pts;         // M_B x d
    MatrixXd boundary_normals;     // M_B x d
    std::vector<BcTag> boundary_tags;
    int m0 = -1; // grid-equivalent parameter when the counts came from one

    int m_interior() const { return static_cast<int>(interior.rows()); }
    int m_interface() const { return static_cast<int>(interface_pts.rows()); }
    int m_boundary() const { return static_cast<int>(boundary_pts.rows()); }
    int m_total() const { return m_interior() + m_interface() + m_boundary(); }
};

/// Latin-hypercube points over the bounding box, rejected to
/// {x in Omega : |phi(x)| > 1e-12}, resampled until exactly m_i points exist.
void sample_interior(const Domain& domain, const LevelSet& ls, int m_i, uint64_t seed,
                     CollocationSet& out);

void sample_interface(const LevelSet& ls, int m_g, uint64_t seed, CollocationSet& out);

void sample_boundary(const Domain& domain, int m_b, uint64_t seed, CollocationSet& out);

struct CollocationCounts {
    int interior = 0;
    int interface = 0;
    int boundary = 0;
};

CollocationSet sample_collocation(const Domain& domain, const LevelSet& ls,
                                  const CollocationCounts& counts, uint64_t seed);

/// CSV rows: coordinates, tag in {interior-, interior+, interface, boundary},
/// then normal components (blank for interior points).
void write_points_csv(const CollocationSet& c, const std::string& path);

} // namespace cusppinn::geometry
