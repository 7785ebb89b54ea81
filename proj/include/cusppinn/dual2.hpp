#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <vector>

namespace cusppinn {

/// Second-order forward-mode scalar: value, gradient and Hessian with respect
/// to a fixed set of independent variables. Used to evaluate exact derivatives
/// of closed-form level sets, coefficients and manufactured solutions; the
/// network has its own, separate jet propagation.
class Dual2 {
public:
    Dual2() = default;

    static Dual2 constant(double v, int dim) {
        Dual2 d;
        d.val = v;
        d.grad = Eigen::VectorXd::Zero(dim);
        d.hess = Eigen::MatrixXd::Zero(dim, dim);
        return d;
    }

    static Dual2 variable(double v, int index, int dim) {
        Dual2 d = constant(v, dim);
        d.grad(index) = 1.0;
        return d;
    }

    /// Seeds one Dual2 per coordinate of x.
    static std::vector<Dual2> seed(const Eigen::VectorXd& x) {
        std::vector<Dual2> vars;
        vars.reserve(x.size());
        for (int i = 0; i < x.size(); ++i)
            vars.push_back(variable(x(i), i, static_cast<int>(x.size())));
        return vars;
    }

    double val = 0.0;
    Eigen::VectorXd grad;
    Eigen::MatrixXd hess;

    Dual2 operator-() const {
        Dual2 r = *this;
        r.val = -r.val;
        r.grad = -r.grad;
        r.hess = -r.hess;
        return r;
    }
};

inline Dual2 operator+(const Dual2& a, const Dual2& b) {
    Dual2 r = a;
    r.val += b.val;
    r.grad += b.grad;
    r.hess += b.hess;
    return r;
}
inline Dual2 operator+(const Dual2& a, double c) {
    Dual2 r = a;
    r.val += c;
    return r;
}
inline Dual2 operator+(double c, const Dual2& a) { return a + c; }

inline Dual2 operator-(const Dual2& a, const Dual2& b) {
    Dual2 r = a;
    r.val -= b.val;
    r.grad -= b.grad;
    r.hess -= b.hess;
    return r;
}
inline Dual2 operator-(const Dual2& a, double c) { return a + (-c); }
inline Dual2 operator-(double c, const Dual2& a) { return -a + c; }

inline Dual2 operator*(const Dual2& a, const Dual2& b) {
    Dual2 r;
    r.val = a.val * b.val;
    r.grad = a.val * b.grad + b.val * a.grad;
    r.hess = a.val * b.hess + b.val * a.hess + a.grad * b.grad.transpose() +
             b.grad * a.grad.transpose();
    return r;
}
inline Dual2 operator*(const Dual2& a, double c) {
    Dual2 r = a;
    r.val *= c;
    r.grad *= c;
    r.hess *= c;
    return r;
}
inline Dual2 operator*(double c, const Dual2& a) { return a * c; }

/// Chain rule for a smooth scalar map applied to a Dual2.
inline Dual2 apply_unary(const Dual2& g, double f, double fp, double fpp) {
    Dual2 r;
    r.val = f;
    r.grad = fp * g.grad;
    r.hess = fp * g.hess + fpp * (g.grad * g.grad.transpose());
    return r;
}

inline Dual2 inv(const Dual2& a) {
    const double v = 1.0 / a.val;
    return apply_unary(a, v, -v * v, 2.0 * v * v * v);
}
inline Dual2 operator/(const Dual2& a, const Dual2& b) { return a * inv(b); }
inline Dual2 operator/(const Dual2& a, double c) { return a * (1.0 / c); }
inline Dual2 operator/(double c, const Dual2& a) { return inv(a) * c; }

inline Dual2 exp(const Dual2& a) {
    const double e = std::exp(a.val);
    return apply_unary(a, e, e, e);
}
inline Dual2 log(const Dual2& a) {
    return apply_unary(a, std::log(a.val), 1.0 / a.val, -1.0 / (a.val * a.val));
}
inline Dual2 sin(const Dual2& a) {
    const double s = std::sin(a.val), c = std::cos(a.val);
    return apply_unary(a, s, c, -s);
}
inline Dual2 cos(const Dual2& a) {
    const double s = std::sin(a.val), c = std::cos(a.val);
    return apply_unary(a, c, -s, -c);
}
inline Dual2 sqrt(const Dual2& a) {
    const double s = std::sqrt(a.val);
    return apply_unary(a, s, 0.5 / s, -0.25 / (s * a.val));
}
inline Dual2 pow_int(const Dual2& a, int n) {
    Dual2 r = Dual2::constant(1.0, static_cast<int>(a.grad.size()));
    Dual2 base = a;
    int e = n;
    while (e > 0) {
        if (e & 1) r = r * base;
        base = base * base;
        e >>= 1;
    }
    return r;
}

/// atan2(y, x) via explicit first and second partials of the two-argument form.
inline Dual2 atan2(const Dual2& y, const Dual2& x) {
    const double s = x.val * x.val + y.val * y.val;
    const double fx = -y.val / s;
    const double fy = x.val / s;
    const double s2 = s * s;
    const double fxx = 2.0 * x.val * y.val / s2;
    const double fyy = -2.0 * x.val * y.val / s2;
    const double fxy = (y.val * y.val - x.val * x.val) / s2;
    Dual2 r;
    r.val = std::atan2(y.val, x.val);
    r.grad = fx * x.grad + fy * y.grad;
    r.hess = fx * x.hess + fy * y.hess + fxx * (x.grad * x.grad.transpose()) +
             fyy * (y.grad * y.grad.transpose()) +
             fxy * (x.grad * y.grad.transpose() + y.grad * x.grad.transpose());
    return r;
}

} // namespace cusppinn
