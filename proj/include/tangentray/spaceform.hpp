#pragma once

#include <cmath>
#include <limits>

#include "core.hpp"

namespace tangentray {

enum class Model { euclidean, sphere, half_space };

/// Simply connected space form of constant curvature kappa.
///
/// Coordinates: euclidean and half-space models use `dim` ambient coordinates
/// (half-space points have x0 > 0); the sphere model embeds the dim-sphere of
/// radius 1/sqrt(kappa) in R^(dim+1).
struct SpaceForm {
    double kappa = 0.0;
    int dim = 4;  // manifold dimension of M (= n+1 over an n-dimensional hypersurface)
    Model model = Model::euclidean;

    static SpaceForm of(double kappa, int dim) {
        if (dim < 2) throw std::invalid_argument("space form dimension must be >= 2");
        Model m = kappa > 0 ? Model::sphere : (kappa < 0 ? Model::half_space : Model::euclidean);
        return SpaceForm{kappa, dim, m};
    }

    int embedding_dim() const { return model == Model::sphere ? dim + 1 : dim; }
    double radius() const { return 1.0 / std::sqrt(kappa); }
};

struct AmbientPoint {
    Vec coords;
};

struct TangentVec {
    Vec base;        // ambient coordinates of the foot point
    Vec components;  // ambient components of the vector
};

// --- kappa-generic trigonometry ------------------------------------------

/// Generalized sine: sin(sqrt(k)t)/sqrt(k), t, or sinh(sqrt(-k)t)/sqrt(-k).
/// Switches to a series near k=0 so the function stays continuous in kappa.
inline double s_kappa(double kappa, double t) {
    double kt2 = kappa * t * t;
    if (std::abs(kt2) < 1e-8) {
        return t * (1.0 - kt2 / 6.0 + kt2 * kt2 / 120.0);
    }
    if (kappa > 0) {
        double rk = std::sqrt(kappa);
        return std::sin(rk * t) / rk;
    }
    double rk = std::sqrt(-kappa);
    return std::sinh(rk * t) / rk;
}

/// c_kappa = derivative of s_kappa.
inline double c_kappa(double kappa, double t) {
    double kt2 = kappa * t * t;
    if (std::abs(kt2) < 1e-8) {
        return 1.0 - kt2 / 2.0 + kt2 * kt2 / 24.0;
    }
    if (kappa > 0) return std::cos(std::sqrt(kappa) * t);
    return std::cosh(std::sqrt(-kappa) * t);
}

inline double cot_kappa(double kappa, double t) {
    double s = s_kappa(kappa, t);
    double c = c_kappa(kappa, t);
    if (std::abs(s) < 1e-13 * (1.0 + std::abs(c)))
        throw std::domain_error("cot_kappa: pole (s_kappa vanishes)");
    return c / s;
}

/// Horizon T_kappa: rays are parametrized on (0, T_kappa).
inline double horizon(double kappa) {
    if (kappa <= 0) return std::numeric_limits<double>::infinity();
    return M_PI / std::sqrt(kappa);
}

/// Solves c_kappa(t) - |lambda| s_kappa(t) = 0 on (0, T_kappa).
/// Closed forms per curvature sign; requires lambda^2 + kappa > 0.
inline double t_o_root(double kappa, double lambda) {
    double al = std::abs(lambda);
    if (al * al + kappa <= 0)
        throw std::domain_error("t_o_root: no root unless lambda^2 + kappa > 0");
    if (kappa == 0) return 1.0 / al;
    if (kappa > 0) {
        double rk = std::sqrt(kappa);
        return std::atan2(rk, al) / rk;  // cot(rk t) = al/rk
    }
    double rk = std::sqrt(-kappa);
    return std::atanh(rk / al) / rk;  // coth(rk t) = al/rk, needs al > rk
}

// --- model metric ----------------------------------------------------------

inline double metric_dot(const SpaceForm& sf, const Vec& base, const Vec& u, const Vec& w) {
    double e = u.dot(w);
    if (sf.model == Model::half_space) {
        double x0 = base(0);
        return e / (-sf.kappa * x0 * x0);
    }
    return e;
}

inline double metric_norm(const SpaceForm& sf, const Vec& base, const Vec& u) {
    return std::sqrt(metric_dot(sf, base, u, u));
}

// --- geodesics, transport, Jacobi fields -----------------------------------

/// Unit-speed geodesic with closed-form evaluation, velocity and parallel
/// transport in all three models.
///
/// Half-space geodesics are vertical lines or vertical semicircles; transport
/// along a semicircle keeps the (velocity, in-plane-normal) coefficients and
/// scales the remaining horizontal components with the height of the curve.
class Geodesic {
public:
    Geodesic(const SpaceForm& sf, const TangentVec& u, double unit_tol = 1e-8)
        : sf_(sf), p_(u.base), u_(u.components) {
        if (p_.size() != sf.embedding_dim() || u_.size() != sf.embedding_dim())
            throw std::invalid_argument("geodesic: coordinate size mismatch");
        double nrm = metric_norm(sf_, p_, u_);
        if (std::abs(nrm - 1.0) > unit_tol)
            throw std::invalid_argument("geodesic: initial velocity is not unit");
        if (sf_.model == Model::half_space) {
            c_ = std::sqrt(-sf_.kappa);
            double h0 = p_(0);
            Vec u1 = u_ / c_;  // velocity normalized for the curvature -1 metric
            double uv = u1(0);
            Vec uh = u1;
            uh(0) = 0.0;
            double uhn = uh.norm();
            if (uhn < 1e-13 * h0) {
                vertical_ = true;
                sign_ = uv >= 0 ? 1.0 : -1.0;
            } else {
                hhat_ = uh / uhn;
                radius_ = h0 * h0 / uhn;
                t0_ = std::asinh(-uv / uhn);
                xc_ = radius_ * uv / h0;
            }
        }
    }

    const SpaceForm& space() const { return sf_; }
    const Vec& base() const { return p_; }
    const Vec& initial_velocity() const { return u_; }

    Vec point(double t) const {
        switch (sf_.model) {
            case Model::euclidean:
                return p_ + t * u_;
            case Model::sphere:
                return c_kappa(sf_.kappa, t) * p_ + s_kappa(sf_.kappa, t) * u_;
            case Model::half_space: {
                double s = c_ * t;
                if (vertical_) {
                    Vec out = p_;
                    out(0) = p_(0) * std::exp(sign_ * s);
                    return out;
                }
                double w = s + t0_;
                Vec out = p_;
                out(0) = radius_ / std::cosh(w);
                out += (xc_ + radius_ * std::tanh(w)) * hhat_;
                return out;
            }
        }
        throw std::logic_error("unreachable");
    }

    Vec velocity_components(double t) const {
        switch (sf_.model) {
            case Model::euclidean:
                return u_;
            case Model::sphere:
                return -sf_.kappa * s_kappa(sf_.kappa, t) * p_ + c_kappa(sf_.kappa, t) * u_;
            case Model::half_space: {
                double s = c_ * t;
                if (vertical_) {
                    Vec out = Vec::Zero(p_.size());
                    out(0) = sign_ * c_ * p_(0) * std::exp(sign_ * s);
                    return out;
                }
                double w = s + t0_;
                double sech = 1.0 / std::cosh(w);
                Vec out = c_ * radius_ * sech * sech * hhat_;
                out(0) = -c_ * radius_ * sech * std::tanh(w);
                return out;
            }
        }
        throw std::logic_error("unreachable");
    }

    TangentVec velocity(double t) const { return TangentVec{point(t), velocity_components(t)}; }

    /// Parallel transport of w from gamma(t0) to gamma(t1).
    Vec transport_between(double t0, double t1, const Vec& w) const {
        switch (sf_.model) {
            case Model::euclidean:
                return w;
            case Model::sphere: {
                Vec g0 = velocity_components(t0);
                Vec g1 = velocity_components(t1);
                double a = w.dot(g0);  // g0 is euclidean-unit in this model
                return a * g1 + (w - a * g0);
            }
            case Model::half_space: {
                double y0 = point(t0)(0), y1 = point(t1)(0);
                if (vertical_) return w * (y1 / y0);
                Vec g0 = velocity_components(t0);
                Vec g1 = velocity_components(t1);
                Vec n0 = inplane_normal(g0);
                Vec n1 = inplane_normal(g1);
                double a = metric_dot(sf_, point(t0), w, g0);
                double b = metric_dot(sf_, point(t0), w, n0);
                Vec rest = w - a * g0 - b * n0;
                return a * g1 + b * n1 + rest * (y1 / y0);
            }
        }
        throw std::logic_error("unreachable");
    }

    Vec transport(const Vec& w, double t) const { return transport_between(0.0, t, w); }

private:
    // 90 degree rotation of the velocity within the vertical coordinate 2-plane
    // spanned by e0 and hhat; conformality makes it metric-orthogonal and unit.
    Vec inplane_normal(const Vec& g) const {
        double gv = g(0);
        double gh = g.dot(hhat_);
        Vec n = gv * hhat_;
        n(0) = -gh;
        return n;
    }

    SpaceForm sf_;
    Vec p_, u_;
    double c_ = 0.0;
    bool vertical_ = false;
    double sign_ = 1.0;
    Vec hhat_;
    double radius_ = 0.0, t0_ = 0.0, xc_ = 0.0;
};

inline AmbientPoint geodesic_eval(const SpaceForm& sf, const TangentVec& u, double t) {
    return AmbientPoint{Geodesic(sf, u).point(t)};
}

inline TangentVec geodesic_velocity(const SpaceForm& sf, const TangentVec& u, double t) {
    return Geodesic(sf, u).velocity(t);
}

inline TangentVec parallel_transport(const SpaceForm& sf, const TangentVec& u, double t,
                                     const TangentVec& w) {
    Geodesic g(sf, u);
    return TangentVec{g.point(t), g.transport(w.components, t)};
}

/// Jacobi field J(t) = a gamma'(t) + c_kappa(t) U(t) + s_kappa(t) W(t),
/// where U, W are the parallel transports of the initial data
/// J(0) = a gamma'(0) + uvec, DJ/dt(0) = wvec, with uvec, wvec orthogonal
/// to the geodesic velocity.
inline TangentVec jacobi_eval(const SpaceForm& sf, const Geodesic& g, double a, const Vec& uvec,
                              const Vec& wvec, double t, double ortho_tol = 1e-8) {
    const Vec& u = g.initial_velocity();
    const Vec& p = g.base();
    double su = std::abs(metric_dot(sf, p, uvec, u));
    double sw = std::abs(metric_dot(sf, p, wvec, u));
    if (su > ortho_tol * (1.0 + metric_norm(sf, p, uvec)) ||
        sw > ortho_tol * (1.0 + metric_norm(sf, p, wvec)))
        throw std::invalid_argument("jacobi_eval: initial data not orthogonal to the geodesic");
    Vec out = a * g.velocity_components(t) + c_kappa(sf.kappa, t) * g.transport(uvec, t) +
              s_kappa(sf.kappa, t) * g.transport(wvec, t);
    return TangentVec{g.point(t), out};
}

inline TangentVec jacobi_eval(const SpaceForm& sf, const TangentVec& u, double a, const Vec& uvec,
                              const Vec& wvec, double t) {
    return jacobi_eval(sf, Geodesic(sf, u), a, uvec, wvec, t);
}

}  // namespace tangentray
