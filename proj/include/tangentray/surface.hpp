#pragma once

#include <optional>
#include <vector>

#include "spaceform.hpp"

namespace tangentray {

enum class SurfaceKind { sphere, horosphere, tilted_hyperplane };

/// Complete umbilic hypersurface N of M_kappa, with the unit normal oriented
/// into the exterior region U (the side the mean curvature vector points away
/// from; for kappa > 0 the zone between N and its antipodal image).
///
/// Kinds:
///   sphere            geodesic sphere of radius rho (kappa > 0: distance from
///                     the pole R*e0; kappa < 0: centered at (1, 0, ..., 0))
///   horosphere        {x0 = level} in the half-space model
///   tilted_hyperplane H_theta = {(t sin th, t cos th, x') | t > 0}, th != pi/2
struct SurfaceSpec {
    SpaceForm sf;
    SurfaceKind kind = SurfaceKind::sphere;
    double rho = 1.0;
    double theta = 0.0;
    double level = 1.0;

    int n() const { return sf.dim - 1; }

    static SurfaceSpec sphere(const SpaceForm& sf, double rho, bool allow_totally_geodesic = false) {
        if (rho <= 0) throw std::invalid_argument("sphere: rho must be positive");
        if (sf.kappa > 0 && !allow_totally_geodesic && rho >= horizon(sf.kappa) / 2)
            throw std::invalid_argument("sphere: need rho < T_kappa/2 (not a great sphere)");
        if (sf.kappa > 0 && rho >= horizon(sf.kappa))
            throw std::invalid_argument("sphere: rho out of range");
        SurfaceSpec s;
        s.sf = sf;
        s.kind = SurfaceKind::sphere;
        s.rho = rho;
        return s;
    }

    static SurfaceSpec horosphere(const SpaceForm& sf, double level = 1.0) {
        if (sf.kappa >= 0) throw std::invalid_argument("horosphere requires kappa < 0");
        if (level <= 0) throw std::invalid_argument("horosphere: level must be positive");
        SurfaceSpec s;
        s.sf = sf;
        s.kind = SurfaceKind::horosphere;
        s.level = level;
        return s;
    }

    static SurfaceSpec tilted_hyperplane(const SpaceForm& sf, double theta) {
        if (sf.kappa >= 0) throw std::invalid_argument("tilted hyperplane requires kappa < 0");
        if (theta <= 0 || theta >= M_PI || std::abs(theta - M_PI_2) < 1e-12)
            throw std::invalid_argument("tilted hyperplane: theta in (0,pi), theta != pi/2");
        SurfaceSpec s;
        s.sf = sf;
        s.kind = SurfaceKind::tilted_hyperplane;
        s.theta = theta;
        return s;
    }

    /// Euclidean-geometry description of a sphere-kind surface: the coordinate
    /// sphere carrying N lives in coords [w_offset, w_offset + w_dim).
    struct SphereGeom {
        Vec center;
        double r_e;
        int w_offset;
        int w_dim;
    };

    SphereGeom sphere_geom() const {
        if (kind != SurfaceKind::sphere) throw std::logic_error("not a sphere kind");
        int emb = sf.embedding_dim();
        Vec center = Vec::Zero(emb);
        double r_e = rho;
        int off = 0;
        if (sf.model == Model::sphere) {
            double R = sf.radius(), rk = std::sqrt(sf.kappa);
            center(0) = R * std::cos(rk * rho);
            r_e = R * std::sin(rk * rho);
            off = 1;
        } else if (sf.model == Model::half_space) {
            double c = std::sqrt(-sf.kappa);
            center(0) = std::cosh(c * rho);
            r_e = std::sinh(c * rho);
        }
        return SphereGeom{center, r_e, off, emb - off};
    }
};

struct SurfacePoint {
    int chart = 0;
    Vec local;    // chart coordinates, length n
    Vec ambient;  // cached ambient coordinates
};

// --- stereographic chart of the unit (w_dim-1)-sphere ----------------------
// chart 0 projects from the -e_last pole, chart 1 from +e_last; the pole axis
// is the last coordinate of the w block.

inline Vec stereo_lift(int chart, const Vec& y) {
    int m = static_cast<int>(y.size());
    double d = 1.0 + y.squaredNorm();
    Vec w(m + 1);
    w.head(m) = 2.0 * y / d;
    w(m) = (chart == 0 ? 1.0 : -1.0) * (1.0 - y.squaredNorm()) / d;
    return w;
}

inline Mat stereo_lift_jacobian(int chart, const Vec& y) {
    int m = static_cast<int>(y.size());
    double d = 1.0 + y.squaredNorm();
    double s = chart == 0 ? 1.0 : -1.0;
    Mat J(m + 1, m);
    for (int j = 0; j < m; ++j) {
        for (int i = 0; i < m; ++i)
            J(i, j) = 2.0 * ((i == j ? 1.0 : 0.0) / d - 2.0 * y(i) * y(j) / (d * d));
        J(m, j) = -4.0 * s * y(j) / (d * d);
    }
    return J;
}

inline std::pair<int, Vec> stereo_project(const Vec& w) {
    int m = static_cast<int>(w.size()) - 1;
    double last = w(m);
    int chart = last >= 0 ? 0 : 1;
    double denom = 1.0 + std::abs(last);
    return {chart, Vec(w.head(m) / denom)};
}

// --- charts -----------------------------------------------------------------

inline Vec embed(const SurfaceSpec& spec, int chart, const Vec& local) {
    int emb = spec.sf.embedding_dim();
    switch (spec.kind) {
        case SurfaceKind::sphere: {
            auto geo = spec.sphere_geom();
            Vec w = stereo_lift(chart, local);
            Vec x = geo.center;
            x.segment(geo.w_offset, geo.w_dim) += geo.r_e * w;
            return x;
        }
        case SurfaceKind::horosphere: {
            Vec x(emb);
            x(0) = spec.level;
            x.tail(emb - 1) = local;
            return x;
        }
        case SurfaceKind::tilted_hyperplane: {
            if (local(0) <= 0) throw std::invalid_argument("H_theta chart: first coordinate must be > 0");
            Vec x(emb);
            x(0) = local(0) * std::sin(spec.theta);
            x(1) = local(0) * std::cos(spec.theta);
            x.tail(emb - 2) = local.tail(local.size() - 1);
            return x;
        }
    }
    throw std::logic_error("unreachable");
}

inline Mat chart_jacobian(const SurfaceSpec& spec, int chart, const Vec& local) {
    int emb = spec.sf.embedding_dim();
    int n = spec.n();
    switch (spec.kind) {
        case SurfaceKind::sphere: {
            auto geo = spec.sphere_geom();
            Mat lifted = Mat::Zero(emb, n);
            lifted.block(geo.w_offset, 0, geo.w_dim, n) = geo.r_e * stereo_lift_jacobian(chart, local);
            return lifted;
        }
        case SurfaceKind::horosphere: {
            Mat J = Mat::Zero(emb, n);
            J.block(1, 0, n, n).setIdentity();
            return J;
        }
        case SurfaceKind::tilted_hyperplane: {
            Mat J = Mat::Zero(emb, n);
            J(0, 0) = std::sin(spec.theta);
            J(1, 0) = std::cos(spec.theta);
            for (int i = 1; i < n; ++i) J(i + 1, i) = 1.0;
            return J;
        }
    }
    throw std::logic_error("unreachable");
}

inline SurfacePoint surface_point(const SurfaceSpec& spec, int chart, const Vec& local) {
    return SurfacePoint{chart, local, embed(spec, chart, local)};
}

/// Inverts the chart at an ambient point of N (chooses the chart that keeps
/// the stereographic coordinates inside the handoff ball).
inline SurfacePoint local_of_ambient(const SurfaceSpec& spec, const Vec& q) {
    switch (spec.kind) {
        case SurfaceKind::sphere: {
            auto geo = spec.sphere_geom();
            Vec w = q.segment(geo.w_offset, geo.w_dim) -
                    geo.center.segment(geo.w_offset, geo.w_dim);
            w /= w.norm();
            auto [chart, y] = stereo_project(w);
            return surface_point(spec, chart, y);
        }
        case SurfaceKind::horosphere:
            return surface_point(spec, 0, q.tail(q.size() - 1));
        case SurfaceKind::tilted_hyperplane: {
            Vec y(spec.n());
            y(0) = std::hypot(q(0), q(1));
            y.tail(spec.n() - 1) = q.tail(q.size() - 2);
            return surface_point(spec, 0, y);
        }
    }
    throw std::logic_error("unreachable");
}

/// Model-orthonormal basis of T_pN (columns), built from the chart partials.
inline Mat tangent_frame(const SurfaceSpec& spec, const SurfacePoint& p) {
    Mat J = chart_jacobian(spec, p.chart, p.local);
    int n = spec.n();
    Mat F(J.rows(), n);
    int k = 0;
    for (int j = 0; j < n; ++j) {
        Vec v = J.col(j);
        for (int i = 0; i < k; ++i) v -= metric_dot(spec.sf, p.ambient, v, F.col(i)) * F.col(i);
        double nn = metric_norm(spec.sf, p.ambient, v);
        if (nn < 1e-12) throw NumericalError("tangent_frame: degenerate chart directions");
        F.col(k++) = v / nn;
    }
    return F;
}

// --- normal, curvature, exterior -------------------------------------------

/// Model-unit normal at p, pointing into the exterior U.
inline Vec normal(const SurfaceSpec& spec, const SurfacePoint& p) {
    const auto& sf = spec.sf;
    const Vec& q = p.ambient;
    switch (spec.kind) {
        case SurfaceKind::sphere: {
            auto geo = spec.sphere_geom();
            if (sf.model == Model::sphere) {
                // gradient of the pole distance, pointing away from the pole
                Vec e0 = Vec::Zero(q.size());
                e0(0) = 1.0;
                Vec tang = e0 - sf.kappa * q(0) * q;
                return Vec(-tang / tang.norm());
            }
            Vec radial = (q - geo.center) / geo.r_e;
            if (sf.model == Model::half_space) return Vec(std::sqrt(-sf.kappa) * q(0) * radial);
            return radial;
        }
        case SurfaceKind::horosphere: {
            Vec nrm = Vec::Zero(q.size());
            nrm(0) = -std::sqrt(-sf.kappa) * q(0);
            return nrm;
        }
        case SurfaceKind::tilted_hyperplane: {
            Vec dir = Vec::Zero(q.size());
            dir(0) = std::cos(spec.theta);
            dir(1) = -std::sin(spec.theta);
            double sgn = spec.theta > M_PI_2 ? 1.0 : -1.0;
            return Vec(sgn * std::sqrt(-sf.kappa) * q(0) * dir);
        }
    }
    throw std::logic_error("unreachable");
}

/// Constant magnitude of the mean curvature vector of N.
inline double mean_curvature_mag(const SurfaceSpec& spec) {
    const auto& sf = spec.sf;
    switch (spec.kind) {
        case SurfaceKind::sphere:
            return std::abs(cot_kappa(sf.kappa, spec.rho));
        case SurfaceKind::horosphere:
            return std::sqrt(-sf.kappa);
        case SurfaceKind::tilted_hyperplane:
            return std::sqrt(-sf.kappa) * std::abs(std::cos(spec.theta));
    }
    throw std::logic_error("unreachable");
}

/// Mean curvature vector (points opposite the exterior-facing normal).
inline Vec mean_curvature_vector(const SurfaceSpec& spec, const SurfacePoint& p) {
    return Vec(-mean_curvature_mag(spec) * normal(spec, p));
}

inline double pole_distance(const SpaceForm& sf, const Vec& q) {
    double rk = std::sqrt(sf.kappa);
    double c = std::clamp(q(0) * rk, -1.0, 1.0);
    return std::acos(c) / rk;
}

inline bool exterior_contains(const SurfaceSpec& spec, const Vec& q) {
    const auto& sf = spec.sf;
    if (sf.model == Model::half_space && q(0) <= 0) return false;
    switch (spec.kind) {
        case SurfaceKind::sphere: {
            if (sf.model == Model::sphere) {
                double d = pole_distance(sf, q);
                return d > spec.rho && d < horizon(sf.kappa) - spec.rho;
            }
            auto geo = spec.sphere_geom();
            return (q - geo.center).norm() > geo.r_e;
        }
        case SurfaceKind::horosphere:
            return q(0) > 0 && q(0) < spec.level;
        case SurfaceKind::tilted_hyperplane: {
            double ang = std::atan2(q(0), q(1));
            if (spec.theta < M_PI_2) return ang > 0 && ang < spec.theta;
            return ang > spec.theta && ang < M_PI;
        }
    }
    throw std::logic_error("unreachable");
}

// --- parallel surfaces and leaf coordinates ---------------------------------
// N_t is the umbilic hypersurface containing the tangent-ray endpoints
// gamma_{v(p)}(t); the family { N_t : t in (0, T_kappa) } foliates U.

inline SurfaceSpec parallel_surface(const SurfaceSpec& spec, double t) {
    const auto& sf = spec.sf;
    if (!(t > 0) || t >= horizon(sf.kappa))
        throw std::invalid_argument("parallel_surface: t must lie in (0, T_kappa)");
    switch (spec.kind) {
        case SurfaceKind::sphere: {
            if (sf.kappa == 0) return SurfaceSpec::sphere(sf, std::hypot(spec.rho, t));
            if (sf.kappa > 0) {
                double rk = std::sqrt(sf.kappa);
                double d = std::acos(std::cos(rk * t) * std::cos(rk * spec.rho)) / rk;
                return SurfaceSpec::sphere(sf, d, /*allow_totally_geodesic=*/true);
            }
            double c = std::sqrt(-sf.kappa);
            double d = std::acosh(std::cosh(c * t) * std::cosh(c * spec.rho)) / c;
            return SurfaceSpec::sphere(sf, d);
        }
        case SurfaceKind::horosphere: {
            double c = std::sqrt(-sf.kappa);
            return SurfaceSpec::horosphere(sf, spec.level / std::cosh(c * t));
        }
        case SurfaceKind::tilted_hyperplane: {
            double c = std::sqrt(-sf.kappa);
            double ang = std::atan2(std::sin(spec.theta) / std::cosh(c * t), std::cos(spec.theta));
            SurfaceSpec out = spec;
            out.theta = ang;
            return out;
        }
    }
    throw std::logic_error("unreachable");
}

/// Tangent-ray parameter of the parallel surface through q in U.
inline double leaf_parameter(const SurfaceSpec& spec, const Vec& q) {
    const auto& sf = spec.sf;
    switch (spec.kind) {
        case SurfaceKind::sphere: {
            if (sf.kappa == 0) {
                double d2 = q.squaredNorm() - spec.rho * spec.rho;
                return std::sqrt(std::max(0.0, d2));
            }
            if (sf.kappa > 0) {
                double rk = std::sqrt(sf.kappa);
                double d = pole_distance(sf, q);
                double ratio = std::clamp(std::cos(rk * d) / std::cos(rk * spec.rho), -1.0, 1.0);
                return std::acos(ratio) / rk;
            }
            double c = std::sqrt(-sf.kappa);
            Vec center_pt = Vec::Zero(q.size());
            center_pt(0) = 1.0;
            double d1 = std::acosh(1.0 + (q - center_pt).squaredNorm() / (2.0 * q(0)));
            double d = d1 / c;
            double ratio = std::cosh(c * d) / std::cosh(c * spec.rho);
            return std::acosh(std::max(1.0, ratio)) / c;
        }
        case SurfaceKind::horosphere: {
            double c = std::sqrt(-sf.kappa);
            return std::acosh(spec.level / q(0)) / c;
        }
        case SurfaceKind::tilted_hyperplane: {
            double c = std::sqrt(-sf.kappa);
            double ang = std::atan2(q(0), q(1));
            double ratio = std::tan(spec.theta) / std::tan(ang);
            return std::acosh(std::max(1.0, ratio)) / c;
        }
    }
    throw std::logic_error("unreachable");
}

struct LeafCoordinates {
    double t;
    SurfaceSpec leaf;   // the parallel surface N_t containing q
    SurfacePoint foot;  // chart coordinates of q within N_t
};

inline LeafCoordinates leaf_coordinates(const SurfaceSpec& spec, const Vec& q) {
    if (!exterior_contains(spec, q))
        throw std::invalid_argument("leaf_coordinates: point is not in the exterior U");
    double t = leaf_parameter(spec, q);
    SurfaceSpec nt = parallel_surface(spec, t);
    return LeafCoordinates{t, nt, local_of_ambient(nt, q)};
}

// --- deterministic sample grids ----------------------------------------------

/// Low-discrepancy chart samples. Sphere kinds also include points on every
/// coordinate great circle of the w block, so symmetry axes are always probed.
inline std::vector<SurfacePoint> sample_grid(const SurfaceSpec& spec, int count, double box = 2.5) {
    std::vector<SurfacePoint> pts;
    int n = spec.n();
    switch (spec.kind) {
        case SurfaceKind::sphere: {
            auto geo = spec.sphere_geom();
            int per_chart = count / 2;
            for (int chart = 0; chart < 2; ++chart) {
                int taken = 0;
                for (int i = 1; taken < per_chart && i < 50 * per_chart; ++i) {
                    Vec y(n);
                    for (int d = 0; d < n; ++d)
                        y(d) = 1.2 * (2.0 * radical_inverse(i, halton_base(d)) - 1.0);
                    if (y.norm() > 1.2) continue;
                    pts.push_back(surface_point(spec, chart, y));
                    ++taken;
                }
            }
            for (int i = 0; i < geo.w_dim; ++i)
                for (int j = i + 1; j < geo.w_dim; ++j)
                    for (int k = 0; k < 12; ++k) {
                        double a = 2.0 * M_PI * k / 12.0 + 0.05;
                        Vec w = Vec::Zero(geo.w_dim);
                        w(i) = std::cos(a);
                        w(j) = std::sin(a);
                        Vec q = geo.center;
                        q.segment(geo.w_offset, geo.w_dim) += geo.r_e * w;
                        pts.push_back(local_of_ambient(spec, q));
                    }
            return pts;
        }
        case SurfaceKind::horosphere: {
            for (int i = 1; (int)pts.size() < count; ++i) {
                Vec y(n);
                for (int d = 0; d < n; ++d)
                    y(d) = box * (2.0 * radical_inverse(i, halton_base(d)) - 1.0);
                pts.push_back(surface_point(spec, 0, y));
            }
            return pts;
        }
        case SurfaceKind::tilted_hyperplane: {
            for (int i = 1; (int)pts.size() < count; ++i) {
                Vec y(n);
                y(0) = 0.3 * std::pow(10.0, radical_inverse(i, 2));  // log-spread over [0.3, 3]
                for (int d = 1; d < n; ++d)
                    y(d) = box * (2.0 * radical_inverse(i, halton_base(d)) - 1.0);
                pts.push_back(surface_point(spec, 0, y));
            }
            return pts;
        }
    }
    throw std::logic_error("unreachable");
}

}  // namespace tangentray
