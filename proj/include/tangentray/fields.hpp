#pragma once

#include <functional>
#include <optional>
#include <utility>

#include "surface.hpp"

namespace tangentray {

// --- catalog field definitions ----------------------------------------------

namespace detail {

/// J(p1,...,p2k) = (-p2, p1, ..., -p2k, p2k-1), the standard complex structure.
inline Mat complex_structure(int dim) {
    Mat J = Mat::Zero(dim, dim);
    for (int i = 0; i + 1 < dim; i += 2) {
        J(i, i + 1) = -1.0;
        J(i + 1, i) = 1.0;
    }
    return J;
}

/// P(p1,...,p2k) = (-p4, p3, -p2, p1, 0, ..., 0).
inline Mat perturbation_matrix(int dim) {
    Mat P = Mat::Zero(dim, dim);
    P(0, 3) = -1.0;
    P(1, 2) = 1.0;
    P(2, 1) = -1.0;
    P(3, 0) = 1.0;
    return P;
}

// Interpolant for the Fermi-coordinate field: h(r) = sin(r) * sigma(|r|) with
// a smooth step sigma that is flat at 0 and equals 1 for r >= 1, so h is odd,
// h(0) = h'(0) = 0 and h(r) = sin(r) on (1, pi/2).
inline double fermi_sigma(double r) {
    if (r <= 0.0) return 0.0;
    if (r >= 1.0) return 1.0;
    double u = 1.0 - (1.0 - r) * (1.0 - r);
    return std::exp(1.0 - 1.0 / u);
}

inline double fermi_sigma_prime(double r) {
    if (r <= 0.0 || r >= 1.0) return 0.0;
    double u = 1.0 - (1.0 - r) * (1.0 - r);
    return 2.0 * (1.0 - r) * fermi_sigma(r) / (u * u);
}

inline double fermi_h(double r) { return std::sin(r) * fermi_sigma(std::abs(r)); }
inline double fermi_h_prime(double r) {
    double a = std::abs(r);
    return std::cos(r) * fermi_sigma(a) + std::sin(std::abs(r)) * fermi_sigma_prime(a);
}

/// Fermi-coordinate field on the unit 3-sphere: v = g(r) i e^{it} + h(r) e^{is} k.
inline Vec fermi_eval(const Vec& w) {
    double ra = std::hypot(w(0), w(1)), rb = std::hypot(w(2), w(3));
    double r = std::atan2(rb, ra);
    double h = fermi_h(r);
    double g = std::sqrt(std::max(0.0, 1.0 - h * h));
    double G = ra > 1e-12 ? g / ra : 1.0;          // g / cos(r)
    double H = rb > 1e-12 ? h / rb : fermi_sigma(r);  // h / sin(r) = sigma(r)
    Vec v(4);
    v << -G * w(1), G * w(0), -H * w(3), H * w(2);
    return v;
}

inline Mat fermi_jacobian(const Vec& w) {
    double ra = std::hypot(w(0), w(1)), rb = std::hypot(w(2), w(3));
    double r = std::atan2(rb, ra);
    double h = fermi_h(r), hp = fermi_h_prime(r);
    double g = std::sqrt(std::max(1e-300, 1.0 - h * h));
    double gp = -h * hp / g;
    double G = ra > 1e-12 ? g / ra : 1.0;
    double H = rb > 1e-12 ? h / rb : fermi_sigma(r);
    Mat out = Mat::Zero(4, 4);
    out(0, 1) = -G;
    out(1, 0) = G;
    out(2, 3) = -H;
    out(3, 2) = H;
    // gradient terms; the scalar factors are flat where the polar parts degenerate
    if (ra > 1e-12 && rb > 1e-12) {
        double Gp = (gp * ra + g * rb) / (ra * ra);  // d(g/cos r)/dr with cos r = ra, sin r = rb
        double Hp = fermi_sigma_prime(r);
        Vec grad_r(4);
        grad_r << -rb * w(0) / ra, -rb * w(1) / ra, ra * w(2) / rb, ra * w(3) / rb;
        Vec ja(4), jb(4);
        ja << -w(1), w(0), 0, 0;
        jb << 0, 0, -w(3), w(2);
        out += Gp * ja * grad_r.transpose() + Hp * jb * grad_r.transpose();
    }
    return out;
}

}  // namespace detail

/// A named unit vector field on N. Evaluation returns ambient components of a
/// model-unit tangent vector; `ambient_jac` (when present) is the exact
/// derivative of that representation with respect to the chart coordinates.
/// Fields on horospheres additionally expose their flat chart form, which the
/// billiard fast path consumes directly.
struct UnitField {
    std::string name;
    double eps = 0.0;
    double freq = 0.0;

    std::function<Vec(const SurfaceSpec&, const SurfacePoint&)> ambient;
    std::function<Mat(const SurfaceSpec&, const SurfacePoint&)> ambient_jac;  // may be null
    std::function<Vec(const Vec&)> chart;                                     // may be null
    std::function<Mat(const Vec&)> chart_jac;                                 // may be null

    bool has_exact_jacobian() const { return static_cast<bool>(ambient_jac); }
    bool has_chart_form() const { return static_cast<bool>(chart); }

    TangentVec evaluate(const SurfaceSpec& spec, const SurfacePoint& p) const {
        return TangentVec{p.ambient, ambient(spec, p)};
    }
};

struct FieldInfo {
    std::string name;
    std::string params;
    std::string surfaces;
};

inline std::vector<FieldInfo> field_catalog() {
    return {
        {"hopf", "", "sphere (kappa >= 0, odd-dimensional)"},
        {"hopf-perturbed", "eps in [0,1)", "sphere (kappa >= 0, dim >= 3)"},
        {"fermi-bizero", "", "3-sphere (kappa >= 0)"},
        {"constant", "", "horosphere"},
        {"u-eps", "eps", "horosphere (n >= 2)"},
        {"hopf-stereo", "", "horosphere (n = 3)"},
        {"rotating", "freq", "horosphere (n = 2)"},
        {"w-eps", "eps", "tilted hyperplane (n >= 2)"},
    };
}

namespace detail {

// Transplants a unit-sphere field V (with derivative DV) onto a sphere-kind
// surface: v(x) = V((x - center)/r_e), lifted into the w block.
inline UnitField sphere_field(const SurfaceSpec& spec, std::string name,
                              std::function<Vec(const Vec&)> V, std::function<Mat(const Vec&)> DV) {
    if (spec.kind != SurfaceKind::sphere || spec.sf.kappa < 0)
        throw std::invalid_argument(name + ": needs a sphere surface with kappa >= 0");
    auto geo = spec.sphere_geom();
    UnitField f;
    f.name = std::move(name);
    f.ambient = [geo, V](const SurfaceSpec&, const SurfacePoint& p) {
        Vec w = (p.ambient.segment(geo.w_offset, geo.w_dim) -
                 Vec(geo.center.segment(geo.w_offset, geo.w_dim))) /
                geo.r_e;
        Vec out = Vec::Zero(p.ambient.size());
        out.segment(geo.w_offset, geo.w_dim) = V(w);
        return out;
    };
    f.ambient_jac = [geo, DV](const SurfaceSpec& spec, const SurfacePoint& p) {
        Vec w = (p.ambient.segment(geo.w_offset, geo.w_dim) -
                 Vec(geo.center.segment(geo.w_offset, geo.w_dim))) /
                geo.r_e;
        Mat dw = stereo_lift_jacobian(p.chart, p.local);  // dw/dlocal, since w = Phi(local)
        Mat out = Mat::Zero(spec.sf.embedding_dim(), spec.n());
        out.block(geo.w_offset, 0, geo.w_dim, spec.n()) = DV(w) * dw;
        return out;
    };
    return f;
}

// Wraps flat chart components f (euclidean-unit) on a horosphere into the
// model-unit ambient field sqrt(-kappa) * (0, f).
inline UnitField horosphere_field(const SurfaceSpec& spec, std::string name,
                                  std::function<Vec(const Vec&)> f,
                                  std::function<Mat(const Vec&)> Jf) {
    if (spec.kind != SurfaceKind::horosphere)
        throw std::invalid_argument(name + ": needs a horosphere surface");
    double scale = std::sqrt(-spec.sf.kappa) * spec.level;
    UnitField out;
    out.name = std::move(name);
    out.chart = f;
    out.chart_jac = Jf;
    out.ambient = [f, scale](const SurfaceSpec& spec, const SurfacePoint& p) {
        Vec a = Vec::Zero(spec.sf.embedding_dim());
        a.tail(spec.n()) = scale * f(p.local);
        return a;
    };
    if (Jf)
        out.ambient_jac = [Jf, scale](const SurfaceSpec& spec, const SurfacePoint& p) {
            Mat a = Mat::Zero(spec.sf.embedding_dim(), spec.n());
            a.block(1, 0, spec.n(), spec.n()) = scale * Jf(p.local);
            return a;
        };
    return out;
}

}  // namespace detail

/// Builds a catalog field, validating the field/surface pairing.
inline UnitField make_field(const SurfaceSpec& spec, const std::string& name, double eps = 0.0,
                            double freq = 0.0) {
    const int n = spec.n();
    if (name == "hopf" || name == "hopf-perturbed") {
        double e = name == "hopf" ? 0.0 : eps;
        if (name == "hopf-perturbed" && (e < 0 || e >= 1))
            throw std::invalid_argument("hopf-perturbed: eps must lie in [0,1)");
        int wd = spec.kind == SurfaceKind::sphere ? spec.sphere_geom().w_dim : 0;
        if (wd % 2 != 0 || (e != 0 && wd < 4))
            throw std::invalid_argument(name + ": incompatible sphere dimension");
        Mat L = detail::complex_structure(wd);
        if (e != 0) L += e * detail::perturbation_matrix(wd);
        auto V = [L](const Vec& w) { return Vec((L * w).normalized()); };
        auto DV = [L](const Vec& w) {
            Vec Lw = L * w;
            double nn = Lw.norm();
            return Mat(L / nn - Lw * (Lw.transpose() * L) / (nn * nn * nn));
        };
        auto f = detail::sphere_field(spec, name, V, DV);
        f.eps = e;
        return f;
    }
    if (name == "fermi-bizero") {
        if (spec.kind != SurfaceKind::sphere || spec.sphere_geom().w_dim != 4)
            throw std::invalid_argument("fermi-bizero: needs a 3-sphere");
        return detail::sphere_field(spec, name, detail::fermi_eval, detail::fermi_jacobian);
    }
    if (name == "constant") {
        Vec c = Vec::Zero(n);
        c(0) = 1.0;
        return detail::horosphere_field(
            spec, name, [c](const Vec&) { return c; },
            [n](const Vec&) { return Mat(Mat::Zero(n, n)); });
    }
    if (name == "u-eps") {
        if (n < 2) throw std::invalid_argument("u-eps: needs n >= 2");
        auto f = detail::horosphere_field(
            spec, name,
            [eps, n](const Vec& y) {
                double s = std::sin(y(0));
                Vec out = Vec::Zero(n);
                out(0) = 1.0;
                out(1) = eps * s;
                return Vec(out / std::sqrt(1.0 + eps * eps * s * s));
            },
            [eps, n](const Vec& y) {
                double s = std::sin(y(0)), c = std::cos(y(0));
                double d = 1.0 + eps * eps * s * s;
                double phi = 1.0 / std::sqrt(d);
                double phip = -eps * eps * s * c * phi / d;
                Mat J = Mat::Zero(n, n);
                J(0, 0) = phip;
                J(1, 0) = phip * eps * s + phi * eps * c;
                return J;
            });
        f.eps = eps;
        return f;
    }
    if (name == "hopf-stereo") {
        if (n != 3) throw std::invalid_argument("hopf-stereo: needs a 3-dimensional horosphere");
        // stereographic projection of the Hopf field on S^3:
        // v = (x^2 - y^2 - z^2 + 1, 2xy + 2z, 2xz - 2y) / (x^2 + y^2 + z^2 + 1)
        auto f = [](const Vec& p) {
            double x = p(0), y = p(1), z = p(2);
            double q = x * x + y * y + z * z + 1.0;
            Vec v(3);
            v << x * x - y * y - z * z + 1.0, 2 * x * y + 2 * z, 2 * x * z - 2 * y;
            return Vec(v / q);
        };
        auto Jf = [](const Vec& p) {
            double x = p(0), y = p(1), z = p(2);
            double q = x * x + y * y + z * z + 1.0;
            Vec w(3);
            w << x * x - y * y - z * z + 1.0, 2 * x * y + 2 * z, 2 * x * z - 2 * y;
            Mat dw(3, 3);
            dw << 2 * x, -2 * y, -2 * z, 2 * y, 2 * x, 2, 2 * z, -2, 2 * x;
            Vec dq(3);
            dq << 2 * x, 2 * y, 2 * z;
            return Mat((dw * q - w * dq.transpose()) / (q * q));
        };
        return detail::horosphere_field(spec, name, f, Jf);
    }
    if (name == "rotating") {
        if (n != 2) throw std::invalid_argument("rotating: needs a 2-dimensional horosphere");
        auto f = detail::horosphere_field(
            spec, name,
            [freq](const Vec& y) {
                Vec v(2);
                v << std::cos(freq * y(0)), std::sin(freq * y(0));
                return v;
            },
            [freq](const Vec& y) {
                Mat J = Mat::Zero(2, 2);
                J(0, 0) = -freq * std::sin(freq * y(0));
                J(1, 0) = freq * std::cos(freq * y(0));
                return J;
            });
        f.freq = freq;
        return f;
    }
    if (name == "w-eps") {
        if (spec.kind != SurfaceKind::tilted_hyperplane)
            throw std::invalid_argument("w-eps: needs a tilted hyperplane");
        if (n < 2) throw std::invalid_argument("w-eps: needs n >= 2");
        // Unit field in the intrinsic half-space chart of H_theta, which has
        // constant curvature k = kappa sin^2(theta).
        double sk = std::sqrt(-spec.sf.kappa) * std::sin(spec.theta);  // sqrt(-k)
        Mat D = chart_jacobian(spec, 0, Vec::Ones(n));                 // constant columns
        auto comps = [eps, sk, n](const Vec& y) {
            double s = std::sin(y(1));
            Vec c = Vec::Zero(n);
            c(0) = 1.0;
            c(1) = eps * s;
            return Vec(sk * y(0) / std::sqrt(1.0 + eps * eps * s * s) * c);
        };
        auto dcomps = [eps, sk, n](const Vec& y) {
            double s = std::sin(y(1)), c = std::cos(y(1));
            double d = 1.0 + eps * eps * s * s;
            double phi = 1.0 / std::sqrt(d);
            double phip = -eps * eps * s * c * phi / d;
            Mat J = Mat::Zero(n, n);
            J(0, 0) = sk * phi;
            J(1, 0) = sk * phi * eps * s;
            J(0, 1) = sk * y(0) * phip;
            J(1, 1) = sk * y(0) * (phip * eps * s + phi * eps * c);
            return J;
        };
        UnitField f;
        f.name = name;
        f.eps = eps;
        f.ambient = [comps, D](const SurfaceSpec&, const SurfacePoint& p) {
            return Vec(D * comps(p.local));
        };
        f.ambient_jac = [dcomps, D](const SurfaceSpec&, const SurfacePoint& p) {
            return Mat(D * dcomps(p.local));
        };
        return f;
    }
    throw std::invalid_argument("unknown field '" + name + "'");
}

// --- covariant derivative ----------------------------------------------------

struct NablaOptions {
    enum class Mode { auto_mode, exact, finite_difference };
    Mode mode = Mode::auto_mode;
    double step = 1e-5;
    double richardson_trigger = 1e-3;
};

/// Matrix of (nabla v)_p in an adapted model-orthonormal frame u1 = v(p),
/// u2, ..., un of T_pN. The image of (nabla v)_p is orthogonal to v(p), so the
/// first row vanishes; the restricted block is the operator on v(p)-perp.
struct NablaReport {
    SurfacePoint point;
    Mat frame;   // embedding_dim x n, columns u1..un
    Mat matrix;  // n x n, entries <u_i, nabla_{u_j} v>
    Mat restricted() const { return matrix.block(1, 1, matrix.rows() - 1, matrix.cols() - 1); }
    Vec geodesic_defect() const { return matrix.col(0); }
};

namespace detail {

// Ambient Christoffel contraction of the half-space model; constant conformal
// rescaling leaves the connection unchanged, so this is kappa-independent.
inline Vec half_space_gamma(const Vec& x, const Vec& a, const Vec& b) {
    double x0 = x(0);
    Vec out = -(a(0) * b + b(0) * a) / x0;
    out(0) += a.dot(b) / x0;
    return out;
}

}  // namespace detail

inline NablaReport nabla(const UnitField& field, const SurfaceSpec& spec, const SurfacePoint& p,
                         const NablaOptions& opts = {}) {
    const int n = spec.n();
    Vec v = field.ambient(spec, p);

    // adapted frame: u1 = v(p), completed from the chart frame
    Mat base = tangent_frame(spec, p);
    Mat frame(base.rows(), n);
    frame.col(0) = v;
    int k = 1;
    for (int j = 0; j < n && k < n; ++j) {
        Vec c = base.col(j);
        for (int i = 0; i < k; ++i) c -= metric_dot(spec.sf, p.ambient, c, frame.col(i)) * frame.col(i);
        double nn = metric_norm(spec.sf, p.ambient, c);
        if (nn > 1e-8) frame.col(k++) = c / nn;
    }
    if (k < n) throw NumericalError("nabla: failed to complete the adapted frame");

    Mat Dch = chart_jacobian(spec, p.chart, p.local);
    Eigen::ColPivHouseholderQR<Mat> qr(Dch);

    bool use_exact = opts.mode == NablaOptions::Mode::exact ||
                     (opts.mode == NablaOptions::Mode::auto_mode && field.has_exact_jacobian());
    if (use_exact && !field.has_exact_jacobian())
        throw std::invalid_argument("nabla: exact mode requested but no exact derivative");

    Mat Jloc;
    if (use_exact) Jloc = field.ambient_jac(spec, p);

    Mat M(n, n);
    for (int j = 0; j < n; ++j) {
        Vec uj = frame.col(j);
        Vec ydot = qr.solve(uj);
        Vec d;
        if (use_exact) {
            d = Jloc * ydot;
        } else {
            auto sample = [&](double eta) {
                SurfacePoint pp = surface_point(spec, p.chart, Vec(p.local + eta * ydot));
                SurfacePoint pm = surface_point(spec, p.chart, Vec(p.local - eta * ydot));
                return Vec((field.ambient(spec, pp) - field.ambient(spec, pm)) / (2 * eta));
            };
            d = sample(opts.step);
            Vec d2 = sample(opts.step / 2);
            if ((d - d2).norm() > opts.richardson_trigger * (1.0 + d2.norm()))
                d = (4.0 * d2 - d) / 3.0;
        }
        if (spec.sf.model == Model::half_space) d += detail::half_space_gamma(p.ambient, uj, v);
        for (int i = 0; i < n; ++i) M(i, j) = metric_dot(spec.sf, p.ambient, frame.col(i), d);
    }
    return NablaReport{p, frame, M};
}

/// Flat-chart derivative matrix of a horosphere field (the matrix of
/// (nabla v)_p in the coordinate frame of the flat chart).
inline Mat flat_chart_nabla(const UnitField& field, const Vec& local, double step = 1e-5) {
    if (!field.has_chart_form()) throw std::invalid_argument("field has no flat chart form");
    if (field.chart_jac) return field.chart_jac(local);
    int n = static_cast<int>(local.size());
    Mat J(n, n);
    for (int j = 0; j < n; ++j) {
        Vec lp = local, lm = local;
        lp(j) += step;
        lm(j) -= step;
        J.col(j) = (field.chart(lp) - field.chart(lm)) / (2 * step);
    }
    return J;
}

// --- field-level checks -------------------------------------------------------

/// Does v(v(p)) = -p? Holds exactly when v is tangent to a great circle
/// fibration of the unit sphere.
inline bool great_circle_check(const UnitField& field, const SurfaceSpec& spec,
                               const SurfacePoint& p, double tol = 1e-8) {
    if (spec.kind != SurfaceKind::sphere || spec.sf.model != Model::euclidean ||
        std::abs(spec.rho - 1.0) > 1e-12)
        throw std::invalid_argument("great_circle_check: needs the unit sphere in R^(n+1)");
    Vec vp = field.ambient(spec, p);
    SurfacePoint q = local_of_ambient(spec, vp);
    Vec vvp = field.ambient(spec, q);
    return (vvp + p.ambient).norm() < tol;
}

struct GeodesicFieldCheck {
    bool geodesic;
    double max_defect;
};

/// Checks nabla_v v = 0 at every sample (first column of the adapted matrix).
inline GeodesicFieldCheck is_geodesic_field(const UnitField& field, const SurfaceSpec& spec,
                                            const std::vector<SurfacePoint>& samples,
                                            double tol = 1e-6, const NablaOptions& opts = {}) {
    double worst = 0.0;
    for (const auto& p : samples)
        worst = std::max(worst, nabla(field, spec, p, opts).geodesic_defect().norm());
    return GeodesicFieldCheck{worst < tol, worst};
}

}  // namespace tangentray
