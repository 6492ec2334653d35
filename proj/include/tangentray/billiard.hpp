#pragma once

#include "analysis.hpp"

namespace tangentray {

// --- flat discrete flows -------------------------------------------------------

/// One step of the (v,delta)-flow p -> p + delta v(p) on a flat chart.
inline Vec vdelta_step(const UnitField& field, double delta, const Vec& p) {
    if (!field.has_chart_form()) throw std::invalid_argument("vdelta_step: field has no chart form");
    return p + delta * field.chart(p);
}

struct NewtonOptions {
    double residual = 1e-12;
    int max_iters = 50;
    int max_halvings = 20;
};

/// Solves p - r v(p) = q' by damped Newton iteration on the flat chart.
/// Initial guess q' + r v(q'); the Jacobian is I - r (chart nabla v).
inline Vec inverse_id_minus_rv(const UnitField& field, double r, const Vec& qprime,
                               const NewtonOptions& opts = {}) {
    if (!field.has_chart_form())
        throw std::invalid_argument("inverse_id_minus_rv: field has no chart form");
    if (std::abs(r) >= 1.0 || r == 0.0)
        throw std::invalid_argument("inverse_id_minus_rv: need 0 < |r| < 1");
    int n = static_cast<int>(qprime.size());
    Vec p = qprime + r * field.chart(qprime);
    Vec G = p - r * field.chart(p) - qprime;
    double best = G.norm();
    for (int it = 0; it < opts.max_iters; ++it) {
        if (best <= opts.residual) return p;
        Mat J = Mat::Identity(n, n) - r * flat_chart_nabla(field, p);
        Eigen::FullPivLU<Mat> lu(J);
        Vec delta = lu.isInvertible() ? Vec(lu.solve(G)) : G;
        double step = 1.0;
        for (int h = 0; h <= opts.max_halvings; ++h) {
            Vec cand = p - step * delta;
            Vec Gc = cand - r * field.chart(cand) - qprime;
            if (Gc.norm() < best) {
                p = cand;
                G = Gc;
                best = Gc.norm();
                break;
            }
            step /= 2;
            if (h == opts.max_halvings)
                throw NumericalError("inverse_id_minus_rv: line search stalled", best);
        }
    }
    if (best <= opts.residual) return p;
    throw NumericalError("inverse_id_minus_rv: no convergence", best);
}

/// Restriction of the outer billiard map to the horosphere H_h, as the flat map
/// B_h(q') = q' + 2r v((id - r v)^{-1}(q')) with r = sqrt(1 - h^2).
inline Vec billiard_step_horosphere(const UnitField& field, double h, const Vec& qprime,
                                    const NewtonOptions& opts = {}) {
    if (h <= 0.0 || h >= 1.0)
        throw std::invalid_argument("billiard_step_horosphere: need 0 < h < 1");
    double r = std::sqrt(1.0 - h * h);
    Vec p = inverse_id_minus_rv(field, r, qprime, opts);
    return qprime + 2.0 * r * field.chart(p);
}

// --- leaf location ---------------------------------------------------------------

enum class LeafSign { forward, backward };

/// A point of U written as gamma_{sign v(p)}(t): the tangency foot p on N and
/// the ray parameter t in (0, T_kappa).
struct LeafCoords {
    SurfacePoint p;
    double t = 0.0;
    LeafSign sign = LeafSign::forward;
};

struct BilliardOptions {
    NewtonOptions newton;
    double leaf_residual = 1e-10;
    double fd_step = 1e-6;
    bool force_generic = false;  // skip the horosphere closed form (used by agreement tests)
    NablaOptions nabla;
};

namespace detail {

inline SurfacePoint leaf_initial_guess(const SurfaceSpec& spec, const Vec& q) {
    switch (spec.kind) {
        case SurfaceKind::sphere: {
            auto geo = spec.sphere_geom();
            Vec w = q.segment(geo.w_offset, geo.w_dim) -
                    Vec(geo.center.segment(geo.w_offset, geo.w_dim));
            Vec foot = geo.center;
            foot.segment(geo.w_offset, geo.w_dim) += geo.r_e * w / w.norm();
            return local_of_ambient(spec, foot);
        }
        case SurfaceKind::horosphere: {
            Vec foot = q;
            foot(0) = spec.level;
            return local_of_ambient(spec, foot);
        }
        case SurfaceKind::tilted_hyperplane: {
            double tq = std::hypot(q(0), q(1));
            Vec foot = q;
            foot(0) = tq * std::sin(spec.theta);
            foot(1) = tq * std::cos(spec.theta);
            return local_of_ambient(spec, foot);
        }
    }
    throw std::logic_error("unreachable");
}

inline LeafCoords locate_leaf_generic(const UnitField& field, const SurfaceSpec& spec, const Vec& q,
                                      LeafSign sign, const BilliardOptions& opts) {
    double t = leaf_parameter(spec, q);
    double sigma = sign == LeafSign::forward ? 1.0 : -1.0;
    int n = spec.n();
    auto residual = [&](const SurfacePoint& p) {
        Vec v = sigma * field.ambient(spec, p);
        return Vec(Geodesic(spec.sf, {p.ambient, v}).point(t) - q);
    };
    double target = opts.leaf_residual * (1.0 + q.norm());

    auto newton_from = [&](SurfacePoint cur) -> std::pair<SurfacePoint, double> {
        Vec F = residual(cur);
        double best = F.norm();
        for (int it = 0; it < opts.newton.max_iters && best > target; ++it) {
            Mat J(q.size(), n);
            for (int j = 0; j < n; ++j) {
                Vec yp = cur.local, ym = cur.local;
                yp(j) += opts.fd_step;
                ym(j) -= opts.fd_step;
                J.col(j) = (residual(surface_point(spec, cur.chart, yp)) -
                            residual(surface_point(spec, cur.chart, ym))) /
                           (2 * opts.fd_step);
            }
            Vec delta = J.colPivHouseholderQr().solve(F);
            double step = 1.0;
            bool moved = false;
            for (int h = 0; h <= opts.newton.max_halvings; ++h) {
                Vec cand = cur.local - step * delta;
                if (spec.kind == SurfaceKind::tilted_hyperplane && cand(0) <= 0) {
                    step /= 2;
                    continue;
                }
                SurfacePoint pc = surface_point(spec, cur.chart, cand);
                Vec Fc = residual(pc);
                if (Fc.norm() < best) {
                    cur = pc;
                    F = Fc;
                    best = Fc.norm();
                    moved = true;
                    break;
                }
                step /= 2;
            }
            if (!moved) break;
            if (spec.kind == SurfaceKind::sphere && cur.local.norm() > 1.5)
                cur = local_of_ambient(spec, cur.ambient);
        }
        return {cur, best};
    };

    auto [p, best] = newton_from(leaf_initial_guess(spec, q));
    if (best <= target) return LeafCoords{p, t, sign};

    // coarse restart over the chart before giving up
    SurfacePoint best_seed = p;
    double best_res = best;
    for (const auto& cand : sample_grid(spec, 128)) {
        double r = residual(cand).norm();
        if (r < best_res) {
            best_res = r;
            best_seed = cand;
        }
    }
    auto [p2, best2] = newton_from(best_seed);
    if (best2 <= target) return LeafCoords{p2, t, sign};
    throw NumericalError("locate_leaf: no convergence", std::min(best, best2));
}

}  // namespace detail

/// Finds the tangent leaf through q: (p, t) with gamma_{sign v(p)}(t) = q.
/// Horospheres at level 1 use the closed form t = arctanh(r)/sqrt(-kappa) and
/// the flat Newton inverse; everything else runs a damped Gauss-Newton solve
/// on the chart of N.
inline LeafCoords locate_leaf(const UnitField& field, const SurfaceSpec& spec, const Vec& q,
                              LeafSign sign, const BilliardOptions& opts = {}) {
    if (!exterior_contains(spec, q))
        throw std::invalid_argument("locate_leaf: point is not strictly inside U");
    bool fast = spec.kind == SurfaceKind::horosphere && spec.level == 1.0 &&
                field.has_chart_form() && !opts.force_generic;
    if (!fast) return detail::locate_leaf_generic(field, spec, q, sign, opts);

    double h = q(0);
    double r = std::sqrt(1.0 - h * h);
    double t = std::atanh(r) / std::sqrt(-spec.sf.kappa);
    Vec qprime = q.tail(q.size() - 1);
    double reff = sign == LeafSign::backward ? r : -r;  // forward solves p + r v(p) = q'
    Vec pprime = inverse_id_minus_rv(field, reff, qprime, opts.newton);
    return LeafCoords{surface_point(spec, 0, pprime), t, sign};
}

// --- the outer billiard map ------------------------------------------------------

struct BilliardStep {
    Vec point;
    LeafCoords leaf;
};

/// B(gamma_{v(p)}(-t)) = gamma_{v(p)}(t): locate the backward leaf, then shoot
/// the same tangent ray forward.
inline BilliardStep billiard_step_with_leaf(const UnitField& field, const SurfaceSpec& spec,
                                            const Vec& q, const BilliardOptions& opts = {}) {
    LeafCoords lc = locate_leaf(field, spec, q, LeafSign::backward, opts);
    Vec v = field.ambient(spec, lc.p);
    Vec out = Geodesic(spec.sf, {lc.p.ambient, v}).point(lc.t);
    return BilliardStep{out, lc};
}

inline Vec billiard_step(const UnitField& field, const SurfaceSpec& spec, const Vec& q,
                         const BilliardOptions& opts = {}) {
    return billiard_step_with_leaf(field, spec, q, opts).point;
}

inline Vec billiard_inverse(const UnitField& field, const SurfaceSpec& spec, const Vec& q,
                            const BilliardOptions& opts = {}) {
    LeafCoords lc = locate_leaf(field, spec, q, LeafSign::forward, opts);
    Vec v = field.ambient(spec, lc.p);
    return Geodesic(spec.sf, {lc.p.ambient, v}).point(-lc.t);
}

// --- differentials -----------------------------------------------------------------

/// Matrix of dF_(p,s), F(p,s) = gamma_{v(p)}(s), in the parallel-transported
/// bases: block layout
///     [ 1        0^T                       1 ]
///     [ s_k b    c_k I_{n-1} + s_k A       0 ]
///     [ s_k h    0^T                       0 ]
/// with A the restricted block of (nabla v)_p, b the coordinates of
/// nabla_{v(p)} v and h the mean curvature magnitude.
struct DFMatrix {
    Mat m;
    Mat a;
    Vec b;
    double h, sk, ck, s;
};

inline DFMatrix df_matrix(const UnitField& field, const SurfaceSpec& spec, const SurfacePoint& p,
                          double s, const NablaOptions& nopts = {}) {
    int n = spec.n();
    auto rep = nabla(field, spec, p, nopts);
    Mat A = rep.restricted();
    Vec b = rep.matrix.col(0).tail(n - 1);
    double h = mean_curvature_mag(spec);
    double sk = s_kappa(spec.sf.kappa, s), ck = c_kappa(spec.sf.kappa, s);
    Mat M = Mat::Zero(n + 1, n + 1);
    M(0, 0) = 1.0;
    M(0, n) = 1.0;
    M.block(1, 0, n - 1, 1) = sk * b;
    M.block(1, 1, n - 1, n - 1) = ck * Mat::Identity(n - 1, n - 1) + sk * A;
    M(n, 0) = sk * h;
    return DFMatrix{M, A, b, h, sk, ck, s};
}

/// det dB_q = (-1)^{n+1} P(cot_k(-t)) / P(cot_k(t)) with P the characteristic
/// polynomial of the restricted block at the tangency foot.
inline double jacobian_det_analytic(const UnitField& field, const SurfaceSpec& spec, const Vec& q,
                                    const BilliardOptions& opts = {}) {
    LeafCoords lc = locate_leaf(field, spec, q, LeafSign::backward, opts);
    Vec P = char_poly(field, spec, lc.p, opts.nabla).p;
    double kappa = spec.sf.kappa;
    double num = polyval(P, cot_kappa(kappa, -lc.t));
    double den = polyval(P, cot_kappa(kappa, lc.t));
    if (den == 0.0) throw NumericalError("jacobian_det_analytic: P(cot_k(t)) vanished");
    double sign = spec.n() % 2 == 0 ? -1.0 : 1.0;  // (-1)^{n+1}
    return sign * num / den;
}

namespace detail {

// model-orthonormal basis of T_qM, columns
inline Mat model_frame(const SpaceForm& sf, const Vec& q) {
    int emb = sf.embedding_dim();
    if (sf.model == Model::euclidean) return Mat::Identity(emb, emb);
    if (sf.model == Model::half_space)
        return Mat(std::sqrt(-sf.kappa) * q(0) * Mat::Identity(emb, emb));
    Mat F(emb, sf.dim);
    int k = 0;
    for (int i = 0; i < emb && k < sf.dim; ++i) {
        Vec c = Vec::Zero(emb);
        c(i) = 1.0;
        c -= (c.dot(q) / q.squaredNorm()) * q;
        for (int j = 0; j < k; ++j) c -= c.dot(F.col(j)) * F.col(j);
        if (c.norm() > 1e-8) F.col(k++) = c / c.norm();
    }
    if (k < sf.dim) throw NumericalError("model_frame: degenerate basis");
    return F;
}

inline Vec sphere_log_coords(const SpaceForm& sf, const Vec& base, const Vec& x, const Mat& frame) {
    double R = sf.radius();
    double cosang = std::clamp(base.dot(x) / (R * R), -1.0, 1.0);
    double d = R * std::acos(cosang);
    Vec tang = x - (x.dot(base) / (R * R)) * base;
    double nn = tang.norm();
    Vec log = nn < 1e-300 ? Vec(Vec::Zero(base.size())) : Vec(d * tang / nn);
    return frame.transpose() * log;
}

}  // namespace detail

/// Finite-difference determinant of dB_q with respect to the model volume:
/// flat Jacobian times the volume-density ratio in the euclidean / half-space
/// models, normal-coordinate Jacobian in the sphere model.
inline double jacobian_det_fd(const UnitField& field, const SurfaceSpec& spec, const Vec& q,
                              double step = 1e-5, const BilliardOptions& opts = {}) {
    const auto& sf = spec.sf;
    if (sf.model != Model::sphere) {
        int m = sf.dim;
        Mat J(m, m);
        for (int j = 0; j < m; ++j) {
            Vec qp = q, qm = q;
            qp(j) += step;
            qm(j) -= step;
            J.col(j) = (billiard_step(field, spec, qp, opts) -
                        billiard_step(field, spec, qm, opts)) /
                       (2 * step);
        }
        double det = J.determinant();
        if (sf.model == Model::half_space) {
            Vec bq = billiard_step(field, spec, q, opts);
            det *= std::pow(q(0) / bq(0), m);  // density (-kappa x0^2)^(-m/2)
        }
        return det;
    }
    // normal coordinates around q and B(q): unit volume density at the centers
    int m = sf.dim;
    Mat E = detail::model_frame(sf, q);
    Vec b0 = billiard_step(field, spec, q, opts);
    Mat Eb = detail::model_frame(sf, b0);
    auto map = [&](const Vec& c) {
        Vec xi = E * c;
        double nn = metric_norm(sf, q, xi);
        Vec x = nn < 1e-300 ? q : Geodesic(sf, {q, Vec(xi / nn)}).point(nn);
        return detail::sphere_log_coords(sf, b0, billiard_step(field, spec, x, opts), Eb);
    };
    Mat J(m, m);
    for (int j = 0; j < m; ++j) {
        Vec cp = Vec::Zero(m), cm = Vec::Zero(m);
        cp(j) += step;
        cm(j) -= step;
        J.col(j) = (map(cp) - map(cm)) / (2 * step);
    }
    return J.determinant();
}

// --- orbits ----------------------------------------------------------------------

enum class OrbitClass { periodic, unbounded, bounded_nonperiodic, undetermined };

inline const char* to_string(OrbitClass c) {
    switch (c) {
        case OrbitClass::periodic: return "periodic";
        case OrbitClass::unbounded: return "unbounded";
        case OrbitClass::bounded_nonperiodic: return "bounded-nonperiodic";
        case OrbitClass::undetermined: return "undetermined";
    }
    return "?";
}

struct OrbitOptions {
    double eps_periodic = 1e-8;
    double unbounded_norm = 25.0;
    double r2_threshold = 0.99;
    double rotation_stability = 1e-6;
    double annulus_spread = 0.5;  // (r_max - r_min)/r_mean bound for "confined"
    BilliardOptions billiard;
};

struct Orbit {
    Vec start;
    std::vector<Vec> points;          // ambient, points[0] = start
    std::vector<LeafCoords> leaves;   // one per step
    std::vector<double> chart_norms;  // one per point
    OrbitClass cls = OrbitClass::undetermined;
    int period = 0;
    double drift = 0.0;           // chart-norm slope per step (unbounded evidence)
    double r_squared = 0.0;
    double rotation_angle = 0.0;  // mean angular increment magnitude
    double rotation_number = 0.0;
    double rotation_stability = 0.0;
    bool truncated = false;
    std::string note;
};

namespace detail {

inline double chart_norm_of(const SurfaceSpec& spec, const Vec& q) {
    switch (spec.kind) {
        case SurfaceKind::sphere:
            return (q - spec.sphere_geom().center).norm();
        case SurfaceKind::horosphere:
            return q.tail(q.size() - 1).norm();
        case SurfaceKind::tilted_hyperplane:
            return std::hypot(std::log(std::hypot(q(0), q(1))), q.tail(q.size() - 2).norm());
    }
    return q.norm();
}

// mean angular increment of the orbit in its dominant 2-plane over the first
// `count` steps (unwrapped, signed)
inline double mean_angle_increment(const std::vector<Vec>& pts, const Mat& plane, const Vec& mean,
                                   size_t count) {
    double total = 0.0;
    double prev = 0.0;
    bool have_prev = false;
    size_t used = 0;
    for (size_t k = 0; k < count; ++k) {
        Vec d = pts[k] - mean;
        double a = std::atan2(plane.col(1).dot(d), plane.col(0).dot(d));
        if (have_prev) {
            double inc = a - prev;
            while (inc > M_PI) inc -= 2 * M_PI;
            while (inc <= -M_PI) inc += 2 * M_PI;
            total += inc;
            ++used;
        }
        prev = a;
        have_prev = true;
    }
    return used ? total / used : 0.0;
}

}  // namespace detail

inline void classify(Orbit& orbit, const OrbitOptions& opts = {}) {
    const auto& pts = orbit.points;
    size_t m = pts.size();
    if (m < 3) {
        orbit.cls = OrbitClass::undetermined;
        return;
    }
    for (size_t k = 1; k < m; ++k)
        if ((pts[k] - pts[0]).norm() <= opts.eps_periodic) {
            orbit.cls = OrbitClass::periodic;
            orbit.period = static_cast<int>(k);
            return;
        }

    // linear fit of chart norms against the step index
    const auto& nm = orbit.chart_norms;
    double N = static_cast<double>(nm.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
    for (size_t k = 0; k < nm.size(); ++k) {
        double x = static_cast<double>(k), y = nm[k];
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        syy += y * y;
    }
    double cov = sxy - sx * sy / N, varx = sxx - sx * sx / N, vary = syy - sy * sy / N;
    double slope = varx > 0 ? cov / varx : 0.0;
    double r2 = (varx > 0 && vary > 0) ? cov * cov / (varx * vary) : 0.0;
    orbit.drift = slope;
    orbit.r_squared = r2;
    if (slope > 0 && r2 > opts.r2_threshold && nm.back() > opts.unbounded_norm) {
        orbit.cls = OrbitClass::unbounded;
        return;
    }

    // rotation-number estimate in the dominant plane of the orbit
    int emb = static_cast<int>(pts[0].size());
    Vec mean = Vec::Zero(emb);
    for (const auto& p : pts) mean += p;
    mean /= static_cast<double>(m);
    Mat covm = Mat::Zero(emb, emb);
    for (const auto& p : pts) covm += (p - mean) * (p - mean).transpose();
    Eigen::SelfAdjointEigenSolver<Mat> es(covm);
    Mat plane(emb, 2);
    plane.col(0) = es.eigenvectors().col(emb - 1);
    plane.col(1) = es.eigenvectors().col(emb - 2);

    double full = detail::mean_angle_increment(pts, plane, mean, m);
    double half = detail::mean_angle_increment(pts, plane, mean, m / 2);
    orbit.rotation_stability = std::abs(full - half);
    // Richardson extrapolation of the prefix averages
    double extrap = 2.0 * full - half;
    orbit.rotation_angle = std::abs(extrap);
    orbit.rotation_number = orbit.rotation_angle / (2 * M_PI);

    double rmin = std::numeric_limits<double>::infinity(), rmax = 0, rsum = 0;
    for (const auto& p : pts) {
        double r = (p - mean).norm();
        rmin = std::min(rmin, r);
        rmax = std::max(rmax, r);
        rsum += r;
    }
    bool confined = rsum > 0 && (rmax - rmin) / (rsum / m) < opts.annulus_spread;
    if (confined && orbit.rotation_stability < opts.rotation_stability)
        orbit.cls = OrbitClass::bounded_nonperiodic;
    else
        orbit.cls = OrbitClass::undetermined;
}

/// Iterates the billiard map m times from q and classifies the orbit.
inline Orbit iterate_orbit(const UnitField& field, const SurfaceSpec& spec, const Vec& q, int m,
                           const OrbitOptions& opts = {}) {
    if (m < 1) throw std::invalid_argument("iterate_orbit: need at least one step");
    Orbit orbit;
    orbit.start = q;
    orbit.points.push_back(q);
    orbit.chart_norms.push_back(detail::chart_norm_of(spec, q));
    for (int k = 0; k < m; ++k) {
        try {
            auto step = billiard_step_with_leaf(field, spec, orbit.points.back(), opts.billiard);
            orbit.points.push_back(step.point);
            orbit.leaves.push_back(step.leaf);
            orbit.chart_norms.push_back(detail::chart_norm_of(spec, step.point));
        } catch (const NumericalError& err) {
            orbit.truncated = true;
            orbit.note = err.what();
            break;
        }
    }
    classify(orbit, opts);
    return orbit;
}

// --- injectivity probe -------------------------------------------------------------

struct InjectivityProbe {
    double min_det_abs;
    double min_pairwise;  // smallest distance between distinct f_t images
    double grid_spacing;  // smallest distance between the source samples
};

/// Probes whether f_t(p) = gamma_{v(p)}(t) is injective on a sample grid:
/// pairwise-distinct images plus det(c_k(t) I + s_k(t) A) bounded away from 0.
inline InjectivityProbe ft_injectivity_probe(const UnitField& field, const SurfaceSpec& spec,
                                             double t, const std::vector<SurfacePoint>& samples,
                                             const NablaOptions& nopts = {}) {
    int n = spec.n();
    double ck = c_kappa(spec.sf.kappa, t), sk = s_kappa(spec.sf.kappa, t);
    double min_det = std::numeric_limits<double>::infinity();
    std::vector<Vec> images;
    for (const auto& p : samples) {
        Mat A = nabla(field, spec, p, nopts).restricted();
        Mat M = ck * Mat::Identity(n - 1, n - 1) + sk * A;
        min_det = std::min(min_det, std::abs(M.determinant()));
        Vec v = field.ambient(spec, p);
        images.push_back(Geodesic(spec.sf, {p.ambient, v}).point(t));
    }
    double min_pair = std::numeric_limits<double>::infinity();
    double spacing = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < images.size(); ++i)
        for (size_t j = i + 1; j < images.size(); ++j) {
            min_pair = std::min(min_pair, (images[i] - images[j]).norm());
            spacing = std::min(spacing, (samples[i].ambient - samples[j].ambient).norm());
        }
    return InjectivityProbe{min_det, min_pair, spacing};
}

}  // namespace tangentray
