#pragma once

#include <algorithm>
#include <complex>

#include "fields.hpp"

namespace tangentray {

using Complex = std::complex<double>;

// --- characteristic polynomial and polynomial roots --------------------------

/// Monic characteristic polynomial det(s I - M), coefficients in ascending
/// order (c[0] + c[1] s + ... + c[n] s^n), via Faddeev-LeVerrier.
inline Vec charpoly_coeffs(const Mat& M) {
    int n = static_cast<int>(M.rows());
    Vec c = Vec::Zero(n + 1);
    c(n) = 1.0;
    Mat Mk = Mat::Identity(n, n);
    for (int k = 1; k <= n; ++k) {
        Mk = M * Mk;
        double ck = -Mk.trace() / k;
        c(n - k) = ck;
        Mk += ck * Mat::Identity(n, n);
    }
    return c;
}

inline Complex polyval(const Vec& coeffs, Complex s) {
    Complex acc = 0.0;
    for (int i = static_cast<int>(coeffs.size()) - 1; i >= 0; --i) acc = acc * s + coeffs(i);
    return acc;
}

inline double polyval(const Vec& coeffs, double s) { return polyval(coeffs, Complex(s)).real(); }

/// All complex roots of a monic real polynomial by Durand-Kerner simultaneous
/// iteration, after deflating numerically-zero trailing coefficients, plus a
/// short Newton polish per root.
inline std::vector<Complex> poly_roots(Vec coeffs, int max_iters = 200, double deflate_eps = 1e-12) {
    int deg = static_cast<int>(coeffs.size()) - 1;
    if (deg < 1) return {};
    double scale = coeffs.cwiseAbs().maxCoeff();
    if (scale == 0.0) throw std::invalid_argument("poly_roots: zero polynomial");
    coeffs /= coeffs(deg);

    std::vector<Complex> roots;
    int zeros = 0;
    while (zeros < deg && std::abs(coeffs(zeros)) <= deflate_eps) ++zeros;
    for (int i = 0; i < zeros; ++i) roots.push_back(0.0);
    int m = deg - zeros;
    if (m == 0) return roots;
    Vec p(m + 1);
    for (int i = 0; i <= m; ++i) p(i) = coeffs(i + zeros);

    double bound = 1.0 + p.head(m).cwiseAbs().maxCoeff();  // Cauchy root bound
    std::vector<Complex> z(m);
    for (int k = 0; k < m; ++k)
        z[k] = 0.6 * bound * std::exp(Complex(0.0, 2.0 * M_PI * k / m + 0.7));

    for (int it = 0; it < max_iters; ++it) {
        double shift = 0.0;
        for (int k = 0; k < m; ++k) {
            Complex denom = 1.0;
            for (int j = 0; j < m; ++j)
                if (j != k) denom *= z[k] - z[j];
            Complex dz = polyval(p, z[k]) / denom;
            z[k] -= dz;
            shift = std::max(shift, std::abs(dz));
        }
        if (shift < 1e-15 * bound) break;
    }
    // Newton polish (skipped near multiple roots where p' degenerates)
    for (auto& zk : z)
        for (int it = 0; it < 4; ++it) {
            Complex d = 0.0, pw = 1.0;  // derivative by Horner on p'
            for (int i = 1; i <= m; ++i) {
                d += static_cast<double>(i) * p(i) * pw;
                pw *= zk;
            }
            if (std::abs(d) < 1e-12) break;
            zk -= polyval(p, zk) / d;
        }
    roots.insert(roots.end(), z.begin(), z.end());
    return roots;
}

// --- eigenvalue reports -------------------------------------------------------

struct EigenOptions {
    double residual_scale = 1e-8;   // accept |det(lambda I - M)| < scale*(1+|M|)^n
    double tau_im_rel = 1e-7;       // real classification: |Im| <= tau_im_rel*(1+|M|)
    double cluster_factor = 10.0;   // zero-multiplicity cluster radius, in units of tau_im
};

struct EigenReport {
    std::vector<Complex> values;  // sorted so conjugate pairs are adjacent
    std::vector<double> real_values;
    double tau_im = 0.0;
    double max_residual = 0.0;
    /// Number of roots in the cluster around zero (algebraic multiplicity of 0).
    int zero_multiplicity(double radius) const {
        int c = 0;
        for (const auto& z : values)
            if (std::abs(z) <= radius) ++c;
        return c;
    }
};

/// Eigenvalues of a small dense matrix via simultaneous iteration on its
/// characteristic coefficients, with a determinant residual certificate.
inline EigenReport eigenvalues(const Mat& M, const EigenOptions& opts = {}) {
    int n = static_cast<int>(M.rows());
    if (n > 8) throw std::invalid_argument("eigenvalues: dimension must be <= 8");
    EigenReport rep;
    double norm = M.norm();
    rep.tau_im = opts.tau_im_rel * (1.0 + norm);
    if (n == 0) return rep;
    if (norm == 0.0) {
        rep.values.assign(n, Complex(0.0));
        rep.real_values.assign(n, 0.0);
        return rep;
    }
    Mat Ms = M / norm;
    auto roots = poly_roots(charpoly_coeffs(Ms));
    for (auto& z : roots) z *= norm;

    double limit = opts.residual_scale * std::pow(1.0 + norm, n);
    Eigen::MatrixXcd Mc = M.cast<Complex>();
    for (const auto& z : roots) {
        Eigen::MatrixXcd shifted = z * Eigen::MatrixXcd::Identity(n, n) - Mc;
        double resid = std::abs(shifted.partialPivLu().determinant());
        rep.max_residual = std::max(rep.max_residual, resid);
        if (resid > limit)
            throw NumericalError("eigenvalues: root residual above certificate limit", resid);
    }
    std::sort(roots.begin(), roots.end(), [](const Complex& a, const Complex& b) {
        if (a.real() != b.real()) return a.real() < b.real();
        if (std::abs(a.imag()) != std::abs(b.imag())) return std::abs(a.imag()) < std::abs(b.imag());
        return a.imag() < b.imag();
    });
    rep.values = roots;
    for (const auto& z : roots)
        if (std::abs(z.imag()) <= rep.tau_im) rep.real_values.push_back(z.real());
    return rep;
}

// --- bifoliation verdicts ------------------------------------------------------

struct Witness {
    SurfacePoint point;
    double eigenvalue;  // offending real eigenvalue (margin carries the excess)
    double margin;
};

/// Sampled verdict: "no violation found on the given samples", never a proof.
struct Verdict {
    enum class Kind { bifoliates, fails };
    Kind kind = Kind::bifoliates;
    std::vector<Witness> witnesses;
    std::vector<Witness> boundary;  // |margin| within tol of the boundary case
    double tol = 0.0;
    double max_margin = -std::numeric_limits<double>::infinity();
    bool passed() const { return kind == Kind::bifoliates; }
};

namespace detail {

inline void sort_witnesses(std::vector<Witness>& w) {
    std::sort(w.begin(), w.end(), [](const Witness& a, const Witness& b) {
        return a.margin > b.margin;
    });
}

}  // namespace detail

/// Criterion on the restriction to v(p)-perp: every real eigenvalue satisfies
/// lambda^2 + kappa <= tol.
inline Verdict check_bifoliation_b(const UnitField& field, const SurfaceSpec& spec,
                                   const std::vector<SurfacePoint>& samples, double tol = 1e-6,
                                   const NablaOptions& nopts = {}, const EigenOptions& eopts = {}) {
    Verdict v;
    v.tol = tol;
    double kappa = spec.sf.kappa;
    for (const auto& p : samples) {
        auto rep = eigenvalues(nabla(field, spec, p, nopts).restricted(), eopts);
        for (double lam : rep.real_values) {
            double margin = lam * lam + kappa;
            v.max_margin = std::max(v.max_margin, margin);
            if (margin > tol)
                v.witnesses.push_back({p, lam, margin});
            else if (std::abs(margin) <= tol)
                v.boundary.push_back({p, lam, margin});
        }
    }
    detail::sort_witnesses(v.witnesses);
    v.kind = v.witnesses.empty() ? Verdict::Kind::bifoliates : Verdict::Kind::fails;
    return v;
}

/// Criterion on the full operator (nabla v)_p:
///   kappa = 0: every real eigenvalue is 0;
///   kappa > 0: additionally 0 has algebraic multiplicity one;
///   kappa < 0: every real eigenvalue satisfies lambda^2 <= -kappa.
inline Verdict check_bifoliation_c(const UnitField& field, const SurfaceSpec& spec,
                                   const std::vector<SurfacePoint>& samples, double tol = 1e-6,
                                   const NablaOptions& nopts = {}, const EigenOptions& eopts = {}) {
    Verdict v;
    v.tol = tol;
    double kappa = spec.sf.kappa;
    for (const auto& p : samples) {
        auto rep = eigenvalues(nabla(field, spec, p, nopts).matrix, eopts);
        for (double lam : rep.real_values) {
            double margin = kappa > 0 ? lam * lam : lam * lam + kappa;
            v.max_margin = std::max(v.max_margin, margin);
            if (margin > tol)
                v.witnesses.push_back({p, lam, margin});
            else if (std::abs(margin) <= tol)
                v.boundary.push_back({p, lam, margin});
        }
        if (kappa > 0) {
            int mult = rep.zero_multiplicity(eopts.cluster_factor * rep.tau_im);
            if (mult != 1) v.witnesses.push_back({p, 0.0, static_cast<double>(mult)});
        }
    }
    detail::sort_witnesses(v.witnesses);
    v.kind = v.witnesses.empty() ? Verdict::Kind::bifoliates : Verdict::Kind::fails;
    return v;
}

struct CrossCheck {
    bool agree = true;
    std::vector<SurfacePoint> discrepancies;
    Verdict b, c;
};

/// Conditions (b) and (c) are equivalent pointwise; this runs both and
/// reports any sample where they disagree.
inline CrossCheck crosscheck_bc(const UnitField& field, const SurfaceSpec& spec,
                                const std::vector<SurfacePoint>& samples, double tol = 1e-6,
                                const NablaOptions& nopts = {}) {
    CrossCheck out;
    for (const auto& p : samples) {
        std::vector<SurfacePoint> one{p};
        bool okb = check_bifoliation_b(field, spec, one, tol, nopts).passed();
        bool okc = check_bifoliation_c(field, spec, one, tol, nopts).passed();
        if (okb != okc) {
            out.agree = false;
            out.discrepancies.push_back(p);
        }
    }
    out.b = check_bifoliation_b(field, spec, samples, tol, nopts);
    out.c = check_bifoliation_c(field, spec, samples, tol, nopts);
    return out;
}

// --- contact, divergence, characteristic polynomial ---------------------------

/// The 1-form dual to v is contact at p iff the antisymmetric part of the
/// restricted block is nonzero (3-dimensional N only).
inline bool contact_check(const UnitField& field, const SurfaceSpec& spec, const SurfacePoint& p,
                          double tol = 1e-6, const NablaOptions& nopts = {}) {
    if (spec.n() != 3) throw std::invalid_argument("contact_check: needs a 3-dimensional N");
    Mat S = nabla(field, spec, p, nopts).restricted();
    return std::abs(S(0, 1) - S(1, 0)) > tol;
}

/// Antisymmetry magnitude used by the contact verdict (diagnostic value).
inline double contact_magnitude(const UnitField& field, const SurfaceSpec& spec,
                                const SurfacePoint& p, const NablaOptions& nopts = {}) {
    Mat S = nabla(field, spec, p, nopts).restricted();
    return std::abs(S(0, 1) - S(1, 0));
}

inline double divergence(const UnitField& field, const SurfaceSpec& spec, const SurfacePoint& p,
                         const NablaOptions& nopts = {}) {
    return nabla(field, spec, p, nopts).matrix.trace();
}

/// Q_p(s) = det(s id - (nabla v)_p) of degree n, and the characteristic
/// polynomial P of the restricted block (degree n-1); Q_p(s) = s P(s).
struct CharPoly {
    Vec q;  // ascending, length n+1
    Vec p;  // ascending, length n
};

inline CharPoly char_poly(const UnitField& field, const SurfaceSpec& spec, const SurfacePoint& p,
                          const NablaOptions& nopts = {}) {
    auto rep = nabla(field, spec, p, nopts);
    return CharPoly{charpoly_coeffs(rep.matrix), charpoly_coeffs(rep.restricted())};
}

/// Volume-preservation test for the outer billiard: passes iff every
/// coefficient of Q_p with parity opposite to n stays below tol at every
/// sample (the parity of Q_p coincides with the parity of n).
inline Verdict volume_parity(const UnitField& field, const SurfaceSpec& spec,
                             const std::vector<SurfacePoint>& samples, double tol = 1e-8,
                             const NablaOptions& nopts = {}) {
    Verdict v;
    v.tol = tol;
    int n = spec.n();
    for (const auto& p : samples) {
        Vec q = char_poly(field, spec, p, nopts).q;
        double worst = 0.0;
        for (int i = 0; i < n; ++i)
            if ((n - i) % 2 != 0) worst = std::max(worst, std::abs(q(i)));
        v.max_margin = std::max(v.max_margin, worst);
        if (worst > tol) v.witnesses.push_back({p, 0.0, worst});
    }
    detail::sort_witnesses(v.witnesses);
    v.kind = v.witnesses.empty() ? Verdict::Kind::bifoliates : Verdict::Kind::fails;
    return v;
}

}  // namespace tangentray
