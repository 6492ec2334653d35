#include <tangentray/spaceform.hpp>

#include <catch2/catch_amalgamated.hpp>

#include "oracles.hpp"

using namespace tangentray;

namespace {

Vec vec4(double a, double b, double c, double d) {
    Vec v(4);
    v << a, b, c, d;
    return v;
}

}  // namespace

TEST_CASE("generalized trig functions match their defining formulas") {
    CHECK(s_kappa(0.0, 2.5) == Catch::Approx(2.5).epsilon(1e-14));
    CHECK(s_kappa(1.0, M_PI_2) == Catch::Approx(1.0).epsilon(1e-14));
    CHECK(s_kappa(-1.0, 1.0) == Catch::Approx(std::sinh(1.0)).epsilon(1e-14));

    for (double t : {-3.0, -0.7, 0.2, 1.9}) CHECK(c_kappa(0.0, t) == 1.0);
    CHECK(cot_kappa(0.0, 2.0) == Catch::Approx(0.5).epsilon(1e-14));
    CHECK(cot_kappa(-1.0, 1.0) == Catch::Approx(1.0 / std::tanh(1.0)).epsilon(1e-14));

    CHECK(std::isinf(horizon(0.0)));
    CHECK(std::isinf(horizon(-2.0)));
    CHECK(horizon(1.0) == Catch::Approx(M_PI));
    CHECK(horizon(4.0) == Catch::Approx(M_PI_2));
}

TEST_CASE("trig identities hold on a kappa/t grid") {
    for (double kappa : {-4.0, -1.0, -1e-10, 0.0, 1e-10, 0.5, 1.0, 4.0}) {
        for (double t : {-2.0, -1.3, -0.4, 0.11, 0.9, 1.7}) {
            CHECK(s_kappa(kappa, -t) == Catch::Approx(-s_kappa(kappa, t)).margin(1e-15));
            CHECK(c_kappa(kappa, -t) == Catch::Approx(c_kappa(kappa, t)).margin(1e-15));
            double s = s_kappa(kappa, t), c = c_kappa(kappa, t);
            CHECK(c * c + kappa * s * s == Catch::Approx(1.0).margin(1e-12));
            if (std::abs(s) > 1e-6)
                CHECK(cot_kappa(kappa, -t) == Catch::Approx(-cot_kappa(kappa, t)).epsilon(1e-12));
        }
    }
    // continuity in kappa across 0
    for (double t : {0.3, 1.1, 2.2}) {
        CHECK(s_kappa(1e-13, t) == Catch::Approx(t).epsilon(1e-12));
        CHECK(s_kappa(-1e-13, t) == Catch::Approx(t).epsilon(1e-12));
        CHECK(c_kappa(1e-13, t) == Catch::Approx(1.0).epsilon(1e-12));
    }
    CHECK_THROWS_AS(cot_kappa(1.0, M_PI), std::domain_error);
}

TEST_CASE("geodesics: straight lines, great circles, half-space semicircles") {
    SECTION("euclidean line") {
        auto sf = SpaceForm::of(0.0, 4);
        Vec p = vec4(1, 2, 3, 4), w = vec4(0, 1, 0, 0);
        auto q = geodesic_eval(sf, {p, w}, 2.5);
        CHECK((q.coords - (p + 2.5 * w)).norm() == Catch::Approx(0.0).margin(1e-15));
    }
    SECTION("unit sphere great circle") {
        auto sf = SpaceForm::of(1.0, 3);
        Vec p = vec4(1, 0, 0, 0), w = vec4(0, 0, 1, 0);
        for (double t : {0.3, 1.2, 2.9}) {
            Vec expect = std::cos(t) * p + std::sin(t) * w;
            CHECK((Geodesic(sf, {p, w}).point(t) - expect).norm() < 1e-14);
        }
    }
    SECTION("half-space horizontal start gives (sech t, p' + tanh t w)") {
        auto sf = SpaceForm::of(-1.0, 4);
        Vec p = vec4(1, 0.5, -0.2, 0.7);
        Vec w = vec4(0, 0, 1, 0);  // euclidean-unit horizontal = model-unit at height 1
        for (double t : {-1.4, 0.25, 2.0}) {
            Vec x = Geodesic(sf, {p, w}).point(t);
            CHECK(x(0) == Catch::Approx(1.0 / std::cosh(t)).epsilon(1e-13));
            Vec expect = p + std::tanh(t) * w;
            expect(0) = 1.0 / std::cosh(t);
            CHECK((x - expect).norm() < 1e-13);
        }
    }
    SECTION("half-space closed form agrees with the geodesic ODE") {
        for (double kappa : {-1.0, -2.0}) {
            auto sf = SpaceForm::of(kappa, 4);
            Vec p = vec4(0.8, 1.0, -2.0, 0.3);
            for (Vec dir : {vec4(0.3, 0.5, -0.4, 0.2), vec4(1, 0, 0, 0), vec4(-0.9, 0.1, 0, 0.05)}) {
                Vec u = dir / metric_norm(sf, p, dir);
                Geodesic g(sf, {p, u});
                double t = 1.3;
                auto [x_ode, v_ode] = oracles::half_space_geodesic_ode(p, u, t, 4000);
                CHECK((g.point(t) - x_ode).norm() < 1e-9);
                CHECK((g.velocity_components(t) - v_ode).norm() < 1e-9);
            }
        }
    }
    SECTION("unit speed everywhere") {
        for (double kappa : {0.0, 1.0, 0.5, -1.0, -2.0}) {
            auto sf = SpaceForm::of(kappa, 3);
            int d = sf.embedding_dim();
            Vec p = Vec::Zero(d), dir = Vec::Zero(d);
            if (sf.model == Model::sphere) {
                p(0) = sf.radius();
                dir(1) = 0.7;
                dir(2) = -0.4;
            } else if (sf.model == Model::half_space) {
                p << 1.3, 0.2, -0.5;
                dir << 0.4, -0.3, 0.8;
            } else {
                p << 1, 2, 3;
                dir << 0.1, -0.2, 0.4;
            }
            Vec u = dir / metric_norm(sf, p, dir);
            Geodesic g(sf, {p, u});
            double T = horizon(kappa);
            for (double t : {0.1, 0.8, 1.9}) {
                if (t >= T) continue;
                Vec x = g.point(t);
                CHECK(metric_norm(sf, x, g.velocity_components(t)) == Catch::Approx(1.0).margin(1e-10));
            }
        }
    }
    SECTION("non-unit velocity is rejected") {
        auto sf = SpaceForm::of(0.0, 3);
        Vec p = Vec::Zero(3), w = Vec::Zero(3);
        w(0) = 2.0;
        CHECK_THROWS_AS(Geodesic(sf, {p, w}), std::invalid_argument);
    }
}

TEST_CASE("parallel transport is isometric and maps tangents to tangents") {
    SECTION("euclidean: components unchanged") {
        auto sf = SpaceForm::of(0.0, 4);
        Vec p = vec4(0, 0, 0, 0), u = vec4(1, 0, 0, 0), w = vec4(0.3, -1, 2, 0.5);
        auto tw = parallel_transport(sf, {p, u}, 3.0, {p, w});
        CHECK((tw.components - w).norm() == 0.0);
    }
    for (double kappa : {1.0, 0.5, -1.0, -2.0}) {
        auto sf = SpaceForm::of(kappa, 3);
        int d = sf.embedding_dim();
        Vec p = Vec::Zero(d), dir = Vec::Zero(d);
        if (sf.model == Model::sphere) {
            p(0) = sf.radius();
            dir(1) = 1.0;
            dir(2) = 0.4;
        } else {
            p << 0.9, 0.1, 0.6;
            dir << 0.25, 0.8, -0.45;
        }
        Vec u = dir / metric_norm(sf, p, dir);
        Geodesic g(sf, {p, u});

        // model-orthonormal frame at p, first vector tangent to the geodesic
        Mat frame(d, d - (sf.model == Model::sphere ? 1 : 0));
        std::vector<Vec> cols;
        cols.push_back(u);
        for (int i = 0; i < d && (int)cols.size() < frame.cols(); ++i) {
            Vec cand = Vec::Zero(d);
            cand(i) = 1.0;
            if (sf.model == Model::sphere) cand -= (cand.dot(p) / p.squaredNorm()) * p;
            for (const auto& c : cols) cand -= metric_dot(sf, p, cand, c) * c;
            double nn = metric_norm(sf, p, cand);
            if (nn > 1e-8) cols.push_back(Vec(cand / nn));
        }

        double t = 1.1;
        Vec x = g.point(t);
        DYNAMIC_SECTION("isometry and tangent transport, kappa=" << kappa) {
            // gamma'(0) transports to gamma'(t)
            CHECK((g.transport(u, t) - g.velocity_components(t)).norm() < 1e-12);
            for (size_t i = 0; i < cols.size(); ++i)
                for (size_t j = 0; j < cols.size(); ++j) {
                    double before = metric_dot(sf, p, cols[i], cols[j]);
                    double after = metric_dot(sf, x, g.transport(cols[i], t), g.transport(cols[j], t));
                    CHECK(after == Catch::Approx(before).margin(1e-10));
                }
        }
        if (sf.model == Model::half_space) {
            DYNAMIC_SECTION("half-space transport matches the ODE, kappa=" << kappa) {
                auto pos = [&](double s) { return g.point(s); };
                auto vel = [&](double s) { return g.velocity_components(s); };
                for (const auto& c : cols) {
                    Vec ode = oracles::half_space_transport_ode(pos, vel, c, t, 4000);
                    CHECK((g.transport(c, t) - ode).norm() < 1e-8);
                }
            }
        }
    }
}

TEST_CASE("jacobi fields") {
    SECTION("tangential field is the velocity") {
        for (double kappa : {0.0, 1.0, -1.0}) {
            auto sf = SpaceForm::of(kappa, 3);
            int d = sf.embedding_dim();
            Vec p = Vec::Zero(d), dir = Vec::Zero(d);
            if (sf.model == Model::sphere) {
                p(0) = sf.radius();
                dir(1) = 1.0;
            } else if (sf.model == Model::half_space) {
                p << 1, 0, 0;
                dir << 0.3, 0.9, 0.1;
            } else {
                dir(0) = 1.0;
            }
            Vec u = dir / metric_norm(sf, p, dir);
            Geodesic g(sf, {p, u});
            Vec zero = Vec::Zero(d);
            auto J = jacobi_eval(sf, g, 1.0, zero, zero, 0.9);
            CHECK((J.components - g.velocity_components(0.9)).norm() < 1e-12);
        }
    }
    SECTION("flat case: J = t W(t)") {
        auto sf = SpaceForm::of(0.0, 4);
        Vec p = vec4(0, 0, 0, 0), u = vec4(1, 0, 0, 0), w = vec4(0, 2, -1, 0.5);
        auto J = jacobi_eval(sf, {p, u}, 0.0, Vec::Zero(4), w, 1.7);
        CHECK((J.components - 1.7 * w).norm() < 1e-14);
    }
    SECTION("normal Jacobi equation D^2J/ds^2 + kappa J = 0 via transported second differences") {
        for (double kappa : {1.0, -1.0, -2.0, 0.5}) {
            auto sf = SpaceForm::of(kappa, 3);
            int d = sf.embedding_dim();
            Vec p = Vec::Zero(d), dir = Vec::Zero(d), w1 = Vec::Zero(d), w2 = Vec::Zero(d);
            if (sf.model == Model::sphere) {
                p(0) = sf.radius();
                dir(1) = 1.0;
                w1(2) = 0.6;
                w2(2) = -0.3;
            } else {
                p << 1.1, -0.4, 0.3;
                dir << 0.2, 0.9, 0.1;
                w1 << 0, 0, 1;
                w2 << 0, 0, 0.4;
            }
            Vec u = dir / metric_norm(sf, p, dir);
            Geodesic g(sf, {p, u});
            // make the initial data orthogonal to u
            auto ortho = [&](Vec v) {
                v -= metric_dot(sf, p, v, u) * u;
                if (sf.model == Model::sphere) v -= (v.dot(p) / p.squaredNorm()) * p;
                return v;
            };
            w1 = ortho(w1);
            w2 = ortho(w2);
            double t = 0.8, h = 1e-3;
            auto Jat = [&](double s) { return jacobi_eval(sf, g, 0.0, w1, w2, s).components; };
            Vec Jm = g.transport_between(t - h, t, Jat(t - h));
            Vec J0 = Jat(t);
            Vec Jp = g.transport_between(t + h, t, Jat(t + h));
            Vec second = (Jp - 2 * J0 + Jm) / (h * h);
            CHECK(metric_norm(sf, g.point(t), Vec(second + kappa * J0)) < 1e-4);
        }
    }
    SECTION("non-orthogonal initial data is rejected") {
        auto sf = SpaceForm::of(0.0, 3);
        Vec p = Vec::Zero(3), u = Vec::Zero(3);
        u(0) = 1.0;
        CHECK_THROWS_AS(jacobi_eval(sf, {p, u}, 0.0, u, Vec::Zero(3), 1.0), std::invalid_argument);
    }
}

TEST_CASE("t_o_root closed forms") {
    CHECK(t_o_root(0.0, 2.0) == Catch::Approx(0.5).epsilon(1e-14));
    CHECK(t_o_root(1.0, 1.0) == Catch::Approx(M_PI / 4).epsilon(1e-14));
    CHECK(t_o_root(-1.0, 2.0) == Catch::Approx(std::atanh(0.5)).epsilon(1e-14));
    CHECK(t_o_root(-1.0, 2.0) == Catch::Approx(0.5493061).epsilon(1e-6));

    for (double kappa : {-2.0, -1.0, 0.0, 0.5, 1.0, 4.0}) {
        for (double lam : {-3.0, -1.5, -0.3, 0.0, 0.7, 2.5}) {
            if (lam * lam + kappa <= 0) {
                CHECK_THROWS_AS(t_o_root(kappa, lam), std::domain_error);
                continue;
            }
            double t = t_o_root(kappa, lam);
            CHECK(t > 0.0);
            CHECK(t < horizon(kappa));
            double resid = c_kappa(kappa, t) - std::abs(lam) * s_kappa(kappa, t);
            CHECK(std::abs(resid) < 1e-12);
        }
    }
}
