#include <tangentray/analysis.hpp>

#include <Eigen/Eigenvalues>
#include <catch2/catch_amalgamated.hpp>
#include <random>

using namespace tangentray;

namespace {

Vec vec3(double a, double b, double c) {
    Vec v(3);
    v << a, b, c;
    return v;
}

std::vector<std::pair<SurfaceSpec, UnitField>> catalog_pairs() {
    std::vector<std::pair<SurfaceSpec, UnitField>> out;
    auto s3r4 = SurfaceSpec::sphere(SpaceForm::of(0.0, 4), 1.0);
    auto s3s4 = SurfaceSpec::sphere(SpaceForm::of(1.0, 4), 0.8);
    auto horo4 = SurfaceSpec::horosphere(SpaceForm::of(-1.0, 4));
    auto horo3 = SurfaceSpec::horosphere(SpaceForm::of(-1.0, 3));
    auto tilted = SurfaceSpec::tilted_hyperplane(SpaceForm::of(-2.0, 3), M_PI / 4);
    out.emplace_back(s3r4, make_field(s3r4, "hopf"));
    out.emplace_back(s3s4, make_field(s3s4, "hopf"));
    out.emplace_back(s3r4, make_field(s3r4, "hopf-perturbed", 0.1));
    out.emplace_back(s3r4, make_field(s3r4, "fermi-bizero"));
    out.emplace_back(s3s4, make_field(s3s4, "fermi-bizero"));
    out.emplace_back(horo4, make_field(horo4, "constant"));
    out.emplace_back(horo4, make_field(horo4, "u-eps", 0.1));
    out.emplace_back(horo4, make_field(horo4, "hopf-stereo"));
    out.emplace_back(horo3, make_field(horo3, "rotating", 0.0, 2.0));
    out.emplace_back(tilted, make_field(tilted, "w-eps", 0.1));
    return out;
}

// greedy nearest matching between two root multisets; returns worst distance
double match_roots(std::vector<Complex> a, std::vector<Complex> b) {
    REQUIRE(a.size() == b.size());
    double worst = 0;
    for (const auto& z : a) {
        auto best = std::min_element(b.begin(), b.end(), [&](const Complex& x, const Complex& y) {
            return std::abs(x - z) < std::abs(y - z);
        });
        worst = std::max(worst, std::abs(*best - z));
        b.erase(best);
    }
    return worst;
}

}  // namespace

TEST_CASE("characteristic polynomial coefficients") {
    Mat M(3, 3);
    M << 0, 0, 0, 0, 0, 2, 0, -2, 0;
    Vec q = charpoly_coeffs(M);  // s^3 + 4s
    CHECK(q(3) == 1.0);
    CHECK(q(2) == Catch::Approx(0.0).margin(1e-14));
    CHECK(q(1) == Catch::Approx(4.0).epsilon(1e-14));
    CHECK(q(0) == Catch::Approx(0.0).margin(1e-14));
}

TEST_CASE("eigenvalue solver") {
    SECTION("zero matrix") {
        auto rep = eigenvalues(Mat(Mat::Zero(3, 3)));
        REQUIRE(rep.values.size() == 3);
        for (const auto& z : rep.values) CHECK(std::abs(z) == 0.0);
        CHECK(rep.real_values.size() == 3);
    }
    SECTION("hopf-stereo linearization at the origin has spectrum {0, 2i, -2i}") {
        Mat M(3, 3);
        M << 0, 0, 0, 0, 0, 2, 0, -2, 0;
        auto rep = eigenvalues(M);
        std::vector<Complex> expect{{0, 0}, {0, 2}, {0, -2}};
        CHECK(match_roots(rep.values, expect) < 1e-10);
        CHECK(rep.real_values.size() == 1);
        CHECK(std::abs(rep.real_values[0]) < 1e-10);
    }
    SECTION("1x1 restricted block") {
        Mat M(1, 1);
        M << -2.0;
        auto rep = eigenvalues(M);
        REQUIRE(rep.real_values.size() == 1);
        CHECK(rep.real_values[0] == Catch::Approx(-2.0));
    }
    SECTION("random matrices against Eigen's solver") {
        std::mt19937_64 rng(12345);
        std::normal_distribution<double> dist;
        for (int n = 2; n <= 8; ++n) {
            for (int trial = 0; trial < 20; ++trial) {
                Mat M(n, n);
                for (int i = 0; i < n; ++i)
                    for (int j = 0; j < n; ++j) M(i, j) = 3.0 * dist(rng);
                auto rep = eigenvalues(M);
                Eigen::EigenSolver<Mat> es(M);
                std::vector<Complex> oracle(es.eigenvalues().data(),
                                            es.eigenvalues().data() + n);
                CHECK(match_roots(rep.values, oracle) < 1e-6 * (1.0 + M.norm()));
                CHECK(rep.max_residual < 1e-8 * std::pow(1.0 + M.norm(), n));
            }
        }
    }
    SECTION("conjugate pairs are adjacent after sorting") {
        Mat M(4, 4);
        M << 0, -1, 0, 0, 1, 0, 0, 0, 0, 0, 0, -3, 0, 0, 3, 0;
        auto rep = eigenvalues(M);
        REQUIRE(rep.values.size() == 4);
        CHECK(std::abs(rep.values[0] - std::conj(rep.values[1])) < 1e-9);
        CHECK(std::abs(rep.values[2] - std::conj(rep.values[3])) < 1e-9);
    }
    SECTION("dimension cap") { CHECK_THROWS_AS(eigenvalues(Mat(Mat::Zero(9, 9))), std::invalid_argument); }
}

TEST_CASE("hopf-stereo spectrum at (x, y, 0) is {0, 2(x +- i)/(1+x^2+y^2)}") {
    auto spec = SurfaceSpec::horosphere(SpaceForm::of(-1.0, 4));
    auto f = make_field(spec, "hopf-stereo");
    for (double x : {-1.2, 0.0, 0.4, 1.8})
        for (double y : {-0.6, 0.3, 1.1}) {
            auto rep = eigenvalues(nabla(f, spec, surface_point(spec, 0, vec3(x, y, 0))).matrix);
            double s = 2.0 / (1.0 + x * x + y * y);
            std::vector<Complex> expect{{0, 0}, {s * x, s}, {s * x, -s}};
            CHECK(match_roots(rep.values, expect) < 1e-7);
        }
}

TEST_CASE("bifoliation verdicts") {
    SECTION("hopf on S^3 in R^4 bifoliates (restricted spectrum is +-i)") {
        auto spec = SurfaceSpec::sphere(SpaceForm::of(0.0, 4), 1.0);
        auto f = make_field(spec, "hopf");
        auto samples = sample_grid(spec, 60);
        CHECK(check_bifoliation_b(f, spec, samples).passed());
        CHECK(check_bifoliation_c(f, spec, samples).passed());
        auto rep = eigenvalues(nabla(f, spec, samples[0]).restricted());
        std::vector<Complex> expect{{0, 1}, {0, -1}};
        CHECK(match_roots(rep.values, expect) < 1e-8);
    }
    SECTION("constant field on the horosphere bifoliates") {
        auto spec = SurfaceSpec::horosphere(SpaceForm::of(-1.0, 4));
        auto f = make_field(spec, "constant");
        auto samples = sample_grid(spec, 40);
        CHECK(check_bifoliation_b(f, spec, samples).passed());
        CHECK(check_bifoliation_c(f, spec, samples).passed());
    }
    SECTION("rotating(2x) fails with a witness near x = pi/4") {
        auto spec = SurfaceSpec::horosphere(SpaceForm::of(-1.0, 3));
        auto f = make_field(spec, "rotating", 0.0, 2.0);
        auto samples = sample_grid(spec, 200);
        auto v = check_bifoliation_b(f, spec, samples);
        REQUIRE_FALSE(v.passed());
        REQUIRE_FALSE(v.witnesses.empty());
        // strongest witness: lambda^2 + kappa = 4 sin^2(2x) - 1, maximal near pi/4
        const auto& w = v.witnesses.front();
        CHECK(w.margin > 1.0);
        CHECK(std::abs(std::sin(2.0 * w.point.local(0))) > 0.8);
    }
    SECTION("hopf-stereo bifoliates via condition (c): only real eigenvalue is 0") {
        auto spec = SurfaceSpec::horosphere(SpaceForm::of(-1.0, 4));
        auto f = make_field(spec, "hopf-stereo");
        CHECK(check_bifoliation_c(f, spec, sample_grid(spec, 60)).passed());
    }
    SECTION("w-eps(0): lambda^2 = 1 < -kappa on a curvature -2 ambient") {
        auto spec = SurfaceSpec::tilted_hyperplane(SpaceForm::of(-2.0, 3), M_PI / 4);
        auto f = make_field(spec, "w-eps", 0.0);
        auto v = check_bifoliation_b(f, spec, sample_grid(spec, 40));
        CHECK(v.passed());
        CHECK(v.max_margin == Catch::Approx(-1.0).margin(1e-6));  // 1 + kappa
    }
    SECTION("fermi-bizero passes for kappa = 0 but fails for kappa > 0 at e^{it}") {
        auto flat = SurfaceSpec::sphere(SpaceForm::of(0.0, 4), 1.0);
        auto round = SurfaceSpec::sphere(SpaceForm::of(1.0, 4), 0.8);
        auto samples_flat = sample_grid(flat, 60);
        auto samples_round = sample_grid(round, 60);
        CHECK(check_bifoliation_c(make_field(flat, "fermi-bizero"), flat, samples_flat).passed());
        auto v = check_bifoliation_c(make_field(round, "fermi-bizero"), round, samples_round);
        REQUIRE_FALSE(v.passed());
        // witnesses sit on the degenerate circle, where (nabla v) = 0 entirely
        bool found_degenerate = false;
        auto geo = round.sphere_geom();
        for (const auto& w : v.witnesses) {
            Vec wpart = (w.point.ambient.segment(geo.w_offset, geo.w_dim) -
                         Vec(geo.center.segment(geo.w_offset, geo.w_dim))) /
                        geo.r_e;
            if (std::hypot(wpart(2), wpart(3)) < 1e-6) found_degenerate = true;
        }
        CHECK(found_degenerate);
    }
}

TEST_CASE("conditions (b) and (c) agree at every sample for every catalog pair") {
    for (const auto& [spec, field] : catalog_pairs()) {
        auto samples = sample_grid(spec, 30);
        auto cc = crosscheck_bc(field, spec, samples);
        INFO(field.name << " kappa=" << spec.sf.kappa);
        CHECK(cc.agree);
    }
}

TEST_CASE("contact checks") {
    SECTION("hopf on S^3 in S^4 is contact everywhere sampled") {
        auto spec = SurfaceSpec::sphere(SpaceForm::of(1.0, 4), 0.8);
        auto f = make_field(spec, "hopf");
        for (const auto& p : sample_grid(spec, 50)) CHECK(contact_check(f, spec, p));
    }
    SECTION("constant field is not contact anywhere") {
        auto spec = SurfaceSpec::horosphere(SpaceForm::of(-1.0, 4));
        auto f = make_field(spec, "constant");
        for (const auto& p : sample_grid(spec, 30)) CHECK_FALSE(contact_check(f, spec, p));
    }
    SECTION("fermi-bizero is not contact on the degenerate circle") {
        auto spec = SurfaceSpec::sphere(SpaceForm::of(0.0, 4), 1.0);
        auto f = make_field(spec, "fermi-bizero");
        for (double t : {0.3, 1.9}) {
            Vec p(4);
            p << std::cos(t), std::sin(t), 0, 0;
            CHECK_FALSE(contact_check(f, spec, local_of_ambient(spec, p)));
        }
    }
    SECTION("wrong dimension throws") {
        auto spec = SurfaceSpec::horosphere(SpaceForm::of(-1.0, 3));
        auto f = make_field(spec, "rotating", 0.0, 1.0);
        CHECK_THROWS_AS(contact_check(f, spec, sample_grid(spec, 2)[0]), std::invalid_argument);
    }
}

TEST_CASE("characteristic polynomial identities") {
    for (const auto& [spec, field] : catalog_pairs()) {
        int n = spec.n();
        for (const auto& p : sample_grid(spec, 15)) {
            auto cp = char_poly(field, spec, p);
            // Q_p(s) = s P(s) coefficientwise
            CHECK(std::abs(cp.q(0)) < 1e-10);
            for (int i = 0; i < n; ++i) CHECK(cp.q(i + 1) == Catch::Approx(cp.p(i)).margin(1e-10));
            // divergence = -(coefficient of s^{n-1})
            CHECK(divergence(field, spec, p) == Catch::Approx(-cp.q(n - 1)).margin(1e-10));
        }
    }
}

TEST_CASE("volume parity") {
    SECTION("hopf: Q_p(s) = s^3 + s, parity matches n = 3") {
        auto spec = SurfaceSpec::sphere(SpaceForm::of(0.0, 4), 1.0);
        auto f = make_field(spec, "hopf");
        auto samples = sample_grid(spec, 40);
        auto v = volume_parity(f, spec, samples);
        CHECK(v.passed());
        auto cp = char_poly(f, spec, samples[0]);
        CHECK(cp.q(1) == Catch::Approx(1.0).margin(1e-9));
        CHECK(std::abs(cp.q(2)) < 1e-9);
    }
    SECTION("n = 2 field orthogonal to a geodesic foliation: Q_p(s) = s^2") {
        auto spec = SurfaceSpec::horosphere(SpaceForm::of(-1.0, 3));
        auto f = make_field(spec, "constant");
        auto samples = sample_grid(spec, 30);
        CHECK(volume_parity(f, spec, samples).passed());
        auto cp = char_poly(f, spec, samples[0]);
        CHECK(std::abs(cp.q(0)) < 1e-12);
        CHECK(std::abs(cp.q(1)) < 1e-12);
    }
    SECTION("hopf-stereo: divergence 4x/(1+|p|^2) breaks parity") {
        auto spec = SurfaceSpec::horosphere(SpaceForm::of(-1.0, 4));
        auto f = make_field(spec, "hopf-stereo");
        auto samples = sample_grid(spec, 40);
        CHECK_FALSE(volume_parity(f, spec, samples).passed());
        for (const auto& p : samples) {
            double expect = 4.0 * p.local(0) / (1.0 + p.local.squaredNorm());
            CHECK(divergence(f, spec, p) == Catch::Approx(expect).margin(1e-8));
        }
    }
    SECTION("parity pass implies vanishing divergence, and singular restriction for even n") {
        for (const auto& [spec, field] : catalog_pairs()) {
            auto samples = sample_grid(spec, 25);
            if (!volume_parity(field, spec, samples).passed()) continue;
            for (const auto& p : samples) {
                CHECK(std::abs(divergence(field, spec, p)) < 1e-8);
                if (spec.n() % 2 == 0) {
                    Mat S = nabla(field, spec, p).restricted();
                    Eigen::JacobiSVD<Mat> svd(S);
                    CHECK(svd.singularValues().minCoeff() < 1e-8);
                }
            }
        }
    }
}
