#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "calderon/holo.hpp"

using namespace calderon;

namespace {

double bump(cplx z, cplx c, double w) {
    const double t = std::norm(z - c) / (w * w);
    return t < 1.0 ? std::exp(1.0 - 1.0 / (1.0 - t)) : 0.0;
}

const ArcSpec kQuarter{kPi, 1.5 * kPi, false};

}  // namespace

TEST_CASE("polynomial evaluation, derivatives and JSON") {
    HoloFunction f({1.0, cplx(0, 2), 3.0});
    const cplx z(0.3, -0.4);
    CHECK(std::abs(f(z) - (1.0 + cplx(0, 2) * z + 3.0 * z * z)) < 1e-15);
    CHECK(std::abs(f.derivative(z) - (cplx(0, 2) + 6.0 * z)) < 1e-15);
    CHECK(std::abs(f.derivative(z, 2) - 6.0) < 1e-15);
    CHECK(f.derivative(z, 3) == cplx(0.0));
    const HoloFunction back = HoloFunction::from_json(f.to_json());
    CHECK(back.coefficients() == f.coefficients());
    CHECK_THROWS_AS(HoloFunction::from_json(nlohmann::json::parse("[[1,2,3]]")), ConfigurationError);
}

TEST_CASE("Cauchy transform of a disk indicator") {
    Mesh m = build_disk_mesh(0.0125, DiskDomain{});
    const double r0 = 0.5;
    const CplxVec f = sample(m, [&](cplx z) {
        const double r = std::abs(z);
        return cplx(std::abs(r - r0) < 1e-9 ? 0.5 : (r < r0 ? 1.0 : 0.0));
    });
    CauchyTransform R(m, f);
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> U(-0.95, 0.95);
    int checked = 0;
    while (checked < 40) {
        const cplx z(U(rng), U(rng));
        const double r = std::abs(z);
        if (r > 0.95 || std::abs(r - r0) < 0.1) continue;
        const cplx exact = r < r0 ? z : r0 * r0 / std::conj(z);
        CHECK(std::abs(R(z) - exact) < 1e-2);
        ++checked;
    }
    CHECK(cauchy_transform(m, CplxVec::Zero(m.vertex_count()), {cplx(0.1, 0.2)})[0] == cplx(0.0));
}

TEST_CASE("Cauchy transform inverts d_z") {
    Mesh m = build_disk_mesh(0.0125, DiskDomain{});
    const cplx c(0.1, -0.05);
    auto f = [&](cplx z) { return cplx(bump(z, c, 0.6), 0.5 * bump(z, c, 0.6) * z.real()); };
    CauchyTransform R(m, sample(m, f));
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> U(-0.6, 0.6);
    const double d = 1e-4;
    for (int k = 0; k < 20; ++k) {
        const cplx z = c + cplx(U(rng), U(rng)) * 0.7;
        const cplx dx = (R(z + d) - R(z - d)) / (2 * d);
        const cplx dy = (R(z + kI * d) - R(z - kI * d)) / (2 * d);
        const cplx dz = 0.5 * (dx - kI * dy);
        CHECK(std::abs(dz - f(z)) <= 1e-2 * std::max(1e-1, std::abs(f(z))));
    }
}

TEST_CASE("Cauchy transform matches brute-force polar quadrature") {
    Mesh m = build_disk_mesh(0.0125, DiskDomain{});
    auto f = [](cplx z) { return bump(z, 0.0, 0.5); };
    CauchyTransform R(m, sample(m, [&](cplx z) { return cplx(f(z)); }));
    for (cplx z : {cplx(0.8, 0.1), cplx(-0.2, 0.7), cplx(0.1, 0.05)}) {
        // polar midpoint rule around z itself removes the 1/r singularity
        cplx ref = 0.0;
        const int nr = 800, nt = 400;
        const double rmax = 1.6;
        for (int i = 0; i < nr; ++i) {
            const double r = (i + 0.5) * rmax / nr;
            for (int j = 0; j < nt; ++j) {
                const double t = (j + 0.5) * 2.0 * kPi / nt;
                const cplx xi = z + std::polar(r, t);
                const double v = f(xi);
                if (v == 0.0) continue;
                ref += v / std::conj(-std::polar(r, t)) * r;
            }
        }
        ref *= (rmax / nr) * (2.0 * kPi / nt) / kPi;
        CHECK(std::abs(R(z) - ref) < 2e-3);
    }
}

TEST_CASE("Cauchy transform requires data away from the boundary") {
    Mesh m = build_disk_mesh(0.1, DiskDomain{});
    CHECK_THROWS_AS(CauchyTransform(m, CplxVec::Ones(m.vertex_count())), PreconditionError);
}

TEST_CASE("constants are the kernel of the full-circle reality fit") {
    FitOptions o;
    const FitResult r = fit_holomorphic_on_arc({{0.0, 0, kI}}, ArcCondition{ArcSpec{0, 2 * kPi, true}, ArcPart::Real, {}, {}}, o);
    CHECK(std::abs(r.function(cplx(0.3, 0.2)) - kI) < 1e-12);
    CHECK(r.arc_residual < 1e-12);
}

TEST_CASE("full-data fit accepts the quadratic phase") {
    const cplx p(0.2, 0.1);
    const std::vector<PointConstraint> hard{{p, 0, kI}, {p, 1, 0.0}};
    FitOptions o;
    const FitResult r = fit_holomorphic_on_arc(hard, std::nullopt, o);
    CHECK(r.constraint_residual <= 1e-10);
    const FitVerification v = verify_fit(HoloFunction({p * p + kI, -2.0 * p, 1.0}), hard, std::nullopt, o);
    CHECK(v.constraint_residual < 1e-14);
}

TEST_CASE("upper half circle reality fit") {
    const cplx p(0.0, -0.3);
    const ArcCondition upper{ArcSpec{0, kPi, false}, ArcPart::Imag, {}, {}};
    FitOptions o;
    o.degree = 12;
    const FitResult r = fit_holomorphic_on_arc({{p, 1, 0.0}}, upper, o);
    CHECK(r.arc_residual <= 1e-6);
    CHECK(std::abs(r.function.derivative(p)) <= 1e-10);
    // normalised, nonconstant version at the default degree
    const FitResult n = fit_holomorphic_on_arc({{p, 0, kI}, {p, 1, 0.0}}, upper, FitOptions{});
    CHECK(n.arc_residual <= 1e-6);
    CHECK(std::abs(n.function(p) - kI) <= 1e-10);
    o.degree = 6;
    CHECK_THROWS_AS(fit_holomorphic_on_arc({{p, 0, kI}, {p, 1, 0.0}}, upper, o), InfeasibleFit);
}

TEST_CASE("infeasible fits are reported") {
    FitOptions o;
    o.degree = 2;
    CHECK_THROWS_AS(fit_holomorphic_on_arc({{0.0, 0, kI}, {0.5, 0, 1.0}}, ArcCondition{kQuarter, ArcPart::Imag, {}, {}}, o),
                    InfeasibleFit);
}

TEST_CASE("critical points of simple phases") {
    const CriticalPointReport a = find_critical_points(HoloFunction({kI, 0.0, 1.0}));
    REQUIRE(a.points.size() == 1);
    CHECK(std::abs(a.points[0].z) < 1e-14);
    CHECK(a.points[0].hessian_abs == doctest::Approx(2.0));
    CHECK_FALSE(a.points[0].degenerate);
    CHECK(a.count_check == 1);

    const CriticalPointReport b = find_critical_points(HoloFunction({0.0, 0.0, 0.0, 1.0}));
    REQUIRE(b.points.size() == 1);
    CHECK(std::abs(b.points[0].z) < 1e-6);
    CHECK(b.points[0].degenerate);
    CHECK(b.count_check == 2);
    CHECK(b.located_count() == 2);
    CHECK_THROWS_AS(find_critical_points(HoloFunction::constant(1.0)), PreconditionError);
}

TEST_CASE("random polynomial critical points match the winding count") {
    std::mt19937_64 rng(2024);
    std::normal_distribution<double> N;
    for (int trial = 0; trial < 5; ++trial) {
        std::vector<cplx> c(9);
        for (auto& v : c) v = cplx(N(rng), N(rng));
        const HoloFunction f(c);
        const CriticalPointReport r = find_critical_points(f);
        CHECK(r.count_check == r.located_count());
        for (const auto& cp : r.points) CHECK(std::abs(f.derivative(cp.z)) < 1e-10);
    }
}

TEST_CASE("Morse phase without gamma0 is the quadratic") {
    const cplx p(0.2, 0.1);
    const MorsePhase m = build_morse_phase(DiskDomain{}, p, PhaseOptions{});
    CHECK(std::abs(m.phase(p) - kI) < 1e-15);
    CHECK(std::abs(m.phase.derivative(p)) < 1e-15);
    CHECK(m.report.points.size() == 1);
    CHECK(m.report.points[0].hessian_abs == doctest::Approx(2.0));
}

TEST_CASE("Morse phase on a quarter circle") {
    DiskDomain d;
    d.gamma0 = kQuarter;
    const cplx p(0.2, 0.1);
    const MorsePhase m = build_morse_phase(d, p, PhaseOptions{});
    CHECK(m.arc_residual <= 1e-6);
    CHECK(std::abs(m.phase.derivative(p)) <= 1e-10);
    CHECK(std::abs(m.phase(p).imag()) > 0.5);
    CHECK(std::abs(m.phase.derivative(p, 2)) > 1e-8);
    CHECK(m.report.morse());
    CHECK(m.report.count_check == m.report.located_count());

    DiskDomain other;
    other.gamma0 = ArcSpec{0.0, 0.5 * kPi, false};
    CHECK_NOTHROW(build_morse_phase(other, p, PhaseOptions{}));
    CHECK_THROWS_AS(build_morse_phase(d, std::polar(1.0, 1.2 * kPi), PhaseOptions{}), PreconditionError);
}

TEST_CASE("amplitudes") {
    FitOptions o;
    const cplx p(0.2, 0.1), q(-0.4, 0.3);
    CriticalPointReport single;
    single.points.push_back({p, 2.0, 1, false, false});
    const FitResult one = build_amplitude(single, p, std::nullopt, 4, o);
    CHECK(std::abs(one.function(cplx(0.5, -0.5)) - 1.0) < 1e-15);

    CriticalPointReport two = single;
    two.points.push_back({q, 1.0, 1, false, false});
    const FitResult pq = build_amplitude(two, p, std::nullopt, 3, o);
    for (cplx z : {cplx(0.1, 0.7), cplx(-0.3, -0.3)}) CHECK(std::abs(pq.function(z) - std::pow((z - q) / (p - q), 3)) < 1e-13);

    const FitResult arc = build_amplitude(two, p, kQuarter, 3, o);
    CHECK(arc.arc_residual <= 1e-6);
    CHECK(std::abs(arc.function(p) - 1.0) <= 1e-10);
    for (int l = 0; l < 3; ++l) CHECK(std::abs(arc.function.derivative(q, l)) <= 1e-10);
    for (int k = 0; k <= 64; ++k) {
        const double t = kQuarter.theta_a + kQuarter.length() * k / 64;
        CHECK(std::abs(arc.function(std::polar(1.0, t)).real()) <= 1e-6);
    }
}

TEST_CASE("jet forms") {
    FitOptions o;
    const FitResult zero = build_jet_form({}, std::nullopt, o);
    CHECK(zero.function.derivative(cplx(0.3, 0.1)) == cplx(0.0));

    const cplx c0(1.0, 2.0), c1(-0.5, 0.25), c2(3.0, -1.0);
    const FitResult herm = build_jet_form({{0.0, {c0, c1, c2}}}, std::nullopt, o);
    const HoloFunction cubic({0.0, c0, c1 / 2.0, c2 / 6.0});
    for (cplx z : {cplx(0.3, 0.1), cplx(-0.7, 0.2)})
        CHECK(std::abs(herm.function.derivative(z) - cubic.derivative(z)) < 1e-10);

    const FitResult arc =
        build_jet_form({{cplx(0.2, 0.1), {c0}}, {cplx(-0.3, 0.4), {c0, c1, c2}}}, kQuarter, o);
    CHECK(arc.arc_residual <= 1e-6);
    CHECK(arc.constraint_residual <= 1e-10);
}

TEST_CASE("jets from contour integrals of a mesh field") {
    Mesh m = build_disk_mesh(0.0125, DiskDomain{});
    PointLocator loc(m);
    auto f = [](cplx z) { return z * z * z + 2.0 * z + std::conj(z) * 0.0; };
    const CplxVec field = sample(m, f);
    const cplx c(0.3, -0.2);
    const auto jets = extract_jets(loc, field, c, 4 * m.resolution, 3);
    CHECK(std::abs(jets[0] - f(c)) < 1e-3);
    CHECK(std::abs(jets[1] - (3.0 * c * c + 2.0)) < 1e-2);
    CHECK(std::abs(jets[2] - 6.0 * c) < 1e-1);
    CHECK_THROWS_AS(extract_jets(loc, field, cplx(0.99, 0.0), 0.05, 3), ResolutionError);
}
