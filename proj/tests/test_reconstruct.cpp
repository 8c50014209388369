#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "calderon/profiles.hpp"
#include "calderon/reconstruct.hpp"

using namespace calderon;

namespace {

const std::vector<double> kSweep{0.2, 0.14, 0.1, 0.07, 0.05};
const std::vector<double> kCoarseSweep{0.2, 0.16, 0.13, 0.1, 0.08};
const cplx kBumpCenter{0.2, 0.1};

double bump(cplx z) {
    const double t = std::norm(z) / 0.25;
    return t < 1.0 ? std::exp(1.0 - 1.0 / (1.0 - t)) : 0.0;
}

DiskDomain quarter_domain() {
    DiskDomain d;
    d.gamma0 = ArcSpec{kPi, 1.5 * kPi, false};
    return d;
}

const Mesh& fine_mesh() {
    static const Mesh m = build_disk_mesh(0.0125, quarter_domain());
    return m;
}

const Mesh& medium_mesh() {
    static const Mesh m = build_disk_mesh(0.0167, quarter_domain());
    return m;
}

RealVec gaussian(const Mesh& m, double amplitude, cplx center, double width) {
    return sample_real(m, Profile{"gaussian", amplitude, center, width}.function());
}

RealVec zero(const Mesh& m) { return RealVec::Zero(m.vertex_count()); }

}  // namespace

TEST_CASE("stationary-phase constant") {
    const HoloFunction one = HoloFunction::constant(1.0);
    const auto m1 = stationary_phase_constant(HoloFunction({kI, 0.0, 1.0}), one, 0.0);
    CHECK(m1.C_p == doctest::Approx(kPi).epsilon(1e-12));
    CHECK(m1.hess_abs == doctest::Approx(2.0));
    CHECK(m1.psi_p == doctest::Approx(1.0));
    const auto m2 = stationary_phase_constant(HoloFunction({kI, 0.0, 2.0}), one, 0.0);
    CHECK(m2.C_p == doctest::Approx(kPi / 2).epsilon(1e-12));
    CHECK_THROWS_AS(stationary_phase_constant(HoloFunction({kI, 0.0, 0.0, 1.0}), one, 0.0), PreconditionError);
    CHECK_THROWS_AS(stationary_phase_constant(HoloFunction({kI, 1.0, 1.0}), one, 0.0), PreconditionError);
    CHECK_THROWS_AS(stationary_phase_constant(HoloFunction({0.0, 0.0, 1.0}), one, 0.0), PreconditionError);
    CHECK_THROWS_AS(stationary_phase_constant(HoloFunction({kI, 0.0, 1.0}), HoloFunction::constant(0.0), 0.0),
                    PreconditionError);
}

TEST_CASE("oscillatory quadrature matches the stationary-phase leading term") {
    for (double a : {1.0, 2.0}) {
        const HoloFunction phase({kI, 0.0, a});
        const cplx I = oscillatory_integral_grid(phase, bump, 0.02, 0.5, 1601);
        const double lead = kPi * 0.02 * bump(0.0) / (2.0 * a);
        MESSAGE("|Phi''| = ", 2 * a, ": 2|I| / (2 pi h g(0) / |Phi''|) = ", 2.0 * std::abs(I) / (2.0 * lead));
        CHECK(std::abs(std::abs(I) - lead) <= 0.05 * lead);
    }
}

TEST_CASE("oscillatory integral decays for a smooth weight") {
    const Mesh& m = medium_mesh();
    const HoloFunction phase({kI, 0.0, 1.0});
    const RealVec f = sample_real(m, Profile{"radial_bump", 1.0, kBumpCenter, 0.5}.function());
    const double coarse = std::abs(oscillatory_integral(m, phase, f, 0.2));
    const double fine = std::abs(oscillatory_integral(m, phase, f, 0.05));
    CHECK(fine <= 0.7 * coarse);
}

TEST_CASE("stationary model fit") {
    const double psi = 1.0, A = 0.3, B = -1.7, C = 2.5;
    std::vector<double> S;
    for (double h : kSweep) S.push_back(A + B * h + C * h * std::cos(2 * psi / h));
    const StationaryFit fit = fit_stationary_model(kSweep, S, psi);
    CHECK(std::abs(fit.A - A) <= 1e-8);
    CHECK(std::abs(fit.B - B) <= 1e-8);
    CHECK(std::abs(fit.C - C) <= 1e-8);
    CHECK(fit.residual <= 1e-10);

    CHECK_THROWS_AS(fit_stationary_model({0.2, 0.18, 0.16}, {1.0, 1.0, 1.0}, psi), PreconditionError);
    CHECK_THROWS_AS(fit_stationary_model({0.2, 0.1}, {1.0, 1.0}, psi), PreconditionError);
}

TEST_CASE("resonant subsequence") {
    const auto h = subsequence_h_list(1.0, 0.05, 0.2);
    REQUIRE(h.size() == 9);
    for (std::size_t k = 0; k < h.size(); ++k) {
        CHECK(h[k] >= 0.05);
        CHECK(h[k] <= 0.2);
        CHECK(std::abs(std::cos(2.0 / h[k])) == doctest::Approx(1.0).epsilon(1e-9));
        if (k > 0) CHECK(h[k] < h[k - 1]);
    }
}

TEST_CASE("pointwise difference on the reference bump") {
    const Mesh& m = fine_mesh();
    const RealVec V = gaussian(m, 1.0, kBumpCenter, 0.25);
    const PointEstimate est = pointwise_difference(m, PotentialPair(m, V, zero(m)), kBumpCenter, kSweep, {});
    REQUIRE(est.ok());
    MESSAGE("D = ", est.D, ", fit residual ", est.fit.residual, ", Green gap ", est.green_gap);
    CHECK(est.D >= 0.8);
    CHECK(est.D <= 1.2);
    CHECK(est.green_gap <= 1e-2);
    CHECK(est.fit.periods >= 2.0);

    const PointEstimate swapped = pointwise_difference(m, PotentialPair(m, zero(m), V), kBumpCenter, kSweep, {});
    REQUIRE(swapped.ok());
    CHECK(std::abs(swapped.D + est.D) <= 0.05 * std::abs(est.D));

    const PointEstimate equal = pointwise_difference(m, PotentialPair(m, V, V), kBumpCenter, kSweep, {});
    REQUIRE(equal.ok());
    CHECK(std::abs(equal.D) <= 0.05);

    ReconstructOptions sub;
    sub.mode = "subsequence";
    const PointEstimate resonant = pointwise_difference(m, PotentialPair(m, V, zero(m)), kBumpCenter, kSweep, sub);
    REQUIRE(resonant.ok());
    CHECK(resonant.h.size() == 9);
    CHECK(std::abs(resonant.D - est.D) <= 0.1);

    ReconstructOptions bad;
    bad.mode = "guess";
    CHECK_FALSE(pointwise_difference(m, PotentialPair(m, V, zero(m)), kBumpCenter, kSweep, bad).ok());
}

TEST_CASE("difference map") {
    const Mesh& m = medium_mesh();
    const RealVec V = gaussian(m, 1.0, kBumpCenter, 0.25);
    const DifferenceMap map = difference_map(m, PotentialPair(m, V, zero(m)), kBumpCenter, 0.1, 3, kCoarseSweep, {});
    REQUIRE(map.points.size() == 9);
    CHECK(std::abs(map.points[0].p - cplx(0.1, 0.0)) <= 1e-12);
    CHECK(std::abs(map.points[8].p - cplx(0.3, 0.2)) <= 1e-12);
    // too close to the resolvability limit at this resolution
    CHECK_FALSE(map.points[0].ok());
    CHECK(map.argmax() == 4);

    std::ostringstream csv;
    map.write_csv(csv);
    CHECK(csv.str().rfind("x,y,D,fit_residual,abs_a_p,C_p\n", 0) == 0);

    const DifferenceMap threaded =
        difference_map(m, PotentialPair(m, V, zero(m)), kBumpCenter, 0.1, 3, kCoarseSweep, {}, 2);
    CHECK(threaded.summary().dump() == map.summary().dump());

    for (double lambda : {0.5, 2.0}) {
        const DifferenceMap scaled =
            difference_map(m, PotentialPair(m, RealVec(lambda * V), zero(m)), kBumpCenter, 0.1, 3, kCoarseSweep, {});
        CHECK(scaled.argmax() == map.argmax());
        CHECK(scaled.points[4].D == doctest::Approx(lambda * map.points[4].D).epsilon(0.05));
    }
}

TEST_CASE("concentrating traces") {
    const Mesh& m = fine_mesh();
    const double theta0 = kPi / 4, h = 0.1;
    const CplxVec a = concentrating_trace(m, theta0, h, false);
    const CplxVec b = concentrating_trace(m, theta0, h, true);
    const cplx p = std::polar(1.0, theta0);
    for (int v = 0; v < m.vertex_count(); ++v) {
        CHECK(std::abs(b[v] - std::conj(a[v])) <= 1e-14);
        if (std::abs(m.vertices[v] - p) > 1.2 * std::sqrt(h)) CHECK(a[v] == cplx(0.0));
    }
}

TEST_CASE("boundary recovery") {
    const Mesh& m = fine_mesh();
    const double theta0 = kPi / 4;
    const Profile cal_profile{"radial_bump", 1.0, 0.0, 1.5};
    const BoundarySeries cal_series =
        boundary_pairing_series(m, PotentialPair(m, sample_real(m, cal_profile.function()), zero(m)), theta0, kSweep);
    for (double gap : cal_series.interior_gap) CHECK(gap <= 1e-10);
    const BoundaryCalibration cal = calibrate_boundary(cal_series, cal_profile(std::polar(1.0, theta0)));

    SUBCASE("transfer to a bump of value 1 at the boundary point") {
        const RealVec V = gaussian(m, 1.0, std::polar(1.0, theta0), 0.4);
        const BoundaryEstimate est = boundary_recovery(m, PotentialPair(m, V, zero(m)), theta0, kSweep, cal);
        MESSAGE("D = ", est.D, ", exponent ", est.exponent);
        CHECK(est.exponent >= 1.35);
        CHECK(est.exponent <= 1.65);
        CHECK(est.D >= 0.75);
        CHECK(est.D <= 1.25);
    }
    SUBCASE("equal potentials") {
        const RealVec V = gaussian(m, 1.0, std::polar(0.8, theta0), 0.4);
        const BoundaryEstimate est = boundary_recovery(m, PotentialPair(m, V, V), theta0, kSweep, cal);
        CHECK(std::abs(est.D) <= 1e-6);
    }
    SUBCASE("difference away from the boundary point") {
        const RealVec V = gaussian(m, 1.0, cplx(-0.3, 0.5), 0.1);
        const BoundarySeries s = boundary_pairing_series(m, PotentialPair(m, V, zero(m)), theta0, kSweep);
        CHECK(std::abs((fit_scaled_pairing(s).intercept / cal.C).real()) <= 1e-2);
    }
    SUBCASE("preconditions") {
        CHECK_THROWS_AS(boundary_pairing_series(m, PotentialPair(m, zero(m), zero(m)), 1.2 * kPi, kSweep),
                        PreconditionError);
        CHECK_THROWS_AS(calibrate_boundary(cal_series, 0.0), PreconditionError);
        const RealVec V = gaussian(m, 1.0, std::polar(1.0, theta0), 0.4);
        CHECK_THROWS_AS(boundary_recovery(m, PotentialPair(m, V, zero(m)), theta0, {0.2, 0.1}, cal), PreconditionError);
    }
    SUBCASE("a cutoff narrower than the decay length leaves the concentration regime") {
        const RealVec V = gaussian(m, 1.0, std::polar(1.0, theta0), 0.4);
        CHECK_THROWS_AS(boundary_recovery(m, PotentialPair(m, V, zero(m)), theta0, kSweep, cal, 1.35, 1.65, 0.4),
                        ResolutionError);
    }
}

TEST_CASE("boundary csv") {
    BoundaryEstimate e;
    e.theta0 = 0.5;
    e.D = 1.0;
    e.exponent = 1.5;
    std::ostringstream out;
    write_boundary_csv({e}, out);
    CHECK(out.str() == "theta,D,fitted_exponent\n0.5,1,1.5\n");
    std::ostringstream empty;
    write_boundary_csv({}, empty);
    CHECK(empty.str() == "theta,D,fitted_exponent\n");
}
