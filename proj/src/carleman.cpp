#include "calderon/carleman.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>
#include <limits>
#include <thread>

#include "calderon/cgo.hpp"

namespace calderon {

cplx CarlemanWeight::grad_phi(cplx z) const { return std::conj(phase.derivative(z)); }

CarlemanWeight build_carleman_weight(const Mesh& mesh, const HoloFunction& phase, double epsilon,
                                     const FitOptions& options) {
    if (!(epsilon > 0.0)) throw PreconditionError("convexification parameter must be positive");
    CarlemanWeight w;
    w.phase = phase;
    w.epsilon = epsilon;
    const CriticalPointReport report = find_critical_points(phase);
    const std::optional<ArcSpec>& gamma0 = mesh.domain.gamma0;
    for (const CriticalPoint& cp : report.points) {
        if (cp.boundary) continue;
        if (!gamma0) {
            w.auxiliaries.push_back(HoloFunction({0.0, 1.0}));
            continue;
        }
        // G = z F' with G(0) = 0, F'(p_j) = 1 and Im G = 0 on gamma0, so d_nu Im F = 0 there
        std::vector<PointConstraint> cons{{0.0, 0, 0.0}};
        if (std::abs(cp.z) > 1e-12)
            cons.push_back({cp.z, 0, cp.z});
        else
            cons.push_back({0.0, 1, 1.0});
        const FitResult g = fit_holomorphic_on_arc(cons, ArcCondition{*gamma0, ArcPart::Imag, {}, {}}, options);
        const std::vector<cplx>& gc = g.function.coefficients();
        std::vector<cplx> fc(gc.size(), 0.0);
        for (std::size_t k = 1; k < gc.size(); ++k) fc[k] = gc[k] / double(k);
        w.auxiliaries.push_back(HoloFunction(fc));
    }

    w.min_gradient_sum = std::numeric_limits<double>::infinity();
    for (int v = 0; v < mesh.vertex_count(); ++v) {
        const cplx z = mesh.vertices[v];
        double s = std::norm(phase.derivative(z));
        for (const auto& F : w.auxiliaries) s += std::norm(F.derivative(z));
        w.min_gradient_sum = std::min(w.min_gradient_sum, std::exp(-2.0 * mesh.rho[v]) * s);
    }
    for (int j : mesh.boundary_on(Arc::Gamma0)) {
        const int v = mesh.boundary[j];
        const cplx z = mesh.vertices[v];
        for (const auto& F : w.auxiliaries)
            w.neumann_residual = std::max(w.neumann_residual, std::exp(-mesh.rho[v]) * std::abs((z * F.derivative(z)).imag()));
    }
    return w;
}

RealVec convexify_weight(const Mesh& mesh, const CarlemanWeight& weight, double h) {
    if (!(h > 0.0) || h > weight.epsilon / 5.0) {
        std::ostringstream msg;
        msg << "convexified weight needs 0 < h <= epsilon/5, got h = " << h << " with epsilon = " << weight.epsilon;
        throw PreconditionError(msg.str());
    }
    RealVec out(mesh.vertex_count());
    for (int v = 0; v < mesh.vertex_count(); ++v) {
        const cplx z = mesh.vertices[v];
        const double phi = weight.phi(z);
        double s = phi * phi;
        for (const auto& F : weight.auxiliaries) s += std::pow(F(z).imag(), 2);
        out[v] = phi - h / (2.0 * weight.epsilon) * s;
    }
    return out;
}

// ------------------------------------------------------------ test functions

TestFunction TestFunction::sine_bump() {
    TestFunction t;
    t.label = "sine_bump";
    t.eval = [](cplx z) {
        const double r = std::abs(z), k = kPi / 2.0;
        Value v;
        v.u = std::cos(k * r);
        const double ur = -k * std::sin(k * r);
        const double ur_over_r = r > 1e-12 ? ur / r : -k * k;
        v.ux = ur_over_r * z.real();
        v.uy = ur_over_r * z.imag();
        v.lap = -k * k * std::cos(k * r) + ur_over_r;
        return v;
    };
    return t;
}

TestFunction TestFunction::modulated_bump(cplx center, double width, cplx wave, double offset) {
    TestFunction t;
    std::ostringstream label;
    label << "bump(" << center.real() << ',' << center.imag() << ";" << width << ")";
    t.label = label.str();
    t.eval = [=](cplx z) {
        const double x = z.real(), y = z.imag();
        const double B = 1.0 - x * x - y * y, Bx = -2.0 * x, By = -2.0 * y, lapB = -4.0;
        const double dx = x - center.real(), dy = y - center.imag(), s2 = width * width;
        const double G = std::exp(-(dx * dx + dy * dy) / (2.0 * s2));
        const double Gx = -dx / s2 * G, Gy = -dy / s2 * G;
        const double lapG = G * ((dx * dx + dy * dy) / (s2 * s2) - 2.0 / s2);
        const double arg = wave.real() * x + wave.imag() * y + offset;
        const double C = std::cos(arg), S = std::sin(arg);
        const double Cx = -wave.real() * S, Cy = -wave.imag() * S, lapC = -std::norm(wave) * C;
        Value v;
        v.u = B * G * C;
        v.ux = Bx * G * C + B * Gx * C + B * G * Cx;
        v.uy = By * G * C + B * Gy * C + B * G * Cy;
        v.lap = lapB * G * C + B * lapG * C + B * G * lapC +
                2.0 * ((Bx * Gx + By * Gy) * C + (Bx * Cx + By * Cy) * G + (Gx * Cx + Gy * Cy) * B);
        return v;
    };
    return t;
}

TestFunction TestFunction::random(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> U(0.0, 1.0);
    const double rc = 0.7 * std::sqrt(U(rng)), ac = 2.0 * kPi * U(rng);
    const double width = 0.15 + 0.35 * U(rng);
    const double k = 6.0 * U(rng), ak = 2.0 * kPi * U(rng);
    const double offset = 2.0 * kPi * U(rng);
    return modulated_bump(std::polar(rc, ac), width, std::polar(k, ak), offset);
}

TestFunction TestFunction::scaled(double factor) const {
    TestFunction t;
    t.label = label;
    auto inner = eval;
    t.eval = [inner, factor](cplx z) {
        Value v = inner(z);
        v.u *= factor;
        v.ux *= factor;
        v.uy *= factor;
        v.lap *= factor;
        return v;
    };
    return t;
}

// ------------------------------------------------------------------- ratio

namespace {

struct Sampled {
    std::vector<TestFunction::Value> values;
    CplxVec normal_sq;  // |d_nu u|^2 per boundary vertex
};

Sampled sample_test(const Mesh& mesh, const TestFunction& u) {
    Sampled s;
    s.values.resize(mesh.vertex_count());
    double scale = 0.0;
    for (int v = 0; v < mesh.vertex_count(); ++v) {
        s.values[v] = u.eval(mesh.vertices[v]);
        scale = std::max(scale, std::abs(s.values[v].u));
    }
    if (scale == 0.0) throw PreconditionError("test function vanishes identically; the Carleman ratio is undefined");
    s.normal_sq.resize(mesh.boundary_count());
    for (int j = 0; j < mesh.boundary_count(); ++j) {
        const int v = mesh.boundary[j];
        const auto& val = s.values[v];
        if (std::abs(val.u) > 1e-12 * scale) throw PreconditionError("test function must vanish on the boundary");
        const cplx z = mesh.vertices[v];
        const double dn = std::exp(-mesh.rho[v]) * (z.real() * val.ux + z.imag() * val.uy);
        s.normal_sq[j] = dn * dn;
    }
    return s;
}

CarlemanValue evaluate(const Mesh& mesh, const CarlemanWeight& weight, const RealVec& V, const Sampled& s, double h) {
    double u2 = 0.0, udphi2 = 0.0, du2 = 0.0, Pu2 = 0.0;
    for (int v = 0; v < mesh.vertex_count(); ++v) {
        const auto& val = s.values[v];
        const cplx g = weight.grad_phi(mesh.vertices[v]);
        const double inv_metric = std::exp(-2.0 * mesh.rho[v]);
        const double gradphi2 = std::norm(g);
        const double dot = g.real() * val.ux + g.imag() * val.uy;
        const double Pu = -inv_metric * (val.lap + 2.0 / h * dot + gradphi2 / (h * h) * val.u) + V[v] * val.u;
        u2 += mesh.mass[v] * val.u * val.u;
        udphi2 += mesh.area[v] * gradphi2 * val.u * val.u;
        du2 += mesh.area[v] * (val.ux * val.ux + val.uy * val.uy);
        Pu2 += mesh.mass[v] * Pu * Pu;
    }
    const double b0 = boundary_integral(mesh, s.normal_sq, Arc::Gamma0).value.real();
    const double b1 = boundary_integral(mesh, s.normal_sq, Arc::Gamma).value.real();
    CarlemanValue out;
    out.lhs = u2 / h + udphi2 / (h * h) + du2 + b0;
    out.rhs = Pu2 + b1 / h;
    out.ratio = out.rhs / out.lhs;
    return out;
}

}  // namespace

CarlemanValue carleman_ratio(const Mesh& mesh, const CarlemanWeight& weight, const RealVec& V, const TestFunction& u,
                             double h) {
    if (!(h > 0.0)) throw PreconditionError("h must be positive");
    if (V.size() != mesh.vertex_count()) throw PreconditionError("potential size does not match the mesh");
    return evaluate(mesh, weight, V, sample_test(mesh, u), h);
}

CarlemanReport carleman_sweep(const Mesh& mesh, const CarlemanWeight& weight, const RealVec& V,
                              const std::vector<double>& h_list, int sample_count, std::uint64_t seed,
                              double resolvability_factor, int jobs) {
    if (sample_count < 50) throw PreconditionError("Carleman sweep needs at least 50 test functions");
    if (V.size() != mesh.vertex_count()) throw PreconditionError("potential size does not match the mesh");
    CarlemanReport rep;
    rep.potential_sup = V.size() ? V.cwiseAbs().maxCoeff() : 0.0;
    double max_dphi = 0.0;
    for (const cplx z : mesh.vertices) max_dphi = std::max(max_dphi, 0.5 * std::abs(weight.phase.derivative(z)));
    for (double h : h_list) {
        if (h < resolvability_factor * mesh.resolution * max_dphi)
            rep.h_skipped.push_back(h);
        else
            rep.h_used.push_back(h);
    }

    std::mt19937_64 rng(seed);
    std::vector<TestFunction> tests;
    for (int k = 0; k < sample_count; ++k) tests.push_back(TestFunction::random(rng));

    const int nh = static_cast<int>(rep.h_used.size());
    std::vector<CarlemanValue> values(std::size_t(sample_count) * nh);
    auto work = [&](int first, int stride) {
        for (int k = first; k < sample_count; k += stride) {
            const Sampled s = sample_test(mesh, tests[k]);
            for (int i = 0; i < nh; ++i) values[std::size_t(k) * nh + i] = evaluate(mesh, weight, V, s, rep.h_used[i]);
        }
    };
    const int threads = std::max(1, std::min(jobs, sample_count));
    if (threads == 1) {
        work(0, 1);
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < threads; ++t) pool.emplace_back(work, t, threads);
        for (auto& t : pool) t.join();
    }

    rep.min_ratio.assign(nh, std::numeric_limits<double>::infinity());
    for (int i = 0; i < nh; ++i)
        for (int k = 0; k < sample_count; ++k) {
            const CarlemanValue& v = values[std::size_t(k) * nh + i];
            rep.rows.push_back({rep.h_used[i], k, v});
            rep.min_ratio[i] = std::min(rep.min_ratio[i], v.ratio);
        }
    rep.c_star = nh ? *std::min_element(rep.min_ratio.begin(), rep.min_ratio.end()) : 0.0;
    if (nh >= 3) {
        const SlopeFit f = fit_exponent(rep.h_used, rep.min_ratio);
        rep.trend = f.exponent;
        rep.trend_stderr = f.stderr_;
        rep.degrading = f.exponent - 2.0 * f.stderr_ > 0.0;
    }
    rep.pass = nh > 0 && rep.c_star > 0.0 && !rep.degrading;
    return rep;
}

nlohmann::json CarlemanReport::summary() const {
    return {{"h_used", h_used},
            {"h_skipped", h_skipped},
            {"min_ratio", min_ratio},
            {"c_star", c_star},
            {"trend", trend},
            {"trend_stderr", trend_stderr},
            {"degrading", degrading},
            {"potential_sup", potential_sup},
            {"pass", pass}};
}

void CarlemanReport::write_csv(std::ostream& out) const {
    out.precision(17);
    out << "h,sample_id,lhs,rhs,ratio\n";
    for (const auto& r : rows) out << r.h << ',' << r.sample << ',' << r.value.lhs << ',' << r.value.rhs << ',' << r.value.ratio << '\n';
}

}  // namespace calderon
