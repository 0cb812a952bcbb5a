#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "fixtures.hpp"
#include "inversemf/errors.hpp"
#include "inversemf/parallel.hpp"
#include "inversemf/thermo.hpp"
#include "oracles.hpp"

using namespace imf;

namespace {

struct MoranCase {
    const char* name;
    std::vector<double> r, p;
};

const std::vector<MoranCase> kMoran = {
    {"bernoulli2", {0.25, 0.25}, {2.0 / 3, 1.0 / 3}},
    {"moran_a", {1.0 / 3, 0.2}, {0.3, 0.7}},
    {"moran_b", {0.2, 0.1, 0.3}, {0.5, 0.2, 0.3}},
};

// log sum_v exp(sum_i sup over the step cylinder of a psi + b phi), with the
// step sups taken on a dense grid over closed-form moebius geometry
double brute_pressure(const EnvModel& m, int n, double a, double b) {
    const auto& br = m.states[0].branches;
    const auto ws = oracle::words({{1, 1}, {1, 1}}, n);
    double total = 0.0;
    for (const auto& w : ws) {
        double lo = 0.0, hi = 1.0, sum = 0.0;
        for (int i = n - 1; i >= 0; --i) {
            const auto& B = br[static_cast<std::size_t>(w[static_cast<std::size_t>(i)] - 1)];
            const double y0 = oracle::moebius_inverse(B.c, lo), y1 = oracle::moebius_inverse(B.c, hi);
            double best = -INFINITY;
            for (int k = 0; k <= 4000; ++k) {
                const double y = y0 + (y1 - y0) * k / 4000.0;
                const double phi = B.phi.value + B.phi.slope * y;
                best = std::max(best, a * oracle::moebius_psi(B.a, B.b, B.c, y) + b * phi);
            }
            sum += best;
            lo = B.a + (B.b - B.a) * y0;
            hi = B.a + (B.b - B.a) * y1;
        }
        total += std::exp(sum);
    }
    return std::log(total) / n;
}

}  // namespace

TEST_CASE("pressure closed forms on bernoulli-2") {
    EnvPath p = fx::path("bernoulli2", 40);
    for (int n : {4, 8, 16}) {
        CHECK(pressure(p, 0, n, 0.0, 0.0, Combo::TPsi).value == doctest::Approx(std::log(2.0)).epsilon(1e-14));
        CHECK(std::abs(pressure(p, 0, n, 0.0, 0.0, Combo::PhiOnly).value) <= 1e-14);
        CHECK(std::abs(pressure(p, 0, n, 0.0, 0.5, Combo::TPsi).value) <= 1e-14);
    }
    CHECK_THROWS_AS(pressure(p, 0, 3, 0.0, 0.0, Combo::TPsi), Error);
}

TEST_CASE("pressure estimate records its combination and Cauchy gap") {
    EnvPath p = fx::path("bernoulli2", 40);
    PressureEstimate e = pressure(p, 0, 16, 1.5, 0.25, Combo::QPsiMinusTPhi);
    CHECK(e.q_psi == 1.5);
    CHECK(e.t_phi == -0.25);
    // exact at every depth for a Moran model
    CHECK(e.cauchy_gap <= 1e-13);
    EnvPath m = fx::path("moebius", 40);
    PressureEstimate f = pressure(m, 0, 12, 0.0, 0.0, Combo::PhiOnly);
    CHECK(f.cauchy_gap > 1e-4);
    CHECK(f.cauchy_gap == doctest::Approx(std::abs(f.value - pressure(m, 0, 6, 0.0, 0.0, Combo::PhiOnly).value)));
}

TEST_CASE("combo coefficients") {
    Coeffs c = combo_coeffs(Combo::QPsiMinusTPhi, 2.0, 3.0);
    CHECK(c.a_psi == 2.0);
    CHECK(c.b_phi == -3.0);
    c = combo_coeffs(Combo::QPhiMinusTPsi, 2.0, 3.0);
    CHECK(c.a_psi == -3.0);
    CHECK(c.b_phi == 2.0);
    c = combo_coeffs(Combo::TPsi, 2.0, 3.0);
    CHECK(c.a_psi == 3.0);
    CHECK(c.b_phi == 0.0);
    c = combo_coeffs(Combo::PhiOnly, 2.0, 3.0);
    CHECK(c.a_psi == 0.0);
    CHECK(c.b_phi == 1.0);
}

TEST_CASE("roots against scalar Moran equations") {
    for (const auto& mc : kMoran) {
        EnvPath p = fx::path(mc.name, 20);
        PressureEvaluator P(p, 0, 16);
        CHECK(P.transfer());
        CHECK(pressure_root(P, 0.0, RootKind::Bowen).root == doctest::Approx(oracle::moran_bowen(mc.r)).epsilon(1e-9));
        for (double q : {-2.0, -1.0, 0.0, 1.0, 2.0}) {
            CHECK(std::abs(pressure_root(P, q, RootKind::CalT).root - oracle::moran_calT(mc.r, mc.p, q)) <= 1e-6);
            CHECK(std::abs(pressure_root(P, q, RootKind::T).root - oracle::moran_T(mc.r, mc.p, q)) <= 1e-6);
        }
    }
}

TEST_CASE("bernoulli-2 pinned roots") {
    EnvPath p = fx::path("bernoulli2", 20);
    PressureEvaluator P(p, 0, 16);
    CHECK(std::abs(pressure_root(P, 0.0, RootKind::Bowen).root - 0.5) <= 1e-6);
    CHECK(std::abs(pressure_root(P, 0.5, RootKind::CalT).root) <= 1e-6);
    CHECK(std::abs(pressure_root(P, 0.0, RootKind::CalT).root + 1.0) <= 1e-6);
    CHECK(std::abs(pressure_root(P, 1.0, RootKind::T).root) <= 1e-6);
    CHECK(std::abs(pressure_root(p, 0.0, RootKind::Bowen, 16) - 0.5) <= 1e-6);
}

TEST_CASE("golden-mean bowen root") {
    // P(t Psi) = log golden + t log 0.4 for ratios 0.4, 0.4
    EnvPath p = fx::path("golden_mean", 300);
    PressureEvaluator P(p, 0, 256);
    const double t0 = std::log(oracle::kGolden) / std::log(2.5);
    CHECK(std::abs(pressure_root(P, 0.0, RootKind::Bowen).root - t0) <= 5e-3);
    // finite-n transfer pressure is (1/n) log 1^T A^{n-1} 1, exact in closed form
    const double n = 256;
    const double sq5 = std::sqrt(5.0);
    const double fib = (std::pow(oracle::kGolden, n + 2) - std::pow(-1 / oracle::kGolden, n + 2)) / sq5;  // F_{n+2}
    CHECK(P(0.0, 0.0) == doctest::Approx(std::log(fib) / n).epsilon(1e-12));
}

TEST_CASE("tree pressure matches a dense-grid brute force") {
    auto m = fx::model("moebius");
    EnvPath p = fx::path(m, 20);
    PressureEvaluator P(p, 0, 6);
    CHECK_FALSE(P.transfer());
    for (auto [a, b] : {std::pair{1.0, 0.0}, {0.5, -1.0}, {-1.0, 2.0}, {2.0, 3.0}, {0.0, 1.0}}) {
        CHECK(P(a, b) == doctest::Approx(brute_pressure(*m, 6, a, b)).epsilon(1e-7));
    }
}

TEST_CASE("pressure is evaluated identically with any worker count") {
    EnvPath p = fx::path("moebius", 40);
    PressureEvaluator P(p, 0, 12);
    const auto g = make_grid(-2, 2, 0.5);
    set_threads(1);
    SpectrumCurve a = root_curve(P, RootKind::CalT, g);
    set_threads(4);
    SpectrumCurve b = root_curve(P, RootKind::CalT, g);
    set_threads(1);
    CHECK(a.value == b.value);
}

TEST_CASE("normalization") {
    NormalizeResult r = normalize_phi(*fx::model("bernoulli2"));
    CHECK(std::abs(r.shift) <= 1e-12);
    nlohmann::json j = model_to_json(*fx::model("bernoulli2"));
    for (auto& b : j["states"][0]["branches"]) b["phi"]["value"] = b["phi"]["value"].get<double>() + 0.1;
    NormalizeResult s = normalize_phi(model_from_json(j));
    CHECK(std::abs(s.shift - 0.1) <= 2e-3);
    // after the shift the pressure of phi vanishes on the main path
    EnvPath p = sample_path(std::make_shared<const EnvModel>(s.model), 16);
    CHECK(std::abs(pressure(p, 0, 16, 0, 0, Combo::PhiOnly).value) <= 1e-12);
}

TEST_CASE("normalization errors") {
    // phi = log 1.1 on both branches already has a positive mean: refused as invalid
    auto pos = fx::from_json(fx::one_state({{{0, 0.25, std::log(1.1)}, {0.5, 0.75, std::log(1.1)}}}));
    try {
        normalize_phi(*pos);
        FAIL("expected InvalidModel");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::InvalidModel);
    }
    // golden mean with a very uneven phi: valid before, positive sup after
    auto gm = fx::from_json(fx::one_state({{{0, 0.4, -3.0}, {0.5, 0.9, -0.5}}}, {{1, 1}, {1, 0}}));
    try {
        normalize_phi(*gm);
        FAIL("expected NormalizationBreaksAssumption");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::NormalizationBreaksAssumption);
    }
}

TEST_CASE("unbracketable roots raise BracketFailure") {
    // calT(q) grows like q log 4 / log 3 for large q, past the bracketing limit
    EnvPath p = fx::path("bernoulli2", 20);
    PressureEvaluator P(p, 0, 8);
    try {
        pressure_root(P, 5000.0, RootKind::CalT);
        FAIL("expected BracketFailure");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::BracketFailure);
    }
}

TEST_CASE("legendre transform") {
    auto g = make_grid(-3, 3, 0.01);
    SpectrumCurve lin, quad;
    for (double q : g) {
        lin.x.push_back(q);
        lin.value.push_back(q - 1);
        quad.x.push_back(q);
        quad.value.push_back(-q * q / 2);
    }
    SpectrumCurve a = legendre(lin, {1.0});
    CHECK(a.value[0] == doctest::Approx(1.0).epsilon(1e-12));
    // inf convention: the conjugate of -q^2/2 is -d^2/2
    SpectrumCurve b = legendre(quad, {1.0, 2.5, 5.0});
    CHECK(std::abs(b.value[0] + 0.5) <= 1e-3);
    CHECK(std::abs(b.value[1] + 3.125) <= 1e-3);
    CHECK(b.edge[2] == 1);
    CHECK(b.edge[0] == 0);
    // a convex curve has no interior infimum
    SpectrumCurve up;
    for (double q : g) {
        up.x.push_back(q);
        up.value.push_back(q * q / 2);
    }
    CHECK(legendre(up, {1.0}).edge[0] == 1);
}

TEST_CASE("envelope identity on bernoulli-2") {
    EnvPath p = fx::path("bernoulli2", 20);
    PressureEvaluator P(p, 0, 16);
    const double h = 1e-5;
    const double d = (pressure_root(P, h, RootKind::CalT).root - pressure_root(P, -h, RootKind::CalT).root) / (2 * h);
    SpectrumCurve c = root_curve(P, RootKind::CalT, make_grid(-8, 8, 0.01));
    SpectrumCurve L = legendre(c, {d});
    CHECK(std::abs(L.value[0] - 1.0) <= 2e-3);
    // oracle side: the same transform of the closed-form curve
    auto f = [](double q) { return oracle::moran_calT({0.25, 0.25}, {2.0 / 3, 1.0 / 3}, q); };
    CHECK(std::abs(oracle::legendre(f, d, -8, 8, 0.01) - L.value[0]) <= 1e-6);
}

TEST_CASE("curves increase and are concave") {
    for (const char* name : {"bernoulli2", "moran_b", "random2", "moebius"}) {
        // the sup tree for the Lipschitz model grows like 2^n
        NormalizeOptions no;
        no.n = std::string(name) == "moebius" ? 12 : 16;
        auto m = std::make_shared<const EnvModel>(normalize_phi(*fx::model(name), no).model);
        EnvPath p = sample_path(m, 40);
        PressureEvaluator P(p, 0, no.n);
        for (RootKind k : {RootKind::CalT, RootKind::T}) {
            SpectrumCurve c = root_curve(P, k, make_grid(-4, 4, 0.05));
            for (std::size_t i = 1; i < c.value.size(); ++i) REQUIRE(c.value[i] > c.value[i - 1]);
            for (std::size_t i = 1; i + 1 < c.value.size(); ++i)
                REQUIRE(c.value[i + 1] - 2 * c.value[i] + c.value[i - 1] <= 1e-8);
        }
        // T inverts calT: T(-calT(q)) = -q
        for (double q : {-1.5, 0.0, 0.7}) {
            const double c = pressure_root(P, q, RootKind::CalT).root;
            CHECK(std::abs(pressure_root(P, -c, RootKind::T).root + q) <= 1e-7);
        }
        const double t0 = pressure_root(P, 0, RootKind::Bowen).root;
        CHECK(std::abs(pressure_root(P, t0, RootKind::CalT).root) <= 1e-7);
        CHECK(std::abs(pressure_root(P, 0, RootKind::CalT).root + 1) <= 1e-7);
    }
}

TEST_CASE("duality on closed-form and degenerate models") {
    EnvPath p = fx::path("bernoulli2", 20);
    PressureEvaluator P(p, 0, 16);
    auto qg = make_grid(-8, 8, 0.01);
    SpectrumCurve c = root_curve(P, RootKind::CalT, qg), T = root_curve(P, RootKind::T, qg);
    std::vector<double> dg;
    for (int i = 0; i < 10; ++i) dg.push_back(1.3 + 0.18 * i);
    DualityReport r = duality_check(T, c, dg);
    CHECK(r.evaluated == 10);
    CHECK(r.max_discrepancy <= 5e-3);
    DualityReport out = duality_check(T, c, {0.5, 40.0});
    CHECK(out.evaluated == 0);
    CHECK(out.excluded.size() == 2);

    EnvPath s = fx::path("bernoulli_sym", 20);
    PressureEvaluator S(s, 0, 16);
    SpectrumCurve cs = root_curve(S, RootKind::CalT, qg), Ts = root_curve(S, RootKind::T, qg);
    for (std::size_t i = 0; i < qg.size(); i += 100) CHECK(cs.value[i] == doctest::Approx(2 * qg[i] - 1).epsilon(1e-9));
    DualityReport d = duality_check(Ts, cs, {1.0, 2.0, 3.0});
    CHECK(d.degenerate);
    CHECK(d.evaluated == 1);
    CHECK(d.max_discrepancy <= 1e-6);
}

TEST_CASE("predicted lower spectrum") {
    EnvPath p = fx::path("bernoulli2", 20);
    PressureEvaluator P(p, 0, 16);
    SpectrumCurve c = root_curve(P, RootKind::CalT, make_grid(-8, 8, 0.01));
    auto dg = make_grid(0.05, 6, 0.05);
    LowerSpectrum L = predicted_lower_spectrum(P, c, 0.5, dg);
    CHECK(L.continuity_gap <= 1e-3);
    // left derivative of the closed-form curve at t0
    const double h = 1e-4;
    auto f = [](double q) { return oracle::moran_calT({0.25, 0.25}, {2.0 / 3, 1.0 / 3}, q); };
    CHECK(L.d_star == doctest::Approx((f(0.5) - f(0.5 - h)) / h).epsilon(1e-6));
    for (std::size_t i = 0; i < dg.size(); ++i)
        if (dg[i] <= L.d_star) CHECK(L.curve.value[i] == doctest::Approx(0.5 * dg[i]).epsilon(1e-12));
}

TEST_CASE("curve csv layout") {
    SpectrumCurve c;
    c.kind = "calT";
    c.depth = 16;
    c.model_hash = "abc";
    c.x = {0.0, 0.5};
    c.value = {-1.0, 0.1};
    c.edge = {0, 1};
    const std::string s = to_csv(c);
    CHECK(s.find("x,value,edge_flag\n0,-1,0\n0.5,0.1,1\n") != std::string::npos);
    CHECK(s.rfind("# kind,depth,model_hash", 0) == 0);
}
