#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "fixtures.hpp"
#include "inversemf/errors.hpp"
#include "inversemf/gibbs.hpp"
#include "inversemf/inverse.hpp"
#include "inversemf/thermo.hpp"
#include "oracles.hpp"

using namespace imf;

namespace {

std::shared_ptr<const EnvModel> normalized(const std::string& name, int n = 16) {
    NormalizeOptions o;
    o.n = n;
    return std::make_shared<const EnvModel>(normalize_phi(*fx::model(name), o).model);
}

std::shared_ptr<const EnvModel> lipschitz(const std::string& name, double slope) {
    nlohmann::json j = model_to_json(*fx::model(name));
    for (auto& st : j["states"])
        for (auto& b : st["branches"]) b["phi"] = {{"kind", "lipschitz"}, {"value", b["phi"]["value"]}, {"slope", slope}};
    NormalizeOptions o;
    return std::make_shared<const EnvModel>(normalize_phi(model_from_json(j), o).model);
}

}  // namespace

TEST_CASE("transfer operator on the constant function") {
    EnvPath b = fx::path("bernoulli2", 20);
    FunctionTable one = FunctionTable::zeros(b, 3, 1);
    std::fill(one.values.begin(), one.values.end(), 1.0);
    FunctionTable Lb = rpf_apply(b, 3, one);
    CHECK(Lb.offset == 4);
    for (double v : Lb.values) CHECK(v == doctest::Approx(1.0).epsilon(1e-15));

    auto full = fx::from_json(fx::one_state({{{0, 0.2, -0.3}, {0.4, 0.6, -2.0}, {0.8, 1.0, -1.1}}}));
    EnvPath f = fx::path(full, 20);
    FunctionTable o3 = FunctionTable::zeros(f, 0, 2);
    std::fill(o3.values.begin(), o3.values.end(), 1.0);
    FunctionTable Lf = rpf_apply(f, 0, o3);
    for (double v : Lf.values) CHECK(v == doctest::Approx(std::exp(-0.3) + std::exp(-2.0) + std::exp(-1.1)).epsilon(1e-14));

    auto gm = fx::model("golden_mean");
    EnvPath g = fx::path(gm, 20);
    FunctionTable og = FunctionTable::zeros(g, 0, 1);
    og.at(parse_word("1@0")) = 1.0;
    og.at(parse_word("2@0")) = 1.0;
    FunctionTable Lg = rpf_apply(g, 0, og);
    const double e = std::exp(gm->states[0].branches[0].phi.value);
    CHECK(Lg.at(parse_word("1@1")) == doctest::Approx(2 * e).epsilon(1e-14));
    CHECK(Lg.at(parse_word("2@1")) == doctest::Approx(e).epsilon(1e-14));
}

TEST_CASE("bernoulli-2 conformal measure is the Bernoulli measure") {
    EnvPath p = fx::path("bernoulli2", 200);
    RpfResult r = rpf_measure(p, 0, 6, 40);
    const double pr[2] = {2.0 / 3, 1.0 / 3};
    MeasureTable t2 = materialize(*r.family, 0, 2);
    for (std::size_t i = 0; i < t2.words.size(); ++i) {
        const auto& w = t2.words[i].letters;
        CHECK(std::abs(t2.masses[i] - pr[w[0] - 1] * pr[w[1] - 1]) <= 1e-10);
    }
    for (double l : r.log_lambdas) CHECK(std::abs(l) <= 1e-12);
    CHECK(std::abs(r.mean_log_lambda(10)) <= 1e-3);
    CHECK(r.residual <= 1e-10);
}

TEST_CASE("golden-mean masses follow the conformal closed form") {
    auto m = normalized("golden_mean", 64);
    EnvPath p = sample_path(m, 300);
    RpfOptions o;
    o.chain_depth = 12;
    GibbsFamily fam(p, 0, 80, o);
    for (int n = 1; n <= 10; ++n) {
        for (const Word& w : all_words(p, 0, n)) {
            const double conformal = oracle::golden_conformal(w.letters);
            REQUIRE(fam.mass(w) == doctest::Approx(conformal).epsilon(1e-8));
        }
    }
    // the invariant (Parry) measure differs on words starting with 2
    Word w = parse_word("2,1@0");
    CHECK(std::abs(fam.mass(w) - oracle::golden_parry(w.letters)) > 1e-3);
}

TEST_CASE("tables are positive, normalized and additive") {
    for (const char* name : {"random2", "random2b", "moebius", "golden_mean"}) {
        auto m = normalized(name);
        EnvPath p = sample_path(m, 300);
        RpfOptions o;
        o.chain_depth = 12;
        o.residual_bound = 1e-6;
        GibbsFamily fam(p, 0, 60, o);
        for (int off : {0, 3}) {
            MeasureTable a = materialize(fam, off, 4), b = materialize(fam, off, 7);
            CHECK(std::abs(a.total() - 1.0) <= 1e-12);
            CHECK(std::abs(b.total() - 1.0) <= 1e-12);
            check_positive(a);
            for (std::size_t i = 0; i < a.words.size(); ++i) REQUIRE(std::abs(b.mass(a.words[i]) - a.masses[i]) <= 1e-12);
        }
    }
}

TEST_CASE("zero mass is fatal") {
    EnvPath p = fx::path("bernoulli2", 200);
    RpfResult r = rpf_measure(p, 0, 4, 40);
    MeasureTable t = r.table;
    t.masses[3] = 0.0;
    CHECK_THROWS_AS(check_positive(t), Error);
    CHECK_THROWS_AS(interval_table(t), Error);
    CHECK_THROWS_AS(atoms(t, p, 3), Error);
}

TEST_CASE("normalizers average to zero after normalization") {
    for (const char* name : {"random2", "random2b"}) {
        NormalizeOptions no;
        no.n = 2048;
        no.horizon = 2400;
        auto m = std::make_shared<const EnvModel>(normalize_phi(*fx::model(name), no).model);
        EnvPath p = sample_path(m, 2400);
        RpfOptions o;
        o.chain_depth = 8;
        o.lambda_steps = 2048;
        o.residual_bound = 1e-6;
        GibbsFamily fam(p, 0, 60, o);
        double s = 0;
        for (int i = 0; i < 2048; ++i) s += fam.log_lambda(i);
        CHECK(std::abs(s / 2048) <= 1e-3);
    }
}

TEST_CASE("weak Gibbs diagnostic") {
    EnvPath p = fx::path("bernoulli2", 200);
    RpfOptions o;
    o.chain_depth = 14;
    GibbsFamily fam(p, 0, 40, o);
    GibbsReport g = gibbs_diagnostic(fam, 0, {6, 8, 10, 12});
    for (const auto& row : g.rows) CHECK(row.defect <= 1e-10 / row.n);
    CHECK(g.all_within());

    auto lip = lipschitz("bernoulli2", 0.4);
    EnvPath q = sample_path(lip, 200);
    GibbsFamily lf(q, 0, 60, o);
    GibbsReport h = gibbs_diagnostic(lf, 0, {8, 12});
    CHECK(h.rows[1].defect <= h.rows[0].defect);
    CHECK(h.all_within());
    CHECK(h.defect_nonincreasing());
    for (const auto& row : h.rows) CHECK(row.epsilon > 0);
}

TEST_CASE("function table indexing") {
    EnvPath p = fx::path("random2", 30);
    FunctionTable t = FunctionTable::zeros(p, 2, 3);
    std::vector<int> letters(3);
    for (const Word& w : all_words(p, 2, 3)) {
        const std::size_t i = t.index(w);
        t.decode(i, letters.data());
        CHECK(letters == w.letters);
    }
}
