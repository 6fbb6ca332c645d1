#include <doctest.h>

#include <algorithm>
#include <random>

#include "dermx/metrics.hpp"

using namespace dermx;

namespace {

// Independent direct transcription of the three fuzzy-overlap formulas,
// kept deliberately separate from the library implementation.
struct OracleFuzzy {
    static double f1(const Grid& a, const Grid& m) {
        double num = 0, da = 0, dm = 0;
        for (size_t i = 0; i < a.size(); ++i) {
            num += std::min(a[i], m[i]);
            da += a[i];
            dm += m[i];
        }
        return 2.0 * num / (da + dm);
    }
    static double sensitivity(const Grid& a, const Grid& m) {
        double num = 0, dm = 0;
        for (size_t i = 0; i < a.size(); ++i) {
            num += std::min(a[i], m[i]);
            dm += m[i];
        }
        return num / dm;
    }
    static double specificity(const Grid& a, const Grid& m) {
        double num = 0, dm = 0;
        for (size_t i = 0; i < a.size(); ++i) {
            num += std::min(1 - a[i], 1 - m[i]);
            dm += 1 - m[i];
        }
        return num / dm;
    }
};

Grid random_grid(std::mt19937_64& gen, int max_side = 8) {
    std::uniform_int_distribution<int> side(1, max_side);
    const int h = side(gen), w = side(gen);
    static const double levels[] = {0.0, 0.25, 0.5, 0.75, 1.0};
    std::uniform_int_distribution<int> lv(0, 4);
    Grid g(h, w);
    for (size_t i = 0; i < g.size(); ++i) g[i] = levels[lv(gen)];
    return g;
}

Grid random_binary_grid(std::mt19937_64& gen, int h, int w) {
    std::bernoulli_distribution bit(0.4);
    Grid g(h, w);
    for (size_t i = 0; i < g.size(); ++i) g[i] = bit(gen) ? 1.0 : 0.0;
    return g;
}

}  // namespace

TEST_SUITE_BEGIN("metrics");

TEST_CASE("fuzzy metrics: frozen hand-computed case") {
    // A=[[1,0],[0.5,0]], M=[[0.5,1],[0.5,0]]
    // sum min = 0.5+0+0.5+0 = 1.0; sum A = 1.5; sum M = 2.0
    // F1 = 2/3.5; sens = 1/2; spec: sum min(1-A,1-M)=0+0+0.5+1=1.5 over sum(1-M)=2
    Grid a(2, 2, {1.0, 0.0, 0.5, 0.0});
    Grid m(2, 2, {0.5, 1.0, 0.5, 0.0});
    CHECK(*fuzzy_f1(a, m) == doctest::Approx(2.0 / 3.5).epsilon(1e-12));
    CHECK(*fuzzy_sensitivity(a, m) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(*fuzzy_specificity(a, m) == doctest::Approx(0.75).epsilon(1e-12));
}

TEST_CASE("fuzzy metrics: identity and disjoint cases") {
    Grid m(3, 3, 0.0);
    m.at(0, 0) = 0.5;
    m.at(1, 2) = 1.0;
    CHECK(*fuzzy_f1(m, m) == doctest::Approx(1.0));
    CHECK(*fuzzy_sensitivity(m, m) == doctest::Approx(1.0));
    CHECK(*fuzzy_specificity(m, m) == doctest::Approx(1.0));

    Grid zero(3, 3, 0.0);
    CHECK(*fuzzy_f1(zero, m) == doctest::Approx(0.0));

    // binary complement: disjoint supports give zero sensitivity
    Grid binary(2, 2, {1.0, 0.0, 1.0, 0.0});
    Grid complement(2, 2, {0.0, 1.0, 0.0, 1.0});
    CHECK(*fuzzy_sensitivity(complement, binary) == doctest::Approx(0.0));
}

TEST_CASE("fuzzy metrics: undefined markers on zero denominators") {
    Grid zero(2, 2, 0.0);
    Grid ones(2, 2, 1.0);
    CHECK_FALSE(fuzzy_f1(zero, zero).has_value());
    CHECK_FALSE(fuzzy_sensitivity(ones, zero).has_value());
    CHECK_FALSE(fuzzy_specificity(zero, ones).has_value());
    CHECK_THROWS_AS((void)fuzzy_f1(Grid(2, 2), Grid(3, 3)), SchemaError);
}

TEST_CASE("fuzzy metrics match the oracle transcription on random grids") {
    std::mt19937_64 gen(2024);
    for (int trial = 0; trial < 1000; ++trial) {
        Grid a = random_grid(gen);
        Grid m(a.height(), a.width());
        static const double levels[] = {0.0, 0.25, 0.5, 0.75, 1.0};
        std::uniform_int_distribution<int> lv(0, 4);
        for (size_t i = 0; i < m.size(); ++i) m[i] = levels[lv(gen)];

        auto check_pair = [&](MetricValue got, bool denom_ok, double want) {
            if (!denom_ok) {
                CHECK_FALSE(got.has_value());
            } else {
                REQUIRE(got.has_value());
                CHECK(std::abs(*got - want) <= 1e-9);
            }
        };
        double sum_a = 0, sum_m = 0, sum_not_m = 0;
        for (size_t i = 0; i < a.size(); ++i) {
            sum_a += a[i];
            sum_m += m[i];
            sum_not_m += 1 - m[i];
        }
        check_pair(fuzzy_f1(a, m), sum_a + sum_m > 0, sum_a + sum_m > 0 ? OracleFuzzy::f1(a, m) : 0);
        check_pair(fuzzy_sensitivity(a, m), sum_m > 0, sum_m > 0 ? OracleFuzzy::sensitivity(a, m) : 0);
        check_pair(fuzzy_specificity(a, m), sum_not_m > 0,
                   sum_not_m > 0 ? OracleFuzzy::specificity(a, m) : 0);
    }
}

TEST_CASE("fuzzy F1 equals confusion-matrix Dice on binary grids") {
    std::mt19937_64 gen(77);
    for (int trial = 0; trial < 200; ++trial) {
        std::uniform_int_distribution<int> side(1, 16);
        const int h = side(gen), w = side(gen);
        Grid a = random_binary_grid(gen, h, w);
        Grid m = random_binary_grid(gen, h, w);
        long tp = 0, fp = 0, fn = 0;
        for (size_t i = 0; i < a.size(); ++i) {
            tp += a[i] == 1.0 && m[i] == 1.0;
            fp += a[i] == 1.0 && m[i] == 0.0;
            fn += a[i] == 0.0 && m[i] == 1.0;
        }
        MetricValue got = fuzzy_f1(a, m);
        if (2 * tp + fp + fn == 0) {
            CHECK_FALSE(got.has_value());
        } else {
            CHECK(*got == 2.0 * tp / static_cast<double>(2 * tp + fp + fn));
        }
    }
}

TEST_CASE("fuzzy metric properties: symmetry, monotonicity, range") {
    std::mt19937_64 gen(99);
    for (int trial = 0; trial < 200; ++trial) {
        Grid a = random_grid(gen, 6);
        Grid m(a.height(), a.width());
        std::uniform_real_distribution<double> u(0, 1);
        for (size_t i = 0; i < m.size(); ++i) m[i] = u(gen);

        MetricValue ab = fuzzy_f1(a, m), ba = fuzzy_f1(m, a);
        CHECK(ab.has_value() == ba.has_value());
        if (ab) CHECK(*ab == doctest::Approx(*ba).epsilon(1e-12));

        for (MetricValue v : {fuzzy_f1(a, m), fuzzy_sensitivity(a, m), fuzzy_specificity(a, m)})
            if (v) CHECK((*v >= 0.0 && *v <= 1.0));

        // raising a pixel of A toward M never lowers F1
        size_t p = 0;
        for (; p < a.size(); ++p)
            if (a[p] < m[p]) break;
        if (p < a.size() && ab) {
            Grid a2 = a;
            a2[p] = std::min(m[p], a2[p] + u(gen) * (m[p] - a2[p]));
            MetricValue raised = fuzzy_f1(a2, m);
            CHECK(*raised >= *ab - 1e-12);
        }
    }

    // fuzzy sensitivity is not symmetric in general: a one-sided counterexample
    Grid a(1, 2, {1.0, 1.0});
    Grid m(1, 2, {1.0, 0.0});
    CHECK(*fuzzy_sensitivity(a, m) == doctest::Approx(1.0));
    CHECK(*fuzzy_sensitivity(m, a) == doctest::Approx(0.5));
}

TEST_CASE("binary_prf frozen cases") {
    // pred=[1,1,0,0], target=[1,0,1,0] -> tp=1 fp=1 fn=1 tn=1
    BinaryMetrics m = binary_prf({1, 1, 0, 0}, {1, 0, 1, 0});
    CHECK(*m.f1 == doctest::Approx(0.5));
    CHECK(*m.sensitivity == doctest::Approx(0.5));
    CHECK(*m.specificity == doctest::Approx(0.5));
    CHECK(m.support == 2);

    BinaryMetrics perfect = binary_prf({1, 0, 1}, {1, 0, 1});
    CHECK(*perfect.f1 == doctest::Approx(1.0));
    CHECK(*perfect.sensitivity == doctest::Approx(1.0));
    CHECK(*perfect.specificity == doctest::Approx(1.0));

    BinaryMetrics no_pos = binary_prf({0, 0}, {0, 0});
    CHECK_FALSE(no_pos.sensitivity.has_value());
    CHECK(no_pos.specificity.has_value());
    CHECK(no_pos.support == 0);
}

TEST_CASE("cohens_kappa frozen cases") {
    CHECK(*cohens_kappa({1, 1, 0, 0}, {1, 1, 0, 0}) == doctest::Approx(1.0));
    // a=[1,1,0,0], b=[1,0,1,0]: p_o = 0.5, p_e = 0.25+0.25 = 0.5 -> kappa 0
    CHECK(*cohens_kappa({1, 1, 0, 0}, {1, 0, 1, 0}) == doctest::Approx(0.0));
    CHECK_FALSE(cohens_kappa({1, 1}, {1, 1}).has_value());
    CHECK_THROWS_AS((void)cohens_kappa({1}, {1, 0}), SchemaError);
}

TEST_CASE("aggregate excludes undefined values and reports both std modes") {
    Aggregate a = aggregate(std::vector<double>{0.5, 0.5, 0.5});
    CHECK(*a.mean == doctest::Approx(0.5));
    CHECK(*a.std == doctest::Approx(0.0));

    std::vector<MetricValue> vals = {0.2, std::nullopt, 0.4};
    Aggregate b = aggregate(vals);
    CHECK(b.defined == 2);
    CHECK(b.excluded == 1);
    CHECK(*b.mean == doctest::Approx(0.3));
    CHECK(*b.std == doctest::Approx(0.1));  // population

    Aggregate c = aggregate(vals, StdMode::kSample);
    CHECK(*c.std == doctest::Approx(std::sqrt(0.02)));

    Aggregate single = aggregate(std::vector<double>{0.7}, StdMode::kSample);
    CHECK(*single.mean == doctest::Approx(0.7));
    CHECK_FALSE(single.std.has_value());
    Aggregate single_pop = aggregate(std::vector<double>{0.7}, StdMode::kPopulation);
    CHECK(*single_pop.std == doctest::Approx(0.0));

    Aggregate empty = aggregate(std::vector<double>{});
    CHECK_FALSE(empty.mean.has_value());
    CHECK(empty.defined == 0);
}

TEST_SUITE_END();
