#include <catch2/catch_amalgamated.hpp>

#include "eclab/mixing.hpp"
#include "eclab/rng.hpp"

using namespace eclab;

TEST_CASE("regular tree construction") {
    auto ins = regular_tree(3, 2, 4);
    CHECK(ins.num_edges() == 6); // 2 + 4
    CHECK(ins.max_degree() == 3);
    CHECK(ins.is_tree());
    int leaves = 0;
    for (std::size_t e = 0; e < ins.num_edges(); ++e)
        if (edge_level(ins, static_cast<int>(e)) == 2) ++leaves;
    CHECK(leaves == 4);
}

TEST_CASE("hardness witness at the threshold palette") {
    SECTION("degree 3, palette 4, depth 2: disjoint root supports") {
        auto hw = hardness_witness(3, 2);
        CHECK(hw.all_tv_one);
        CHECK(hw.tv_per_edge.at("e:r.0") == 1);
        // parity structure: under tau1 the level-1 edges live in the upper
        // half {3,4}, the pinned level in {1,2}
        TreeEngine e1(hw.instance, hw.tau1);
        auto m = e1.edge_marginal("e:r.0");
        for (const auto& [key, p] : m.entries) CHECK(key[0] >= 3);
    }
    SECTION("degree 4, palette 6, depth 2") {
        auto hw = hardness_witness(4, 2);
        CHECK(hw.all_tv_one);
    }
    SECTION("odd depth rejected") { CHECK_THROWS_AS(hardness_witness(3, 3), FeasibilityError); }
    SECTION("one extra color breaks the witness") {
        int delta = 3, depth = 2, q = 5;
        auto ins = regular_tree(delta, depth, q);
        auto t1 = alternating_pinning(ins, delta, depth, 1);
        auto t2 = alternating_pinning(ins, delta, depth, delta);
        TreeEngine e1(ins, t1), e2(ins, t2);
        Rat tv = e1.edge_marginal("e:r.0").tv_distance(e2.edge_marginal("e:r.0"));
        CHECK(tv < 1);
    }
}

TEST_CASE("wsm experiment decay") {
    SECTION("identical pinnings give zero at all depths") {
        for (int depth : {2, 3}) {
            auto ins = regular_tree(3, depth, 5);
            auto t1 = alternating_pinning(ins, 3, depth, 1);
            TreeEngine e1(ins, t1), e2(ins, t1);
            CHECK(e1.edge_marginal("e:r.0").tv_distance(e2.edge_marginal("e:r.0")) == 0);
        }
    }
    SECTION("degree 3, palette 5: strictly decreasing, fitted rate below 12/13") {
        auto rep = wsm_experiment(3, 5, 2, 6);
        CHECK(rep.strictly_decreasing);
        CHECK(rep.theorem_applies);
        CHECK(rep.theorem_rate == Catch::Approx(12.0 / 13).margin(1e-12));
        CHECK(rep.fitted_rate > 0);
        CHECK(rep.fitted_rate <= 12.0 / 13 + 1e-12);
        CHECK(rep.theorem_respected);
    }
    SECTION("larger palette decays at least as fast") {
        auto base = wsm_experiment(3, 5, 2, 5);
        auto wide = wsm_experiment(3, 12, 2, 5);
        for (std::size_t i = 0; i < base.tv.size(); ++i) CHECK(wide.tv[i] <= base.tv[i]);
    }
}

TEST_CASE("one-step contraction check") {
    SECTION("exactly uniform children give an exactly uniform root") {
        std::vector<std::vector<Rat>> kids(2, std::vector<Rat>(7, rat(1, 7)));
        auto out = wsm_contraction_check(kids, 7, rat(1, 1000), 3);
        CHECK(out.observed_dev == 0);
        CHECK(out.holds);
    }
    SECTION("perturbed children at q=7, dev=1/100") {
        Rng rng(10);
        for (int trial = 0; trial < 12; ++trial) {
            int q = 7, d = 2;
            Rat dev = rat(1, 100);
            std::vector<std::vector<Rat>> kids;
            for (int i = 0; i < d; ++i) {
                // random perturbation summing to zero, within dev
                std::vector<Rat> m(static_cast<std::size_t>(q), rat(1, q));
                for (int t = 0; t < 3; ++t) {
                    int x = rng.range(0, q - 1), y = rng.range(0, q - 1);
                    Rat eps = rat(rng.range(1, 9), 3000); // < 1/100 headroom after 3 rounds
                    m[static_cast<std::size_t>(x)] += eps;
                    m[static_cast<std::size_t>(y)] -= eps;
                }
                bool ok = true;
                for (const auto& v : m)
                    if (abs(v - rat(1, q)) > dev) ok = false;
                if (!ok) m.assign(static_cast<std::size_t>(q), rat(1, q));
                kids.push_back(std::move(m));
            }
            auto out = wsm_contraction_check(kids, q, dev, 3);
            CHECK(out.holds);
            // the spelled-out bound for d = maxdeg-1 = 2, q = 7, dev = 1/100:
            // (4/(7*(1-3/100)))*(1/100)
            CHECK(out.bound_at_delta == rat(4, 7) * rat(1, 100) / (Rat(1) - rat(3, 100)));
        }
    }
    SECTION("single child specialization") {
        std::vector<std::vector<Rat>> kids(1, std::vector<Rat>(5, rat(1, 5)));
        kids[0][0] += rat(1, 200);
        kids[0][1] -= rat(1, 200);
        auto out = wsm_contraction_check(kids, 5, rat(1, 100), 3);
        CHECK(out.holds);
        CHECK(out.bound == rat(2, 5) * rat(1, 100) / (Rat(1) - rat(3, 100)));
    }
    SECTION("hypothesis violations are reported") {
        std::vector<std::vector<Rat>> kids(1, std::vector<Rat>(5, rat(1, 5)));
        kids[0][0] += rat(1, 10);
        kids[0][1] -= rat(1, 10);
        CHECK_THROWS_AS(wsm_contraction_check(kids, 5, rat(1, 100), 3), FeasibilityError);
    }
}

TEST_CASE("ssm experiment") {
    auto rep = ssm_experiment(3, 9, 2, 4, 20250810);
    CHECK(rep.surgery_consistent);
    CHECK(rep.mixing.strictly_decreasing);
    CHECK(rep.mixing.fitted_rate < 1);
    CHECK(rep.beta == validate(regular_tree(3, 3, 9)).beta);
    CHECK_FALSE(rep.theorem_applies); // beta far below maxdeg + 50 here
}
