#include <catch2/catch_amalgamated.hpp>

#include "eclab/mixing.hpp"
#include "eclab/rng.hpp"
#include "eclab/trickledown.hpp"
#include "helpers.hpp"

using namespace eclab;
using testutil::full_list;
using testutil::star_instance;

namespace {

// A fan of `d` edges at vertex "c" with a pendant path of length 2 below each
// fan edge, so weight regions sit two levels away from the fan.
Instance fan_with_tails(int d, int q) {
    std::vector<std::string> verts{"c"};
    std::vector<std::tuple<std::string, std::string, std::string, std::vector<int>>> specs;
    for (int i = 1; i <= d; ++i) {
        std::string mid = "m" + std::to_string(i), low = "w" + std::to_string(i), leaf = "z" + std::to_string(i);
        verts.push_back(mid);
        verts.push_back(low);
        verts.push_back(leaf);
        specs.emplace_back("e" + std::to_string(i), "c", mid, full_list(q));
        specs.emplace_back("t" + std::to_string(i), mid, low, full_list(q));
        specs.emplace_back("u" + std::to_string(i), low, leaf, full_list(q));
    }
    return Instance::make(q, verts, specs, "c");
}

WeightedBoundary deep_weights(const Instance& ins, int d, Rng& rng) {
    WeightedBoundary wb;
    for (int i = 1; i <= d; ++i) {
        WeightRegion r;
        r.edges = {"u" + std::to_string(i)};
        for (int c : ins.edges[ins.edge_index(r.edges[0])].list)
            r.weights[{c}] = rat(rng.range(1, 9), rng.range(1, 9));
        wb.regions.push_back(std::move(r));
    }
    return wb;
}

} // namespace

TEST_CASE("complex construction on a uniform 2-edge fan") {
    auto ins = star_instance(2, 3, "c");
    auto st = build_complex(ins, {}, "c");
    CHECK(st.dim() == 2);
    CHECK(st.index.size() == 6);

    // top distribution is uniform over the six ordered pairs
    auto fan = st.fan_distribution();
    for (const auto& v : fan.values) CHECK(v == rat(1, 6));

    // single-extension marginal: each (edge, color) carries 1/3 of its edge's
    // mass, halved by the dimension normalization
    Face empty;
    auto pi = st.link_pi(empty);
    for (std::size_t x = 0; x < pi.size(); ++x) CHECK(pi[x] == rat(1, 6));
    Rat s = 0;
    for (const auto& p : pi) s += p;
    CHECK(s == 1);

    // walk from a pinned pair: the remaining edge is uniform over the other
    // two colors
    Face f{{0, 1}};
    auto pi_f = st.link_pi(f);
    CHECK(pi_f[st.index.at(1, 2)] == rat(1, 2));
    CHECK(pi_f[st.index.at(1, 3)] == rat(1, 2));
    CHECK(pi_f[st.index.at(1, 1)] == 0);
}

TEST_CASE("reversibility of the link walk") {
    Rng rng(2025);
    for (int trial = 0; trial < 5; ++trial) {
        int d = 3, q = 6;
        auto ins = fan_with_tails(d, q);
        auto wb = deep_weights(ins, d, rng);
        auto st = build_complex(ins, wb, "c");
        Face empty;
        auto pi = st.link_pi(empty);
        auto p = st.link_walk(empty, pi);
        std::size_t n = st.index.size();
        for (std::size_t x = 0; x < n; ++x) {
            Rat row = 0;
            for (std::size_t y = 0; y < n; ++y) {
                CHECK(pi[x] * p[x][y] == pi[y] * p[y][x]);
                row += p[x][y];
            }
            if (pi[x] != 0) CHECK(row == 1); // rows sum to one on the support
        }
    }
}

TEST_CASE("complex rejects regions touching the fan") {
    auto ins = fan_with_tails(2, 5);
    WeightedBoundary wb;
    WeightRegion r;
    r.edges = {"t1"}; // adjacent to fan edge e1
    for (int c = 1; c <= 5; ++c) r.weights[{c}] = 1;
    wb.regions.push_back(r);
    CHECK_THROWS_AS(build_complex(ins, wb, "c"), FeasibilityError);
}

TEST_CASE("weighted quantity bounds") {
    SECTION("bare star: ratios exactly 1/list") {
        auto ins = star_instance(3, 7, "c");
        auto rep = weighted_quantities(ins, {}, "c");
        for (const auto& [id, q] : rep.q_edge) CHECK(q == 7);
        for (const auto& [id, r] : rep.worst_ratio) CHECK(r == rat(1, 7));
        CHECK(rep.ratio_list_bound_holds);
        CHECK(rep.ratio_slack_bound_holds);
        CHECK(rep.pair_bound_holds);
    }
    SECTION("disjoint lists make the pair sum vanish") {
        auto ins = Instance::make(6, {"c", "a", "b"},
                                  {{"e1", "c", "a", {1, 2, 3}}, {"e2", "c", "b", {4, 5, 6}}});
        auto st = build_complex(ins, {}, "c");
        CHECK(st.q_pair({}, 0, 1) == 0);
    }
    SECTION("weighted tails keep both slack bounds") {
        Rng rng(7);
        for (int trial = 0; trial < 4; ++trial) {
            auto ins = fan_with_tails(3, 8);
            auto wb = deep_weights(ins, 3, rng);
            auto rep = weighted_quantities(ins, wb, "c");
            CHECK(rep.ratio_slack_bound_holds);
            CHECK(rep.pair_bound_holds);
        }
    }
}

TEST_CASE("coefficient sequences") {
    SECTION("delta 3, beta 53") {
        auto co = coefficient_sequences(3, 53);
        CHECK(co.feasible);
        CHECK(co.b2_exact == rat(2, 52 * 52));
        CHECK(co.a.at(2) == 1);
        Rat s = Rat(1) + rat(2, 52);
        CHECK(co.gamma == s * s * s / 52);
        CHECK(co.b.at(3) > 0);
        CHECK(co.b.at(3) <= 0.1);
        // eta formula with natural logs
        double l = std::log(3.0);
        CHECK(co.eta == Catch::Approx((1 + (6 + 80.0) * l * l) / 3 + 1.0 / 9).margin(1e-12));
    }
    SECTION("infeasibility is a result, not an error") {
        auto co = coefficient_sequences(3, 3);
        CHECK_FALSE(co.feasible);
        CHECK(co.first_failing_k >= 2);
    }
    SECTION("beta >= delta + 50 is feasible for small delta") {
        for (int delta : {3, 4, 5}) {
            auto co = coefficient_sequences(delta, delta + 50);
            CHECK(co.feasible);
        }
    }
}

TEST_CASE("base case inequality") {
    SECTION("uniform 2-edge fan, q=3, exact mode") {
        auto ins = star_instance(2, 3, "c");
        auto st = build_complex(ins, {}, "c");
        auto co = coefficient_sequences(3, st.beta >= 2 ? st.beta : 2);
        Face empty;
        auto res = base_case_check(st, co, empty, /*exact_mode=*/true);
        CHECK(res.lower.ok);
        CHECK(res.exact_checked);
        CHECK(res.exact_lower_holds);
    }
    SECTION("weighted fans at large slack: both sides hold") {
        Rng rng(99);
        auto ins = fan_with_tails(3, 57); // fan edges have degree 4 => slack 53
        REQUIRE(validate(ins).beta >= 53);
        auto wb = deep_weights(ins, 3, rng);
        auto st = build_complex(ins, wb, "c");
        auto co = coefficient_sequences(3, st.beta);
        for (int c1 : {1, 5, 9}) {
            Face f{{0, c1}};
            auto res = base_case_check(st, co, f, false);
            INFO("pin color " << c1);
            CHECK(res.lower.ok);
            CHECK(res.upper.ok);
        }
    }
    SECTION("degenerate color: zero weight on one side still passes") {
        auto ins = Instance::make(4, {"c", "a", "b"},
                                  {{"e1", "c", "a", {1, 2, 3}}, {"e2", "c", "b", {2, 3, 4}}});
        auto st = build_complex(ins, {}, "c");
        auto co = coefficient_sequences(3, 2);
        Face empty;
        auto res = base_case_check(st, co, empty, true);
        CHECK(res.lower.ok);
        CHECK(res.exact_lower_holds);
    }
}

TEST_CASE("induction and final bound at beta = delta + 50") {
    Rng rng(424242);
    auto ins = fan_with_tails(3, 57);
    auto wb = deep_weights(ins, 3, rng);
    auto st = build_complex(ins, wb, "c");
    REQUIRE(st.beta >= 53);
    auto co = coefficient_sequences(3, st.beta);
    REQUIRE(co.feasible);

    SECTION("codimension-3 link certificate") {
        Face empty;
        auto res = induction_check(st, co, empty);
        CHECK(res.upper.ok);
        CHECK(res.induction.ok);
        CHECK(res.expectation_identity);
        CHECK(res.a_consistency);
    }
    SECTION("final walk bound and exact covariance identities") {
        auto res = final_bound_check(st, co.eta);
        CHECK(res.walk_bound_ok);
        CHECK(res.identities_exact);
        CHECK(res.reversible);
        CHECK(res.si_ok);
        CHECK(res.measured_si < 1 + co.eta); // loose at small degree; also reported
    }
    SECTION("point-mass weights degenerate consistently") {
        auto ins2 = star_instance(2, 4, "c");
        auto st2 = build_complex(ins2, {}, "c");
        // concentrate each fan edge on one color
        st2.weight[0] = {{1, Rat(1)}};
        st2.weight[1] = {{2, Rat(1)}};
        st2.lists[0] = {1};
        st2.lists[1] = {2};
        Broom b;
        b.edge_ids = st2.edge_ids;
        b.lists = st2.lists;
        st2.index = PairIndex::over_broom(b);
        auto res = final_bound_check(st2, 1.0);
        CHECK(res.identities_exact);
        CHECK(res.measured_si == 0.0);
    }
}

TEST_CASE("fan covariance identity against the recursion side") {
    // mean and covariance of the fan distribution agree with the walk
    // matrices exactly, including under nonuniform weights
    Rng rng(5);
    auto ins = fan_with_tails(2, 5);
    auto wb = deep_weights(ins, 2, rng);
    auto st = build_complex(ins, wb, "c");
    auto res = final_bound_check(st, eta_delta(3));
    CHECK(res.identities_exact);
    CHECK(res.reversible);
}
