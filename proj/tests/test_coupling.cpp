#include <catch2/catch_amalgamated.hpp>

#include "eclab/coupling.hpp"
#include "eclab/exact.hpp"
#include "eclab/rng.hpp"
#include "helpers.hpp"

using namespace eclab;
using testutil::full_list;
using testutil::path_instance;

TEST_CASE("greedy decomposition at a pendant edge") {
    SECTION("both endpoints pendant: conditionals coincide") {
        auto ins = path_instance(1, 4);
        auto rep = greedy_decomposition(ins, "e1", 1, 2);
        CHECK(rep.w1 == 0);
        CHECK(rep.decomposition_residual == 0);
        CHECK(rep.off_neighborhood_equal);
    }
    SECTION("3-edge path with q=5: residual exactly zero") {
        auto ins = path_instance(3, 5);
        auto rep = greedy_decomposition(ins, "e1", 1, 2);
        CHECK(rep.decomposition_residual == 0);
        CHECK(rep.off_neighborhood_equal);
        // swap ratios obey the slack bound 1/(beta-1)
        CHECK(rep.ratios_within_bound);
        long beta = validate(ins).beta;
        CHECK(rep.gamma_delta_bound == rat(1, beta - 1));
        for (const auto& [eid, g] : rep.gamma) CHECK(g <= rep.gamma_delta_bound);
        for (const auto& [eid, d] : rep.delta) CHECK(d <= rep.gamma_delta_bound);
    }
    SECTION("non-pendant edge rejected") {
        auto ins = path_instance(3, 5);
        CHECK_THROWS_AS(greedy_decomposition(ins, "e2", 1, 2), FeasibilityError);
    }
    SECTION("residual zero on a branching instance") {
        // star with a tail: pendant edge hangs off the tail end
        auto ins = Instance::make(
            7, {"a", "b", "c", "d", "e"},
            {{"t1", "a", "b", full_list(7)}, {"t2", "b", "c", full_list(7)},
             {"s1", "c", "d", full_list(7)}, {"s2", "c", "e", full_list(7)}});
        auto rep = greedy_decomposition(ins, "t1", 3, 6);
        CHECK(rep.decomposition_residual == 0);
        CHECK(rep.off_neighborhood_equal);
        CHECK(rep.ratios_within_bound);
    }
    SECTION("decomposition coefficients certify the transport bound") {
        // W(mu_a, mu_b) <= sum of coefficients times the distances between the
        // decomposition's own term pairs
        auto ins = path_instance(3, 5);
        auto rep = greedy_decomposition(ins, "e1", 1, 2);
        Pinning pa, pb;
        pa.assignments["e1"] = 1;
        pb.assignments["e1"] = 2;
        auto mu_a = marginal(ins, pa, {"e2", "e3"});
        auto mu_b = marginal(ins, pb, {"e2", "e3"});
        Rat denom = 1;
        for (const auto& [eid, g] : rep.gamma) denom += std::max(g, rep.delta.at(eid));
        Rat rhs = 0;
        for (const auto& [eid, g] : rep.gamma) {
            Rat d = rep.delta.at(eid);
            int pos = mu_a.edge_pos(eid);
            auto on = [pos](int color) {
                return [pos, color](const std::vector<int>& key) { return key[static_cast<std::size_t>(pos)] == color; };
            };
            if (std::min(g, d) > 0)
                rhs += std::min(g, d) / denom * wasserstein_value(mu_a.condition(on(2)), mu_b.condition(on(1)));
            if (g > d) rhs += (g - d) / denom * wasserstein_value(mu_a.condition(on(2)), mu_b);
            if (d > g) rhs += (d - g) / denom * wasserstein_value(mu_a, mu_b.condition(on(1)));
        }
        CHECK(wasserstein_value(mu_a, mu_b) <= rhs);
    }
}

TEST_CASE("coupling independence audit") {
    SECTION("single edge: distance zero after conditioning") {
        std::vector<Instance> fam{path_instance(1, 3)};
        auto rep = coupling_independence_audit(fam, Rat(1));
        REQUIRE(rep.rejected.empty());
        REQUIRE_FALSE(rep.records.empty());
        for (const auto& rec : rep.records) {
            CHECK(rec.w_rest == 0);
            CHECK(rec.w_full == 1);
        }
        CHECK(rep.all_within_bound);
    }
    SECTION("eps=1 family: bound 3 and exact residuals") {
        // paths with full [7] lists have slack >= 5 = (1+1)*2+1 for maxdeg 2
        std::vector<Instance> fam{path_instance(2, 7), path_instance(3, 7), path_instance(4, 7)};
        auto rep = coupling_independence_audit(fam, Rat(1));
        CHECK(rep.rejected.empty());
        CHECK(rep.all_within_bound);
        CHECK(rep.all_residuals_zero);
        CHECK(rep.split_inequality_ok);
        CHECK(rep.max_w_full <= rep.bound);
        CHECK(rep.bound == 3);
    }
    SECTION("hypothesis violations are rejected with diagnosis") {
        std::vector<Instance> fam{path_instance(3, 4)}; // slack 2 < 5
        auto rep = coupling_independence_audit(fam, Rat(1));
        CHECK(rep.rejected.size() == 1);
        CHECK(rep.records.empty());
    }
    SECTION("pendant-path family: observed distance grows with length below 1/eps + 1") {
        // eps = 1: the remaining-edge distance must stay below 1/eps = 1
        Rat prev = 0;
        for (int k : {2, 3, 4, 5}) {
            auto ins = path_instance(k, 7);
            auto dec = greedy_decomposition(ins, "e1", 1, 2);
            CHECK(dec.w1 >= prev);
            CHECK(dec.w1 < 1);
            prev = dec.w1;
        }
    }
}
