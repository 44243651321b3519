#include <catch2/catch_amalgamated.hpp>

#include "eclab/bridge.hpp"
#include "eclab/exact.hpp"
#include "eclab/jacobian.hpp"
#include "eclab/rng.hpp"
#include "helpers.hpp"

using namespace eclab;
using testutil::full_list;
using testutil::make_broom;

namespace {

// Random positive children over depth-2 shape: root fan of d slots, child i a
// fan of s_i edges; entries in [lo, 1].
struct Depth2 {
    std::vector<BroomVector<double>> children;
    BroomVector<double> root;
};

Depth2 random_depth2(Rng& rng, int d, int q, double lo = 1e-3) {
    std::vector<BroomVector<double>> children;
    auto root_broom = std::make_shared<Broom>();
    for (int i = 0; i < d; ++i) {
        int s = rng.range(1, 2);
        std::vector<std::vector<int>> lists(static_cast<std::size_t>(s), full_list(q));
        auto cb = make_broom(lists);
        BroomVector<double> c;
        c.broom = cb;
        for (std::size_t t = 0; t < cb->colorings().size(); ++t) c.values.push_back(lo + (1 - lo) * rng.unit());
        double tot = c.total();
        for (auto& v : c.values) v /= tot;
        c.normalized = true;
        children.push_back(std::move(c));
        root_broom->edge_ids.push_back("r" + std::to_string(i));
        root_broom->lists.push_back(full_list(q));
    }
    Depth2 out;
    out.root = recurse(children, root_broom);
    out.children = std::move(children);
    return out;
}

} // namespace

TEST_CASE("finite differences confirm the Jacobian") {
    Rng rng(1234);
    for (int trial = 0; trial < 6; ++trial) {
        auto d2 = random_depth2(rng, rng.range(1, 2), rng.range(4, 6));
        auto b = jacobian_bundle(d2.children, d2.root);
        auto frng = rng.fork(static_cast<std::uint64_t>(trial));
        double err = finite_difference_check(b, 10, frng);
        CHECK(err <= 1e-5);
    }
}

TEST_CASE("jacobian rejects zero avoid mass") {
    auto cb = make_broom({{1}});
    BroomVector<double> c;
    c.broom = cb;
    c.values = {1.0};
    auto root = make_broom({{1, 2}});
    auto out = recurse<double>({c}, root);
    CHECK_THROWS_AS(jacobian_bundle({c}, out), SingularityError);
}

TEST_CASE("star case: leaves carry no correlation") {
    int q = 5, d = 3;
    auto root = make_broom({full_list(q), full_list(q), full_list(q)});
    std::vector<BroomVector<double>> children(static_cast<std::size_t>(d), BroomVector<double>::point_mass_empty());
    auto out = recurse(children, root);
    auto b = jacobian_bundle(children, out);
    CHECK(b.pair_transfer.max_abs() <= 1e-14);
    CHECK(b.child_cov_blocks.max_abs() <= 1e-14);
    REQUIRE(b.has_gram);
    CHECK(b.gram.max_abs() <= 1e-14);
    auto rep = dimension_reduction_audit(b, 3);
    CHECK(rep.trace_ok);
    CHECK(rep.domination_ok);
}

TEST_CASE("dimension reduction chain on random depth-2 inputs") {
    Rng rng(88);
    for (int trial = 0; trial < 10; ++trial) {
        auto d2 = random_depth2(rng, 2, 5, 1e-2);
        auto b = jacobian_bundle(d2.children, d2.root);
        auto rep = dimension_reduction_audit(b, 4);
        INFO("trial " << trial);
        CHECK(rep.trace_ok);
        CHECK(rep.domination_ok);
        CHECK(rep.psd_ok);
        CHECK(rep.factorization_residual <= 1e-12);
    }
}

TEST_CASE("covariance on explicit fans") {
    SECTION("uniform 2-edge fan, q=3") {
        auto b = make_broom({full_list(3), full_list(3)});
        auto p = BroomVector<double>::uniform(b);
        auto rep = covariance_report(p);
        // diagonal: 1/3 - 1/9 = 2/9; same-color cross: -1/9; distinct cross: 1/6 - 1/9 = 1/18
        auto at = [&](int i, int c, int j, int c2) { return rep.cov(rep.index.at(i, c), rep.index.at(j, c2)); };
        for (int c = 1; c <= 3; ++c) {
            CHECK(rep.mean_diag[rep.index.at(0, c)] == Catch::Approx(1.0 / 3).margin(1e-15));
            CHECK(at(0, c, 0, c) == Catch::Approx(2.0 / 9).margin(1e-15));
            CHECK(at(0, c, 1, c) == Catch::Approx(-1.0 / 9).margin(1e-15));
        }
        CHECK(at(0, 1, 1, 2) == Catch::Approx(1.0 / 18).margin(1e-15));
        // row sums over colors vanish: sum_c Cov((0,c1),(0,c)) = 0
        for (int c1 = 1; c1 <= 3; ++c1) {
            double s = 0;
            for (int c = 1; c <= 3; ++c) s += at(0, c1, 0, c);
            double s2 = 0;
            for (int c = 1; c <= 3; ++c) s2 += at(0, c1, 1, c);
            CHECK(std::fabs(s) <= 1e-15);
            CHECK(std::fabs(s2) <= 1e-15);
        }
    }
    SECTION("point mass has zero covariance") {
        auto b = make_broom({{1, 2}});
        BroomVector<double> p;
        p.broom = b;
        p.values = {1.0, 0.0};
        auto rep = covariance_report(p);
        CHECK(rep.cov.max_abs() == 0.0);
        CHECK(rep.measured_si_constant == 0.0);
    }
}

TEST_CASE("worst pinning spectrum") {
    SECTION("closed forms") {
        CHECK(worst_pinning_closed_form(3, 9) == Catch::Approx(1.0 / 15).epsilon(1e-12));
        CHECK(worst_pinning_closed_form(4, 12) == Catch::Approx(1.0 / 16).epsilon(1e-12));
    }
    SECTION("numeric transfer norm and Jacobian norm match the closed form") {
        for (auto [delta, q] : std::vector<std::pair<int, int>>{{3, 9}, {3, 12}, {4, 12}, {4, 16}}) {
            auto wp = worst_pinning_instance(delta, q);
            auto b = jacobian_bundle(wp.children, wp.root);
            double tn = spectral_norm(b.pair_transfer);
            double jn = spectral_norm(b.jac);
            INFO("delta=" << delta << " q=" << q);
            CHECK(std::fabs(tn - wp.closed_form) <= 1e-9 * wp.closed_form);
            CHECK(std::fabs(jn * jn - wp.closed_form) <= 1e-9 * wp.closed_form);
            // the Gram and transfer matrices coincide entrywise here
            REQUIRE(b.has_gram);
            CHECK((b.gram - b.pair_transfer).max_abs() <= 1e-13);
        }
    }
    SECTION("threshold scan is computed, not asserted") {
        auto wp = worst_pinning_instance(3, 9);
        CHECK(wp.scan_first_q_below >= 6);
        CHECK(wp.scan_reference == Catch::Approx((3 + std::sqrt(5.0)) / 2 * 3));
        // record: the printed-matrix variant differs from the closed form
        CHECK(wp.displayed_variant != Catch::Approx(wp.closed_form).epsilon(1e-6));
    }
    SECTION("out-of-regime rejected") { CHECK_THROWS_AS(worst_pinning_instance(3, 5), std::domain_error); }
}

TEST_CASE("contraction audit") {
    SECTION("star: zero transfer norm") {
        int q = 7, d = 2;
        auto root = make_broom({full_list(q), full_list(q)});
        std::vector<BroomVector<double>> children(static_cast<std::size_t>(d),
                                                  BroomVector<double>::point_mass_empty());
        auto out = recurse(children, root);
        auto rep = contraction_audit(children, out, q - d, 3, 0.05);
        CHECK(rep.transfer_norm <= 1e-14);
        CHECK(rep.chain_ok);
        CHECK(rep.jac_vs_transfer_ok);
    }
    SECTION("worst pinning: the max-entry expression attains its closed form") {
        int delta = 3, q = 9;
        auto wp = worst_pinning_instance(delta, q);
        auto rep = contraction_audit(wp.children, wp.root, q - delta, delta, 0.01);
        double expected = static_cast<double>(delta - 1) / std::pow(q - 2 * delta + 2, 2);
        CHECK(rep.max_entry_expression == Catch::Approx(expected).epsilon(1e-12));
        CHECK(rep.chain_ok);
        CHECK(rep.jac_vs_transfer_ok);
    }
    SECTION("true-marginal children with large slack satisfy the conclusion") {
        // depth-2 trees with beta = Delta + 50: eta measured, conclusion holds
        int delta = 3;
        int q = 2 * (delta - 1) + delta + 50; // slack beta = q - deg >= Delta+50
        Rng rng(4242);
        std::vector<std::string> verts{"r"};
        std::vector<std::tuple<std::string, std::string, std::string, std::vector<int>>> specs;
        std::vector<std::string> childs;
        for (int i = 0; i < delta - 1; ++i) {
            std::string v = "c" + std::to_string(i);
            verts.push_back(v);
            childs.push_back(v);
            specs.emplace_back("e_" + v, "r", v, full_list(q));
            for (int j = 0; j + 1 < delta; ++j) {
                std::string w = v + std::to_string(j);
                verts.push_back(w);
                specs.emplace_back("e_" + w, v, w, full_list(q));
            }
        }
        auto ins = Instance::make(q, verts, specs, "r");
        long beta = validate(ins).beta;
        REQUIRE(beta >= delta + 50);
        std::vector<BroomVector<double>> children;
        auto root_broom = std::make_shared<Broom>();
        for (const auto& v : childs) {
            auto sub = subtree_instance(ins, v);
            children.push_back(to_broom_vector<double>(broom_at(sub, v), tree_broom_marginal(sub, {}, v)));
            root_broom->edge_ids.push_back("e_" + v);
            root_broom->lists.push_back(full_list(q));
        }
        auto root = recurse(children, root_broom);
        // delta_rate chosen so the hypothesis beta >= 1 + (1+eta)Delta/sqrt(1-2d) holds
        SpectralOptions small_opts;
        small_opts.gram_cap = 0;
        auto rep = contraction_audit(children, root, beta, delta, 0.05, small_opts);
        CHECK(rep.hypothesis_holds);
        CHECK(rep.conclusion_ok);
        CHECK(rep.chain_ok);
    }
}
