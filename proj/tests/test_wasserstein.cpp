#include <catch2/catch_amalgamated.hpp>

#include <functional>

#include "eclab/exact.hpp"
#include "eclab/rng.hpp"
#include "eclab/wasserstein.hpp"
#include "helpers.hpp"

using namespace eclab;
using testutil::path_instance;

namespace {

// Test-only oracle: maximize <f, mu-nu> over integer-valued 1-Lipschitz
// potentials by exhaustive search (f[0] fixed at 0; the objective is shift
// invariant). The dual optimum is attained at integer potentials because the
// constraints form a difference system with integer bounds.
Rat dual_bruteforce(const std::vector<std::vector<int>>& points, const std::vector<Rat>& signed_mass) {
    std::size_t n = points.size();
    if (n <= 1) return 0;
    auto ham = [&](std::size_t x, std::size_t y) {
        int d = 0;
        for (std::size_t c = 0; c < points[x].size(); ++c) d += points[x][c] != points[y][c];
        return d;
    };
    int diam = 0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) diam = std::max(diam, ham(i, j));
    std::vector<int> f(n, 0);
    Rat best = 0;
    std::function<void(std::size_t)> rec = [&](std::size_t i) {
        if (i == n) {
            for (std::size_t x = 0; x < n; ++x)
                for (std::size_t y = x + 1; y < n; ++y)
                    if (std::abs(f[x] - f[y]) > ham(x, y)) return;
            Rat v = 0;
            for (std::size_t x = 0; x < n; ++x) v += signed_mass[x] * f[x];
            if (v > best) best = v;
            return;
        }
        for (int v = -diam; v <= diam; ++v) {
            f[i] = v;
            rec(i + 1);
        }
    };
    rec(1);
    return best;
}

DistributionTable random_table(Rng& rng, const std::vector<std::string>& edges, int q, int support) {
    DistributionTable t;
    t.support_edges = edges;
    std::map<std::vector<int>, Rat> acc;
    for (int s = 0; s < support; ++s) {
        std::vector<int> key;
        for (std::size_t i = 0; i < edges.size(); ++i) key.push_back(rng.range(1, q));
        acc[key] += Rat(rng.range(1, 5));
    }
    for (auto& [k, p] : acc) t.entries.emplace_back(k, p);
    t.sort_entries();
    t.normalize();
    return t;
}

} // namespace

TEST_CASE("transport distance basics") {
    SECTION("identical tables give zero") {
        auto ins = path_instance(2, 3);
        auto t = marginal(ins, {}, {"e1", "e2"});
        CHECK(wasserstein_value(t, t) == 0);
    }
    SECTION("pinned path example: 1/2") {
        auto ins = path_instance(2, 3);
        Pinning p1, p2;
        p1.assignments["e1"] = 1;
        p2.assignments["e1"] = 2;
        auto a = marginal(ins, p1, {"e2"});
        auto b = marginal(ins, p2, {"e2"});
        CHECK(wasserstein_value(a, b) == rat(1, 2));
    }
    SECTION("support mismatch rejected") {
        DistributionTable a, b;
        a.support_edges = {"x"};
        b.support_edges = {"y"};
        a.entries.emplace_back(std::vector<int>{1}, Rat(1));
        b.entries.emplace_back(std::vector<int>{1}, Rat(1));
        CHECK_THROWS_AS(wasserstein_hamming(a, b), ShapeError);
    }
    SECTION("unbalanced mass rejected") {
        DistributionTable a, b;
        a.support_edges = b.support_edges = {"x"};
        a.entries.emplace_back(std::vector<int>{1}, Rat(1));
        b.entries.emplace_back(std::vector<int>{2}, rat(1, 2));
        CHECK_THROWS_AS(wasserstein_hamming(a, b), ShapeError);
    }
}

TEST_CASE("transport value matches the brute-force dual oracle") {
    Rng rng(314159);
    int checked = 0;
    for (int trial = 0; trial < 60; ++trial) {
        int m = rng.range(1, 3);
        int q = rng.range(2, 4);
        std::vector<std::string> edges;
        for (int i = 0; i < m; ++i) edges.push_back("e" + std::to_string(i));
        auto a = random_table(rng, edges, q, rng.range(1, 4));
        auto b = random_table(rng, edges, q, rng.range(1, 4));
        auto rep = wasserstein_hamming(a, b);
        CHECK(rep.certificate_ok);

        // oracle works on the signed difference over the union support
        std::map<std::vector<int>, Rat> diff;
        for (const auto& [k, p] : a.entries) diff[k] += p;
        for (const auto& [k, p] : b.entries) diff[k] -= p;
        std::vector<std::vector<int>> pts;
        std::vector<Rat> mass;
        for (const auto& [k, d] : diff)
            if (d != 0) {
                pts.push_back(k);
                mass.push_back(d);
            }
        if (pts.size() <= 6) {
            CHECK(rep.value == dual_bruteforce(pts, mass));
            ++checked;
        }
    }
    CHECK(checked >= 20);
}

TEST_CASE("transport metric properties on random tables") {
    Rng rng(2718);
    std::vector<std::string> edges{"e0", "e1"};
    for (int trial = 0; trial < 15; ++trial) {
        auto a = random_table(rng, edges, 3, 3);
        auto b = random_table(rng, edges, 3, 3);
        auto c = random_table(rng, edges, 3, 3);
        Rat ab = wasserstein_value(a, b);
        Rat ba = wasserstein_value(b, a);
        Rat ac = wasserstein_value(a, c);
        Rat cb = wasserstein_value(c, b);
        CHECK(ab == ba);
        CHECK(ab <= ac + cb);
        // dominates total variation (off-diagonal ground distances are >= 1)
        CHECK(ab >= a.tv_distance(b));
    }
}

TEST_CASE("forced-coordinate reduction telescopes on full-list paths") {
    // pendant discrepancy on a path: every level forces one coordinate, and
    // the value matches the per-level closed form sum_t (q-1)^-t
    for (int k : {3, 4, 5}) {
        for (int q : {3, 5}) {
            auto ins = path_instance(k, q);
            Pinning p1, p2;
            p1.assignments["e1"] = 1;
            p2.assignments["e1"] = 2;
            std::vector<std::string> rest;
            for (int i = 2; i <= k; ++i) rest.push_back("e" + std::to_string(i));
            auto a = marginal(ins, p1, rest);
            auto b = marginal(ins, p2, rest);
            auto rep = wasserstein_hamming(a, b);
            Rat expect = 0, level = 1;
            for (int t = 1; t <= k - 1; ++t) {
                level /= (q - 1);
                expect += level;
            }
            CHECK(rep.value == expect);
            CHECK(rep.reduction_levels == k - 1);
            CHECK(rep.core_pos == 0);
        }
    }
}

TEST_CASE("pair guardrail") {
    WassersteinOptions opts;
    opts.pair_cap = 1;
    DistributionTable a, b;
    a.support_edges = b.support_edges = {"x", "y"};
    a.entries.emplace_back(std::vector<int>{1, 2}, rat(1, 2));
    a.entries.emplace_back(std::vector<int>{2, 1}, rat(1, 2));
    b.entries.emplace_back(std::vector<int>{1, 1}, rat(1, 2));
    b.entries.emplace_back(std::vector<int>{2, 2}, rat(1, 2));
    CHECK_THROWS_AS(wasserstein_hamming(a, b, opts), PairCapError);
}
