#pragma once

// The acceptance battery: every headline check the project promises, each run
// at its stated tolerance, reported as one pass/fail record. The CLI `suite`
// command and the dedicated acceptance binary both run through here.

#include <atomic>
#include <chrono>
#include <cmath>
#include <functional>
#include <string>
#include <thread>
#include <vector>

#include "eclab/bridge.hpp"
#include "eclab/coupling.hpp"
#include "eclab/exact.hpp"
#include "eclab/generators.hpp"
#include "eclab/jacobian.hpp"
#include "eclab/mixing.hpp"
#include "eclab/report.hpp"
#include "eclab/trickledown.hpp"
#include "eclab/wasserstein.hpp"

namespace eclab {

struct SuiteOptions {
    std::uint64_t seed = 20250810;
    int jobs = 0; // 0 = hardware concurrency
    double enum_cap = 1e8;
    std::size_t matrix_cap = 5000;
};

struct CriterionResult {
    int id = 0;
    std::string name;
    bool pass = false;
    double seconds = 0;
    std::string detail;
};

namespace detail_suite {

// Run fn(i) for i in [0, n) on a small worker pool; exceptions become
// failures. Results are collected by index so output order is deterministic.
inline std::vector<std::string> parallel_cells(std::size_t n, int jobs, const std::function<std::string(std::size_t)>& fn) {
    if (jobs <= 0) jobs = static_cast<int>(std::thread::hardware_concurrency());
    if (jobs <= 0) jobs = 1;
    std::vector<std::string> results(n);
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        while (true) {
            std::size_t i = next.fetch_add(1);
            if (i >= n) break;
            try {
                results[i] = fn(i);
            } catch (const std::exception& e) {
                results[i] = std::string("cell ") + std::to_string(i) + " threw: " + e.what();
            }
        }
    };
    std::vector<std::thread> pool;
    for (int t = 1; t < jobs; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    return results;
}

inline std::string first_failure(const std::vector<std::string>& cells) {
    for (const auto& c : cells)
        if (!c.empty()) return c;
    return {};
}

template <class F>
CriterionResult timed(int id, std::string name, F&& body) {
    CriterionResult r;
    r.id = id;
    r.name = std::move(name);
    auto t0 = std::chrono::steady_clock::now();
    try {
        r.detail = body();
        r.pass = r.detail.empty() || r.detail.rfind("ok", 0) == 0;
    } catch (const std::exception& e) {
        r.pass = false;
        r.detail = std::string("exception: ") + e.what();
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return r;
}

} // namespace detail_suite

// 1. brute-force count equals tree-DP count on 200 seeded random trees
inline CriterionResult criterion_counting(const SuiteOptions& opt) {
    return detail_suite::timed(1, "counting oracle agreement (enumeration vs tree DP, 200 trees)", [&]() {
        auto t0 = std::chrono::steady_clock::now();
        auto cells = detail_suite::parallel_cells(200, opt.jobs, [&](std::size_t i) -> std::string {
            Rng rng = Rng(opt.seed).fork(1000 + i);
            int q = rng.range(3, 7);
            auto ins = random_tree_instance(rng, 12, 4, q);
            ExactOptions eo;
            eo.enum_cap = opt.enum_cap;
            Rat brute = count(ins, {}, eo);
            Rat dp = tree_count(ins);
            if (brute != dp)
                return "tree " + std::to_string(i) + ": enumeration " + rat_to_string(brute) + " != DP " +
                       rat_to_string(dp);
            return {};
        });
        double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        auto fail = detail_suite::first_failure(cells);
        if (!fail.empty()) return fail;
        if (secs >= 60.0) return "agreement held but runtime " + format_float17(secs) + " s exceeded 60 s";
        return std::string("ok: 200 exact agreements in ") + format_float17(secs) + " s";
    });
}

// 2. recursion composition equals the direct conditional fan marginal
inline CriterionResult criterion_recursion_equals_marginal(const SuiteOptions& opt) {
    return detail_suite::timed(2, "recursion composition equals fan marginal (100 trees, exact)", [&]() {
        auto cells = detail_suite::parallel_cells(100, opt.jobs, [&](std::size_t i) -> std::string {
            Rng rng = Rng(opt.seed).fork(2000 + i);
            int q = rng.range(5, 7);
            auto ins = random_depth_tree(rng, rng.range(2, 4), rng.range(2, 3), q);
            Pinning pin = random_leaf_pinning(rng, ins, 0.3);
            DistributionTable direct;
            try {
                direct = tree_broom_marginal(ins, pin, "v0");
            } catch (const FeasibilityError&) {
                pin = {};
                direct = tree_broom_marginal(ins, pin, "v0");
            }
            auto composed = recurse_to_root<Rat>(ins, pin);
            if (to_table(composed).entries != direct.entries) return "tree " + std::to_string(i) + ": mismatch";
            return {};
        });
        auto fail = detail_suite::first_failure(cells);
        return fail.empty() ? std::string("ok: 100 exact equalities") : fail;
    });
}

// 3. marginal-bound battery, 500 instances, zero violations
inline CriterionResult criterion_marginal_bounds(const SuiteOptions& opt) {
    return detail_suite::timed(3, "marginal bound battery (500 instances, zero violations)", [&]() {
        auto cells = detail_suite::parallel_cells(500, opt.jobs, [&](std::size_t i) -> std::string {
            Rng rng = Rng(opt.seed).fork(3000 + i);
            int delta = (i % 2 == 0) ? 3 : 4;
            long beta = 2 + static_cast<long>(i / 2) % (delta + 5); // 2 .. delta+6
            if (i % 5 < 3) {
                // enumeration audit on a small random graph with controlled slack
                int n_edges = rng.range(2, beta > 5 ? 4 : 5);
                std::vector<std::string> verts{"v0"};
                std::vector<int> deg{0};
                std::vector<std::pair<int, int>> shape;
                for (int e = 1; e <= n_edges; ++e) {
                    int parent;
                    int guard = 0;
                    do {
                        parent = rng.range(0, e - 1);
                    } while (deg[static_cast<std::size_t>(parent)] >= delta && ++guard < 32);
                    if (deg[static_cast<std::size_t>(parent)] >= delta) break;
                    deg[static_cast<std::size_t>(parent)]++;
                    deg.push_back(1);
                    verts.push_back("v" + std::to_string(e));
                    shape.emplace_back(parent, e);
                }
                // per-edge degree within the shape
                auto edge_deg = [&](std::size_t idx) {
                    auto [u, v] = shape[idx];
                    return deg[static_cast<std::size_t>(u)] + deg[static_cast<std::size_t>(v)] - 2;
                };
                int q = 2 * delta + static_cast<int>(beta) + 4;
                std::vector<std::tuple<std::string, std::string, std::string, std::vector<int>>> specs;
                for (std::size_t idx = 0; idx < shape.size(); ++idx) {
                    int size = edge_deg(idx) + static_cast<int>(beta) + rng.range(0, 1);
                    std::vector<int> palette(static_cast<std::size_t>(q));
                    for (int c = 1; c <= q; ++c) palette[static_cast<std::size_t>(c - 1)] = c;
                    rng.shuffle(palette);
                    std::vector<int> list(palette.begin(), palette.begin() + std::min(size, q));
                    specs.emplace_back("e" + std::to_string(idx), "v" + std::to_string(shape[idx].first),
                                       "v" + std::to_string(shape[idx].second), list);
                }
                auto ins = Instance::make(q, verts, specs);
                ExactOptions eo;
                eo.enum_cap = opt.enum_cap;
                auto rep = marginal_bound_audit(ins, {}, eo);
                if (!rep.all_hold) return "instance " + std::to_string(i) + ": bound violated";
            } else {
                // depth-2 recursion bounds with true subtree marginals
                int q = 2 * (delta - 1) + static_cast<int>(beta); // slack beta at the fan edges
                auto ins = random_depth_tree(rng, 2, delta - 1, q);
                long actual_beta = validate(ins).beta;
                if (actual_beta < 2) return {};
                std::vector<BroomVector<Rat>> children;
                auto root_broom = broom_at(ins, "v0");
                TreeEngine eng(ins, {});
                for (int e : eng.child_edges(ins.vertex_index("v0"))) {
                    const auto& er = ins.edges[static_cast<std::size_t>(e)];
                    std::string child = ins.vertex_ids[static_cast<std::size_t>(
                        eng.parent_edge(er.u) == e ? er.u : er.v)];
                    auto sub = subtree_instance(ins, child);
                    auto cb = broom_at(sub, child);
                    if (cb->size() == 0)
                        children.push_back(BroomVector<Rat>::point_mass_empty());
                    else
                        children.push_back(to_broom_vector<Rat>(cb, tree_broom_marginal(sub, {}, child)));
                }
                auto root = recurse(children, root_broom);
                auto rep = check_condition_marginal(children, root, actual_beta);
                if (!rep.holds) return "instance " + std::to_string(i) + ": recursion bound violated";
            }
            return {};
        });
        auto fail = detail_suite::first_failure(cells);
        return fail.empty() ? std::string("ok: zero violations across 500 instances") : fail;
    });
}

// 4. worst-pinning spectrum matches the closed form at 1e-9 relative
inline CriterionResult criterion_worst_pinning(const SuiteOptions& opt) {
    (void)opt;
    return detail_suite::timed(4, "worst-pinning spectrum matches closed form (4 cases, 1e-9 rel)", [&]() {
        for (auto [delta, q] : std::vector<std::pair<int, int>>{{3, 9}, {3, 12}, {4, 12}, {4, 16}}) {
            auto wp = worst_pinning_instance(delta, q);
            auto b = jacobian_bundle(wp.children, wp.root);
            double tn = spectral_norm(b.pair_transfer);
            double jn2 = b.jac_norm_sq();
            if (std::fabs(tn - wp.closed_form) > 1e-9 * wp.closed_form)
                return "degree " + std::to_string(delta) + ", q " + std::to_string(q) + ": transfer norm " +
                       format_float17(tn) + " vs " + format_float17(wp.closed_form);
            if (std::fabs(jn2 - wp.closed_form) > 1e-9 * wp.closed_form)
                return "degree " + std::to_string(delta) + ", q " + std::to_string(q) + ": jacobian norm^2 " +
                       format_float17(jn2) + " vs " + format_float17(wp.closed_form);
        }
        return std::string("ok: all four cases within 1e-9 relative");
    });
}

// 5. dimension-reduction chain on 50 seeded depth-2 inputs
inline CriterionResult criterion_dimension_reduction(const SuiteOptions& opt) {
    return detail_suite::timed(5, "dimension reduction chain (50 inputs: trace, domination, factorization)", [&]() {
        auto cells = detail_suite::parallel_cells(50, opt.jobs, [&](std::size_t i) -> std::string {
            Rng rng = Rng(opt.seed).fork(5000 + i);
            auto in = random_depth2_inputs(rng, 2, rng.range(5, 7), 1e-3);
            auto b = jacobian_bundle(in.children, in.root);
            auto rep = dimension_reduction_audit(b, 4);
            if (!rep.trace_ok) return "input " + std::to_string(i) + ": trace identity beyond 1e-9";
            if (!rep.domination_ok) return "input " + std::to_string(i) + ": gram eigenvalue above transfer norm";
            if (!rep.psd_ok) return "input " + std::to_string(i) + ": gram not PSD within tolerance";
            if (rep.factorization_residual > 1e-12)
                return "input " + std::to_string(i) + ": factorization residual " +
                       format_float17(rep.factorization_residual);
            return {};
        });
        auto fail = detail_suite::first_failure(cells);
        return fail.empty() ? std::string("ok: 50 inputs, k<=4 traces, domination, factorization") : fail;
    });
}

// 6. jacobian agrees with central finite differences
inline CriterionResult criterion_jacobian_fd(const SuiteOptions& opt) {
    return detail_suite::timed(6, "jacobian finite-difference agreement (50 inputs x 10 directions, 1e-5)", [&]() {
        auto cells = detail_suite::parallel_cells(50, opt.jobs, [&](std::size_t i) -> std::string {
            Rng rng = Rng(opt.seed).fork(6000 + i);
            auto in = random_depth2_inputs(rng, rng.range(1, 2), rng.range(4, 6), 1e-2);
            auto b = jacobian_bundle(in.children, in.root);
            auto frng = rng.fork(17);
            double err = finite_difference_check(b, 10, frng);
            if (err > 1e-5) return "input " + std::to_string(i) + ": FD error " + format_float17(err);
            return {};
        });
        auto fail = detail_suite::first_failure(cells);
        return fail.empty() ? std::string("ok: worst relative FD error within 1e-5") : fail;
    });
}

// 7. coupling decomposition and the transport bound over the catalog
inline CriterionResult criterion_coupling(const SuiteOptions& opt) {
    return detail_suite::timed(7, "coupling decomposition exact + transport bound 3 (doubled-slack catalog)", [&]() {
        auto fam = coupling_catalog();
        // audit instances in parallel
        auto cells = detail_suite::parallel_cells(fam.size(), opt.jobs, [&](std::size_t i) -> std::string {
            ExactOptions eo;
            eo.enum_cap = opt.enum_cap;
            auto rep = coupling_independence_audit({fam[i]}, Rat(1), eo);
            if (!rep.rejected.empty()) return "instance " + std::to_string(i) + " rejected: " + rep.rejected.front();
            if (!rep.all_residuals_zero) return "instance " + std::to_string(i) + ": nonzero residual";
            if (!rep.all_within_bound)
                return "instance " + std::to_string(i) + ": distance above 3 (max " + rat_to_string(rep.max_w_full) +
                       ")";
            if (!rep.split_inequality_ok) return "instance " + std::to_string(i) + ": split inequality violated";
            return {};
        });
        auto fail = detail_suite::first_failure(cells);
        return fail.empty() ? std::string("ok: all pendant discrepancies, residual 0, distances <= 3") : fail;
    });
}

// 8. threshold behavior: blocked at 2*delta-2 colors, decaying at 2*delta-1
inline CriterionResult criterion_wsm_threshold(const SuiteOptions& opt) {
    (void)opt;
    return detail_suite::timed(8, "mixing threshold (witness at q=2D-2; decay and rate at q=2D-1)", [&]() {
        auto t0 = std::chrono::steady_clock::now();
        for (int delta : {3, 4}) {
            auto hw = hardness_witness(delta, 2);
            if (!hw.all_tv_one) return "witness at degree " + std::to_string(delta) + " lost total variation 1";
        }
        auto rep = wsm_experiment(3, 5, 2, 6);
        if (!rep.strictly_decreasing) return std::string("distances at q=5 not strictly decreasing");
        if (!(rep.fitted_rate > 0) || rep.fitted_rate > 12.0 / 13 + 1e-12)
            return "fitted tail rate " + format_float17(rep.fitted_rate) + " above 12/13";
        double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (secs >= 300.0) return "checks held but runtime " + format_float17(secs) + " s exceeded 5 minutes";
        return "ok: witnesses exact, fitted rate " + format_float17(rep.fitted_rate) + " <= 12/13 in " +
               format_float17(secs) + " s";
    });
}

// 9. one-step contraction bound, 100 seeded configurations
inline CriterionResult criterion_contraction_step(const SuiteOptions& opt) {
    return detail_suite::timed(9, "one-step contraction bound (100 perturbed configurations)", [&]() {
        auto cells = detail_suite::parallel_cells(100, opt.jobs, [&](std::size_t i) -> std::string {
            Rng rng = Rng(opt.seed).fork(9000 + i);
            int q = (i % 2 == 0) ? 7 : 9;
            Rat dev = (i % 4 < 2) ? rat(1, 1000) : rat(1, 100);
            int d = rng.range(1, 2); // children of the root, at most maxdeg-1 = 2
            std::vector<std::vector<Rat>> kids;
            for (int c = 0; c < d; ++c) {
                std::vector<Rat> m(static_cast<std::size_t>(q), rat(1, q));
                for (int t = 0; t < 4; ++t) {
                    int x = rng.range(0, q - 1), y = rng.range(0, q - 1);
                    Rat eps = dev * rat(rng.range(1, 9), 40);
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
            if (!out.holds)
                return "config " + std::to_string(i) + ": observed " + rat_to_string(out.observed_dev) +
                       " above bound " + rat_to_string(out.bound);
            return {};
        });
        auto fail = detail_suite::first_failure(cells);
        return fail.empty() ? std::string("ok: zero violations across 100 configurations") : fail;
    });
}

namespace detail_suite {

// weighted fan fixture at slack maxdeg + 50
inline ComplexState certificate_fixture(std::uint64_t seed, int delta, int q) {
    Rng rng(seed);
    std::vector<int> full(static_cast<std::size_t>(q));
    for (int c = 1; c <= q; ++c) full[static_cast<std::size_t>(c - 1)] = c;
    std::vector<std::string> verts{"c"};
    std::vector<std::tuple<std::string, std::string, std::string, std::vector<int>>> specs;
    for (int i = 1; i <= delta; ++i) {
        std::string mid = "m" + std::to_string(i), low = "w" + std::to_string(i), leaf = "z" + std::to_string(i);
        verts.push_back(mid);
        verts.push_back(low);
        verts.push_back(leaf);
        specs.emplace_back("e" + std::to_string(i), "c", mid, full);
        specs.emplace_back("t" + std::to_string(i), mid, low, full);
        specs.emplace_back("u" + std::to_string(i), low, leaf, full);
    }
    auto ins = Instance::make(q, verts, specs, "c");
    WeightedBoundary wb;
    for (int i = 1; i <= delta; ++i) {
        WeightRegion r;
        r.edges = {"u" + std::to_string(i)};
        for (int c : full) r.weights[{c}] = rat(rng.range(1, 9), rng.range(1, 9));
        wb.regions.push_back(std::move(r));
    }
    return build_complex(ins, wb, "c");
}

} // namespace detail_suite

// 10. trickle-down certificate on slack maxdeg+50 fans
inline CriterionResult criterion_trickledown(const SuiteOptions& opt) {
    return detail_suite::timed(10, "trickle-down certificate (base 50 links, induction, final bound)", [&]() {
        int delta = 3, q = 57;
        std::string detail;
        double worst_base = 1e9, worst_induction = 1e9, worst_final = -1e9;
        for (std::uint64_t b = 0; b < 2; ++b) {
            auto st = detail_suite::certificate_fixture(opt.seed + b, delta, q);
            if (st.beta < delta + 50) return std::string("fixture slack fell below maxdeg + 50");
            auto co = coefficient_sequences(delta, st.beta);
            if (!co.feasible) return std::string("published coefficient recursion infeasible at slack maxdeg+50");
            if (!co.feasible_cert) return std::string("certificate coefficient recursion infeasible");

            // 25 seeded codimension-2 links per fixture
            Rng rng = Rng(opt.seed).fork(10000 + b);
            for (int t = 0; t < 25; ++t) {
                int slot = rng.range(0, delta - 1);
                const auto& list = st.lists[static_cast<std::size_t>(slot)];
                Face f{{slot, list[static_cast<std::size_t>(rng.below(list.size()))]}};
                auto bc = base_case_check(st, co, f, false);
                worst_base = std::min(worst_base, bc.lower.margin);
                if (!bc.lower.ok) return "base-case margin " + format_float17(bc.lower.margin) + " below tolerance";
                if (!bc.upper.ok) return std::string("base-case upper cap violated");
            }
            // the one codimension-3 link of a 3-edge fan
            Face empty;
            auto ind = induction_check(st, co, empty);
            worst_induction = std::min(worst_induction, ind.induction.margin);
            if (!ind.upper.ok) return std::string("induction upper cap violated");
            if (!ind.induction.ok) return "induction margin " + format_float17(ind.induction.margin);
            if (!ind.expectation_identity) return std::string("link expectation identity broke (exact)");
            if (!ind.a_consistency) return std::string("certificate tower identity broke (exact)");

            auto fin = final_bound_check(st, co.eta);
            worst_final = std::max(worst_final, fin.walk_gap_eig * (delta - 1));
            if (!fin.walk_bound_ok) return std::string("final walk bound violated");
            if (!fin.identities_exact) return std::string("walk-covariance identities broke (exact)");
            if (!fin.reversible) return std::string("walk not reversible (exact)");
        }
        return "ok: worst base margin " + format_float17(worst_base) + ", worst induction margin " +
               format_float17(worst_induction) + ", final gap*(d-1) " + format_float17(worst_final) + " <= eta " +
               format_float17(eta_delta(delta));
    });
}

// 11. measured spectral independence never exceeds 1 + eta
inline CriterionResult criterion_spectral_independence(const SuiteOptions& opt) {
    return detail_suite::timed(11, "spectral independence measurement (slack maxdeg+50 fans)", [&]() {
        int delta = 3, q = 57;
        double eta = eta_delta(delta);
        double worst = 0;
        // weighted fans with depth-2 subtrees
        for (std::uint64_t b = 0; b < 2; ++b) {
            auto st = detail_suite::certificate_fixture(opt.seed + b, delta, q);
            auto fin = final_bound_check(st, eta);
            worst = std::max(worst, fin.measured_si);
            if (!fin.si_ok) return "measured constant " + format_float17(fin.measured_si) + " above 1 + eta";
        }
        // unweighted depth-2 recursion fan
        {
            Rng rng = Rng(opt.seed).fork(11000);
            auto ins = random_depth_tree(rng, 2, delta - 1, q);
            std::vector<BroomVector<double>> children;
            auto root_broom = broom_at(ins, "v0");
            TreeEngine eng(ins, {});
            for (int e : eng.child_edges(ins.vertex_index("v0"))) {
                const auto& er = ins.edges[static_cast<std::size_t>(e)];
                std::string child =
                    ins.vertex_ids[static_cast<std::size_t>(eng.parent_edge(er.u) == e ? er.u : er.v)];
                auto sub = subtree_instance(ins, child);
                auto cb = broom_at(sub, child);
                if (cb->size() == 0)
                    children.push_back(BroomVector<double>::point_mass_empty());
                else
                    children.push_back(to_broom_vector<double>(cb, tree_broom_marginal(sub, {}, child)));
            }
            auto root = recurse(children, root_broom);
            auto rep = covariance_report(root);
            worst = std::max(worst, rep.measured_si_constant);
            if (rep.measured_si_constant > 1 + eta + 1e-9)
                return "recursion fan constant " + format_float17(rep.measured_si_constant) + " above 1 + eta";
        }
        return "ok: worst measured constant " + format_float17(worst) + " vs 1 + eta = " + format_float17(1 + eta);
    });
}

inline std::vector<CriterionResult> run_acceptance_suite(const SuiteOptions& opt) {
    std::vector<CriterionResult> out;
    out.push_back(criterion_counting(opt));
    out.push_back(criterion_recursion_equals_marginal(opt));
    out.push_back(criterion_marginal_bounds(opt));
    out.push_back(criterion_worst_pinning(opt));
    out.push_back(criterion_dimension_reduction(opt));
    out.push_back(criterion_jacobian_fd(opt));
    out.push_back(criterion_coupling(opt));
    out.push_back(criterion_wsm_threshold(opt));
    out.push_back(criterion_contraction_step(opt));
    out.push_back(criterion_trickledown(opt));
    out.push_back(criterion_spectral_independence(opt));
    return out;
}

inline nlohmann::json suite_report_json(const std::vector<CriterionResult>& results, const SuiteOptions& opt) {
    nlohmann::json j;
    j["version"] = kVersion;
    j["seed"] = opt.seed;
    j["criteria"] = nlohmann::json::array();
    bool all = true;
    for (const auto& r : results) {
        all = all && r.pass;
        j["criteria"].push_back({{"id", r.id},
                                 {"name", r.name},
                                 {"pass", r.pass},
                                 {"seconds", format_float17(r.seconds)},
                                 {"detail", r.detail}});
    }
    j["all_pass"] = all;
    return j;
}

} // namespace eclab
