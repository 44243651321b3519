#pragma once

// Discrepancy experiments at a pendant edge: the greedy one-step coupling
// decomposition of the two conditional measures (an exact rational identity),
// per-edge swap ratios with their slack bounds, and the audit that checks the
// coupling-independence bound over instance families.

#include <algorithm>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "eclab/exact.hpp"
#include "eclab/instance.hpp"
#include "eclab/wasserstein.hpp"

namespace eclab {

struct CouplingReport {
    std::string edge;
    int color_a = 0, color_b = 0;
    std::map<std::string, Rat> gamma; // neighbor edge -> swap ratio under a
    std::map<std::string, Rat> delta; // neighbor edge -> swap ratio under b
    Rat gamma_delta_bound = 0;        // 1/(beta-1)
    bool ratios_within_bound = true;
    Rat w1 = 0;                        // exact distance between the two conditionals
    Rat decomposition_residual = 0;    // max abs pointwise residual, exactly zero
    bool off_neighborhood_equal = true; // the two "color unused nearby" conditionals coincide
};

namespace detail_cpl {

inline std::map<std::vector<int>, Rat> table_map(const DistributionTable& t) {
    std::map<std::vector<int>, Rat> m;
    for (const auto& [k, p] : t.entries) m[k] += p;
    return m;
}

inline void axpy(std::map<std::vector<int>, Rat>& acc, const Rat& coef, const DistributionTable& t) {
    if (coef == 0) return;
    for (const auto& [k, p] : t.entries) acc[k] += coef * p;
}

} // namespace detail_cpl

// Decompose the difference of the two pendant-pinned conditionals into swap
// terms, verify the identity pointwise in exact arithmetic, and return the
// exact transport distance.
inline CouplingReport greedy_decomposition(const Instance& ins, const std::string& pendant_edge, int a, int b,
                                           const ExactOptions& opts = {}, const WassersteinOptions& wopts = {}) {
    int e = ins.edge_index(pendant_edge);
    const auto& er = ins.edges[static_cast<std::size_t>(e)];
    int u = er.u, v = er.v;
    if (ins.vertex_degree(u) != 1 && ins.vertex_degree(v) != 1)
        throw FeasibilityError("edge " + pendant_edge + " is not pendant");
    if (ins.vertex_degree(u) != 1) std::swap(u, v);
    if (a == b || !ins.list_has(e, a) || !ins.list_has(e, b))
        throw FeasibilityError("colors must be distinct members of the pendant edge's list");

    CouplingReport rep;
    rep.edge = pendant_edge;
    rep.color_a = a;
    rep.color_b = b;

    std::vector<std::string> rest;
    for (std::size_t f = 0; f < ins.num_edges(); ++f)
        if (static_cast<int>(f) != e) rest.push_back(ins.edges[f].id);
    std::vector<int> neigh; // positions of N = E(v) - e within `rest`
    std::vector<std::string> neigh_ids;
    for (int f : ins.edges_at(v))
        if (f != e) {
            neigh_ids.push_back(ins.edges[static_cast<std::size_t>(f)].id);
        }

    Pinning pa, pb;
    pa.assignments[pendant_edge] = a;
    pb.assignments[pendant_edge] = b;
    DistributionTable mu_a, mu_b;
    if (rest.empty()) {
        mu_a.support_edges = {};
        mu_a.entries.emplace_back(std::vector<int>{}, Rat(1));
        mu_a.total = 1;
        mu_b = mu_a;
    } else {
        mu_a = marginal(ins, pa, rest, opts);
        mu_b = marginal(ins, pb, rest, opts);
    }
    for (const auto& id : neigh_ids) neigh.push_back(mu_a.edge_pos(id));

    rep.w1 = wasserstein_hamming(mu_a, mu_b, wopts).value;

    long beta = validate(ins).beta;
    rep.gamma_delta_bound = beta >= 2 ? rat(1, beta - 1) : Rat(0);

    if (neigh.empty()) {
        // the other endpoint is isolated after removing e: the conditionals coincide
        rep.decomposition_residual = 0;
        for (const auto& [k, p] : detail_cpl::table_map(mu_a)) {
            Rat d = p - mu_b.mass(k);
            if (abs(d) > rep.decomposition_residual) rep.decomposition_residual = abs(d);
        }
        rep.off_neighborhood_equal = rep.decomposition_residual == 0;
        return rep;
    }

    auto uses_on = [&](int pos, int color) {
        return [pos, color](const std::vector<int>& key) { return key[static_cast<std::size_t>(pos)] == color; };
    };
    auto avoids_all = [&](const std::vector<int>& positions, int color) {
        return [&positions, color](const std::vector<int>& key) {
            for (int p : positions)
                if (key[static_cast<std::size_t>(p)] == color) return false;
            return true;
        };
    };

    Rat pa_off = mu_a.prob(avoids_all(neigh, b)); // b unused on N given a
    Rat pb_off = mu_b.prob(avoids_all(neigh, a)); // a unused on N given b
    if (pa_off == 0 || pb_off == 0) throw FeasibilityError("off-neighborhood event has zero probability");

    std::vector<Rat> gam(neigh.size()), del(neigh.size());
    for (std::size_t j = 0; j < neigh.size(); ++j) {
        gam[j] = mu_a.prob(uses_on(neigh[j], b)) / pa_off;
        del[j] = mu_b.prob(uses_on(neigh[j], a)) / pb_off;
        rep.gamma[neigh_ids[j]] = gam[j];
        rep.delta[neigh_ids[j]] = del[j];
        if (beta >= 2 && (gam[j] > rep.gamma_delta_bound || del[j] > rep.gamma_delta_bound))
            rep.ratios_within_bound = false;
    }

    Rat denom = 1;
    for (std::size_t j = 0; j < neigh.size(); ++j) denom += std::max(gam[j], del[j]);

    // right-hand side of the identity, accumulated pointwise
    std::map<std::vector<int>, Rat> rhs;
    for (std::size_t j = 0; j < neigh.size(); ++j) {
        Rat swap_coef = std::min(gam[j], del[j]) / denom;
        Rat gd = gam[j] - del[j];
        Rat extra_a = (gd > 0 ? gd : Rat(0)) / denom;
        Rat extra_b = (gd < 0 ? Rat(-gd) : Rat(0)) / denom;
        std::optional<DistributionTable> t_ab, t_ba; // j<-b given a, j<-a given b
        if (gam[j] > 0) t_ab = mu_a.condition(uses_on(neigh[j], b));
        if (del[j] > 0) t_ba = mu_b.condition(uses_on(neigh[j], a));
        if (swap_coef > 0) {
            detail_cpl::axpy(rhs, swap_coef, *t_ab);
            detail_cpl::axpy(rhs, -swap_coef, *t_ba);
        }
        if (extra_a > 0) {
            detail_cpl::axpy(rhs, extra_a, *t_ab);
            detail_cpl::axpy(rhs, -extra_a, mu_b);
        }
        if (extra_b > 0) {
            detail_cpl::axpy(rhs, extra_b, mu_a);
            detail_cpl::axpy(rhs, -extra_b, *t_ba);
        }
    }
    auto t_a_off = mu_a.condition(avoids_all(neigh, b));
    auto t_b_off = mu_b.condition(avoids_all(neigh, a));
    detail_cpl::axpy(rhs, Rat(1) / denom, t_a_off);
    detail_cpl::axpy(rhs, Rat(-1) / denom, t_b_off);

    // left-hand side minus right-hand side
    std::map<std::vector<int>, Rat> resid = rhs;
    for (const auto& [k, p] : mu_a.entries) resid[k] -= p;
    for (const auto& [k, p] : mu_b.entries) resid[k] += p;
    rep.decomposition_residual = 0;
    for (const auto& [k, d] : resid)
        if (abs(d) > rep.decomposition_residual) rep.decomposition_residual = abs(d);

    rep.off_neighborhood_equal = t_a_off.entries == t_b_off.entries;
    return rep;
}

// One audited discrepancy within a family sweep.
struct DiscrepancyRecord {
    std::string edge;
    int a = 0, b = 0;
    Rat w_rest;  // distance between the conditionals on the remaining edges
    Rat w_full;  // distance including the pinned coordinate
    Rat residual;
    bool within_bound = true;
};

struct CouplingAuditReport {
    Rat eps;
    Rat bound; // 1 + 2/eps
    std::vector<DiscrepancyRecord> records;
    std::vector<std::string> rejected; // instances violating the slack hypothesis
    Rat max_w_full = 0;
    bool all_within_bound = true;
    bool all_residuals_zero = true;
    bool split_inequality_ok = true; // w_full <= 1 + w_rest throughout
};

// Slack hypothesis: every edge has |L(e)| - deg(e) >= (1+eps) * maxdeg + 1.
inline bool extra_hypothesis_holds(const Instance& ins, const Rat& eps) {
    auto rep = validate(ins);
    int delta = ins.max_degree();
    Rat need = (Rat(1) + eps) * delta + 1;
    return Rat(rep.beta) >= need;
}

inline CouplingAuditReport coupling_independence_audit(const std::vector<Instance>& family, const Rat& eps,
                                                       const ExactOptions& opts = {},
                                                       const WassersteinOptions& wopts = {}) {
    CouplingAuditReport rep;
    rep.eps = eps;
    rep.bound = Rat(1) + Rat(2) / eps;
    for (std::size_t idx = 0; idx < family.size(); ++idx) {
        const Instance& ins = family[idx];
        if (!extra_hypothesis_holds(ins, eps)) {
            rep.rejected.push_back("instance " + std::to_string(idx) + ": slack below (1+eps)*maxdeg+1");
            continue;
        }
        for (std::size_t e = 0; e < ins.num_edges(); ++e) {
            const auto& er = ins.edges[e];
            if (ins.vertex_degree(er.u) != 1 && ins.vertex_degree(er.v) != 1) continue;
            const auto& list = er.list;
            for (std::size_t x = 0; x < list.size(); ++x)
                for (std::size_t y = x + 1; y < list.size(); ++y) {
                    int a = list[x], b = list[y];
                    auto dec = greedy_decomposition(ins, er.id, a, b, opts, wopts);
                    DiscrepancyRecord rec;
                    rec.edge = er.id;
                    rec.a = a;
                    rec.b = b;
                    rec.w_rest = dec.w1;
                    rec.residual = dec.decomposition_residual;
                    // distance between the full measures, pinned coordinate included,
                    // computed independently by the transport solver
                    {
                        std::vector<std::string> all;
                        for (const auto& er2 : ins.edges) all.push_back(er2.id);
                        Pinning fa, fb;
                        fa.assignments[er.id] = a;
                        fb.assignments[er.id] = b;
                        std::vector<std::string> rest_ids;
                        for (const auto& id : all)
                            if (id != er.id) rest_ids.push_back(id);
                        auto lift = [&](const Pinning& pin) {
                            DistributionTable t = rest_ids.empty()
                                                      ? DistributionTable{}
                                                      : marginal(ins, pin, rest_ids, opts);
                            DistributionTable full;
                            full.support_edges = all;
                            int c = pin.assignments.at(er.id);
                            if (rest_ids.empty()) {
                                full.entries.emplace_back(std::vector<int>(1, c), Rat(1));
                            } else {
                                for (const auto& [k, p] : t.entries) {
                                    std::vector<int> key = k;
                                    key.insert(key.begin() + static_cast<long>(e), c);
                                    full.entries.emplace_back(key, p);
                                }
                            }
                            full.sort_entries();
                            full.total = full.sum();
                            return full;
                        };
                        rec.w_full = wasserstein_hamming(lift(fa), lift(fb), wopts).value;
                    }
                    rec.within_bound = rec.w_full <= rep.bound;
                    rep.all_within_bound = rep.all_within_bound && rec.within_bound;
                    rep.all_residuals_zero = rep.all_residuals_zero && rec.residual == 0;
                    rep.split_inequality_ok = rep.split_inequality_ok && rec.w_full <= 1 + rec.w_rest;
                    if (rec.w_full > rep.max_w_full) rep.max_w_full = rec.w_full;
                    rep.records.push_back(std::move(rec));
                }
        }
    }
    return rep;
}

} // namespace eclab
