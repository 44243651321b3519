#pragma once

// Ground-truth engine. Two independent routes to every counting question:
//   * plain enumeration of proper colorings (cap-guarded DFS), and
//   * a bottom-up / top-down dynamic program on rooted trees.
// Both run in exact rational arithmetic; agreement between them is one of the
// standing cross-checks of the whole project.

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "eclab/distribution.hpp"
#include "eclab/instance.hpp"
#include "eclab/rational.hpp"

namespace eclab {

struct CapError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ExactOptions {
    double enum_cap = 1e8; // refuse searches whose raw leaf count exceeds this
};

namespace detail {

// Edge order for the DFS: start anywhere, always extend along adjacency so the
// properness constraint prunes as early as possible.
inline std::vector<int> enumeration_order(const Instance& ins) {
    std::size_t m = ins.num_edges();
    std::vector<int> order;
    std::vector<char> placed(m, 0);
    for (std::size_t start = 0; start < m; ++start) {
        if (placed[start]) continue;
        std::vector<int> queue{static_cast<int>(start)};
        placed[start] = 1;
        for (std::size_t head = 0; head < queue.size(); ++head) {
            int e = queue[head];
            order.push_back(e);
            for (int f : ins.edge_neighbors(e))
                if (!placed[f]) {
                    placed[f] = 1;
                    queue.push_back(f);
                }
        }
    }
    return order;
}

// Allowed colors per edge under a pinning (pinned edges collapse to one color).
inline std::vector<std::vector<int>> allowed_colors(const Instance& ins, const Pinning& pin) {
    check_pinning(ins, pin);
    std::vector<std::vector<int>> allowed(ins.num_edges());
    for (std::size_t e = 0; e < ins.num_edges(); ++e) {
        auto it = pin.assignments.find(ins.edges[e].id);
        if (it != pin.assignments.end())
            allowed[e] = {it->second};
        else
            allowed[e] = ins.edges[e].list;
    }
    return allowed;
}

inline void check_enum_cap(const std::vector<std::vector<int>>& allowed, double cap) {
    double leaves = 1;
    for (const auto& l : allowed) {
        leaves *= static_cast<double>(std::max<std::size_t>(l.size(), 1));
        if (leaves > cap) throw CapError("enumeration search space exceeds cap");
    }
}

// DFS over full proper colorings extending the pinning; calls visit(coloring)
// with colors indexed by edge index.
template <class Visit>
void enumerate_colorings(const Instance& ins, const Pinning& pin, const ExactOptions& opts, Visit&& visit) {
    auto allowed = allowed_colors(ins, pin);
    check_enum_cap(allowed, opts.enum_cap);
    auto order = enumeration_order(ins);
    std::vector<int> coloring(ins.num_edges(), 0);
    std::vector<std::vector<int>> used(ins.num_vertices()); // colors currently used at each vertex

    std::function<void(std::size_t)> go = [&](std::size_t depth) {
        if (depth == order.size()) {
            visit(const_cast<const std::vector<int>&>(coloring));
            return;
        }
        int e = order[depth];
        int u = ins.edges[e].u, v = ins.edges[e].v;
        for (int c : allowed[e]) {
            bool clash = std::find(used[u].begin(), used[u].end(), c) != used[u].end() ||
                         std::find(used[v].begin(), used[v].end(), c) != used[v].end();
            if (clash) continue;
            coloring[e] = c;
            used[u].push_back(c);
            used[v].push_back(c);
            go(depth + 1);
            used[u].pop_back();
            used[v].pop_back();
        }
        coloring[e] = 0;
    };
    go(0);
}

inline Rat boundary_weight(const Instance& ins, const WeightedBoundary& boundary, const std::vector<int>& coloring) {
    Rat w = 1;
    for (const auto& region : boundary.regions) {
        std::vector<int> key;
        key.reserve(region.edges.size());
        for (const auto& eid : region.edges) key.push_back(coloring[ins.edge_index(eid)]);
        w *= region.weight(key);
        if (w == 0) return w;
    }
    return w;
}

} // namespace detail

// Number of proper full colorings extending the pinning.
inline Rat count(const Instance& ins, const Pinning& pin = {}, const ExactOptions& opts = {}) {
    Rat z = 0;
    detail::enumerate_colorings(ins, pin, opts, [&](const std::vector<int>&) { z += 1; });
    return z;
}

// Partition function of the weighted instance, conditioned on the pinning.
inline Rat weighted_count(const Instance& ins, const WeightedBoundary& boundary, const Pinning& pin = {},
                          const ExactOptions& opts = {}) {
    Rat z = 0;
    detail::enumerate_colorings(ins, pin, opts,
                                [&](const std::vector<int>& col) { z += detail::boundary_weight(ins, boundary, col); });
    return z;
}

// Normalized conditional marginal over the edge set S.
inline DistributionTable weighted_marginal(const Instance& ins, const WeightedBoundary& boundary, const Pinning& pin,
                                           const std::vector<std::string>& S, const ExactOptions& opts = {}) {
    for (const auto& eid : S)
        if (pin.pins(eid)) throw FeasibilityError("marginal support intersects the pinning: " + eid);
    std::vector<int> sidx;
    sidx.reserve(S.size());
    for (const auto& eid : S) sidx.push_back(ins.edge_index(eid));

    std::map<std::vector<int>, Rat> acc;
    detail::enumerate_colorings(ins, pin, opts, [&](const std::vector<int>& col) {
        Rat w = boundary.empty() ? Rat(1) : detail::boundary_weight(ins, boundary, col);
        if (w == 0) return;
        std::vector<int> key;
        key.reserve(sidx.size());
        for (int e : sidx) key.push_back(col[e]);
        acc[key] += w;
    });
    if (acc.empty()) throw FeasibilityError("conditional support is empty");

    DistributionTable t;
    t.support_edges = S;
    for (auto& [k, p] : acc) t.entries.emplace_back(k, p);
    t.sort_entries();
    t.normalize();
    return t;
}

inline DistributionTable marginal(const Instance& ins, const Pinning& pin, const std::vector<std::string>& S,
                                  const ExactOptions& opts = {}) {
    return weighted_marginal(ins, WeightedBoundary{}, pin, S, opts);
}

// --- rooted tree dynamic program ---------------------------------------------

// Rooted orientation of a tree instance plus the up/down weight vectors the
// marginal computations need. Weight regions, when present, must each coincide
// with the child-edge set of one vertex.
class TreeEngine {
  public:
    TreeEngine(const Instance& ins, const Pinning& pin, const WeightedBoundary& boundary = {})
        : ins_(ins), boundary_(boundary) {
        if (!ins.root) throw StructuralError("tree engine requires a rooted instance");
        ins.check_tree_rooted();
        check_pinning(ins, pin);
        allowed_ = detail::allowed_colors(ins, pin);

        int n = static_cast<int>(ins.num_vertices());
        parent_edge_.assign(n, -1);
        child_edges_.assign(n, {});
        order_.clear();
        int root = ins.vertex_index(*ins.root);
        std::vector<int> stack{root};
        std::vector<char> seen(n, 0);
        seen[root] = 1;
        while (!stack.empty()) {
            int v = stack.back();
            stack.pop_back();
            order_.push_back(v);
            for (int e : ins.edges_at(v)) {
                int w = ins.edges[e].u == v ? ins.edges[e].v : ins.edges[e].u;
                if (!seen[w]) {
                    seen[w] = 1;
                    parent_edge_[w] = e;
                    child_edges_[v].push_back(e);
                    stack.push_back(w);
                }
            }
        }
        for (auto& ce : child_edges_) std::sort(ce.begin(), ce.end());

        region_at_vertex_.assign(n, -1);
        for (std::size_t r = 0; r < boundary_.regions.size(); ++r) attach_region(static_cast<int>(r));

        compute_up();
    }

    const std::vector<int>& child_edges(int v) const { return child_edges_[v]; }
    int parent_edge(int v) const { return parent_edge_[v]; }

    // Total weight of colorings of the whole tree.
    Rat partition() const {
        int root = ins_.vertex_index(*ins_.root);
        Rat z = 0;
        enumerate_broom(root, [&](const std::vector<int>&, const Rat& w) { z += w; });
        return z;
    }

    // Exact normalized marginal over the child edges of vertex v.
    DistributionTable broom_marginal(const std::string& vertex_id) const {
        int v = ins_.vertex_index(vertex_id);
        const auto& broom = child_edges_[v];
        DistributionTable t;
        for (int e : broom) t.support_edges.push_back(ins_.edges[e].id);
        std::map<std::vector<int>, Rat> acc;
        int pe = parent_edge_[v];
        enumerate_broom(v, [&](const std::vector<int>& key, const Rat& w) {
            Rat above = 1;
            if (pe >= 0) {
                above = 0;
                for (int c : allowed_[pe])
                    if (std::find(key.begin(), key.end(), c) == key.end()) above += down(pe, c);
            }
            Rat m = w * above;
            if (m != 0) acc[key] += m;
        });
        if (acc.empty()) throw FeasibilityError("broom marginal has empty support");
        for (auto& [k, p] : acc) t.entries.emplace_back(k, p);
        t.sort_entries();
        t.normalize();
        return t;
    }

    // Exact normalized marginal of a single edge.
    DistributionTable edge_marginal(const std::string& edge_id) const {
        int e = ins_.edge_index(edge_id);
        DistributionTable t;
        t.support_edges = {edge_id};
        for (int c : allowed_[e]) {
            Rat m = up(e, c) * down(e, c);
            if (m != 0) t.entries.emplace_back(std::vector<int>{c}, m);
        }
        if (t.entries.empty()) throw FeasibilityError("edge marginal has empty support");
        t.sort_entries();
        t.normalize();
        return t;
    }

  private:
    void attach_region(int r) {
        const auto& region = boundary_.regions[static_cast<std::size_t>(r)];
        std::set<int> edges;
        for (const auto& eid : region.edges) edges.insert(ins_.edge_index(eid));
        for (std::size_t v = 0; v < ins_.num_vertices(); ++v) {
            std::set<int> broom(child_edges_[v].begin(), child_edges_[v].end());
            if (broom == edges) {
                region_at_vertex_[v] = r;
                return;
            }
        }
        throw StructuralError("tree engine supports only broom-shaped weight regions");
    }

    // Enumerate proper colorings of v's child edges; emit the key (in instance
    // edge-index order) and the accumulated weight: subtree factors times the
    // region weight at v when one is attached.
    template <class Visit>
    void enumerate_broom(int v, Visit&& visit) const {
        const auto& broom = child_edges_[v];
        std::vector<int> key(broom.size(), 0);
        std::vector<int> used;
        std::function<void(std::size_t, Rat)> go = [&](std::size_t i, Rat w) {
            if (w == 0) return;
            if (i == broom.size()) {
                if (region_at_vertex_[v] >= 0) {
                    // region key order matches region.edges order
                    const auto& region = boundary_.regions[static_cast<std::size_t>(region_at_vertex_[v])];
                    std::vector<int> rkey;
                    rkey.reserve(region.edges.size());
                    for (const auto& eid : region.edges) {
                        int e = ins_.edge_index(eid);
                        auto pos = std::find(broom.begin(), broom.end(), e) - broom.begin();
                        rkey.push_back(key[static_cast<std::size_t>(pos)]);
                    }
                    w *= region.weight(rkey);
                    if (w == 0) return;
                }
                visit(const_cast<const std::vector<int>&>(key), w);
                return;
            }
            int e = broom[i];
            for (int c : allowed_[e]) {
                if (std::find(used.begin(), used.end(), c) != used.end()) continue;
                key[i] = c;
                used.push_back(c);
                go(i + 1, w * up(e, c));
                used.pop_back();
            }
            key[i] = 0;
        };
        go(0, Rat(1));
    }

    // up(e,c): weight of colorings of the subtree hanging below e, given e=c.
    void compute_up() {
        up_.assign(ins_.num_edges(), {});
        for (auto it = order_.rbegin(); it != order_.rend(); ++it) {
            int v = *it;
            int pe = parent_edge_[v];
            if (pe < 0) continue;
            const auto& broom = child_edges_[v];
            Rat total = 0;
            std::map<int, Rat> used_mass; // weight of broom colorings using color c
            // one enumeration serves all parent colors: every color appears at
            // most once in a broom coloring, so "avoiding c" is total - used[c]
            std::vector<int> key(broom.size(), 0);
            std::vector<int> used;
            std::function<void(std::size_t, Rat)> go = [&](std::size_t i, Rat w) {
                if (w == 0) return;
                if (i == broom.size()) {
                    if (region_at_vertex_[v] >= 0) {
                        const auto& region = boundary_.regions[static_cast<std::size_t>(region_at_vertex_[v])];
                        std::vector<int> rkey;
                        rkey.reserve(region.edges.size());
                        for (const auto& eid : region.edges) {
                            int e = ins_.edge_index(eid);
                            auto pos = std::find(broom.begin(), broom.end(), e) - broom.begin();
                            rkey.push_back(key[static_cast<std::size_t>(pos)]);
                        }
                        w *= region.weight(rkey);
                        if (w == 0) return;
                    }
                    total += w;
                    for (int c : key) used_mass[c] += w;
                    return;
                }
                int e = broom[i];
                for (int c : allowed_[e]) {
                    if (std::find(used.begin(), used.end(), c) != used.end()) continue;
                    key[i] = c;
                    used.push_back(c);
                    go(i + 1, w * up(e, c));
                    used.pop_back();
                }
                key[i] = 0;
            };
            go(0, Rat(1));
            auto& vec = up_[static_cast<std::size_t>(pe)];
            for (int c : allowed_[pe]) {
                Rat m = total;
                auto itc = used_mass.find(c);
                if (itc != used_mass.end()) m -= itc->second;
                vec[c] = m;
            }
        }
    }

    Rat up(int e, int c) const {
        const auto& vec = up_[static_cast<std::size_t>(e)];
        if (vec.empty()) {
            // pendant below: no subtree
            return Rat(1);
        }
        auto it = vec.find(c);
        return it == vec.end() ? Rat(0) : it->second;
    }

    // down(e,c): weight of everything outside the subtree below e, given e=c.
    Rat down(int e, int c) const {
        auto key = std::make_pair(e, c);
        auto hit = down_cache_.find(key);
        if (hit != down_cache_.end()) return hit->second;
        const auto& er = ins_.edges[static_cast<std::size_t>(e)];
        // parent endpoint of e is the one whose parent edge differs from e
        int u = (parent_edge_[er.u] == e) ? er.v : er.u;
        int pe = parent_edge_[u];
        Rat total = 0;
        const auto& broom = child_edges_[u];
        // color the sibling edges (and implicitly the parent edge) around u
        std::vector<int> sibs;
        for (int f : broom)
            if (f != e) sibs.push_back(f);
        std::vector<int> used{c};
        std::vector<int> key_sib(sibs.size(), 0);
        std::function<void(std::size_t, Rat)> go = [&](std::size_t i, Rat w) {
            if (w == 0) return;
            if (i == sibs.size()) {
                if (region_at_vertex_[u] >= 0) {
                    const auto& region = boundary_.regions[static_cast<std::size_t>(region_at_vertex_[u])];
                    std::vector<int> rkey;
                    rkey.reserve(region.edges.size());
                    for (const auto& eid : region.edges) {
                        int f = ins_.edge_index(eid);
                        if (f == e)
                            rkey.push_back(c);
                        else {
                            auto pos = std::find(sibs.begin(), sibs.end(), f) - sibs.begin();
                            rkey.push_back(key_sib[static_cast<std::size_t>(pos)]);
                        }
                    }
                    w *= region.weight(rkey);
                    if (w == 0) return;
                }
                if (pe < 0) {
                    total += w;
                } else {
                    Rat above = 0;
                    for (int cp : allowed_[pe])
                        if (cp != c && std::find(key_sib.begin(), key_sib.end(), cp) == key_sib.end())
                            above += down(pe, cp);
                    total += w * above;
                }
                return;
            }
            int f = sibs[i];
            for (int cf : allowed_[f]) {
                if (std::find(used.begin(), used.end(), cf) != used.end()) continue;
                key_sib[i] = cf;
                used.push_back(cf);
                go(i + 1, w * up(f, cf));
                used.pop_back();
            }
            key_sib[i] = 0;
        };
        go(0, Rat(1));
        down_cache_[key] = total;
        return total;
    }

    const Instance& ins_;
    WeightedBoundary boundary_;
    std::vector<std::vector<int>> allowed_;
    std::vector<int> parent_edge_;
    std::vector<std::vector<int>> child_edges_;
    std::vector<int> order_; // root-first
    std::vector<int> region_at_vertex_;
    std::vector<std::map<int, Rat>> up_;
    mutable std::map<std::pair<int, int>, Rat> down_cache_;
};

// Marginal over the broom of v (its child edges w.r.t. the root), computed in
// time polynomial in tree size times broom-state count.
inline DistributionTable tree_broom_marginal(const Instance& ins, const Pinning& pin, const std::string& vertex_id,
                                             const WeightedBoundary& boundary = {}) {
    TreeEngine eng(ins, pin, boundary);
    return eng.broom_marginal(vertex_id);
}

inline Rat tree_count(const Instance& ins, const Pinning& pin = {}, const WeightedBoundary& boundary = {}) {
    TreeEngine eng(ins, pin, boundary);
    return eng.partition();
}

// --- marginal bound audit -----------------------------------------------------

struct MarginalBoundCase {
    std::string vertex;
    std::vector<std::string> F;
    int color = 0;
    Rat prob_in;        // Pr[a used on F]
    Rat prob_avoid;     // Pr[a unused on all of E(v)]
    Rat upper;          // |F| / (beta_v - 1 + |F|)
    Rat ratio_upper;    // |F| / (beta_v - 1)
    bool ok = true;
};

struct MarginalBoundReport {
    std::vector<MarginalBoundCase> cases;
    Rat worst_upper_slack = 1;  // min over cases of (upper - prob_in)
    Rat worst_lower_slack = 1;  // min over edge marginals of (value - lower bound)
    bool all_hold = true;
};

// Checks, by exact enumeration:
//   Pr[a in c(F)] <= |F| / (beta - 1 + |F|)
//   Pr[a in c(F)] / Pr[a not in c(E(v))] <= |F| / (beta - 1)
//   per-color marginal lower bound mu_e(c) >= (1 - 1/s)^(deg(e)) / |L(e)|
//     and its coarse form (1 - 1/beta)^(2D-2) / (beta + 2D - 2)
// where beta is the minimum slack over E(v) (the strongest hypothesis the
// bounds are stated for) and s the per-edge slack.
inline MarginalBoundReport marginal_bound_audit(const Instance& ins, const Pinning& pin,
                                                const ExactOptions& opts = {}) {
    Instance surf = pin.empty() ? ins : apply_pinning(ins, pin);
    auto beta_rep = validate(surf);
    if (beta_rep.beta < 2) throw FeasibilityError("marginal bound audit requires slack >= 2 everywhere");
    int delta = surf.max_degree();

    MarginalBoundReport rep;
    bool first_upper = true, first_lower = true;

    // One enumeration pass; accumulate projections onto each vertex star and
    // each single edge. Only those small tables are kept.
    std::size_t nv = surf.num_vertices(), ne = surf.num_edges();
    std::vector<std::map<std::vector<int>, Rat>> star(nv);
    std::vector<std::map<int, Rat>> edge_mass(ne);
    Rat z = 0;
    detail::enumerate_colorings(surf, {}, opts, [&](const std::vector<int>& col) {
        z += 1;
        for (std::size_t v = 0; v < nv; ++v) {
            const auto& ev = surf.edges_at(static_cast<int>(v));
            if (ev.empty()) continue;
            std::vector<int> key;
            key.reserve(ev.size());
            for (int e : ev) key.push_back(col[static_cast<std::size_t>(e)]);
            star[v][key] += 1;
        }
        for (std::size_t e = 0; e < ne; ++e) edge_mass[e][col[e]] += 1;
    });
    if (z == 0) throw FeasibilityError("no proper colorings; audit undefined");

    for (std::size_t v = 0; v < nv; ++v) {
        const auto& ev = surf.edges_at(static_cast<int>(v));
        if (ev.empty()) continue;
        long beta_v = 0;
        bool fst = true;
        for (int e : ev) {
            long s = static_cast<long>(surf.edges[e].list.size()) - surf.edge_degree(e);
            if (fst || s < beta_v) beta_v = s;
            fst = false;
        }
        if (beta_v < 2) continue;
        std::set<int> palette;
        for (int e : ev)
            for (int c : surf.edges[e].list) palette.insert(c);

        // F = all prefixes of E(v) in index order; a over the union palette
        for (std::size_t fsz = 1; fsz <= ev.size(); ++fsz) {
            for (int a : palette) {
                MarginalBoundCase mc;
                mc.vertex = surf.vertex_ids[v];
                for (std::size_t i = 0; i < fsz; ++i) mc.F.push_back(surf.edges[ev[i]].id);
                mc.color = a;
                Rat in_mass = 0, avoid_mass = 0;
                for (const auto& [key, w] : star[v]) {
                    bool in_f = false, in_star = false;
                    for (std::size_t i = 0; i < key.size(); ++i) {
                        if (key[i] == a) {
                            in_star = true;
                            if (i < fsz) in_f = true;
                        }
                    }
                    if (in_f) in_mass += w;
                    if (!in_star) avoid_mass += w;
                }
                mc.prob_in = in_mass / z;
                mc.prob_avoid = avoid_mass / z;
                mc.upper = rat(static_cast<long>(fsz), beta_v - 1 + static_cast<long>(fsz));
                mc.ratio_upper = rat(static_cast<long>(fsz), beta_v - 1);
                bool ok = mc.prob_in <= mc.upper;
                if (mc.prob_avoid > 0) ok = ok && (mc.prob_in / mc.prob_avoid <= mc.ratio_upper);
                else ok = ok && (mc.prob_in == 0);
                mc.ok = ok;
                rep.all_hold = rep.all_hold && ok;
                Rat slack = mc.upper - mc.prob_in;
                if (first_upper || slack < rep.worst_upper_slack) rep.worst_upper_slack = slack;
                first_upper = false;
                rep.cases.push_back(std::move(mc));
            }
        }
    }

    // marginal lower bound per edge and color
    long beta = beta_rep.beta;
    for (std::size_t e = 0; e < ne; ++e) {
        long len = static_cast<long>(surf.edges[e].list.size());
        long deg = surf.edge_degree(static_cast<int>(e));
        long slack_e = len - deg;
        // (1 - 1/slack)^deg / len, exact
        Rat refined = Rat(1);
        for (long i = 0; i < deg; ++i) refined *= rat(slack_e - 1, slack_e);
        refined /= len;
        Rat coarse = Rat(1);
        for (long i = 0; i < 2 * delta - 2; ++i) coarse *= rat(beta - 1, beta);
        coarse /= (beta + 2 * delta - 2);
        for (const auto& [c, w] : edge_mass[e]) {
            Rat p = w / z;
            if (p == 0) continue;
            bool ok = p >= refined && p >= coarse;
            rep.all_hold = rep.all_hold && ok;
            Rat slack = p - refined;
            if (first_lower || slack < rep.worst_lower_slack) rep.worst_lower_slack = slack;
            first_lower = false;
        }
    }
    return rep;
}

} // namespace eclab
