#pragma once

// Seeded instance families for the sweeps and the acceptance battery. Every
// generator is a pure function of its Rng, so a (config, seed) pair pins the
// whole sweep.

#include <algorithm>
#include <string>
#include <vector>

#include "eclab/broom.hpp"
#include "eclab/instance.hpp"
#include "eclab/rng.hpp"

namespace eclab {

// Random tree, attachment model with a degree cap; color lists are random
// sublists whose product stays under the search budget.
inline Instance random_tree_instance(Rng& rng, int max_edges, int delta_cap, int q, double raw_budget = 3e6) {
    int n_edges = rng.range(1, max_edges);
    std::vector<std::string> verts{"v0"};
    std::vector<int> deg{0};
    std::vector<std::tuple<std::string, std::string, std::string, std::vector<int>>> specs;
    double raw = 1;
    for (int e = 1; e <= n_edges; ++e) {
        int parent;
        int guard = 0;
        do {
            parent = rng.range(0, e - 1);
        } while (deg[static_cast<std::size_t>(parent)] >= delta_cap && ++guard < 64);
        if (deg[static_cast<std::size_t>(parent)] >= delta_cap) break;
        deg[static_cast<std::size_t>(parent)]++;
        deg.push_back(1);
        verts.push_back("v" + std::to_string(e));
        // list size capped so the raw search space stays enumerable
        int max_size = q;
        while (max_size > 2 && raw * max_size > raw_budget) --max_size;
        int size = rng.range(std::min(2, max_size), max_size);
        raw *= size;
        std::vector<int> palette(static_cast<std::size_t>(q));
        for (int c = 1; c <= q; ++c) palette[static_cast<std::size_t>(c - 1)] = c;
        rng.shuffle(palette);
        std::vector<int> list(palette.begin(), palette.begin() + size);
        specs.emplace_back("e" + std::to_string(e), "v" + std::to_string(parent), "v" + std::to_string(e), list);
    }
    return Instance::make(q, verts, specs, "v0");
}

// Random tree of bounded depth with full palette lists; used where the slack
// structure matters more than list diversity.
inline Instance random_depth_tree(Rng& rng, int max_depth, int branch_cap, int q) {
    std::vector<int> palette(static_cast<std::size_t>(q));
    for (int c = 1; c <= q; ++c) palette[static_cast<std::size_t>(c - 1)] = c;
    std::vector<std::string> verts{"v0"};
    std::vector<std::tuple<std::string, std::string, std::string, std::vector<int>>> specs;
    struct Node {
        std::string name;
        int depth;
    };
    std::vector<Node> frontier{{"v0", 0}};
    int counter = 0;
    while (!frontier.empty()) {
        Node cur = frontier.back();
        frontier.pop_back();
        if (cur.depth >= max_depth) continue;
        int kids = cur.depth == 0 ? rng.range(1, branch_cap) : rng.range(0, branch_cap);
        for (int k = 0; k < kids; ++k) {
            std::string child = "v" + std::to_string(++counter);
            verts.push_back(child);
            specs.emplace_back("e" + std::to_string(counter), cur.name, child, palette);
            frontier.push_back({child, cur.depth + 1});
        }
    }
    if (specs.empty()) {
        verts.push_back("v1");
        specs.emplace_back("e1", "v0", "v1", palette);
    }
    return Instance::make(q, verts, specs, "v0");
}

// Proper random pinning on leaf-incident edges.
inline Pinning random_leaf_pinning(Rng& rng, const Instance& ins, double rate = 0.4) {
    Pinning pin;
    for (std::size_t e = 0; e < ins.num_edges(); ++e) {
        const auto& er = ins.edges[e];
        bool leafy = ins.vertex_degree(er.u) == 1 || ins.vertex_degree(er.v) == 1;
        if (!leafy || rng.unit() >= rate) continue;
        const auto& list = er.list;
        int c = list[static_cast<std::size_t>(rng.below(list.size()))];
        pin.assignments[er.id] = c;
    }
    // drop clashing assignments deterministically (keep the first by edge id)
    Pinning ok;
    for (const auto& [eid, c] : pin.assignments) {
        bool clash = false;
        int e = ins.edge_index(eid);
        for (int f : ins.edge_neighbors(e)) {
            auto it = ok.assignments.find(ins.edges[static_cast<std::size_t>(f)].id);
            if (it != ok.assignments.end() && it->second == c) clash = true;
        }
        if (!clash) ok.assignments[eid] = c;
    }
    return ok;
}

// Catalog of small instances satisfying the doubled-slack hypothesis at
// eps = 1: paths and cycles on the full 7-color palette (their max degree is
// 2, so slack 5 = (1+1)*2+1 suffices), matchings with list size >= 3, and a
// disjoint path-plus-edge union.
inline std::vector<Instance> coupling_catalog() {
    std::vector<Instance> fam;
    auto full = [](int q) {
        std::vector<int> l(static_cast<std::size_t>(q));
        for (int c = 1; c <= q; ++c) l[static_cast<std::size_t>(c - 1)] = c;
        return l;
    };
    // paths with 1..7 edges
    for (int k = 1; k <= 7; ++k) {
        std::vector<std::string> verts;
        std::vector<std::tuple<std::string, std::string, std::string, std::vector<int>>> specs;
        for (int i = 0; i <= k; ++i) verts.push_back("p" + std::to_string(i));
        for (int i = 1; i <= k; ++i)
            specs.emplace_back("e" + std::to_string(i), "p" + std::to_string(i - 1), "p" + std::to_string(i), full(7));
        fam.push_back(Instance::make(7, verts, specs));
    }
    // cycles (no pendant edges; they exercise the hypothesis filter only)
    for (int k : {3, 5}) {
        std::vector<std::string> verts;
        std::vector<std::tuple<std::string, std::string, std::string, std::vector<int>>> specs;
        for (int i = 0; i < k; ++i) verts.push_back("c" + std::to_string(i));
        for (int i = 0; i < k; ++i)
            specs.emplace_back("e" + std::to_string(i), "c" + std::to_string(i),
                               "c" + std::to_string((i + 1) % k), full(7));
        fam.push_back(Instance::make(7, verts, specs));
    }
    // matchings with mixed list sizes >= 3
    {
        std::vector<std::string> verts;
        std::vector<std::tuple<std::string, std::string, std::string, std::vector<int>>> specs;
        std::vector<std::vector<int>> lists{{1, 2, 3}, {2, 4, 5, 6}, {1, 3, 5, 6, 7}};
        for (int i = 0; i < 3; ++i) {
            verts.push_back("a" + std::to_string(i));
            verts.push_back("b" + std::to_string(i));
            specs.emplace_back("m" + std::to_string(i), "a" + std::to_string(i), "b" + std::to_string(i),
                               lists[static_cast<std::size_t>(i)]);
        }
        fam.push_back(Instance::make(7, verts, specs));
    }
    // disjoint union: 4-edge path plus an isolated edge
    {
        std::vector<std::string> verts;
        std::vector<std::tuple<std::string, std::string, std::string, std::vector<int>>> specs;
        for (int i = 0; i <= 4; ++i) verts.push_back("p" + std::to_string(i));
        for (int i = 1; i <= 4; ++i)
            specs.emplace_back("e" + std::to_string(i), "p" + std::to_string(i - 1), "p" + std::to_string(i), full(7));
        verts.push_back("x");
        verts.push_back("y");
        specs.emplace_back("solo", "x", "y", std::vector<int>{1, 2, 4, 6, 7});
        fam.push_back(Instance::make(7, verts, specs));
    }
    return fam;
}

// Random positive depth-2 recursion inputs for the spectral audits.
struct Depth2Inputs {
    std::vector<BroomVector<double>> children;
    BroomVector<double> root;
};

inline Depth2Inputs random_depth2_inputs(Rng& rng, int d, int q, double lo = 1e-3) {
    std::vector<int> palette(static_cast<std::size_t>(q));
    for (int c = 1; c <= q; ++c) palette[static_cast<std::size_t>(c - 1)] = c;
    std::vector<BroomVector<double>> children;
    auto root_broom = std::make_shared<Broom>();
    for (int i = 0; i < d; ++i) {
        int fan = rng.range(1, 2);
        auto cb = std::make_shared<Broom>();
        for (int j = 0; j < fan; ++j) {
            cb->edge_ids.push_back("c" + std::to_string(i) + "_" + std::to_string(j));
            cb->lists.push_back(palette);
        }
        BroomVector<double> c;
        c.broom = cb;
        for (std::size_t t = 0; t < cb->colorings().size(); ++t) c.values.push_back(lo + (1 - lo) * rng.unit());
        double tot = c.total();
        for (auto& v : c.values) v /= tot;
        c.normalized = true;
        children.push_back(std::move(c));
        root_broom->edge_ids.push_back("r" + std::to_string(i));
        root_broom->lists.push_back(palette);
    }
    Depth2Inputs out;
    out.root = recurse(children, root_broom);
    out.children = std::move(children);
    return out;
}

} // namespace eclab
