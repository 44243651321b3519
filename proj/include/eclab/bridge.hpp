#pragma once

// Glue between rooted tree instances, distribution tables, and fan vectors.

#include <memory>
#include <string>
#include <vector>

#include "eclab/broom.hpp"
#include "eclab/distribution.hpp"
#include "eclab/exact.hpp"
#include "eclab/instance.hpp"

namespace eclab {

// Child edges of v w.r.t. the instance root, in edge-index order.
inline std::vector<int> child_edges_of(const Instance& ins, const std::string& vertex_id) {
    TreeEngine eng(ins, {});
    return eng.child_edges(ins.vertex_index(vertex_id));
}

inline std::shared_ptr<Broom> broom_at(const Instance& ins, const std::string& vertex_id) {
    auto b = std::make_shared<Broom>();
    for (int e : child_edges_of(ins, vertex_id)) {
        b->edge_ids.push_back(ins.edges[static_cast<std::size_t>(e)].id);
        b->lists.push_back(ins.edges[static_cast<std::size_t>(e)].list);
    }
    return b;
}

template <class S>
BroomVector<S> to_broom_vector(std::shared_ptr<const Broom> broom, const DistributionTable& table) {
    if (table.support_edges != broom->edge_ids) throw std::invalid_argument("table support does not match fan");
    BroomVector<S> v;
    v.broom = std::move(broom);
    const auto& cs = v.broom->colorings();
    v.values.assign(cs.size(), S(0));
    for (const auto& [key, p] : table.entries) {
        if constexpr (std::is_same_v<S, double>)
            v.values[v.broom->coloring_index(key)] = to_double(p);
        else
            v.values[v.broom->coloring_index(key)] = p;
    }
    v.normalized = true;
    return v;
}

inline DistributionTable to_table(const BroomVector<Rat>& v) {
    DistributionTable t;
    t.support_edges = v.broom->edge_ids;
    const auto& cs = v.broom->colorings();
    for (std::size_t i = 0; i < cs.size(); ++i)
        if (v.values[i] != 0) t.entries.emplace_back(cs[i], v.values[i]);
    t.sort_entries();
    t.total = t.sum();
    return t;
}

// The sub-instance induced by the subtree hanging below v, rooted at v.
inline Instance subtree_instance(const Instance& ins, const std::string& vertex_id) {
    TreeEngine eng(ins, {});
    int v = ins.vertex_index(vertex_id);
    std::vector<int> verts{v};
    std::vector<int> edges;
    for (std::size_t i = 0; i < verts.size(); ++i) {
        for (int e : eng.child_edges(verts[i])) {
            edges.push_back(e);
            const auto& er = ins.edges[static_cast<std::size_t>(e)];
            verts.push_back(er.u == verts[i] ? er.v : er.u);
        }
    }
    std::vector<std::string> vs;
    for (int w : verts) vs.push_back(ins.vertex_ids[static_cast<std::size_t>(w)]);
    std::vector<std::tuple<std::string, std::string, std::string, std::vector<int>>> specs;
    std::sort(edges.begin(), edges.end());
    for (int e : edges) {
        const auto& er = ins.edges[static_cast<std::size_t>(e)];
        specs.emplace_back(er.id, ins.vertex_ids[er.u], ins.vertex_ids[er.v], er.list);
    }
    return Instance::make(ins.q, vs, specs, vertex_id);
}

// Composition of recursion steps from the leaves to the root of a rooted tree:
// child fan vectors are computed bottom-up, leaves starting from point masses
// (or the supplied leaf-level weight vectors). Exact when S = Rat.
template <class S>
BroomVector<S> recurse_to_root(const Instance& ins, const Pinning& pin) {
    if (!ins.root) throw StructuralError("recursion needs a rooted tree");
    TreeEngine eng(ins, pin); // reuse orientation; DP values unused here
    auto allowed = detail::allowed_colors(ins, pin);

    std::function<BroomVector<S>(int)> at = [&](int v) -> BroomVector<S> {
        const auto& ce = eng.child_edges(v);
        auto broom = std::make_shared<Broom>();
        std::vector<BroomVector<S>> children;
        for (int e : ce) {
            const auto& er = ins.edges[static_cast<std::size_t>(e)];
            broom->edge_ids.push_back(er.id);
            broom->lists.push_back(allowed[static_cast<std::size_t>(e)]);
            int w = (eng.parent_edge(er.u) == e) ? er.u : er.v;
            children.push_back(at(w));
        }
        if (ce.empty()) return BroomVector<S>::point_mass_empty();
        return recurse(children, broom);
    };
    return at(ins.vertex_index(*ins.root));
}

} // namespace eclab
