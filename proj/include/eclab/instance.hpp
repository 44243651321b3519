#pragma once

// List-edge-coloring instances: a graph, per-edge color lists over a palette
// [q], optional rooting, and proper partial colorings (pinnings). Everything
// downstream ingests instances through this header, either programmatically or
// via the JSON file format at the bottom.

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "eclab/rational.hpp"

namespace eclab {

struct StructuralError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct FeasibilityError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct EdgeRec {
    std::string id;
    int u = -1, v = -1;          // dense vertex indices
    std::vector<int> list;       // sorted, deduplicated colors in 1..q
};

struct Pinning {
    // edge id -> color, kept sorted by edge id
    std::map<std::string, int> assignments;

    bool empty() const { return assignments.empty(); }
    bool pins(const std::string& e) const { return assignments.count(e) > 0; }
};

class Instance {
  public:
    int q = 0;
    std::vector<std::string> vertex_ids;
    std::vector<EdgeRec> edges;
    std::optional<std::string> root; // set only for rooted trees

    int vertex_index(const std::string& id) const {
        auto it = vertex_idx_.find(id);
        if (it == vertex_idx_.end()) throw StructuralError("unknown vertex id: " + id);
        return it->second;
    }
    int edge_index(const std::string& id) const {
        auto it = edge_idx_.find(id);
        if (it == edge_idx_.end()) throw StructuralError("unknown edge id: " + id);
        return it->second;
    }
    bool has_edge(const std::string& id) const { return edge_idx_.count(id) > 0; }

    std::size_t num_vertices() const { return vertex_ids.size(); }
    std::size_t num_edges() const { return edges.size(); }

    const std::vector<int>& edges_at(int v) const { return edges_at_vertex_[v]; }

    int vertex_degree(int v) const { return static_cast<int>(edges_at_vertex_[v].size()); }

    int max_degree() const {
        int d = 0;
        for (std::size_t v = 0; v < vertex_ids.size(); ++v) d = std::max(d, vertex_degree(static_cast<int>(v)));
        return d;
    }

    // number of edges sharing an endpoint with e
    int edge_degree(int e) const {
        const auto& er = edges[e];
        int d = vertex_degree(er.u) + vertex_degree(er.v) - 2;
        return d;
    }

    bool adjacent_edges(int e, int f) const {
        if (e == f) return false;
        const auto& a = edges[e];
        const auto& b = edges[f];
        return a.u == b.u || a.u == b.v || a.v == b.u || a.v == b.v;
    }

    // edges adjacent to e (sharing an endpoint)
    std::vector<int> edge_neighbors(int e) const {
        std::vector<int> out;
        const auto& er = edges[e];
        for (int f : edges_at_vertex_[er.u])
            if (f != e) out.push_back(f);
        for (int f : edges_at_vertex_[er.v])
            if (f != e && er.u != er.v) out.push_back(f);
        std::sort(out.begin(), out.end());
        out.erase(std::unique(out.begin(), out.end()), out.end());
        return out;
    }

    bool list_has(int e, int c) const {
        const auto& l = edges[e].list;
        return std::binary_search(l.begin(), l.end(), c);
    }

    // --- construction ------------------------------------------------------

    static Instance make(int q, const std::vector<std::string>& vertices,
                         const std::vector<std::tuple<std::string, std::string, std::string, std::vector<int>>>&
                             edge_specs, // (id, end, end, list)
                         std::optional<std::string> root = std::nullopt) {
        Instance ins;
        ins.q = q;
        if (q <= 0) throw StructuralError("palette size must be positive");
        for (const auto& v : vertices) {
            if (ins.vertex_idx_.count(v)) throw StructuralError("duplicate vertex id: " + v);
            ins.vertex_idx_[v] = static_cast<int>(ins.vertex_ids.size());
            ins.vertex_ids.push_back(v);
        }
        for (const auto& [id, a, b, list] : edge_specs) {
            if (ins.edge_idx_.count(id)) throw StructuralError("duplicate edge id: " + id);
            EdgeRec er;
            er.id = id;
            er.u = ins.vertex_index(a);
            er.v = ins.vertex_index(b);
            if (er.u == er.v) throw StructuralError("self-loop on edge: " + id);
            er.list = list;
            std::sort(er.list.begin(), er.list.end());
            er.list.erase(std::unique(er.list.begin(), er.list.end()), er.list.end());
            for (int c : er.list)
                if (c < 1 || c > q) throw StructuralError("color out of palette on edge " + id);
            ins.edge_idx_[id] = static_cast<int>(ins.edges.size());
            ins.edges.push_back(std::move(er));
        }
        ins.edges_at_vertex_.assign(ins.vertex_ids.size(), {});
        for (std::size_t e = 0; e < ins.edges.size(); ++e) {
            ins.edges_at_vertex_[ins.edges[e].u].push_back(static_cast<int>(e));
            ins.edges_at_vertex_[ins.edges[e].v].push_back(static_cast<int>(e));
        }
        if (root) {
            ins.vertex_index(*root); // must exist
            ins.root = root;
            ins.check_tree_rooted();
        }
        return ins;
    }

    // Rooted-tree check: connected, acyclic, contains the root.
    void check_tree_rooted() const {
        if (!root) throw StructuralError("instance is not rooted");
        if (edges.empty()) return;
        std::vector<int> parent(vertex_ids.size(), -2);
        std::vector<int> stack{vertex_index(*root)};
        parent[stack[0]] = -1;
        std::size_t seen_edges = 0;
        while (!stack.empty()) {
            int v = stack.back();
            stack.pop_back();
            for (int e : edges_at_vertex_[v]) {
                int w = edges[e].u == v ? edges[e].v : edges[e].u;
                if (parent[w] == -2) {
                    parent[w] = e;
                    ++seen_edges;
                    stack.push_back(w);
                } else if (parent[v] != e) {
                    throw StructuralError("rooted instance contains a cycle");
                }
            }
        }
        if (seen_edges != edges.size()) throw StructuralError("rooted instance is not connected");
    }

    bool is_tree() const {
        if (edges.size() + 1 != vertex_ids.size() && !edges.empty()) return false;
        if (edges.empty()) return vertex_ids.size() <= 1;
        // connectivity
        std::vector<char> seen(vertex_ids.size(), 0);
        std::vector<int> stack{0};
        seen[0] = 1;
        std::size_t n = 1;
        while (!stack.empty()) {
            int v = stack.back();
            stack.pop_back();
            for (int e : edges_at_vertex_[v]) {
                int w = edges[e].u == v ? edges[e].v : edges[e].u;
                if (!seen[w]) {
                    seen[w] = 1;
                    ++n;
                    stack.push_back(w);
                }
            }
        }
        return n == vertex_ids.size();
    }

  private:
    std::map<std::string, int> vertex_idx_;
    std::map<std::string, int> edge_idx_;
    std::vector<std::vector<int>> edges_at_vertex_;
};

// Per-edge slack |L(e)| - deg(e) and its minimum over the instance.
struct BetaReport {
    long beta = 0;
    std::map<std::string, long> per_edge_slack;
};

// Structural validation plus the slack report. Rejects multi-edges: two edges
// on the same endpoint pair are adjacent twice over and the proper-coloring
// semantics downstream assume simple adjacency.
inline BetaReport validate(const Instance& ins) {
    if (ins.num_edges() == 0) throw StructuralError("instance has no edges");
    std::set<std::pair<int, int>> endpoint_pairs;
    for (const auto& er : ins.edges) {
        auto key = std::minmax(er.u, er.v);
        if (!endpoint_pairs.insert({key.first, key.second}).second)
            throw StructuralError("multi-edge between " + ins.vertex_ids[er.u] + " and " + ins.vertex_ids[er.v]);
        if (er.list.empty()) throw StructuralError("empty color list on edge " + er.id);
    }
    BetaReport rep;
    bool first = true;
    for (std::size_t e = 0; e < ins.num_edges(); ++e) {
        long slack = static_cast<long>(ins.edges[e].list.size()) - ins.edge_degree(static_cast<int>(e));
        rep.per_edge_slack[ins.edges[e].id] = slack;
        if (first || slack < rep.beta) rep.beta = slack;
        first = false;
    }
    return rep;
}

inline void check_pinning(const Instance& ins, const Pinning& pin) {
    for (const auto& [eid, c] : pin.assignments) {
        int e = ins.edge_index(eid);
        if (!ins.list_has(e, c)) throw FeasibilityError("pinned color " + std::to_string(c) + " not in list of " + eid);
    }
    for (const auto& [eid, c] : pin.assignments) {
        int e = ins.edge_index(eid);
        for (int f : ins.edge_neighbors(e)) {
            auto it = pin.assignments.find(ins.edges[f].id);
            if (it != pin.assignments.end() && it->second == c)
                throw FeasibilityError("adjacent pinned edges " + eid + ", " + ins.edges[f].id + " share color " +
                                       std::to_string(c));
        }
    }
}

// Absorb a pinning: delete the pinned edges and strike each pinned color from
// the lists of the edges that were adjacent to it. Slack per surviving edge
// never decreases under this surgery.
inline Instance apply_pinning(const Instance& ins, const Pinning& pin) {
    check_pinning(ins, pin);
    std::vector<std::set<int>> removed(ins.num_edges());
    for (const auto& [eid, c] : pin.assignments) {
        int e = ins.edge_index(eid);
        for (int f : ins.edge_neighbors(e))
            if (!pin.pins(ins.edges[f].id)) removed[f].insert(c);
    }
    std::vector<std::tuple<std::string, std::string, std::string, std::vector<int>>> specs;
    for (std::size_t e = 0; e < ins.num_edges(); ++e) {
        const auto& er = ins.edges[e];
        if (pin.pins(er.id)) continue;
        std::vector<int> list;
        for (int c : er.list)
            if (!removed[e].count(c)) list.push_back(c);
        specs.emplace_back(er.id, ins.vertex_ids[er.u], ins.vertex_ids[er.v], list);
    }
    // Rooting does not survive the surgery in general (components may split),
    // so the result is unrooted; callers re-root if they still have a tree.
    return Instance::make(ins.q, ins.vertex_ids, specs, std::nullopt);
}

// Replace edge e = {u,v} by two pendant copies, one hanging off each original
// endpoint through its own fresh vertex, both inheriting e's list. The copies
// are mutually non-adjacent, so conditioning them to share a color is proper
// and reproduces the original distribution on the remaining edges.
inline std::tuple<Instance, std::string, std::string> split_edge(const Instance& ins, const std::string& eid) {
    int e = ins.edge_index(eid);
    std::vector<std::string> verts = ins.vertex_ids;
    auto fresh = [&](std::string base) {
        int n = 0;
        std::string name = base;
        while (std::find(verts.begin(), verts.end(), name) != verts.end()) name = base + "_" + std::to_string(n++);
        verts.push_back(name);
        return name;
    };
    std::string w1 = fresh("__split_" + eid + "_a");
    std::string w2 = fresh("__split_" + eid + "_b");
    std::string id1 = eid + "#1", id2 = eid + "#2";
    std::vector<std::tuple<std::string, std::string, std::string, std::vector<int>>> specs;
    for (std::size_t f = 0; f < ins.num_edges(); ++f) {
        const auto& er = ins.edges[f];
        if (static_cast<int>(f) == e) {
            specs.emplace_back(id1, ins.vertex_ids[er.u], w1, er.list);
            specs.emplace_back(id2, w2, ins.vertex_ids[er.v], er.list);
        } else {
            specs.emplace_back(er.id, ins.vertex_ids[er.u], ins.vertex_ids[er.v], er.list);
        }
    }
    return {Instance::make(ins.q, verts, specs, std::nullopt), id1, id2};
}

// --- JSON file format -------------------------------------------------------
//
// { "q": 5, "vertices": ["u","v"], "edges": [{"id":"e1","ends":["u","v"],
//   "list":[1,2,3]}], "root": "u", "pinning": [{"edge":"e1","color":2}] }
//
// Unknown keys anywhere are rejected.

inline void reject_unknown_keys(const nlohmann::json& j, const std::set<std::string>& allowed,
                                const std::string& where) {
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!allowed.count(it.key())) throw StructuralError("unknown key \"" + it.key() + "\" in " + where);
}

inline std::pair<Instance, Pinning> instance_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw StructuralError("instance file must hold a JSON object");
    reject_unknown_keys(j, {"q", "vertices", "edges", "root", "pinning"}, "instance");
    if (!j.contains("q") || !j.contains("vertices") || !j.contains("edges"))
        throw StructuralError("instance requires q, vertices, edges");
    int q = j.at("q").get<int>();
    std::vector<std::string> vertices = j.at("vertices").get<std::vector<std::string>>();
    std::vector<std::tuple<std::string, std::string, std::string, std::vector<int>>> specs;
    for (const auto& je : j.at("edges")) {
        reject_unknown_keys(je, {"id", "ends", "list"}, "edge");
        auto ends = je.at("ends").get<std::vector<std::string>>();
        if (ends.size() != 2) throw StructuralError("edge ends must name two vertices");
        specs.emplace_back(je.at("id").get<std::string>(), ends[0], ends[1], je.at("list").get<std::vector<int>>());
    }
    std::optional<std::string> root;
    if (j.contains("root")) root = j.at("root").get<std::string>();
    Instance ins = Instance::make(q, vertices, specs, root);
    Pinning pin;
    if (j.contains("pinning")) {
        for (const auto& jp : j.at("pinning")) {
            reject_unknown_keys(jp, {"edge", "color"}, "pinning");
            std::string eid = jp.at("edge").get<std::string>();
            if (pin.assignments.count(eid)) throw StructuralError("edge pinned twice: " + eid);
            pin.assignments[eid] = jp.at("color").get<int>();
        }
        check_pinning(ins, pin);
    }
    return {ins, pin};
}

inline nlohmann::json instance_to_json(const Instance& ins, const Pinning& pin = {}) {
    nlohmann::json j;
    j["q"] = ins.q;
    j["vertices"] = ins.vertex_ids;
    j["edges"] = nlohmann::json::array();
    for (const auto& er : ins.edges)
        j["edges"].push_back({{"id", er.id}, {"ends", {ins.vertex_ids[er.u], ins.vertex_ids[er.v]}}, {"list", er.list}});
    if (ins.root) j["root"] = *ins.root;
    if (!pin.empty()) {
        j["pinning"] = nlohmann::json::array();
        for (const auto& [eid, c] : pin.assignments) j["pinning"].push_back({{"edge", eid}, {"color", c}});
    }
    return j;
}

} // namespace eclab
