#pragma once

// Exact distribution tables over partial colorings of a named edge set, plus
// boundary weight functions for weighted coloring instances.

#include <algorithm>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "eclab/rational.hpp"

namespace eclab {

// Map from color tuples (aligned with support_edges) to exact probabilities.
// Entries are kept sorted lexicographically by their color tuple so iteration
// order, serialization, and failure reports are deterministic.
struct DistributionTable {
    std::vector<std::string> support_edges;
    std::vector<std::pair<std::vector<int>, Rat>> entries; // sorted by key
    Rat total = 0;

    void sort_entries() {
        std::sort(entries.begin(), entries.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });
    }

    void normalize() {
        Rat s = 0;
        for (auto& [k, p] : entries) s += p;
        if (s == 0) throw std::runtime_error("cannot normalize an all-zero table");
        for (auto& [k, p] : entries) p /= s;
        total = 1;
    }

    Rat mass(const std::vector<int>& key) const {
        auto it = std::lower_bound(entries.begin(), entries.end(), key,
                                   [](const auto& e, const std::vector<int>& k) { return e.first < k; });
        if (it != entries.end() && it->first == key) return it->second;
        return Rat(0);
    }

    Rat sum() const {
        Rat s = 0;
        for (const auto& [k, p] : entries) s += p;
        return s;
    }

    // Probability of an arbitrary event over the support.
    template <class Pred>
    Rat prob(Pred&& pred) const {
        Rat s = 0;
        for (const auto& [k, p] : entries)
            if (pred(k)) s += p;
        return s;
    }

    // Conditional table given an event; exact renormalization.
    template <class Pred>
    DistributionTable condition(Pred&& pred) const {
        DistributionTable out;
        out.support_edges = support_edges;
        Rat s = 0;
        for (const auto& [k, p] : entries)
            if (pred(k)) {
                out.entries.emplace_back(k, p);
                s += p;
            }
        if (s == 0) throw std::runtime_error("conditioning event has zero probability");
        for (auto& [k, p] : out.entries) p /= s;
        out.total = 1;
        return out;
    }

    int edge_pos(const std::string& eid) const {
        for (std::size_t i = 0; i < support_edges.size(); ++i)
            if (support_edges[i] == eid) return static_cast<int>(i);
        throw std::runtime_error("edge not in table support: " + eid);
    }

    bool same_support(const DistributionTable& other) const { return support_edges == other.support_edges; }

    // Exact total variation distance to another table on the same support.
    Rat tv_distance(const DistributionTable& other) const {
        if (!same_support(other)) throw std::runtime_error("tv_distance: support mismatch");
        std::map<std::vector<int>, Rat> diff;
        for (const auto& [k, p] : entries) diff[k] += p;
        for (const auto& [k, p] : other.entries) diff[k] -= p;
        Rat s = 0;
        for (const auto& [k, d] : diff) s += abs(d);
        return s / 2;
    }
};

inline nlohmann::json table_to_json(const DistributionTable& t) {
    nlohmann::json j;
    j["edges"] = t.support_edges;
    j["entries"] = nlohmann::json::array();
    for (const auto& [k, p] : t.entries) j["entries"].push_back({{"colors", k}, {"p", rat_to_string(p)}});
    return j;
}

inline DistributionTable table_from_json(const nlohmann::json& j) {
    DistributionTable t;
    t.support_edges = j.at("edges").get<std::vector<std::string>>();
    for (const auto& je : j.at("entries"))
        t.entries.emplace_back(je.at("colors").get<std::vector<int>>(), rat_from_string(je.at("p").get<std::string>()));
    t.sort_entries();
    t.total = t.sum();
    return t;
}

// One boundary region: a connected edge set with a weight on each of its
// proper partial colorings. Colorings absent from the map weigh zero.
struct WeightRegion {
    std::vector<std::string> edges;                 // region edge ids, fixed order
    std::map<std::vector<int>, Rat> weights;        // coloring tuple -> weight

    Rat weight(const std::vector<int>& key) const {
        auto it = weights.find(key);
        return it == weights.end() ? Rat(0) : it->second;
    }
};

struct WeightedBoundary {
    std::vector<WeightRegion> regions; // pairwise disjoint edge sets

    bool empty() const { return regions.empty(); }

    bool touches(const std::string& eid) const {
        for (const auto& r : regions)
            for (const auto& e : r.edges)
                if (e == eid) return true;
        return false;
    }
};

} // namespace eclab
