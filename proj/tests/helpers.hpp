#pragma once

// Shared instance builders for the test suites.

#include <memory>
#include <string>
#include <vector>

#include "eclab/broom.hpp"
#include "eclab/instance.hpp"

namespace testutil {

using eclab::Instance;

inline std::vector<int> full_list(int q) {
    std::vector<int> l(static_cast<std::size_t>(q));
    for (int c = 1; c <= q; ++c) l[static_cast<std::size_t>(c - 1)] = c;
    return l;
}

// Path v0 - v1 - ... - vk with edges e1..ek, all lists [q].
inline Instance path_instance(int k, int q, std::optional<std::string> root = std::nullopt) {
    std::vector<std::string> verts;
    for (int i = 0; i <= k; ++i) verts.push_back("v" + std::to_string(i));
    std::vector<std::tuple<std::string, std::string, std::string, std::vector<int>>> specs;
    for (int i = 1; i <= k; ++i)
        specs.emplace_back("e" + std::to_string(i), "v" + std::to_string(i - 1), "v" + std::to_string(i), full_list(q));
    return Instance::make(q, verts, specs, root);
}

// Star with center c and d leaves, all lists [q].
inline Instance star_instance(int d, int q, std::optional<std::string> root = std::nullopt) {
    std::vector<std::string> verts{"c"};
    std::vector<std::tuple<std::string, std::string, std::string, std::vector<int>>> specs;
    for (int i = 1; i <= d; ++i) {
        verts.push_back("l" + std::to_string(i));
        specs.emplace_back("e" + std::to_string(i), "c", "l" + std::to_string(i), full_list(q));
    }
    return Instance::make(q, verts, specs, root);
}

inline std::shared_ptr<eclab::Broom> make_broom(const std::vector<std::vector<int>>& lists) {
    auto b = std::make_shared<eclab::Broom>();
    for (std::size_t i = 0; i < lists.size(); ++i) {
        b->edge_ids.push_back("b" + std::to_string(i));
        auto l = lists[i];
        std::sort(l.begin(), l.end());
        b->lists.push_back(l);
    }
    return b;
}

} // namespace testutil
