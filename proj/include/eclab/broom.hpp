#pragma once

// The broom recursion: distributions over proper colorings of the edge fan at
// a vertex, the rule producing a root fan distribution from child fan vectors,
// the square-root potential transform, and the per-color summary statistics
// the spectral machinery consumes. Templated over the scalar so the same code
// runs exactly (Rat) and in floating point (double).

#include <algorithm>
#include <functional>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "eclab/rational.hpp"

namespace eclab {

struct DegenerateInputError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// An ordered fan of edges sharing one vertex, each with its color list.
// Colorings are all injective tuples, enumerated lexicographically by
// (slot order, list order); that order fixes matrix row order downstream.
struct Broom {
    std::vector<std::string> edge_ids;
    std::vector<std::vector<int>> lists; // sorted

    std::size_t size() const { return edge_ids.size(); }

    const std::vector<std::vector<int>>& colorings() const {
        if (!colorings_built_) {
            std::vector<int> cur(size(), 0);
            std::vector<std::vector<int>>& out = colorings_;
            std::function<void(std::size_t)> go = [&](std::size_t i) {
                if (i == size()) {
                    out.push_back(cur);
                    return;
                }
                for (int c : lists[i]) {
                    if (std::find(cur.begin(), cur.begin() + static_cast<long>(i), c) !=
                        cur.begin() + static_cast<long>(i))
                        continue;
                    cur[i] = c;
                    go(i + 1);
                }
                cur[i] = 0;
            };
            go(0);
            colorings_built_ = true;
        }
        return colorings_;
    }

    std::size_t coloring_index(const std::vector<int>& key) const {
        const auto& cs = colorings();
        auto it = std::lower_bound(cs.begin(), cs.end(), key);
        if (it == cs.end() || *it != key) throw std::runtime_error("coloring not in fan support");
        return static_cast<std::size_t>(it - cs.begin());
    }

  private:
    mutable std::vector<std::vector<int>> colorings_;
    mutable bool colorings_built_ = false;
};

// Colorings are generated in lexicographic order already (lists are sorted),
// so coloring_index can binary search. Guarded by this check in debug builds.

template <class S>
struct BroomVector {
    std::shared_ptr<const Broom> broom;
    std::vector<S> values; // aligned with broom->colorings()
    bool normalized = false;

    static BroomVector uniform(std::shared_ptr<const Broom> b) {
        BroomVector v;
        v.broom = std::move(b);
        std::size_t n = v.broom->colorings().size();
        if (n == 0) throw DegenerateInputError("fan admits no proper coloring");
        v.values.assign(n, S(1) / S(static_cast<long>(n)));
        v.normalized = true;
        return v;
    }

    static BroomVector point_mass_empty() {
        auto b = std::make_shared<Broom>();
        BroomVector v;
        v.broom = b;
        v.values = {S(1)};
        v.normalized = true;
        return v;
    }

    S total() const {
        S t(0);
        for (const auto& x : values) t += x;
        return t;
    }

    void normalize() {
        S t = total();
        if (t == S(0)) throw DegenerateInputError("cannot normalize zero vector");
        for (auto& x : values) x /= t;
        normalized = true;
    }
};

// Per-color summaries of a fan vector: mass using a color, mass avoiding it,
// pairwise avoid masses, and per-slot color masses.
template <class S>
class BroomStats {
  public:
    explicit BroomStats(const BroomVector<S>& p) : broom_(p.broom) {
        const auto& cs = broom_->colorings();
        if (cs.size() != p.values.size()) throw std::invalid_argument("fan vector misaligned");
        total_ = S(0);
        for (std::size_t t = 0; t < cs.size(); ++t) {
            const S& w = p.values[t];
            total_ += w;
            const auto& key = cs[t];
            for (std::size_t i = 0; i < key.size(); ++i) {
                used_[key[i]] += w;
                slot_color_[{static_cast<int>(i), key[i]}] += w;
                for (std::size_t j = i + 1; j < key.size(); ++j) {
                    auto cc = std::minmax(key[i], key[j]);
                    both_[{cc.first, cc.second}] += w;
                    slot_pair_[{static_cast<int>(i), key[i], static_cast<int>(j), key[j]}] += w;
                }
            }
        }
    }

    const S& total() const { return total_; }

    S with_color(int c) const { return get(used_, c); }          // p(c)
    S avoid(int c) const { return total_ - with_color(c); }      // p(c-bar)

    S avoid_pair(int c1, int c2) const { // p(c1-bar, c2-bar)
        if (c1 == c2) return avoid(c1);
        auto cc = std::minmax(c1, c2);
        return total_ - with_color(c1) - with_color(c2) + get(both_, {cc.first, cc.second});
    }

    S slot_color(int i, int c) const { return get(slot_color_, {i, c}); } // p(i,c)

    S slot_pair(int i, int c1, int j, int c2) const { // p(i,c1,j,c2)
        if (i == j) return c1 == c2 ? slot_color(i, c1) : S(0);
        if (i > j) std::swap(i, j), std::swap(c1, c2);
        return get(slot_pair_, {i, c1, j, c2});
    }

    const Broom& broom() const { return *broom_; }

  private:
    template <class K>
    static S get(const std::map<K, S>& m, const K& k) {
        auto it = m.find(k);
        return it == m.end() ? S(0) : it->second;
    }
    static S get(const std::map<int, S>& m, int k) {
        auto it = m.find(k);
        return it == m.end() ? S(0) : it->second;
    }

    std::shared_ptr<const Broom> broom_;
    S total_;
    std::map<int, S> used_;
    std::map<std::pair<int, int>, S> both_;
    std::map<std::pair<int, int>, S> slot_color_;
    std::map<std::tuple<int, int, int, int>, S> slot_pair_;
};

// One recursion step: the root fan coloring pi gets weight proportional to the
// product over children of the mass avoiding pi's color on their edge. The
// result is normalized; scaling any child leaves it unchanged.
template <class S>
BroomVector<S> recurse(const std::vector<BroomVector<S>>& children, std::shared_ptr<const Broom> root_broom) {
    if (children.size() != root_broom->size())
        throw std::invalid_argument("one child fan vector required per root edge");
    std::vector<std::map<int, S>> avoid(children.size());
    for (std::size_t i = 0; i < children.size(); ++i) {
        BroomStats<S> st(children[i]);
        if (st.total() == S(0)) throw DegenerateInputError("child fan vector is identically zero");
        for (int c : root_broom->lists[i]) avoid[i][c] = st.avoid(c);
    }
    BroomVector<S> out;
    out.broom = root_broom;
    const auto& cs = root_broom->colorings();
    out.values.assign(cs.size(), S(0));
    S z(0);
    for (std::size_t t = 0; t < cs.size(); ++t) {
        S w(1);
        for (std::size_t i = 0; i < children.size(); ++i) {
            w *= avoid[i].at(cs[t][i]);
            if (w == S(0)) break;
        }
        out.values[t] = w;
        z += w;
    }
    if (z == S(0)) throw DegenerateInputError("recursion normalizer vanished");
    for (auto& x : out.values) x /= z;
    out.normalized = true;
    return out;
}

// Square-root potential: the only transform the analysis uses.
inline double potential_forward(double x) {
    if (x < 0) throw std::domain_error("potential of a negative mass");
    return 2.0 * std::sqrt(x);
}
inline double potential_back(double y) { return (y / 2.0) * (y / 2.0); }

inline std::vector<double> potential_forward(const std::vector<double>& xs) {
    std::vector<double> out(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) out[i] = potential_forward(xs[i]);
    return out;
}
inline std::vector<double> potential_back(const std::vector<double>& ys) {
    std::vector<double> out(ys.size());
    for (std::size_t i = 0; i < ys.size(); ++i) out[i] = potential_back(ys[i]);
    return out;
}

// Marginal-bound condition on a recursion step. Each record is one inequality
// instance; `holds` collects the conjunction.
template <class S>
struct ConditionReport {
    struct Item {
        std::string what;
        S lhs, rhs;
        bool ok;
    };
    std::vector<Item> items;
    bool holds = true;

    void add(std::string what, S lhs, S rhs) {
        bool ok = !(lhs > rhs);
        holds = holds && ok;
        items.push_back({std::move(what), std::move(lhs), std::move(rhs), ok});
    }
};

// Checks, for a recursion step root = recurse(children) with slack parameter
// beta:
//   p_i(a)          <= s_i / (beta-1+s_i)   for child fan size s_i (children
//                                           that are true subtree marginals)
//   p_r(i,a) * |p_i| <= p_i(a-bar) / (beta-1)
//   p_r(a)          <= d / (beta-1+d)
//   p_r(a) (beta-1) <= d * p_r(a-bar)
// The last three hold for arbitrary nonnegative child vectors; the first needs
// children that are distributions.
template <class S>
ConditionReport<S> check_condition_marginal(const std::vector<BroomVector<S>>& children, const BroomVector<S>& root,
                                            long beta, bool children_are_marginals = true) {
    if (beta < 2) throw std::invalid_argument("condition check requires beta >= 2");
    ConditionReport<S> rep;
    long d = static_cast<long>(children.size());
    BroomStats<S> rs(root);

    std::vector<BroomStats<S>> cs;
    cs.reserve(children.size());
    for (const auto& ch : children) cs.emplace_back(ch);

    for (std::size_t i = 0; i < children.size(); ++i) {
        std::vector<int> palette;
        for (const auto& l : children[i].broom->lists)
            for (int c : l) palette.push_back(c);
        std::sort(palette.begin(), palette.end());
        palette.erase(std::unique(palette.begin(), palette.end()), palette.end());
        long s_i = static_cast<long>(children[i].broom->size());
        for (int a : palette) {
            if (children_are_marginals) {
                rep.add("child_mass[" + std::to_string(i) + "," + std::to_string(a) + "]",
                        cs[i].with_color(a) * S(beta - 1 + s_i), cs[i].total() * S(s_i));
            }
        }
        for (int a : root.broom->lists[i]) {
            // p_r(i,a) * sum(p_i) * (beta-1) <= p_i(a-bar)
            rep.add("slot_ratio[" + std::to_string(i) + "," + std::to_string(a) + "]",
                    rs.slot_color(static_cast<int>(i), a) * cs[i].total() * S(beta - 1), cs[i].avoid(a));
        }
    }

    std::vector<int> root_palette;
    for (const auto& l : root.broom->lists)
        for (int c : l) root_palette.push_back(c);
    std::sort(root_palette.begin(), root_palette.end());
    root_palette.erase(std::unique(root_palette.begin(), root_palette.end()), root_palette.end());
    for (int a : root_palette) {
        rep.add("root_mass[" + std::to_string(a) + "]", rs.with_color(a) * S(beta - 1 + d), rs.total() * S(d));
        rep.add("root_ratio[" + std::to_string(a) + "]", rs.with_color(a) * S(beta - 1), rs.avoid(a) * S(d));
    }
    return rep;
}

} // namespace eclab
