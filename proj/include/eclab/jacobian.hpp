#pragma once

// Spectral side of the recursion. Builds the Jacobian of the square-root
// potential recursion, its Gram matrix, and the small pair-transfer matrix on
// (edge, color) indices whose 2-norm dominates the Gram spectrum; verifies the
// covariance factorization; measures spectral independence; and reproduces the
// worst-pinning closed form. Floating point throughout (doubles enter here).

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "eclab/broom.hpp"
#include "eclab/linalg.hpp"
#include "eclab/rng.hpp"

namespace eclab {

struct SingularityError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct CapGramError : std::runtime_error {
    CapGramError() : std::runtime_error("root support too large to materialize the Gram matrix") {}
};


// Index set {(slot, color)} with colors drawn from each slot's list.
struct PairIndex {
    std::vector<std::pair<int, int>> items;
    std::map<std::pair<int, int>, std::size_t> pos;

    static PairIndex over_broom(const Broom& b) {
        PairIndex idx;
        for (std::size_t i = 0; i < b.size(); ++i)
            for (int c : b.lists[i]) {
                idx.pos[{static_cast<int>(i), c}] = idx.items.size();
                idx.items.emplace_back(static_cast<int>(i), c);
            }
        return idx;
    }

    std::size_t size() const { return items.size(); }
    std::size_t at(int slot, int color) const { return pos.at({slot, color}); }
};

// Covariance and mean-diagonal of a fan distribution on its (edge,color) set.
template <class S>
struct CovMatrices {
    PairIndex index;
    std::vector<std::vector<S>> cov;
    std::vector<S> mean;
};

template <class S>
CovMatrices<S> covariance_matrices(const BroomVector<S>& p) {
    CovMatrices<S> out;
    out.index = PairIndex::over_broom(*p.broom);
    BroomStats<S> st(p);
    std::size_t n = out.index.size();
    out.mean.assign(n, S(0));
    out.cov.assign(n, std::vector<S>(n, S(0)));
    for (std::size_t x = 0; x < n; ++x) {
        auto [i, c1] = out.index.items[x];
        out.mean[x] = st.slot_color(i, c1);
        for (std::size_t y = 0; y < n; ++y) {
            auto [j, c2] = out.index.items[y];
            out.cov[x][y] = st.slot_pair(i, c1, j, c2) - st.slot_color(i, c1) * st.slot_color(j, c2);
        }
    }
    return out;
}

struct SpectralReport {
    PairIndex index;
    Mat cov;
    std::vector<double> mean_diag;
    double measured_si_constant = 0; // smallest C with Cov <= C * mean diag
};

inline SpectralReport covariance_report(const BroomVector<double>& p) {
    auto cm = covariance_matrices(p);
    SpectralReport rep;
    rep.index = cm.index;
    std::size_t n = cm.index.size();
    rep.cov = Mat(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) rep.cov(i, j) = cm.cov[i][j];
    rep.mean_diag = cm.mean;
    rep.measured_si_constant = whitened_eig_max(rep.cov, rep.mean_diag);
    return rep;
}

struct SpectralOptions {
    std::size_t gram_cap = 5000; // largest root support for which the Gram matrix is materialized
    double fd_step = 1e-6;
};

// Everything one recursion step exposes to the spectral analysis. The Gram
// matrix of the Jacobian factors exactly as U M U^T with U the column matrix
// of the a-vectors (|C_r| x |X|) and M the block-diagonal Gram of the
// b-vectors on the pair index, so norms and traces live on |X|-sized matrices
// even when |C_r| is large.
struct JacobianBundle {
    std::vector<BroomVector<double>> children;
    BroomVector<double> root;
    PairIndex index; // (slot, color) over root fan slots

    Mat a_cols;              // a-vectors as columns, |C_r| x |X|
    Mat b_gram;              // <b_(i,c1), b_(i,c2)> block diagonal, |X| x |X|

    bool has_jac = false;
    std::vector<Mat> blocks; // per-child Jacobian blocks of the potential recursion
    Mat jac;                 // blocks side by side, |C_r| x sum |C_i|
    bool has_gram = false;
    Mat gram;                // jac jac^T when materialized

    Mat pair_transfer;       // small matrix on the pair index
    Mat root_cov;            // covariance of the root fan distribution
    std::vector<double> root_mean;
    std::vector<double> avoid_diag;     // (i,c) -> child i's mass avoiding c
    Mat child_cov_blocks;               // block diagonal color-pair covariances

    std::vector<std::vector<double>> trace_left;  // per root coloring
    std::vector<std::vector<double>> trace_right; // per root coloring

    // squared 2-norm of the potential Jacobian through the factored Gram
    double jac_norm_sq() const {
        Mat g1 = a_cols.transpose() * a_cols;
        Mat w = sym_sqrt(b_gram);
        return std::max(sym_eig_max(w * g1 * w), 0.0);
    }
    double jac_norm() const { return std::sqrt(jac_norm_sq()); }

    double factorization_residual() const {
        // pair_transfer vs root_cov * D^-1 * child_cov_blocks * D^-1, entrywise
        std::size_t n = index.size();
        double worst = 0;
        for (std::size_t x = 0; x < n; ++x)
            for (std::size_t y = 0; y < n; ++y) {
                double s = 0;
                for (std::size_t z = 0; z < n; ++z)
                    s += root_cov(x, z) / avoid_diag[z] * child_cov_blocks(z, y) / avoid_diag[y];
                worst = std::max(worst, std::fabs(pair_transfer(x, y) - s));
            }
        return worst;
    }
};

inline JacobianBundle jacobian_bundle(const std::vector<BroomVector<double>>& children,
                                      const BroomVector<double>& root, const SpectralOptions& opts = {}) {
    JacobianBundle b;
    b.children = children;
    b.root = root;
    b.index = PairIndex::over_broom(*root.broom);

    std::vector<BroomStats<double>> cs;
    cs.reserve(children.size());
    for (const auto& ch : children) cs.emplace_back(ch);
    BroomStats<double> rs(root);

    for (std::size_t i = 0; i < children.size(); ++i)
        for (int c : root.broom->lists[i])
            if (cs[i].avoid(c) <= 0)
                throw SingularityError("child " + std::to_string(i) + " has zero mass avoiding color " +
                                       std::to_string(c));

    const auto& root_cols = root.broom->colorings();
    std::size_t nr = root_cols.size();
    std::size_t nx = b.index.size();

    b.a_cols = Mat(nr, nx);
    for (std::size_t x = 0; x < nx; ++x) {
        auto [i, c] = b.index.items[x];
        double slot_mass = rs.slot_color(i, c);
        for (std::size_t r = 0; r < nr; ++r)
            b.a_cols(r, x) =
                std::sqrt(root.values[r]) * ((root_cols[r][static_cast<std::size_t>(i)] == c ? 1.0 : 0.0) - slot_mass);
    }
    b.b_gram = Mat(nx, nx);
    for (std::size_t x = 0; x < nx; ++x) {
        auto [i, c1] = b.index.items[x];
        for (std::size_t y = 0; y < nx; ++y) {
            auto [j, c2] = b.index.items[y];
            if (i != j) continue;
            const auto& st = cs[static_cast<std::size_t>(i)];
            b.b_gram(x, y) = st.avoid_pair(c1, c2) / (st.avoid(c1) * st.avoid(c2));
        }
    }

    std::size_t total_cols = 0;
    for (const auto& ch : children) total_cols += ch.broom->colorings().size();
    if (nr <= opts.gram_cap && total_cols <= opts.gram_cap) {
        // per-child blocks: sum over colors of outer products a b^T
        b.jac = Mat(nr, total_cols);
        std::size_t col_base = 0;
        for (std::size_t i = 0; i < children.size(); ++i) {
            const auto& child_cols = children[i].broom->colorings();
            Mat block(nr, child_cols.size());
            for (int c : root.broom->lists[i]) {
                double avoid = cs[i].avoid(c);
                // a[pi] as above; b[tau] = 1{c not in tau} sqrt(p_i(tau)) / avoid
                std::size_t x = b.index.at(static_cast<int>(i), c);
                for (std::size_t r = 0; r < nr; ++r) {
                    double a = b.a_cols(r, x);
                    if (a == 0.0) continue;
                    for (std::size_t t = 0; t < child_cols.size(); ++t) {
                        const auto& tau = child_cols[t];
                        if (std::find(tau.begin(), tau.end(), c) != tau.end()) continue;
                        block(r, t) += a * std::sqrt(children[i].values[t]) / avoid;
                    }
                }
            }
            for (std::size_t r = 0; r < nr; ++r)
                for (std::size_t t = 0; t < child_cols.size(); ++t) b.jac(r, col_base + t) = block(r, t);
            b.blocks.push_back(std::move(block));
            col_base += child_cols.size();
        }
        b.has_jac = true;
        b.gram = (b.a_cols * b.b_gram) * b.a_cols.transpose();
        b.has_gram = true;
    }

    // pair-level quantities
    b.root_mean.assign(nx, 0.0);
    b.avoid_diag.assign(nx, 0.0);
    b.root_cov = Mat(nx, nx);
    b.child_cov_blocks = Mat(nx, nx);
    for (std::size_t x = 0; x < nx; ++x) {
        auto [i, c] = b.index.items[x];
        b.root_mean[x] = rs.slot_color(i, c);
        b.avoid_diag[x] = cs[static_cast<std::size_t>(i)].avoid(c);
    }
    for (std::size_t x = 0; x < nx; ++x) {
        auto [i, c1] = b.index.items[x];
        for (std::size_t y = 0; y < nx; ++y) {
            auto [j, c2] = b.index.items[y];
            b.root_cov(x, y) = rs.slot_pair(i, c1, j, c2) - rs.slot_color(i, c1) * rs.slot_color(j, c2);
            if (i == j)
                b.child_cov_blocks(x, y) = cs[static_cast<std::size_t>(i)].avoid_pair(c1, c2) -
                                           cs[static_cast<std::size_t>(i)].avoid(c1) *
                                               cs[static_cast<std::size_t>(i)].avoid(c2);
        }
    }

    // pair transfer: rows (i,c2), columns (j,c4)
    b.pair_transfer = Mat(nx, nx);
    for (std::size_t x = 0; x < nx; ++x) {
        auto [i, c2] = b.index.items[x];
        for (std::size_t y = 0; y < nx; ++y) {
            auto [j, c4] = b.index.items[y];
            double s = 0;
            for (int c3 : root.broom->lists[static_cast<std::size_t>(j)]) {
                double ratio = cs[static_cast<std::size_t>(j)].avoid_pair(c3, c4) /
                               (cs[static_cast<std::size_t>(j)].avoid(c3) * cs[static_cast<std::size_t>(j)].avoid(c4));
                double covterm = rs.slot_pair(j, c3, i, c2) - rs.slot_color(j, c3) * rs.slot_color(i, c2);
                s += ratio * covterm;
            }
            b.pair_transfer(x, y) = s;
        }
    }

    // trace expansion boundary vectors, one pair per root coloring
    b.trace_left.assign(nr, std::vector<double>(nx, 0.0));
    b.trace_right.assign(nr, std::vector<double>(nx, 0.0));
    for (std::size_t r = 0; r < nr; ++r) {
        for (std::size_t x = 0; x < nx; ++x) {
            auto [i, c2] = b.index.items[x];
            double acc = 0;
            for (int c1 : root.broom->lists[static_cast<std::size_t>(i)]) {
                double ratio = cs[static_cast<std::size_t>(i)].avoid_pair(c1, c2) /
                               (cs[static_cast<std::size_t>(i)].avoid(c1) * cs[static_cast<std::size_t>(i)].avoid(c2));
                acc += ratio * ((root_cols[r][static_cast<std::size_t>(i)] == c1 ? 1.0 : 0.0) -
                                rs.slot_color(i, c1));
            }
            b.trace_left[r][x] = acc;
            b.trace_right[r][x] =
                (root_cols[r][static_cast<std::size_t>(i)] == c2 ? 1.0 : 0.0) - rs.slot_color(i, c2);
        }
    }
    return b;
}

// Evaluate the potential recursion as a map between potential coordinates:
// children given in potential scale (concatenated), root in potential scale.
inline std::vector<double> potential_recursion_eval(const std::vector<BroomVector<double>>& shape,
                                                    std::shared_ptr<const Broom> root_broom,
                                                    const std::vector<double>& m) {
    std::vector<BroomVector<double>> kids = shape;
    std::size_t off = 0;
    for (auto& k : kids) {
        for (auto& v : k.values) v = potential_back(m[off++]);
        k.normalized = false;
    }
    auto out = recurse(kids, std::move(root_broom));
    std::vector<double> y(out.values.size());
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = potential_forward(out.values[i]);
    return y;
}

// Central finite differences against the analytic Jacobian in random
// directions; returns the worst relative error.
inline double finite_difference_check(const JacobianBundle& b, int directions, Rng& rng, double step = 1e-6) {
    if (!b.has_jac) throw CapGramError();
    std::size_t total_cols = b.jac.cols, nr = b.jac.rows;
    std::vector<double> m;
    for (const auto& ch : b.children)
        for (double v : ch.values) m.push_back(potential_forward(v));
    double worst = 0;
    for (int d = 0; d < directions; ++d) {
        std::vector<double> u(total_cols);
        double norm = 0;
        for (auto& x : u) {
            x = rng.unit() * 2 - 1;
            norm += x * x;
        }
        norm = std::sqrt(norm);
        for (auto& x : u) x /= norm;
        std::vector<double> mp = m, mm = m;
        for (std::size_t i = 0; i < total_cols; ++i) {
            mp[i] += step * u[i];
            mm[i] -= step * u[i];
        }
        auto yp = potential_recursion_eval(b.children, b.root.broom, mp);
        auto ym = potential_recursion_eval(b.children, b.root.broom, mm);
        double err2 = 0, ref2 = 0;
        for (std::size_t r = 0; r < nr; ++r) {
            double fd = (yp[r] - ym[r]) / (2 * step);
            double an = 0;
            for (std::size_t cidx = 0; cidx < total_cols; ++cidx) an += b.jac(r, cidx) * u[cidx];
            err2 += (fd - an) * (fd - an);
            ref2 += an * an;
        }
        worst = std::max(worst, std::sqrt(err2) / std::max(std::sqrt(ref2), 1e-12));
    }
    return worst;
}

struct DimensionReductionReport {
    std::vector<double> trace_lhs;  // Tr(gram^k)
    std::vector<double> trace_rhs;  // boundary-vector expansion through the pair transfer
    std::vector<double> trace_rel_err;
    double gram_eig_max = 0;
    double gram_eig_min = 0;
    double transfer_norm = 0; // 2-norm of the pair transfer matrix
    double factorization_residual = 0;
    std::vector<double> gram_spectrum;
    bool trace_ok = true;
    bool domination_ok = true; // gram_eig_max <= transfer_norm + tol
    bool psd_ok = true;
};

inline DimensionReductionReport dimension_reduction_audit(const JacobianBundle& b, int k_max, double tol = 1e-9) {
    if (!b.has_gram) throw CapGramError();
    DimensionReductionReport rep;
    rep.gram_spectrum = jacobi_eigenvalues(b.gram);
    rep.gram_eig_max = rep.gram_spectrum.empty() ? 0 : rep.gram_spectrum.back();
    rep.gram_eig_min = rep.gram_spectrum.empty() ? 0 : rep.gram_spectrum.front();
    rep.transfer_norm = spectral_norm(b.pair_transfer);
    rep.factorization_residual = b.factorization_residual();

    std::size_t nr = b.gram.rows, nx = b.index.size();
    Mat apow = b.gram;
    Mat bpow = Mat::identity(nx);
    for (int k = 1; k <= k_max; ++k) {
        double lhs = apow.trace();
        double rhs = 0;
        for (std::size_t r = 0; r < nr; ++r) {
            // alpha^T bpow beta
            double acc = 0;
            for (std::size_t x = 0; x < nx; ++x) {
                double row = 0;
                for (std::size_t y = 0; y < nx; ++y) row += bpow(x, y) * b.trace_right[r][y];
                acc += b.trace_left[r][x] * row;
            }
            rhs += b.root.values[r] * acc;
        }
        rep.trace_lhs.push_back(lhs);
        rep.trace_rhs.push_back(rhs);
        double rel = std::fabs(lhs - rhs) / std::max({std::fabs(lhs), std::fabs(rhs), 1e-300});
        rep.trace_rel_err.push_back(rel);
        // absolute guard for identically-zero traces, scaled by the spectrum
        double abs_floor = 1e-12 * std::pow(1.0 + std::fabs(rep.gram_eig_max), k);
        rep.trace_ok = rep.trace_ok && (rel <= tol || std::fabs(lhs - rhs) <= abs_floor);
        if (k < k_max) {
            apow = apow * b.gram;
            bpow = bpow * b.pair_transfer;
        }
    }
    rep.domination_ok = rep.gram_eig_max <= rep.transfer_norm + tol;
    rep.psd_ok = rep.gram_eig_min >= -tol * (1 + std::fabs(rep.gram_eig_max));
    return rep;
}

// --- worst pinning ------------------------------------------------------------

struct WorstPinningCase {
    std::vector<BroomVector<double>> children;
    BroomVector<double> root;
    double closed_form = 0;           // (D-1) / ((q-D)(q-2D+2))
    double displayed_variant = 0;     // value the looser printed matrix would give
    int scan_first_q_below = 0;       // smallest q with closed form < 1/D
    double scan_reference = 0;        // (3+sqrt(5))/2 * D
};

inline double worst_pinning_closed_form(int delta, int q) {
    return static_cast<double>(delta - 1) / (static_cast<double>(q - delta) * static_cast<double>(q - 2 * delta + 2));
}

// Single root edge with list {D..q}; its child vertex carries D-1 sibling
// edges with the same truncated list, uniform over their proper colorings.
inline WorstPinningCase worst_pinning_instance(int delta, int q) {
    if (delta < 2) throw std::invalid_argument("worst pinning requires degree at least 2");
    if (q < 2 * delta) throw std::domain_error("worst pinning needs q >= 2*degree (denominator sign flips)");
    std::vector<int> list;
    for (int c = delta; c <= q; ++c) list.push_back(c);

    auto child_broom = std::make_shared<Broom>();
    for (int j = 0; j + 1 < delta; ++j) {
        child_broom->edge_ids.push_back("s" + std::to_string(j));
        child_broom->lists.push_back(list);
    }
    WorstPinningCase wp;
    wp.children = {BroomVector<double>::uniform(child_broom)};
    auto root_broom = std::make_shared<Broom>();
    root_broom->edge_ids.push_back("r0");
    root_broom->lists.push_back(list);
    wp.root = recurse(wp.children, root_broom);
    wp.closed_form = worst_pinning_closed_form(delta, q);
    {
        double m = static_cast<double>(q - delta + 1);
        double g = (delta - 1) / (m * (q - delta) * (q - 2 * delta + 2));
        double h = (delta - 1) / (m * (q - 2 * delta + 1));
        wp.displayed_variant = g + h;
    }
    wp.scan_reference = (3.0 + std::sqrt(5.0)) / 2.0 * delta;
    wp.scan_first_q_below = 0;
    for (int qq = 2 * delta; qq <= 100 * delta; ++qq) {
        if (worst_pinning_closed_form(delta, qq) < 1.0 / delta) {
            wp.scan_first_q_below = qq;
            break;
        }
    }
    return wp;
}

// --- contraction audit ---------------------------------------------------------

struct ContractionReport {
    double transfer_norm = 0;
    double jac_norm = 0;
    double jac_norm_sq = 0;
    double measured_eta = 0;       // worst child spectral-independence excess
    double chain_rhs = 0;          // (1+eta)^2 max_(i,c) p_r(i,c) p_i(c) / p_i(c-bar)^2
    double max_entry_expression = 0;
    bool chain_ok = true;          // transfer norm below the chain bound
    bool jac_vs_transfer_ok = true;
    bool hypothesis_holds = false; // beta >= 1 + (1+eta) D / sqrt(1-2 delta)
    double conclusion_bound = 0;   // (1-delta)/sqrt(D)
    bool conclusion_ok = true;
};

inline ContractionReport contraction_audit(const std::vector<BroomVector<double>>& children,
                                           const BroomVector<double>& root, long beta, int delta_max_degree,
                                           double delta_rate, const SpectralOptions& opts = {}) {
    auto b = jacobian_bundle(children, root, opts);
    ContractionReport rep;
    rep.transfer_norm = spectral_norm(b.pair_transfer);
    rep.jac_norm_sq = b.jac_norm_sq();
    rep.jac_norm = std::sqrt(rep.jac_norm_sq);

    rep.measured_eta = 0;
    for (const auto& ch : children) {
        if (ch.broom->size() == 0) continue;
        auto sr = covariance_report(ch);
        rep.measured_eta = std::max(rep.measured_eta, sr.measured_si_constant - 1.0);
    }
    rep.measured_eta = std::max(rep.measured_eta, covariance_report(root).measured_si_constant - 1.0);

    std::vector<BroomStats<double>> cs;
    for (const auto& ch : children) cs.emplace_back(ch);
    BroomStats<double> rs(root);
    double max_entry = 0;
    for (std::size_t i = 0; i < children.size(); ++i)
        for (int c : root.broom->lists[i]) {
            double tot = cs[i].total();
            double pm = rs.slot_color(static_cast<int>(i), c);
            double pc = cs[i].with_color(c) / tot;
            double pa = cs[i].avoid(c) / tot;
            if (pa > 0) max_entry = std::max(max_entry, pm * pc / (pa * pa));
        }
    rep.max_entry_expression = max_entry;
    rep.chain_rhs = (1 + rep.measured_eta) * (1 + rep.measured_eta) * max_entry;
    rep.chain_ok = rep.transfer_norm <= rep.chain_rhs + 1e-9;
    rep.jac_vs_transfer_ok = rep.jac_norm_sq <= rep.transfer_norm + 1e-9;

    double hyp_rhs = 1 + (1 + rep.measured_eta) * delta_max_degree / std::sqrt(1 - 2 * delta_rate);
    rep.hypothesis_holds = (1 - 2 * delta_rate > 0) && (static_cast<double>(beta) >= hyp_rhs);
    rep.conclusion_bound = (1 - delta_rate) / std::sqrt(static_cast<double>(delta_max_degree));
    rep.conclusion_ok = !rep.hypothesis_holds || rep.jac_norm <= rep.conclusion_bound + 1e-9;
    return rep;
}

} // namespace eclab
