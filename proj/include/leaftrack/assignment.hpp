#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <tuple>
#include <vector>

#include "leaftrack/skeleton.hpp"
#include "leaftrack/timeline.hpp"

namespace leaftrack {

// Nonnegative cost matrix with rows <= cols; rows index the smaller vertex
// set of the bipartite matching problem.
struct CostMatrix {
    int rows = 0;
    int cols = 0;
    std::vector<double> costs; // row-major

    CostMatrix() = default;
    CostMatrix(int r, int c, std::vector<double> values)
        : rows(r), cols(c), costs(std::move(values)) {
        if (r < 0 || c < 0 || r > c)
            throw std::invalid_argument("CostMatrix: need 0 <= rows <= cols");
        if (static_cast<std::size_t>(r) * c != costs.size())
            throw std::invalid_argument("CostMatrix: size mismatch");
        for (double v : costs)
            if (!(v >= 0.0) || !std::isfinite(v))
                throw std::invalid_argument("CostMatrix: costs must be finite and >= 0");
    }

    double at(int r, int c) const { return costs[static_cast<std::size_t>(r) * cols + c]; }
};

struct Matching {
    std::vector<int> assignment; // row -> column, injective and total
    double score = 0.0;
};

namespace detail {

// Potential-based shortest augmenting path assignment (O(rows^2 * cols)).
// Returns the optimal total cost of assigning every row to a distinct
// column; `row_to_col` receives one optimal assignment.
inline double assignment_score(const std::vector<double>& a, int n, int m,
                               std::vector<int>* row_to_col = nullptr) {
    if (n == 0) {
        if (row_to_col) row_to_col->clear();
        return 0.0;
    }
    const double INF = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
    std::vector<int> p(m + 1, 0), way(m + 1, 0);
    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::vector<double> minv(m + 1, INF);
        std::vector<char> used(m + 1, false);
        do {
            used[j0] = true;
            const int i0 = p[j0];
            double delta = INF;
            int j1 = -1;
            for (int j = 1; j <= m; ++j) {
                if (used[j]) continue;
                const double cur =
                    a[static_cast<std::size_t>(i0 - 1) * m + (j - 1)] - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (int j = 0; j <= m; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const int j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0 != 0);
    }
    double score = 0.0;
    std::vector<int> rc(n, -1);
    for (int j = 1; j <= m; ++j)
        if (p[j] != 0) {
            rc[p[j] - 1] = j - 1;
            score += a[static_cast<std::size_t>(p[j] - 1) * m + (j - 1)];
        }
    if (row_to_col) *row_to_col = rc;
    return score;
}

} // namespace detail

// Minimum-score injective assignment of rows to columns. Among all optimal
// assignments the lexicographically smallest one is returned, obtained by
// fixing rows front to back at the cheapest column that keeps the optimum
// attainable on the remaining subproblem.
inline Matching hungarian_min_cost(const CostMatrix& m) {
    Matching result;
    if (m.rows == 0) return result;

    const double total = detail::assignment_score(m.costs, m.rows, m.cols);
    const double tol = 1e-9 * std::max(1.0, std::abs(total));

    std::vector<char> col_used(m.cols, false);
    std::vector<int> remaining_cols;
    double prefix = 0.0;
    result.assignment.assign(m.rows, -1);
    for (int i = 0; i < m.rows; ++i) {
        for (int c = 0; c < m.cols; ++c) {
            if (col_used[c]) continue;
            remaining_cols.clear();
            for (int c2 = 0; c2 < m.cols; ++c2)
                if (!col_used[c2] && c2 != c) remaining_cols.push_back(c2);
            const int n_rest = m.rows - i - 1;
            std::vector<double> sub(static_cast<std::size_t>(n_rest) *
                                    remaining_cols.size());
            for (int r = 0; r < n_rest; ++r)
                for (std::size_t k = 0; k < remaining_cols.size(); ++k)
                    sub[static_cast<std::size_t>(r) * remaining_cols.size() + k] =
                        m.at(i + 1 + r, remaining_cols[k]);
            const double rest = detail::assignment_score(
                sub, n_rest, static_cast<int>(remaining_cols.size()));
            if (prefix + m.at(i, c) + rest <= total + tol) {
                result.assignment[i] = c;
                col_used[c] = true;
                prefix += m.at(i, c);
                break;
            }
        }
    }
    result.score = prefix;
    return result;
}

// Pairwise leaf distance: tip-to-tip plus branch-to-branch.
inline double leaf_cost(const LeafCandidate& a, const LeafCandidate& b) {
    if (!a.tip || !a.branch || !b.tip || !b.branch)
        throw std::invalid_argument("leaf_cost: candidate without positions");
    return euclid(*a.tip, *b.tip) + euclid(*a.branch, *b.branch);
}

struct ReconcileParams {
    int window = 3;                      // days compared on each side
    double match_accept_threshold = 150; // pixels
    int leaf_rate_min = 2;               // days per additional leaf, fast end
    int leaf_rate_max = 3;               // days per additional leaf, slow end
    int tenth_leaf_cap = 10;
    int consensus_quorum = 4; // of 2*window neighbor days

    void validate() const {
        if (window < 1) throw std::invalid_argument("ReconcileParams: window >= 1");
        if (leaf_rate_min <= 0 || leaf_rate_min > leaf_rate_max)
            throw std::invalid_argument("ReconcileParams: need 0 < rate_min <= rate_max");
        if (consensus_quorum < 1 || consensus_quorum > 2 * window)
            throw std::invalid_argument("ReconcileParams: quorum must fit the window");
    }
};

// Expected leaf-count interval after d days from emergence, from a rate of
// one new leaf every leaf_rate_min..leaf_rate_max days, capped at the
// ten-leaf stage.
inline std::pair<int, int> expected_leaf_range(int days_since_emergence,
                                               const ReconcileParams& p) {
    if (days_since_emergence < 1)
        throw std::invalid_argument("expected_leaf_range: day must be >= 1");
    const int d = days_since_emergence - 1;
    const int lo = std::min(p.tenth_leaf_cap, 1 + d / p.leaf_rate_max);
    const int hi = std::min(p.tenth_leaf_cap,
                            1 + (d + p.leaf_rate_min - 1) / p.leaf_rate_min);
    return {lo, hi};
}

struct view_mismatch_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct MatchResult {
    // (leaf index in day_i, leaf index in day_j, cost), kept matches only.
    std::vector<std::tuple<int, int, double>> matches;
    std::vector<int> unmatched_i;
    std::vector<int> unmatched_j;
};

namespace detail {

inline std::vector<int> matchable_leaves(const PlantDayRecord& r) {
    std::vector<int> idx;
    for (std::size_t i = 0; i < r.leaves.size(); ++i) {
        const auto& l = r.leaves[i];
        if (l.label == LeafLabel::spur || l.label == LeafLabel::stem) continue;
        if (!l.tip || !l.branch) continue;
        idx.push_back(static_cast<int>(i));
    }
    return idx;
}

} // namespace detail

// Optimal leaf pairing between two same-view days; pairs costing more than
// the acceptance threshold are reported unmatched on both sides.
inline MatchResult match_leaves(const PlantDayRecord& day_i,
                                const PlantDayRecord& day_j,
                                const ReconcileParams& p) {
    if (day_i.chosen_view != day_j.chosen_view)
        throw view_mismatch_error("match_leaves: records from different views");

    const auto li = detail::matchable_leaves(day_i);
    const auto lj = detail::matchable_leaves(day_j);
    const bool i_is_rows = li.size() <= lj.size();
    const auto& rows_idx = i_is_rows ? li : lj;
    const auto& cols_idx = i_is_rows ? lj : li;
    const auto& rows_rec = i_is_rows ? day_i : day_j;
    const auto& cols_rec = i_is_rows ? day_j : day_i;

    MatchResult res;
    if (rows_idx.empty()) {
        res.unmatched_i = i_is_rows ? rows_idx : cols_idx;
        res.unmatched_j = i_is_rows ? cols_idx : rows_idx;
        return res;
    }

    std::vector<double> costs(rows_idx.size() * cols_idx.size());
    for (std::size_t r = 0; r < rows_idx.size(); ++r)
        for (std::size_t c = 0; c < cols_idx.size(); ++c)
            costs[r * cols_idx.size() + c] = leaf_cost(
                rows_rec.leaves[rows_idx[r]], cols_rec.leaves[cols_idx[c]]);
    const CostMatrix cm(static_cast<int>(rows_idx.size()),
                        static_cast<int>(cols_idx.size()), std::move(costs));
    const Matching matching = hungarian_min_cost(cm);

    std::vector<char> col_matched(cols_idx.size(), false);
    for (std::size_t r = 0; r < rows_idx.size(); ++r) {
        const int c = matching.assignment[r];
        const double cost = cm.at(static_cast<int>(r), c);
        if (cost > p.match_accept_threshold) continue;
        col_matched[c] = true;
        const int idx_i = i_is_rows ? rows_idx[r] : cols_idx[c];
        const int idx_j = i_is_rows ? cols_idx[c] : rows_idx[r];
        res.matches.emplace_back(idx_i, idx_j, cost);
    }
    for (std::size_t r = 0; r < rows_idx.size(); ++r) {
        const int c = matching.assignment[r];
        if (cm.at(static_cast<int>(r), c) > p.match_accept_threshold)
            (i_is_rows ? res.unmatched_i : res.unmatched_j).push_back(rows_idx[r]);
    }
    for (std::size_t c = 0; c < cols_idx.size(); ++c)
        if (!col_matched[c])
            (i_is_rows ? res.unmatched_j : res.unmatched_i).push_back(cols_idx[c]);
    std::sort(res.unmatched_i.begin(), res.unmatched_i.end());
    std::sort(res.unmatched_j.begin(), res.unmatched_j.end());
    return res;
}

// Single-pass temporal reconciliation. Days whose detected count falls
// outside the expected range are compared against up to `window` days on
// each side (against the pre-pass counts): a quorum of strictly-larger
// neighbors flags a missing leaf and inserts an occluded candidate copied
// from the nearest same-view neighbor's unmatched leaf; a quorum of
// strictly-smaller neighbors flags a spur, removing the day's unmatched
// leaf. Without a usable same-view neighbor only the count is adjusted.
inline PlantTimeline reconcile_timeline(const PlantTimeline& tl,
                                        const ReconcileParams& p) {
    p.validate();
    if (tl.records.size() < 2) return tl;

    PlantTimeline out = tl;
    const std::size_t n = tl.records.size();
    std::vector<int> counts(n);
    for (std::size_t i = 0; i < n; ++i) counts[i] = tl.records[i].detected_count();

    for (std::size_t i = 0; i < n; ++i) {
        const PlantDayRecord& rec = tl.records[i];
        if (!rec.processed || rec.days_since_emergence < 1) continue;
        const auto [lo, hi] = expected_leaf_range(rec.days_since_emergence, p);
        const int c = counts[i];
        if (c >= lo && c <= hi) continue;

        std::vector<std::size_t> neighbors;
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i || !tl.records[j].processed) continue;
            if (std::abs(tl.records[j].day - rec.day) <= p.window)
                neighbors.push_back(j);
        }
        if (neighbors.empty()) continue;
        const int quorum =
            (p.consensus_quorum * static_cast<int>(neighbors.size()) +
             2 * p.window - 1) /
            (2 * p.window);

        int more = 0, fewer = 0;
        for (std::size_t j : neighbors) {
            if (counts[j] > c) ++more;
            if (counts[j] < c) ++fewer;
        }

        auto nearest_same_view = [&](bool needs_more) -> int {
            int best = -1;
            for (std::size_t j : neighbors) {
                if (tl.records[j].chosen_view != rec.chosen_view) continue;
                if (needs_more ? counts[j] <= c : counts[j] >= c) continue;
                if (best < 0) {
                    best = static_cast<int>(j);
                    continue;
                }
                const int dj = std::abs(tl.records[j].day - rec.day);
                const int db = std::abs(tl.records[best].day - rec.day);
                if (dj < db || (dj == db && tl.records[j].day < tl.records[best].day))
                    best = static_cast<int>(j);
            }
            return best;
        };

        if (more >= quorum) {
            // Missing leaf: recover it from a neighbor when possible.
            LeafCandidate occluded;
            occluded.label = LeafLabel::occluded;
            occluded.provenance = Provenance::reconciled;
            const int nb = nearest_same_view(true);
            if (nb >= 0) {
                const MatchResult mr =
                    match_leaves(tl.records[i], tl.records[nb], p);
                const PlantDayRecord& nrec = tl.records[nb];
                int pick = -1;
                for (int idx : mr.unmatched_j) {
                    if (pick < 0 ||
                        std::tie(*nrec.leaves[idx].tip, *nrec.leaves[idx].branch) <
                            std::tie(*nrec.leaves[pick].tip,
                                     *nrec.leaves[pick].branch))
                        pick = idx;
                }
                if (pick >= 0) {
                    occluded.tip = nrec.leaves[pick].tip;
                    occluded.branch = nrec.leaves[pick].branch;
                }
            }
            out.records[i].leaves.push_back(occluded);
            out.records[i].audit.push_back(
                {"reconcile_occluded_added", occluded.branch, occluded.tip, true});
        } else if (fewer >= quorum) {
            // Spurious leaf: drop the day's unmatched (or weakest) leaf.
            auto& leaves = out.records[i].leaves;
            int doomed = -1;
            const int nb = nearest_same_view(false);
            if (nb >= 0) {
                const MatchResult mr =
                    match_leaves(tl.records[i], tl.records[nb], p);
                for (int idx : mr.unmatched_i) {
                    if (doomed < 0 ||
                        leaves[idx].length() < leaves[doomed].length() ||
                        (leaves[idx].length() == leaves[doomed].length() &&
                         idx < doomed))
                        doomed = idx;
                }
            }
            if (doomed < 0) {
                for (std::size_t k = 0; k < leaves.size(); ++k) {
                    if (leaves[k].label != LeafLabel::leaf) continue;
                    if (doomed < 0 ||
                        leaves[k].length() < leaves[doomed].length())
                        doomed = static_cast<int>(k);
                }
            }
            if (doomed >= 0) {
                out.records[i].audit.push_back({"reconcile_spur_removed",
                                                leaves[doomed].branch,
                                                leaves[doomed].tip, true});
                leaves.erase(leaves.begin() + doomed);
            }
        }
    }
    return out;
}

} // namespace leaftrack
