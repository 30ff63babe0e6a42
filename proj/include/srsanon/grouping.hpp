#pragma once

#include <limits>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "srsanon/core.hpp"
#include "srsanon/errors.hpp"
#include "srsanon/metrics.hpp"

namespace srsanon {

// A cluster of super records under one QID treatment. Tracks the virtual
// generalization (per-attribute LCA / covering interval) and sensitive-value
// counts incrementally; members index into the caller's super-record vector.
struct QidGroup {
    std::vector<int> members;
    int new_count = 0;
    std::map<std::string, std::string> virtual_cat;   // attr -> LCA node
    std::map<std::string, Interval> virtual_num;      // attr -> covering interval
    std::map<std::string, int> sens_counts;           // value -> members carrying it

    std::size_t size() const { return members.size(); }

    // Distinct sensitive values carried by a super record, across attributes.
    static std::set<std::string> sens_values(const SuperRecord& s) {
        std::set<std::string> out;
        for (const auto& [a, vals] : s.sens) out.insert(vals.begin(), vals.end());
        return out;
    }

    void add(int idx, const SuperRecord& s, bool is_new, const QidSchema& schema) {
        if (members.empty()) {
            virtual_cat = s.cat;
            virtual_num = s.num;
        } else {
            for (auto& [a, node] : virtual_cat)
                node = schema.tree(a).lca(node, s.cat.at(a));
            for (auto& [a, iv] : virtual_num) iv = iv.hull(s.num.at(a));
        }
        for (const auto& v : sens_values(s)) ++sens_counts[v];
        members.push_back(idx);
        if (is_new) ++new_count;
    }
};

enum class BoundsMode { Ms, Nc };

struct BoundsCheck {
    bool pass = true;
    std::vector<std::string> violations;
};

// MS(k, theta*): |g| >= k and every sensitive value's frequency within the
// group at most its threshold. NC: at least k new-case members.
inline BoundsCheck check_bounds(const QidGroup& g, const PrivacyConfig& cfg, BoundsMode mode) {
    BoundsCheck out;
    if (g.members.empty()) throw ArgumentError("check_bounds: empty group");
    if (mode == BoundsMode::Nc) {
        if (g.new_count < cfg.k) {
            out.pass = false;
            out.violations.push_back("new-case count " + std::to_string(g.new_count) +
                                     " below k=" + std::to_string(cfg.k));
        }
        return out;
    }
    if (static_cast<int>(g.size()) < cfg.k) {
        out.pass = false;
        out.violations.push_back("group size " + std::to_string(g.size()) +
                                 " below k=" + std::to_string(cfg.k));
    }
    const double n = static_cast<double>(g.size());
    for (const auto& [value, count] : g.sens_counts) {
        const double freq = count / n;
        if (freq > cfg.theta.at(value) + 1e-12) {
            out.pass = false;
            out.violations.push_back("frequency of '" + value + "' " + std::to_string(freq) +
                                     " exceeds theta " + std::to_string(cfg.theta.at(value)));
        }
    }
    return out;
}

namespace detail {

// Distortion of one super record against a virtual tuple; numeric original is
// the super's midpoint, categorical distance runs over the full tree.
inline double member_distortion(const SuperRecord& s,
                                const std::map<std::string, std::string>& vcat,
                                const std::map<std::string, Interval>& vnum,
                                const QidSchema& schema) {
    double total = 0.0;
    for (const auto& a : schema.numeric)
        total += interval_abs_deviation(s.num_mid(a.name), vnum.at(a.name)) / (a.max - a.min);
    for (const auto& a : schema.categorical)
        total += schema.tree(a.name).distortion(s.cat.at(a.name), vcat.at(a.name));
    return total;
}

inline double group_il(const QidGroup& g, const std::vector<SuperRecord>& supers,
                       const QidSchema& schema) {
    double total = 0.0;
    for (int idx : g.members)
        total += member_distortion(supers[idx], g.virtual_cat, g.virtual_num, schema);
    return total;
}

}  // namespace detail

// IL*(g u {r}) - IL*(g), with IL* measured against the group's virtual
// generalization after (respectively before) including r.
inline double delta_il_from(const QidGroup& g, const SuperRecord& r,
                            const std::vector<SuperRecord>& supers, const QidSchema& schema,
                            double base_il) {
    if (g.members.empty()) return 0.0;  // IL* of a singleton is zero
    std::map<std::string, std::string> vcat = g.virtual_cat;
    std::map<std::string, Interval> vnum = g.virtual_num;
    for (auto& [a, node] : vcat) node = schema.tree(a).lca(node, r.cat.at(a));
    for (auto& [a, iv] : vnum) iv = iv.hull(r.num.at(a));
    double after = detail::member_distortion(r, vcat, vnum, schema);
    for (int idx : g.members)
        after += detail::member_distortion(supers[idx], vcat, vnum, schema);
    return after - base_il;
}

inline double delta_il(const QidGroup& g, const SuperRecord& r,
                       const std::vector<SuperRecord>& supers, const QidSchema& schema) {
    if (g.members.empty()) return 0.0;
    return delta_il_from(g, r, supers, schema, detail::group_il(g, supers, schema));
}

// Multiplicative theta-stress penalty: product over sensitive values of
// max(1, freq / theta) in g u {r}.
inline double privacy_risk(const QidGroup& g, const SuperRecord& r, const ThetaMap& theta) {
    std::map<std::string, int> counts = g.sens_counts;
    for (const auto& v : QidGroup::sens_values(r)) ++counts[v];
    const double n = static_cast<double>(g.size() + 1);
    double risk = 1.0;
    for (const auto& [value, count] : counts) {
        const double stress = (count / n) / theta.at(value);
        if (stress > 1.0) risk *= stress;
    }
    return risk;
}

struct GroupingResult {
    std::vector<QidGroup> groups;
    std::vector<int> suppressed;  // super-record indices no group could admit
};

namespace detail {

// Integer-encoded view of the super records for the grouping inner loops:
// taxonomy nodes and sensitive values become ids, pairwise LCA/distortion
// become lookup tables. Scores computed here match the string-based helpers.
struct FlatView {
    int n_cat = 0, n_num = 0;
    std::vector<std::vector<int>> cat;     // [attr][record] node id
    std::vector<int> tree_size;            // [attr]
    std::vector<std::vector<int>> lca;     // [attr][u * size + v]
    std::vector<std::vector<double>> dist; // [attr][u * size + v]
    std::vector<std::vector<double>> lo, hi, mid;  // [attr][record]
    std::vector<double> inv_range;         // [attr]
    std::vector<std::vector<int>> sens;    // [record] -> value ids
    std::vector<double> theta;             // [value id]

    FlatView(const std::vector<SuperRecord>& supers, const QidSchema& schema,
             const ThetaMap& thetas) {
        n_cat = static_cast<int>(schema.categorical.size());
        n_num = static_cast<int>(schema.numeric.size());
        const std::size_t n = supers.size();
        cat.resize(n_cat);
        tree_size.resize(n_cat);
        lca.resize(n_cat);
        dist.resize(n_cat);
        for (int a = 0; a < n_cat; ++a) {
            const auto& tree = schema.tree(schema.categorical[a].name);
            const auto& nodes = tree.nodes();
            const int sz = static_cast<int>(nodes.size());
            tree_size[a] = sz;
            std::map<std::string, int> ids;
            for (int i = 0; i < sz; ++i) ids[nodes[i]] = i;
            lca[a].resize(static_cast<std::size_t>(sz) * sz);
            dist[a].resize(static_cast<std::size_t>(sz) * sz);
            for (int u = 0; u < sz; ++u)
                for (int v = 0; v < sz; ++v) {
                    lca[a][static_cast<std::size_t>(u) * sz + v] = ids.at(tree.lca(nodes[u], nodes[v]));
                    dist[a][static_cast<std::size_t>(u) * sz + v] = tree.distortion(nodes[u], nodes[v]);
                }
            cat[a].reserve(n);
            for (const auto& s : supers)
                cat[a].push_back(ids.at(s.cat.at(schema.categorical[a].name)));
        }
        lo.resize(n_num);
        hi.resize(n_num);
        mid.resize(n_num);
        inv_range.resize(n_num);
        for (int a = 0; a < n_num; ++a) {
            const auto& attr = schema.numeric[a];
            inv_range[a] = 1.0 / (attr.max - attr.min);
            lo[a].reserve(n);
            hi[a].reserve(n);
            mid[a].reserve(n);
            for (const auto& s : supers) {
                const Interval& v = s.num.at(attr.name);
                lo[a].push_back(v.lo);
                hi[a].push_back(v.hi);
                mid[a].push_back(v.mid());
            }
        }
        std::map<std::string, int> value_ids;
        sens.resize(n);
        for (std::size_t i = 0; i < n; ++i)
            for (const auto& v : QidGroup::sens_values(supers[i])) {
                auto it = value_ids.find(v);
                if (it == value_ids.end()) {
                    it = value_ids.emplace(v, static_cast<int>(theta.size())).first;
                    theta.push_back(thetas.at(v));
                }
                sens[i].push_back(it->second);
            }
    }
};

// Mutable group state over a FlatView.
struct FlatGroup {
    std::vector<int> members;
    int new_count = 0;
    std::vector<int> vcat;             // [attr] node id
    std::vector<double> vlo, vhi;      // [attr]
    std::vector<int> counts;           // [value id], sparse over values_present
    std::vector<int> values_present;   // value ids with nonzero count

    void init(const FlatView& fv) {
        vcat.assign(static_cast<std::size_t>(fv.n_cat), 0);
        vlo.assign(static_cast<std::size_t>(fv.n_num), 0.0);
        vhi.assign(static_cast<std::size_t>(fv.n_num), 0.0);
        counts.assign(fv.theta.size(), 0);
    }

    void add(const FlatView& fv, int idx, bool is_new) {
        if (members.empty()) {
            for (int a = 0; a < fv.n_cat; ++a) vcat[a] = fv.cat[a][idx];
            for (int a = 0; a < fv.n_num; ++a) {
                vlo[a] = fv.lo[a][idx];
                vhi[a] = fv.hi[a][idx];
            }
        } else {
            for (int a = 0; a < fv.n_cat; ++a)
                vcat[a] = fv.lca[a][static_cast<std::size_t>(vcat[a]) * fv.tree_size[a] +
                                    fv.cat[a][idx]];
            for (int a = 0; a < fv.n_num; ++a) {
                vlo[a] = std::min(vlo[a], fv.lo[a][idx]);
                vhi[a] = std::max(vhi[a], fv.hi[a][idx]);
            }
        }
        for (int v : fv.sens[idx]) {
            if (counts[v] == 0) values_present.push_back(v);
            ++counts[v];
        }
        members.push_back(idx);
        if (is_new) ++new_count;
    }

    double member_distortion(const FlatView& fv, int idx, const std::vector<int>& cat_nodes,
                             const std::vector<double>& nlo,
                             const std::vector<double>& nhi) const {
        double total = 0.0;
        for (int a = 0; a < fv.n_num; ++a)
            total += interval_abs_deviation(fv.mid[a][idx], Interval(nlo[a], nhi[a])) *
                     fv.inv_range[a];
        for (int a = 0; a < fv.n_cat; ++a)
            total += fv.dist[a][static_cast<std::size_t>(cat_nodes[a]) * fv.tree_size[a] +
                                fv.cat[a][idx]];
        return total;
    }

    double group_il(const FlatView& fv) const {
        double total = 0.0;
        for (int idx : members) total += member_distortion(fv, idx, vcat, vlo, vhi);
        return total;
    }

    bool ms_pass(const FlatView& fv, int k) const {
        if (static_cast<int>(members.size()) < k) return false;
        const double n = static_cast<double>(members.size());
        for (int v : values_present)
            if (counts[v] / n > fv.theta[static_cast<std::size_t>(v)] + 1e-12) return false;
        return true;
    }
};

}  // namespace detail

// New-Case-Core grouping. Phase 1 clusters new cases only: each group seeds
// on the first unassigned new case (stable input order) and greedily adds the
// new case minimizing delta_il x privacy_risk until it reaches size k and the
// MS bounds hold. Phase 2 assigns leftovers and all old cases to the existing
// group with minimal product, skipping assignments that would break MS.
inline GroupingResult ncc_grouping(const std::vector<SuperRecord>& supers,
                                   const std::set<std::string>& nc,
                                   const std::set<std::string>& oc, const QidSchema& schema,
                                   const PrivacyConfig& cfg) {
    for (const auto& s : supers)
        if (!nc.count(s.case_id) && !oc.count(s.case_id))
            throw ArgumentError("super record not classified: " + s.case_id);
    std::vector<int> nc_order, oc_order;
    for (std::size_t i = 0; i < supers.size(); ++i)
        (nc.count(supers[i].case_id) ? nc_order : oc_order).push_back(static_cast<int>(i));
    if (static_cast<int>(nc_order.size()) < cfg.k)
        throw InfeasibleReleaseError("release has " + std::to_string(nc_order.size()) +
                                     " new cases, fewer than k=" + std::to_string(cfg.k));

    GroupingResult result;
    std::vector<bool> assigned(supers.size(), false);
    std::vector<int> leftovers;

    const detail::FlatView fv(supers, schema, cfg.theta);
    std::vector<detail::FlatGroup> flat_groups;
    std::vector<int> ncat_buf(static_cast<std::size_t>(fv.n_cat));
    std::vector<double> nlo_buf(static_cast<std::size_t>(fv.n_num));
    std::vector<double> nhi_buf(static_cast<std::size_t>(fv.n_num));

    // delta_il of adding idx to g, given g's cached total distortion.
    auto flat_delta_il = [&](const detail::FlatGroup& g, int idx, double base_il) {
        if (g.members.empty()) return 0.0;
        for (int a = 0; a < fv.n_cat; ++a)
            ncat_buf[a] = fv.lca[a][static_cast<std::size_t>(g.vcat[a]) * fv.tree_size[a] +
                                    fv.cat[a][idx]];
        for (int a = 0; a < fv.n_num; ++a) {
            nlo_buf[a] = std::min(g.vlo[a], fv.lo[a][idx]);
            nhi_buf[a] = std::max(g.vhi[a], fv.hi[a][idx]);
        }
        double after = g.member_distortion(fv, idx, ncat_buf, nlo_buf, nhi_buf);
        for (int m : g.members) after += g.member_distortion(fv, m, ncat_buf, nlo_buf, nhi_buf);
        return after - base_il;
    };

    auto flat_risk = [&](const detail::FlatGroup& g, int idx) {
        const double n1 = static_cast<double>(g.members.size() + 1);
        double risk = 1.0;
        for (int v : g.values_present) {
            int c = g.counts[v];
            for (int rv : fv.sens[idx])
                if (rv == v) { ++c; break; }
            const double stress = (c / n1) / fv.theta[static_cast<std::size_t>(v)];
            if (stress > 1.0) risk *= stress;
        }
        for (int rv : fv.sens[idx])
            if (g.counts[rv] == 0) {
                const double stress = (1.0 / n1) / fv.theta[static_cast<std::size_t>(rv)];
                if (stress > 1.0) risk *= stress;
            }
        return risk;
    };

    // Would g u {idx} still satisfy MS(k, theta*)?
    auto flat_ms_after = [&](const detail::FlatGroup& g, int idx) {
        const double n1 = static_cast<double>(g.members.size() + 1);
        if (n1 < cfg.k) return false;
        for (int v : g.values_present) {
            int c = g.counts[v];
            for (int rv : fv.sens[idx])
                if (rv == v) { ++c; break; }
            if (c / n1 > fv.theta[static_cast<std::size_t>(v)] + 1e-12) return false;
        }
        for (int rv : fv.sens[idx])
            if (g.counts[rv] == 0 &&
                1.0 / n1 > fv.theta[static_cast<std::size_t>(rv)] + 1e-12)
                return false;
        return true;
    };

    auto best_candidate = [&](const detail::FlatGroup& g, const std::vector<int>& pool) {
        int best = -1;
        double best_score = std::numeric_limits<double>::infinity();
        const double base_il = g.group_il(fv);
        for (int idx : pool) {
            if (assigned[idx]) continue;
            const double score = flat_delta_il(g, idx, base_il) * flat_risk(g, idx);
            if (score < best_score - 1e-12) {
                best = idx;
                best_score = score;
            }
        }
        return best;
    };

    // Phase 1: new-case cores.
    auto remaining_nc = [&] {
        int n = 0;
        for (int idx : nc_order)
            if (!assigned[idx]) ++n;
        return n;
    };
    while (remaining_nc() >= cfg.k) {
        int seed = -1;
        for (int idx : nc_order)
            if (!assigned[idx]) { seed = idx; break; }
        detail::FlatGroup g;
        g.init(fv);
        g.add(fv, seed, true);
        assigned[seed] = true;
        bool ok = false;
        while (true) {
            if (static_cast<int>(g.members.size()) >= cfg.k && g.ms_pass(fv, cfg.k)) {
                ok = true;
                break;
            }
            const int next = best_candidate(g, nc_order);
            if (next < 0) break;  // pool exhausted without satisfying the bounds
            g.add(fv, next, true);
            assigned[next] = true;
        }
        if (ok) {
            flat_groups.push_back(std::move(g));
        } else {
            // Dissolve: members go to phase 2 (they stay marked assigned so the
            // phase-1 loop terminates).
            for (int idx : g.members) leftovers.push_back(idx);
        }
    }
    for (int idx : nc_order)
        if (!assigned[idx]) {
            leftovers.push_back(idx);
            assigned[idx] = true;
        }

    // Phase 2: leftover new cases first, then old cases, each to the group
    // minimizing the product among groups that still satisfy MS afterwards.
    std::vector<double> base_ils(flat_groups.size());
    for (std::size_t gi = 0; gi < flat_groups.size(); ++gi)
        base_ils[gi] = flat_groups[gi].group_il(fv);
    auto assign_to_best = [&](int idx, bool is_new) {
        int best = -1;
        double best_score = std::numeric_limits<double>::infinity();
        for (std::size_t gi = 0; gi < flat_groups.size(); ++gi) {
            if (!flat_ms_after(flat_groups[gi], idx)) continue;
            const double score =
                flat_delta_il(flat_groups[gi], idx, base_ils[gi]) * flat_risk(flat_groups[gi], idx);
            if (score < best_score - 1e-12) {
                best = static_cast<int>(gi);
                best_score = score;
            }
        }
        if (best < 0) {
            result.suppressed.push_back(idx);
        } else {
            flat_groups[static_cast<std::size_t>(best)].add(fv, idx, is_new);
            base_ils[static_cast<std::size_t>(best)] =
                flat_groups[static_cast<std::size_t>(best)].group_il(fv);
        }
    };
    for (int idx : leftovers) assign_to_best(idx, true);
    for (int idx : oc_order) assign_to_best(idx, false);

    // Replay memberships through the string-level group type for the caller.
    result.groups.reserve(flat_groups.size());
    for (const auto& g : flat_groups) {
        QidGroup out;
        for (int idx : g.members)
            out.add(idx, supers[idx], nc.count(supers[idx].case_id) > 0, schema);
        result.groups.push_back(std::move(out));
    }

    for (const auto& g : result.groups) {
        if (!check_bounds(g, cfg, BoundsMode::Ms).pass ||
            !check_bounds(g, cfg, BoundsMode::Nc).pass)
            throw InfeasibleReleaseError("grouping produced a group violating its bounds");
    }
    return result;
}

}  // namespace srsanon
