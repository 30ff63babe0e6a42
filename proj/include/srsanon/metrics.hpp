#pragma once

#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "srsanon/core.hpp"
#include "srsanon/errors.hpp"

namespace srsanon {

// Mean absolute deviation of an interval [L, U] from a point a:
// integral_L^U |x - a| dx / (U - L). For points it degrades to |a - p|.
inline double interval_abs_deviation(double a, const Interval& v) {
    if (v.is_point()) return std::fabs(a - v.lo);
    const double L = v.lo, U = v.hi, w = U - L;
    if (a <= L) return ((U - a) * (U - a) - (L - a) * (L - a)) / (2.0 * w);
    if (a >= U) return ((a - L) * (a - L) - (a - U) * (a - U)) / (2.0 * w);
    return ((a - L) * (a - L) + (U - a) * (U - a)) / (2.0 * w);
}

// Normalized numeric distortion term in [0, 1]-ish (can exceed 1 only if the
// anonymized value escapes the global bounds, which clamping prevents).
inline double numeric_distance(double original, const Interval& anonymized, const NumAttr& bounds) {
    if (!(bounds.min < bounds.max)) throw ArgumentError("invalid numeric bounds");
    return interval_abs_deviation(original, anonymized) / (bounds.max - bounds.min);
}

// Per-record distortion: sum of normalized numeric deviations plus the
// ancestor-set distance of every categorical value, measured on the full
// taxonomy tree of each attribute. Sensitive values do not participate.
inline double record_distortion(const Record& original, const PublishedRecord& anonymized,
                                const QidSchema& schema) {
    double total = 0.0;
    for (const auto& a : schema.numeric)
        total += numeric_distance(original.num.at(a.name), anonymized.num.at(a.name), a);
    for (const auto& a : schema.categorical)
        total += schema.tree(a.name).distortion(original.cat.at(a.name), anonymized.cat.at(a.name));
    return total;
}

namespace detail {

inline void check_aligned(const std::vector<Record>& d, const std::vector<PublishedRecord>& dp) {
    if (d.size() != dp.size())
        throw DataIntegrityError("original and anonymized datasets differ in size");
    for (std::size_t i = 0; i < d.size(); ++i)
        if (d[i].case_id != dp[i].case_id)
            throw DataIntegrityError("datasets misaligned at row " + std::to_string(i) +
                                     ": CaseID " + d[i].case_id + " vs " + dp[i].case_id);
}

}  // namespace detail

// Normalized information loss: sum over groups of IL*(g) / (|QID| * |g|),
// where IL*(g) is the summed record distortion of the group's members and
// groups come from the anonymized records' group ids.
inline double nil(const std::vector<Record>& d, const std::vector<PublishedRecord>& dp,
                  const QidSchema& schema) {
    detail::check_aligned(d, dp);
    std::map<int, std::pair<double, int>> per_group;  // group -> (IL*, size)
    for (std::size_t i = 0; i < d.size(); ++i) {
        auto& [il, n] = per_group[dp[i].group_id];
        il += record_distortion(d[i], dp[i], schema);
        ++n;
    }
    double total = 0.0;
    for (const auto& [gid, acc] : per_group)
        total += acc.first / (static_cast<double>(schema.qid_count()) * acc.second);
    return total;
}

namespace detail {

// Indices of anonymized records at minimum distortion distance from r.
inline std::vector<std::size_t> argmin_set(const Record& r, const std::vector<PublishedRecord>& dp,
                                           const QidSchema& schema) {
    std::vector<std::size_t> best;
    double best_d = 0.0;
    for (std::size_t j = 0; j < dp.size(); ++j) {
        const double dist = record_distortion(r, dp[j], schema);
        if (best.empty() || dist < best_d - 1e-12) {
            best.assign(1, j);
            best_d = dist;
        } else if (dist <= best_d + 1e-12) {
            best.push_back(j);
        }
    }
    return best;
}

}  // namespace detail

// Record-linkage risk: the chance the attacker's minimum-difference guess set
// pins the record, averaged over the dataset.
inline double rr(const std::vector<Record>& d, const std::vector<PublishedRecord>& dp,
                 const QidSchema& schema) {
    detail::check_aligned(d, dp);
    if (d.empty()) return 0.0;
    double total = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) {
        const auto g = detail::argmin_set(d[i], dp, schema);
        bool own = false;
        for (auto j : g)
            if (j == i) { own = true; break; }
        if (own) total += 1.0 / static_cast<double>(g.size());
    }
    return total / static_cast<double>(d.size());
}

// Attribute-inference risk: per record, the mean over sensitive values in the
// guess set of max(1/|G|, freq_G(s)); zero when the own record is excluded.
inline double ar_rev(const std::vector<Record>& d, const std::vector<PublishedRecord>& dp,
                     const QidSchema& schema) {
    detail::check_aligned(d, dp);
    if (d.empty()) return 0.0;
    double total = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) {
        const auto g = detail::argmin_set(d[i], dp, schema);
        bool own = false;
        for (auto j : g)
            if (j == i) { own = true; break; }
        if (!own) continue;
        std::map<std::string, int> counts;
        for (auto j : g) {
            std::set<std::string> values;
            for (const auto& [a, vals] : dp[j].sens) values.insert(vals.begin(), vals.end());
            for (const auto& s : values) ++counts[s];
        }
        if (counts.empty()) continue;
        const double inv = 1.0 / static_cast<double>(g.size());
        double acc = 0.0;
        for (const auto& [s, c] : counts)
            acc += std::max(inv, static_cast<double>(c) / static_cast<double>(g.size()));
        total += acc / static_cast<double>(counts.size());
    }
    return total / static_cast<double>(d.size());
}

// Drug x reaction co-occurrence counts.
struct ContingencyTable {
    long long a = 0;  // drug and reaction
    long long b = 0;  // drug, other reactions
    long long c = 0;  // other drugs, reaction
    long long d = 0;  // neither
};

// Proportional reporting ratio; nullopt when a margin degenerates.
inline std::optional<double> prr(const ContingencyTable& t) {
    if (t.a + t.b <= 0 || t.c <= 0) return std::nullopt;
    const double num = static_cast<double>(t.a) / static_cast<double>(t.a + t.b);
    const double den = static_cast<double>(t.c) / static_cast<double>(t.c + t.d);
    return num / den;
}

// Numeric filter of the form  attr > value  applied when counting signals.
struct SignalFilter {
    std::string attr;
    double threshold = 0.0;
};

struct SignalQuery {
    std::string drug;           // sensitive value standing for the drug
    std::string reaction;       // sensitive value standing for the reaction
    std::string drug_attr;      // sensitive attribute holding drug values
    std::string reaction_attr;  // sensitive attribute holding reaction values
    std::optional<SignalFilter> filter;
};

namespace detail {

inline bool has_value(const std::map<std::string, std::set<std::string>>& sens,
                      const std::string& attr, const std::string& value) {
    auto it = sens.find(attr);
    return it != sens.end() && it->second.count(value) != 0;
}

}  // namespace detail

inline ContingencyTable contingency(const std::vector<Record>& d, const SignalQuery& q) {
    ContingencyTable t;
    for (const auto& r : d) {
        if (q.filter && !(r.num.at(q.filter->attr) > q.filter->threshold)) continue;
        const bool drug = detail::has_value(r.sens, q.drug_attr, q.drug);
        const bool reac = detail::has_value(r.sens, q.reaction_attr, q.reaction);
        if (drug && reac) ++t.a;
        else if (drug) ++t.b;
        else if (reac) ++t.c;
        else ++t.d;
    }
    return t;
}

// Published numeric values may be intervals; the filter passes when the
// published value (its midpoint, for intervals) exceeds the threshold,
// mirroring what an analyst of the released table would compute.
inline ContingencyTable contingency(const std::vector<PublishedRecord>& d, const SignalQuery& q) {
    ContingencyTable t;
    for (const auto& r : d) {
        if (q.filter && !(r.num.at(q.filter->attr).mid() > q.filter->threshold)) continue;
        const bool drug = detail::has_value(r.sens, q.drug_attr, q.drug);
        const bool reac = detail::has_value(r.sens, q.reaction_attr, q.reaction);
        if (drug && reac) ++t.a;
        else if (drug) ++t.b;
        else if (reac) ++t.c;
        else ++t.d;
    }
    return t;
}

// |PRR(D) - PRR(D')|; nullopt when either side is undefined.
inline std::optional<double> signal_bias(const std::vector<Record>& d,
                                         const std::vector<PublishedRecord>& dp,
                                         const SignalQuery& q) {
    const auto p0 = prr(contingency(d, q));
    const auto p1 = prr(contingency(dp, q));
    if (!p0 || !p1) return std::nullopt;
    return std::fabs(*p0 - *p1);
}

}  // namespace srsanon
