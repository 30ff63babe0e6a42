#pragma once

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "srsanon/attacks.hpp"
#include "srsanon/core.hpp"
#include "srsanon/errors.hpp"
#include "srsanon/taxonomy.hpp"

namespace srsanon {

namespace io_detail {

inline std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == sep) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

inline std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

// Shortest decimal text that parses back to exactly v.
inline std::string format_double(double v) {
    char buf[40];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc{}) throw FormatError("number formatting failed");
    return std::string(buf, end);
}

inline double parse_double(const std::string& s) {
    std::size_t pos = 0;
    double v;
    try {
        v = std::stod(s, &pos);
    } catch (const std::exception&) {
        throw FormatError("unparseable number: " + s);
    }
    if (pos != s.size()) throw FormatError("unparseable number: " + s);
    return v;
}

// "L-U" (with the separating '-' after a digit) or a plain number.
inline Interval parse_interval(const std::string& s) {
    for (std::size_t i = 1; i < s.size(); ++i) {
        if (s[i] == '-' && (std::isdigit(static_cast<unsigned char>(s[i - 1])) || s[i - 1] == '.')) {
            return Interval(parse_double(s.substr(0, i)), parse_double(s.substr(i + 1)));
        }
    }
    return Interval::point(parse_double(s));
}

inline std::string format_interval(const Interval& v) {
    if (v.is_point()) return format_double(v.lo);
    return format_double(v.lo) + "-" + format_double(v.hi);
}

// Never leaves a partial file behind: write to a temp sibling, then rename.
inline void atomic_write(const std::filesystem::path& path, const std::string& content) {
    const auto tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw FormatError("cannot write file: " + tmp);
        out << content;
    }
    std::filesystem::rename(tmp, path);
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open file: " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace io_detail

// ---------------------------------------------------------------------------
// Taxonomy / theta / schema / background files (JSON)
// ---------------------------------------------------------------------------

inline TaxonomyTree load_taxonomy(const std::filesystem::path& path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(io_detail::read_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("bad taxonomy file " + path.string() + ": " + e.what());
    }
    if (!j.contains("root")) throw FormatError("taxonomy file without root: " + path.string());
    std::vector<std::pair<std::string, std::string>> edges;
    const std::function<void(const nlohmann::json&)> walk = [&](const nlohmann::json& node) {
        const std::string name = node.at("name").get<std::string>();
        if (node.contains("children"))
            for (const auto& child : node.at("children")) {
                edges.emplace_back(name, child.at("name").get<std::string>());
                walk(child);
            }
    };
    walk(j.at("root"));
    return TaxonomyTree::build(j.at("root").at("name").get<std::string>(), edges);
}

inline void store_taxonomy(const std::filesystem::path& path, const TaxonomyTree& tree) {
    const std::function<nlohmann::json(const std::string&)> emit = [&](const std::string& node) {
        nlohmann::json j;
        j["name"] = node;
        nlohmann::json children = nlohmann::json::array();
        for (const auto& n : tree.nodes()) {
            auto anc = tree.ancestors(n);
            if (!anc.empty() && anc.front() == node) children.push_back(emit(n));
        }
        if (!children.empty()) j["children"] = children;
        return j;
    };
    nlohmann::json j;
    j["root"] = emit(tree.root());
    io_detail::atomic_write(path, j.dump(2) + "\n");
}

inline ThetaMap load_theta(const std::filesystem::path& path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(io_detail::read_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("bad theta file " + path.string() + ": " + e.what());
    }
    if (!j.contains("default")) throw FormatError("theta file missing default: " + path.string());
    ThetaMap out;
    out.default_theta = j.at("default").get<double>();
    if (j.contains("values"))
        for (const auto& [k, v] : j.at("values").items()) out.per_value[k] = v.get<double>();
    out.validate();
    return out;
}

// Schema file: attribute typing plus per-categorical taxonomy file names,
// resolved against taxonomy_dir (defaults to the schema file's directory).
inline QidSchema load_schema(const std::filesystem::path& path,
                             std::optional<std::filesystem::path> taxonomy_dir = std::nullopt) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(io_detail::read_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("bad schema file " + path.string() + ": " + e.what());
    }
    const std::filesystem::path dir = taxonomy_dir.value_or(path.parent_path());
    QidSchema schema;
    for (const auto& a : j.value("categorical", nlohmann::json::array())) {
        CatAttr attr;
        attr.name = a.at("name").get<std::string>();
        attr.taxonomy = a.at("taxonomy").get<std::string>();
        schema.trees[attr.name] = load_taxonomy(dir / attr.taxonomy);
        schema.categorical.push_back(std::move(attr));
    }
    for (const auto& a : j.value("numeric", nlohmann::json::array()))
        schema.numeric.push_back(
            {a.at("name").get<std::string>(), a.at("min").get<double>(), a.at("max").get<double>()});
    for (const auto& s : j.value("sensitive", nlohmann::json::array()))
        schema.sensitive.push_back(s.get<std::string>());
    schema.validate();
    return schema;
}

inline std::vector<BackgroundRule> load_background(const std::filesystem::path& path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(io_detail::read_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("bad background file " + path.string() + ": " + e.what());
    }
    std::vector<BackgroundRule> out;
    for (const auto& r : j.value("rules", nlohmann::json::array())) {
        BackgroundRule rule;
        rule.value = r.at("value").get<std::string>();
        rule.attr = r.at("attr").get<std::string>();
        if (r.contains("equals")) rule.node = r.at("equals").get<std::string>();
        if (r.contains("min")) rule.min = r.at("min").get<double>();
        if (r.contains("max")) rule.max = r.at("max").get<double>();
        out.push_back(std::move(rule));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Record CSV (raw input)
// ---------------------------------------------------------------------------

struct LoadReport {
    std::vector<Record> records;
    int rejected = 0;
    std::vector<std::string> reasons;
};

inline std::vector<std::string> record_header(const QidSchema& schema) {
    std::vector<std::string> h{"CaseID"};
    for (const auto& a : schema.categorical) h.push_back(a.name);
    for (const auto& a : schema.numeric) h.push_back(a.name);
    for (const auto& s : schema.sensitive) h.push_back(s);
    return h;
}

// Rows with any empty declared cell are excluded and counted; unparseable
// numerics reject the row with a reason.
inline LoadReport load_records(const std::filesystem::path& path, const QidSchema& schema) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open records file: " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw FormatError("empty records file: " + path.string());
    const auto header = io_detail::split(io_detail::trim(line), ',');
    const auto expected = record_header(schema);
    if (header != expected) throw FormatError("header mismatch in " + path.string());

    LoadReport out;
    int row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (io_detail::trim(line).empty()) continue;
        const auto cells = io_detail::split(line, ',');
        if (cells.size() != expected.size()) {
            ++out.rejected;
            out.reasons.push_back("row " + std::to_string(row) + ": wrong cell count");
            continue;
        }
        bool missing = false;
        for (const auto& c : cells)
            if (io_detail::trim(c).empty()) missing = true;
        if (missing) {
            ++out.rejected;
            out.reasons.push_back("row " + std::to_string(row) + ": missing value");
            continue;
        }
        try {
            Record r;
            std::size_t col = 0;
            r.case_id = io_detail::trim(cells[col++]);
            for (const auto& a : schema.categorical) r.cat[a.name] = io_detail::trim(cells[col++]);
            for (const auto& a : schema.numeric)
                r.num[a.name] = io_detail::parse_double(io_detail::trim(cells[col++]));
            for (const auto& s : schema.sensitive) {
                for (const auto& v : io_detail::split(io_detail::trim(cells[col]), ';'))
                    if (!io_detail::trim(v).empty()) r.sens[s].insert(io_detail::trim(v));
                ++col;
            }
            validate_record(r, schema);
            out.records.push_back(std::move(r));
        } catch (const Error& e) {
            ++out.rejected;
            out.reasons.push_back("row " + std::to_string(row) + ": " + e.what());
        }
    }
    return out;
}

inline std::string serialize_records(const std::vector<Record>& records, const QidSchema& schema) {
    std::ostringstream out;
    const auto header = record_header(schema);
    for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
    out << "\n";
    for (const auto& r : records) {
        out << r.case_id;
        for (const auto& a : schema.categorical) out << "," << r.cat.at(a.name);
        for (const auto& a : schema.numeric) out << "," << io_detail::format_double(r.num.at(a.name));
        for (const auto& s : schema.sensitive) {
            out << ",";
            bool first = true;
            for (const auto& v : r.sens.at(s)) {
                out << (first ? "" : ";") << v;
                first = false;
            }
        }
        out << "\n";
    }
    return out.str();
}

inline void store_records(const std::filesystem::path& path, const std::vector<Record>& records,
                          const QidSchema& schema) {
    io_detail::atomic_write(path, serialize_records(records, schema));
}

// ---------------------------------------------------------------------------
// Release CSV (published tables; numeric cells may be "L-U" intervals)
// ---------------------------------------------------------------------------

inline std::string serialize_release(const Release& release, const QidSchema& schema) {
    std::ostringstream out;
    const auto header = record_header(schema);
    for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
    out << ",GroupID\n";
    for (const auto& r : release.records) {
        out << r.case_id;
        for (const auto& a : schema.categorical) out << "," << r.cat.at(a.name);
        for (const auto& a : schema.numeric)
            out << "," << io_detail::format_interval(r.num.at(a.name));
        for (const auto& s : schema.sensitive) {
            out << ",";
            bool first = true;
            for (const auto& v : r.sens.at(s)) {
                out << (first ? "" : ";") << v;
                first = false;
            }
        }
        out << "," << r.group_id << "\n";
    }
    return out.str();
}

inline void store_release(const std::filesystem::path& path, const Release& release,
                          const QidSchema& schema) {
    io_detail::atomic_write(path, serialize_release(release, schema));
}

inline Release load_release(const std::filesystem::path& path, const QidSchema& schema, int index) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open release file: " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw FormatError("empty release file: " + path.string());
    auto header = io_detail::split(io_detail::trim(line), ',');
    auto expected = record_header(schema);
    const bool has_group = !header.empty() && header.back() == "GroupID";
    if (has_group) header.pop_back();
    if (header != expected) throw FormatError("header mismatch in " + path.string());

    Release release;
    release.index = index;
    while (std::getline(in, line)) {
        if (io_detail::trim(line).empty()) continue;
        const auto cells = io_detail::split(line, ',');
        if (cells.size() != expected.size() + (has_group ? 1 : 0))
            throw FormatError("wrong cell count in " + path.string());
        PublishedRecord r;
        std::size_t col = 0;
        r.case_id = io_detail::trim(cells[col++]);
        for (const auto& a : schema.categorical) {
            const auto v = io_detail::trim(cells[col++]);
            if (!schema.tree(a.name).contains(v))
                throw FormatError("published value '" + v + "' not in taxonomy of " + a.name);
            r.cat[a.name] = v;
        }
        for (const auto& a : schema.numeric)
            r.num[a.name] = io_detail::parse_interval(io_detail::trim(cells[col++]));
        for (const auto& s : schema.sensitive) {
            for (const auto& v : io_detail::split(io_detail::trim(cells[col]), ';'))
                if (!io_detail::trim(v).empty()) r.sens[s].insert(io_detail::trim(v));
            ++col;
        }
        if (has_group) r.group_id = static_cast<int>(io_detail::parse_double(cells[col]));
        release.records.push_back(std::move(r));
    }
    return release;
}

// ---------------------------------------------------------------------------
// Release history directory: R_<i>.csv + D_<i>.csv + manifest.json
// ---------------------------------------------------------------------------

struct HistoryEntry {
    int index = 0;
    std::string anonymized;  // file name of R_<i>.csv
    std::string raw;         // file name of D_<i>.csv (for auditing)
    std::string variant;
    int k = 0;
    double epsilon = 0.0;
    std::uint64_t seed = 0;
};

struct History {
    std::filesystem::path dir;
    std::vector<HistoryEntry> entries;

    ReleaseHistory load_releases(const QidSchema& schema) const {
        ReleaseHistory out;
        for (const auto& e : entries) out.push_back(load_release(dir / e.anonymized, schema, e.index));
        return out;
    }

    std::vector<std::vector<Record>> load_raw(const QidSchema& schema) const {
        std::vector<std::vector<Record>> out;
        for (const auto& e : entries) {
            auto rep = load_records(dir / e.raw, schema);
            out.push_back(std::move(rep.records));
        }
        return out;
    }
};

inline History load_history(const std::filesystem::path& dir) {
    History h;
    h.dir = dir;
    const auto manifest = dir / "manifest.json";
    if (!std::filesystem::exists(manifest)) return h;
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(io_detail::read_file(manifest));
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("bad history manifest: " + std::string(e.what()));
    }
    for (const auto& e : j.value("entries", nlohmann::json::array())) {
        HistoryEntry entry;
        entry.index = e.at("index").get<int>();
        entry.anonymized = e.at("anonymized").get<std::string>();
        entry.raw = e.at("raw").get<std::string>();
        entry.variant = e.value("variant", "");
        entry.k = e.value("k", 0);
        entry.epsilon = e.value("epsilon", 0.0);
        entry.seed = e.value("seed", std::uint64_t{0});
        h.entries.push_back(std::move(entry));
    }
    return h;
}

inline void append_history(History& h, const Release& release, const std::vector<Record>& raw,
                           const QidSchema& schema, const PrivacyConfig& cfg) {
    std::filesystem::create_directories(h.dir);
    HistoryEntry entry;
    entry.index = release.index;
    entry.anonymized = "R_" + std::to_string(release.index) + ".csv";
    entry.raw = "D_" + std::to_string(release.index) + ".csv";
    entry.variant = to_string(cfg.variant);
    entry.k = cfg.k;
    entry.epsilon = cfg.epsilon;
    entry.seed = cfg.seed;
    store_release(h.dir / entry.anonymized, release, schema);
    store_records(h.dir / entry.raw, raw, schema);
    h.entries.push_back(entry);
    nlohmann::json j;
    j["entries"] = nlohmann::json::array();
    for (const auto& e : h.entries) {
        nlohmann::json je;
        je["index"] = e.index;
        je["anonymized"] = e.anonymized;
        je["raw"] = e.raw;
        je["variant"] = e.variant;
        je["k"] = e.k;
        je["epsilon"] = e.epsilon;
        je["seed"] = e.seed;
        j["entries"].push_back(je);
    }
    io_detail::atomic_write(h.dir / "manifest.json", j.dump(2) + "\n");
}

}  // namespace srsanon
