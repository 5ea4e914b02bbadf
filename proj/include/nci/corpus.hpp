#pragma once
//
// Corpus side of the pipeline: entity vocabulary with taxonomy, dictionary
// annotation of raw text, the rule-based financial filter and the sparse
// binary document-entity matrix per calendar-day bucket.
//

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <map>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "nci/core.hpp"
#include "nci/csv.hpp"

namespace nci {

using EntityId = std::uint32_t;

inline const std::vector<std::string>& default_taxonomy_roots() {
    static const std::vector<std::string> roots{"company", "region", "instrument", "eurocrisis"};
    return roots;
}

/// Splits on non-alphanumeric characters and lowercases ASCII letters.
inline std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::string cur;
    for (unsigned char c : text) {
        bool alnum = (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                     c >= 0x80;
        if (alnum) {
            cur.push_back(static_cast<char>((c >= 'A' && c <= 'Z') ? c - 'A' + 'a' : c));
        } else if (!cur.empty()) {
            tokens.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) tokens.push_back(std::move(cur));
    return tokens;
}

/// Normalized surface form: its tokens joined by single spaces.
inline std::string normalize_form(std::string_view form) {
    std::string key;
    for (auto& t : tokenize(form)) {
        if (!key.empty()) key.push_back(' ');
        key += t;
    }
    return key;
}

struct EntityDef {
    EntityId id = 0;
    std::string canonical;
    std::vector<std::string> surface_forms;
    std::vector<std::string> taxonomy_path;

    const std::string& root() const { return taxonomy_path.front(); }

    /// True when `prefix` (slash-separated labels) is a prefix of the taxonomy path.
    bool has_category(std::span<const std::string> prefix) const {
        if (prefix.size() > taxonomy_path.size()) return false;
        return std::equal(prefix.begin(), prefix.end(), taxonomy_path.begin());
    }
};

class Vocabulary {
public:
    Vocabulary() = default;

    explicit Vocabulary(std::vector<std::string> roots) : roots_(std::move(roots)) {}

    /// Appends an entity with the next dense id. Throws ConflictError when a
    /// normalized surface form is already owned by another entity.
    EntityId add(std::string canonical, std::vector<std::string> forms,
                 std::vector<std::string> taxonomy_path) {
        if (taxonomy_path.empty() || taxonomy_path.front().empty())
            throw ValidationError("entity `" + canonical + "` has an empty taxonomy path");
        if (!roots_.empty() &&
            std::find(roots_.begin(), roots_.end(), taxonomy_path.front()) == roots_.end())
            throw ValidationError("entity `" + canonical + "` has undeclared taxonomy root `" +
                                  taxonomy_path.front() + "`");
        if (forms.empty()) forms.push_back(canonical);

        EntityDef def;
        def.id = static_cast<EntityId>(entities_.size());
        def.canonical = std::move(canonical);
        def.taxonomy_path = std::move(taxonomy_path);
        std::vector<std::string> keys;
        for (auto& f : forms) {
            auto key = normalize_form(f);
            if (key.empty())
                throw ValidationError("entity `" + def.canonical + "` has an empty surface form");
            if (std::find(keys.begin(), keys.end(), key) != keys.end()) continue;
            if (auto it = index_.find(key); it != index_.end())
                throw ConflictError("surface form `" + key + "` claimed by both `" +
                                    entities_[it->second].canonical + "` and `" + def.canonical +
                                    "`");
            keys.push_back(key);
            def.surface_forms.push_back(f);
        }
        for (auto& k : keys) {
            max_form_tokens_ = std::max(max_form_tokens_,
                                        std::size_t(std::count(k.begin(), k.end(), ' ') + 1));
            index_.emplace(std::move(k), def.id);
        }
        entities_.push_back(std::move(def));
        return entities_.back().id;
    }

    std::size_t size() const { return entities_.size(); }
    const EntityDef& operator[](EntityId id) const { return entities_.at(id); }
    const std::vector<EntityDef>& entities() const { return entities_; }
    const std::vector<std::string>& roots() const { return roots_; }

    std::optional<EntityId> lookup(std::string_view form) const {
        auto it = index_.find(normalize_form(form));
        if (it == index_.end()) return std::nullopt;
        return it->second;
    }

    /// True when some entity's taxonomy path starts with `prefix`, or the
    /// prefix is a declared root.
    bool knows_category(std::span<const std::string> prefix) const {
        if (prefix.size() == 1 && std::find(roots_.begin(), roots_.end(), prefix[0]) != roots_.end())
            return true;
        return std::any_of(entities_.begin(), entities_.end(),
                           [&](const EntityDef& e) { return e.has_category(prefix); });
    }

    std::size_t max_form_tokens() const { return max_form_tokens_; }

    const std::unordered_map<std::string, EntityId>& index() const { return index_; }

private:
    std::vector<std::string> roots_ = default_taxonomy_roots();
    std::vector<EntityDef> entities_;
    std::unordered_map<std::string, EntityId> index_;
    std::size_t max_form_tokens_ = 0;
};

/// Reads a vocabulary CSV (`id,canonical,surface_forms,taxonomy_path`).
inline Vocabulary read_vocabulary(std::istream& in,
                                  std::vector<std::string> roots = default_taxonomy_roots()) {
    Vocabulary vocab(std::move(roots));
    csv::Reader reader(in);
    reader.expect_header({"id", "canonical", "surface_forms", "taxonomy_path"});
    while (auto row = reader.next()) {
        const auto line = reader.line();
        if (row->size() != 4) throw ParseError(line, "expected 4 fields, got " + std::to_string(row->size()));
        const auto& r = *row;
        if (trim(r[0]) != std::to_string(vocab.size()))
            throw ParseError(line, "id `" + r[0] + "` breaks dense file-order numbering (expected " +
                                       std::to_string(vocab.size()) + ")");
        auto canonical = trim(r[1]);
        if (canonical.empty()) throw ParseError(line, "empty canonical name");
        std::vector<std::string> forms;
        if (!trim(r[2]).empty())
            for (auto& f : split_on(r[2], '|'))
                if (auto t = trim(f); !t.empty()) forms.push_back(t);
        std::vector<std::string> path;
        for (auto& p : split_on(r[3], '/')) {
            auto t = trim(p);
            if (t.empty()) throw ParseError(line, "empty label in taxonomy path `" + r[3] + "`");
            path.push_back(t);
        }
        try {
            vocab.add(std::move(canonical), std::move(forms), std::move(path));
        } catch (const ConflictError& e) {
            throw ConflictError("line " + std::to_string(line) + ": " + e.what());
        } catch (const ValidationError& e) {
            throw ParseError(line, e.what());
        }
    }
    return vocab;
}

inline Vocabulary load_vocabulary(const std::string& path,
                                  std::vector<std::string> roots = default_taxonomy_roots()) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open vocabulary `" + path + "`");
    return read_vocabulary(in, std::move(roots));
}

/// Entity ids whose surface forms occur as whole-token sequences in `text`.
/// Scans left to right; at each position the longest matching form wins.
inline std::vector<EntityId> annotate_document(std::string_view text, const Vocabulary& vocab) {
    const auto tokens = tokenize(text);
    const auto max_len = vocab.max_form_tokens();
    std::vector<EntityId> ids;
    std::size_t i = 0;
    while (i < tokens.size()) {
        std::size_t matched = 0;
        std::string key;
        std::optional<EntityId> hit;
        for (std::size_t len = 1; len <= max_len && i + len <= tokens.size(); ++len) {
            if (len > 1) key.push_back(' ');
            key += tokens[i + len - 1];
            if (auto it = vocab.index().find(key); it != vocab.index().end()) {
                matched = len;
                hit = it->second;
            }
        }
        if (hit) {
            ids.push_back(*hit);
            i += matched;
        } else {
            ++i;
        }
    }
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    return ids;
}

struct DocumentRecord {
    std::string doc_id;
    std::string timestamp;  // as given, RFC 3339
    Date day;               // UTC calendar day of `timestamp`
    std::string source;
    std::vector<EntityId> entity_ids;  // sorted, unique
};

/// Parses one JSON-lines document; `text` is annotated against `vocab`.
inline DocumentRecord parse_document(std::string_view line, const Vocabulary& vocab,
                                     std::size_t line_no) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(line_no, std::string("invalid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ParseError(line_no, "document must be a JSON object");
    auto get_str = [&](const char* key) {
        if (!j.contains(key) || !j[key].is_string())
            throw ParseError(line_no, std::string("missing string field `") + key + "`");
        return j[key].get<std::string>();
    };
    DocumentRecord doc;
    doc.doc_id = get_str("doc_id");
    doc.timestamp = get_str("timestamp");
    doc.source = get_str("source");
    auto day = parse_rfc3339_day(doc.timestamp);
    if (!day) throw ParseError(line_no, "timestamp `" + doc.timestamp + "` is not RFC 3339");
    doc.day = *day;
    if (j.contains("entity_ids")) {
        if (!j["entity_ids"].is_array()) throw ParseError(line_no, "`entity_ids` must be an array");
        for (auto& v : j["entity_ids"]) {
            if (!v.is_number_unsigned())
                throw ParseError(line_no, "`entity_ids` must hold non-negative integers");
            auto id = v.get<std::uint64_t>();
            if (id >= vocab.size())
                throw IntegrityError("line " + std::to_string(line_no) + ": entity id " +
                                     std::to_string(id) + " outside vocabulary of size " +
                                     std::to_string(vocab.size()));
            doc.entity_ids.push_back(static_cast<EntityId>(id));
        }
        std::sort(doc.entity_ids.begin(), doc.entity_ids.end());
        doc.entity_ids.erase(std::unique(doc.entity_ids.begin(), doc.entity_ids.end()),
                             doc.entity_ids.end());
    } else if (j.contains("text") && j["text"].is_string()) {
        doc.entity_ids = annotate_document(j["text"].get<std::string>(), vocab);
    } else {
        throw ParseError(line_no, "document needs `text` or `entity_ids`");
    }
    return doc;
}

inline std::vector<DocumentRecord> read_documents(std::istream& in, const Vocabulary& vocab) {
    std::vector<DocumentRecord> docs;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        docs.push_back(parse_document(line, vocab, line_no));
    }
    return docs;
}

inline std::vector<DocumentRecord> load_documents(const std::string& path, const Vocabulary& vocab) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open documents `" + path + "`");
    return read_documents(in, vocab);
}

// ---------------------------------------------------------------------------
// Rule-based filter
// ---------------------------------------------------------------------------

enum class Decision { accept, reject };

enum class Compare { ge, gt, le, lt, eq, ne };

/// One comparison `feature op threshold`. Features are taxonomy categories
/// (slash-separated label prefixes, counted as distinct matching entities in
/// the document) or the built-ins `roots` (distinct taxonomy roots present)
/// and `entities` (distinct entities present).
struct Condition {
    std::string feature;
    Compare op = Compare::ge;
    long threshold = 0;

    bool holds(long count) const {
        switch (op) {
            case Compare::ge: return count >= threshold;
            case Compare::gt: return count > threshold;
            case Compare::le: return count <= threshold;
            case Compare::lt: return count < threshold;
            case Compare::eq: return count == threshold;
            case Compare::ne: return count != threshold;
        }
        return false;
    }
};

struct FilterRule {
    std::vector<Condition> all_of;  // conjunction; empty means "always"
    Decision decision = Decision::accept;
};

class FilterRuleset {
public:
    FilterRuleset() = default;
    FilterRuleset(std::vector<FilterRule> rules, Decision fallback)
        : rules_(std::move(rules)), default_(fallback) {}

    /// Parses the line-oriented rule format:
    ///
    ///     accept if instrument >= 1 and region >= 1
    ///     reject if company > 4
    ///     default reject
    ///
    /// `#` starts a comment. Unknown categories are rejected here, never per
    /// document.
    static FilterRuleset parse(std::istream& in, const Vocabulary& vocab) {
        std::vector<FilterRule> rules;
        std::optional<Decision> fallback;
        std::string line;
        std::size_t line_no = 0;
        auto cfg_error = [&](const std::string& msg) {
            return ConfigError("ruleset line " + std::to_string(line_no) + ": " + msg);
        };
        auto decision_of = [&](const std::string& w) {
            if (w == "accept") return Decision::accept;
            if (w == "reject") return Decision::reject;
            throw cfg_error("expected accept|reject, got `" + w + "`");
        };
        while (std::getline(in, line)) {
            ++line_no;
            if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
            std::istringstream ss(line);
            std::vector<std::string> words;
            for (std::string w; ss >> w;) words.push_back(w);
            if (words.empty()) continue;
            if (words[0] == "default") {
                if (words.size() != 2) throw cfg_error("`default` takes one decision");
                if (fallback) throw cfg_error("duplicate `default`");
                fallback = decision_of(words[1]);
                continue;
            }
            FilterRule rule;
            rule.decision = decision_of(words[0]);
            if (words.size() == 2 && words[1] == "always") {
                rules.push_back(std::move(rule));
                continue;
            }
            if (words.size() < 5 || words[1] != "if" || (words.size() - 2) % 4 != 3)
                throw cfg_error("expected `<decision> if <feature> <op> <n> [and ...]`");
            for (std::size_t i = 2; i < words.size(); i += 4) {
                if (i > 2 && words[i - 1] != "and") throw cfg_error("conditions are joined by `and`");
                Condition c;
                c.feature = words[i];
                const auto& op = words[i + 1];
                if (op == ">=") c.op = Compare::ge;
                else if (op == ">") c.op = Compare::gt;
                else if (op == "<=") c.op = Compare::le;
                else if (op == "<") c.op = Compare::lt;
                else if (op == "==") c.op = Compare::eq;
                else if (op == "!=") c.op = Compare::ne;
                else throw cfg_error("unknown comparison `" + op + "`");
                try {
                    std::size_t used = 0;
                    c.threshold = std::stol(words[i + 2], &used);
                    if (used != words[i + 2].size()) throw std::invalid_argument("trailing");
                } catch (const std::exception&) {
                    throw cfg_error("threshold `" + words[i + 2] + "` is not an integer");
                }
                if (c.feature != "roots" && c.feature != "entities" &&
                    !vocab.knows_category(split_on(c.feature, '/')))
                    throw cfg_error("unknown taxonomy category `" + c.feature + "`");
                rule.all_of.push_back(std::move(c));
            }
            rules.push_back(std::move(rule));
        }
        return FilterRuleset(std::move(rules), fallback.value_or(Decision::reject));
    }

    static FilterRuleset load(const std::string& path, const Vocabulary& vocab) {
        std::ifstream in(path);
        if (!in) throw ConfigError("cannot open ruleset `" + path + "`");
        return parse(in, vocab);
    }

    /// Stand-in for a learned classifier: accept documents touching at least
    /// two distinct taxonomy roots.
    static FilterRuleset default_financial() {
        FilterRule r;
        r.all_of.push_back({"roots", Compare::ge, 2});
        r.decision = Decision::accept;
        return FilterRuleset({r}, Decision::reject);
    }

    const std::vector<FilterRule>& rules() const { return rules_; }
    Decision fallback() const { return default_; }

    Decision decide(std::span<const EntityId> ids, const Vocabulary& vocab) const {
        for (const auto& rule : rules_) {
            bool ok = std::all_of(rule.all_of.begin(), rule.all_of.end(), [&](const Condition& c) {
                return c.holds(feature_count(c.feature, ids, vocab));
            });
            if (ok) return rule.decision;
        }
        return default_;
    }

private:
    static long feature_count(const std::string& feature, std::span<const EntityId> ids,
                              const Vocabulary& vocab) {
        if (feature == "entities") return long(ids.size());
        if (feature == "roots") {
            std::set<std::string_view> roots;
            for (auto id : ids) roots.insert(vocab[id].root());
            return long(roots.size());
        }
        const auto prefix = split_on(feature, '/');
        return long(std::count_if(ids.begin(), ids.end(),
                                  [&](EntityId id) { return vocab[id].has_category(prefix); }));
    }

    std::vector<FilterRule> rules_;
    Decision default_ = Decision::reject;
};

inline std::vector<DocumentRecord> filter_financial(const std::vector<DocumentRecord>& docs,
                                                    const Vocabulary& vocab,
                                                    const FilterRuleset& rules) {
    std::vector<DocumentRecord> out;
    for (const auto& d : docs) {
        for (auto id : d.entity_ids)
            if (id >= vocab.size())
                throw IntegrityError("document `" + d.doc_id + "` references entity " +
                                     std::to_string(id) + " outside the vocabulary");
        if (rules.decide(d.entity_ids, vocab) == Decision::accept) out.push_back(d);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Document-entity matrix
// ---------------------------------------------------------------------------

/// Sparse binary m x n matrix in CSR layout, one row per document.
class EntityMatrix {
public:
    EntityMatrix() = default;

    /// Builds from per-row id lists; rows are sorted and checked for strict
    /// ascent and range.
    static EntityMatrix from_rows(Date bucket, std::size_t n,
                                  const std::vector<std::vector<EntityId>>& rows,
                                  std::vector<std::string> doc_ids = {}) {
        EntityMatrix a;
        a.bucket_ = bucket;
        a.n_ = n;
        a.offsets_.reserve(rows.size() + 1);
        for (std::size_t i = 0; i < rows.size(); ++i) {
            auto row = rows[i];
            std::sort(row.begin(), row.end());
            for (std::size_t k = 0; k < row.size(); ++k) {
                if (row[k] >= n)
                    throw IntegrityError("row " + std::to_string(i) + ": entity id " +
                                         std::to_string(row[k]) + " >= n = " + std::to_string(n));
                if (k && row[k] == row[k - 1])
                    throw IntegrityError("row " + std::to_string(i) + ": duplicate entity id " +
                                         std::to_string(row[k]));
            }
            a.indices_.insert(a.indices_.end(), row.begin(), row.end());
            a.offsets_.push_back(a.indices_.size());
        }
        if (doc_ids.empty()) {
            for (std::size_t i = 0; i < rows.size(); ++i) doc_ids.push_back(std::to_string(i));
        } else if (doc_ids.size() != rows.size()) {
            throw IntegrityError("doc_ids length does not match row count");
        }
        a.doc_ids_ = std::move(doc_ids);
        return a;
    }

    Date bucket() const { return bucket_; }
    std::size_t rows() const { return offsets_.empty() ? 0 : offsets_.size() - 1; }
    std::size_t cols() const { return n_; }
    std::size_t nnz() const { return indices_.size(); }
    bool empty() const { return rows() == 0; }

    std::span<const EntityId> row(std::size_t i) const {
        return {indices_.data() + offsets_[i], offsets_[i + 1] - offsets_[i]};
    }
    const std::vector<std::string>& doc_ids() const { return doc_ids_; }

    /// Column-major copy (transpose), used by the entity-side products.
    std::vector<std::vector<std::uint32_t>> columns() const {
        std::vector<std::vector<std::uint32_t>> cols(n_);
        for (std::size_t i = 0; i < rows(); ++i)
            for (auto e : row(i)) cols[e].push_back(static_cast<std::uint32_t>(i));
        return cols;
    }

    /// y = A x
    void multiply(std::span<const double> x, std::span<double> y) const {
        for (std::size_t i = 0; i < rows(); ++i) {
            double s = 0.0;
            for (auto e : row(i)) s += x[e];
            y[i] = s;
        }
    }

    /// y = A^T x
    void multiply_transposed(std::span<const double> x, std::span<double> y) const {
        std::fill(y.begin(), y.end(), 0.0);
        for (std::size_t i = 0; i < rows(); ++i)
            for (auto e : row(i)) y[e] += x[i];
    }

    friend bool operator==(const EntityMatrix& a, const EntityMatrix& b) {
        return a.bucket_ == b.bucket_ && a.n_ == b.n_ && a.offsets_ == b.offsets_ &&
               a.indices_ == b.indices_;
    }

private:
    Date bucket_{};
    std::size_t n_ = 0;
    std::vector<std::size_t> offsets_{0};
    std::vector<EntityId> indices_;
    std::vector<std::string> doc_ids_;
};

/// One row per document in input order. Every document must fall on `bucket`.
inline EntityMatrix build_matrix(const std::vector<DocumentRecord>& docs, const Vocabulary& vocab,
                                 Date bucket) {
    std::vector<std::vector<EntityId>> rows;
    std::vector<std::string> ids;
    rows.reserve(docs.size());
    for (const auto& d : docs) {
        if (d.day != bucket)
            throw ValidationError("document `" + d.doc_id + "` dated " + d.day.str() +
                                  " outside bucket " + bucket.str());
        rows.push_back(d.entity_ids);
        ids.push_back(d.doc_id);
    }
    return EntityMatrix::from_rows(bucket, vocab.size(), rows, std::move(ids));
}

/// Groups documents by UTC day, preserving input order within a day.
inline std::map<Date, std::vector<DocumentRecord>> bucket_by_day(
    const std::vector<DocumentRecord>& docs) {
    std::map<Date, std::vector<DocumentRecord>> out;
    for (const auto& d : docs) out[d.day].push_back(d);
    return out;
}

/// Column sums (document frequency per entity).
inline std::vector<std::uint64_t> entity_occurrence_totals(const EntityMatrix& a) {
    std::vector<std::uint64_t> totals(a.cols(), 0);
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (auto e : a.row(i)) ++totals[e];
    return totals;
}

// Text format: `m n nnz bucket` then one line per row of space-separated ids.

inline void write_matrix(std::ostream& out, const EntityMatrix& a) {
    out << a.rows() << ' ' << a.cols() << ' ' << a.nnz() << ' ' << a.bucket().str() << '\n';
    for (std::size_t i = 0; i < a.rows(); ++i) {
        auto r = a.row(i);
        for (std::size_t k = 0; k < r.size(); ++k) {
            if (k) out << ' ';
            out << r[k];
        }
        out << '\n';
    }
}

inline EntityMatrix read_matrix(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw ParseError(1, "empty matrix file");
    std::istringstream head(line);
    std::size_t m = 0, n = 0, nnz = 0;
    std::string bucket_s, extra;
    if (!(head >> m >> n >> nnz >> bucket_s) || (head >> extra))
        throw ParseError(1, "expected `m n nnz bucket`");
    auto bucket = Date::parse(bucket_s);
    if (!bucket) throw ParseError(1, "bad bucket date `" + bucket_s + "`");
    std::vector<std::vector<EntityId>> rows(m);
    for (std::size_t i = 0; i < m; ++i) {
        if (!std::getline(in, line)) throw ParseError(i + 2, "missing row");
        std::istringstream ss(line);
        std::string tok;
        while (ss >> tok) {
            std::size_t used = 0;
            unsigned long v = 0;
            try {
                v = std::stoul(tok, &used);
            } catch (const std::exception&) {
                used = 0;
            }
            if (used != tok.size() || tok[0] == '-') throw ParseError(i + 2, "bad entity id `" + tok + "`");
            if (!rows[i].empty() && v <= rows[i].back())
                throw ParseError(i + 2, "row not strictly ascending");
            if (v >= n) throw ParseError(i + 2, "entity id " + tok + " >= n");
            rows[i].push_back(static_cast<EntityId>(v));
        }
    }
    if (std::getline(in, line) && !trim(line).empty())
        throw ParseError(m + 2, "trailing content after " + std::to_string(m) + " rows");
    auto a = EntityMatrix::from_rows(*bucket, n, rows);
    if (a.nnz() != nnz)
        throw ParseError(1, "header nnz " + std::to_string(nnz) + " != actual " + std::to_string(a.nnz()));
    return a;
}

}  // namespace nci
