#pragma once
//
// Batch stages behind the nci_tool subcommands. One JSON config describes a
// whole study; every stage reads its inputs from the config and the output
// directory and writes CSV (plus SVG plots) back into the output directory.
//
// Output layout under output_dir:
//
//   matrices/{all,financial}/YYYY-MM-DD.mat   ingest
//   entity_totals.csv, top_entities.csv       ingest
//   nci_all.csv, nci_financial.csv            nci
//   nci_partition.csv, nci_components.csv     nci
//   nullmodel.csv                             nullmodel (or nci with null_model.enabled)
//   frame.csv, correlation.csv, granger*.csv  analyze
//   plots/*.svg with sidecar plots/*.csv      analyze
//

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "nci/alignment.hpp"
#include "nci/cohesion.hpp"
#include "nci/core.hpp"
#include "nci/corpus.hpp"
#include "nci/csv.hpp"
#include "nci/econometrics.hpp"
#include "nci/markets.hpp"
#include "nci/plot.hpp"
#include "nci/series.hpp"

#ifndef NCI_VERSION
#define NCI_VERSION "0.0.0"
#endif

namespace nci::pipeline {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

struct MarketInput {
    std::string symbol;
    fs::path path;
};

struct SeriesInput {
    std::string name;
    fs::path path;
};

struct RunConfig {
    fs::path documents, vocabulary;
    std::optional<fs::path> ruleset;  // default: accept iff >= 2 taxonomy roots
    std::vector<MarketInput> markets;
    std::vector<SeriesInput> series;
    std::optional<Date> start, end;  // inclusive bucket range
    fs::path output_dir = "out";
    std::uint64_t seed = 1;
    CohesionOptions cohesion;
    bool null_model = false;
    NullModelOptions null_options;
    std::size_t top_n = 10;
    std::size_t hist_window = 21;
    AlignPolicy align = AlignPolicy::market_calendar;
    std::vector<std::string> columns;                 // empty: every series
    std::map<std::string, std::string> transforms;    // column -> level | diff_log
    std::vector<std::string> plot_series;             // drawn under nci_financial
    std::size_t n_perm = 999;
    GcSettings gc;
    std::vector<std::pair<std::string, std::string>> gc_pairs;  // empty: all pairs
    std::string canonical;  // effective config without output_dir, compact JSON with sorted keys

    std::uint64_t hash() const { return fnv1a(canonical); }

    std::string header() const {
        char buf[96];
        std::snprintf(buf, sizeof buf, "# nci_tool %s config=%016llx seed=%llu", NCI_VERSION,
                      static_cast<unsigned long long>(hash()), static_cast<unsigned long long>(seed));
        return buf;
    }
};

namespace detail {

template <class T>
T get_as(const nlohmann::json& j, const std::string& key) {
    try {
        return j.get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ConfigError("config key `" + key + "` has the wrong type");
    }
}

inline void check_keys(const nlohmann::json& j, const std::string& where, std::set<std::string> allowed) {
    if (!j.is_object()) throw ConfigError("config `" + where + "` must be an object");
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!allowed.count(it.key())) throw ConfigError("unknown config key `" + where + it.key() + "`");
}

inline Date date_of(const nlohmann::json& j, const std::string& key) {
    auto d = Date::parse(get_as<std::string>(j, key));
    if (!d) throw ConfigError("config key `" + key + "` is not a YYYY-MM-DD date");
    return *d;
}

}  // namespace detail

/// Builds a RunConfig from parsed JSON. Relative paths resolve against `base`.
inline RunConfig parse_config(const nlohmann::json& j, const fs::path& base) {
    using detail::get_as;
    detail::check_keys(j, "", {"documents", "vocabulary", "ruleset", "markets", "series", "start", "end",
                               "output_dir", "seed", "cohesion", "null_model", "top_n", "analysis", "gc"});
    RunConfig c;
    auto path = [&](const nlohmann::json& v, const std::string& key) {
        fs::path p = get_as<std::string>(v, key);
        return p.is_absolute() ? p : base / p;
    };
    if (!j.contains("documents") || !j.contains("vocabulary"))
        throw ConfigError("config needs `documents` and `vocabulary`");
    c.documents = path(j["documents"], "documents");
    c.vocabulary = path(j["vocabulary"], "vocabulary");
    if (j.contains("ruleset")) c.ruleset = path(j["ruleset"], "ruleset");
    if (j.contains("markets")) {
        for (const auto& m : get_as<nlohmann::json::array_t>(j["markets"], "markets")) {
            detail::check_keys(m, "markets[].", {"symbol", "path"});
            if (!m.contains("symbol") || !m.contains("path")) throw ConfigError("markets[] needs `symbol` and `path`");
            c.markets.push_back({get_as<std::string>(m["symbol"], "markets[].symbol"), path(m["path"], "markets[].path")});
        }
    }
    if (j.contains("series")) {
        for (const auto& s : get_as<nlohmann::json::array_t>(j["series"], "series")) {
            detail::check_keys(s, "series[].", {"name", "path"});
            if (!s.contains("name") || !s.contains("path")) throw ConfigError("series[] needs `name` and `path`");
            c.series.push_back({get_as<std::string>(s["name"], "series[].name"), path(s["path"], "series[].path")});
        }
    }
    if (j.contains("start")) c.start = detail::date_of(j["start"], "start");
    if (j.contains("end")) c.end = detail::date_of(j["end"], "end");
    if (c.start && c.end && *c.end < *c.start) throw ConfigError("date range is empty: end precedes start");
    if (j.contains("output_dir")) c.output_dir = path(j["output_dir"], "output_dir");
    else c.output_dir = base / c.output_dir;
    if (j.contains("seed")) c.seed = get_as<std::uint64_t>(j["seed"], "seed");
    if (j.contains("top_n")) c.top_n = get_as<std::size_t>(j["top_n"], "top_n");

    if (j.contains("cohesion")) {
        const auto& co = j["cohesion"];
        detail::check_keys(co, "cohesion.", {"tol", "k_step"});
        if (co.contains("tol")) c.cohesion.tol = get_as<double>(co["tol"], "cohesion.tol");
        if (co.contains("k_step")) c.cohesion.k_step = get_as<std::size_t>(co["k_step"], "cohesion.k_step");
        if (!(c.cohesion.tol > 0 && c.cohesion.tol < 1)) throw ConfigError("cohesion.tol must lie in (0, 1)");
        if (c.cohesion.k_step < 1) throw ConfigError("cohesion.k_step must be >= 1");
    }
    if (j.contains("null_model")) {
        const auto& nm = j["null_model"];
        detail::check_keys(nm, "null_model.", {"enabled", "n_samples", "swaps_per_edge"});
        if (nm.contains("enabled")) c.null_model = get_as<bool>(nm["enabled"], "null_model.enabled");
        if (nm.contains("n_samples")) c.null_options.n_samples = get_as<std::size_t>(nm["n_samples"], "null_model.n_samples");
        if (nm.contains("swaps_per_edge"))
            c.null_options.swaps_per_edge = get_as<std::size_t>(nm["swaps_per_edge"], "null_model.swaps_per_edge");
        if (c.null_options.n_samples < 2) throw ConfigError("null_model.n_samples must be >= 2");
    }
    if (j.contains("analysis")) {
        const auto& an = j["analysis"];
        detail::check_keys(an, "analysis.", {"align", "columns", "transforms", "n_perm", "hist_window", "plot"});
        if (an.contains("align")) c.align = parse_align_policy(get_as<std::string>(an["align"], "analysis.align"));
        if (an.contains("columns")) c.columns = get_as<std::vector<std::string>>(an["columns"], "analysis.columns");
        if (an.contains("transforms")) {
            c.transforms = get_as<std::map<std::string, std::string>>(an["transforms"], "analysis.transforms");
            for (const auto& [k, v] : c.transforms)
                if (v != "level" && v != "diff_log")
                    throw ConfigError("transform for `" + k + "` must be level|diff_log, got `" + v + "`");
        }
        if (an.contains("n_perm")) c.n_perm = get_as<std::size_t>(an["n_perm"], "analysis.n_perm");
        if (c.n_perm < 100) throw ConfigError("analysis.n_perm must be >= 100");
        if (an.contains("hist_window")) c.hist_window = get_as<std::size_t>(an["hist_window"], "analysis.hist_window");
        if (an.contains("plot")) c.plot_series = get_as<std::vector<std::string>>(an["plot"], "analysis.plot");
    }
    if (j.contains("gc")) {
        const auto& g = j["gc"];
        detail::check_keys(g, "gc.", {"p_max", "d_cap", "criterion", "pairs"});
        if (g.contains("p_max")) c.gc.p_max = get_as<std::size_t>(g["p_max"], "gc.p_max");
        if (g.contains("d_cap")) c.gc.d_cap = get_as<int>(g["d_cap"], "gc.d_cap");
        if (g.contains("criterion")) c.gc.criterion = parse_lag_criterion(get_as<std::string>(g["criterion"], "gc.criterion"));
        if (g.contains("pairs"))
            for (const auto& p : get_as<std::vector<std::vector<std::string>>>(g["pairs"], "gc.pairs")) {
                if (p.size() != 2) throw ConfigError("gc.pairs entries must be [x, y]");
                c.gc_pairs.emplace_back(p[0], p[1]);
            }
        if (c.gc.p_max < 1) throw ConfigError("gc.p_max must be >= 1");
        if (c.gc.d_cap < 1 || c.gc.d_cap > 2) throw ConfigError("gc.d_cap must be 1 or 2");
    }
    auto hashed = j;
    hashed.erase("output_dir");
    c.canonical = hashed.dump();
    return c;
}

inline nlohmann::json read_config_json(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config `" + path.string() + "`");
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config `" + path.string() + "` is not valid JSON: " + e.what());
    }
}

inline RunConfig load_config(const fs::path& path) {
    return parse_config(read_config_json(path), path.parent_path());
}

/// Checks every input the stage needs before any computation starts.
inline void validate_inputs(const RunConfig& c, bool need_corpus, bool need_markets) {
    auto require = [](const fs::path& p, const std::string& what) {
        if (!fs::is_regular_file(p))
            throw InputError(what + " `" + p.string() + "` does not exist or is not a file");
    };
    if (need_corpus) {
        require(c.documents, "documents file");
        require(c.vocabulary, "vocabulary file");
        if (c.ruleset) require(*c.ruleset, "ruleset file");
    }
    if (need_markets) {
        require(c.vocabulary, "vocabulary file");
        for (const auto& m : c.markets) require(m.path, "market file for `" + m.symbol + "`");
        for (const auto& s : c.series) require(s.path, "series file for `" + s.name + "`");
    }
}

// ---------------------------------------------------------------------------
// Output helpers
// ---------------------------------------------------------------------------

inline std::ofstream open_output(const RunConfig& c, const fs::path& rel, bool with_header = true) {
    const auto p = c.output_dir / rel;
    fs::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary);
    if (!out) throw InputError("cannot write `" + p.string() + "`");
    if (with_header) out << c.header() << '\n';
    return out;
}

inline std::vector<Date> day_range(Date a, Date b) {
    std::vector<Date> out;
    for (auto d = a; d <= b; d = d.next()) out.push_back(d);
    return out;
}

inline fs::path matrix_path(const std::string& corpus, Date d) {
    return fs::path("matrices") / corpus / (d.str() + ".mat");
}

// ---------------------------------------------------------------------------
// ingest
// ---------------------------------------------------------------------------

struct IngestSummary {
    std::size_t documents = 0, financial = 0, buckets = 0;
};

inline IngestSummary cmd_ingest(const RunConfig& c, std::ostream& log) {
    validate_inputs(c, true, false);
    const auto vocab = load_vocabulary(c.vocabulary.string());
    const auto rules = c.ruleset ? FilterRuleset::load(c.ruleset->string(), vocab) : FilterRuleset::default_financial();
    std::vector<DocumentRecord> docs;
    try {
        docs = load_documents(c.documents.string(), vocab);
    } catch (const ParseError& e) {
        throw ParseError(e.line, c.documents.string() + ": " + e.detail);
    }
    std::erase_if(docs, [&](const DocumentRecord& d) {
        return (c.start && d.day < *c.start) || (c.end && *c.end < d.day);
    });
    if (docs.empty() && !(c.start && c.end)) throw ValidationError("no documents inside the configured range");

    Date lo = c.start ? *c.start : docs.front().day, hi = c.end ? *c.end : docs.front().day;
    for (const auto& d : docs) {
        if (!c.start) lo = std::min(lo, d.day);
        if (!c.end) hi = std::max(hi, d.day);
    }
    const auto financial = filter_financial(docs, vocab, rules);
    if (financial.empty()) log << "warning: no financial documents after filtering; financial matrices are empty\n";

    const auto all_by_day = bucket_by_day(docs), fin_by_day = bucket_by_day(financial);
    std::vector<std::uint64_t> totals_all(vocab.size(), 0), totals_fin(vocab.size(), 0);
    IngestSummary s{docs.size(), financial.size(), 0};
    static const std::vector<DocumentRecord> none;
    for (auto day : day_range(lo, hi)) {
        for (auto [name, by_day, totals] : {std::tuple{"all", &all_by_day, &totals_all},
                                            std::tuple{"financial", &fin_by_day, &totals_fin}}) {
            auto it = by_day->find(day);
            auto a = build_matrix(it == by_day->end() ? none : it->second, vocab, day);
            auto out = open_output(c, matrix_path(name, day), false);
            write_matrix(out, a);
            auto t = entity_occurrence_totals(a);
            for (std::size_t e = 0; e < t.size(); ++e) (*totals)[e] += t[e];
        }
        ++s.buckets;
    }

    {
        auto out = open_output(c, "entity_totals.csv");
        csv::write_row(out, {"entity_id", "canonical", "root", "all", "financial"});
        for (const auto& e : vocab.entities())
            csv::write_row(out, {std::to_string(e.id), e.canonical, e.root(), std::to_string(totals_all[e.id]),
                                 std::to_string(totals_fin[e.id])});
    }
    {
        auto out = open_output(c, "top_entities.csv");
        csv::write_row(out, {"partition", "rank", "entity_id", "canonical", "all", "financial"});
        for (const auto& g : PartitionSpec::by_taxonomy_root(vocab).groups) {
            auto ids = g.ids;
            std::stable_sort(ids.begin(), ids.end(), [&](auto a, auto b) { return totals_all[a] > totals_all[b]; });
            for (std::size_t r = 0; r < ids.size() && r < c.top_n; ++r)
                csv::write_row(out, {g.name, std::to_string(r + 1), std::to_string(ids[r]), vocab[ids[r]].canonical,
                                     std::to_string(totals_all[ids[r]]), std::to_string(totals_fin[ids[r]])});
        }
    }
    log << "ingest: " << s.documents << " documents, " << s.financial << " financial, " << s.buckets
        << " buckets " << lo.str() << " .. " << hi.str() << '\n';
    return s;
}

// ---------------------------------------------------------------------------
// nci / nullmodel
// ---------------------------------------------------------------------------

/// Bucket matrices found on disk for `corpus`, restricted to the configured
/// range. Buckets missing inside an explicit range are reported and skipped.
inline std::vector<EntityMatrix> load_buckets(const RunConfig& c, const std::string& corpus, std::ostream& log) {
    const auto dir = c.output_dir / "matrices" / corpus;
    std::vector<Date> days;
    if (c.start && c.end) {
        days = day_range(*c.start, *c.end);
    } else {
        if (!fs::is_directory(dir))
            throw InputError("no matrices under `" + dir.string() + "`; run `ingest` first");
        for (const auto& entry : fs::directory_iterator(dir)) {
            if (entry.path().extension() != ".mat") continue;
            auto d = Date::parse(entry.path().stem().string());
            if (!d) continue;
            if ((c.start && *d < *c.start) || (c.end && *c.end < *d)) continue;
            days.push_back(*d);
        }
        std::sort(days.begin(), days.end());
    }
    std::vector<EntityMatrix> out;
    std::vector<std::string> missing;
    for (auto d : days) {
        const auto p = c.output_dir / matrix_path(corpus, d);
        std::ifstream in(p);
        if (!in) {
            missing.push_back(d.str());
            continue;
        }
        try {
            out.push_back(read_matrix(in));
        } catch (const ParseError& e) {
            throw ParseError(e.line, p.string() + ": " + e.detail);
        }
        if (out.back().bucket() != d)
            throw IntegrityError("matrix `" + p.string() + "` holds bucket " + out.back().bucket().str());
    }
    if (!missing.empty()) {
        log << "warning: " << missing.size() << " " << corpus << " bucket file(s) missing, skipped:";
        for (const auto& m : missing) log << ' ' << m;
        log << '\n';
    }
    if (out.empty()) throw InputError("no " + corpus + " bucket matrices found; run `ingest` first");
    return out;
}

inline void write_cohesion_csv(std::ostream& out, const std::vector<CohesionResult>& rs) {
    csv::write_row(out, {"bucket", "nci_raw", "nci_normalized", "m", "k_used", "method"});
    for (const auto& r : rs) {
        if (r.missing)
            csv::write_row(out, {r.bucket.str(), "", "", "0", "0", "empty"});
        else
            csv::write_row(out, {r.bucket.str(), format_double(r.nci_raw), format_double(r.nci_normalized),
                                 std::to_string(r.m), std::to_string(r.k_used), to_string(r.method)});
    }
}

inline std::uint64_t bucket_seed(std::uint64_t seed, Date d) {
    return seed ^ (std::uint64_t(d.days().time_since_epoch().count()) * 0x9E3779B97F4A7C15ull);
}

inline std::size_t cmd_nullmodel(const RunConfig& c, std::ostream& log) {
    const auto matrices = load_buckets(c, "financial", log);
    auto out = open_output(c, "nullmodel.csv");
    csv::write_row(out, {"bucket", "observed", "mean", "std", "z", "n_samples", "seed", "degenerate"});
    std::size_t written = 0;
    for (const auto& a : matrices) {
        if (a.nnz() < 2) {
            log << "warning: null model skipped for " << a.bucket().str() << " (fewer than 2 occurrences)\n";
            continue;
        }
        auto opt = c.null_options;
        opt.seed = bucket_seed(c.seed, a.bucket());
        auto r = null_model(a, opt);
        csv::write_row(out, {r.bucket.str(), format_double(r.observed), format_double(r.sample_mean),
                             format_double(r.sample_std), format_double(r.z_score), std::to_string(r.n_samples),
                             std::to_string(r.seed), r.degenerate ? "1" : "0"});
        ++written;
    }
    log << "nullmodel: " << written << " buckets\n";
    return written;
}

struct NciSummary {
    std::size_t buckets_all = 0, buckets_financial = 0;
};

inline NciSummary cmd_nci(const RunConfig& c, std::ostream& log) {
    if (!fs::is_regular_file(c.vocabulary))
        throw InputError("vocabulary file `" + c.vocabulary.string() + "` does not exist or is not a file");
    const auto vocab = load_vocabulary(c.vocabulary.string());
    const auto all = load_buckets(c, "all", log);
    const auto fin = load_buckets(c, "financial", log);

    const auto all_r = cohesion_results(all, c.cohesion), fin_r = cohesion_results(fin, c.cohesion);
    {
        auto out = open_output(c, "nci_all.csv");
        write_cohesion_csv(out, all_r);
    }
    {
        auto out = open_output(c, "nci_financial.csv");
        write_cohesion_csv(out, fin_r);
    }

    const auto spec = PartitionSpec::by_taxonomy_root(vocab);
    auto blocks_out = open_output(c, "nci_partition.csv");
    csv::write_row(blocks_out, {"bucket", "group_a", "group_b", "frob_sq", "m"});
    auto comp_out = open_output(c, "nci_components.csv");
    std::vector<std::string> comp_header{"bucket"};
    for (const auto& g : spec.groups) comp_header.push_back(g.name);
    csv::write_row(comp_out, comp_header);
    for (const auto& a : fin) {
        std::vector<std::string> row{a.bucket().str()};
        if (a.rows() == 0) {
            row.resize(spec.groups.size() + 1);
            csv::write_row(comp_out, row);
            continue;
        }
        const auto blocks = partition_cohesion(a, spec);
        for (const auto& b : blocks) {
            csv::write_row(blocks_out, {a.bucket().str(), b.group_a, b.group_b, format_double(b.frob_sq),
                                        std::to_string(a.rows())});
            if (b.group_a == b.group_b) row.push_back(format_double(b.frob / double(a.rows())));
        }
        csv::write_row(comp_out, row);
    }
    log << "nci: " << all.size() << " all-news buckets, " << fin.size() << " financial buckets\n";
    if (c.null_model) cmd_nullmodel(c, log);
    return {all.size(), fin.size()};
}

// ---------------------------------------------------------------------------
// analyze
// ---------------------------------------------------------------------------

inline IndexSeries read_nci_csv(const fs::path& p, const std::string& name) {
    std::ifstream in(p);
    if (!in) throw InputError("`" + p.string() + "` not found; run `nci` first");
    csv::Reader reader(in);
    try {
        reader.expect_header({"bucket", "nci_raw", "nci_normalized", "m", "k_used", "method"});
        IndexSeries s(name);
        while (auto row = reader.next()) {
            if (row->size() != 6) throw ParseError(reader.line(), "expected 6 fields");
            auto d = Date::parse((*row)[0]);
            if (!d) throw ParseError(reader.line(), "bad bucket `" + (*row)[0] + "`");
            std::optional<double> v;
            if (!(*row)[2].empty()) {
                v = nci::detail::parse_number((*row)[2]);
                if (!v) throw ParseError(reader.line(), "bad value `" + (*row)[2] + "`");
            }
            s.push(*d, v);
        }
        return s;
    } catch (const ParseError& e) {
        throw ParseError(e.line, p.string() + ": " + e.detail);
    }
}

struct AnalyzeSummary {
    std::size_t rows = 0, columns = 0, gc_results = 0, gc_errors = 0;
};

inline const char* direction_label(Direction d) {
    switch (d) {
        case Direction::x_to_y: return "->";
        case Direction::y_to_x: return "<-";
        case Direction::bidirectional: return "<->";
        default: return "none";
    }
}

inline AnalyzeSummary cmd_analyze(const RunConfig& c, std::ostream& log) {
    validate_inputs(c, false, true);

    std::vector<IndexSeries> series;
    for (const auto& m : c.markets) {
        auto s = load_ohlcv(m.path.string(), m.symbol);
        series.push_back(daily_volatility(s));
        series.push_back(historical_volatility(s, c.hist_window));
        series.push_back(volume_series(s));
    }
    series.push_back(read_nci_csv(c.output_dir / "nci_all.csv", "nci"));
    series.push_back(read_nci_csv(c.output_dir / "nci_financial.csv", "nci_financial"));
    for (const auto& e : c.series) {
        try {
            series.push_back(load_index_series(e.path.string(), e.name));
        } catch (const ParseError& err) {
            throw ParseError(err.line, e.path.string() + ": " + err.detail);
        }
    }
    if (!c.columns.empty()) {
        std::vector<IndexSeries> picked;
        for (const auto& name : c.columns) {
            auto it = std::find_if(series.begin(), series.end(), [&](const IndexSeries& s) { return s.name() == name; });
            if (it == series.end()) throw ConfigError("analysis.columns names unknown series `" + name + "`");
            picked.push_back(*it);
        }
        series = std::move(picked);
    }
    for (const auto& [name, how] : c.transforms)
        if (std::none_of(series.begin(), series.end(), [&](const IndexSeries& s) { return s.name() == name; }))
            throw ConfigError("analysis.transforms names unknown column `" + name + "`");

    auto frame = align(series, c.align);
    const auto report = frame.report();
    for (const auto& [name, how] : c.transforms)
        if (how == "diff_log") frame = diff_log(frame, name);
    log << "analyze: " << report.candidates << " candidate dates, " << frame.rows() << " aligned rows, "
        << frame.names().size() << " columns\n";
    {
        auto out = open_output(c, "frame.csv");
        write_frame(out, frame);
    }

    const auto cells = correlation_matrix(frame, c.n_perm, c.seed);
    {
        auto out = open_output(c, "correlation.csv");
        csv::write_row(out, {"x", "y", "r", "p_value", "n_obs"});
        for (const auto& cell : cells)
            csv::write_row(out, {cell.x_name, cell.y_name, format_double(cell.r), format_double(cell.p_value),
                                 std::to_string(cell.n_obs)});
    }
    const auto& names = frame.names();
    std::vector<std::vector<double>> r(names.size(), std::vector<double>(names.size()));
    for (std::size_t i = 0; i < cells.size(); ++i) r[i / names.size()][i % names.size()] = cells[i].r;
    {
        auto svg = open_output(c, "plots/correlation.svg", false);
        svg << "<!-- " << c.header().substr(2) << " -->\n";
        plot::heatmap(svg, "Pearson correlation", names, r);
        auto data = open_output(c, "plots/correlation.csv");
        std::vector<std::string> head{"x"};
        head.insert(head.end(), names.begin(), names.end());
        csv::write_row(data, head);
        for (std::size_t i = 0; i < names.size(); ++i) {
            std::vector<std::string> row{names[i]};
            for (double v : r[i]) row.push_back(format_double(v));
            csv::write_row(data, row);
        }
    }
    {
        std::vector<std::string> lines;
        if (frame.has("nci_financial")) lines.push_back("nci_financial");
        if (c.plot_series.empty()) {
            for (const auto& m : c.markets)
                for (const auto& n : {m.symbol + ":daily_vol", m.symbol + ":hist_vol"})
                    if (frame.has(n)) lines.push_back(n);
        } else {
            for (const auto& n : c.plot_series) {
                if (!frame.has(n)) throw ConfigError("analysis.plot names unknown column `" + n + "`");
                lines.push_back(n);
            }
        }
        std::vector<plot::Line> data;
        for (const auto& n : lines) {
            auto col = frame.column(n);
            data.push_back({n, {col.begin(), col.end()}});
        }
        auto svg = open_output(c, "plots/nci_vs_markets.svg", false);
        svg << "<!-- " << c.header().substr(2) << " -->\n";
        plot::line_panels(svg, "NCI and market indicators", frame.dates(), data);
        auto side = open_output(c, "plots/nci_vs_markets.csv");
        std::vector<std::string> head{"date"};
        head.insert(head.end(), lines.begin(), lines.end());
        csv::write_row(side, head);
        for (std::size_t i = 0; i < frame.rows(); ++i) {
            std::vector<std::string> row{frame.dates()[i].str()};
            for (const auto& l : data) row.push_back(format_double(l.values[i]));
            csv::write_row(side, row);
        }
    }

    auto pairs = c.gc_pairs;
    if (pairs.empty())
        for (std::size_t i = 0; i < names.size(); ++i)
            for (std::size_t j = i + 1; j < names.size(); ++j) pairs.emplace_back(names[i], names[j]);
    for (const auto& [a, b] : pairs)
        if (!frame.has(a) || !frame.has(b)) throw ConfigError("gc.pairs names unknown column in [" + a + ", " + b + "]");
    const auto batch = gc_matrix(frame, pairs, c.gc);
    {
        auto out = open_output(c, "granger.csv");
        csv::write_row(out, {"cause", "effect", "p_var", "d_max", "wald", "p_value", "sig_level", "f_stat", "f_df1",
                             "f_df2", "f_p_value"});
        for (const auto& g : batch.results)
            csv::write_row(out, {g.cause, g.effect, std::to_string(g.p_var), std::to_string(g.d_max),
                                 format_double(g.wald_stat), format_double(g.p_value), to_string(g.significance),
                                 format_double(g.f_stat), std::to_string(g.restrictions), std::to_string(g.f_df2),
                                 format_double(g.f_p_value)});
    }
    {
        auto out = open_output(c, "granger_directions.csv");
        csv::write_row(out, {"x", "y", "at_0.01", "at_0.05"});
        for (std::size_t i = 0; i + 1 < batch.results.size(); i += 2) {
            TodaYamamotoResult t{batch.results[i], batch.results[i + 1], batch.results[i].p_var, batch.results[i].d_max};
            csv::write_row(out, {t.x_to_y.cause, t.x_to_y.effect, direction_label(direction(t, 0.01)),
                                 direction_label(direction(t, 0.05))});
        }
    }
    {
        auto out = open_output(c, "granger_errors.csv");
        csv::write_row(out, {"x", "y", "error"});
        for (const auto& e : batch.errors) {
            csv::write_row(out, {e.x_name, e.y_name, e.message});
            log << "warning: granger " << e.x_name << " / " << e.y_name << ": " << e.message << '\n';
        }
    }
    return {frame.rows(), names.size(), batch.results.size(), batch.errors.size()};
}

// ---------------------------------------------------------------------------
// selftest
// ---------------------------------------------------------------------------

/// Embedded analytic fixtures; prints one PASS/FAIL line each.
inline bool selftest(std::ostream& out) {
    bool all_ok = true;
    auto check = [&](const std::string& name, bool ok, const std::string& detail) {
        out << (ok ? "PASS " : "FAIL ") << name << "  " << detail << '\n';
        all_ok = all_ok && ok;
    };
    auto close = [](double a, double b, double tol) { return std::abs(a - b) <= tol * std::max(1.0, std::abs(b)); };
    const Date day(2012, 1, 2);
    auto matrix = [&](std::vector<std::vector<EntityId>> rows, std::size_t n) {
        return EntityMatrix::from_rows(day, n, rows);
    };
    struct Fixture {
        std::string name;
        EntityMatrix a;
        double expect;
    };
    const std::vector<Fixture> fixtures{
        {"identity_3x3", matrix({{0}, {1}, {2}}, 3), std::sqrt(3.0)},
        {"ones_2x3", matrix({{0, 1, 2}, {0, 1, 2}}, 3), 6.0},
        {"chain_2x3", matrix({{0, 1}, {1, 2}}, 3), std::sqrt(10.0)},
    };
    for (const auto& f : fixtures) {
        const double ex = frobenius_explicit(f.a);
        const double en = frobenius_entity_projection(f.a);
        CohesionOptions tight;
        tight.tol = 1e-12;
        const double sv = nci_svd(f.a, tight).first.nci_raw;
        check("frobenius_" + f.name, close(ex, f.expect, 1e-12) && close(en, f.expect, 1e-12),
              "explicit=" + format_double(ex) + " entity=" + format_double(en) + " want=" + format_double(f.expect));
        check("svd_" + f.name, close(sv, f.expect, 1e-12), "svd=" + format_double(sv));
    }
    {
        PartitionSpec spec{PartitionAxis::entity, {{"g1", {0}}, {"g2", {1, 2}}}};
        auto b = partition_cohesion(fixtures[2].a, spec);
        bool ok = b.size() == 4 && b[0].frob_sq == 1 && b[1].frob_sq == 1 && b[2].frob_sq == 1 && b[3].frob_sq == 7;
        check("partition_blocks_chain", ok, "blocks (1,1,1,7)");
    }
    {
        OhlcvSeries s{"T", {{day, 100, 101, 99, 100, 1}, {day.next(), 100, 102, 98, 100, 1}}};
        const double v = *daily_volatility(s)[1].value;
        check("daily_volatility", close(v, 0.04, 1e-12), "value=" + format_double(v));
        OhlcvSeries g{"G", {}};
        auto d = day;
        for (int i = 0; i < 25; ++i, d = d.next()) {
            const double p = std::ldexp(1.0, i);
            g.bars.push_back({d, p, p, p, p, 1});
        }
        const double h = *historical_volatility(g, 21)[24].value;
        check("historical_volatility_doubling", close(h, std::log(2.0), 1e-12), "value=" + format_double(h));
    }
    {
        std::vector<double> x{1, 2, 3, 4}, y{1, 3, 2, 4};
        const double r = pearson(x, y);
        check("pearson", close(r, 0.8, 1e-12), "r=" + format_double(r));
    }
    return all_ok;
}

}  // namespace nci::pipeline
