#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "nci/nci.hpp"

using namespace nci;
namespace fs = std::filesystem;

namespace {

const fs::path kSynthetic = fs::path(NCI_SOURCE_DIR) / "data" / "synthetic";

fs::path fresh_dir(const std::string& name) {
    auto p = fs::temp_directory_path() / ("nci_pipeline_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void spit(const fs::path& p, const std::string& s) { std::ofstream(p, std::ios::binary) << s; }

std::map<std::string, std::string> tree(const fs::path& root) {
    std::map<std::string, std::string> out;
    for (const auto& e : fs::recursive_directory_iterator(root))
        if (e.is_regular_file()) out[fs::relative(e.path(), root).string()] = slurp(e.path());
    return out;
}

pipeline::RunConfig synthetic_config(const fs::path& out) {
    auto j = pipeline::read_config_json(kSynthetic / "config.json");
    j["output_dir"] = out.string();
    return pipeline::parse_config(j, kSynthetic);
}

void run_all(const pipeline::RunConfig& c) {
    std::ostringstream log;
    pipeline::cmd_ingest(c, log);
    pipeline::cmd_nci(c, log);
    pipeline::cmd_analyze(c, log);
}

/// Writes a tiny corpus: vocabulary, documents and config.
fs::path tiny_study(const std::string& name, const std::string& documents, const nlohmann::json& extra = {}) {
    auto dir = fresh_dir(name);
    spit(dir / "vocab.csv",
         "id,canonical,surface_forms,taxonomy_path\n"
         "0,Goldman Sachs,Goldman Sachs|GS,company/bank\n"
         "1,Germany,Germany,region/europe/germany\n"
         "2,bond,bond|bonds,instrument/fixed_income/bond\n"
         "3,bailout,bailout,eurocrisis/policy/bailout\n");
    spit(dir / "docs.jsonl", documents);
    nlohmann::json j{{"documents", "docs.jsonl"}, {"vocabulary", "vocab.csv"}, {"output_dir", "out"}, {"seed", 7}};
    for (auto it = extra.begin(); it != extra.end(); ++it) j[it.key()] = it.value();
    spit(dir / "config.json", j.dump());
    return dir;
}

int run_tool(const std::string& args) {
    const std::string cmd = std::string(NCI_TOOL_PATH) + " " + args + " >/dev/null 2>&1";
    const int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

}  // namespace

TEST(Selftest, LibraryAndBinaryGreen) {
    std::ostringstream out;
    EXPECT_TRUE(pipeline::selftest(out)) << out.str();
    EXPECT_EQ(out.str().find("FAIL"), std::string::npos);
    EXPECT_EQ(run_tool("selftest"), 0);
}

TEST(Config, Errors) {
    const auto base = fs::path("/tmp");
    EXPECT_THROW(pipeline::parse_config(nlohmann::json{{"vocabulary", "v"}}, base), ConfigError);
    EXPECT_THROW(pipeline::parse_config(nlohmann::json{{"documents", "d"}, {"vocabulary", "v"}, {"bogus", 1}}, base),
                 ConfigError);
    EXPECT_THROW(pipeline::parse_config(
                     nlohmann::json{{"documents", "d"}, {"vocabulary", "v"}, {"start", "2012-02-02"}, {"end", "2012-02-01"}},
                     base),
                 ConfigError);
    EXPECT_THROW(pipeline::parse_config(nlohmann::json{{"documents", "d"}, {"vocabulary", "v"}, {"seed", "x"}}, base),
                 ConfigError);
    EXPECT_THROW(pipeline::parse_config(
                     nlohmann::json{{"documents", "d"}, {"vocabulary", "v"}, {"analysis", {{"align", "ffill"}}}}, base),
                 ConfigError);
    auto c = pipeline::parse_config(nlohmann::json{{"documents", "d.jsonl"}, {"vocabulary", "/abs/v.csv"}}, base);
    EXPECT_EQ(c.documents, base / "d.jsonl");
    EXPECT_EQ(c.vocabulary, fs::path("/abs/v.csv"));
}

TEST(Cli, ExitCodes) {
    auto dir = fresh_dir("cli");
    spit(dir / "bad.json", "{not json");
    EXPECT_EQ(run_tool("nci --config " + (dir / "bad.json").string()), 3);
    EXPECT_EQ(run_tool("ingest"), 3);
    spit(dir / "missing.json", R"({"documents":"nope.jsonl","vocabulary":"nope.csv"})");
    EXPECT_EQ(run_tool("ingest --config " + (dir / "missing.json").string()), 1);
}

TEST(Ingest, ThreeDayCorpus) {
    auto dir = tiny_study("three_days",
                          R"({"doc_id":"a","timestamp":"2012-03-01T09:00:00Z","source":"s","text":"Germany bonds and a bailout"})" "\n"
                          R"({"doc_id":"b","timestamp":"2012-03-02T09:00:00Z","source":"s","entity_ids":[0,2]})" "\n"
                          R"({"doc_id":"c","timestamp":"2012-03-03T09:00:00Z","source":"s","entity_ids":[1]})" "\n"
                          R"({"doc_id":"d","timestamp":"2012-03-03T10:00:00Z","source":"s","entity_ids":[1,3]})" "\n");
    auto c = pipeline::load_config(dir / "config.json");
    std::ostringstream log;
    auto s = pipeline::cmd_ingest(c, log);
    EXPECT_EQ(s.buckets, 3u);
    EXPECT_EQ(s.documents, 4u);
    EXPECT_EQ(s.financial, 3u);
    for (auto d : {"2012-03-01", "2012-03-02", "2012-03-03"}) {
        EXPECT_TRUE(fs::exists(c.output_dir / "matrices" / "all" / (std::string(d) + ".mat")));
        EXPECT_TRUE(fs::exists(c.output_dir / "matrices" / "financial" / (std::string(d) + ".mat")));
    }
    auto totals = slurp(c.output_dir / "entity_totals.csv");
    EXPECT_EQ(totals.rfind("# nci_tool ", 0), 0u);
    EXPECT_NE(totals.find("1,Germany,region,3,2\n"), std::string::npos) << totals;
    std::ifstream m(c.output_dir / "matrices" / "all" / "2012-03-03.mat");
    auto a = read_matrix(m);
    EXPECT_EQ(a.rows(), 2u);
    EXPECT_EQ(a.nnz(), 3u);
}

TEST(Ingest, NoFinancialDocumentsWarns) {
    auto dir = tiny_study("no_fin", R"({"doc_id":"a","timestamp":"2012-03-01T09:00:00Z","source":"s","entity_ids":[1]})" "\n");
    auto c = pipeline::load_config(dir / "config.json");
    std::ostringstream log;
    pipeline::cmd_ingest(c, log);
    EXPECT_NE(log.str().find("warning: no financial documents"), std::string::npos);
    std::ifstream m(c.output_dir / "matrices" / "financial" / "2012-03-01.mat");
    EXPECT_EQ(read_matrix(m).rows(), 0u);
}

TEST(Nci, SingleDayAndMissingBuckets) {
    auto dir = tiny_study("single", R"({"doc_id":"a","timestamp":"2012-03-01T09:00:00Z","source":"s","entity_ids":[0,1,2]})" "\n"
                                    R"({"doc_id":"b","timestamp":"2012-03-01T11:00:00Z","source":"s","entity_ids":[1,2]})" "\n");
    auto c = pipeline::load_config(dir / "config.json");
    std::ostringstream log;
    pipeline::cmd_ingest(c, log);
    pipeline::cmd_nci(c, log);
    auto s = slurp(c.output_dir / "nci_all.csv");
    EXPECT_EQ(std::count(s.begin(), s.end(), '\n'), 3);  // comment, header, one row
    // [[1,1,1,0],[0,1,1,0]]: A A^T = [[3,2],[2,2]], ||.||_F = sqrt(21)
    EXPECT_NE(s.find("2012-03-01," + format_double(std::sqrt(21.0))), std::string::npos) << s;

    auto j = pipeline::read_config_json(dir / "config.json");
    j["start"] = "2012-02-28";
    j["end"] = "2012-03-01";
    auto ranged = pipeline::parse_config(j, dir);
    std::ostringstream log2;
    pipeline::cmd_nci(ranged, log2);
    EXPECT_NE(log2.str().find("missing, skipped: 2012-02-28 2012-02-29"), std::string::npos) << log2.str();
}

TEST(Nci, MatchesExplicitOracleOnSyntheticCorpus) {
    auto out = fresh_dir("oracle");
    auto c = synthetic_config(out);
    std::ostringstream log;
    pipeline::cmd_ingest(c, log);
    pipeline::cmd_nci(c, log);

    // independent path: documents -> filter -> per-day matrices -> explicit products
    auto vocab = load_vocabulary(c.vocabulary.string());
    auto docs = load_documents(c.documents.string(), vocab);
    auto fin = filter_financial(docs, vocab, FilterRuleset::load(c.ruleset->string(), vocab));
    std::map<std::string, double> expect;
    for (const auto& [day, ds] : bucket_by_day(fin)) {
        auto a = build_matrix(ds, vocab, day);
        expect[day.str()] = frobenius_explicit(a);
    }
    std::ifstream in(c.output_dir / "nci_financial.csv");
    csv::Reader reader(in);
    reader.expect_header({"bucket", "nci_raw", "nci_normalized", "m", "k_used", "method"});
    std::size_t checked = 0;
    while (auto row = reader.next()) {
        if ((*row)[1].empty()) continue;
        const double got = std::stod((*row)[1]), want = expect.at((*row)[0]);
        EXPECT_NEAR(got, want, 1e-9 * want) << (*row)[0];
        ++checked;
    }
    EXPECT_EQ(checked, expect.size());
}

TEST(EndToEnd, ByteIdenticalRerunsAndHeaders) {
    auto out1 = fresh_dir("run1"), out2 = fresh_dir("run2");
    run_all(synthetic_config(out1));
    run_all(synthetic_config(out2));
    auto t1 = tree(out1), t2 = tree(out2);
    ASSERT_FALSE(t1.empty());
    EXPECT_EQ(t1.size(), t2.size());
    for (const auto& [name, body] : t1) {
        EXPECT_EQ(body, t2[name]) << name;
        if (name.ends_with(".csv")) EXPECT_EQ(body.rfind("# nci_tool ", 0), 0u) << name;
    }
    for (auto f : {"nci_all.csv", "nci_financial.csv", "nci_partition.csv", "nullmodel.csv", "frame.csv",
                   "correlation.csv", "granger.csv", "plots/correlation.svg", "plots/nci_vs_markets.csv"})
        EXPECT_TRUE(t1.count(f)) << f;
    const auto header = synthetic_config(out1).header();
    EXPECT_NE(t1["nullmodel.csv"].find(header.substr(header.find("seed="))), std::string::npos);
}

TEST(Analyze, DiagonalCorrelationIsOne) {
    auto out = fresh_dir("diag");
    run_all(synthetic_config(out));
    std::ifstream in(out / "correlation.csv");
    csv::Reader reader(in);
    reader.expect_header({"x", "y", "r", "p_value", "n_obs"});
    int diagonal = 0;
    while (auto row = reader.next())
        if ((*row)[0] == (*row)[1]) {
            EXPECT_EQ(std::stod((*row)[2]), 1.0);
            ++diagonal;
        }
    EXPECT_EQ(diagonal, 5);
}

TEST(Analyze, RecoversPlantedDirection) {
    auto out = fresh_dir("planted");
    run_all(synthetic_config(out));
    std::ifstream in(out / "granger.csv");
    csv::Reader reader(in);
    reader.expect_header({"cause", "effect", "p_var", "d_max", "wald", "p_value", "sig_level", "f_stat", "f_df1",
                          "f_df2", "f_p_value"});
    std::map<std::pair<std::string, std::string>, double> p;
    while (auto row = reader.next()) p[{(*row)[0], (*row)[1]}] = std::stod((*row)[5]);
    EXPECT_LT((p.at({"SPX:daily_vol", "nci_financial"})), 0.01);
    EXPECT_GE((p.at({"nci_financial", "SPX:daily_vol"})), 0.05);
}

TEST(Analyze, MissingMarketFileFailsBeforeComputation) {
    auto out = fresh_dir("missing_market");
    auto j = pipeline::read_config_json(kSynthetic / "config.json");
    j["output_dir"] = out.string();
    j["markets"][0]["path"] = "no_such_market.csv";
    auto c = pipeline::parse_config(j, kSynthetic);
    std::ostringstream log;
    try {
        pipeline::cmd_analyze(c, log);
        FAIL();
    } catch (const InputError& e) {
        EXPECT_NE(std::string(e.what()).find("no_such_market.csv"), std::string::npos);
    }
    EXPECT_FALSE(fs::exists(out / "frame.csv"));
}

TEST(NullModel, FixedSeedReproducible) {
    auto out = fresh_dir("null");
    auto j = pipeline::read_config_json(kSynthetic / "config.json");
    j["output_dir"] = out.string();
    j["end"] = "2011-10-12";
    auto c = pipeline::parse_config(j, kSynthetic);
    std::ostringstream log;
    pipeline::cmd_ingest(c, log);
    pipeline::cmd_nullmodel(c, log);
    auto first = slurp(out / "nullmodel.csv");
    pipeline::cmd_nullmodel(c, log);
    EXPECT_EQ(first, slurp(out / "nullmodel.csv"));
    EXPECT_EQ(std::count(first.begin(), first.end(), '\n'), 12);
}
