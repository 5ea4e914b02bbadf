// gen_synthetic: writes a self-contained synthetic study (vocabulary,
// JSON-lines documents, ruleset, OHLCV market file, VIX-like series, config).
//
// The market follows a log-volatility AR(1). Each calendar day's news herding
// intensity is driven by the previous trading day's observed range
// volatility, so market volatility leads news cohesiveness by one trading
// day and not the other way round.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "nci/core.hpp"
#include "nci/csv.hpp"

namespace {

namespace fs = std::filesystem;

struct Entity {
    std::string canonical, forms, path;
};

const std::vector<Entity> kEntities = {
    {"Goldman Sachs", "Goldman Sachs|Goldman", "company/bank/goldman_sachs"},
    {"Deutsche Bank", "Deutsche Bank", "company/bank/deutsche_bank"},
    {"BNP Paribas", "BNP Paribas|BNP", "company/bank/bnp_paribas"},
    {"Santander", "Santander", "company/bank/santander"},
    {"UniCredit", "UniCredit", "company/bank/unicredit"},
    {"Barclays", "Barclays", "company/bank/barclays"},
    {"JPMorgan", "JPMorgan|JP Morgan", "company/bank/jpmorgan"},
    {"Societe Generale", "Societe Generale|SocGen", "company/bank/societe_generale"},
    {"Moody's", "Moodys", "company/rating/moodys"},
    {"Standard & Poor's", "Standard and Poors|S&P", "company/rating/sp"},
    {"Fitch", "Fitch", "company/rating/fitch"},
    {"Siemens", "Siemens", "company/industry/siemens"},
    {"Volkswagen", "Volkswagen|VW", "company/industry/volkswagen"},
    {"Apple", "Apple", "company/tech/apple"},
    {"Germany", "Germany|German", "region/europe/germany"},
    {"Greece", "Greece|Greek", "region/europe/greece"},
    {"Italy", "Italy|Italian", "region/europe/italy"},
    {"Spain", "Spain|Spanish", "region/europe/spain"},
    {"Portugal", "Portugal|Portuguese", "region/europe/portugal"},
    {"Ireland", "Ireland|Irish", "region/europe/ireland"},
    {"France", "France|French", "region/europe/france"},
    {"Cyprus", "Cyprus", "region/europe/cyprus"},
    {"United States", "United States|US|American", "region/america/united_states"},
    {"China", "China|Chinese", "region/asia/china"},
    {"Japan", "Japan|Japanese", "region/asia/japan"},
    {"United Kingdom", "United Kingdom|UK|British", "region/europe/united_kingdom"},
    {"bond", "bond|bonds", "instrument/fixed_income/bond"},
    {"treasury bill", "treasury bill|T-bill", "instrument/fixed_income/treasury_bill"},
    {"credit default swap", "credit default swap|CDS", "instrument/derivative/cds"},
    {"futures", "futures", "instrument/derivative/futures"},
    {"options", "options", "instrument/derivative/options"},
    {"equity", "equity|equities|stocks", "instrument/equity/stock"},
    {"euro", "euro", "instrument/currency/euro"},
    {"dollar", "dollar", "instrument/currency/dollar"},
    {"yen", "yen", "instrument/currency/yen"},
    {"gold", "gold", "instrument/commodity/gold"},
    {"oil", "oil|crude", "instrument/commodity/oil"},
    {"yield", "yield|yields", "instrument/fixed_income/yield"},
    {"bailout", "bailout|rescue package", "eurocrisis/policy/bailout"},
    {"EFSF", "EFSF|European Financial Stability Facility", "eurocrisis/institution/efsf"},
    {"ESM", "ESM|European Stability Mechanism", "eurocrisis/institution/esm"},
    {"ECB", "ECB|European Central Bank", "eurocrisis/institution/ecb"},
    {"IMF", "IMF|International Monetary Fund", "eurocrisis/institution/imf"},
    {"troika", "troika", "eurocrisis/institution/troika"},
    {"austerity", "austerity", "eurocrisis/policy/austerity"},
    {"haircut", "haircut", "eurocrisis/policy/haircut"},
    {"sovereign debt", "sovereign debt", "eurocrisis/risk/sovereign_debt"},
    {"default", "default", "eurocrisis/risk/default"},
    {"contagion", "contagion", "eurocrisis/risk/contagion"},
    {"Grexit", "Grexit", "eurocrisis/risk/grexit"},
    {"LTRO", "LTRO|long-term refinancing operation", "eurocrisis/policy/ltro"},
    {"fiscal compact", "fiscal compact", "eurocrisis/policy/fiscal_compact"},
};

const std::vector<std::string> kFiller = {
    "markets", "said", "on", "today", "analysts", "report", "shares", "week", "after", "the",
    "investors", "worried", "about", "new", "plan", "officials", "late", "trading", "a", "of",
    "in", "and", "with", "over", "talks", "sources", "statement", "concerns", "outlook", "again"};

std::vector<std::string> forms_of(const Entity& e) { return nci::split_on(e.forms, '|'); }

std::string two(int v) {
    char b[8];
    std::snprintf(b, sizeof b, "%02d", v);
    return b;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"synthetic NCI study generator"};
    std::string out_dir = "data/synthetic", start_s = "2011-10-03";
    std::uint64_t seed = 20111003;
    int days = 400;
    double docs_per_day = 20;
    app.add_option("-o,--out", out_dir, "output directory");
    app.add_option("--seed", seed, "generator seed");
    app.add_option("--days", days, "calendar days");
    app.add_option("--docs-per-day", docs_per_day, "mean documents per day");
    app.add_option("--start", start_s, "first day (YYYY-MM-DD)");
    CLI11_PARSE(app, argc, argv);

    const auto start = nci::Date::parse(start_s);
    if (!start || days < 60) {
        std::cerr << "error: need a valid --start and --days >= 60\n";
        return 3;
    }
    fs::create_directories(out_dir);
    auto rng = nci::make_stream(seed);
    std::normal_distribution<double> z(0.0, 1.0);
    std::uniform_real_distribution<double> u(0.0, 1.0);

    // --- vocabulary
    {
        std::ofstream v(fs::path(out_dir) / "vocabulary.csv");
        nci::csv::write_row(v, {"id", "canonical", "surface_forms", "taxonomy_path"});
        for (std::size_t i = 0; i < kEntities.size(); ++i)
            nci::csv::write_row(v, {std::to_string(i), kEntities[i].canonical, kEntities[i].forms, kEntities[i].path});
    }
    {
        std::ofstream r(fs::path(out_dir) / "ruleset.txt");
        r << "# financial-news filter over taxonomy-category counts\n"
             "reject if entities < 2\n"
             "accept if eurocrisis >= 1 and instrument >= 1\n"
             "accept if roots >= 2\n"
             "default reject\n";
    }

    // --- market: log-volatility AR(1), trading days only
    struct Bar {
        nci::Date date;
        double open, high, low, close, volume, sigma, range_vol;
    };
    std::vector<Bar> bars;
    const double mu = std::log(0.012), phi = 0.95, eta = 0.18;
    double log_sigma = mu, close = 1200.0;
    std::vector<nci::Date> calendar;
    for (int i = 0; i < days; ++i) calendar.push_back(i == 0 ? *start : calendar.back().next());
    for (auto d : calendar) {
        if (!d.is_weekday()) continue;
        log_sigma = mu + phi * (log_sigma - mu) + eta * z(rng);
        const double sigma = std::exp(log_sigma);
        const double open = close * std::exp(0.2 * sigma * z(rng));
        const double next = open * std::exp(sigma * z(rng));
        const double up = std::abs(z(rng)) * sigma * 0.6, down = std::abs(z(rng)) * sigma * 0.6;
        const double high = std::max(open, next) * std::exp(up), low = std::min(open, next) * std::exp(-down);
        const double volume = std::round(3.0e9 * std::exp(0.5 * (log_sigma - mu) + 0.1 * z(rng)));
        const double range_vol = (high - low) / (0.5 * (next + close));
        bars.push_back({d, open, high, low, next, volume, sigma, range_vol});
        close = next;
    }
    {
        std::ofstream m(fs::path(out_dir) / "spx.csv");
        m << "date,open,high,low,close,volume\n";
        for (const auto& b : bars)
            m << b.date.str() << ',' << nci::format_double(std::round(b.open * 100) / 100) << ','
              << nci::format_double(std::ceil(b.high * 100) / 100) << ','
              << nci::format_double(std::floor(b.low * 100) / 100) << ','
              << nci::format_double(std::round(b.close * 100) / 100) << ',' << nci::format_double(b.volume) << '\n';
        std::ofstream x(fs::path(out_dir) / "vix.csv");
        x << "date,value\n";
        for (const auto& b : bars) {
            x << b.date.str() << ',';
            if (u(rng) > 0.02)
                x << nci::format_double(std::round(100 * std::sqrt(252.0) * b.sigma * std::exp(0.05 * z(rng)) * 100) / 100);
            x << '\n';
        }
    }

    // --- documents
    double mean_range = 0;
    for (const auto& b : bars) mean_range += b.range_vol;
    mean_range /= double(bars.size());

    std::vector<std::size_t> by_root[4];
    const char* roots[] = {"company", "region", "instrument", "eurocrisis"};
    for (std::size_t i = 0; i < kEntities.size(); ++i)
        for (int r = 0; r < 4; ++r)
            if (kEntities[i].path.rfind(std::string(roots[r]) + "/", 0) == 0) by_root[r].push_back(i);

    std::ofstream docs(fs::path(out_dir) / "documents.jsonl");
    std::size_t bar_idx = 0, doc_no = 0;
    std::vector<std::size_t> topic;
    std::poisson_distribution<int> count(docs_per_day);
    for (auto d : calendar) {
        while (bar_idx < bars.size() && bars[bar_idx].date < d) ++bar_idx;
        // previous trading day strictly before d
        const double prev = bar_idx == 0 ? mean_range : bars[bar_idx - 1].range_vol;
        const double lambda = std::clamp(0.35 + 0.45 * (prev / mean_range - 1.0), 0.02, 0.95);
        // the hot topic drifts: one entity replaced per day
        if (topic.empty()) {
            for (int r = 0; r < 4; ++r) topic.push_back(by_root[r][nci::uniform_below(rng, by_root[r].size())]);
            topic.push_back(by_root[3][nci::uniform_below(rng, by_root[3].size())]);
        } else {
            topic[nci::uniform_below(rng, topic.size())] = nci::uniform_below(rng, kEntities.size());
        }

        const int n_docs = count(rng);
        for (int k = 0; k < n_docs; ++k) {
            std::vector<std::size_t> ids;
            const bool general = u(rng) < 0.3;
            const int len = general ? 1 + int(nci::uniform_below(rng, 2)) : 3 + int(nci::uniform_below(rng, 5));
            while (int(ids.size()) < len) {
                std::size_t e;
                if (general) e = by_root[1][nci::uniform_below(rng, by_root[1].size())];
                else if (u(rng) < lambda) e = topic[nci::uniform_below(rng, topic.size())];
                else e = nci::uniform_below(rng, kEntities.size());
                if (std::find(ids.begin(), ids.end(), e) == ids.end()) ids.push_back(e);
                if (general && ids.size() == by_root[1].size()) break;
            }
            // timestamp, some rendered with a +02:00 offset
            const int secs = int(nci::uniform_below(rng, 86400));
            int hh = secs / 3600, mm = (secs / 60) % 60, ss = secs % 60;
            std::string ts;
            if (u(rng) < 0.1) {
                auto local = d;
                int lh = hh + 2;
                if (lh >= 24) lh -= 24, local = local.next();
                ts = local.str() + "T" + two(lh) + ":" + two(mm) + ":" + two(ss) + "+02:00";
            } else {
                ts = d.str() + "T" + two(hh) + ":" + two(mm) + ":" + two(ss) + "Z";
            }
            nlohmann::ordered_json j;
            j["doc_id"] = "syn-" + std::to_string(++doc_no);
            j["timestamp"] = ts;
            j["source"] = general ? "general-news.example" : "finance-wire.example";
            if (u(rng) < 0.25) {
                // free text with surface forms between filler words
                std::string text;
                for (auto e : ids) {
                    auto f = forms_of(kEntities[e]);
                    for (int w = 0; w < 2; ++w) text += kFiller[nci::uniform_below(rng, kFiller.size())] + " ";
                    text += f[nci::uniform_below(rng, f.size())] + " ";
                }
                text += kFiller[nci::uniform_below(rng, kFiller.size())] + ".";
                j["text"] = text;
            } else {
                std::sort(ids.begin(), ids.end());
                j["entity_ids"] = ids;
            }
            docs << j.dump() << '\n';
        }
    }

    // --- config
    nlohmann::ordered_json cfg;
    cfg["documents"] = "documents.jsonl";
    cfg["vocabulary"] = "vocabulary.csv";
    cfg["ruleset"] = "ruleset.txt";
    cfg["markets"] = nlohmann::json::array({{{"symbol", "SPX"}, {"path", "spx.csv"}}});
    cfg["series"] = nlohmann::json::array({{{"name", "VIX"}, {"path", "vix.csv"}}});
    cfg["start"] = calendar.front().str();
    cfg["end"] = calendar.back().str();
    cfg["output_dir"] = "out";
    cfg["seed"] = 42;
    cfg["cohesion"] = {{"tol", 1e-9}, {"k_step", 16}};
    cfg["null_model"] = {{"enabled", true}, {"n_samples", 50}, {"swaps_per_edge", 10}};
    cfg["top_n"] = 5;
    cfg["analysis"] = {{"align", "market-calendar"},
                       {"columns", {"SPX:daily_vol", "SPX:hist_vol", "nci", "nci_financial", "VIX"}},
                       {"n_perm", 999}};
    cfg["gc"] = {{"p_max", 8}, {"d_cap", 2}, {"criterion", "aic"}};
    std::ofstream(fs::path(out_dir) / "config.json") << cfg.dump(2) << '\n';

    std::cerr << "wrote " << doc_no << " documents over " << days << " days and " << bars.size()
              << " trading days to " << out_dir << '\n';
    return 0;
}
