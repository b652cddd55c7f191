// topicdiff: discover topic diffusion in a timestamped corpus.
//
//   topicdiff run       fit every window, align topics, write reports
//   topicdiff top-terms print the strongest terms of one topic
//   topicdiff diffuse   print one term's divergence series
//
// Exit codes: 0 success, 2 configuration error, 1 runtime failure.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "topicdiff/topicdiff.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CliError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::vector<std::string> split_commas(const std::string& s) {
    std::vector<std::string> parts;
    std::stringstream stream(s);
    std::string part;
    while (std::getline(stream, part, ',')) {
        if (!part.empty()) parts.push_back(part);
    }
    return parts;
}

json load_json_file(const fs::path& path, const char* what) {
    std::ifstream in(path);
    if (!in) throw CliError(std::string("cannot open ") + what + ": " + path.string());
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded()) throw CliError(path.string() + ": malformed JSON");
    return j;
}

topicdiff::CorpusFormat detect_corpus_format(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw CliError("cannot open corpus: " + path.string());
    std::string line;
    while (std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json record = json::parse(line, nullptr, false);
        if (record.is_discarded() || !record.is_object())
            throw CliError(path.string() + ": first record is not a JSON object");
        if (record.contains("text")) return topicdiff::CorpusFormat::JsonlText;
        if (record.contains("counts")) return topicdiff::CorpusFormat::JsonlCounts;
        throw CliError(path.string() + ": records need a \"text\" or \"counts\" field");
    }
    // Empty corpora fail later with a clearer message about empty windows.
    return topicdiff::CorpusFormat::JsonlText;
}

size_t edit_distance(const std::string& a, const std::string& b) {
    std::vector<size_t> prev(b.size() + 1), cur(b.size() + 1);
    for (size_t j = 0; j <= b.size(); ++j) prev[j] = j;
    for (size_t i = 1; i <= a.size(); ++i) {
        cur[0] = i;
        for (size_t j = 1; j <= b.size(); ++j) {
            const size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
        }
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

std::vector<std::string> nearest_terms(const std::string& query,
                                       const std::vector<std::string>& terms, size_t max_count) {
    std::vector<std::pair<size_t, std::string>> scored;
    for (const auto& term : terms) {
        const size_t d = edit_distance(query, term);
        if (d <= 2) scored.emplace_back(d, term);
    }
    std::sort(scored.begin(), scored.end());
    std::vector<std::string> out;
    for (const auto& [d, term] : scored) {
        out.push_back(term);
        if (out.size() >= max_count) break;
    }
    return out;
}

// One CSV record; handles the quoting emit_reports produces.
std::vector<std::string> parse_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    bool quoted = false;
    for (size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                field += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                field += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(field));
            field.clear();
        } else {
            field += c;
        }
    }
    fields.push_back(std::move(field));
    return fields;
}

struct RunArgs {
    std::string config_path;
    std::string corpus;
    std::string dict;
    std::string out;
    int k = 0;
    double theta = -1.0;
    double alpha = -1.0;
    double epsilon = -1.0;
    std::uint64_t seed = 0;
    int max_iter = 0;
    double tol = -1.0;
    std::string windows;
    std::string weighting;
    int threads = -1;
    bool verbose = false;
};

int cmd_run(const RunArgs& args, const CLI::App& cmd) {
    topicdiff::RunConfig config;
    fs::path corpus_path, dict_path, out_path;
    int threads = 0;  // 0 = hardware concurrency

    if (!args.config_path.empty()) {
        const json j = load_json_file(args.config_path, "config");
        try {
            config = topicdiff::run_config_from_json(j);
        } catch (const std::exception& e) {
            throw CliError(args.config_path + ": " + e.what());
        }
        if (j.contains("corpus")) corpus_path = j.at("corpus").get<std::string>();
        if (j.contains("dict")) dict_path = j.at("dict").get<std::string>();
        if (j.contains("out")) out_path = j.at("out").get<std::string>();
        if (j.contains("threads")) threads = j.at("threads").get<int>();
        // Paths in the config file resolve relative to its directory.
        const fs::path base = fs::path(args.config_path).parent_path();
        const auto rebase = [&](fs::path& p) {
            if (!p.empty() && p.is_relative()) p = base / p;
        };
        rebase(corpus_path);
        rebase(dict_path);
        rebase(out_path);
    }

    // Flags override config-file values.
    if (cmd.count("--corpus")) corpus_path = args.corpus;
    if (cmd.count("--dict")) dict_path = args.dict;
    if (cmd.count("--out")) out_path = args.out;
    if (cmd.count("--k")) config.fit.k = args.k;
    if (cmd.count("--theta")) config.fit.theta = args.theta;
    if (cmd.count("--alpha")) config.alpha = args.alpha;
    if (cmd.count("--epsilon")) config.epsilon = args.epsilon;
    if (cmd.count("--seed")) config.fit.seed = args.seed;
    if (cmd.count("--max-iter")) config.fit.max_iter = args.max_iter;
    if (cmd.count("--tol")) config.fit.rel_tol = args.tol;
    if (cmd.count("--windows"))
        config.plan = topicdiff::WindowPlan::from_dates(split_commas(args.windows));
    if (cmd.count("--weighting"))
        config.weighting = topicdiff::weighting_from_string(args.weighting);
    if (cmd.count("--threads")) threads = args.threads;

    if (corpus_path.empty()) throw CliError("--corpus is required (or \"corpus\" in --config)");
    if (dict_path.empty()) throw CliError("--dict is required (or \"dict\" in --config)");
    if (out_path.empty()) throw CliError("--out is required (or \"out\" in --config)");
    if (config.plan.boundaries.size() < 2)
        throw CliError("--windows needs at least 2 cutoff dates");
    if (!fs::exists(corpus_path)) throw CliError("corpus file not found: " + corpus_path.string());
    if (!fs::exists(dict_path))
        throw CliError("dictionary file not found: " + dict_path.string());
    if (threads < 0) throw CliError("--threads must be >= 0");
    try {
        config.validate();
    } catch (const std::exception& e) {
        throw CliError(e.what());
    }

    const auto log = [&](const std::string& msg) {
        if (args.verbose) std::cerr << "[topicdiff] " << msg << "\n";
    };

    topicdiff::Dictionary dict;
    std::vector<topicdiff::Document> docs;
    try {
        dict = topicdiff::load_dictionary(dict_path);
        log("dictionary: " + std::to_string(dict.size()) + " terms");
        const auto format = detect_corpus_format(corpus_path);
        docs = topicdiff::load_corpus(corpus_path, format);
        log("corpus: " + std::to_string(docs.size()) + " documents");
    } catch (const CliError&) {
        throw;
    } catch (const std::exception& e) {
        std::cerr << "error: load: " << e.what() << "\n";
        return 1;
    }

    try {
        const topicdiff::RunResult result =
            topicdiff::run(docs, dict, config, static_cast<unsigned>(threads));
        log("fits complete, emitting reports");
        json invocation{{"corpus", corpus_path.string()},
                        {"dict", dict_path.string()},
                        {"out", out_path.string()},
                        {"threads", threads}};
        topicdiff::emit_reports(result, dict, config, out_path, invocation);
        int divergent = 0;
        for (const auto& cls : result.classifications)
            if (cls.convergence == topicdiff::Convergence::Divergent) ++divergent;
        std::cout << "windows: " << result.windows.size() << "\n"
                  << "terms with series: " << result.series.size() << " (" << divergent
                  << " divergent)\n"
                  << "excluded terms: " << result.excluded.size() << "\n"
                  << "reports: " << out_path.string() << "\n";
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

struct TopTermsArgs {
    std::string model_path;
    std::string window;
    int topic = 0;
    int count = 10;
    std::string format = "text";
};

int cmd_top_terms(const TopTermsArgs& args) {
    if (!fs::exists(args.model_path))
        throw CliError("model file not found: " + args.model_path);
    const json j = load_json_file(args.model_path, "model");

    std::vector<std::string> dictionary;
    try {
        dictionary = j.at("dictionary").get<std::vector<std::string>>();
    } catch (const std::exception&) {
        throw CliError(args.model_path + ": missing dictionary payload");
    }
    const auto& windows = j.at("windows");
    if (windows.empty()) throw CliError(args.model_path + ": no window models");

    const json* selected = nullptr;
    if (args.window.empty()) {
        selected = &windows.back();
    } else {
        for (const auto& w : windows)
            if (w.at("label").get<std::string>() == args.window) selected = &w;
        if (!selected) throw CliError("unknown window label '" + args.window + "'");
    }

    topicdiff::NormalizedModel model;
    try {
        model = topicdiff::model_from_json(*selected);
    } catch (const std::exception& e) {
        throw CliError(args.model_path + ": " + e.what());
    }
    if (args.topic < 0 || args.topic >= model.H_hat.rows())
        throw CliError("topic index out of range (model has " +
                       std::to_string(model.H_hat.rows()) + " topics)");
    if (args.count < 1) throw CliError("-n must be >= 1");
    if (args.format != "text" && args.format != "csv")
        throw CliError("--format must be text or csv");

    const std::string label = selected->at("label").get<std::string>();
    const auto ranked = topicdiff::top_terms(model, args.topic, args.count);
    if (args.format == "csv") {
        std::cout << "window_label,topic_index,rank,term,weight\n";
        for (std::size_t rank = 0; rank < ranked.size(); ++rank)
            std::cout << topicdiff::csv_field(label) << ',' << args.topic << ',' << rank + 1 << ','
                      << topicdiff::csv_field(dictionary.at(ranked[rank].term)) << ','
                      << topicdiff::format_double(ranked[rank].weight) << "\n";
    } else {
        std::cout << "window " << label << ", topic " << args.topic << "\n";
        for (std::size_t rank = 0; rank < ranked.size(); ++rank) {
            char buf[32];
            std::snprintf(buf, sizeof buf, "%8.6f", ranked[rank].weight);
            std::cout << rank + 1 << ". " << dictionary.at(ranked[rank].term) << "  (" << buf
                      << ")\n";
        }
    }
    return 0;
}

struct DiffuseArgs {
    std::string run_dir;
    std::string term;
};

int cmd_diffuse(const DiffuseArgs& args) {
    const fs::path run_dir = args.run_dir;
    const fs::path diffusion_path = run_dir / "diffusion.csv";
    const fs::path manifest_path = run_dir / "run_manifest.json";
    const fs::path models_path = run_dir / "models.json";
    for (const auto& p : {diffusion_path, manifest_path, models_path})
        if (!fs::exists(p))
            throw CliError("not a completed run directory (missing " + p.filename().string() + ")");

    const json models = load_json_file(models_path, "models");
    const auto dictionary = models.at("dictionary").get<std::vector<std::string>>();
    if (std::find(dictionary.begin(), dictionary.end(), args.term) == dictionary.end()) {
        std::string msg = "unknown term '" + args.term + "'";
        const auto suggestions = nearest_terms(args.term, dictionary, 3);
        if (!suggestions.empty()) {
            msg += "; did you mean";
            for (const auto& s : suggestions) msg += " '" + s + "'";
            msg += "?";
        }
        throw CliError(msg);
    }

    const json manifest = load_json_file(manifest_path, "manifest");
    for (const auto& ex : manifest.at("excluded_terms")) {
        if (ex.at("term").get<std::string>() == args.term) {
            std::cout << "term '" << args.term << "' was excluded from diffusion: "
                      << ex.at("reason").get<std::string>() << "\n";
            return 0;
        }
    }

    std::ifstream in(diffusion_path);
    if (!in) throw CliError("cannot open " + diffusion_path.string());
    std::string line;
    std::getline(in, line);  // header
    bool found = false;
    std::cout << "term '" << args.term << "'\n";
    std::cout << "prefix  gjs        threshold  verdict\n";
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto fields = parse_csv_line(line);
        if (fields.size() < 7 || fields[0] != args.term) continue;
        found = true;
        char buf[64];
        std::snprintf(buf, sizeof buf, "%-7s %-10.6f %-10.6f %s", fields[1].c_str(),
                      std::stod(fields[2]), std::stod(fields[3]),
                      fields[4] == "true" ? "divergent" : "convergent");
        std::cout << buf << "\n";
    }
    if (!found) {
        // In the dictionary, not excluded, yet absent from the series:
        // the run predates the dictionary or the directory was edited.
        std::cout << "no diffusion records for term '" << args.term << "'\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"topic diffusion discovery over timestamped corpora"};
    app.require_subcommand(1);

    RunArgs run_args;
    CLI::App* run = app.add_subcommand("run", "fit all windows and write reports");
    run->add_option("--config", run_args.config_path, "JSON config file");
    run->add_option("--corpus", run_args.corpus, "corpus JSONL path");
    run->add_option("--dict", run_args.dict, "dictionary path, one term per line");
    run->add_option("--out", run_args.out, "output directory for reports");
    run->add_option("--k", run_args.k, "factorization rank");
    run->add_option("--theta", run_args.theta, "smoothing parameter in [0,1]");
    run->add_option("--alpha", run_args.alpha, "significance level");
    run->add_option("--epsilon", run_args.epsilon, "association threshold");
    run->add_option("--seed", run_args.seed, "initialization seed");
    run->add_option("--max-iter", run_args.max_iter, "maximum update sweeps");
    run->add_option("--tol", run_args.tol, "relative objective-change stop");
    run->add_option("--windows", run_args.windows, "comma-separated cutoff dates (YYYY-MM-DD)");
    run->add_option("--weighting", run_args.weighting, "raw or tfidf");
    run->add_option("--threads", run_args.threads, "max concurrent window fits (0 = all cores)");
    run->add_flag("-v,--verbose", run_args.verbose, "log stages to stderr");

    TopTermsArgs top_args;
    CLI::App* top = app.add_subcommand("top-terms", "print the strongest terms of a topic");
    top->add_option("--model", top_args.model_path, "models.json written by run")->required();
    top->add_option("--window", top_args.window, "window label (default: last window)");
    top->add_option("--topic", top_args.topic, "topic index, 0-based")->required();
    top->add_option("-n", top_args.count, "number of terms");
    top->add_option("--format", top_args.format, "text or csv");

    DiffuseArgs diffuse_args;
    CLI::App* diffuse = app.add_subcommand("diffuse", "print one term's divergence series");
    diffuse->add_option("--run", diffuse_args.run_dir, "completed run directory")->required();
    diffuse->add_option("--term", diffuse_args.term, "dictionary term")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (run->parsed()) return cmd_run(run_args, *run);
        if (top->parsed()) return cmd_top_terms(top_args);
        if (diffuse->parsed()) return cmd_diffuse(diffuse_args);
    } catch (const CliError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
