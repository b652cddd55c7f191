#include <catch2/catch.hpp>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "support/planted.hpp"
#include "topicdiff/corpus.hpp"

namespace fs = std::filesystem;

namespace {

struct CliResult {
    int exit_code = -1;
    std::string out;
    std::string err;
};

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

CliResult run_cli(const std::string& args) {
    static int counter = 0;
    const fs::path out_file =
        fs::temp_directory_path() / ("topicdiff_cli_out_" + std::to_string(counter));
    const fs::path err_file =
        fs::temp_directory_path() / ("topicdiff_cli_err_" + std::to_string(counter));
    ++counter;
    const std::string cmd = std::string(TOPICDIFF_CLI_PATH) + " " + args + " > " +
                            out_file.string() + " 2> " + err_file.string();
    const int status = std::system(cmd.c_str());
    CliResult result;
    result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    result.out = slurp(out_file);
    result.err = slurp(err_file);
    return result;
}

// Small planted corpus on disk, shared by the CLI cases.
struct CliFixture {
    fs::path dir;
    fs::path corpus_path;
    fs::path dict_path;
    std::string windows;
    planted::PlantedCorpus corpus;

    CliFixture() {
        corpus = planted::make_corpus(321, 3, 8, 45, 3);
        dir = fs::temp_directory_path() / "topicdiff_cli_fixture";
        fs::create_directories(dir);
        corpus_path = dir / "corpus.jsonl";
        dict_path = dir / "dictionary.txt";
        planted::write_corpus_jsonl(corpus_path, corpus.docs);
        planted::write_dictionary(dict_path, corpus.dict);
        windows = "2010-12-31,2011-12-31,2012-12-31";
    }

    std::string run_flags(const fs::path& out) const {
        return "run --corpus " + corpus_path.string() + " --dict " + dict_path.string() +
               " --out " + out.string() + " --windows " + windows +
               " --k 3 --theta 0.4 --seed 7 --max-iter 200";
    }
};

const CliFixture& fixture() {
    static CliFixture f;
    return f;
}

}  // namespace

TEST_CASE("cli run validates configuration") {
    SECTION("missing dictionary path names the flag") {
        const auto r = run_cli("run --corpus /tmp/nope.jsonl --out /tmp/out --windows 2011-01-01,2012-01-01");
        CHECK(r.exit_code == 2);
        CHECK(r.err.find("--dict") != std::string::npos);
    }

    SECTION("nonexistent corpus file") {
        const auto& f = fixture();
        const auto r = run_cli("run --corpus /tmp/definitely_missing.jsonl --dict " +
                               f.dict_path.string() +
                               " --out /tmp/out --windows 2011-01-01,2012-01-01");
        CHECK(r.exit_code == 2);
        CHECK(r.err.find("corpus") != std::string::npos);
    }

    SECTION("too few windows") {
        const auto& f = fixture();
        const auto r = run_cli("run --corpus " + f.corpus_path.string() + " --dict " +
                               f.dict_path.string() + " --out /tmp/out --windows 2011-01-01");
        CHECK(r.exit_code == 2);
        CHECK(r.err.find("--windows") != std::string::npos);
    }

    SECTION("unknown subcommand fails parse") {
        const auto r = run_cli("frobnicate");
        CHECK(r.exit_code == 2);
    }
}

TEST_CASE("cli run exits 1 on runtime failures, naming the stage") {
    // A boundary before every document produces an empty first window.
    const auto& f = fixture();
    const auto r = run_cli("run --corpus " + f.corpus_path.string() + " --dict " +
                           f.dict_path.string() +
                           " --out /tmp/topicdiff_cli_fail --windows 2009-12-31,2012-12-31 --k 3");
    CHECK(r.exit_code == 1);
    CHECK(r.err.find("2009-12-31") != std::string::npos);
}

TEST_CASE("cli run on the shipped smoke corpus") {
    const fs::path config = fs::path(TOPICDIFF_DATA_DIR) / "smoke" / "config.json";
    const fs::path out = fs::temp_directory_path() / "topicdiff_smoke_out";
    fs::remove_all(out);
    const auto r = run_cli("run --config " + config.string() + " --out " + out.string());
    INFO(r.err);
    REQUIRE(r.exit_code == 0);
    for (const char* name : {"diffusion.csv", "posteriors.csv", "top_terms.csv",
                             "alignment.json", "run_manifest.json", "models.json"})
        CHECK(fs::exists(out / name));

    const auto diffuse = run_cli("diffuse --run " + out.string() + " --term kernel");
    CHECK(diffuse.exit_code == 0);
    const auto top = run_cli("top-terms --model " + (out / "models.json").string() +
                             " --topic 0 -n 5");
    CHECK(top.exit_code == 0);
}

TEST_CASE("cli run produces the report files") {
    const auto& f = fixture();
    const fs::path out = fs::temp_directory_path() / "topicdiff_cli_run1";
    fs::remove_all(out);
    const auto r = run_cli(f.run_flags(out));
    INFO(r.err);
    REQUIRE(r.exit_code == 0);
    for (const char* name : {"diffusion.csv", "posteriors.csv", "top_terms.csv",
                             "alignment.json", "run_manifest.json", "models.json"})
        CHECK(fs::exists(out / name));
    CHECK(r.out.find("windows: 3") != std::string::npos);
}

TEST_CASE("cli run is reproducible byte for byte") {
    // The manifest echoes the invocation, so "identical" means the same
    // command twice: rerun into the same --out and compare to a snapshot.
    const auto& f = fixture();
    const fs::path out = fs::temp_directory_path() / "topicdiff_cli_rep";
    const fs::path snapshot = fs::temp_directory_path() / "topicdiff_cli_rep_snapshot";
    fs::remove_all(out);
    fs::remove_all(snapshot);
    REQUIRE(run_cli(f.run_flags(out)).exit_code == 0);
    fs::copy(out, snapshot, fs::copy_options::recursive);
    REQUIRE(run_cli(f.run_flags(out)).exit_code == 0);
    int files = 0;
    for (const auto& entry : fs::directory_iterator(snapshot)) {
        const auto name = entry.path().filename();
        INFO(name.string());
        CHECK(slurp(entry.path()) == slurp(out / name));
        ++files;
    }
    CHECK(files == 6);
}

TEST_CASE("cli run reads a config file with flag overrides") {
    const auto& f = fixture();
    const fs::path dir = fs::temp_directory_path() / "topicdiff_cli_cfg";
    fs::create_directories(dir);
    const fs::path config_path = dir / "config.json";
    {
        std::ofstream cfg(config_path);
        cfg << R"({
  "corpus": ")" << f.corpus_path.string() << R"(",
  "dict": ")" << f.dict_path.string() << R"(",
  "k": 3,
  "theta": 0.4,
  "seed": 7,
  "max_iter": 150,
  "windows": ["2010-12-31", "2011-12-31", "2012-12-31"]
})";
    }
    const fs::path out = dir / "reports";
    fs::remove_all(out);
    // --out comes from a flag, --seed overrides the file.
    const auto r = run_cli("run --config " + config_path.string() + " --out " + out.string() +
                           " --seed 8");
    INFO(r.err);
    REQUIRE(r.exit_code == 0);
    const auto manifest = nlohmann::json::parse(slurp(out / "run_manifest.json"));
    CHECK(manifest.at("config").at("seed").get<std::uint64_t>() == 8);
    CHECK(manifest.at("config").at("max_iter").get<int>() == 150);
}

TEST_CASE("cli top-terms") {
    const auto& f = fixture();
    const fs::path out = fs::temp_directory_path() / "topicdiff_cli_top";
    fs::remove_all(out);
    REQUIRE(run_cli(f.run_flags(out)).exit_code == 0);
    const std::string models = (out / "models.json").string();

    SECTION("prints the requested number of rows") {
        const auto r = run_cli("top-terms --model " + models + " --topic 0 -n 5");
        REQUIRE(r.exit_code == 0);
        int rows = 0;
        std::stringstream stream(r.out);
        std::string line;
        while (std::getline(stream, line))
            if (!line.empty() && std::isdigit(static_cast<unsigned char>(line[0]))) ++rows;
        CHECK(rows == 5);
    }

    SECTION("csv format matches the report schema") {
        const auto r = run_cli("top-terms --model " + models + " --topic 1 -n 3 --format csv");
        REQUIRE(r.exit_code == 0);
        std::stringstream stream(r.out);
        std::string header;
        std::getline(stream, header);
        CHECK(header == "window_label,topic_index,rank,term,weight");
        std::string line;
        int rows = 0;
        while (std::getline(stream, line))
            if (!line.empty()) ++rows;
        CHECK(rows == 3);
    }

    SECTION("invalid topic index exits 2") {
        const auto r = run_cli("top-terms --model " + models + " --topic 99");
        CHECK(r.exit_code == 2);
    }

    SECTION("missing model file exits 2") {
        const auto r = run_cli("top-terms --model /tmp/no_models.json --topic 0");
        CHECK(r.exit_code == 2);
    }
}

TEST_CASE("cli diffuse") {
    const auto& f = fixture();
    const fs::path out = fs::temp_directory_path() / "topicdiff_cli_diffuse";
    fs::remove_all(out);
    REQUIRE(run_cli(f.run_flags(out)).exit_code == 0);

    SECTION("prints per-prefix verdicts for a known term") {
        const auto r = run_cli("diffuse --run " + out.string() + " --term t0term0");
        REQUIRE(r.exit_code == 0);
        CHECK(r.out.find("threshold") != std::string::npos);
        CHECK(r.out.find("convergent") != std::string::npos);
    }

    SECTION("unknown term suggests a neighbor and exits 2") {
        const auto r = run_cli("diffuse --run " + out.string() + " --term driftterms");
        CHECK(r.exit_code == 2);
        CHECK(r.err.find("driftterm") != std::string::npos);
    }

    SECTION("unrelated string gets no suggestion but still exits 2") {
        const auto r = run_cli("diffuse --run " + out.string() + " --term zzzzqqqq");
        CHECK(r.exit_code == 2);
    }

    SECTION("not a run directory exits 2") {
        const auto r = run_cli("diffuse --run /tmp --term t0term0");
        CHECK(r.exit_code == 2);
    }
}

TEST_CASE("cli diffuse reports excluded terms and exits 0") {
    const auto& f = fixture();
    // Extend the dictionary with a term the corpus never uses.
    const fs::path dir = fs::temp_directory_path() / "topicdiff_cli_excl";
    fs::create_directories(dir);
    const fs::path dict_path = dir / "dictionary.txt";
    {
        std::ofstream out(dict_path, std::ios::binary);
        for (const auto& term : f.corpus.dict.terms()) out << term << "\n";
        out << "ghostterm\n";
    }
    const fs::path out = dir / "reports";
    fs::remove_all(out);
    const auto run_result =
        run_cli("run --corpus " + f.corpus_path.string() + " --dict " + dict_path.string() +
                " --out " + out.string() + " --windows " + f.windows +
                " --k 3 --seed 7 --max-iter 150");
    REQUIRE(run_result.exit_code == 0);

    const auto r = run_cli("diffuse --run " + out.string() + " --term ghostterm");
    CHECK(r.exit_code == 0);
    CHECK(r.out.find("insufficient support") != std::string::npos);
}
