#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "doctest.h"

#include "dpre/criteria.hpp"
#include "dpre/report.hpp"

namespace fs = std::filesystem;

namespace {

struct Run {
    int rc = -1;
    std::string out;
};

Run run(const std::string& args, const std::string& env = "") {
    const std::string cmd = env + " " DPRE_CLI_PATH " " + args + " 2>&1";
    Run r;
    FILE* p = popen(cmd.c_str(), "r");
    REQUIRE(p != nullptr);
    char buf[4096];
    std::size_t got;
    while ((got = fread(buf, 1, sizeof buf, p)) > 0) r.out.append(buf, got);
    const int status = pclose(p);
    r.rc = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

std::map<std::string, std::string> pairs(const std::string& text) {
    std::map<std::string, std::string> m;
    std::istringstream is(text);
    std::string line;
    while (std::getline(is, line)) {
        const auto eq = line.find('=');
        if (eq != std::string::npos) m[line.substr(0, eq)] = line.substr(eq + 1);
    }
    return m;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string str() const { return path.string(); }
};

}  // namespace

TEST_CASE("beta2 prints the library value") {
    TempDir t("dpre_cli_beta2");
    const Run r = run("beta2 --walk simple:3 --out " + t.str());
    REQUIRE(r.rc == 0);
    const auto kv = pairs(r.out);
    const dpre::Beta2Result lib = dpre::beta2(dpre::make_simple_walk(3), dpre::EnvLaw::gaussian());
    CHECK(kv.at("verdict") == "positive");
    CHECK(kv.at("beta2") == dpre::fmt_num(lib.beta2));
    CHECK(kv.at("series") == dpre::fmt_num(lib.series));
    CHECK(fs::exists(t.path / "beta2.tsv"));
    const std::string table = slurp(t.path / "beta2.tsv");
    CHECK(table.rfind("# command=beta2\n# config={", 0) == 0);
    CHECK(run("beta2 --walk simple:1 --out " + t.str()).out.find("verdict=recurrent") != std::string::npos);
}

TEST_CASE("vsd defaults") {
    TempDir t("dpre_cli_vsd");
    const Run r = run("vsd --n 16 --fields 200 --out " + t.str());
    CHECK((r.rc == 0 || r.rc == 3));
    const auto kv = pairs(r.out);
    CHECK(kv.at("theta") == "0.75");
    CHECK(kv.at("K") == "20");
}

TEST_CASE("simulate at beta = 0 has a flat log W column") {
    TempDir t("dpre_cli_sim");
    const Run r = run("simulate --beta 0 --n 12 --out " + t.str());
    REQUIRE(r.rc == 0);
    std::istringstream is(slurp(t.path / "simulate.tsv"));
    std::string line;
    int rows = 0;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#' || line.rfind("k\t", 0) == 0) continue;
        std::istringstream ls(line);
        std::string k, logw;
        std::getline(ls, k, '\t');
        std::getline(ls, logw, '\t');
        CHECK(logw == "0");
        ++rows;
    }
    CHECK(rows == 13);
}

TEST_CASE("tables do not depend on the worker count") {
    TempDir a("dpre_cli_w1"), b("dpre_cli_w3");
    for (const std::string args : {"hitting --replicas 300 --horizon 60", "free-energy --n-grid 8,16 --fields 40",
                                   "spine --n 12 --samples 200 --beta 0.5"}) {
        const Run r1 = run(args + " --workers 1 --out " + a.str());
        const Run r3 = run(args + " --workers 3 --out " + b.str());
        CAPTURE(args);
        REQUIRE(r1.rc == 0);
        REQUIRE(r3.rc == 0);
        const std::string name = args.substr(0, args.find(' ')) + ".tsv";
        CHECK(slurp(a.path / name) == slurp(b.path / name));
        CHECK_FALSE(slurp(a.path / name).empty());
    }
}

TEST_CASE("exit codes") {
    TempDir t("dpre_cli_rc");
    CHECK(run("simulate --n -3 --out " + t.str()).rc == 2);
    CHECK(run("simulate --n notanumber --out " + t.str()).rc == 2);
    CHECK(run("simulate --walk simple:0 --out " + t.str()).rc == 2);
    CHECK(run("simulate --env shifted-exponential --beta 1.5 --out " + t.str()).rc == 2);
    CHECK(run("nosuchcommand").rc == 2);
    CHECK(run("pstar --d 2 --eta 2 --nu 3 --out " + t.str()).rc == 2);
    CHECK(run("pstar --d 1 --out " + t.str()).rc == 3);
    CHECK(run("stopping --beta 0 --replicas 20 --horizon 20 --out " + t.str()).rc == 3);
    CHECK(run("beta2 --walk simple:3 --horizon 20 --out " + t.str()).rc == 3);
    const Run bad = run("simulate --n -3 --out " + t.str());
    CHECK(bad.out.find("dpre: error:") != std::string::npos);
}

TEST_CASE("config file with flag override") {
    TempDir t("dpre_cli_cfg");
    {
        std::ofstream cfg(t.path / "c.json");
        cfg << R"({"command": "simulate", "beta": 0, "n": 5})";
    }
    const Run r = run("simulate --config " + (t.path / "c.json").string() + " --n 7 --out " + t.str());
    REQUIRE(r.rc == 0);
    const std::string table = slurp(t.path / "simulate.tsv");
    CHECK(table.find("\"n\":7") != std::string::npos);
    CHECK(table.find("\"beta\":0") != std::string::npos);
    {
        std::ofstream cfg(t.path / "bad.json");
        cfg << R"({"bogus": 1})";
    }
    CHECK(run("simulate --config " + (t.path / "bad.json").string() + " --out " + t.str()).rc == 2);
    {
        std::ofstream cfg(t.path / "other.json");
        cfg << R"({"command": "beta2"})";
    }
    CHECK(run("simulate --config " + (t.path / "other.json").string() + " --out " + t.str()).rc == 2);
}

TEST_CASE("output directory from the environment and JSON summaries") {
    TempDir t("dpre_cli_env");
    const Run r = run("pstar --d 3 --json", "DPRE_OUT_DIR=" + t.str());
    REQUIRE(r.rc == 0);
    CHECK(fs::exists(t.path / "pstar.tsv"));
    CHECK(r.out.find("\"lower_exact\": \"5/3\"") != std::string::npos);
    CHECK(r.out.find("\"upper_exact\": \"5/3\"") != std::string::npos);
    const Run d4 = run("pstar --d 4 --out " + t.str());
    CHECK(pairs(d4.out).at("lower_exact") == "3/2");
    CHECK(pairs(d4.out).at("upper_exact") == "3/2");
}

TEST_CASE("inline walk and environment documents") {
    TempDir t("dpre_cli_inline");
    const Run r = run(R"(simulate --n 4 --beta 0.3 --walk '{"d":1,"entries":[[[1],0.5],[[-1],0.5]]}' --env '{"family":"rademacher"}' --out )" +
                      t.str());
    CHECK(r.rc == 0);
    const Run bad = run(R"(simulate --walk '{"d":1,"entries":[[[1],0.7]]}' --out )" + t.str());
    CHECK(bad.rc == 2);
}
