// Runs the installed CLI binary as a subprocess.

#include <doctest.h>

#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {

const fs::path& workdir() {
    static const fs::path d = [] {
        auto p = fs::temp_directory_path() / "seqlsi_cli_test";
        fs::remove_all(p);
        fs::create_directories(p);
        return p;
    }();
    return d;
}

std::string at(const std::string& name) { return (workdir() / name).string(); }
std::string cfg(const std::string& name) { return std::string(SEQLSI_SOURCE_DIR) + "/configs/" + name; }

int run(const std::string& args, std::string* err = nullptr) {
    const std::string errfile = at("stderr.txt");
    const std::string cmd = std::string("\"") + SEQLSI_CLI + "\" " + args + " >/dev/null 2>\"" + errfile + "\"";
    const int rc = std::system(cmd.c_str());
    if (err) {
        std::ifstream in(errfile);
        std::stringstream ss;
        ss << in.rdbuf();
        *err = ss.str();
    }
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string slurp(const std::string& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::string> lines(const std::string& p) {
    std::vector<std::string> out;
    std::istringstream in(slurp(p));
    for (std::string l; std::getline(in, l);) out.push_back(l);
    return out;
}

std::size_t columns(const std::string& line) { return static_cast<std::size_t>(std::count(line.begin(), line.end(), ',')) + 1; }

}  // namespace

TEST_CASE("simulate") {
    REQUIRE(run("simulate " + cfg("scenario_lsi.cfg") + " -o " + at("a.csv")) == 0);
    REQUIRE(run("simulate " + cfg("scenario_lsi.cfg") + " -o " + at("b.csv")) == 0);
    const auto a = lines(at("a.csv"));
    CHECK(a.size() == 5001);
    CHECK(a[0] == "id,w1,y1_obs,w2,y2_obs");
    CHECK(slurp(at("a.csv")) == slurp(at("b.csv")));
    CHECK(fs::exists(at("a.csv.meta.json")));
    CHECK(slurp(at("a.csv.meta.json")).find("true_ates") != std::string::npos);

    REQUIRE(run("simulate " + cfg("scenario_lsi.cfg") + " --seed 5 --n 300 --with-truth -o " + at("t.csv")) == 0);
    const auto t = lines(at("t.csv"));
    CHECK(t.size() == 301);
    CHECK(columns(t[0]) == 10);
    CHECK(slurp(at("t.csv")) != slurp(at("a.csv")));

    // Same scenario with a two-value alpha on line 11.
    std::string text = slurp(cfg("scenario_lsi.cfg"));
    const auto pos = text.find("alpha = ");
    text.replace(pos, text.find('\n', pos) - pos, "alpha = 1 2");
    std::ofstream(at("bad.cfg")) << text;
    std::string err;
    CHECK(run("simulate " + at("bad.cfg") + " -o " + at("x.csv"), &err) == 2);
    CHECK(err.find("bad.cfg:11") != std::string::npos);
    CHECK(run("simulate /nonexistent.cfg -o " + at("x.csv")) == 2);
    CHECK(run("nosuchcommand") == 2);
}

TEST_CASE("fit, summarize and reports") {
    REQUIRE(run("simulate " + cfg("scenario_lsi.cfg") + " --n 400 -o " + at("d.csv")) == 0);
    const std::string common = " --burn 0 --kept 10 -q --config " + cfg("mcmc_default.cfg");
    for (const char* spec : {"lsi", "si1", "si2"})
        REQUIRE(run("fit " + at("d.csv") + " --spec " + spec + common + " -o " + at(std::string(spec) + ".csv")) == 0);
    CHECK(lines(at("lsi.csv")).size() == 11);
    REQUIRE(run("fit " + at("d.csv") + " --spec lsi" + common + " -o " + at("lsi_again.csv")) == 0);
    CHECK(slurp(at("lsi.csv")) == slurp(at("lsi_again.csv")));

    std::string err;
    CHECK(run("fit " + at("d.csv") + " --spec si3" + common + " -o " + at("z.csv"), &err) == 2);
    CHECK(err.find("si3") != std::string::npos);
    CHECK(run("fit " + at("d.csv") + " --kept 0 -o " + at("z.csv")) == 2);

    REQUIRE(run("fit " + at("d.csv") + " --spec lsi --chains 2 --burn 0 --kept 40 -q" + " -o " + at("multi.csv")) == 0);
    CHECK(fs::exists(at("multi_1.csv")));
    CHECK(fs::exists(at("multi_2.csv")));
    CHECK(slurp(at("multi_1.csv")) != slurp(at("multi_2.csv")));

    REQUIRE(run("summarize " + at("lsi.csv") + " " + at("si1.csv") + " " + at("si2.csv") + " --truth " + cfg("scenario_lsi.cfg") +
                " -o " + at("summary.csv")) == 0);
    const auto s = lines(at("summary.csv"));
    REQUIRE(s.size() == 11);
    CHECK(columns(s[0]) == 2 + 12);
    CHECK(s[0].rfind("estimand,true,", 0) == 0);
    CHECK(s[1].rfind("ATE_11.00,12.5430,", 0) == 0);

    REQUIRE(run("summarize " + at("multi_1.csv") + " " + at("multi_2.csv") + " --density " + at("dens_") + " --grid 32 -o " +
                at("m.csv")) == 0);
    CHECK(lines(at("dens_lsi_1_ATE_11.00.csv")).size() == 33);
    CHECK(fs::exists(at("dens_lsi_2_ATE_01.00.csv")));

    REQUIRE(run("diagnose " + at("multi_1.csv") + " " + at("multi_2.csv") + " -o " + at("diag.csv")) == 0);
    CHECK(lines(at("diag.csv")).size() == 1 + 31 + 6);

    REQUIRE(run("sensitivity " + at("lsi.csv") + " --level 0.9 --assign-out " + at("assign.csv") + " -o " + at("sens.csv")) == 0);
    CHECK(lines(at("sens.csv")).size() == 5);
    CHECK(lines(at("assign.csv")).size() == 9);
    CHECK(run("sensitivity " + at("si2.csv") + " -o " + at("sens2.csv")) == 2);

    REQUIRE(run("ipw " + at("d.csv") + " --bootstrap-reps 20 --seed 3 --truth " + cfg("scenario_lsi.cfg") + " -o " + at("ipw.csv")) == 0);
    CHECK(lines(at("ipw.csv")).size() == 7);

    REQUIRE(run("calibrate " + cfg("scenario_lsi.cfg") + " --offsets 5.007 6.293 12.543 -o " + at("cal.cfg")) == 0);
    REQUIRE(run("simulate " + at("cal.cfg") + " -o " + at("cal.csv")) == 0);
    CHECK(slurp(at("cal.csv")) == slurp(at("a.csv")));
}
