#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"

namespace fs = std::filesystem;

namespace {

fs::path workdir() {
    static const fs::path dir = [] {
        fs::path d = fs::temp_directory_path() / "pbcs_cli_test";
        fs::remove_all(d);
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

// runs the CLI with stdout captured to a file; returns the exit status
int pbcs(const std::string& args, std::string* out = nullptr) {
    const fs::path log = workdir() / "stdout.txt";
    const std::string cmd =
        std::string("\"") + PBCS_CLI_PATH + "\" " + args + " > \"" + log.string() + "\" 2> \"" +
        (workdir() / "stderr.txt").string() + "\"";
    const int status = std::system(cmd.c_str());
    if (out) {
        std::ifstream in(log);
        std::stringstream ss;
        ss << in.rdbuf();
        *out = ss.str();
    }
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("run solves the 2x2 maze and writes artifacts") {
    const fs::path d = workdir() / "run";
    std::string out;
    CHECK(pbcs("run --size 2 --seed 0 --mode pbcs --out " + d.string(), &out) == 0);
    CHECK(out.find("success=1") != std::string::npos);
    CHECK(out.find("steps_total=") != std::string::npos);
    for (const char* f : {"maze.txt", "trajectory.txt", "chain.txt", "report.txt", "render.svg", "manifest.txt"}) {
        CHECK_MESSAGE(fs::exists(d / f), f);
    }
    CHECK(slurp(d / "report.txt") == out);

    CHECK(pbcs("evaluate --out " + d.string(), &out) == 0);
    CHECK(out.find("eval_successes=50\neval_episodes=50\n") != std::string::npos);

    fs::remove(d / "render.svg");
    CHECK(pbcs("render --out " + d.string(), &out) == 0);
    CHECK(fs::exists(d / "render.svg"));
    CHECK(slurp(d / "render.svg").find("class=\"activation\"") != std::string::npos);
}

TEST_CASE("explore then robustify") {
    const fs::path d = workdir() / "split";
    CHECK(pbcs("explore --size 2 --seed 1 --out " + d.string()) == 0);
    CHECK(fs::exists(d / "trajectory.txt"));
    CHECK_FALSE(fs::exists(d / "chain.txt"));
    std::string out;
    CHECK(pbcs("robustify --seed 1 --out " + d.string(), &out) == 0);
    CHECK(out.find("outcome=chain-built") != std::string::npos);
    CHECK(fs::exists(d / "chain.txt"));
    CHECK(pbcs("evaluate --out " + d.string()) == 0);
}

TEST_CASE("render without artifacts draws the generated maze") {
    const fs::path d = workdir() / "render_only";
    std::string out;
    CHECK(pbcs("render --size 4 --seed 3 --out " + d.string(), &out) == 0);
    const std::string svg = slurp(d / "render.svg");
    CHECK(svg.find("viewBox=\"0 0 4 4\"") != std::string::npos);
    CHECK(svg.find("<polyline") == std::string::npos);
}

TEST_CASE("usage errors exit with status 2") {
    CHECK(pbcs("run --mode bogus") == 2);
    CHECK(pbcs("run --no-such-flag") == 2);
    CHECK(pbcs("") == 2);
    CHECK(pbcs("run --size 0") == 2);
    CHECK(pbcs("run --config /nonexistent/file.cfg") == 2);
    CHECK(pbcs("robustify --out " + (workdir() / "empty").string()) != 0);
}

TEST_CASE("config files are applied before explicit flags") {
    const fs::path cfg = workdir() / "run.cfg";
    std::ofstream(cfg) << "# small vanilla run\nmode = vanilla-td3\nsize = 3\nvanilla_budget = 2000\n"
                          "vanilla_eval_interval = 1000\neval_episodes = 2\n";
    const fs::path d = workdir() / "cfg";
    std::string out;
    const int code = pbcs("run --config " + cfg.string() + " --size 2 --out " + d.string(), &out);
    CHECK((code == 0 || code == 1));
    CHECK(out.find("mode=vanilla-td3\nsize=2\n") != std::string::npos);
    CHECK(out.find("steps_train=2000") != std::string::npos);

    std::ofstream(cfg) << "size = 3\nfrobnicate = 1\n";
    CHECK(pbcs("run --config " + cfg.string()) == 2);
    CHECK(slurp(workdir() / "stderr.txt").find(":2") != std::string::npos);
}
