#include <catch2/catch_amalgamated.hpp>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace {

const std::string kCli = EVLAT_CLI_PATH;

int run(const std::string& args) {
    const int rc = std::system((kCli + " " + args + " > /dev/null 2>&1").c_str());
    return WEXITSTATUS(rc);
}

std::string slurp(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::filesystem::path temp_dir(const char* name) {
    const auto dir = std::filesystem::temp_directory_path() / name;
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace

TEST_CASE("cli exit codes") {
    CHECK(run("") == 1);                      // missing subcommand
    CHECK(run("--help") == 0);
    CHECK(run("run-e2e --help") == 0);
    CHECK(run("bogus-subcommand") == 1);
    const auto dir = temp_dir("evlat_cli_codes");
    CHECK(run("run-e2e --duration 2 --out-dir " + (dir / "x").string()) == 1);
    CHECK(run("run-e2e --duration 4 --servo-gain 50 --out-dir " + (dir / "x").string()) == 1);
    CHECK(run("replay --in " + (dir / "missing.evt").string() + " --duration 4 --out-dir " +
              (dir / "x").string()) == 2);
    std::filesystem::remove_all(dir);
}

TEST_CASE("cli config file matches explicit flags") {
    const auto dir = temp_dir("evlat_cli_cfg");
    const auto ini = dir / "scenario.ini";
    {
        std::ofstream out(ini);
        out << "duration = 4\n"
               "seed = 33\n"
               "servo-gain = 1200\n"
               "roi-window-us = 5000\n"
               "delay-processing-ms = 7\n";
    }
    REQUIRE(run("run-e2e --config " + ini.string() + " --out-dir " + (dir / "a").string()) == 0);
    REQUIRE(run("run-e2e --duration 4 --seed 33 --servo-gain 1200 --roi-window-us 5000 "
                "--delay-processing-ms 7 --out-dir " +
                (dir / "b").string()) == 0);
    CHECK(slurp(dir / "a" / "report.csv") == slurp(dir / "b" / "report.csv"));
    CHECK(slurp(dir / "a" / "roi_centers.csv") == slurp(dir / "b" / "roi_centers.csv"));

    // Unknown keys are rejected, not silently ignored.
    {
        std::ofstream out(ini, std::ios::app);
        out << "not-a-real-key = 5\n";
    }
    CHECK(run("run-e2e --config " + ini.string() + " --out-dir " + (dir / "c").string()) == 1);
    std::filesystem::remove_all(dir);
}

TEST_CASE("cli capture and replay round trip") {
    const auto dir = temp_dir("evlat_cli_replay");
    const std::string common = " --duration 4 --seed 44 ";
    REQUIRE(run("gen-events" + common + "--out " + (dir / "cap.evt").string()) == 0);
    REQUIRE(run("run-e2e" + common + "--out-dir " + (dir / "live").string()) == 0);
    REQUIRE(run("replay" + common + "--in " + (dir / "cap.evt").string() + " --out-dir " +
                (dir / "replayed").string()) == 0);
    CHECK(slurp(dir / "live" / "roi_centers.csv") == slurp(dir / "replayed" / "roi_centers.csv"));

    // A truncated capture fails with a runtime error.
    const auto broken = dir / "broken.evt";
    std::filesystem::copy_file(dir / "cap.evt", broken);
    std::filesystem::resize_file(broken, 100);
    CHECK(run("replay" + common + "--in " + broken.string() + " --out-dir " +
              (dir / "x").string()) == 2);
    std::filesystem::remove_all(dir);
}

TEST_CASE("cli measure-latency") {
    const auto dir = temp_dir("evlat_cli_measure");
    REQUIRE(run("run-e2e --duration 4 --seed 2 --out-dir " + dir.string()) == 0);
    const std::string master = (dir / "gyro_master.csv").string();
    CHECK(run("measure-latency " + master + " " + master) == 0);
    CHECK(run("measure-latency " + master + " " + (dir / "gyro_slave.csv").string()) == 0);
    CHECK(run("measure-latency " + master) == 1);  // missing required argument
    std::filesystem::remove_all(dir);
}
