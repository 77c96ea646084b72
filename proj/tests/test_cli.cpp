#include "doctest.h"

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <unistd.h>

#include "json.hpp"

namespace fs = std::filesystem;
using Json = nlohmann::json;

namespace {

fs::path scratch() {
    static fs::path dir = [] {
        fs::path d = fs::temp_directory_path() / ("fracfourier_cli_" + std::to_string(::getpid()));
        fs::remove_all(d);
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

int run(const std::string& sub, const std::string& config, const std::string& out, const std::string& extra = "") {
    fs::path cfg = scratch() / (out + ".json");
    std::ofstream(cfg) << config;
    std::string cmd = std::string(FRACFOURIER_BIN) + " " + sub + " --config " + cfg.string() + " --out " +
                      (scratch() / out).string() + " " + extra + " > " + (scratch() / (out + ".log")).string() + " 2>&1";
    int st = std::system(cmd.c_str());
    return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

Json report(const std::string& out) { return Json::parse(slurp(scratch() / out / "report.json")); }

std::string without_timestamp(std::string s) {
    Json j = Json::parse(s);
    j.erase("timestamp");
    return j.dump();
}

}  // namespace

TEST_CASE("successful run writes a report whose series match the declared rows") {
    REQUIRE(run("pressure", R"({"experiment":"pressure","system":{"name":"halves"},"potential":{"name":"zero"}})",
                "ok") == 0);
    Json r = report("ok");
    CHECK(r["status"] == "ok");
    CHECK(std::abs(r["payload"]["pressure"].get<double>() - std::log(2.0)) < 1e-9);
    for (const auto& s : r["series"]) {
        CHECK(s["rows"] == s["declared"]);
        std::ifstream in(scratch() / "ok" / ("series_" + s["name"].get<std::string>() + ".csv"));
        std::string line;
        std::size_t lines = 0;
        while (std::getline(in, line)) ++lines;
        CHECK(lines == s["rows"].get<std::size_t>() + 1);
    }
    CHECK(fs::exists(scratch() / "ok" / "report.json"));
}

TEST_CASE("schema errors exit with 2") {
    CHECK(run("pressure", R"({"experiment":"pressure","system":{"name":"halves"},"bogus":1})", "unknown") == 2);
    CHECK(run("pressure", R"({"experiment":"pressure","system":{"name":"halves","extra":true}})", "unknown_nested") ==
          2);
    CHECK(run("pressure", R"({"experiment":"pressure",)", "malformed") == 2);
    CHECK(run("energy", R"({"experiment":"pressure","system":{"name":"halves"}})", "mismatch") == 2);
    CHECK(run("qnl", R"({"experiment":"qnl","system":{"name":"solenoid"}})", "noseed") == 2);
    CHECK(run("pressure", R"({"experiment":"pressure","system":{"name":"nowhere"}})", "badsys") == 2);
}

TEST_CASE("contract violations exit with 3") {
    // the discretized operator cannot reach a tolerance below rounding
    int code = run("pressure",
                   R"({"experiment":"pressure","system":{"name":"doubling","delta":0.05},
                       "potential":{"name":"geometric","s":-0.5},"params":{"operator_tolerance":1e-300}})",
                   "contract");
    CHECK(code == 3);
    Json r = report("contract");
    CHECK(r["status"] != "ok");
    bool failed = false;
    for (const auto& e : r["ledger"])
        if (e["kind"] == "contract" && e["status"] == "fail") failed = true;
    CHECK(failed);
}

TEST_CASE("seed from the command line satisfies stochastic experiments") {
    CHECK(run("zeta-collisions", R"({"experiment":"zeta-collisions","system":{"name":"doubling","delta":0.05}})", "seeded",
              "--seed 3") == 0);
    CHECK(report("seeded")["seed"] == 3);
}

TEST_CASE("reports are byte-identical apart from the timestamp, across thread counts") {
    const std::string cfg =
        R"({"experiment":"exp-sum","system":{"name":"doubling","delta":0.05},"seed":7,"params":{"n":6,"k":2}})";
    REQUIRE(run("exp-sum", cfg, "det1", "--threads 1") == 0);
    REQUIRE(run("exp-sum", cfg, "det2", "--threads 3") == 0);
    CHECK(without_timestamp(slurp(scratch() / "det1" / "report.json")) ==
          without_timestamp(slurp(scratch() / "det2" / "report.json")));
    for (const auto& e : fs::directory_iterator(scratch() / "det1")) {
        std::string name = e.path().filename().string();
        if (name == "report.json") continue;
        CHECK(slurp(e.path()) == slurp(scratch() / "det2" / name));
    }
}

TEST_CASE("plotdata regenerates plot files") {
    REQUIRE(run("conv-power", R"({"experiment":"conv-power","params":{"k":2}})", "plots") == 0);
    fs::path out = scratch() / "plots_again";
    std::string cmd = std::string(FRACFOURIER_BIN) + " plotdata --report " + (scratch() / "plots" / "report.json").string() +
                      " --out " + out.string() + " > /dev/null 2>&1";
    REQUIRE(std::system(cmd.c_str()) == 0);
    std::size_t n = 0;
    for (const auto& e : fs::directory_iterator(out)) {
        std::string name = e.path().filename().string();
        REQUIRE(name.rfind("plot_", 0) == 0);
        CHECK(slurp(e.path()) == slurp(scratch() / "plots" / name));
        ++n;
    }
    CHECK(n > 0);
}

TEST_CASE("CSV numbers use shortest round-trip formatting") {
    REQUIRE(run("energy", R"({"experiment":"energy","params":{"measure":"cantor-digits","depths":[4,5],"beta":[0.5]}})",
                "csv") == 0);
    std::ifstream in(scratch() / "csv" / "series_energy.csv");
    std::string header, line;
    std::getline(in, header);
    std::size_t cells = 0;
    while (std::getline(in, line)) {
        std::stringstream row(line);
        std::string cell;
        while (std::getline(row, cell, ',')) {
            double v = 0;
            auto [end, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
            if (ec != std::errc() || end != cell.data() + cell.size()) continue;
            char buf[64];
            auto res = std::to_chars(buf, buf + sizeof buf, v);
            CHECK(std::string(buf, res.ptr) == cell);
            ++cells;
        }
    }
    CHECK(cells > 0);
}
