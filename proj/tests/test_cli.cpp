#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "unitlint/cli.hpp"

using namespace unitlint;
namespace fs = std::filesystem;

namespace {

int g_counter = 0;

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("unitlint_cli_test_" + std::to_string(g_counter++));
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
    std::string file(const std::string& name, const std::string& content) const {
        fs::path p = path / name;
        std::ofstream out(p, std::ios::binary);
        out << content;
        return p.string();
    }
    std::string at(const std::string& name) const { return (path / name).string(); }
};

struct CliRun {
    int code;
    std::string out;
    std::string err;
};

CliRun run_cli(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    int code = cli_main(args, out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

const char* kAltProgram = R"(
struct gps_t { float alt; };
float _alt;
void on_gps(gps_t msg) {
  _alt = msg.alt;
}
)";

std::string tracking_scenario() {
    std::string s = "duration_s = 10\n[qoi.alt]\nexpr = \"linear(1.0, 0.0)\"\n";
    for (int i = 0; i < 10; ++i) {
        s += "[[event]]\nt_ms = " + std::to_string(i * 1000) + "\ncall = \"on_gps\"\n";
        s += "args.msg.alt = " + std::to_string(i) + ".0\n";
    }
    return s;
}

const char* kOdomProto = R"(<mavlink><messages>
<msg id="1" name="ODOM_POS"><field name="z" units="cm"/></msg>
<msg id="2" name="ODOM_VEL"><field name="z" units="m/s"/><field name="t_s" units="s"/></msg>
</messages></mavlink>)";

const char* kBuggyOdom = R"(
struct odom_pos_t { float z; };
struct odom_vel_t { float z; float t_s; };
float closest_z(odom_pos_t pos, odom_vel_t vel) {
  return fabsf(pos.z - vel.z * vel.t_s);
}
)";

const char* kFixedOdom = R"(
struct odom_pos_t { float z; };
struct odom_vel_t { float z; float t_s; };
float closest_z(odom_pos_t pos, odom_vel_t vel) {
  return fabsf(pos.z / 100.0 - vel.z * vel.t_s);
}
)";

}  // namespace

TEST_CASE("run interprets a program and writes trace plus sidecar") {
    TempDir dir;
    auto prog = dir.file("prog.ml4u", kAltProgram);
    auto scen = dir.file("scen.toml", tracking_scenario());
    auto r = run_cli({"run", prog, "--scenario", scen, "--out", dir.at("trace.csv")});
    REQUIRE(r.err == "");
    REQUIRE(r.code == 0);
    std::string trace = slurp(dir.at("trace.csv"));
    // 11 QOI samples (t = 0..10 s) + 10 variable stores.
    REQUIRE(std::count(trace.begin(), trace.end(), '\n') == 22);
    std::string sidecar = slurp(dir.at("trace.csv.registry.json"));
    REQUIRE(sidecar.find("\"_alt\"") != std::string::npos);
}

TEST_CASE("run reports input errors with exit code 2") {
    TempDir dir;
    auto prog = dir.file("prog.ml4u", kAltProgram);
    auto r = run_cli({"run", prog, "--scenario", dir.at("missing.toml"), "--out",
                      dir.at("t.csv")});
    REQUIRE(r.code == 2);

    auto bad = dir.file("bad.ml4u", "void f( {");
    auto scen = dir.file("scen.toml", "duration_s = 1\n");
    auto r2 = run_cli({"run", bad, "--scenario", scen, "--out", dir.at("t.csv")});
    REQUIRE(r2.code == 2);
    REQUIRE(r2.err.find("bad.ml4u:1") != std::string::npos);
}

TEST_CASE("deduce mines a meter entry from an altitude-tracking trace") {
    TempDir dir;
    auto prog = dir.file("prog.ml4u", kAltProgram);
    auto scen = dir.file("scen.toml", tracking_scenario());
    REQUIRE(run_cli({"run", prog, "--scenario", scen, "--out", dir.at("trace.csv")}).code == 0);
    auto r = run_cli({"deduce", dir.at("trace.csv"), "--out", dir.at("db.json")});
    REQUIRE(r.err == "");
    REQUIRE(r.code == 0);
    auto db = nlohmann::json::parse(slurp(dir.at("db.json")));
    REQUIRE(db.is_array());
    REQUIRE(db.size() == 1);
    REQUIRE(db[0]["canonical_name"] == "_alt");
    REQUIRE(db[0]["unit"] == "m");
    REQUIRE(db[0]["frame"] == "GLOBAL");
    REQUIRE(db[0]["qoi"] == "alt");
}

TEST_CASE("deduce handles empty traces and rejects malformed ones") {
    TempDir dir;
    dir.file("empty.csv", "timestamp_ms,kind,id,value\n");
    dir.file("empty.csv.registry.json", R"({"vars": {}, "enums": []})");
    auto r = run_cli({"deduce", dir.at("empty.csv"), "--out", dir.at("db.json")});
    REQUIRE(r.code == 0);
    REQUIRE(nlohmann::json::parse(slurp(dir.at("db.json"))).empty());

    dir.file("bad.csv", "timestamp_ms,kind,id,value\nnot,a,row\n");
    dir.file("bad.csv.registry.json", R"({"vars": {}})");
    REQUIRE(run_cli({"deduce", dir.at("bad.csv"), "--out", dir.at("db2.json")}).code == 2);
}

TEST_CASE("check reports unit errors with exit 1 and passes fixed code") {
    TempDir dir;
    auto proto = dir.file("proto.xml", kOdomProto);
    auto buggy = dir.file("buggy.ml4u", kBuggyOdom);
    auto fixed = dir.file("fixed.ml4u", kFixedOdom);

    auto r = run_cli({"check", buggy, "--protocol", proto, "--format", "json"});
    REQUIRE(r.code == 1);
    auto diags = nlohmann::json::parse(r.out);
    REQUIRE(diags.size() == 1);
    REQUIRE(diags[0]["code"] == "UTE001");
    REQUIRE(diags[0]["line"] == 5);
    REQUIRE(diags[0]["severity"] == "error");

    auto rf = run_cli({"check", fixed, "--protocol", proto});
    REQUIRE(rf.code == 0);
    REQUIRE(rf.out == "");

    auto human = run_cli({"check", buggy, "--protocol", proto});
    REQUIRE(human.code == 1);
    REQUIRE(human.out.find("UTE001") != std::string::npos);
    REQUIRE(human.out.find("buggy.ml4u:5") != std::string::npos);
}

TEST_CASE("check surfaces unreadable inputs as exit 2") {
    TempDir dir;
    auto buggy = dir.file("buggy.ml4u", kBuggyOdom);
    REQUIRE(run_cli({"check", buggy, "--protocol", dir.at("nope.xml")}).code == 2);
    REQUIRE(run_cli({"check", dir.at("missing.ml4u")}).code == 2);
    auto badproto = dir.file("bad.xml", "<mavlink><messages>");
    REQUIRE(run_cli({"check", buggy, "--protocol", badproto}).code == 2);
}

TEST_CASE("dump-constraints is deterministic and empty for an empty program") {
    TempDir dir;
    auto proto = dir.file("proto.xml", kOdomProto);
    auto empty = dir.file("empty.ml4u", "");
    auto r = run_cli({"dump-constraints", empty, "--protocol", proto});
    REQUIRE(r.code == 0);
    REQUIRE(r.out == "");

    auto buggy = dir.file("buggy.ml4u", kBuggyOdom);
    auto a = run_cli({"dump-constraints", buggy, "--protocol", proto});
    auto b = run_cli({"dump-constraints", buggy, "--protocol", proto});
    REQUIRE(a.code == 0);
    REQUIRE(a.out == b.out);
    REQUIRE(a.out.find("(samedim ") != std::string::npos);
}

TEST_CASE("config files load, reject unknown keys, and yield to flags") {
    TempDir dir;
    auto proto = dir.file("proto.xml", kOdomProto);
    auto buggy = dir.file("buggy.ml4u", kBuggyOdom);
    auto conf = dir.file("conf.toml",
                         "protocol = \"" + proto + "\"\nformat = \"json\"\n");
    auto r = run_cli({"check", buggy, "--config", conf});
    REQUIRE(r.code == 1);
    REQUIRE(nlohmann::json::parse(r.out).size() == 1);

    // Flags override the config file.
    auto rh = run_cli({"check", buggy, "--config", conf, "--format", "human"});
    REQUIRE(rh.out.find("UTE001") != std::string::npos);

    auto badconf = dir.file("bad.toml", "warp_drive = \"on\"\n");
    auto rb = run_cli({"check", buggy, "--config", badconf});
    REQUIRE(rb.code == 2);
    REQUIRE(rb.err.find("warp_drive") != std::string::npos);
}

TEST_CASE("UNITLINT_CONFIG is used when --config is absent") {
    TempDir dir;
    auto proto = dir.file("proto.xml", kOdomProto);
    auto buggy = dir.file("buggy.ml4u", kBuggyOdom);
    auto conf = dir.file("conf.toml", "protocol = \"" + proto + "\"\n");
    setenv("UNITLINT_CONFIG", conf.c_str(), 1);
    auto r = run_cli({"check", buggy});
    unsetenv("UNITLINT_CONFIG");
    REQUIRE(r.code == 1);
}

TEST_CASE("end-to-end run, deduce, and check are byte-reproducible") {
    auto once = [](const TempDir& dir) {
        auto prog = dir.file("prog.ml4u", kAltProgram);
        auto scen = dir.file("scen.toml", tracking_scenario());
        REQUIRE(run_cli({"run", prog, "--scenario", scen, "--out", dir.at("t.csv")}).code == 0);
        REQUIRE(run_cli({"deduce", dir.at("t.csv"), "--out", dir.at("db.json")}).code == 0);
        auto check = run_cli({"check", prog, "--db", dir.at("db.json"), "--format", "json"});
        return slurp(dir.at("t.csv")) + "\x1e" + slurp(dir.at("db.json")) + "\x1e" +
               std::to_string(check.code) + check.out;
    };
    TempDir d1, d2;
    std::string a = once(d1);
    std::string b = once(d2);
    // Strip the differing temp paths out of the check output.
    REQUIRE(a.substr(a.find('\x1e')) == b.substr(b.find('\x1e')));
    REQUIRE(a.substr(0, a.find('\x1e')) == b.substr(0, b.find('\x1e')));
}

TEST_CASE("the ignore flag suppresses constraints from a named function") {
    TempDir dir;
    auto proto = dir.file("proto.xml", kOdomProto);
    // scale() is unknown: without ignoring it the call still type-checks its
    // argument slots against nothing, so this exercises plumbing only.
    auto prog = dir.file("p.ml4u", R"(
struct odom_pos_t { float z; };
float helper(float a) {
  return a;
}
float f(odom_pos_t p) {
  return helper(p.z);
}
)");
    auto with_ignore =
        run_cli({"dump-constraints", prog, "--protocol", proto, "--ignore-fn", "helper"});
    auto without = run_cli({"dump-constraints", prog, "--protocol", proto});
    REQUIRE(with_ignore.code == 0);
    // Ignoring suppresses the call-site argument binding; the function's own
    // body still names its argument atom.
    REQUIRE(with_ignore.out.find("(eq (argtype \"helper\"") == std::string::npos);
    REQUIRE(without.out.find("(eq (argtype \"helper\"") != std::string::npos);
}
