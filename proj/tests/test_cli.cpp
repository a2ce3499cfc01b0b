#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <umblt/config.hpp>
#include <umblt/io.hpp>

using namespace umblt;
namespace fs = std::filesystem;

namespace {

struct CommandResult {
    int exit_code;
    std::string output; // stdout + stderr
};

CommandResult run_cli(const std::string& args) {
    const std::string log = "cli_test_output.log";
    const std::string cmd = std::string(UMBLT_CLI_PATH) + " " + args + " > " + log + " 2>&1";
    const int status = std::system(cmd.c_str());
    std::ifstream in(log);
    std::ostringstream buf;
    buf << in.rdbuf();
    return CommandResult{WEXITSTATUS(status), buf.str()};
}

const char* tiny_config = R"(
domain = [0, 0.2, 0, 0.2]
grid = [31, 31]
recon_grid = [16, 16]
directions = 8
sigma = {affine: [0.1, 0.1, 0]}
kernel = {hg: 0.5}
sources = [{gaussian: {center: [0.08, 0.12], sharpness: 100}}]
method = neumann
noise = [0, 0.02]
seed = 5
)";

std::string write_tiny_config() {
    const std::string path = "cli_test_config.txt";
    std::ofstream out(path);
    out << tiny_config;
    return path;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

} // namespace

TEST_CASE("show-config prints a parseable configuration") {
    CommandResult r = run_cli("show-config --preset 1");
    REQUIRE(r.exit_code == 0);
    ExperimentConfig cfg = config_from_values(parse_config_text(r.output));
    CHECK(cfg.x1_max == 0.2);
    CHECK(cfg.forward_nx == 121);
    CHECK(cfg.sources.size() == 2);
}

TEST_CASE("audit command reports the contraction summary") {
    const std::string cfg = write_tiny_config();
    CommandResult r = run_cli("audit --config " + cfg);
    REQUIRE(r.exit_code == 0);
    CHECK(r.output.find("bound_x2") != std::string::npos);
    CHECK(r.output.find("small-domain condition holds") != std::string::npos);
}

TEST_CASE("synthesize then invert round trip") {
    const std::string cfg = write_tiny_config();
    fs::remove_all("cli_test_pkg");
    fs::remove_all("cli_test_rec");

    CommandResult syn = run_cli("synthesize --config " + cfg + " --out cli_test_pkg");
    REQUIRE(syn.exit_code == 0);
    REQUIRE(fs::exists("cli_test_pkg/h.csv"));
    REQUIRE(fs::exists("cli_test_pkg/sigma.csv"));
    REQUIRE(fs::exists("cli_test_pkg/v0_d0.csv"));

    CommandResult inv = run_cli("invert --method neumann --config " + cfg +
                                " --in cli_test_pkg --truth cli_test_pkg/truth.csv "
                                "--out cli_test_rec --noise 0");
    REQUIRE(inv.exit_code == 0);
    REQUIRE(fs::exists("cli_test_rec/recon.csv"));
    ScalarField recon = read_scalar_csv("cli_test_rec/recon.csv");
    ScalarField truth = read_scalar_csv("cli_test_pkg/truth.csv");
    CHECK(relative_l2_error(recon, truth) < 0.02);
    CHECK(inv.output.find("relative L2 error") != std::string::npos);

    fs::remove_all("cli_test_pkg");
    fs::remove_all("cli_test_rec");
}

TEST_CASE("experiment runs are bit-identical through the command line") {
    const std::string cfg = write_tiny_config();
    fs::remove_all("cli_test_det_a");
    fs::remove_all("cli_test_det_b");

    CommandResult a = run_cli("experiment 1 --config " + cfg + " --seed 7 --out cli_test_det_a");
    CommandResult b = run_cli("experiment 1 --config " + cfg + " --seed 7 --out cli_test_det_b");
    REQUIRE(a.exit_code == 0);
    REQUIRE(b.exit_code == 0);
    for (const char* rel :
         {"gaussian/truth.csv", "gaussian/noise_0/recon.csv", "gaussian/noise_2/recon.csv",
          "gaussian/noise_2/h.csv", "gaussian/noise_2/diff.csv"}) {
        CHECK(slurp(std::string("cli_test_det_a/") + rel) ==
              slurp(std::string("cli_test_det_b/") + rel));
    }

    fs::remove_all("cli_test_det_a");
    fs::remove_all("cli_test_det_b");
}

TEST_CASE("failures exit nonzero with a machine-readable error line") {
    SECTION("missing measurement directory") {
        CommandResult r = run_cli("invert --in does_not_exist_dir");
        CHECK(r.exit_code != 0);
        CHECK(r.output.find("error: ") != std::string::npos);
    }
    SECTION("invalid preset number") {
        CommandResult r = run_cli("experiment 9");
        CHECK(r.exit_code != 0);
        CHECK(r.output.find("error: ") != std::string::npos);
    }
    SECTION("malformed config file") {
        std::ofstream out("cli_test_bad.txt");
        out << "grid = [\n";
        out.close();
        CommandResult r = run_cli("audit --config cli_test_bad.txt");
        CHECK(r.exit_code != 0);
        CHECK(r.output.find("error: ") != std::string::npos);
        fs::remove("cli_test_bad.txt");
    }
    SECTION("unknown subcommand") {
        CommandResult r = run_cli("frobnicate");
        CHECK(r.exit_code != 0);
    }
}
