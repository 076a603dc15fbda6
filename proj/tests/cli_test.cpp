#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "nsalab/cli.hpp"
#include "nsalab/section.hpp"

using namespace nsalab;
using namespace nsalab::cli;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("nsalab_cli_test_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

int invoke(std::vector<std::string> args) {
    args.insert(args.begin(), "nsalab");
    std::vector<char*> argv;
    for (auto& a : args) argv.push_back(a.data());
    return run(int(argv.size()), argv.data());
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path write_config(const fs::path& dir, const std::string& text) {
    const fs::path p = dir / "run.cfg";
    std::ofstream(p) << text;
    return p;
}

}  // namespace

TEST(Config, ParsesSectionsAndComments) {
    const Config c = Config::parse_string(
        "# top\nseed = 5\n[family]\nkind = trig-perturbed  # inline\nmatrix = 2, 1, 1, 1\n[sturmian]\nwindow = -3 3\n");
    EXPECT_EQ(c.get_int("run", "seed", 0), 5);
    EXPECT_EQ(c.get_string("family", "kind", ""), "trig-perturbed");
    EXPECT_EQ(c.get_reals("family", "matrix", {}), (std::vector<double>{2, 1, 1, 1}));
    EXPECT_EQ(c.get_reals("sturmian", "window", {}), (std::vector<double>{-3, 3}));
    EXPECT_DOUBLE_EQ(c.get_real("section", "tol", 0.5), 0.5);
}

TEST(Config, RejectsUnknownAndMalformed) {
    EXPECT_THROW(Config::parse_string("[family]\nkindd = linear\n"), ConfigError);
    EXPECT_THROW(Config::parse_string("[nope]\n"), ConfigError);
    EXPECT_THROW(Config::parse_string("[family]\njunk line\n"), ConfigError);
    EXPECT_THROW(Config::parse_string("[family]\nkind = a\nkind = b\n"), ConfigError);
    const Config c = Config::parse_string("[section]\ntol = abc\n");
    EXPECT_THROW(c.get_real("section", "tol", 0), ConfigError);
}

TEST(Cli, ComputeSectionOnCatMap) {
    const fs::path dir = scratch("cat");
    const auto cfg = write_config(dir, "[family]\nkind = linear\nmatrix = 2 1 1 1\n[section]\ngrid = 32\n");
    ASSERT_EQ(invoke({"compute-section", "--config", cfg.string(), "--out", (dir / "out").string()}), kExitOk);
    std::ifstream in(dir / "out" / "section.csv");
    std::string first;
    std::getline(in, first);
    EXPECT_EQ(first, "# schema=section version=1");
    in.seekg(0);
    std::optional<DerivField> h;
    const Section s = read_section_csv(in, &h);
    EXPECT_LT(sup_proj_dist(s, Section(32, Direction(std::atan(-(1 + std::sqrt(5.0)) / 2)))), 1e-8);
    const std::string report = slurp(dir / "out" / "report.txt");
    for (const char* name : {"λ̂", "κ̂", "Δ̂"}) EXPECT_NE(report.find(name), std::string::npos);
    EXPECT_NE(report.find("Δ̂ (delta_hat) = 0.38196"), std::string::npos);
}

TEST(Cli, ExitCodes) {
    const fs::path dir = scratch("codes");
    EXPECT_EQ(invoke({"compute-section", "--config", write_config(dir, "[family]\nbogus = 1\n").string(), "--out",
                      (dir / "a").string()}),
              kExitValidation);
    EXPECT_EQ(invoke({"not-a-command"}), kExitValidation);
    EXPECT_EQ(invoke({"compute-section", "--config", write_config(dir, "[family]\nmatrix = 1 0 0 1\n").string(),
                      "--out", (dir / "b").string()}),
              kExitValidation);
    // non-convergence: numerical failure, report retained
    const auto cfg = write_config(
        dir, "[family]\nkind = trig-perturbed\nepsilon = 0.05\n[section]\ngrid = 16\ntol = 1e-15\nmax-depth = 3\n");
    EXPECT_EQ(invoke({"compute-section", "--config", cfg.string(), "--out", (dir / "c").string()}), kExitNumerical);
    const std::string report = slurp(dir / "c" / "report.txt");
    EXPECT_NE(report.find("did not converge"), std::string::npos);
    EXPECT_NE(report.find("best residual"), std::string::npos);
}

TEST(Cli, SturmianAndDimension) {
    const fs::path dir = scratch("sturm");
    const auto cfg = write_config(
        dir, "[sturmian]\nlambda = 0\ncf = 1\nwindow = -3 3\ninitial-grid = 64\nrefine-depth = 8\nmax-iters = 500\n");
    ASSERT_EQ(invoke({"dimension", "--config", cfg.string(), "--out", dir.string()}), kExitOk);
    const std::string spec = slurp(dir / "spectrum.csv");
    EXPECT_EQ(spec.rfind("# schema=spectrum version=1\n", 0), 0u);
    EXPECT_NE(spec.find("E_lo,E_hi\n"), std::string::npos);
    const std::string dim = slurp(dir / "dimension.csv");
    EXPECT_EQ(dim.rfind("# schema=dimension version=1\nscale,box_count\n", 0), 0u);
    const std::string report = slurp(dir / "report.txt");
    const std::string key = "box dimension estimate = ";
    const auto at = report.find(key);
    ASSERT_NE(at, std::string::npos);
    EXPECT_NEAR(std::stod(report.substr(at + key.size())), 1.0, 0.05);
}

TEST(Cli, SubcommandMustMatchConfig) {
    const fs::path dir = scratch("mismatch");
    const auto cfg = write_config(dir, "subcommand = sturmian\n");
    EXPECT_EQ(invoke({"compute-section", "--config", cfg.string(), "--out", dir.string()}), kExitValidation);
}
