#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

namespace fs = std::filesystem;

namespace {

const fs::path kRoot = fs::temp_directory_path() / "cirlab_cli_test";

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int run(const std::string& args) {
    const std::string cmd = std::string(CIRLAB_CLI_PATH) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path write_config(const std::string& name, const std::string& text) {
    fs::create_directories(kRoot);
    const auto p = kRoot / name;
    std::ofstream(p) << text;
    return p;
}

} // namespace

TEST(Cli, BohrSommerfeldLevels) {
    const auto cfg = write_config("bohr.ini", "[bohr]\nn_max = 2\nlz = 0\n");
    const auto out = kRoot / "bohr";
    fs::remove_all(out);
    ASSERT_EQ(run("--config " + cfg.string() + " --out " + out.string() + " bohr-sommerfeld"), 0);
    std::ifstream in(out / "levels.csv");
    std::string header, line;
    std::getline(in, header);
    EXPECT_NE(header.find("energy [hbar*omega]"), std::string::npos) << header;
    std::vector<double> levels;
    while (std::getline(in, line)) {
        std::stringstream ss(line);
        std::string cell;
        std::vector<std::string> cells;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        ASSERT_GE(cells.size(), 3u);
        levels.push_back(std::stod(cells[2]));
    }
    ASSERT_EQ(levels.size(), 3u);
    EXPECT_NEAR(levels[0], 1.0, 1e-10);
    EXPECT_NEAR(levels[1], 3.0, 1e-10);
    EXPECT_NEAR(levels[2], 5.0, 1e-10);

    const auto manifest = nlohmann::json::parse(slurp(out / "manifest.json"));
    EXPECT_EQ(manifest["status"], "ok");
    EXPECT_EQ(manifest["master_seed"], 42);
    EXPECT_TRUE(manifest.contains("wall_seconds"));
    EXPECT_TRUE(manifest.contains("versions"));
    EXPECT_EQ(slurp(out / "config.input.ini"), slurp(cfg));
    EXPECT_TRUE(fs::exists(out / "config.ini"));
}

TEST(Cli, SweepIsByteIdenticalAcrossWorkerCounts) {
    const auto cfg = write_config("sweep.ini",
                                  "[ensemble]\nn_events = 12\n"
                                  "[sweep]\nspacing = list\nvalues = 0.01, 0.1, 1\n");
    const auto a = kRoot / "sweep_a", b = kRoot / "sweep_b", c = kRoot / "sweep_c";
    for (const auto& d : {a, b, c}) fs::remove_all(d);
    ASSERT_EQ(run("--config " + cfg.string() + " --out " + a.string() + " --workers 1 classical-sweep"), 0);
    ASSERT_EQ(run("--config " + cfg.string() + " --out " + b.string() + " --workers 3 classical-sweep"), 0);
    ASSERT_EQ(run("--config " + cfg.string() + " --out " + c.string() + " --workers 1 classical-sweep"), 0);
    const auto ta = slurp(a / "transmission.csv");
    EXPECT_FALSE(ta.empty());
    EXPECT_EQ(ta, slurp(b / "transmission.csv"));
    EXPECT_EQ(ta, slurp(c / "transmission.csv"));
    EXPECT_NE(ta.find("[hbar*omega]"), std::string::npos);
}

TEST(Cli, SeedChangesSampling) {
    const auto cfg = write_config("seed.ini", "[ensemble]\nn_events = 40\n[sweep]\nspacing = list\nvalues = 0.043\n");
    const auto a = kRoot / "seed_a", b = kRoot / "seed_b";
    for (const auto& d : {a, b}) fs::remove_all(d);
    ASSERT_EQ(run("--config " + cfg.string() + " --out " + a.string() + " classical-sweep"), 0);
    ASSERT_EQ(run("--config " + cfg.string() + " --out " + b.string() + " --seed 7 classical-sweep"), 0);
    EXPECT_NE(slurp(a / "transmission.csv"), slurp(b / "transmission.csv"));
    const auto manifest = nlohmann::json::parse(slurp(b / "manifest.json"));
    EXPECT_EQ(manifest["master_seed"], 7);
}

TEST(Cli, EnvironmentOverrides) {
    const auto out = kRoot / "env";
    fs::remove_all(out);
    const auto cfg = write_config("env.ini", "[bohr]\nn_max = 1\n");
    const std::string cmd = "CIRLAB_OUT=" + out.string() + " CIRLAB_CONFIG=" + cfg.string() + " CIRLAB_SEED=9 " +
                            std::string(CIRLAB_CLI_PATH) + " bohr-sommerfeld > /dev/null 2>&1";
    ASSERT_EQ(std::system(cmd.c_str()), 0);
    const auto manifest = nlohmann::json::parse(slurp(out / "manifest.json"));
    EXPECT_EQ(manifest["master_seed"], 9);
}

TEST(Cli, InvalidConfigReportsError) {
    const auto cfg = write_config("bad.ini", "[physics]\ne_perp = 0.5\nlz = 1\n");
    const auto out = kRoot / "bad";
    fs::remove_all(out);
    EXPECT_NE(run("--config " + cfg.string() + " --out " + out.string() + " classical-sweep"), 0);
    const auto cfg2 = write_config("bad2.ini", "[physics]\nnot_a_key = 1\n");
    EXPECT_NE(run("--config " + cfg2.string() + " --out " + out.string() + " bohr-sommerfeld"), 0);
    EXPECT_NE(run("no-such-mode"), 0);
}

TEST(Cli, ScatteringLengthAndFreespaceOutputs) {
    const auto cfg = write_config("fs.ini", "[sweep]\nspacing = list\nvalues = 0.5, 1, 2\n");
    const auto a = kRoot / "as", f = kRoot / "fs";
    for (const auto& d : {a, f}) fs::remove_all(d);
    ASSERT_EQ(run("--config " + cfg.string() + " --out " + a.string() + " scattering-length"), 0);
    ASSERT_EQ(run("--config " + cfg.string() + " --out " + f.string() + " freespace-theta"), 0);
    const auto as = slurp(a / "scattering_length.csv");
    EXPECT_NE(as.find("a_s [a_ho]"), std::string::npos) << as;
    EXPECT_TRUE(fs::exists(f / "theta.csv"));
    EXPECT_TRUE(fs::exists(f / "orbiting.csv"));
}
