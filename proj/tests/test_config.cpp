#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "cirlab/config.hpp"
#include "cirlab/csv.hpp"

using namespace cirlab;
namespace fs = std::filesystem;

TEST(Config, EmptyDocumentGivesDefaults) {
    const auto c = parse_config("");
    EXPECT_EQ(c.units.omega, 1.0);
    EXPECT_EQ(UnitSystem::hbar, 1.0);
    EXPECT_EQ(UnitSystem::mu, 1.0);
    EXPECT_EQ(c.sampling.z0, -10.0);
    EXPECT_EQ(c.n_events, 1600);
    EXPECT_EQ(c.master_seed, 42u);
    const auto d = parse_config("[physics]\n");
    EXPECT_EQ(c, d);
}

TEST(Config, RoundTrip) {
    ExperimentConfig c;
    c.mode = Mode::QuantumSweep;
    c.output = "runs/a b";
    c.master_seed = 123456789012345ULL;
    c.params = make_channel(1, 0, 1.0 / 3.0);
    c.potential = {PotentialKind::LennardJones, 0.1 + 0.2, 1.0};
    c.integrator.branch_policy = BranchPolicy::Terminate;
    c.sweep.spacing = GridSpacing::List;
    c.sweep.values = {0.1, 0.7, 1.0 / 7.0 + 1.0};
    c.quantum.richardson = false;
    c.density.theta_sweep = true;
    c.convergence.sizes = {10, 40};
    const auto back = parse_config(serialize(c));
    EXPECT_EQ(back, c);
    EXPECT_EQ(serialize(back), serialize(c));
}

TEST(Config, SectionsAndComments) {
    const auto c = parse_config("# comment\n[physics]\nkind = lennard-jones  # trailing\nv0 = 2.5\n\n[sweep]\naxis = e_par\n");
    EXPECT_EQ(c.potential.kind, PotentialKind::LennardJones);
    EXPECT_EQ(c.potential.v0, 2.5);
    EXPECT_EQ(c.sweep.axis, SweepAxis::EPar);
}

TEST(Config, ValidationErrorsNameTheKey) {
    try {
        parse_config("[physics]\ne_perp = 0.5\nlz = 1\n");
        FAIL() << "expected ValidationError";
    } catch (const ValidationError& e) {
        EXPECT_NE(std::string(e.what()).find("physics.e_perp"), std::string::npos);
    }
    EXPECT_THROW(parse_config("[physics]\nkind = yukawa\nv0 = -1\n"), ValidationError);
    EXPECT_THROW(parse_config("[quantum]\nn_theta = 7\n"), ValidationError);
}

TEST(Config, ParseErrorsCarryLine) {
    auto line_of = [](const std::string& text) {
        try {
            parse_config(text);
        } catch (const ParseError& e) {
            return e.line();
        }
        return -1;
    };
    EXPECT_EQ(line_of("[physics]\nbogus = 1\n"), 2);
    EXPECT_EQ(line_of("[nowhere]\n"), 1);
    EXPECT_EQ(line_of("[physics]\nv0 = 1\nv0 = 2\n"), 3);
    EXPECT_EQ(line_of("[physics]\n\nv0 = abc\n"), 3);
    EXPECT_EQ(line_of("v0 = 1\n"), 1);
    EXPECT_EQ(line_of("[physics\n"), 1);
}

TEST(Config, EnsembleCarriesFields) {
    const auto c = parse_config("[ensemble]\nn_events = 17\n[run]\nmaster_seed = 5\n");
    const auto e = c.ensemble();
    EXPECT_EQ(e.n_events, 17u);
    EXPECT_EQ(e.master_seed, 5u);
}

TEST(Csv, HeaderNamesColumnsAndUnits) {
    const auto path = fs::temp_directory_path() / "cirlab_csv_test.csv";
    {
        CsvWriter w(path.string(), {{"v0", "hbar*omega"}, {"T", "1"}, {"note", ""}});
        w.write(0.1, 0.5, std::string("a,b"));
        w.write(1.0 / 3.0, std::numeric_limits<double>::quiet_NaN(), "q\"x");
        EXPECT_EQ(w.rows(), 2u);
        EXPECT_THROW(w.write(1.0), ArgumentError);
    }
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    EXPECT_EQ(ss.str(), "v0 [hbar*omega],T [1],note\n0.1,0.5,\"a,b\"\n0.3333333333333333,nan,\"q\"\"x\"\n");
    fs::remove(path);
}
