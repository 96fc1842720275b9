#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <sys/wait.h>

namespace fs = std::filesystem;

namespace {

const fs::path& work_dir()
{
    static const fs::path dir = [] {
        fs::path d = fs::path(::testing::TempDir()) / "vugsim_cli";
        fs::remove_all(d);
        fs::create_directories(d);
        std::ofstream(d / "small.json") << R"({
  "domain": {"origin": [0, 0], "size": [1, 1]},
  "mesh": {"nx": 8, "ny": 8},
  "coarse": {"mx": 2, "my": 2},
  "fluid": {"reference_pressure": 0},
  "continua": {"matrix": {"permeability": {"type": "synthetic", "seed": 3, "contrast": 100, "minimum": 1e-13}}},
  "fractures": [{"points": [[0.125, 0.25], [0.75, 0.625]], "aperture": 1e-3}],
  "boundary": {"top": {"type": "dirichlet", "value": 1000}},
  "time": {"dt": 0.001, "final_time": 0.003},
  "basis": {"count": 2},
  "output": {"dir": "from_config"}
})";
        std::ofstream(d / "broken.json") << R"({"mesh": {"nx": 8, "ny": 8}, "coarse": {"mx": 3, "my": 2}})";
        return d;
    }();
    return dir;
}

int cli(const std::string& args, const std::string& env = "")
{
    const std::string cmd = "cd '" + work_dir().string() + "' && " + env + " '" + VUGSIM_CLI_PATH + "' " + args +
                            " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(Cli, HelpAndUsageErrors)
{
    EXPECT_EQ(cli("--help"), 0);
    EXPECT_EQ(cli(""), 1);
    EXPECT_EQ(cli("frobnicate"), 1);
    EXPECT_EQ(cli("run missing.json"), 1);
}

TEST(Cli, InvalidConfigExitsOne)
{
    EXPECT_EQ(cli("mesh broken.json --out o_broken"), 1);
    EXPECT_EQ(cli("run small.json --mode nope --out o_nope"), 1);
    EXPECT_EQ(cli("compare small.json --days 7 --out o_days"), 1);
}

TEST(Cli, MeshAndRunWriteOutputs)
{
    const fs::path out = work_dir() / "o_run";
    ASSERT_EQ(cli("mesh small.json --out o_run"), 0);
    EXPECT_TRUE(fs::exists(out / "mesh.vtk"));
    ASSERT_EQ(cli("run small.json --mode msfem --vtk-days 0.003 --out o_run"), 0);
    EXPECT_TRUE(fs::exists(out / "msfem_series.csv"));
    int vtk = 0;
    for (const auto& e : fs::directory_iterator(out)) {
        const std::string name = e.path().filename().string();
        vtk += name.rfind("msfem_day", 0) == 0 && e.path().extension() == ".vtk";
    }
    EXPECT_EQ(vtk, 1);
    ASSERT_EQ(cli("basis small.json --out o_run"), 0);
    EXPECT_TRUE(fs::exists(out / "eigenvalues.csv"));
}

TEST(Cli, CompareWritesErrorTable)
{
    ASSERT_EQ(cli("compare small.json --basis 1,2 --days 0.001,0.003 --out o_cmp"), 0);
    std::ifstream in(work_dir() / "o_cmp" / "errors.csv");
    std::string header;
    std::getline(in, header);
    EXPECT_EQ(header, "basis,day,continuum,error_pct\r");
}

TEST(Cli, OutputDirectoryPrecedence)
{
    ASSERT_EQ(cli("mesh small.json"), 0);
    EXPECT_TRUE(fs::exists(work_dir() / "from_config" / "mesh.vtk"));
    ASSERT_EQ(cli("mesh small.json", "VUGSIM_OUTPUT_DIR=from_env"), 0);
    EXPECT_TRUE(fs::exists(work_dir() / "from_env" / "mesh.vtk"));
    ASSERT_EQ(cli("mesh small.json --out from_flag", "VUGSIM_OUTPUT_DIR=from_env2"), 0);
    EXPECT_TRUE(fs::exists(work_dir() / "from_flag" / "mesh.vtk"));
    EXPECT_FALSE(fs::exists(work_dir() / "from_env2"));
}

TEST(Cli, ExportFormats)
{
    ASSERT_EQ(cli("export small.json --mode gmsfem --basis 2 --days 0.002 --format csv --out o_exp"), 0);
    ASSERT_EQ(cli("export small.json --mode fine --days 0.002 --format vtk --out o_exp"), 0);
    int files = 0;
    for (const auto& e : fs::directory_iterator(work_dir() / "o_exp")) {
        (void)e;
        ++files;
    }
    EXPECT_EQ(files, 2);
}
