#include "doctest.h"

#include "envariance/cli.hpp"
#include "envariance/io.hpp"

#include <filesystem>
#include <sstream>

using namespace envariance;
using namespace envariance::cli;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name)
{
  const fs::path dir = fs::temp_directory_path() / ("envariance_cli_" + name);
  fs::remove_all(dir);
  return dir;
}

int run_args(std::vector<std::string> args)
{
  args.insert(args.begin(), "envariance");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  return run(static_cast<int>(argv.size()), argv.data());
}

std::size_t count_files(const fs::path& dir)
{
  std::size_t n = 0;
  for (const auto& e : fs::directory_iterator(dir)) n += e.is_regular_file();
  return n;
}

std::vector<std::string> lines_of(const std::string& text)
{
  std::vector<std::string> out;
  std::istringstream is(text);
  for (std::string line; std::getline(is, line);) out.push_back(line);
  return out;
}

std::int64_t total_counts(const fs::path& file)
{
  std::istringstream is(read_file(file));
  std::int64_t t = 0;
  for (auto n : read_counts_csv(is).counts) t += n;
  return t;
}

} // namespace

TEST_CASE("parse_config")
{
  const RunConfig c = parse_config(R"({"axes": ["z"], "angles_deg": [0, 90], "werner_v": 0.9, "poisson": true,
                                       "seed": 5, "format": "json"})");
  CHECK(c.axes == std::vector<std::string>{"z"});
  CHECK(c.angles_deg == std::vector<double>{0, 90});
  CHECK(c.werner_v == 0.9);
  CHECK(c.poisson);
  CHECK(c.seed == 5);
  CHECK(c.format == "json");
  CHECK(c.flux_hz == 5400.0);

  CHECK_THROWS_AS(parse_config(R"({"wernerv": 0.9})"), UsageError);
  CHECK_THROWS_AS(parse_config(R"({"werner_v": "high"})"), UsageError);
  CHECK_THROWS_AS(parse_config(R"({"poisson": {"on": true}})"), UsageError);
  CHECK_THROWS_AS(parse_config("[1, 2]"), UsageError);
  CHECK_THROWS_AS(parse_config("{"), UsageError);
  CHECK_THROWS_AS(load_config("/nonexistent/config.json"), IoError);

  RunConfig bad;
  bad.axes = {"w"};
  CHECK_THROWS_AS(bad.plan(), UsageError);
  bad = RunConfig{};
  bad.format = "xml";
  CHECK_THROWS_AS(bad.plan(), UsageError);
}

TEST_CASE("count file names")
{
  CHECK(count_file_name(NamedAxis::x, 30, Stage::II) == "counts_x_030_II.csv");
  CHECK(count_file_name(NamedAxis::m, 360, Stage::I) == "counts_m_360_I.csv");
}

TEST_CASE("simulate writes one count file per cell and stage")
{
  RunConfig c;
  c.out = scratch("sim").string();
  cmd_simulate(c);
  CHECK(count_files(fs::path(c.out) / "counts") == 156);
  CHECK(fs::exists(fs::path(c.out) / "manifest.json"));
  const auto manifest = nlohmann::json::parse(read_file(fs::path(c.out) / "manifest.json"));
  CHECK(manifest["seed"].get<std::uint64_t>() == c.seed);

  const fs::path first = fs::path(c.out) / "counts" / "counts_x_000_I.csv";
  CHECK(lines_of(read_file(first))[0] == kCountCsvHeader);
  CHECK(total_counts(first) == 9 * 27000);

  RunConfig again = c;
  again.out = scratch("sim2").string();
  cmd_simulate(again);
  for (const auto& e : fs::directory_iterator(fs::path(c.out) / "counts")) {
    CHECK(read_file(e.path()) == read_file(fs::path(again.out) / "counts" / e.path().filename()));
  }

  RunConfig bright = c;
  bright.out = scratch("sim3").string();
  bright.axes = {"x"};
  bright.angles_deg = {0};
  bright.flux_hz = 1e6;
  cmd_simulate(bright);
  const double ratio = static_cast<double>(total_counts(fs::path(bright.out) / "counts" / "counts_x_000_I.csv")) /
                       static_cast<double>(total_counts(first));
  CHECK(ratio == doctest::Approx(1e6 / 5400).epsilon(1e-4));

  for (const auto& d : {c.out, again.out, bright.out}) fs::remove_all(d);
}

TEST_CASE("analyze a noiseless run")
{
  RunConfig c;
  c.out = scratch("analyze").string();
  c.flux_hz = 2e5;
  cmd_simulate(c);
  const auto report = cmd_analyze(c);
  CHECK(report.mean_F >= 0.9999);
  CHECK(report.mean_BC >= 0.9999);
  const fs::path out(c.out);
  CHECK(lines_of(read_file(out / "report.csv")).size() == 53);
  CHECK(lines_of(read_file(out / "plots" / "plot_z_F_I_II.csv")).size() == 14);
  CHECK(count_files(out / "plots") == 16);

  fs::remove(out / "counts" / "counts_y_090_III.csv");
  CHECK_THROWS_AS(cmd_analyze(c), MissingData);
  CHECK(run_args({"analyze", "--out", c.out}) == kMissingData);
  fs::remove_all(out);
}

TEST_CASE("son-fit on a subset of axes")
{
  RunConfig c;
  c.out = scratch("sonfit").string();
  c.axes = {"z"};
  c.werner_v = 0.98;
  c.poisson = true;
  c.son_grid_size = 361;
  cmd_simulate(c);
  const auto fit = cmd_sonfit(c);
  REQUIRE(fit.fits.size() == 2);
  CHECK(std::abs(fit.n - 2.0) < 0.05);

  const fs::path out(c.out);
  CHECK(fs::exists(out / "correlations.csv"));
  CHECK(fs::exists(out / "fit.csv"));
  const auto curves = lines_of(read_file(out / "son_curves.csv"));
  CHECK(curves[0] == "combo,phi_deg,E_fit,E_qm");
  CHECK(curves.size() == 1 + 2 * 181);
  const std::string prefix = "\"[Z,(D,A)]\",90,";
  bool found = false;
  for (const auto& line : curves) {
    if (line.rfind(prefix, 0) != 0) continue;
    found = true;
    const std::string rest = line.substr(prefix.size());
    CHECK(std::stod(rest.substr(0, rest.find(','))) == doctest::Approx(1.0).epsilon(0.05));
  }
  CHECK(found);

  RunConfig empty = c;
  empty.input = scratch("sonfit_empty").string();
  CHECK_THROWS_AS(cmd_sonfit(empty), MissingData);
  fs::remove_all(out);
}

TEST_CASE("exit codes")
{
  CHECK(run_args({}) == kUsage);
  CHECK(run_args({"simulate", "--bogus"}) == kUsage);
  CHECK(run_args({"simulate", "--format", "xml"}) == kUsage);
  CHECK(run_args({"simulate", "--config", "/nonexistent/config.json"}) == kIo);

  const fs::path dir = scratch("codes");
  write_file(dir / "bad.json", R"({"axes": ["w"]})");
  CHECK(run_args({"simulate", "--config", (dir / "bad.json").string(), "--out", (dir / "o").string()}) == kUsage);
  CHECK(run_args({"son-fit", "--out", (dir / "none").string()}) == kMissingData);
  fs::remove_all(dir);
}

TEST_CASE("seed override changes the data")
{
  const fs::path a = scratch("seed_a"), b = scratch("seed_b");
  write_file(a / "c.json", R"({"axes": ["x"], "angles_deg": [0], "poisson": true})");
  REQUIRE(run_args({"simulate", "--config", (a / "c.json").string(), "--out", (a / "o").string(), "--seed", "1"}) == kOk);
  REQUIRE(run_args({"simulate", "--config", (a / "c.json").string(), "--out", (b / "o").string(), "--seed", "2"}) == kOk);
  CHECK(read_file(a / "o" / "counts" / "counts_x_000_I.csv") != read_file(b / "o" / "counts" / "counts_x_000_I.csv"));
  fs::remove_all(a);
  fs::remove_all(b);
}
