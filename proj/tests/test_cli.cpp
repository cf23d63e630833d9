#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <qdyn/analytic.hpp>
#include <qdyn/io.hpp>

#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#ifndef QDYN_CLI_PATH
#error "QDYN_CLI_PATH must point at the built qdyn binary"
#endif

#include <sys/wait.h>

namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string out;
  std::string err;
};

const fs::path& work_dir() {
  static const fs::path dir = [] {
    std::string tmpl = (fs::temp_directory_path() / "qdyn_cli_XXXXXX").string();
    REQUIRE(mkdtemp(tmpl.data()) != nullptr);
    return fs::path(tmpl);
  }();
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p);
  REQUIRE(f.good());
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

Run run_cli(const std::string& args, const std::string& env = "") {
  static int seq = 0;
  const fs::path out = work_dir() / ("stdout." + std::to_string(seq));
  const fs::path err = work_dir() / ("stderr." + std::to_string(seq));
  ++seq;
  std::string cmd = env.empty() ? "" : env + " ";
  cmd += "'" QDYN_CLI_PATH "' " + args + " >'" + out.string() + "' 2>'" +
         err.string() + "'";
  const int rc = std::system(cmd.c_str());
  Run r;
  r.code = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
  r.out = slurp(out);
  r.err = slurp(err);
  return r;
}

qdyn::Table parse_csv(const std::string& text) {
  std::istringstream ss(text);
  return qdyn::read_csv(ss);
}

double param_as_double(const qdyn::TableBlock& blk, const std::string& key) {
  for (const auto& [k, v] : blk.params)
    if (k == key) return std::stod(v);
  FAIL("missing param ", key);
  return 0.0;
}

std::string param_value(const qdyn::TableBlock& blk, const std::string& key) {
  for (const auto& [k, v] : blk.params)
    if (k == key) return v;
  return {};
}

fs::path out_file(const std::string& name) { return work_dir() / name; }

}  // namespace

TEST_CASE("bias tabulates the pulse together with its range") {
  const fs::path f = out_file("bias.csv");
  auto r = run_cli("bias --family family1 --xi 1 --tau-end 2 --grid 0.5 --out '" +
                   f.string() + "'");
  REQUIRE(r.code == 0);

  auto t = parse_csv(slurp(f));
  REQUIRE(t.columns == std::vector<std::string>{"tau", "epsilon"});
  REQUIRE(t.blocks.size() == 1);
  const auto& blk = t.blocks[0];
  REQUIRE(blk.rows.size() == 5);
  CHECK(blk.rows[0][0] == 0.0);
  CHECK(blk.rows[0][1] == doctest::Approx(-3.0).epsilon(1e-15));
  CHECK(param_as_double(blk, "epsilon_min") == doctest::Approx(-3.0));
  CHECK(param_as_double(blk, "epsilon_max") == doctest::Approx(1.0));
  CHECK(param_value(blk, "family") == "family1");
}

TEST_CASE("numeric family shorthand works") {
  auto a = run_cli("bias --family 1 --xi 0.5 --tau-end 1 --grid 1");
  auto b = run_cli("bias --family family1 --xi 0.5 --tau-end 1 --grid 1");
  REQUIRE(a.code == 0);
  REQUIRE(b.code == 0);
  CHECK(a.out == b.out);
}

TEST_CASE("evolve output round-trips through the CSV reader at full precision") {
  const fs::path f = out_file("traj.csv");
  auto r = run_cli(
      "evolve --family 1 --xi 0.5773502691896258 --tau-end 5 --grid 0.5 "
      "--out '" + f.string() + "'");
  REQUIRE(r.code == 0);

  const std::string text = slurp(f);
  auto t = parse_csv(text);
  REQUIRE(t.columns.size() == 7);
  CHECK(t.columns[0] == "tau");
  CHECK(t.columns[6] == "p_plus");
  REQUIRE(t.blocks.size() == 1);
  const auto& blk = t.blocks[0];
  REQUIRE(blk.rows.size() == 11);
  CHECK(blk.rows[0][5] == 0.0);                          // p_up starts at zero
  CHECK(blk.rows[0][4] == doctest::Approx(1.0));         // z starts at one
  CHECK(param_value(blk, "method") == "schrodinger");
  CHECK(param_as_double(blk, "steps") > 0);

  // Writing the parsed table again reproduces the file byte for byte,
  // so the 17 significant digits in the file are lossless.
  std::ostringstream rewritten;
  qdyn::write_csv(rewritten, t);
  CHECK(rewritten.str() == text);
}

TEST_CASE("json output carries the same content as csv") {
  const fs::path f = out_file("traj.json");
  auto r = run_cli(
      "evolve --family 1 --xi 0.5773502691896258 --tau-end 5 --grid 0.5 "
      "--format json --out '" + f.string() + "'");
  REQUIRE(r.code == 0);

  auto j = nlohmann::json::parse(slurp(f));
  REQUIRE(j["columns"].size() == 7);
  REQUIRE(j["blocks"].size() == 1);
  const auto& blk = j["blocks"][0];
  CHECK(blk["params"]["family"] == "family1");
  CHECK(blk["params"]["method"] == "schrodinger");
  REQUIRE(blk["rows"].size() == 11);
  CHECK(blk["rows"][0][5].get<double>() == 0.0);
}

TEST_CASE("stdout is the default destination") {
  auto r = run_cli("analytic --family 2 --xi 0.8 --tau-end 2 --grid 1");
  REQUIRE(r.code == 0);
  auto t = parse_csv(r.out);
  REQUIRE(t.columns == std::vector<std::string>{"tau", "p_up"});
  REQUIRE(t.blocks.size() == 1);
  const auto& rows = t.blocks[0].rows;
  REQUIRE(rows.size() == 3);
  CHECK(rows[0][1] == 0.0);
  CHECK(rows[2][1] == doctest::Approx(qdyn::p2_up(2.0, 0.8)).epsilon(1e-14));
}

TEST_CASE("usage errors exit with code 2") {
  CHECK(run_cli("").code == 2);
  CHECK(run_cli("evolve --bogus 1").code == 2);
  CHECK(run_cli("figure").code == 2);
  CHECK(run_cli("sweep --param xi --lo 1 --hi 0.5 --steps 10 "
                "--observable p_avg_analytic").code == 2);
  CHECK(run_cli("sweep --param xi --lo 0.1 --hi 1 --steps 1 "
                "--observable p_avg_analytic").code == 2);
  CHECK(run_cli("sweep --param xi --lo 0.1 --hi 1 --steps 10 "
                "--observable nonsense").code == 2);
  CHECK(run_cli("evolve --method carrier").code == 2);
}

TEST_CASE("validation errors exit with code 3") {
  auto fig5 = run_cli("figure fig5a");
  CHECK(fig5.code == 3);
  CHECK(fig5.err.find("b^2 = xi^2 - omega^2 > 0") != std::string::npos);
  CHECK(run_cli("figure fig5b").code == 3);

  auto mixed = run_cli(
      "evolve --method schrodinger --gamma-phi 0.1 --tau-end 1");
  CHECK(mixed.code == 3);

  CHECK(run_cli("bias --family family9").code == 3);
  CHECK(run_cli("bias --family 3 --xi 0.5 --omega 0.9 --tau-end 1").code == 3);
  CHECK(run_cli("average --method analytic --family 3 --xi 1").code == 3);
  CHECK(run_cli("evolve --tol 1e-15 --tau-end 1").code == 3);
}

TEST_CASE("verify passes and writes a machine-readable report") {
  const fs::path f = out_file("report.json");
  auto r = run_cli("verify --out '" + f.string() + "'");
  REQUIRE(r.code == 0);
  CHECK(r.err.find("[PASS]") != std::string::npos);
  CHECK(r.err.find("[FAIL]") == std::string::npos);

  auto j = nlohmann::json::parse(slurp(f));
  CHECK(j["all_pass"].get<bool>());
  CHECK(j["checks"].size() >= 6);
  CHECK(j["convergence_order"].get<double>() > 4.0);
}

TEST_CASE("the y-flip hook proves the self-checks can fail") {
  auto r = run_cli("verify --inject-y-flip");
  CHECK(r.code == 4);
  CHECK(r.err.find("[FAIL]") != std::string::npos);
  auto j = nlohmann::json::parse(r.out);
  CHECK(!j["all_pass"].get<bool>());
}

TEST_CASE("config files feed flags and the command line wins") {
  const fs::path cfg = out_file("qdyn.ini");
  std::ofstream(cfg) << "[bias]\nxi=2.5\n";

  auto from_cfg = run_cli("bias --config '" + cfg.string() +
                          "' --tau-end 1 --grid 1");
  REQUIRE(from_cfg.code == 0);
  auto t = parse_csv(from_cfg.out);
  CHECK(t.blocks[0].rows[0][1] == doctest::Approx(-7.5));  // -3 xi

  auto overridden = run_cli("bias --config '" + cfg.string() +
                            "' --xi 1 --tau-end 1 --grid 1");
  REQUIRE(overridden.code == 0);
  auto t2 = parse_csv(overridden.out);
  CHECK(t2.blocks[0].rows[0][1] == doctest::Approx(-3.0));
}

TEST_CASE("dump-config output feeds straight back in as a config file") {
  auto r = run_cli("evolve --xi 1.75 --dump-config");
  REQUIRE(r.code == 0);
  CHECK(r.out.find("[evolve]") != std::string::npos);
  CHECK(r.out.find("xi=1.75") != std::string::npos);
  CHECK(r.out.find("tol=") != std::string::npos);

  const fs::path cfg = out_file("dumped.ini");
  std::ofstream(cfg) << r.out;
  auto replay = run_cli("evolve --config '" + cfg.string() +
                        "' --tau-end 1 --grid 1");
  REQUIRE(replay.code == 0);
  auto t = parse_csv(replay.out);
  CHECK(param_as_double(t.blocks[0], "xi") == doctest::Approx(1.75));
}

TEST_CASE("relative outputs honor QDYN_OUT_DIR") {
  const fs::path sub = work_dir() / "redirected";
  fs::create_directories(sub);
  auto r = run_cli("bias --tau-end 1 --grid 1 --out rel.csv",
                   "QDYN_OUT_DIR='" + sub.string() + "'");
  REQUIRE(r.code == 0);
  CHECK(fs::exists(sub / "rel.csv"));
}

TEST_CASE("fig1a reproduces the monotone trapping curve") {
  const fs::path f = out_file("fig1a.csv");
  auto r = run_cli("figure fig1a --out '" + f.string() + "'");
  REQUIRE(r.code == 0);

  auto t = parse_csv(slurp(f));
  REQUIRE(t.blocks.size() == 3);
  bool found = false;
  for (const auto& blk : t.blocks) {
    const double xi = param_as_double(blk, "xi");
    for (const auto& row : blk.rows) {
      CHECK(row[1] >= -1e-12);
      CHECK(row[1] <= 1.0 + 1e-12);
    }
    if (std::abs(xi - 0.5773502691896258) > 1e-12) continue;
    found = true;
    REQUIRE(blk.rows.size() == 5001);
    for (std::size_t i = 1; i < blk.rows.size(); ++i)
      CHECK(blk.rows[i][1] >= blk.rows[i - 1][1] - 1e-9);
    CHECK(blk.rows.back()[1] == doctest::Approx(0.75).epsilon(1e-3));
  }
  CHECK(found);
}

TEST_CASE("fig3 drives the oscillating pulse close to full inversion") {
  const fs::path f = out_file("fig3.csv");
  auto r = run_cli("figure fig3 --out '" + f.string() + "'");
  REQUIRE(r.code == 0);

  auto t = parse_csv(slurp(f));
  REQUIRE(t.blocks.size() == 1);
  const auto& blk = t.blocks[0];
  CHECK(param_value(blk, "family") == "family3");
  CHECK(param_as_double(blk, "omega") == doctest::Approx(6.88));
  REQUIRE(blk.rows.size() == 6001);
  double pmax = 0.0;
  for (const auto& row : blk.rows) pmax = std::max(pmax, row[5]);
  CHECK(pmax == doctest::Approx(0.9596).epsilon(0.02));
}

TEST_CASE("fig4a shows damped oscillations converging to a plateau") {
  const fs::path f = out_file("fig4a.csv");
  auto r = run_cli("figure fig4a --out '" + f.string() + "'");
  REQUIRE(r.code == 0);

  auto t = parse_csv(slurp(f));
  REQUIRE(t.blocks.size() == 3);
  const auto& damped = t.blocks[2];
  CHECK(param_as_double(damped, "gamma_phi") == doctest::Approx(0.1));
  REQUIRE(damped.rows.size() == 2001);
  double pmax = 0.0, tmax = 0.0;
  for (const auto& row : damped.rows)
    if (row[5] > pmax) { pmax = row[5]; tmax = row[0]; }
  CHECK(pmax == doctest::Approx(0.661).epsilon(0.02));
  CHECK(tmax == doctest::Approx(2.805).epsilon(0.05));
  CHECK(damped.rows.back()[5] == doctest::Approx(0.4333).epsilon(0.02));
}

TEST_CASE("sweep scans the closed-form average across the sweet spot") {
  const fs::path f = out_file("sweep.csv");
  auto r = run_cli(
      "sweep --family 1 --param xi --lo 0.65 --hi 0.9 --steps 26 "
      "--observable p_avg_analytic --out '" + f.string() + "'");
  REQUIRE(r.code == 0);

  auto t = parse_csv(slurp(f));
  REQUIRE(t.columns == std::vector<std::string>{"xi", "p_avg_analytic"});
  const auto& rows = t.blocks[0].rows;
  REQUIRE(rows.size() == 26);
  double best_xi = 0.0, best = 0.0;
  for (const auto& row : rows) {
    CHECK(row[1] == doctest::Approx(qdyn::p1_avg(row[0])).epsilon(1e-14));
    if (row[1] > best) { best = row[1]; best_xi = row[0]; }
  }
  CHECK(best == doctest::Approx(0.78125).epsilon(1e-4));
  CHECK(best_xi == doctest::Approx(0.7745966692414834).epsilon(0.02));
}

TEST_CASE("numeric sweep observables agree with the closed-form mean") {
  const fs::path f = out_file("sweep_num.csv");
  auto r = run_cli(
      "sweep --family 1 --param xi --lo 0.7 --hi 0.8 --steps 3 "
      "--observable p_avg_numeric --window 200 --grid 0.05 --out '" +
      f.string() + "'");
  REQUIRE(r.code == 0);
  auto t = parse_csv(slurp(f));
  const auto& rows = t.blocks[0].rows;
  REQUIRE(rows.size() == 3);
  for (const auto& row : rows)
    CHECK(row[1] == doctest::Approx(qdyn::p1_avg(row[0])).epsilon(0.02));

  auto dur = run_cli(
      "sweep --family 1 --param xi --lo 0.55 --hi 0.6 --steps 2 "
      "--observable super_half_duration --tau-end 20 --grid 0.05");
  REQUIRE(dur.code == 0);
  auto td = parse_csv(dur.out);
  for (const auto& row : td.blocks[0].rows)
    CHECK(row[1] == doctest::Approx(20.0).epsilon(1e-9));
}

TEST_CASE("average reports both pictures of the long-time mean") {
  auto exact = run_cli("average --method analytic --family 1 --xi 0.6");
  REQUIRE(exact.code == 0);
  auto te = parse_csv(exact.out);
  REQUIRE(te.columns ==
          std::vector<std::string>{"xi", "window", "value", "error_estimate"});
  const auto& re = te.blocks[0].rows[0];
  CHECK(re[2] == doctest::Approx(qdyn::p1_avg(0.6)).epsilon(1e-15));

  auto numeric = run_cli(
      "average --family 1 --xi 0.6 --window 200 --grid 0.05");
  REQUIRE(numeric.code == 0);
  auto tn = parse_csv(numeric.out);
  const auto& rn = tn.blocks[0].rows[0];
  CHECK(rn[1] == doctest::Approx(200.0));
  CHECK(rn[2] == doctest::Approx(qdyn::p1_avg(0.6)).epsilon(0.02));
  CHECK(rn[3] > 0.0);
  CHECK(param_value(tn.blocks[0], "method") == "trajectory_mean");
}

TEST_CASE("repeated runs are byte-identical") {
  const fs::path a = out_file("det_a.csv"), b = out_file("det_b.csv");
  const std::string args =
      "evolve --family 1 --xi 0.9 --gamma-phi 0.05 --gamma-relax 0.02 "
      "--tau-end 10 --grid 0.1 --out '";
  REQUIRE(run_cli(args + a.string() + "'").code == 0);
  REQUIRE(run_cli(args + b.string() + "'").code == 0);
  CHECK(slurp(a) == slurp(b));

  // The sweep fans out over a thread pool; results must still be ordered.
  const fs::path sa = out_file("det_sa.csv"), sb = out_file("det_sb.csv");
  const std::string sweep_args =
      "sweep --family 1 --param xi --lo 0.7 --hi 0.8 --steps 4 "
      "--observable p_plus_max --tau-end 10 --grid 0.1 --out '";
  REQUIRE(run_cli(sweep_args + sa.string() + "'").code == 0);
  REQUIRE(run_cli(sweep_args + sb.string() + "'").code == 0);
  CHECK(slurp(sa) == slurp(sb));
}
