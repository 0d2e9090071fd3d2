#include <array>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"

namespace {

struct RunResult {
    int exit_code = -1;
    std::string out;  // stdout and stderr combined
};

RunResult run_cli(const std::string& args) {
    const std::string cmd = std::string(IGM_CLI_PATH) + " " + args + " 2>&1";
    std::FILE* pipe = ::popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    RunResult r;
    std::array<char, 4096> buf;
    while (std::fgets(buf.data(), static_cast<int>(buf.size()), pipe)) r.out += buf.data();
    const int status = ::pclose(pipe);
    r.exit_code = (status >= 0 && WIFEXITED(status)) ? WEXITSTATUS(status) : -1;
    return r;
}

std::vector<std::string> lines_of(const std::string& s) {
    std::vector<std::string> lines;
    std::istringstream in(s);
    std::string line;
    while (std::getline(in, line))
        if (!line.empty()) lines.push_back(line);
    return lines;
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, ',')) cells.push_back(cell);
    return cells;
}

}  // namespace

TEST_CASE("geometries subcommand lists the whole catalog") {
    const RunResult r = run_cli("geometries");
    CHECK(r.exit_code == 0);
    const auto lines = lines_of(r.out);
    REQUIRE(lines.size() == 11);  // header + 10 geometries
    CHECK(lines[0] == "name,dim,patches,regular,interfaces");
    CHECK(r.out.find("unit_square") != std::string::npos);
    CHECK(r.out.find("multipatch_star_5") != std::string::npos);
}

TEST_CASE("bench emits the documented csv columns and solves the identity in one step") {
    const RunResult r = run_cli("bench --geometry unit_square --degrees 2,3 --nsub 8");
    CHECK(r.exit_code == 0);
    const auto lines = lines_of(r.out);
    REQUIRE(lines.size() == 3);
    CHECK(lines[0] ==
          "geometry,precond,p,n_sub,dofs,nnz,setup_s,solve_s,iters,relres,kappa,status");
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const auto cells = split_csv(lines[i]);
        REQUIRE(cells.size() >= 12);
        CHECK(cells[0] == "unit_square");
        CHECK(cells[1] == "mass");
        CHECK(cells[8] == "1");  // one iteration on the identity map
        CHECK(cells[11] == "converged");
    }
}

TEST_CASE("markdown output renders an aligned table") {
    const RunResult r = run_cli("bench --geometry unit_square --degrees 2 --nsub 8 --format markdown");
    CHECK(r.exit_code == 0);
    const auto lines = lines_of(r.out);
    REQUIRE(lines.size() >= 3);
    CHECK(lines[0].front() == '|');
    CHECK(lines[1].find("---") != std::string::npos);
    CHECK(lines[2].find("| unit_square") == 0);
}

TEST_CASE("kappa output is deterministic across runs") {
    const std::string args = "kappa --geometry kite_like --degrees 2,3 --nsub 8,16";
    const RunResult a = run_cli(args);
    const RunResult b = run_cli(args);
    CHECK(a.exit_code == 0);
    CHECK(a.out == b.out);
    CHECK(lines_of(a.out).size() == 5);
}

TEST_CASE("compare reports both preconditioners with the expected ordering") {
    const RunResult r = run_cli("compare --geometry quarter_annulus --degrees 2 --nsub 8");
    CHECK(r.exit_code == 0);
    const auto lines = lines_of(r.out);
    REQUIRE(lines.size() == 2);
    CHECK(lines[0] == "geometry,p,n_sub,dofs,kappa_mass,kappa_ce,q_mass,q_ce,q_mass_sq");
    const auto cells = split_csv(lines[1]);
    REQUIRE(cells.size() == 9);
    const double kappa_mass = std::stod(cells[4]);
    const double kappa_ce = std::stod(cells[5]);
    CHECK(kappa_mass > 1.0);
    CHECK(kappa_ce >= 1.0);
    CHECK(kappa_ce < kappa_mass);
}

TEST_CASE("config errors exit with code 2 and a diagnostic") {
    CHECK(run_cli("bench --geometry no_such_geometry").exit_code == 2);
    CHECK(run_cli("bench --geometry no_such_geometry").out.find("config error") !=
          std::string::npos);
    CHECK(run_cli("bench --precond warp-drive").exit_code == 2);
    CHECK(run_cli("bench --nsub 2").exit_code == 2);
    CHECK(run_cli("bench --degrees 99").exit_code == 2);
    CHECK(run_cli("bench --tol 2.0").exit_code == 2);
    CHECK(run_cli("bench --format yaml").exit_code == 2);
    CHECK(run_cli("bench --geometry multipatch_star_5 --precond mass").exit_code == 2);
    CHECK(run_cli("kappa --geometry disc_one_singularity --precond chan-evans").exit_code == 2);
    CHECK(run_cli("compare --geometry multipatch_square_2x2").exit_code == 2);
    CHECK(run_cli("").exit_code == 2);             // missing subcommand
    CHECK(run_cli("--bogus-flag").exit_code == 2);  // unknown flag
}

TEST_CASE("an unconverged solve exits with code 3") {
    const RunResult r =
        run_cli("bench --geometry kite_like --precond none --degrees 3 --nsub 16 --max-iter 2");
    CHECK(r.exit_code == 3);
    CHECK(r.out.find("max_iterations") != std::string::npos);
}

TEST_CASE("config files provide defaults that explicit flags override") {
    const std::string path = "/tmp/igm_cli_test_config.toml";
    {
        std::ofstream out(path);
        out << "# benchmark defaults\n";
        out << "geometry = kite_like\n";
        out << "degrees = 2\n";
        out << "nsub = 8\n";
        out << "format = csv   ; trailing comment\n";
    }
    const RunResult file_only = run_cli("bench --config " + path);
    CHECK(file_only.exit_code == 0);
    const auto lines = lines_of(file_only.out);
    REQUIRE(lines.size() == 2);
    CHECK(split_csv(lines[1])[0] == "kite_like");
    CHECK(split_csv(lines[1])[2] == "2");
    CHECK(split_csv(lines[1])[3] == "8");

    const RunResult overridden = run_cli("bench --config " + path + " --geometry unit_square");
    const auto lines2 = lines_of(overridden.out);
    REQUIRE(lines2.size() == 2);
    CHECK(split_csv(lines2[1])[0] == "unit_square");
    CHECK(split_csv(lines2[1])[2] == "2");  // file value still applies

    CHECK(run_cli("bench --config /tmp/igm_missing_config.toml").exit_code == 2);
    {
        std::ofstream out(path);
        out << "no_such_key = 1\n";
    }
    CHECK(run_cli("bench --config " + path).exit_code == 2);
    {
        std::ofstream out(path);
        out << "just a line without an equals sign\n";
    }
    CHECK(run_cli("bench --config " + path).exit_code == 2);
    std::remove(path.c_str());
}

TEST_CASE("results can be written to a file") {
    const std::string path = "/tmp/igm_cli_test_out.csv";
    std::remove(path.c_str());
    const RunResult r =
        run_cli("bench --geometry unit_square --degrees 2 --nsub 8 --out " + path);
    CHECK(r.exit_code == 0);
    CHECK(r.out.empty());
    std::ifstream in(path);
    REQUIRE(in.good());
    std::string header;
    std::getline(in, header);
    CHECK(header ==
          "geometry,precond,p,n_sub,dofs,nnz,setup_s,solve_s,iters,relres,kappa,status");
    std::remove(path.c_str());
}

TEST_CASE("parallel row mode suppresses the timing columns") {
    const RunResult r = run_cli(
        "bench --geometry unit_square --degrees 2,3 --nsub 8 --parallel-rows --threads 2");
    CHECK(r.exit_code == 0);
    const auto lines = lines_of(r.out);
    REQUIRE(lines.size() == 3);
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const auto cells = split_csv(lines[i]);
        CHECK(cells[6].empty());  // setup_s
        CHECK(cells[7].empty());  // solve_s
    }
}

TEST_CASE("json geometry files load through the geometry flag") {
    const RunResult r = run_cli(
        "bench --geometry " + std::string(IGM_DATA_DIR) + "/kite_like.json --degrees 2 --nsub 8");
    CHECK(r.exit_code == 0);
    CHECK(lines_of(r.out).size() == 2);
    CHECK(run_cli("bench --geometry /tmp/igm_not_there.json").exit_code == 2);
}

TEST_CASE("the kappa flag records condition numbers only inside the dense guard") {
    const RunResult r =
        run_cli("bench --geometry kite_like --degrees 2 --nsub 8 --kappa");
    CHECK(r.exit_code == 0);
    const auto cells = split_csv(lines_of(r.out)[1]);
    const double kappa = std::stod(cells[10]);
    CHECK(kappa > 1.0);
    CHECK(kappa < 1.5);
}
