#include "CLI11.hpp"

#include <cctype>
#include <fstream>
#include <functional>
#include <iostream>
#include <string>
#include <vector>

#include "igamass/bench.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace {

std::string trim(const std::string& s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

std::string unquote(const std::string& s) {
    if (s.size() >= 2 && ((s.front() == '"' && s.back() == '"') ||
                          (s.front() == '\'' && s.back() == '\'')))
        return s.substr(1, s.size() - 2);
    return s;
}

long long parse_int(const std::string& key, const std::string& value) {
    std::size_t pos = 0;
    long long v = 0;
    try {
        v = std::stoll(value, &pos);
    } catch (const std::exception&) {
        pos = 0;
    }
    if (pos != value.size() || value.empty())
        throw igm::ConfigError("config file: key '" + key + "' needs an integer, got '" + value +
                               "'");
    return v;
}

double parse_double(const std::string& key, const std::string& value) {
    std::size_t pos = 0;
    double v = 0.0;
    try {
        v = std::stod(value, &pos);
    } catch (const std::exception&) {
        pos = 0;
    }
    if (pos != value.size() || value.empty())
        throw igm::ConfigError("config file: key '" + key + "' needs a number, got '" + value +
                               "'");
    return v;
}

bool parse_bool(const std::string& key, const std::string& value) {
    std::string v;
    for (char c : value) v.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw igm::ConfigError("config file: key '" + key + "' needs a boolean, got '" + value + "'");
}

std::vector<int> parse_int_list(const std::string& key, const std::string& value) {
    std::vector<int> out;
    std::size_t start = 0;
    while (start <= value.size()) {
        const std::size_t comma = value.find(',', start);
        const std::string item =
            trim(value.substr(start, comma == std::string::npos ? comma : comma - start));
        out.push_back(static_cast<int>(parse_int(key, item)));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    if (out.empty())
        throw igm::ConfigError("config file: key '" + key + "' needs a comma separated list");
    return out;
}

// Key=value file with '#'/';' comments; keys mirror the long flag names.
// A key is skipped when the matching flag was given on the command line.
void apply_config_file(const std::string& path, igm::BenchmarkConfig& cfg, const CLI::App& cmd) {
    std::ifstream in(path);
    if (!in) throw igm::ConfigError("cannot open config file '" + path + "'");
    const auto cli_set = [&cmd](const char* flag) { return cmd.count(flag) > 0; };
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::size_t comment = line.find_first_of("#;");
        if (comment != std::string::npos) line.erase(comment);
        line = trim(line);
        if (line.empty()) continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw igm::ConfigError("config file: line " + std::to_string(lineno) +
                                   " is not key=value: '" + line + "'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = unquote(trim(line.substr(eq + 1)));
        if (key == "geometry") {
            if (!cli_set("--geometry")) cfg.geometry = value;
        } else if (key == "degrees") {
            if (!cli_set("--degrees")) cfg.degrees = parse_int_list(key, value);
        } else if (key == "nsub") {
            if (!cli_set("--nsub")) cfg.n_subs = parse_int_list(key, value);
        } else if (key == "precond") {
            if (!cli_set("--precond")) cfg.precond = value;
        } else if (key == "tol") {
            if (!cli_set("--tol")) cfg.tol = parse_double(key, value);
        } else if (key == "max-iter") {
            if (!cli_set("--max-iter")) cfg.max_iter = static_cast<int>(parse_int(key, value));
        } else if (key == "kappa") {
            if (!cli_set("--kappa")) cfg.compute_kappa = parse_bool(key, value);
        } else if (key == "out") {
            if (!cli_set("--out")) cfg.out = value;
        } else if (key == "format") {
            if (!cli_set("--format")) cfg.format = value;
        } else if (key == "threads") {
            if (!cli_set("--threads")) cfg.threads = static_cast<int>(parse_int(key, value));
        } else if (key == "parallel-rows") {
            if (!cli_set("--parallel-rows")) cfg.parallel_rows = parse_bool(key, value);
        } else if (key == "nnz-cap") {
            if (!cli_set("--nnz-cap")) cfg.nnz_cap = parse_int(key, value);
        } else {
            throw igm::ConfigError("config file: unknown key '" + key + "' on line " +
                                   std::to_string(lineno));
        }
    }
}

void add_common(CLI::App* cmd, igm::BenchmarkConfig& cfg, std::string& config_path) {
    cmd->add_option("--config", config_path,
                    "Key=value file with defaults for these flags (CLI flags win)");
    cmd->add_option("--geometry", cfg.geometry, "Catalog geometry name or JSON file")
        ->capture_default_str();
    cmd->add_option("--degrees", cfg.degrees, "Spline degrees to sweep (comma separated)")
        ->delimiter(',')
        ->capture_default_str();
    cmd->add_option("--nsub", cfg.n_subs, "Subdivisions per direction to sweep (comma separated)")
        ->delimiter(',')
        ->capture_default_str();
    cmd->add_option("--precond", cfg.precond, "mass|chan-evans|jacobi|none|additive-schwarz")
        ->capture_default_str();
    cmd->add_option("--tol", cfg.tol, "PCG relative residual tolerance")->capture_default_str();
    cmd->add_option("--max-iter", cfg.max_iter, "PCG iteration cap")->capture_default_str();
    cmd->add_flag("--kappa", cfg.compute_kappa,
                  "Report the condition number when the order fits the dense guard");
    cmd->add_option("--out", cfg.out, "Write the table to this file instead of stdout");
    cmd->add_option("--format", cfg.format, "csv|markdown")->capture_default_str();
    cmd->add_option("--threads", cfg.threads, "OpenMP thread count (0 = runtime default)")
        ->capture_default_str();
    cmd->add_flag("--parallel-rows", cfg.parallel_rows,
                  "Compute rows concurrently; timing columns are suppressed");
    cmd->add_option("--nnz-cap", cfg.nnz_cap,
                    "Skip rows whose estimated matrix nnz exceeds this (marked '*')")
        ->capture_default_str();
}

int run_to_output(const igm::BenchmarkConfig& cfg,
                  const std::function<igm::RunSummary(const igm::BenchmarkConfig&, std::ostream&)>&
                      fn) {
    std::ofstream file;
    std::ostream* os = &std::cout;
    if (!cfg.out.empty()) {
        file.open(cfg.out);
        if (!file) throw igm::ConfigError("cannot open output file '" + cfg.out + "'");
        os = &file;
    }
    const igm::RunSummary s = fn(cfg, *os);
    return s.solver_failures > 0 ? 3 : 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"B-spline Galerkin mass matrices: Kronecker preconditioner benchmarks"};
    app.require_subcommand(1);
    igm::BenchmarkConfig cfg;
    std::string config_path;

    CLI::App* bench = app.add_subcommand("bench", "Assemble, precondition, and solve with PCG");
    add_common(bench, cfg, config_path);
    CLI::App* kappa = app.add_subcommand("kappa", "Condition numbers of preconditioned operators");
    add_common(kappa, cfg, config_path);
    CLI::App* compare =
        app.add_subcommand("compare", "Diagonal-scaled Kronecker vs Chan-Evans preconditioner");
    add_common(compare, cfg, config_path);
    CLI::App* geoms = app.add_subcommand("geometries", "List the geometry catalog");
    add_common(geoms, cfg, config_path);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        CLI::App* active = bench->parsed()    ? bench
                           : kappa->parsed()  ? kappa
                           : compare->parsed() ? compare
                                               : geoms;
        if (!config_path.empty()) apply_config_file(config_path, cfg, *active);

#ifdef _OPENMP
        if (cfg.threads > 0) omp_set_num_threads(cfg.threads);
#endif

        if (bench->parsed()) return run_to_output(cfg, igm::run_benchmark);
        if (kappa->parsed()) return run_to_output(cfg, igm::run_kappa);
        if (compare->parsed()) return run_to_output(cfg, igm::run_compare);
        if (geoms->parsed())
            return run_to_output(cfg, [](const igm::BenchmarkConfig& c, std::ostream& os) {
                igm::list_geometries(c, os);
                return igm::RunSummary{};
            });
    } catch (const igm::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
