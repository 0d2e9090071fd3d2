#pragma once

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "igamass/geometry.hpp"

namespace igm {

/** Invalid configuration (unknown geometry, bad flag combination). The CLI
 * maps this to exit code 2. */
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct BenchmarkConfig {
    std::string geometry = "unit_square";  // catalog name or JSON file path
    std::vector<int> degrees = {2, 3, 4};
    std::vector<int> n_subs = {16, 32, 64};
    std::string precond = "mass";  // mass | chan-evans | jacobi | none | additive-schwarz
    double tol = 1e-8;
    int max_iter = 1000;
    bool compute_kappa = false;
    std::string out;              // output file; empty = stdout
    std::string format = "csv";   // csv | markdown
    int threads = 0;              // 0 = runtime default
    bool parallel_rows = false;   // compute rows concurrently, suppress timings
    std::int64_t nnz_cap = 200000000;  // skip rows whose estimated nnz exceeds this
    std::int64_t dense_guard = 4096;   // largest order for dense kappa in `bench`
    std::int64_t dense_cutoff = 2048;  // dense/Lanczos switch for `kappa`/`compare`
};

// Field checks that need no geometry; throws ConfigError.
void validate_config(const BenchmarkConfig& cfg);

// Catalog name, else a JSON geometry file; throws ConfigError when neither.
MultipatchGeometry resolve_geometry(const std::string& name_or_path);

/** Streams rows as CSV or width-aligned Markdown; rows are flushed as they
 * are written. */
class TableWriter {
  public:
    TableWriter(std::ostream& os, const std::string& format, std::vector<std::string> headers);
    void row(const std::vector<std::string>& cells);

  private:
    std::ostream& os_;
    bool markdown_ = false;
    std::vector<std::size_t> widths_;
    std::size_t ncols_ = 0;
};

struct RunSummary {
    int rows = 0;
    int solver_failures = 0;  // breakdowns or max-iteration exits
};

// Sweep over (degree, n_sub): assemble the mass matrix, set up the chosen
// preconditioner, and solve the L2 projection of f(x) = prod_k cos(pi x_k)
// with PCG. One table row per combination.
RunSummary run_benchmark(const BenchmarkConfig& cfg, std::ostream& os);

// kappa of the preconditioned operator per (degree, n_sub), with extreme
// eigenvalues and the error-reduction factor q.
RunSummary run_kappa(const BenchmarkConfig& cfg, std::ostream& os);

// Side-by-side of the diagonal-scaled Kronecker preconditioner and the
// Chan-Evans preconditioner: kappa of both, q for both, and q^2 of the
// former (its application costs half a Chan-Evans application).
RunSummary run_compare(const BenchmarkConfig& cfg, std::ostream& os);

// Catalog listing (name, dimension, patch count, regularity, interfaces).
void list_geometries(const BenchmarkConfig& cfg, std::ostream& os);

}  // namespace igm
