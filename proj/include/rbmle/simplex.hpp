#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace rbmle {

class LpError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// maximize objective . x  s.t.  eq_rows x = eq_rhs,  le_rows x <= le_rhs,  x >= lower_bounds.
struct LinearProgram {
    std::size_t num_vars = 0;
    std::vector<double> objective;
    std::vector<std::vector<double>> eq_rows;
    std::vector<double> eq_rhs;
    std::vector<std::vector<double>> le_rows;
    std::vector<double> le_rhs;
    std::vector<double> lower_bounds;  // empty means all zero

    explicit LinearProgram(std::size_t n = 0) : num_vars(n), objective(n, 0.0) {}

    void add_eq(std::vector<double> row, double rhs);
    void add_le(std::vector<double> row, double rhs);
    void validate() const;
};

enum class LpStatus { optimal, infeasible, unbounded };

const char* to_string(LpStatus s);

struct LpResult {
    LpStatus status = LpStatus::infeasible;
    double value = 0.0;
    std::vector<double> x;
    std::vector<double> eq_duals;  // free sign
    std::vector<double> le_duals;  // >= 0 at optimum
    double phase_one_infeasibility = 0.0;
    std::size_t iterations = 0;
};

struct SimplexOptions {
    double pivot_tol = 1e-10;
    double feasibility_tol = 1e-8;
    std::size_t max_iterations = 100000;
};

/// Dense two-phase primal simplex with Bland's anti-cycling rule. Columns are
/// ordered structural, slack, artificial; ties everywhere go to the lowest index.
/// An instance keeps scratch state from its last solve and must not be shared
/// between threads.
class SimplexSolver {
public:
    explicit SimplexSolver(SimplexOptions options = {}) : options_(options) {}

    LpResult solve(const LinearProgram& program);

    /// Plain-text rendering of the final tableau of the last solve.
    std::string tableau_dump() const;

private:
    void pivot(std::size_t row, std::size_t col);
    bool run_phase(std::size_t allowed_cols, LpResult& result);
    double& at(std::size_t r, std::size_t c) { return tableau_[r * width_ + c]; }
    double at(std::size_t r, std::size_t c) const { return tableau_[r * width_ + c]; }

    SimplexOptions options_;
    std::size_t rows_ = 0;
    std::size_t width_ = 0;  // columns + rhs
    std::size_t num_struct_ = 0;
    std::size_t num_slack_ = 0;
    std::size_t num_art_ = 0;
    std::vector<double> tableau_;
    std::vector<double> reduced_;  // reduced cost row
    std::vector<double> costs_;
    std::vector<std::size_t> basis_;
};

/// Convenience wrapper around a fresh SimplexSolver.
LpResult solve_lp(const LinearProgram& program, SimplexOptions options = {});

}  // namespace rbmle
