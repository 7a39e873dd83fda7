#include "rbmle/simplex.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include <Eigen/Dense>

namespace rbmle {

namespace {

constexpr double kDualTol = 1e-9;

std::string column_name(std::size_t j, std::size_t num_struct, std::size_t num_slack) {
    if (j < num_struct) return "x" + std::to_string(j);
    if (j < num_struct + num_slack) return "s" + std::to_string(j - num_struct);
    return "a" + std::to_string(j - num_struct - num_slack);
}

}  // namespace

const char* to_string(LpStatus s) {
    switch (s) {
        case LpStatus::optimal: return "optimal";
        case LpStatus::infeasible: return "infeasible";
        case LpStatus::unbounded: return "unbounded";
    }
    return "unknown";
}

void LinearProgram::add_eq(std::vector<double> row, double rhs) {
    if (row.size() != num_vars) throw LpError("equality row has wrong length");
    eq_rows.push_back(std::move(row));
    eq_rhs.push_back(rhs);
}

void LinearProgram::add_le(std::vector<double> row, double rhs) {
    if (row.size() != num_vars) throw LpError("inequality row has wrong length");
    le_rows.push_back(std::move(row));
    le_rhs.push_back(rhs);
}

void LinearProgram::validate() const {
    auto finite = [](double v) { return std::isfinite(v); };
    if (objective.size() != num_vars) throw LpError("objective length does not match num_vars");
    if (eq_rows.size() != eq_rhs.size() || le_rows.size() != le_rhs.size()) {
        throw LpError("constraint rows and right-hand sides disagree in count");
    }
    for (const auto& r : eq_rows) {
        if (r.size() != num_vars) throw LpError("equality row has wrong length");
        for (double v : r) if (!finite(v)) throw LpError("non-finite constraint coefficient");
    }
    for (const auto& r : le_rows) {
        if (r.size() != num_vars) throw LpError("inequality row has wrong length");
        for (double v : r) if (!finite(v)) throw LpError("non-finite constraint coefficient");
    }
    for (double v : eq_rhs) if (!finite(v)) throw LpError("non-finite right-hand side");
    for (double v : le_rhs) if (!finite(v)) throw LpError("non-finite right-hand side");
    for (double v : objective) if (!finite(v)) throw LpError("non-finite objective coefficient");
    if (!lower_bounds.empty()) {
        if (lower_bounds.size() != num_vars) throw LpError("lower_bounds has wrong length");
        for (double v : lower_bounds) if (!finite(v)) throw LpError("non-finite lower bound");
    }
}

void SimplexSolver::pivot(std::size_t row, std::size_t col) {
    const double p = at(row, col);
    for (std::size_t j = 0; j < width_; ++j) at(row, j) /= p;
    at(row, col) = 1.0;
    for (std::size_t i = 0; i < rows_; ++i) {
        if (i == row) continue;
        const double f = at(i, col);
        if (f == 0.0) continue;
        for (std::size_t j = 0; j < width_; ++j) at(i, j) -= f * at(row, j);
        at(i, col) = 0.0;
    }
    const double f = reduced_[col];
    if (f != 0.0) {
        for (std::size_t j = 0; j + 1 < width_; ++j) reduced_[j] -= f * at(row, j);
        reduced_[col] = 0.0;
    }
    basis_[row] = col;
}

bool SimplexSolver::run_phase(std::size_t allowed_cols, LpResult& result) {
    const std::size_t rhs = width_ - 1;
    while (true) {
        if (result.iterations >= options_.max_iterations) {
            throw LpError("simplex iteration limit reached (" + std::to_string(result.iterations) + ")");
        }
        // Bland: lowest-index improving column.
        std::size_t enter = allowed_cols;
        for (std::size_t j = 0; j < allowed_cols; ++j) {
            if (reduced_[j] > kDualTol) {
                enter = j;
                break;
            }
        }
        if (enter == allowed_cols) return true;

        std::size_t leave = rows_;
        double best = 0.0;
        for (std::size_t i = 0; i < rows_; ++i) {
            const double a = at(i, enter);
            if (a <= options_.pivot_tol) continue;
            const double ratio = std::max(0.0, at(i, rhs)) / a;
            if (leave == rows_ || ratio < best - 1e-12 * std::max(1.0, best) ||
                (ratio <= best + 1e-12 * std::max(1.0, best) && basis_[i] < basis_[leave])) {
                if (leave == rows_ || ratio < best) best = ratio;
                leave = i;
            }
        }
        if (leave == rows_) return false;
        pivot(leave, enter);
        ++result.iterations;
    }
}

LpResult SimplexSolver::solve(const LinearProgram& program) {
    program.validate();
    LpResult result;
    const std::size_t n = program.num_vars;
    const std::size_t m_eq = program.eq_rows.size();
    const std::size_t m_le = program.le_rows.size();
    std::vector<double> lb = program.lower_bounds.empty() ? std::vector<double>(n, 0.0)
                                                          : program.lower_bounds;

    rows_ = m_eq + m_le;
    num_struct_ = n;
    num_slack_ = m_le;

    // Standard-form rows after shifting by the lower bounds and flipping to rhs >= 0.
    std::vector<std::vector<double>> coef(rows_, std::vector<double>(n + m_le, 0.0));
    std::vector<double> rhs(rows_, 0.0);
    std::vector<double> sign(rows_, 1.0);
    std::vector<bool> needs_art(rows_, true);
    for (std::size_t i = 0; i < rows_; ++i) {
        const bool is_eq = i < m_eq;
        const auto& row = is_eq ? program.eq_rows[i] : program.le_rows[i - m_eq];
        double b = is_eq ? program.eq_rhs[i] : program.le_rhs[i - m_eq];
        for (std::size_t j = 0; j < n; ++j) {
            coef[i][j] = row[j];
            b -= row[j] * lb[j];
        }
        if (!is_eq) coef[i][n + (i - m_eq)] = 1.0;
        if (b < 0.0) {
            sign[i] = -1.0;
            b = -b;
            for (double& v : coef[i]) v = -v;
        }
        rhs[i] = b;
        needs_art[i] = is_eq || sign[i] < 0.0;
    }
    num_art_ = static_cast<std::size_t>(std::count(needs_art.begin(), needs_art.end(), true));
    const std::size_t cols = n + m_le + num_art_;
    width_ = cols + 1;
    tableau_.assign(rows_ * width_, 0.0);
    basis_.assign(rows_, 0);
    std::vector<std::size_t> origin(rows_);
    std::iota(origin.begin(), origin.end(), std::size_t{0});

    std::size_t art = 0;
    for (std::size_t i = 0; i < rows_; ++i) {
        for (std::size_t j = 0; j < n + m_le; ++j) at(i, j) = coef[i][j];
        at(i, cols) = rhs[i];
        if (needs_art[i]) {
            at(i, n + m_le + art) = 1.0;
            basis_[i] = n + m_le + art;
            ++art;
        } else {
            basis_[i] = n + (i - m_eq);
        }
    }

    auto price = [&]() {
        reduced_.assign(width_, 0.0);
        for (std::size_t j = 0; j < cols; ++j) {
            double d = costs_[j];
            for (std::size_t i = 0; i < rows_; ++i) d -= costs_[basis_[i]] * at(i, j);
            reduced_[j] = d;
        }
    };

    // Phase I: maximize -sum(artificials).
    if (num_art_ > 0) {
        costs_.assign(cols, 0.0);
        for (std::size_t j = n + m_le; j < cols; ++j) costs_[j] = -1.0;
        price();
        run_phase(cols, result);
        double infeas = 0.0;
        for (std::size_t i = 0; i < rows_; ++i) {
            if (basis_[i] >= n + m_le) infeas += at(i, cols);
        }
        result.phase_one_infeasibility = infeas;
        if (infeas > options_.feasibility_tol) {
            result.status = LpStatus::infeasible;
            return result;
        }
        // Drive remaining (zero-level) artificials out; drop rows that are redundant.
        for (std::size_t i = 0; i < rows_;) {
            if (basis_[i] < n + m_le) {
                ++i;
                continue;
            }
            std::size_t col = n + m_le;
            for (std::size_t j = 0; j < n + m_le; ++j) {
                if (std::abs(at(i, j)) > options_.pivot_tol) {
                    col = j;
                    break;
                }
            }
            if (col < n + m_le) {
                pivot(i, col);
                ++i;
                continue;
            }
            tableau_.erase(tableau_.begin() + static_cast<std::ptrdiff_t>(i * width_),
                           tableau_.begin() + static_cast<std::ptrdiff_t>((i + 1) * width_));
            basis_.erase(basis_.begin() + static_cast<std::ptrdiff_t>(i));
            origin.erase(origin.begin() + static_cast<std::ptrdiff_t>(i));
            --rows_;
        }
    }

    // Phase II on the real objective; artificial columns may not re-enter.
    costs_.assign(cols, 0.0);
    for (std::size_t j = 0; j < n; ++j) costs_[j] = program.objective[j];
    price();
    if (!run_phase(n + m_le, result)) {
        result.status = LpStatus::unbounded;
        return result;
    }

    result.status = LpStatus::optimal;
    result.x = lb;
    for (std::size_t i = 0; i < rows_; ++i) {
        if (basis_[i] < n) result.x[basis_[i]] += std::max(0.0, at(i, cols));
    }
    result.value = 0.0;
    for (std::size_t j = 0; j < n; ++j) result.value += program.objective[j] * result.x[j];

    // Duals from B^T y = c_B on the surviving rows, mapped back to original row signs.
    result.eq_duals.assign(m_eq, 0.0);
    result.le_duals.assign(m_le, 0.0);
    if (rows_ > 0) {
        const auto r = static_cast<Eigen::Index>(rows_);
        Eigen::MatrixXd bt(r, r);
        Eigen::VectorXd cb(r);
        for (Eigen::Index k = 0; k < r; ++k) {
            const std::size_t col = basis_[static_cast<std::size_t>(k)];
            cb(k) = costs_[col];
            for (Eigen::Index i = 0; i < r; ++i) {
                const std::size_t orow = origin[static_cast<std::size_t>(i)];
                bt(k, i) = col < n + m_le ? coef[orow][col] : 0.0;
            }
        }
        Eigen::FullPivLU<Eigen::MatrixXd> lu(bt);
        if (!lu.isInvertible()) {
            throw LpError("final basis is numerically singular (" + std::to_string(rows_) + " rows)");
        }
        Eigen::VectorXd y = lu.solve(cb);
        for (Eigen::Index i = 0; i < r; ++i) {
            const std::size_t orow = origin[static_cast<std::size_t>(i)];
            const double d = sign[orow] * y(i);
            if (orow < m_eq) {
                result.eq_duals[orow] = d;
            } else {
                result.le_duals[orow - m_eq] = std::max(0.0, d);
            }
        }
    }
    return result;
}

std::string SimplexSolver::tableau_dump() const {
    std::ostringstream out;
    const std::size_t cols = width_ == 0 ? 0 : width_ - 1;
    char buf[64];
    out << "basis";
    for (std::size_t j = 0; j < cols; ++j) {
        std::snprintf(buf, sizeof buf, " %10s", column_name(j, num_struct_, num_slack_).c_str());
        out << buf;
    }
    out << " |        rhs\n";
    for (std::size_t i = 0; i < rows_; ++i) {
        std::snprintf(buf, sizeof buf, "%5s", column_name(basis_[i], num_struct_, num_slack_).c_str());
        out << buf;
        for (std::size_t j = 0; j < cols; ++j) {
            std::snprintf(buf, sizeof buf, " %10.4g", at(i, j));
            out << buf;
        }
        std::snprintf(buf, sizeof buf, " | %10.4g\n", at(i, cols));
        out << buf;
    }
    out << "    d";
    for (std::size_t j = 0; j < cols && j < reduced_.size(); ++j) {
        std::snprintf(buf, sizeof buf, " %10.4g", reduced_[j]);
        out << buf;
    }
    out << '\n';
    return out.str();
}

LpResult solve_lp(const LinearProgram& program, SimplexOptions options) {
    SimplexSolver solver(options);
    return solver.solve(program);
}

}  // namespace rbmle
