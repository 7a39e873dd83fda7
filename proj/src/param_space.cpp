#include "rbmle/param_space.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace rbmle {

namespace {

constexpr std::size_t kOverflow = std::numeric_limits<std::size_t>::max();

std::size_t checked_mul(std::size_t a, std::size_t b) {
    if (a != 0 && b > kOverflow / a) return kOverflow;
    return a * b;
}

double linf(std::span<const double> a, std::span<const double> b) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
    return d;
}

// First index attaining the minimum l-infinity distance to `target`.
std::size_t nearest_in(const std::vector<std::vector<double>>& points, std::span<const double> target) {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < points.size(); ++i) {
        const double d = linf(points[i], target);
        if (d < best_d) {
            best_d = d;
            best = i;
        }
    }
    return best;
}

}  // namespace

ParameterSpace ParameterSpace::from_kernel(const Kernel& kernel, double p_min) {
    ParameterSpace s;
    s.num_states = kernel.num_states();
    s.num_actions = kernel.num_actions();
    s.p_min = p_min;
    s.support.resize(kernel.data().size());
    for (std::size_t i = 0; i < kernel.data().size(); ++i) s.support[i] = kernel.data()[i] > 0.0;
    s.validate();
    return s;
}

std::size_t ParameterSpace::row_support(std::size_t x, std::size_t u) const {
    std::size_t n = 0;
    for (std::size_t y = 0; y < num_states; ++y) n += supported(x, u, y) ? 1 : 0;
    return n;
}

void ParameterSpace::validate() const {
    if (num_states == 0 || num_actions == 0) throw ModelError("parameter space has no states or actions");
    if (support.size() != num_states * num_actions * num_states) {
        throw ModelError("support mask has wrong size");
    }
    if (!(p_min > 0.0 && p_min <= 1.0)) throw ModelError("p_min must lie in (0,1]");
    for (std::size_t x = 0; x < num_states; ++x) {
        for (std::size_t u = 0; u < num_actions; ++u) {
            const std::size_t s = row_support(x, u);
            if (s == 0) throw ModelError("row with empty support");
            if (p_min * static_cast<double>(s) > 1.0 + 1e-12) {
                throw ModelError("p_min times row support exceeds one: parameter space is empty");
            }
        }
    }
}

bool ParameterSpace::contains(const Kernel& theta, bool enforce_p_min) const {
    if (theta.num_states() != num_states || theta.num_actions() != num_actions) return false;
    for (std::size_t i = 0; i < support.size(); ++i) {
        const double v = theta.data()[i];
        if (!support[i] && v != 0.0) return false;
        if (support[i] && enforce_p_min && v < p_min - 1e-12) return false;
    }
    try {
        theta.validate(1e-9);
    } catch (const ModelError&) {
        return false;
    }
    return true;
}

std::size_t lattice_divisions(double epsilon) {
    if (!(epsilon > 0.0 && epsilon <= 1.0)) throw ModelError("lattice resolution must lie in (0,1]");
    return static_cast<std::size_t>(std::ceil(1.0 / epsilon - 1e-9));
}

std::vector<std::vector<double>> simplex_lattice(std::size_t dim, std::size_t divisions) {
    std::vector<std::vector<double>> out;
    if (dim == 0) return out;
    const double m = static_cast<double>(divisions);
    std::vector<std::size_t> k(dim, 0);
    // Odometer over the first dim-1 coordinates, rejecting sums above m.
    while (true) {
        std::size_t used = 0;
        for (std::size_t i = 0; i + 1 < dim; ++i) used += k[i];
        if (used <= divisions) {
            std::vector<double> p(dim);
            double acc = 0.0;
            for (std::size_t i = 0; i + 1 < dim; ++i) {
                p[i] = static_cast<double>(k[i]) / m;
                acc += p[i];
            }
            p[dim - 1] = used == divisions ? 0.0 : 1.0 - acc;
            out.push_back(std::move(p));
        }
        if (dim == 1) break;
        std::size_t pos = dim - 1;
        bool done = true;
        while (pos > 0) {
            --pos;
            if (++k[pos] <= divisions) {
                done = false;
                break;
            }
            k[pos] = 0;
        }
        if (done) break;
    }
    return out;
}

ThetaNet::ThetaNet(std::size_t num_states, std::size_t num_actions, double resolution,
                   std::vector<std::vector<std::vector<double>>> rows)
    : num_states_(num_states), num_actions_(num_actions), resolution_(resolution), rows_(std::move(rows)) {
    if (rows_.size() != num_states_ * num_actions_) throw ModelError("net needs one row set per (x,u)");
    strides_.assign(rows_.size(), 1);
    size_ = 1;
    for (std::size_t r = rows_.size(); r-- > 0;) {
        if (rows_[r].empty()) throw ModelError("net row has no admissible points");
        strides_[r] = size_;
        size_ = checked_mul(size_, rows_[r].size());
    }
}

std::vector<std::size_t> ThetaNet::digits(std::size_t index) const {
    std::vector<std::size_t> d(rows_.size());
    for (std::size_t r = 0; r < rows_.size(); ++r) {
        d[r] = index / strides_[r];
        index %= strides_[r];
    }
    return d;
}

std::size_t ThetaNet::index_of(std::span<const std::size_t> digits) const {
    std::size_t i = 0;
    for (std::size_t r = 0; r < rows_.size(); ++r) i += digits[r] * strides_[r];
    return i;
}

Kernel ThetaNet::point(std::size_t index) const {
    if (index >= size_) throw std::out_of_range("net index out of range");
    Kernel k(num_states_, num_actions_);
    const auto d = digits(index);
    for (std::size_t x = 0; x < num_states_; ++x) {
        for (std::size_t u = 0; u < num_actions_; ++u) {
            const auto& row = rows_[x * num_actions_ + u][d[x * num_actions_ + u]];
            std::copy(row.begin(), row.end(), k.row(x, u).begin());
        }
    }
    return k;
}

ThetaNet build_theta_net(const ParameterSpace& space, double epsilon, bool enforce_p_min,
                         std::size_t max_size) {
    space.validate();
    if (!(epsilon > 0.0 && epsilon < 1.0)) throw ModelError("net resolution must lie in (0,1)");
    const std::size_t m = lattice_divisions(epsilon);
    const std::size_t ns = space.num_states;
    const std::size_t na = space.num_actions;

    std::vector<std::vector<std::vector<double>>> rows(ns * na);
    std::size_t total = 1;
    for (std::size_t x = 0; x < ns; ++x) {
        for (std::size_t u = 0; u < na; ++u) {
            std::vector<std::size_t> cols;
            for (std::size_t y = 0; y < ns; ++y) {
                if (space.supported(x, u, y)) cols.push_back(y);
            }
            auto& out = rows[x * na + u];
            for (const auto& sub : simplex_lattice(cols.size(), m)) {
                if (enforce_p_min &&
                    std::any_of(sub.begin(), sub.end(), [&](double v) { return v < space.p_min - 1e-12; })) {
                    continue;
                }
                std::vector<double> full(ns, 0.0);
                for (std::size_t i = 0; i < cols.size(); ++i) full[cols[i]] = sub[i];
                out.push_back(std::move(full));
            }
            if (out.empty()) {
                throw ModelError("no lattice point of row (" + std::to_string(x) + "," + std::to_string(u) +
                                 ") meets p_min; use a finer resolution");
            }
            total = checked_mul(total, out.size());
            if (total > max_size) {
                throw ModelError("theta net would exceed " + std::to_string(max_size) +
                                 " points; use a coarser resolution");
            }
        }
    }
    return ThetaNet(ns, na, epsilon, std::move(rows));
}

std::size_t nearest_index(const Kernel& theta, const ThetaNet& net) {
    const std::size_t ns = net.num_states();
    const std::size_t na = net.num_actions();
    if (theta.num_states() != ns || theta.num_actions() != na) throw ModelError("kernel shape does not match net");

    // The l-infinity distance to a product point is the max over rows, so the optimum is
    // D* = max over rows of the row minimum; any row choice within D* attains it.
    double dstar = 0.0;
    for (std::size_t x = 0; x < ns; ++x) {
        for (std::size_t u = 0; u < na; ++u) {
            const auto& pts = net.row_points(x, u);
            dstar = std::max(dstar, linf(pts[nearest_in(pts, theta.row(x, u))], theta.row(x, u)));
        }
    }
    std::vector<std::size_t> d(ns * na, 0);
    for (std::size_t x = 0; x < ns; ++x) {
        for (std::size_t u = 0; u < na; ++u) {
            const auto& pts = net.row_points(x, u);
            for (std::size_t i = 0; i < pts.size(); ++i) {
                if (linf(pts[i], theta.row(x, u)) <= dstar) {
                    d[x * na + u] = i;
                    break;
                }
            }
        }
    }
    return net.index_of(d);
}

Kernel nearest_point(const Kernel& theta, const ThetaNet& net) {
    return net.point(nearest_index(theta, net));
}

PolicyGrid::PolicyGrid(std::size_t num_actions, double resolution, std::vector<std::vector<double>> points)
    : num_actions_(num_actions), resolution_(resolution), points_(std::move(points)) {
    if (points_.empty()) throw ModelError("policy grid is empty");
}

std::size_t PolicyGrid::class_size(std::size_t num_states) const {
    std::size_t n = 1;
    for (std::size_t x = 0; x < num_states; ++x) n = checked_mul(n, points_.size());
    return n;
}

StationaryPolicy PolicyGrid::policy(std::size_t index, std::size_t num_states) const {
    StationaryPolicy pi(num_states, num_actions_);
    const std::size_t g = points_.size();
    for (std::size_t x = num_states; x-- > 0;) {
        const auto& p = points_[index % g];
        index /= g;
        std::copy(p.begin(), p.end(), pi.row(x).begin());
    }
    return pi;
}

PolicyEnumeration PolicyGrid::enumerate(std::size_t num_states, std::size_t max_size) const {
    const std::size_t total = class_size(num_states);
    if (total > max_size) {
        throw ModelError("policy class has " + std::to_string(total) + " members, above the cap of " +
                         std::to_string(max_size));
    }
    return [grid = *this, num_states, total](const PolicyVisitor& visit) {
        for (std::size_t i = 0; i < total; ++i) visit(grid.policy(i, num_states));
    };
}

PolicyGrid build_policy_grid(std::size_t num_actions, double epsilon, std::size_t max_points) {
    if (num_actions == 0) throw ModelError("policy grid needs at least one action");
    const std::size_t m = lattice_divisions(epsilon);
    // C(m + |U| - 1, |U| - 1) points; bail out before enumerating a huge lattice.
    double count = 1.0;
    for (std::size_t i = 1; i < num_actions; ++i) {
        count *= static_cast<double>(m + i) / static_cast<double>(i);
    }
    if (count > static_cast<double>(max_points)) {
        throw ModelError("policy grid would exceed " + std::to_string(max_points) + " points");
    }
    return PolicyGrid(num_actions, epsilon, simplex_lattice(num_actions, m));
}

StationaryPolicy project_policy(const StationaryPolicy& policy, const PolicyGrid& grid) {
    if (policy.num_actions() != grid.num_actions()) throw ModelError("policy and grid disagree on |U|");
    StationaryPolicy out(policy.num_states(), policy.num_actions());
    for (std::size_t x = 0; x < policy.num_states(); ++x) {
        const auto& p = grid.points()[nearest_in(grid.points(), policy.row(x))];
        std::copy(p.begin(), p.end(), out.row(x).begin());
    }
    return out;
}

}  // namespace rbmle
