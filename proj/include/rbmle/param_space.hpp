#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "rbmle/markov.hpp"
#include "rbmle/model.hpp"

namespace rbmle {

/// Known structure of the unknown kernel: which entries may be nonzero, and p_min.
struct ParameterSpace {
    std::size_t num_states = 0;
    std::size_t num_actions = 0;
    std::vector<bool> support;  // z(x,u,y) at (x * |U| + u) * |X| + y
    double p_min = 0.0;

    /// Support taken from the nonzero entries of `kernel`.
    static ParameterSpace from_kernel(const Kernel& kernel, double p_min);

    bool supported(std::size_t x, std::size_t u, std::size_t y) const {
        return support[(x * num_actions + u) * num_states + y];
    }
    std::size_t row_support(std::size_t x, std::size_t u) const;

    void validate() const;

    /// theta respects the mask (and p_min on supported entries when asked).
    bool contains(const Kernel& theta, bool enforce_p_min) const;
};

/// m = ceil(1/eps): lattice spacing is 1/m, which never exceeds eps.
std::size_t lattice_divisions(double epsilon);

/// All points k/m of the probability simplex in `dim` coordinates, ascending
/// lexicographically in the first dim-1 coordinates; the last coordinate
/// absorbs the remainder so each point sums to one.
std::vector<std::vector<double>> simplex_lattice(std::size_t dim, std::size_t divisions);

/// Finite product net over kernel rows. Point i is decoded in mixed radix with
/// row (0,0) most significant, so index order is lexicographic in row choices.
class ThetaNet {
public:
    ThetaNet() = default;
    ThetaNet(std::size_t num_states, std::size_t num_actions, double resolution,
             std::vector<std::vector<std::vector<double>>> rows);

    std::size_t num_states() const { return num_states_; }
    std::size_t num_actions() const { return num_actions_; }
    double resolution() const { return resolution_; }
    std::size_t size() const { return size_; }
    std::size_t num_rows() const { return rows_.size(); }

    /// Candidate full-length rows for (x,u).
    const std::vector<std::vector<double>>& row_points(std::size_t x, std::size_t u) const {
        return rows_[x * num_actions_ + u];
    }

    /// Per-row choice indices of point i.
    std::vector<std::size_t> digits(std::size_t index) const;
    std::size_t index_of(std::span<const std::size_t> digits) const;

    Kernel point(std::size_t index) const;

private:
    std::size_t num_states_ = 0;
    std::size_t num_actions_ = 0;
    double resolution_ = 0.0;
    std::size_t size_ = 0;
    std::vector<std::vector<std::vector<double>>> rows_;
    std::vector<std::size_t> strides_;
};

inline constexpr std::size_t kDefaultMaxNetSize = 2'000'000;

/// Throws ModelError when the product exceeds max_size or a row has no admissible point.
ThetaNet build_theta_net(const ParameterSpace& space, double epsilon, bool enforce_p_min = false,
                         std::size_t max_size = kDefaultMaxNetSize);

/// Index of the l-infinity nearest net point, lowest index on ties.
std::size_t nearest_index(const Kernel& theta, const ThetaNet& net);
Kernel nearest_point(const Kernel& theta, const ThetaNet& net);

/// Lattice over Delta(U); Pi_F is its |X|-fold product.
class PolicyGrid {
public:
    PolicyGrid() = default;
    PolicyGrid(std::size_t num_actions, double resolution, std::vector<std::vector<double>> points);

    std::size_t num_actions() const { return num_actions_; }
    double resolution() const { return resolution_; }
    const std::vector<std::vector<double>>& points() const { return points_; }

    /// |grid|^num_states, or max size_t on overflow.
    std::size_t class_size(std::size_t num_states) const;

    /// Policy with state 0 as the most significant digit.
    StationaryPolicy policy(std::size_t index, std::size_t num_states) const;

    /// Lazy enumeration of Pi_F; throws ModelError above max_size.
    PolicyEnumeration enumerate(std::size_t num_states, std::size_t max_size = 10'000'000) const;

private:
    std::size_t num_actions_ = 0;
    double resolution_ = 0.0;
    std::vector<std::vector<double>> points_;
};

PolicyGrid build_policy_grid(std::size_t num_actions, double epsilon, std::size_t max_points = 1'000'000);

/// Per-state nearest grid point in l-infinity, lowest index on ties.
StationaryPolicy project_policy(const StationaryPolicy& policy, const PolicyGrid& grid);

}  // namespace rbmle
