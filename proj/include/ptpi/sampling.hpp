#pragma once

// Seeded samplers: residual (mu,t) sets with periodic resampling, spatial
// collocation points per training stage, and the nested ablation subsets.

#include "ptpi/physics.hpp"

#include <algorithm>

namespace ptpi {

/// Uniform sampler over a box, one deterministic stream per instance.
class BoxSampler {
public:
    BoxSampler(VectorXd lo, VectorXd hi, uint64_t seed)
        : lo_(std::move(lo)), hi_(std::move(hi)), rng_(seed) {
        require(lo_.size() == hi_.size(), "config", "sampler bounds size mismatch");
        for (int i = 0; i < lo_.size(); ++i)
            require(hi_(i) >= lo_(i), "config", "sampler bounds inverted");
    }

    int dim() const { return int(lo_.size()); }

    VectorXd draw() {
        VectorXd x(dim());
        for (int i = 0; i < dim(); ++i) x(i) = rng_.uniform(lo_(i), hi_(i));
        ++counter_;
        return x;
    }

    /// One sample per column.
    MatrixXd draw_many(int n) {
        MatrixXd out(dim(), n);
        for (int j = 0; j < n; ++j) out.col(j) = draw();
        return out;
    }

    uint64_t counter() const { return counter_; }

private:
    VectorXd lo_, hi_;
    Rng rng_;
    uint64_t counter_ = 0;
};

/// Unlabeled residual samples: i.i.d. uniform (mu, t) pairs, one per column
/// (just mu for stationary problems). Degenerate point bounds are allowed;
/// zero-count requests are not.
inline MatrixXd sample_residual_set(BoxSampler& sampler, int n) {
    require(n >= 1, "config", "residual set needs at least one sample");
    return sampler.draw_many(n);
}

/// Nested supervised subsets of sizes 5, 10, 20, ... doubling until the
/// sorted parameter list is depleted. The first subset takes the outermost
/// points (3 smallest + 2 largest), so every subset preserves min and max;
/// later subsets add uniformly random points from the complement.
inline std::vector<std::vector<int>> ablation_subsets(const VectorXd& P_sup_sorted,
                                                      uint64_t seed) {
    const int n = int(P_sup_sorted.size());
    require(n >= 5, "config", "ablation needs at least 5 supervised points");
    for (int i = 0; i + 1 < n; ++i)
        require(P_sup_sorted(i) <= P_sup_sorted(i + 1), "config",
                "ablation expects a sorted parameter list");

    std::vector<int> current;
    for (int i = 0; i < 3; ++i) current.push_back(i);          // smallest
    for (int i = n - 2; i < n; ++i) current.push_back(i);      // largest
    std::sort(current.begin(), current.end());

    std::vector<std::vector<int>> subsets{current};
    Rng rng(seed);
    int target = 10;
    while (target <= n) {
        std::vector<int> complement;
        for (int i = 0; i < n; ++i)
            if (std::find(current.begin(), current.end(), i) == current.end())
                complement.push_back(i);
        int to_add = target - int(current.size());
        for (int a = 0; a < to_add; ++a) {
            int pick = int(rng.uniform() * double(complement.size()));
            pick = std::min(pick, int(complement.size()) - 1);
            current.push_back(complement[pick]);
            complement.erase(complement.begin() + pick);
        }
        std::sort(current.begin(), current.end());
        subsets.push_back(current);
        target *= 2;
    }
    return subsets;
}

enum class Stage : uint8_t { TrunkPretrain, BranchPretrain, FineTune };

/// Spatial collocation: interior mesh points while pretraining, uniform
/// interior samples while fine-tuning. One point per column.
inline MatrixXd collocation_interior(const PDEProblem& problem, Stage stage,
                                     const MatrixXd& mesh_coords, int finetune_count,
                                     uint64_t seed) {
    if (stage != Stage::FineTune) {
        std::vector<int> keep;
        for (int i = 0; i < mesh_coords.rows(); ++i) {
            VectorXd x = mesh_coords.row(i).transpose();
            if (problem.inside(x)) keep.push_back(i);
        }
        require(!keep.empty(), "sampler", "no interior mesh points");
        MatrixXd out(problem.d, int(keep.size()));
        for (size_t j = 0; j < keep.size(); ++j)
            out.col(int(j)) = mesh_coords.row(keep[j]).transpose();
        return out;
    }
    require(finetune_count >= 1, "config", "fine-tune interior count must be positive");
    BoxSampler box(problem.x_lo, problem.x_hi, seed);
    MatrixXd out(problem.d, finetune_count);
    for (int j = 0; j < finetune_count; ++j) {
        VectorXd x;
        int tries = 0;
        do {
            x = box.draw();
            if (++tries > 1000) fail("sampler", "interior rejection sampling exhausted");
        } while (!problem.inside(x));
        out.col(j) = x;
    }
    return out;
}

/// Boundary collocation for one residual sample. The Eikonal boundary is the
/// parameter-dependent circle: equispaced angles, points falling outside the
/// closure of the box dropped. Box problems reuse the fixed boundary mesh
/// points regardless of mu.
inline MatrixXd boundary_points(const PDEProblem& problem, const VectorXd& mu,
                                const MatrixXd& mesh_coords, int circle_count) {
    if (problem.kind == ProblemKind::Eikonal) {
        std::vector<VectorXd> pts;
        for (int i = 0; i < circle_count; ++i) {
            double theta = 2.0 * M_PI * double(i) / double(circle_count);
            VectorXd x(2);
            x << mu(0) * std::cos(theta), mu(0) * std::sin(theta);
            if (problem.in_closure(x)) pts.push_back(x);
        }
        require(!pts.empty(), "sampler", "no boundary points inside the domain");
        MatrixXd out(2, int(pts.size()));
        for (size_t j = 0; j < pts.size(); ++j) out.col(int(j)) = pts[j];
        return out;
    }
    std::vector<int> keep;
    for (int i = 0; i < mesh_coords.rows(); ++i) {
        VectorXd x = mesh_coords.row(i).transpose();
        if (problem.on_box_boundary(x)) keep.push_back(i);
    }
    require(!keep.empty(), "sampler", "mesh has no boundary points");
    MatrixXd out(problem.d, int(keep.size()));
    for (size_t j = 0; j < keep.size(); ++j) out.col(int(j)) = mesh_coords.row(keep[j]).transpose();
    return out;
}

}  // namespace ptpi
