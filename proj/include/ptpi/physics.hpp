#pragma once

// PDE problem definitions: strong-form interior/boundary/initial residuals
// and analytic data generators for the two shipped benchmarks, a
// parametrized Eikonal equation and a manufactured 2D time-dependent
// advection-diffusion-reaction problem.

#include "ptpi/pod.hpp"

namespace ptpi {

enum class ProblemKind : uint8_t { Eikonal, Adr2d };

/// Field value and derivatives at one (x, mu, t), in physical units.
struct FieldBundle {
    VectorXd value;      // C
    MatrixXd grad;       // C x d
    VectorXd laplacian;  // C
    VectorXd dt;         // C
    bool has_grad = false, has_laplacian = false, has_dt = false;
};

struct PDEProblem {
    ProblemKind kind;
    int d = 2;
    int C = 1;
    int p = 1;
    bool stationary = false;
    VectorXd x_lo, x_hi;              // bounding box of Omega
    double t_min = 0.0, t_max = 0.0;  // valid time window
    double eikonal_eps = 1e-8;        // gradient-norm smoothing

    bool inside(const VectorXd& x) const {
        for (int i = 0; i < d; ++i)
            if (!(x(i) > x_lo(i) && x(i) < x_hi(i))) return false;
        return true;
    }
    bool in_closure(const VectorXd& x, double tol = 1e-12) const {
        for (int i = 0; i < d; ++i)
            if (x(i) < x_lo(i) - tol || x(i) > x_hi(i) + tol) return false;
        return true;
    }
    bool on_box_boundary(const VectorXd& x, double tol = 1e-12) const {
        if (!in_closure(x, tol)) return false;
        for (int i = 0; i < d; ++i)
            if (std::abs(x(i) - x_lo(i)) <= tol || std::abs(x(i) - x_hi(i)) <= tol) return true;
        return false;
    }
};

inline PDEProblem make_eikonal() {
    PDEProblem p;
    p.kind = ProblemKind::Eikonal;
    p.d = 2;
    p.C = 1;
    p.p = 1;
    p.stationary = true;
    p.x_lo = VectorXd::Constant(2, -1.0);
    p.x_hi = VectorXd::Constant(2, 1.0);
    return p;
}

inline PDEProblem make_adr2d() {
    PDEProblem p;
    p.kind = ProblemKind::Adr2d;
    p.d = 2;
    p.C = 1;
    p.p = 2;
    p.stationary = false;
    p.x_lo = VectorXd::Constant(2, 0.0);
    p.x_hi = VectorXd::Constant(2, 1.0);
    p.t_min = 0.1;  // the advection coefficient log(0.1 t) needs t >= 0.1
    p.t_max = 2.2;
    return p;
}

inline PDEProblem make_problem(const std::string& name) {
    if (name == "eikonal") return make_eikonal();
    if (name == "adr2d") return make_adr2d();
    fail("config", "unknown problem '" + name + "' (expected eikonal | adr2d)");
}

inline std::string problem_name(const PDEProblem& p) {
    return p.kind == ProblemKind::Eikonal ? "eikonal" : "adr2d";
}

inline double adr_advection(double t) { return std::log(0.1 * t); }

namespace detail {

// Manufactured ADR solution. A vanishing envelope keeps the Dirichlet data
// homogeneous for every mu while the sine pair carries the non-affine
// parameter dependence:
//   u*(x,y,mu,t) = sin(pi mu1 x) sin(pi mu2 y) x(1-x) y(1-y) (1 - e^{-t})
struct AdrFactors {
    double A, Ax, Axx;  // x-factor sin(pi mu1 x) x(1-x) and derivatives
    double B, By, Byy;  // y-factor
    double G, Gt;       // time factor 1 - e^{-t}
};

inline AdrFactors adr_factors(double x, double y, double mu1, double mu2, double t) {
    AdrFactors f;
    double w1 = M_PI * mu1, w2 = M_PI * mu2;
    double s1 = std::sin(w1 * x), c1 = std::cos(w1 * x);
    double s2 = std::sin(w2 * y), c2 = std::cos(w2 * y);
    double P = x * (1.0 - x), Pp = 1.0 - 2.0 * x, Ppp = -2.0;
    double Q = y * (1.0 - y), Qp = 1.0 - 2.0 * y, Qpp = -2.0;
    f.A = s1 * P;
    f.Ax = w1 * c1 * P + s1 * Pp;
    f.Axx = -w1 * w1 * s1 * P + 2.0 * w1 * c1 * Pp + s1 * Ppp;
    f.B = s2 * Q;
    f.By = w2 * c2 * Q + s2 * Qp;
    f.Byy = -w2 * w2 * s2 * Q + 2.0 * w2 * c2 * Qp + s2 * Qpp;
    f.G = 1.0 - std::exp(-t);
    f.Gt = std::exp(-t);
    return f;
}

}  // namespace detail

/// Closed-form solution value.
inline VectorXd exact_solution(const PDEProblem& problem, const VectorXd& x, const VectorXd& mu,
                               double t) {
    VectorXd u(problem.C);
    switch (problem.kind) {
        case ProblemKind::Eikonal:
            u(0) = mu(0) - std::sqrt(x(0) * x(0) + x(1) * x(1));
            return u;
        case ProblemKind::Adr2d: {
            auto f = detail::adr_factors(x(0), x(1), mu(0), mu(1), t);
            u(0) = f.A * f.B * f.G;
            return u;
        }
    }
    fail("physics", "no-analytic-solution for this problem");
}

/// Closed-form solution with its analytic derivatives.
inline FieldBundle exact_bundle(const PDEProblem& problem, const VectorXd& x, const VectorXd& mu,
                                double t) {
    FieldBundle b;
    b.value.resize(1);
    b.grad.resize(1, problem.d);
    b.laplacian.resize(1);
    b.dt = VectorXd::Zero(1);
    b.has_grad = b.has_laplacian = b.has_dt = true;
    switch (problem.kind) {
        case ProblemKind::Eikonal: {
            double r = std::sqrt(x(0) * x(0) + x(1) * x(1));
            b.value(0) = mu(0) - r;
            b.grad(0, 0) = -x(0) / r;
            b.grad(0, 1) = -x(1) / r;
            b.laplacian(0) = -1.0 / r;
            return b;
        }
        case ProblemKind::Adr2d: {
            auto f = detail::adr_factors(x(0), x(1), mu(0), mu(1), t);
            b.value(0) = f.A * f.B * f.G;
            b.grad(0, 0) = f.Ax * f.B * f.G;
            b.grad(0, 1) = f.A * f.By * f.G;
            b.laplacian(0) = (f.Axx * f.B + f.A * f.Byy) * f.G;
            b.dt(0) = f.A * f.B * f.Gt;
            return b;
        }
    }
    fail("physics", "no-analytic-solution for this problem");
}

/// Forcing term of the ADR operator applied to the manufactured solution.
inline double adr_forcing(const VectorXd& x, const VectorXd& mu, double t) {
    auto f = detail::adr_factors(x(0), x(1), mu(0), mu(1), t);
    double u = f.A * f.B * f.G;
    double ut = f.A * f.B * f.Gt;
    double ux = f.Ax * f.B * f.G;
    double lap = (f.Axx * f.B + f.A * f.Byy) * f.G;
    return ut - 0.05 * lap + 0.05 * u + adr_advection(t) * ux;
}

/// Strong-form interior residual.
inline VectorXd interior_residual(const PDEProblem& problem, const FieldBundle& bundle,
                                  const VectorXd& x, const VectorXd& mu, double t) {
    VectorXd r(problem.C);
    switch (problem.kind) {
        case ProblemKind::Eikonal: {
            require(bundle.has_grad, "physics", "eikonal residual needs the gradient");
            double g2 = bundle.grad.row(0).squaredNorm();
            r(0) = std::sqrt(g2 + problem.eikonal_eps * problem.eikonal_eps) - 1.0;
            return r;
        }
        case ProblemKind::Adr2d: {
            require(t >= problem.t_min - 1e-12 && t <= problem.t_max + 1e-12, "domain",
                    "adr2d residual outside the valid time window");
            require(bundle.has_grad && bundle.has_laplacian && bundle.has_dt, "physics",
                    "adr2d residual needs grad, laplacian and dt");
            r(0) = bundle.dt(0) - 0.05 * bundle.laplacian(0) + 0.05 * bundle.value(0) +
                   adr_advection(t) * bundle.grad(0, 0) - adr_forcing(x, mu, t);
            return r;
        }
    }
    fail("physics", "unknown problem kind");
}

/// Dirichlet boundary residual u - g with g = 0 for both shipped problems.
/// The point must lie on the declared segment: the circle of radius mu for
/// the Eikonal problem, the box edge for the ADR problem.
inline VectorXd boundary_residual(const PDEProblem& problem, const FieldBundle& bundle,
                                  const VectorXd& x, const VectorXd& mu, double t) {
    (void)t;
    switch (problem.kind) {
        case ProblemKind::Eikonal: {
            double r2 = x(0) * x(0) + x(1) * x(1);
            require(std::abs(r2 - mu(0) * mu(0)) <= 1e-10, "placement",
                    "boundary point not on the circle of radius mu");
            return bundle.value;
        }
        case ProblemKind::Adr2d:
            require(problem.on_box_boundary(x, 1e-12), "placement",
                    "boundary point not on the box boundary");
            return bundle.value;
    }
    fail("physics", "unknown problem kind");
}

/// Initial-condition residual u(., t_min) - u0 (u0 = 0 for the ADR problem).
inline VectorXd initial_residual(const PDEProblem& problem, const FieldBundle& bundle,
                                 const VectorXd& x, const VectorXd& mu) {
    (void)x;
    (void)mu;
    require(!problem.stationary, "physics",
            "initial residual is unsupported for stationary problems");
    return bundle.value;
}

/// Time grid convention used everywhere: N_t equispaced instants
/// {t_min + k (t_max - t_min)/N_t, k = 1..N_t}; stationary problems use
/// the single instant 0.
inline VectorXd time_grid(const PDEProblem& problem, int n_times) {
    if (problem.stationary) {
        require(n_times == 1, "config", "stationary problems use a single time instant");
        return VectorXd::Zero(1);
    }
    VectorXd t(n_times);
    for (int k = 1; k <= n_times; ++k)
        t(k - 1) = problem.t_min + double(k) * (problem.t_max - problem.t_min) / double(n_times);
    return t;
}

/// Regular vertex grid over the problem's bounding box, row-major over
/// dimensions (x fastest).
inline MatrixXd make_grid(const PDEProblem& problem, int nx, int ny) {
    MatrixXd coords(nx * ny, problem.d);
    VectorXd xs = linspace(problem.x_lo(0), problem.x_hi(0), nx);
    VectorXd ys = linspace(problem.x_lo(1), problem.x_hi(1), ny);
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
            coords(j * nx + i, 0) = xs(i);
            coords(j * nx + i, 1) = ys(j);
        }
    return coords;
}

/// Analytic truth stands in for the high-fidelity solver: one field column
/// per (mu_j, t_k), time fastest within each parameter block.
inline SnapshotSet generate_snapshots(const PDEProblem& problem, const MatrixXd& params,
                                      const VectorXd& times, const MatrixXd& coords) {
    require(params.rows() >= 1 && times.size() >= 1, "config",
            "generate_snapshots needs at least one parameter and time");
    require(params.cols() == problem.p, "shape", "parameter dimension mismatch");
    SnapshotSet s;
    s.coords = coords;
    s.params = params;
    s.times = times;
    s.channels = problem.C;
    const int N_h = int(coords.rows());
    s.fields.resize(N_h * problem.C, int(params.rows() * times.size()));
    for (int j = 0; j < params.rows(); ++j) {
        VectorXd mu = params.row(j).transpose();
        for (int k = 0; k < times.size(); ++k) {
            int col = s.col_index(j, k);
            for (int i = 0; i < N_h; ++i) {
                VectorXd xi = coords.row(i).transpose();
                VectorXd u = exact_solution(problem, xi, mu, times(k));
                for (int c = 0; c < problem.C; ++c) s.fields(c * N_h + i, col) = u(c);
            }
        }
    }
    s.validate();
    return s;
}

}  // namespace ptpi
