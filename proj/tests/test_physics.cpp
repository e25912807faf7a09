#include <catch2/catch_amalgamated.hpp>

#include "ptpi/physics.hpp"

using namespace ptpi;

namespace {

VectorXd vec2(double a, double b) {
    VectorXd v(2);
    v << a, b;
    return v;
}
VectorXd vec1(double a) {
    VectorXd v(1);
    v << a;
    return v;
}

}  // namespace

TEST_CASE("eikonal: exact solution values") {
    PDEProblem p = make_eikonal();
    CHECK(exact_solution(p, vec2(0.6, 0.8), vec1(0.5), 0.0)(0) == Catch::Approx(-0.5));
    CHECK(exact_solution(p, vec2(0.0, 0.0), vec1(0.37), 0.0)(0) == Catch::Approx(0.37));
}

TEST_CASE("eikonal: interior residual closed forms") {
    PDEProblem p = make_eikonal();
    FieldBundle plane;  // u = x1, grad (1, 0)
    plane.value = vec1(0.3);
    plane.grad = MatrixXd::Zero(1, 2);
    plane.grad(0, 0) = 1.0;
    plane.has_grad = true;
    VectorXd r = interior_residual(p, plane, vec2(0.3, 0.1), vec1(0.5), 0.0);
    CHECK(std::abs(r(0)) <= p.eikonal_eps);

    plane.grad(0, 0) = 2.0;  // u = 2 x1
    r = interior_residual(p, plane, vec2(0.3, 0.1), vec1(0.5), 0.0);
    CHECK(r(0) == Catch::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("eikonal: boundary residual and placement check") {
    PDEProblem p = make_eikonal();
    double mu = 0.5;
    VectorXd x = vec2(mu * std::cos(1.1), mu * std::sin(1.1));
    FieldBundle b;
    b.value = vec1(0.0);
    CHECK(boundary_residual(p, b, x, vec1(mu), 0.0)(0) == 0.0);
    b.value = vec1(0.2);
    CHECK(boundary_residual(p, b, x, vec1(mu), 0.0)(0) == Catch::Approx(0.2));

    // exact solution on the zero set
    FieldBundle ex = exact_bundle(p, x, vec1(mu), 0.0);
    CHECK(std::abs(boundary_residual(p, ex, x, vec1(mu), 0.0)(0)) <= 1e-14);

    CHECK_THROWS_AS(boundary_residual(p, b, vec2(0.9, 0.9), vec1(mu), 0.0), Error);
}

TEST_CASE("eikonal: residual of truth away from the apex") {
    PDEProblem p = make_eikonal();
    Rng rng(17);
    int tested = 0;
    while (tested < 1000) {
        VectorXd x = vec2(rng.uniform(-1, 1), rng.uniform(-1, 1));
        if (x.norm() <= 1e-3) continue;
        VectorXd mu = vec1(rng.uniform(0.1, 1.1));
        FieldBundle b = exact_bundle(p, x, mu, 0.0);
        VectorXd r = interior_residual(p, b, x, mu, 0.0);
        REQUIRE(std::abs(r(0)) <= 1e-8);
        ++tested;
    }
}

TEST_CASE("adr2d: manufactured solution limits and initial data") {
    PDEProblem p = make_adr2d();
    VectorXd x = vec2(0.3, 0.7), mu = vec2(0.8, 0.9);
    // time factor tends to 1
    double u_inf = exact_solution(p, x, mu, 50.0)(0);
    double base = std::sin(M_PI * mu(0) * x(0)) * std::sin(M_PI * mu(1) * x(1)) * x(0) *
                  (1 - x(0)) * x(1) * (1 - x(1));
    CHECK(u_inf == Catch::Approx(base).epsilon(1e-12));
    // u0 = 0 at t = 0
    CHECK(exact_solution(p, x, mu, 0.0)(0) == Catch::Approx(0.0).margin(1e-15));

    // initial residual: u(., t_min) - u0 with u0 = 0
    FieldBundle b = exact_bundle(p, x, mu, p.t_min);
    VectorXd r0 = initial_residual(p, b, x, mu);
    CHECK(r0(0) == Catch::Approx(exact_solution(p, x, mu, p.t_min)(0)));

    PDEProblem eik = make_eikonal();
    CHECK_THROWS_AS(initial_residual(eik, b, x, mu), Error);
}

TEST_CASE("adr2d: homogeneous Dirichlet data on the whole box boundary") {
    PDEProblem p = make_adr2d();
    Rng rng(4);
    for (int trial = 0; trial < 200; ++trial) {
        double s = rng.uniform(0, 1);
        int edge = int(rng.uniform() * 4);
        VectorXd x = edge == 0   ? vec2(0.0, s)
                     : edge == 1 ? vec2(1.0, s)
                     : edge == 2 ? vec2(s, 0.0)
                                 : vec2(s, 1.0);
        VectorXd mu = vec2(rng.uniform(0.5, 1.5), rng.uniform(0.5, 1.5));
        double t = rng.uniform(p.t_min, p.t_max);
        FieldBundle b = exact_bundle(p, x, mu, t);
        CHECK(std::abs(boundary_residual(p, b, x, mu, t)(0)) <= 1e-10);
    }
}

TEST_CASE("adr2d: residual of the manufactured truth vanishes") {
    PDEProblem p = make_adr2d();
    Rng rng(23);
    for (int trial = 0; trial < 100; ++trial) {
        VectorXd x = vec2(rng.uniform(0, 1), rng.uniform(0, 1));
        VectorXd mu = vec2(rng.uniform(0.5, 1.5), rng.uniform(0.5, 1.5));
        double t = rng.uniform(p.t_min, p.t_max);
        FieldBundle b = exact_bundle(p, x, mu, t);
        VectorXd r = interior_residual(p, b, x, mu, t);
        REQUIRE(std::abs(r(0)) <= 1e-10);
    }
    // outside the valid time window
    FieldBundle b = exact_bundle(p, vec2(0.5, 0.5), vec2(1, 1), 0.05);
    CHECK_THROWS_AS(interior_residual(p, b, vec2(0.5, 0.5), vec2(1, 1), 0.05), Error);
}

TEST_CASE("adr2d: forcing matches a finite-difference application of the operator") {
    PDEProblem p = make_adr2d();
    Rng rng(31);
    auto u = [&](double x, double y, const VectorXd& mu, double t) {
        return exact_solution(p, vec2(x, y), mu, t)(0);
    };
    for (int trial = 0; trial < 30; ++trial) {
        double x = rng.uniform(0.05, 0.95), y = rng.uniform(0.05, 0.95);
        VectorXd mu = vec2(rng.uniform(0.5, 1.5), rng.uniform(0.5, 1.5));
        double t = rng.uniform(0.2, 2.0);
        double h = 1e-5;
        double ut = (u(x, y, mu, t + h) - u(x, y, mu, t - h)) / (2 * h);
        double ux = (u(x + h, y, mu, t) - u(x - h, y, mu, t)) / (2 * h);
        double lap = (u(x + h, y, mu, t) + u(x - h, y, mu, t) + u(x, y + h, mu, t) +
                      u(x, y - h, mu, t) - 4 * u(x, y, mu, t)) /
                     (h * h);
        double f_fd = ut - 0.05 * lap + 0.05 * u(x, y, mu, t) + adr_advection(t) * ux;
        double f = adr_forcing(vec2(x, y), mu, t);
        CHECK(rel_err(f, f_fd, 1e-6) <= 1e-5);
    }
}

TEST_CASE("generate_snapshots: shapes and column ordering") {
    PDEProblem p = make_eikonal();
    MatrixXd coords = make_grid(p, 30, 30);
    CHECK(coords.rows() == 900);

    VectorXd mus = linspace(0.1, 0.5, 41);
    SnapshotSet s = generate_snapshots(p, MatrixXd(mus), time_grid(p, 1), coords);
    CHECK(s.fields.cols() == 41);
    CHECK(s.fields.rows() == 900);

    // single parameter, single time
    SnapshotSet one = generate_snapshots(p, MatrixXd(vec1(0.3)), time_grid(p, 1), coords);
    CHECK(one.fields.cols() == 1);

    // spot value: u(x_i; mu) = mu - |x_i|
    VectorXd x0 = coords.row(17).transpose();
    CHECK(s.fields(17, 3) == Catch::Approx(mus(3) - x0.norm()));

    PDEProblem adr = make_adr2d();
    MatrixXd pg(4, 2);
    pg << 0.5, 0.5, 0.5, 1.0, 1.0, 0.5, 1.0, 1.0;
    SnapshotSet sa = generate_snapshots(adr, pg, time_grid(adr, 3), make_grid(adr, 5, 5));
    CHECK(sa.fields.cols() == 12);
    // column (j, k) ordering: time fastest within a parameter block
    VectorXd xi = sa.coords.row(7).transpose();
    CHECK(sa.fields(7, sa.col_index(2, 1)) ==
          Catch::Approx(exact_solution(adr, xi, pg.row(2).transpose(), sa.times(1))(0)));
}

TEST_CASE("time_grid excludes t_min, includes t_max") {
    PDEProblem p = make_adr2d();
    VectorXd t = time_grid(p, 7);
    CHECK(t.size() == 7);
    CHECK(t(0) > p.t_min);
    CHECK(t(6) == Catch::Approx(p.t_max));
    CHECK_THROWS_AS(time_grid(make_eikonal(), 3), Error);
}
