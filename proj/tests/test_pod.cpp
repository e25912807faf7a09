#include <catch2/catch_amalgamated.hpp>

#include "ptpi/pod.hpp"

using namespace ptpi;

namespace {

MatrixXd random_matrix(int r, int c, uint64_t seed) {
    Rng rng(seed);
    MatrixXd m(r, c);
    for (int i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-1.0, 1.0);
    return m;
}

MatrixXd random_orthonormal(int rows, int cols, Rng& rng) {
    MatrixXd g(rows, cols);
    for (int i = 0; i < g.size(); ++i) g.data()[i] = rng.normal();
    Eigen::HouseholderQR<MatrixXd> qr(g);
    return qr.householderQ() * MatrixXd::Identity(rows, cols);
}

double proj_err_sq(const MatrixXd& V, const MatrixXd& U) {
    return (U - V * (V.transpose() * U)).squaredNorm();
}

ManifoldSampler sine_manifold(int grid) {
    VectorXd x = linspace(0.0, 1.0, grid);
    ManifoldSampler s;
    s.mu_lo = VectorXd::Constant(1, 0.5);
    s.mu_hi = VectorXd::Constant(1, 1.8);
    s.n_times = 1;
    s.field = [x](const VectorXd& mu, double) {
        return VectorXd((M_PI * mu(0) * x.array()).sin());
    };
    return s;
}

}  // namespace

TEST_CASE("pod_basis: axis-aligned two-snapshot matrix") {
    MatrixXd U(2, 2);
    U << 2, 0, 0, 1;
    PODBasis b = pod_basis(U, 1, 1.0, PodMethod::Exact);
    CHECK(std::abs(b.V(0, 0)) == Catch::Approx(1.0).margin(1e-12));
    CHECK(std::abs(b.V(1, 0)) == Catch::Approx(0.0).margin(1e-12));
    CHECK(b.sigma(0) == Catch::Approx(2.0));
    CHECK(b.discarded_energy == Catch::Approx(1.0));
}

TEST_CASE("pod_basis: rank-1 snapshots reconstruct exactly") {
    Rng rng(11);
    VectorXd v0(6);
    for (int i = 0; i < 6; ++i) v0(i) = rng.uniform(-1, 1);
    MatrixXd U(6, 4);
    for (int j = 0; j < 4; ++j) U.col(j) = (j + 1.0) * v0;
    PODBasis b = pod_basis(U, 1, 1.0, PodMethod::Exact);
    CHECK(proj_err_sq(b.V, U) <= 1e-20 * U.squaredNorm());
}

TEST_CASE("pod_basis: exact matches dense SVD and randomized at full rank") {
    MatrixXd U = random_matrix(8, 5, 21);
    PODBasis ex = pod_basis(U, 5, 1.0, PodMethod::Exact);
    PODBasis rz = pod_basis(U, 5, 1.0, PodMethod::Randomized, 3);

    // dense SVD oracle
    Eigen::JacobiSVD<MatrixXd> svd(U, Eigen::ComputeThinU);
    MatrixXd Vref = svd.matrixU();
    for (int k = 0; k < 5; ++k)
        CHECK(ex.sigma(k) == Catch::Approx(svd.singularValues()(k)).margin(1e-10));
    CHECK(std::abs(proj_err_sq(ex.V, U) - proj_err_sq(Vref, U)) <= 1e-10);
    CHECK(std::abs(proj_err_sq(ex.V, U) - proj_err_sq(rz.V, U)) <=
          1e-8 * std::max(1.0, U.squaredNorm()));

    // orthonormality
    CHECK((ex.V.transpose() * ex.V - MatrixXd::Identity(5, 5)).cwiseAbs().maxCoeff() <= 1e-10);
    CHECK((rz.V.transpose() * rz.V - MatrixXd::Identity(5, 5)).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("pod_basis: randomized agrees on random rank-5 matrices at N=3") {
    for (uint64_t seed : {1u, 2u, 3u}) {
        MatrixXd A = random_matrix(40, 5, seed) * random_matrix(5, 12, seed + 50);
        PODBasis ex = pod_basis(A, 3, 1.0, PodMethod::Exact);
        PODBasis rz = pod_basis(A, 3, 1.0, PodMethod::Randomized, seed + 100);
        double pe = proj_err_sq(ex.V, A), pr = proj_err_sq(rz.V, A);
        CHECK(std::abs(pe - pr) / std::max(1e-12, std::abs(pe)) <= 1e-6);
    }
}

TEST_CASE("pod projection identities") {
    MatrixXd U = random_matrix(10, 6, 31);
    PODBasis b = pod_basis(U, 3, 1.0, PodMethod::Exact);

    SECTION("u in span reconstructs") {
        VectorXd q(3);
        q << 1.0, -2.0, 0.5;
        VectorXd u = b.V * q;
        VectorXd r = pod_reconstruct(b, pod_project(b, u));
        CHECK((r - u).cwiseAbs().maxCoeff() <= 1e-12);
    }
    SECTION("u orthogonal to span projects to zero") {
        Rng rng(5);
        VectorXd u(10);
        for (int i = 0; i < 10; ++i) u(i) = rng.uniform(-1, 1);
        u -= b.V * (b.V.transpose() * u);
        CHECK(pod_project(b, u).cwiseAbs().maxCoeff() <= 1e-12);
    }
    SECTION("hand projection") {
        PODBasis hand;
        hand.V = MatrixXd::Zero(2, 1);
        hand.V(0, 0) = 1.0;
        VectorXd u(2);
        u << 0.0, 3.0;
        VectorXd q = pod_project(hand, u);
        CHECK(q(0) == 0.0);
        CHECK((u - pod_reconstruct(hand, q)).norm() == Catch::Approx(3.0));
    }
}

TEST_CASE("Eckart-Young dominance over random orthonormal bases") {
    MatrixXd U = random_matrix(20, 12, 101);
    PODBasis b = pod_basis(U, 3, 1.0, PodMethod::Exact);
    double best = proj_err_sq(b.V, U);
    Rng rng(202);
    for (int trial = 0; trial < 100; ++trial) {
        MatrixXd W = random_orthonormal(20, 3, rng);
        CHECK(proj_err_sq(W, U) >= best - 1e-12);
    }
}

TEST_CASE("discarded-energy identity and monotonicity") {
    MatrixXd U = random_matrix(15, 9, 55);
    double weight = 0.4;
    double prev = std::numeric_limits<double>::infinity();
    for (int N = 1; N <= 6; ++N) {
        PODBasis b = pod_basis(U, N, weight, PodMethod::Exact);
        double lhs = weight * proj_err_sq(b.V, U);
        CHECK(std::abs(lhs - b.discarded_energy) <= 1e-10 * std::max(1.0, b.discarded_energy));
        CHECK(b.discarded_energy <= prev + 1e-14);
        prev = b.discarded_energy;
        for (int k = 0; k + 1 < b.sigma.size(); ++k) CHECK(b.sigma(k) >= b.sigma(k + 1));
        CHECK(b.sigma.minCoeff() >= 0.0);
    }
}

TEST_CASE("e_pod: exact basis, orthogonal vector, zero denominator") {
    MatrixXd U = random_matrix(10, 4, 77);
    PODBasis full = pod_basis(U, 4, 1.0, PodMethod::Exact);
    CHECK(e_pod(full, U) <= 1e-10);

    Rng rng(9);
    VectorXd u(10);
    for (int i = 0; i < 10; ++i) u(i) = rng.uniform(-1, 1);
    u -= full.V * (full.V.transpose() * u);
    MatrixXd single = u;
    CHECK(e_pod(full, single) == Catch::Approx(1.0).epsilon(1e-10));

    MatrixXd zeros = MatrixXd::Zero(10, 2);
    CHECK_THROWS_AS(e_pod(full, zeros), Error);
}

TEST_CASE("pod_gap_estimate: exact rank-1 manifold has zero gap") {
    VectorXd v0 = random_matrix(30, 1, 13).col(0);
    ManifoldSampler s;
    s.mu_lo = VectorXd::Constant(1, 0.2);
    s.mu_hi = VectorXd::Constant(1, 2.0);
    s.n_times = 1;
    s.field = [v0](const VectorXd& mu, double) { return VectorXd(mu(0) * v0); };
    VectorXd gaps = pod_gap_estimate(s, 1, {4, 8, 16}, 50, 3);
    for (int i = 0; i < gaps.size(); ++i) CHECK(gaps(i) <= 1e-24);
}

TEST_CASE("pod_gap_estimate: sine manifold gap decreases to <= 1e-3") {
    ManifoldSampler s = sine_manifold(200);
    std::vector<int> ns = {4, 8, 16, 32, 64};
    VectorXd avg = VectorXd::Zero(5);
    for (uint64_t rep = 0; rep < 5; ++rep) avg += pod_gap_estimate(s, 3, ns, 500, 1000 + rep);
    avg /= 5.0;
    for (int i = 0; i + 1 < avg.size(); ++i) CHECK(avg(i + 1) <= avg(i) + 1e-12);
    CHECK(avg(avg.size() - 1) <= 1e-3);
}

TEST_CASE("pod_gap_estimate: deterministic for fixed seed, guards rank") {
    ManifoldSampler s = sine_manifold(60);
    VectorXd a = pod_gap_estimate(s, 3, {4, 8}, 30, 42);
    VectorXd b = pod_gap_estimate(s, 3, {4, 8}, 30, 42);
    CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);
    CHECK_THROWS_AS(pod_gap_estimate(s, 5, {4, 8}, 30, 42), Error);
}

TEST_CASE("pod_basis: configuration errors") {
    MatrixXd U = random_matrix(6, 3, 1);
    CHECK_THROWS_AS(pod_basis(U, 0, 1.0, PodMethod::Exact), Error);
    CHECK_THROWS_AS(pod_basis(U, 4, 1.0, PodMethod::Exact), Error);
    CHECK_THROWS_AS(pod_basis(U, 2, 0.0, PodMethod::Exact), Error);
}

TEST_CASE("snapshot set validation and column ordering") {
    SnapshotSet s;
    s.coords = random_matrix(4, 2, 2);
    s.params = random_matrix(3, 1, 3);
    s.times = linspace(0.1, 0.3, 2);
    s.fields = random_matrix(4, 6, 4);
    s.validate();
    CHECK(s.col_index(0, 0) == 0);
    CHECK(s.col_index(0, 1) == 1);
    CHECK(s.col_index(1, 0) == 2);
    CHECK(s.col_index(2, 1) == 5);

    s.fields(0, 0) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(s.validate(), Error);
}
