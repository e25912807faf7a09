#include <catch2/catch_amalgamated.hpp>

#include "ptpi/net.hpp"

#include <cmath>

using namespace ptpi;
using ad::Tape;
using ad::Var;

namespace {

// Central finite differences of a scalar function of one net's parameters.
// Step follows 1e-6 * max(1, |theta|). This is the independent oracle for
// every gradient check below; it never touches the tape.
template <typename F>
double fd_param(DenseNet& net, int layer, int i, int j, bool bias, F&& eval) {
    double& theta = bias ? net.b[layer](i) : net.W[layer](i, j);
    double h = 1e-6 * std::max(1.0, std::abs(theta));
    double orig = theta;
    theta = orig + h;
    double fp = eval(net);
    theta = orig - h;
    double fm = eval(net);
    theta = orig;
    return (fp - fm) / (2.0 * h);
}

double guarded_rel(double got, double want) {
    double denom = std::max({std::abs(got), std::abs(want), 1e-6});
    return std::abs(got - want) / denom;
}

}  // namespace

TEST_CASE("grad: product rule and square") {
    Tape tp;
    Var w1 = tp.leaf(3.0), w2 = tp.leaf(5.0);
    Var f = w1 * w2;
    auto g = tp.grad(f, {w1, w2});
    CHECK(g[0](0, 0) == 5.0);
    CHECK(g[1](0, 0) == 3.0);

    Tape tp2;
    Var w = tp2.leaf(3.0);
    Var f2 = w * w;
    auto g2 = tp2.grad(f2, {w});
    CHECK(g2[0](0, 0) == 6.0);
}

TEST_CASE("grad: unreachable parameter gets zero") {
    Tape tp;
    Var w = tp.leaf(2.0);
    Var unused = tp.leaf(MatrixXd::Ones(3, 2));
    Var f = tp.sum(tp.mul(w, w));
    auto g = tp.grad(f, {w, unused});
    CHECK(g[0](0, 0) == 4.0);
    CHECK(g[1].isZero(0.0));
    CHECK(g[1].rows() == 3);
}

TEST_CASE("grad: random ELU net matches central finite differences") {
    for (uint64_t seed : {7u, 19u}) {
        DenseNet net = init_dense({3, 12, 12, 2}, Act::Elu, seed);
        Rng rng(seed + 100);
        MatrixXd X(3, 5);
        for (int i = 0; i < X.size(); ++i) X.data()[i] = rng.uniform(-1.0, 1.0);

        auto loss_of = [&X](const DenseNet& n) {
            MatrixXd y = net_forward(n, X);
            return y.array().square().mean();
        };

        Tape tp;
        BoundNet bn = bind(tp, net);
        Var y = taped_forward(tp, bn, X);
        Var loss = tp.mean(tp.mul(y, y));
        CHECK(tp.scalar(loss) == Catch::Approx(loss_of(net)).epsilon(1e-14));

        std::vector<Var> params;
        for (int l = 0; l < net.layers(); ++l) {
            params.push_back(bn.W[l]);
            params.push_back(bn.b[l]);
        }
        auto grads = tp.grad(loss, params);

        for (int l = 0; l < net.layers(); ++l) {
            const MatrixXd& gW = grads[2 * l];
            const MatrixXd& gb = grads[2 * l + 1];
            for (int i = 0; i < gW.rows(); ++i)
                for (int j = 0; j < gW.cols(); ++j) {
                    double fd = fd_param(net, l, i, j, false, loss_of);
                    INFO("layer " << l << " W(" << i << "," << j << ")");
                    CHECK(guarded_rel(gW(i, j), fd) <= 1e-5);
                }
            for (int i = 0; i < gb.rows(); ++i) {
                double fd = fd_param(net, l, i, 0, true, loss_of);
                INFO("layer " << l << " b(" << i << ")");
                CHECK(guarded_rel(gb(i), fd) <= 1e-5);
            }
        }
    }
}

TEST_CASE("grad: SiLU and sine nets match finite differences") {
    for (Act a : {Act::Silu, Act::Sine}) {
        DenseNet net = init_dense({2, 10, 1}, a, 23);
        MatrixXd X(2, 4);
        X << 0.3, -0.7, 1.1, 0.0, -0.2, 0.9, -1.3, 0.5;
        auto loss_of = [&X](const DenseNet& n) {
            return net_forward(n, X).array().square().mean();
        };
        Tape tp;
        BoundNet bn = bind(tp, net);
        Var loss = tp.mean(tp.mul(taped_forward(tp, bn, X), taped_forward(tp, bn, X)));
        auto grads = tp.grad(loss, {bn.W[0], bn.b[0], bn.W[1], bn.b[1]});
        for (int i = 0; i < grads[0].rows(); ++i)
            for (int j = 0; j < grads[0].cols(); ++j) {
                double fd = fd_param(net, 0, i, j, false, loss_of);
                CHECK(guarded_rel(grads[0](i, j), fd) <= 1e-5);
            }
    }
}

TEST_CASE("jet_eval: trivial closed forms") {
    SECTION("sin at 0") {
        // f = sin as a single sine 'layer' with W=1, b=0
        DenseNet net;
        net.input_dim = net.output_dim = 1;
        net.W.push_back(MatrixXd::Ones(1, 1));
        net.b.push_back(VectorXd::Zero(1));
        net.act.push_back(Act::Sine);
        Tape tp;
        auto jets = jet_eval(tp, net, VectorXd::Zero(1), VectorXd::Ones(1));
        CHECK(tp.scalar(jets[0].value) == Catch::Approx(0.0).margin(1e-15));
        CHECK(tp.scalar(jets[0].d1) == Catch::Approx(1.0).epsilon(1e-14));
        CHECK(tp.scalar(jets[0].d2) == Catch::Approx(0.0).margin(1e-15));
    }
    SECTION("x cubed at 2 via tape jets") {
        // propagate the jet by hand through pow-int on scalars
        Tape tp;
        Var x = tp.constant(2.0), d1 = tp.constant(1.0);
        Var v = tp.pow_int(x, 3);
        Var vd1 = tp.mul(tp.scale(tp.pow_int(x, 2), 3.0), d1);
        Var vd2 = tp.mul(tp.scale(x, 6.0), tp.mul(d1, d1));
        CHECK(tp.scalar(v) == 8.0);
        CHECK(tp.scalar(vd1) == 12.0);
        CHECK(tp.scalar(vd2) == 12.0);
    }
    SECTION("sine layer second derivative identity") {
        DenseNet net;
        net.input_dim = net.output_dim = 1;
        net.W.push_back(2.0 * MatrixXd::Ones(1, 1));
        net.b.push_back(VectorXd::Zero(1));
        net.act.push_back(Act::Sine);
        Tape tp;
        VectorXd x(1), dir(1);
        x << M_PI / 4.0;
        dir << 1.0;
        auto jets = jet_eval(tp, net, x, dir);
        double v = tp.scalar(jets[0].value);
        CHECK(v == Catch::Approx(1.0).epsilon(1e-14));
        CHECK(tp.scalar(jets[0].d2) == Catch::Approx(-4.0 * v).epsilon(1e-13));
    }
}

TEST_CASE("jet_eval: rejects non-unit directions") {
    DenseNet net = init_dense({2, 4, 1}, Act::Elu, 3);
    Tape tp;
    VectorXd x = VectorXd::Zero(2), dir(2);
    dir << 1.0, 1.0;
    CHECK_THROWS_AS(jet_eval(tp, net, x, dir), Error);
}

TEST_CASE("jet: unsupported activation under order-2 propagation") {
    DenseNet net = init_dense({1, 3, 1}, Act::Elu, 5);
    net.act[0] = static_cast<Act>(250);
    Tape tp;
    try {
        jet_eval(tp, net, VectorXd::Zero(1), VectorXd::Ones(1));
        FAIL("expected unsupported-primitive error");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("unsupported-primitive") != std::string::npos);
    }
}

TEST_CASE("jets: Laplacian matches 5-point finite differences") {
    DenseNet net = init_dense({2, 50, 50, 50, 50, 3}, Act::Elu, 31);
    Rng rng(77);
    for (int trial = 0; trial < 6; ++trial) {
        VectorXd x(2);
        x << rng.uniform(-0.8, 0.8), rng.uniform(-0.8, 0.8);

        // jet route
        MatrixXd X = x, Dx = MatrixXd::Zero(2, 1), Dy = MatrixXd::Zero(2, 1);
        Dx(0, 0) = 1.0;
        Dy(1, 0) = 1.0;
        JetMats jx = net_forward_jet(net, X, Dx, true);
        JetMats jy = net_forward_jet(net, X, Dy, true);
        VectorXd lap = jx.d2.col(0) + jy.d2.col(0);

        // 5-point stencil oracle
        double h = 1e-4;
        VectorXd xe = x, xw = x, xn = x, xs = x;
        xe(0) += h;
        xw(0) -= h;
        xn(1) += h;
        xs(1) -= h;
        VectorXd fd = (net_forward(net, xe) + net_forward(net, xw) + net_forward(net, xn) +
                       net_forward(net, xs) - 4.0 * net_forward(net, x)) /
                      (h * h);
        for (int k = 0; k < 3; ++k) {
            INFO("trial " << trial << " output " << k);
            CHECK(guarded_rel(lap(k), fd(k)) <= 1e-4);
        }
    }
}

TEST_CASE("nested: gradient of spatial derivative matches finite differences") {
    SECTION("sine layer closed form") {
        // v(x) = sin(w x + b); dv/dx = w cos(w x + b), so d(dv/dx)/dw has a
        // closed form the tape must reproduce.
        double w = 1.3, b = 0.4, x = 0.7;
        DenseNet net;
        net.input_dim = net.output_dim = 1;
        net.W.push_back(w * MatrixXd::Ones(1, 1));
        net.b.push_back(b * VectorXd::Ones(1));
        net.act.push_back(Act::Sine);
        Tape tp;
        BoundNet bn = bind(tp, net);
        MatrixXd X(1, 1), D(1, 1);
        X << x;
        D << 1.0;
        TapedJet j = taped_forward_jet(tp, bn, X, D, true);
        Var d1 = tp.block(j.d1, 0, 0, 1, 1);
        auto g = tp.grad(d1, {bn.W[0], bn.b[0]});
        double want_w = std::cos(w * x + b) - w * x * std::sin(w * x + b);
        double want_b = -w * std::sin(w * x + b);
        CHECK(guarded_rel(g[0](0, 0), want_w) <= 1e-12);
        CHECK(guarded_rel(g[1](0, 0), want_b) <= 1e-12);
    }
    SECTION("ELU net against parameter finite differences of the derivative") {
        DenseNet net = init_dense({2, 8, 8, 1}, Act::Elu, 41);
        VectorXd x(2);
        x << 0.25, -0.55;
        MatrixXd D = MatrixXd::Zero(2, 1);
        D(0, 0) = 1.0;

        // oracle: central FD over theta of the order-1 directional derivative,
        // itself computed by plain (non-tape) jet arithmetic
        auto d1_of = [&](const DenseNet& n) {
            return net_forward_jet(n, MatrixXd(x), D, false).d1(0, 0);
        };

        Tape tp;
        BoundNet bn = bind(tp, net);
        TapedJet j = taped_forward_jet(tp, bn, MatrixXd(x), D, true);
        Var d1 = tp.block(j.d1, 0, 0, 1, 1);
        std::vector<Var> params;
        for (int l = 0; l < net.layers(); ++l) {
            params.push_back(bn.W[l]);
            params.push_back(bn.b[l]);
        }
        auto grads = tp.grad(d1, params);
        for (int l = 0; l < net.layers(); ++l) {
            for (int i = 0; i < net.W[l].rows(); ++i)
                for (int jj = 0; jj < net.W[l].cols(); ++jj) {
                    double fd = fd_param(net, l, i, jj, false, d1_of);
                    INFO("layer " << l << " W(" << i << "," << jj << ")");
                    CHECK(guarded_rel(grads[2 * l](i, jj), fd) <= 1e-4);
                }
        }
    }
}

TEST_CASE("tape: determinism and replay") {
    DenseNet net = init_dense({2, 20, 20, 1}, Act::Silu, 99);
    MatrixXd X(2, 7);
    Rng rng(5);
    for (int i = 0; i < X.size(); ++i) X.data()[i] = rng.uniform(-1.0, 1.0);

    auto run = [&]() {
        Tape tp;
        BoundNet bn = bind(tp, net);
        Var y = taped_forward(tp, bn, X);
        Var loss = tp.mean(tp.mul(y, y));
        return tp.scalar(loss);
    };
    double a = run(), b = run();
    CHECK(a == b);

    Tape tp;
    BoundNet bn = bind(tp, net);
    MatrixXd D = MatrixXd::Zero(2, 7);
    D.row(0).setOnes();
    TapedJet j = taped_forward_jet(tp, bn, X, D, true);
    Var loss = tp.mean(tp.mul(j.d2, j.d2));
    (void)tp.grad(loss, {bn.W[0]});
    CHECK(tp.replay_matches());
}

TEST_CASE("grad: non-finite adjoint is reported with the offending node") {
    SECTION("non-finite loss is rejected up front") {
        Tape tp;
        Var w = tp.leaf(-1.0);
        Var f = tp.log(w);  // NaN
        CHECK_THROWS_AS(tp.grad(f, {w}), Error);
    }
    SECTION("infinite adjoint mid-sweep names the node") {
        Tape tp;
        Var w = tp.leaf(0.0);
        Var f = tp.sqrt(w);  // value 0, derivative infinite
        try {
            tp.grad(f, {w});
            FAIL("expected diverged-gradient error");
        } catch (const Error& e) {
            CHECK(e.category() == "diverged-gradient");
            CHECK(std::string(e.what()).find("node") != std::string::npos);
        }
    }
}

TEST_CASE("tape: scalar primitives agree with closed forms") {
    Tape tp;
    Var x = tp.leaf(0.8);
    CHECK(tp.scalar(tp.abs_smooth(x, 1e-8)) == Catch::Approx(std::sqrt(0.64 + 1e-16)));
    CHECK(tp.scalar(tp.tanh(x)) == Catch::Approx(std::tanh(0.8)));
    auto g = tp.grad(tp.tanh(x), {x});
    CHECK(g[0](0, 0) == Catch::Approx(1.0 - std::tanh(0.8) * std::tanh(0.8)));

    // silu derivative helpers against finite differences
    for (double t : {-2.0, -0.5, 0.0, 0.4, 1.7}) {
        double h = 1e-6;
        CHECK(guarded_rel(ad::silu_d1(t), (ad::silu_val(t + h) - ad::silu_val(t - h)) / (2 * h)) <=
              1e-8);
        CHECK(guarded_rel(ad::silu_d2(t), (ad::silu_d1(t + h) - ad::silu_d1(t - h)) / (2 * h)) <=
              1e-7);
        CHECK(guarded_rel(ad::silu_d3(t), (ad::silu_d2(t + h) - ad::silu_d2(t - h)) / (2 * h)) <=
              1e-6);
    }
    // elu second derivative convention at zero: left limit
    CHECK(ad::elu_d2(0.0) == 1.0);
}
