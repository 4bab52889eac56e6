#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "qdo/extensions.hpp"

using qdo::cxd;
using qdo::errc;
using qdo::Error;
using qdo::BlockDiagonal;
using qdo::ExtensionSign;

namespace {

Eigen::MatrixXcd random_matrix(int n, std::mt19937& gen) {
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    Eigen::MatrixXcd M(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) M(i, j) = cxd(dist(gen), dist(gen));
    return M;
}

Eigen::MatrixXcd random_unitary(int n, std::mt19937& gen) {
    Eigen::HouseholderQR<Eigen::MatrixXcd> qr(random_matrix(n, gen));
    return qr.householderQ() * Eigen::MatrixXcd::Identity(n, n);
}

} // namespace

TEST_CASE("extension matrices are classified") {
    SECTION("identity: unitary symmetric block-diagonal contraction") {
        auto fl = qdo::classify_extension_matrix(Eigen::MatrixXcd::Identity(4, 4));
        CHECK(fl.contraction);
        CHECK_FALSE(fl.borderline_contraction);
        CHECK(fl.unitary);
        CHECK(fl.symmetric);
        CHECK(fl.block_diagonal == BlockDiagonal::yes);
        CHECK(fl.operator_norm == 1.0);
    }
    SECTION("half identity: strict contraction, not unitary") {
        auto fl = qdo::classify_extension_matrix(0.5 * Eigen::MatrixXcd::Identity(2, 2));
        CHECK(fl.contraction);
        CHECK_FALSE(fl.unitary);
        CHECK(fl.operator_norm == 0.5);
    }
    SECTION("swap matrix: unitary, symmetric, not block-diagonal") {
        Eigen::MatrixXcd K(2, 2);
        K << 0, 1,
             1, 0;
        auto fl = qdo::classify_extension_matrix(K);
        CHECK(fl.unitary);
        CHECK(fl.symmetric);
        CHECK(fl.block_diagonal == BlockDiagonal::no);
    }
    SECTION("odd order: block test not applicable") {
        auto fl = qdo::classify_extension_matrix(Eigen::MatrixXcd::Identity(3, 3));
        CHECK(fl.block_diagonal == BlockDiagonal::not_applicable);
    }
    SECTION("borderline norm counts as contraction with a flag") {
        auto fl = qdo::classify_extension_matrix((1.0 + 5e-13) * Eigen::MatrixXcd::Identity(2, 2));
        CHECK(fl.contraction);
        CHECK(fl.borderline_contraction);
        auto fl2 = qdo::classify_extension_matrix(1.1 * Eigen::MatrixXcd::Identity(2, 2));
        CHECK_FALSE(fl2.contraction);
    }
    SECTION("non-square input is rejected") {
        Eigen::MatrixXcd K = Eigen::MatrixXcd::Zero(2, 3);
        try {
            qdo::classify_extension_matrix(K);
            FAIL("expected a parameter error");
        } catch (const Error& e) {
            CHECK(e.code() == errc::parameter);
        }
    }
}

TEST_CASE("boundary condition matrices specialize correctly at K = +/- I") {
    for (int m : {2, 3, 4, 5}) {
        auto T = qdo::make_boundary_triplet(m);
        const cxd two_i(0.0, 2.0);
        Eigen::MatrixXcd Bd = qdo::boundary_condition_matrix(qdo::dirichlet_extension(m), T);
        CHECK((Bd - two_i * T.G2).cwiseAbs().maxCoeff() < 1e-15);
        Eigen::MatrixXcd Bn = qdo::boundary_condition_matrix(qdo::neumann_extension(m), T);
        CHECK((Bn + 2.0 * T.G1).cwiseAbs().maxCoeff() < 1e-15);
    }
}

TEST_CASE("unitary parameters always give full-rank boundary conditions") {
    std::mt19937 gen(4242u);
    for (int m : {2, 3, 4}) {
        auto T = qdo::make_boundary_triplet(m);
        for (int trial = 0; trial < 10; ++trial) {
            auto spec = qdo::make_extension(random_unitary(m, gen));
            REQUIRE(spec.flags.unitary);
            Eigen::MatrixXcd B = qdo::boundary_condition_matrix(spec, T);
            Eigen::JacobiSVD<Eigen::MatrixXcd> svd(B);
            INFO("order m = " << m << ", trial " << trial);
            CHECK(svd.singularValues()(m - 1) > 1e-10 * svd.singularValues()(0));
        }
    }
}

TEST_CASE("row-space comparison decides extension equality") {
    std::mt19937 gen(31415u);
    auto T = qdo::make_boundary_triplet(4);

    SECTION("K = I describes the same extension with either sign") {
        auto cmp = qdo::same_extension(qdo::make_extension(Eigen::MatrixXcd::Identity(4, 4), ExtensionSign::plus),
                                       qdo::make_extension(Eigen::MatrixXcd::Identity(4, 4), ExtensionSign::minus), T);
        CHECK(cmp.equal);
        CHECK_FALSE(cmp.degenerate);
    }
    SECTION("a unitary K with plus sign equals its inverse with minus sign") {
        for (int trial = 0; trial < 5; ++trial) {
            Eigen::MatrixXcd U = random_unitary(4, gen);
            auto cmp = qdo::same_extension(qdo::make_extension(U, ExtensionSign::plus),
                                           qdo::make_extension(U.inverse(), ExtensionSign::minus), T);
            CHECK(cmp.equal);
        }
    }
    SECTION("a unitary K with plus sign differs from itself with minus sign in general") {
        Eigen::MatrixXcd U = random_unitary(4, gen);
        auto cmp = qdo::same_extension(qdo::make_extension(U, ExtensionSign::plus),
                                       qdo::make_extension(U, ExtensionSign::minus), T);
        CHECK_FALSE(cmp.equal);
    }
    SECTION("vanishing lower and upper quasi-derivative conditions differ") {
        auto cmp = qdo::same_extension(qdo::dirichlet_extension(4), qdo::neumann_extension(4), T);
        CHECK_FALSE(cmp.equal);
        CHECK(cmp.rank_stacked == 8);
    }
}

TEST_CASE("separated parameters decouple the endpoint conditions") {
    std::mt19937 gen(2718u);
    const int n = 2, m = 2 * n;
    auto T = qdo::make_boundary_triplet(m);
    auto spec = qdo::separated_extension(random_matrix(n, gen), random_matrix(n, gen));
    REQUIRE(spec.flags.block_diagonal == BlockDiagonal::yes);
    Eigen::MatrixXcd B = qdo::boundary_condition_matrix(spec, T);
    // First n rows involve only left-endpoint data, last n only right-endpoint.
    CHECK(B.topRightCorner(n, m).cwiseAbs().maxCoeff() == 0.0);
    CHECK(B.bottomLeftCorner(n, m).cwiseAbs().maxCoeff() == 0.0);
    CHECK(B.topLeftCorner(n, m).cwiseAbs().maxCoeff() > 0.0);
    CHECK(B.bottomRightCorner(n, m).cwiseAbs().maxCoeff() > 0.0);

    SECTION("scalar blocks equal to one reproduce vanishing lower derivatives") {
        Eigen::MatrixXcd one = Eigen::MatrixXcd::Identity(1, 1);
        auto T2 = qdo::make_boundary_triplet(2);
        auto cmp = qdo::same_extension(qdo::separated_extension(one, one), qdo::dirichlet_extension(2), T2);
        CHECK(cmp.equal);
    }
}

TEST_CASE("quasi-periodic parameters annihilate exactly the matched boundary subspace") {
    for (int m : {2, 3, 4}) {
        for (double theta : {0.0, 1.0471975511965976}) { // 0 and pi/3
            auto T = qdo::make_boundary_triplet(m);
            auto spec = qdo::quasi_periodic_extension(T, theta);
            INFO("order m = " << m << ", theta = " << theta);
            CHECK(spec.flags.unitary);
            Eigen::MatrixXcd S(2 * m, m);
            S.topRows(m) = Eigen::MatrixXcd::Identity(m, m);
            S.bottomRows(m) = std::exp(cxd(0.0, theta)) * Eigen::MatrixXcd::Identity(m, m);
            Eigen::MatrixXcd B = qdo::boundary_condition_matrix(spec, T);
            CHECK((B * S).cwiseAbs().maxCoeff() < 1e-12);
            // and B has full rank m, so its kernel is exactly that subspace
            Eigen::JacobiSVD<Eigen::MatrixXcd> svd(B);
            CHECK(svd.singularValues()(m - 1) > 1e-10 * svd.singularValues()(0));
        }
    }

    SECTION("both signs produce the same extension") {
        auto T = qdo::make_boundary_triplet(2);
        auto plus = qdo::quasi_periodic_extension(T, 0.7, ExtensionSign::plus);
        auto minus = qdo::quasi_periodic_extension(T, 0.7, ExtensionSign::minus);
        CHECK(qdo::same_extension(plus, minus, T).equal);
    }
}
