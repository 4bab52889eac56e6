#include <catch2/catch_amalgamated.hpp>

#include "qdo/polynomial.hpp"

using qdo::cxd;
using qdo::Polynomial;

TEST_CASE("polynomial evaluation and arithmetic") {
    Polynomial p(std::vector<cxd>{cxd(1.0), cxd(-2.0), cxd(1.0)}); // (t-1)^2
    CHECK(p.eval(1.0) == cxd(0.0));
    CHECK(p.eval(3.0) == cxd(4.0));
    CHECK(p.degree() == 2);

    Polynomial q = Polynomial::variable(); // t
    Polynomial prod = p * q;
    CHECK(prod.eval(2.0) == cxd(2.0)); // (2-1)^2 * 2
    CHECK(prod.degree() == 3);

    CHECK((p + (-p)).is_zero());
    CHECK(p.derivative().eval(3.0) == cxd(4.0)); // 2(t-1)
    CHECK(p.antiderivative().derivative() == p);
}

TEST_CASE("complex coefficients conjugate as functions of real t") {
    Polynomial p(std::vector<cxd>{cxd(1.0, 2.0), cxd(0.0, -1.0)});
    double t = 0.37;
    CHECK(p.conjugated().eval(t) == std::conj(p.eval(t)));
}

TEST_CASE("rebasing gives Taylor coefficients at the shift point") {
    Polynomial p(std::vector<cxd>{cxd(2.0), cxd(0.0), cxd(3.0), cxd(-1.0)}); // 2 + 3t^2 - t^3
    double s = 0.8;
    auto b = p.rebased(s);
    // reconstruct at a few points: sum b_j (t-s)^j must reproduce p(t)
    for (double t : {0.1, 0.5, 0.9, 1.7}) {
        cxd acc(0.0);
        double u = 1.0;
        for (size_t j = 0; j < b.size(); ++j) {
            acc += b[j] * u;
            u *= (t - s);
        }
        CHECK(std::abs(acc - p.eval(t)) < 1e-14);
    }
}

TEST_CASE("exact deflation at endpoint zeros") {
    // p = t^2 (t - 1): exact zeros at 0 (double) and 1 (simple)
    Polynomial p(std::vector<cxd>{cxd(0.0), cxd(0.0), cxd(-1.0), cxd(1.0)});
    int mult = 0;
    Polynomial q = p.deflated_at(0.0, mult);
    CHECK(mult == 2);
    CHECK(q.eval(2.0) == cxd(1.0)); // t - 1 at 2
    int mult1 = 0;
    Polynomial r = q.deflated_at(1.0, mult1);
    CHECK(mult1 == 1);
    CHECK(r.is_constant());
    CHECK(r.constant_value() == cxd(1.0));
}

TEST_CASE("real zeros of a complex polynomial on an interval") {
    // (t - 0.3)(t - 0.7), real
    Polynomial p(std::vector<cxd>{cxd(0.21), cxd(-1.0), cxd(1.0)});
    auto z = p.real_zeros_in(0.0, 1.0);
    REQUIRE(z.size() == 2);
    CHECK(std::abs(z[0] - 0.3) < 1e-10);
    CHECK(std::abs(z[1] - 0.7) < 1e-10);

    // t - i never vanishes on the real line
    Polynomial c(std::vector<cxd>{cxd(0.0, -1.0), cxd(1.0)});
    CHECK(c.real_zeros_in(-10.0, 10.0).empty());
}
