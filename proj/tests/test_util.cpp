#include <catch2/catch_amalgamated.hpp>

#include "cwbounds/expr.hpp"
#include "cwbounds/nelder_mead.hpp"
#include "cwbounds/rng.hpp"

using namespace cwb;

TEST_CASE("expression parser: arithmetic, functions, variables") {
    const auto e = BoundExpr::parse("t1*exp(-2*t1) + abs(cos(t2))");
    Eigen::VectorXd theta(2);
    theta << 0.5, 3.0;
    CHECK(e.eval(theta) ==
          Catch::Approx(0.5 * std::exp(-1.0) + std::abs(std::cos(3.0))));

    const auto pw = BoundExpr::parse("piecewise(t1 - 1, 10, 20)");
    Eigen::VectorXd t(1);
    t << 0.5;
    CHECK(pw.eval(t) == 10.0);
    t << 2.0;
    CHECK(pw.eval(t) == 20.0);

    const auto cl = BoundExpr::parse("clamp(sin(t1), 0, 1, pi/2)");
    t << 0.3;
    CHECK(cl.eval(t) == Catch::Approx(std::sin(0.3)));
    t << 2.0;
    CHECK(cl.eval(t) == Catch::Approx(1.0));

    CHECK_THROWS(BoundExpr::parse("t1 +"));
    CHECK_THROWS(BoundExpr::parse("frobnicate(t1)"));
}

TEST_CASE("expression round trips through its printed form") {
    for (const char* src :
         {"5*t3 + 1", "clamp(sin(t3), 0, 1, pi/2)", "min(t1, max(t2, 2))"}) {
        const auto e = BoundExpr::parse(src);
        const auto rt = BoundExpr::parse(e.str());
        Eigen::VectorXd theta(3);
        for (double a : {0.0, 0.7, 2.5}) {
            theta.setConstant(a);
            CHECK(rt.eval(theta) == Catch::Approx(e.eval(theta)).margin(1e-14));
        }
    }
}

TEST_CASE("rng streams are deterministic and derived streams differ") {
    Rng a(123), b(123), c(124);
    bool all_equal_c = true;
    for (int i = 0; i < 1000; ++i) {
        const auto va = a.next();
        CHECK(va == b.next());
        if (va != c.next()) all_equal_c = false;
    }
    CHECK_FALSE(all_equal_c);

    Rng d0 = Rng::derive(9, 0), d1 = Rng::derive(9, 1);
    CHECK(d0.next() != d1.next());

    Rng u(5);
    for (int i = 0; i < 10000; ++i) {
        const double x = u.u01();
        CHECK(x >= 0.0);
        CHECK(x < 1.0);
    }
}

TEST_CASE("Nelder-Mead minimizes a shifted quadratic") {
    Eigen::VectorXd x0 = Eigen::VectorXd::Zero(4);
    auto f = [](const Eigen::VectorXd& x) {
        double s = 0.0;
        for (Eigen::Index j = 0; j < x.size(); ++j) {
            const double d = x(j) - (1.0 + static_cast<double>(j));
            s += (j + 1) * d * d;
        }
        return s;
    };
    NelderMeadOptions opt;
    opt.max_evals = 20000;
    const auto res = nelder_mead(f, x0, opt);
    CHECK(res.fval < 1e-8);
    for (Eigen::Index j = 0; j < 4; ++j)
        CHECK(res.x(j) == Catch::Approx(1.0 + static_cast<double>(j)).margin(1e-3));

    // target short-circuits the run
    opt.target = 1.0;
    const auto early = nelder_mead(f, x0, opt);
    CHECK(early.hit_target);
    CHECK(early.fval <= 1.0);
}
