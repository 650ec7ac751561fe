#include <doctest.h>

#include <cmath>
#include <cstring>

#include "tdsr/driver.hpp"
#include "tdsr/error.hpp"

using namespace tdsr;

namespace {

const double kBeta = 1.0 / std::sqrt(10.0);

struct Soliton {
    Problem problem;
    std::vector<double> x;
    CVector u0;

    explicit Soliton(double alpha = 6.0, double length = 60.0, std::size_t n = 256)
        : problem(kdv_model(alpha, 1.0), PeriodicGrid::line(length, n)), x(node_coordinates(problem.grid())),
          u0(x.size()) {
        for (std::size_t i = 0; i < x.size(); ++i) u0[i] = kdv_soliton_exact(kBeta, x[i], 0.0);
    }

    LawSet laws(std::vector<FunctionalKind> kinds) const {
        LawSet l;
        l.kinds = kinds;
        for (auto k : kinds) l.targets.push_back(evaluate_functional(problem.functional(k), u0, problem.grid()).real());
        return l;
    }
};

void require_equal(const SpaceTimeField& a, const SpaceTimeField& b) {
    REQUIRE(a.flat().size() == b.flat().size());
    CHECK(std::memcmp(a.flat().data(), b.flat().data(), a.flat().size() * sizeof(Complex)) == 0);
}

}  // namespace

TEST_CASE("split strategies") {
    Soliton s;
    SUBCASE("single") {
        const auto p = split_initial_condition(s.u0, SplitStrategy::single, 1, s.x);
        REQUIRE(p.parts.size() == 1);
        CHECK(max_abs_diff(p.parts[0], s.u0) == 0.0);
    }
    SUBCASE("bell_sech") {
        const auto p = split_initial_condition(s.u0, SplitStrategy::bell_sech, 2, s.x);
        REQUIRE(p.parts.size() == 2);
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            const double f1 = 1.0 / (300.0 * std::cosh(s.x[i] / std::sqrt(600.0)));
            CHECK(p.parts[0][i].real() == doctest::Approx(f1).epsilon(1e-15));
            CHECK(std::abs(p.parts[0][i] + p.parts[1][i] - s.u0[i]) <= 1e-16);
        }
    }
    SUBCASE("bell_gauss") {
        const auto p = split_initial_condition(s.u0, SplitStrategy::bell_gauss, 3, s.x);
        REQUIRE(p.parts.size() == 3);
        const std::size_t mid = s.x.size() / 2;
        CHECK(s.x[mid] == 0.0);
        CHECK(p.parts[1][mid].real() == doctest::Approx(0.05));
        CHECK(p.parts[2][mid].real() == doctest::Approx(0.15));
    }
    SUBCASE("explicit parts are validated") {
        CVector half(s.u0.size()), zero(s.u0.size(), 0.0);
        for (std::size_t i = 0; i < half.size(); ++i) half[i] = 0.5 * s.u0[i];
        CHECK_NOTHROW(split_initial_condition(s.u0, SplitStrategy::explicit_parts, 2, s.x, {half, half}));
        try {
            split_initial_condition(s.u0, SplitStrategy::explicit_parts, 2, s.x, {half, zero});
            FAIL("expected a split error");
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::degenerate_split);
        }
        auto off = half;
        off[3] += 1e-9;
        try {
            split_initial_condition(s.u0, SplitStrategy::explicit_parts, 2, s.x, {half, off});
            FAIL("expected a split error");
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::split);
        }
    }
    SUBCASE("count must match the strategy") {
        CHECK_THROWS_AS(split_initial_condition(s.u0, SplitStrategy::bell_sech, 3, s.x), Error);
    }
}

TEST_CASE("mollifier and random guesses") {
    for (double a : {0.5, 3.0, 28.5})
        for (double b : {0.1, 1.0, 4.0}) {
            CHECK(mollifier(0.0, a, b) == doctest::Approx(1.0).epsilon(1e-15));
            CHECK(mollifier(a, a, b) == 0.0);
            CHECK(mollifier(-a, a, b) == 0.0);
            CHECK(mollifier(0.5 * a, a, b) < 1.0);
        }

    const auto x = node_coordinates(PeriodicGrid::line(60.0, 128));
    GaussianGuess g;
    g.count = 10;
    g.length = 60.0;
    g.mollifier_a = 0.95 * 30.0;
    g.seed = 42;
    const auto a = generate_initial_guess(x, 6, g);
    const auto b = generate_initial_guess(x, 6, g);
    require_equal(a, b);
    CHECK(max_abs(a.flat()) == doctest::Approx(1.0).epsilon(0.2));
    for (std::size_t i = 0; i < 6; ++i)
        for (std::size_t k = 0; k < x.size(); ++k)
            if (std::abs(x[k]) >= g.mollifier_a) CHECK(a.level(i)[k] == Complex(0.0));

    g.seed = 43;
    CHECK(max_abs_diff(generate_initial_guess(x, 6, g).flat(), a.flat()) > 0.0);
    g.count = 0;
    CHECK(max_abs(generate_initial_guess(x, 6, g).flat()) == 0.0);
}

TEST_CASE("block plans") {
    const auto p = make_plan(240.0, 30.0, 0.1875);
    CHECK(p.blocks == 8);
    CHECK(p.steps_per_block == 160);
    CHECK(p.dt() == doctest::Approx(0.1875));
    CHECK_THROWS_AS(make_plan(10.0, 3.0, 0.5), Error);
    CHECK_THROWS_AS(make_plan(10.0, 10.0, 0.3), Error);
    CHECK_THROWS_AS(make_plan(10.0, 10.0, -1.0), Error);
}

TEST_CASE("zero nonlinearity gives the linear flow") {
    Soliton s(0.0);
    const double dt = 0.05;
    const std::size_t levels = 21;
    const auto flow = s.problem.linear_flow(dt);
    const auto pseudo = split_initial_condition(s.u0, SplitStrategy::single, 1, s.x);
    const auto sol = tdsr_solve_block(s.problem, *flow, s.u0, pseudo, levels, s.laws({FunctionalKind::kdv_momentum}));
    CHECK(sol.converged);
    CHECK(sol.history.size() <= 2);

    const auto& grid = std::get<PeriodicGrid>(s.problem.grid());
    const auto symbol = kdv_symbol(grid, 1.0);
    for (std::size_t i = 0; i < levels; ++i) {
        CVector expected(s.u0.size());
        apply_semigroup_symbol(grid, symbol, dt * static_cast<double>(i), s.u0, expected);
        drop_imaginary(expected);
        CHECK(max_abs_diff(sol.u.level(i), expected) <= 1e-13);
        CHECK(sol.law_drift[0][i] <= 1e-14);
    }
}

TEST_CASE("iteration identities hold at every iterate") {
    Soliton s;
    const std::size_t levels = 41;
    const auto flow = s.problem.linear_flow(0.05);
    BlockOptions opts;
    opts.check_identities = true;

    SUBCASE("single law") {
        for (auto kind : {FunctionalKind::kdv_mass, FunctionalKind::kdv_momentum, FunctionalKind::kdv_hamiltonian}) {
            const auto pseudo = split_initial_condition(s.u0, SplitStrategy::single, 1, s.x);
            const auto sol = tdsr_solve_block(s.problem, *flow, s.u0, pseudo, levels, s.laws({kind}), {}, opts);
            CHECK(sol.converged);
            for (const auto& rec : sol.history) {
                CHECK(rec.telescoping <= 1e-11);
                CHECK(rec.reconstruction <= 1e-12);
                CHECK(rec.law_residual[0] <= 1e-13);
            }
            for (double d : sol.law_drift[0]) CHECK(d <= 1e-13);
        }
    }
    SUBCASE("mass and momentum") {
        const auto pseudo = split_initial_condition(s.u0, SplitStrategy::bell_sech, 2, s.x);
        const auto laws = s.laws({FunctionalKind::kdv_mass, FunctionalKind::kdv_momentum});
        const auto sol = tdsr_solve_block(s.problem, *flow, s.u0, pseudo, levels, laws, {}, opts);
        CHECK(sol.converged);
        for (const auto& rec : sol.history) {
            CHECK(rec.telescoping <= 1e-11);
            CHECK(rec.reconstruction <= 1e-12);
            CHECK(rec.law_residual[0] <= 1e-13);
            CHECK(rec.law_residual[1] <= 1e-13);
        }
    }
}

TEST_CASE("block errors") {
    Soliton s;
    const auto flow = s.problem.linear_flow(0.05);
    const auto pseudo = split_initial_condition(s.u0, SplitStrategy::single, 1, s.x);
    const auto laws = s.laws({FunctionalKind::kdv_momentum});
    try {
        tdsr_solve_block(s.problem, *flow, s.u0, pseudo, 3, laws);
        FAIL("expected an insufficient-levels error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::insufficient_levels);
    }
    CHECK_THROWS_AS(tdsr_solve_block(s.problem, *flow, s.u0, pseudo, 11,
                                     s.laws({FunctionalKind::kdv_mass, FunctionalKind::kdv_momentum})),
                    Error);

    // A block far longer than the fixed point can bridge.
    Soliton big(6.0, 60.0, 256);
    for (auto& v : big.u0) v *= 12.0;
    const auto long_flow = big.problem.linear_flow(0.05);
    const auto p2 = split_initial_condition(big.u0, SplitStrategy::single, 1, big.x);
    try {
        tdsr_solve_block(big.problem, *long_flow, big.u0, p2, 401, big.laws({FunctionalKind::kdv_momentum}));
        FAIL("expected a divergence");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("iteration") != std::string::npos);
    }
}

TEST_CASE("one block equals the block solver") {
    Soliton s;
    RunOptions o;
    o.plan = make_plan(2.0, 2.0, 0.05);
    o.laws = {FunctionalKind::kdv_momentum};
    const auto run = multiblock_run(s.problem, s.u0, o);
    REQUIRE(run.complete);

    const auto flow = s.problem.linear_flow(0.05);
    const auto pseudo = split_initial_condition(s.u0, SplitStrategy::single, 1, s.x);
    const auto sol = tdsr_solve_block(s.problem, *flow, s.u0, pseudo, 41, s.laws({FunctionalKind::kdv_momentum}));
    REQUIRE(run.u.size() == 41);
    for (std::size_t i = 0; i < 41; ++i)
        CHECK(std::memcmp(run.u[i].data(), sol.u.level(i).data(), run.u[i].size() * sizeof(Complex)) == 0);
    CHECK(run.factors[0] == sol.factors[0]);
}

TEST_CASE("multi-block runs are deterministic and join at the interfaces") {
    Soliton s;
    RunOptions o;
    o.plan = make_plan(4.0, 1.0, 0.05);
    o.laws = {FunctionalKind::kdv_momentum};
    o.monitored = {FunctionalKind::kdv_mass, FunctionalKind::kdv_momentum};
    o.guess = GuessPolicy::random;
    o.random_guess.count = 6;
    o.random_guess.length = 60.0;
    o.random_guess.mollifier_a = 0.95 * 30.0;
    o.random_guess.seed = 7;
    const auto a = multiblock_run(s.problem, s.u0, o);
    const auto b = multiblock_run(s.problem, s.u0, o);
    REQUIRE(a.complete);
    REQUIRE(a.blocks.size() == 4);
    CHECK(a.times.size() == 81);
    CHECK(a.times.back() == doctest::Approx(4.0));
    REQUIRE(a.u.size() == b.u.size());
    for (std::size_t i = 0; i < a.u.size(); ++i)
        CHECK(std::memcmp(a.u[i].data(), b.u[i].data(), a.u[i].size() * sizeof(Complex)) == 0);
    for (const auto& q : a.invariants[1])
        CHECK(std::abs(q - a.invariant_reference[1]) <= 1e-13 * std::abs(a.invariant_reference[1]));

    double err = 0.0;
    for (std::size_t i = 0; i < s.x.size(); ++i)
        err = std::max(err, std::abs(a.final_state[i] - kdv_soliton_exact(kBeta, s.x[i], 4.0)));
    CHECK(err <= 1e-6);
}

TEST_CASE("laws foreign to the model are rejected") {
    Soliton s;
    RunOptions o;
    o.plan = make_plan(1.0, 1.0, 0.05);
    o.laws = {FunctionalKind::nls_power};
    try {
        multiblock_run(s.problem, s.u0, o);
        FAIL("expected a validation error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::validation);
    }
}
