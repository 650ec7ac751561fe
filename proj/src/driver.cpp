#include "tdsr/driver.hpp"

#include <array>
#include <chrono>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

namespace tdsr {

namespace {

constexpr std::array<std::pair<SplitStrategy, std::string_view>, 4> kSplits{{
    {SplitStrategy::single, "single"},
    {SplitStrategy::bell_sech, "bell_sech"},
    {SplitStrategy::bell_gauss, "bell_gauss"},
    {SplitStrategy::explicit_parts, "explicit"},
}};

void check_parts(std::span<const Complex> u0, const std::vector<CVector>& parts) {
    CVector sum(u0.size(), 0.0);
    for (const auto& p : parts) {
        if (p.size() != u0.size()) throw Error(ErrorKind::dimension, "pseudo initial condition has wrong size");
        if (max_abs(p) == 0.0) throw Error(ErrorKind::degenerate_split, "a pseudo initial condition vanishes");
        for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += p[i];
    }
    const double err = max_abs_diff(sum, u0);
    if (err > 1e-12 * std::max(1.0, max_abs(u0))) {
        std::ostringstream os;
        os << "pseudo initial conditions do not sum to u0 (max error " << err << ")";
        throw Error(ErrorKind::split, os.str());
    }
}

// sum_j R_j(t_i) v_j(., t_i)
SpaceTimeField combine(const std::vector<SpaceTimeField>& v, const std::vector<std::vector<double>>& r) {
    SpaceTimeField u(v[0].levels(), v[0].points());
    u.fill(0.0);
    for (std::size_t j = 0; j < v.size(); ++j)
        for (std::size_t i = 0; i < u.levels(); ++i) {
            const double f = r[j][i];
            auto out = u.level(i);
            const auto in = v[j].level(i);
            for (std::size_t k = 0; k < out.size(); ++k) out[k] += f * in[k];
        }
    return u;
}

double field_diff(const SpaceTimeField& a, const SpaceTimeField& b) {
    return max_abs_diff(a.flat(), b.flat());
}

bool finite(const SpaceTimeField& f) {
    for (const auto& z : f.flat())
        if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) return false;
    return true;
}

std::string at_iteration(int n, const std::string& what) {
    std::ostringstream os;
    os << "iteration " << n << ": " << what;
    return os.str();
}

}  // namespace

std::string_view split_name(SplitStrategy s) {
    for (const auto& [k, n] : kSplits)
        if (k == s) return n;
    return "unknown";
}

std::optional<SplitStrategy> parse_split(std::string_view name) {
    for (const auto& [k, n] : kSplits)
        if (n == name) return k;
    return std::nullopt;
}

PseudoICs split_initial_condition(std::span<const Complex> u0, SplitStrategy strategy, std::size_t count,
                                  std::span<const double> x, const std::vector<CVector>& parts) {
    if (count == 0) throw Error(ErrorKind::split, "at least one pseudo initial condition is needed");
    if (x.size() != u0.size()) throw Error(ErrorKind::dimension, "coordinates do not match u0");
    PseudoICs out;
    out.strategy = strategy;
    const std::size_t n = u0.size();
    auto require = [&](std::size_t want) {
        if (count != want) {
            std::ostringstream os;
            os << "split " << split_name(strategy) << " makes " << want << " parts, " << count << " requested";
            throw Error(ErrorKind::split, os.str());
        }
    };
    switch (strategy) {
        case SplitStrategy::single:
            require(1);
            out.parts.emplace_back(u0.begin(), u0.end());
            break;
        case SplitStrategy::bell_sech: {
            require(2);
            CVector f1(n), f2(n);
            const double w = std::sqrt(600.0);
            for (std::size_t i = 0; i < n; ++i) {
                f1[i] = 1.0 / (300.0 * std::cosh(x[i] / w));
                f2[i] = u0[i] - f1[i];
            }
            out.parts = {std::move(f1), std::move(f2)};
            break;
        }
        case SplitStrategy::bell_gauss: {
            require(3);
            CVector f1(n), f2(n), f3(n);
            for (std::size_t i = 0; i < n; ++i) {
                const double g = std::exp(-x[i] * x[i]);
                f2[i] = 0.05 * g;
                f3[i] = 0.15 * g;
                f1[i] = u0[i] - f2[i] - f3[i];
            }
            out.parts = {std::move(f1), std::move(f2), std::move(f3)};
            break;
        }
        case SplitStrategy::explicit_parts:
            require(parts.size());
            out.parts = parts;
            break;
    }
    check_parts(u0, out.parts);
    return out;
}

double mollifier(double x, double a, double b) {
    if (std::abs(x) >= a) return 0.0;
    return std::exp(b / (a * a) - b / (a * a - x * x));
}

SpaceTimeField generate_initial_guess(std::span<const double> x, std::size_t levels, const GaussianGuess& g) {
    SpaceTimeField out(levels, x.size());
    out.fill(0.0);
    if (g.count <= 0) return out;
    std::mt19937_64 rng(g.seed);
    std::uniform_real_distribution<double> centre(g.center - 0.5 * g.length, g.center + 0.5 * g.length);
    std::uniform_real_distribution<double> amplitude(-1.0, 1.0);
    std::vector<double> c(g.count);
    for (auto& ci : c) ci = centre(rng);
    double peak = 0.0;
    for (std::size_t i = 0; i < levels; ++i) {
        auto lv = out.level(i);
        for (int m = 0; m < g.count; ++m) {
            const double a = amplitude(rng);
            for (std::size_t k = 0; k < x.size(); ++k) {
                const double s = (x[k] - c[m]) / g.width;
                lv[k] += a * std::exp(-s * s);
            }
        }
        peak = std::max(peak, max_abs(lv));
    }
    if (peak == 0.0) return out;
    for (std::size_t i = 0; i < levels; ++i) {
        auto lv = out.level(i);
        for (std::size_t k = 0; k < x.size(); ++k)
            lv[k] *= mollifier(x[k] - g.center, g.mollifier_a, g.mollifier_b) / peak;
    }
    return out;
}

BlockSolution tdsr_solve_block(const Problem& problem, const LinearFlow& flow, std::span<const Complex> u0,
                               const PseudoICs& pseudo, std::size_t levels, const LawSet& laws,
                               const std::vector<SpaceTimeField>& guesses, const BlockOptions& options) {
    using clock = std::chrono::steady_clock;
    const std::size_t n = problem.points();
    const std::size_t parts = pseudo.parts.size();
    if (u0.size() != n || flow.points() != n) throw Error(ErrorKind::dimension, "block: size mismatch");
    if (levels < flow.min_levels()) {
        std::ostringstream os;
        os << "block needs at least " << flow.min_levels() << " time levels, got " << levels;
        throw Error(ErrorKind::insufficient_levels, os.str());
    }
    if (!(options.tolerance > 0.0)) throw Error(ErrorKind::config, "tolerance must be positive");
    if (laws.dissipative ? parts != 1 : (laws.kinds.size() != parts || laws.targets.size() != parts))
        throw Error(ErrorKind::config, "one pseudo initial condition per enforced law is required");

    const bool real = problem.real_field();
    const double dt = flow.dt();
    std::vector<Functional> functionals;
    for (auto k : laws.kinds) functionals.push_back(problem.functional(k));
    std::vector<std::span<const Complex>> ics;
    for (const auto& p : pseudo.parts) ics.emplace_back(p);

    std::vector<SpaceTimeField> propagated(parts, SpaceTimeField(levels, n));
    for (std::size_t j = 0; j < parts; ++j) {
        flow.propagate(pseudo.parts[j], propagated[j]);
        if (real) drop_imaginary(propagated[j].flat());
    }
    SpaceTimeField propagated_u0;
    if (options.check_identities) {
        propagated_u0 = SpaceTimeField(levels, n);
        flow.propagate(u0, propagated_u0);
    }

    std::vector<SpaceTimeField> v;
    if (guesses.empty()) {
        v = propagated;
    } else {
        if (guesses.size() != parts) throw Error(ErrorKind::config, "one guess per pseudo initial condition");
        for (const auto& g : guesses)
            if (g.levels() != levels || g.points() != n) throw Error(ErrorKind::dimension, "guess has wrong shape");
        v = guesses;
    }

    BlockSolution out;
    auto renorm = [&](const std::vector<SpaceTimeField>& vv, const std::vector<std::vector<double>>& previous) {
        RenormFactors r;
        if (laws.dissipative) {
            auto d = dissipative_renorm(vv[0], problem.grid(), problem.dissipation(), laws.p0, dt);
            r.factors = {std::move(d.factors)};
            r.diagnostics.residual_max = {0.0};
            for (double e : d.state.identity_residual)
                r.diagnostics.residual_max[0] = std::max(r.diagnostics.residual_max[0], e);
            out.dissipation = std::move(d.state);
        } else {
            std::vector<const SpaceTimeField*> ptrs;
            for (const auto& f : vv) ptrs.push_back(&f);
            r = renormalize(functionals, ptrs, laws.targets, ics, previous, problem.grid(), options.renorm);
        }
        return r;
    };

    RenormFactors R;
    try {
        R = renorm(v, {});
    } catch (const Error& e) {
        throw Error(e.kind(), at_iteration(0, e.what()));
    }
    SpaceTimeField u = combine(v, R.factors);

    double best = std::numeric_limits<double>::infinity();
    int since_best = 0, growth = 0;
    double last_metric = std::numeric_limits<double>::infinity();
    SpaceTimeField partial(levels, n), d_prev(levels, n);

    for (int it = 1; it <= options.max_iterations; ++it) {
        const auto start = clock::now();
        std::vector<SpaceTimeField> next(parts, SpaceTimeField(levels, n));
        partial.fill(0.0);
        d_prev.fill(0.0);
        for (std::size_t j = 0; j < parts; ++j) {
            for (std::size_t i = 0; i < levels; ++i) {
                const double f = R.factors[j][i];
                auto s = partial.level(i);
                const auto vj = v[j].level(i);
                for (std::size_t k = 0; k < n; ++k) s[k] += f * vj[k];
            }
            const SpaceTimeField d = flow.duhamel(problem.nonlinear(partial));
            for (std::size_t i = 0; i < levels; ++i) {
                const double inv = 1.0 / R.factors[j][i];
                auto out_j = next[j].level(i);
                const std::span<const Complex> p = propagated[j].level(i), di = d.level(i), dp = d_prev.level(i);
                for (std::size_t k = 0; k < n; ++k) out_j[k] = (p[k] + di[k] - dp[k]) * inv;
            }
            d_prev = d;
            if (real) drop_imaginary(next[j].flat());
        }

        IterationRecord rec;
        rec.iteration = it;
        if (options.check_identities) {
            const SpaceTimeField lhs = combine(next, R.factors);
            double err = 0.0;
            for (std::size_t i = 0; i < levels; ++i) {
                const std::span<const Complex> a = lhs.level(i), p = propagated_u0.level(i), d = d_prev.level(i);
                for (std::size_t k = 0; k < n; ++k) {
                    const Complex rhs = p[k] + d[k];
                    err = std::max(err, std::abs(a[k] - (real ? Complex(rhs.real(), 0.0) : rhs)));
                }
            }
            rec.telescoping = err;
        }

        RenormFactors R_next;
        try {
            R_next = renorm(next, R.factors);
        } catch (const Error& e) {
            throw Error(e.kind(), at_iteration(it, e.what()));
        }
        SpaceTimeField u_next = combine(next, R_next.factors);
        if (!finite(u_next)) throw Error(ErrorKind::divergence, at_iteration(it, "non-finite iterate"));

        rec.metric = field_diff(u_next, u);
        rec.law_residual = R_next.diagnostics.residual_max;
        rec.reconstruction = max_abs_diff(u_next.level(0), u0);
        rec.seconds = std::chrono::duration<double>(clock::now() - start).count();
        out.history.push_back(rec);

        v = std::move(next);
        R = std::move(R_next);
        u = std::move(u_next);
        out.metric = rec.metric;

        if (rec.metric <= options.tolerance) {
            out.converged = true;
            break;
        }
        if (rec.metric < best) {
            best = rec.metric;
            since_best = 0;
        } else {
            ++since_best;
        }
        growth = rec.metric > last_metric ? growth + 1 : 0;
        last_metric = rec.metric;
        if (best < options.stagnation_floor && since_best >= options.stagnation_window) {
            out.converged = true;
            out.stagnated = true;
            break;
        }
        if (growth >= options.divergence_window && rec.metric > options.divergence_factor * best) {
            std::ostringstream os;
            os << "successive-difference metric grew for " << growth << " iterations (now " << rec.metric
               << ", best " << best << "); try a shorter block";
            throw Error(ErrorKind::divergence, at_iteration(it, os.str()));
        }
    }

    out.u = std::move(u);
    out.v = std::move(v);
    out.factors = std::move(R.factors);
    if (!laws.dissipative) {
        out.law_drift.assign(parts, std::vector<double>(levels, 0.0));
        for (std::size_t m = 0; m < parts; ++m) {
            const double c = laws.targets[m];
            for (std::size_t i = 0; i < levels; ++i) {
                const double q = evaluate_functional(functionals[m], out.u.level(i), problem.grid()).real();
                out.law_drift[m][i] = std::abs(q - c) / std::max(std::abs(c), std::numeric_limits<double>::min());
            }
        }
    }
    return out;
}

BlockPlan make_plan(double t_end, double block_length, double dt) {
    if (!(t_end > 0.0) || !(block_length > 0.0) || !(dt > 0.0))
        throw Error(ErrorKind::config, "T, block length and time step must be positive");
    const double blocks = t_end / block_length, steps = block_length / dt;
    const double nb = std::round(blocks), ns = std::round(steps);
    if (std::abs(blocks - nb) > 1e-9 * blocks || std::abs(steps - ns) > 1e-9 * steps || nb < 1 || ns < 1) {
        std::ostringstream os;
        os << "T / T1 = " << blocks << " and T1 / dt = " << steps << " must both be integers";
        throw Error(ErrorKind::config, os.str());
    }
    return BlockPlan{t_end, static_cast<int>(nb), static_cast<int>(ns)};
}

RunResult multiblock_run(const Problem& problem, std::span<const Complex> u0, const RunOptions& options,
                         const BlockObserver& observer) {
    using clock = std::chrono::steady_clock;
    const BlockPlan& plan = options.plan;
    if (plan.blocks < 1 || plan.steps_per_block < 1) throw Error(ErrorKind::config, "empty block plan");
    const std::size_t n = problem.points();
    if (u0.size() != n) throw Error(ErrorKind::dimension, "u0 does not match the grid");
    const bool dissipative = problem.model().dissipative();
    if (dissipative && !options.laws.empty())
        throw Error(ErrorKind::config, "dissipative models take no conservation laws");
    if (!dissipative && options.laws.empty()) throw Error(ErrorKind::config, "at least one law must be enforced");
    for (auto k : options.laws) {
        problem.functional(k);
        if (!is_enforceable(k)) {
            std::ostringstream os;
            os << "law " << functional_name(k) << " cannot be enforced";
            throw Error(ErrorKind::validation, os.str());
        }
    }
    std::vector<Functional> monitored;
    for (auto k : options.monitored) monitored.push_back(problem.functional(k));

    const double dt = plan.dt();
    const std::size_t levels = static_cast<std::size_t>(plan.steps_per_block) + 1;
    const auto flow = problem.linear_flow(dt);
    const auto x = node_coordinates(problem.grid());
    const std::size_t keep = std::max<std::size_t>(1, options.keep_every);
    const std::size_t total_levels = static_cast<std::size_t>(plan.blocks) * plan.steps_per_block + 1;

    LawSet laws;
    laws.dissipative = dissipative;
    laws.kinds = options.laws;
    for (auto k : options.laws)
        laws.targets.push_back(evaluate_functional(problem.functional(k), u0, problem.grid()).real());
    const std::size_t factor_count = dissipative ? 1 : options.laws.size();

    RunResult result;
    result.factors.assign(factor_count, {});
    result.law_drift.assign(dissipative ? 0 : factor_count, {});
    result.invariants.assign(monitored.size(), {});
    for (const auto& q : monitored) result.invariant_reference.push_back(evaluate_functional(q, u0, problem.grid()));

    auto store = [&](std::size_t global, std::span<const Complex> level) {
        if (global % keep != 0 && global + 1 != total_levels) return;
        result.times.push_back(static_cast<double>(global) * dt);
        result.u.emplace_back(level.begin(), level.end());
        for (std::size_t m = 0; m < monitored.size(); ++m)
            result.invariants[m].push_back(evaluate_functional(monitored[m], level, problem.grid()));
    };

    CVector current(u0.begin(), u0.end());
    std::vector<CVector> explicit_rest;
    for (int b = 0; b < plan.blocks; ++b) {
        const auto start = clock::now();
        const double t_start = b * plan.block_length();
        BlockSolution sol;
        try {
            std::vector<CVector> parts = options.explicit_parts;
            if (options.split == SplitStrategy::explicit_parts && b > 0 && !parts.empty()) {
                // Later blocks keep f_2.. and put the remainder in f_1.
                for (std::size_t i = 0; i < n; ++i) {
                    Complex rest = 0.0;
                    for (std::size_t j = 1; j < parts.size(); ++j) rest += parts[j][i];
                    parts[0][i] = current[i] - rest;
                }
            }
            const std::size_t count = dissipative ? 1
                                      : options.split == SplitStrategy::explicit_parts ? parts.size()
                                                                                       : options.laws.size();
            const auto pseudo = split_initial_condition(current, options.split, count, x, parts);
            if (dissipative) {
                double p = 0.0;
                CVector sq(n);
                for (std::size_t i = 0; i < n; ++i) sq[i] = current[i] * current[i];
                p = integrate(problem.grid(), sq).real();
                laws.p0 = p;
            }
            std::vector<SpaceTimeField> guesses;
            if (options.guess == GuessPolicy::random) {
                for (std::size_t j = 0; j < pseudo.parts.size(); ++j) {
                    GaussianGuess g = options.random_guess;
                    g.seed = options.random_guess.seed + 1000003ULL * static_cast<std::uint64_t>(b) + j;
                    guesses.push_back(generate_initial_guess(x, levels, g));
                }
            }
            sol = tdsr_solve_block(problem, *flow, current, pseudo, levels, laws, guesses, options.block);
        } catch (const Error& e) {
            std::ostringstream os;
            os << "block " << b << " (t = " << t_start << "): " << e.what();
            result.failure = e.kind();
            result.failure_message = os.str();
            break;
        }

        BlockSummary summary;
        summary.index = b;
        summary.t_start = t_start;
        summary.iterations = static_cast<int>(sol.history.size());
        summary.metric = sol.metric;
        summary.converged = sol.converged;
        summary.stagnated = sol.stagnated;
        for (const auto& d : sol.law_drift)
            for (double e : d) summary.law_drift_max = std::max(summary.law_drift_max, e);
        summary.seconds = std::chrono::duration<double>(clock::now() - start).count();
        result.blocks.push_back(summary);
        result.histories.push_back(sol.history);

        const std::size_t first = b == 0 ? 0 : 1;
        for (std::size_t i = first; i < levels; ++i) {
            const std::size_t global = static_cast<std::size_t>(b) * plan.steps_per_block + i;
            store(global, sol.u.level(i));
            result.factor_times.push_back(static_cast<double>(global) * dt);
            for (std::size_t j = 0; j < factor_count; ++j) result.factors[j].push_back(sol.factors[j][i]);
            for (std::size_t j = 0; j < sol.law_drift.size(); ++j) result.law_drift[j].push_back(sol.law_drift[j][i]);
        }
        if (sol.dissipation)
            result.dissipation_residual.insert(result.dissipation_residual.end(),
                                               sol.dissipation->identity_residual.begin(),
                                               sol.dissipation->identity_residual.end());
        if (observer) observer(b, sol, t_start);
        const auto last = sol.u.level(levels - 1);
        current.assign(last.begin(), last.end());

        if (!sol.converged) {
            std::ostringstream os;
            os << "block " << b << " (t = " << t_start << "): no convergence after " << sol.history.size()
               << " iterations, metric " << sol.metric;
            result.failure = ErrorKind::convergence;
            result.failure_message = os.str();
            break;
        }
    }
    result.final_state = current;
    result.complete = !result.failure.has_value();
    return result;
}

}  // namespace tdsr
