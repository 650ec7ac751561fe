#include "scenarios.hpp"

#include <cmath>
#include <numbers>

#include "tdsr/error.hpp"

namespace tdsr::app {

namespace {

using V = ValueType;

[[noreturn]] void fail(const std::string& message) { throw Error(ErrorKind::config, message); }

void common_keys(Settings& s, std::string_view name) {
    s.declare("scenario.name", V::text, std::string(name));
    s.declare("time.dt", V::real, "");
    s.declare("solver.split", V::text, "single");
    s.declare("solver.tolerance", V::real, "1e-13");
    s.declare("solver.max_iterations", V::integer, "200");
    s.declare("solver.guess", V::text, "linear");
    s.declare("solver.seed", V::integer, "1");
    s.declare("solver.check_identities", V::flag, "false");
    s.declare("guess.count", V::integer, "10");
    s.declare("guess.width", V::real, "1");
    s.declare("guess.mollifier_b", V::real, "1");
    s.declare("output.snapshots", V::list, "");
    s.declare("output.field", V::flag, "false");
    s.declare("output.every", V::integer, "1");
}

void time_keys(Settings& s, const std::string& t_end, const std::string& blocks, const std::string& steps) {
    s.declare("time.t_end", V::real, t_end);
    s.declare("time.blocks", V::integer, blocks);
    s.declare("time.steps", V::integer, steps);
}

void guess_window(Settings& s, const std::string& center, const std::string& length, const std::string& a) {
    s.declare("guess.center", V::real, center);
    s.declare("guess.length", V::real, length);
    s.declare("guess.mollifier_a", V::real, a);
}

void soliton_keys(Settings& s, const std::string& points, const std::string& length) {
    s.declare("grid.points", V::integer, points);
    s.declare("grid.length", V::real, length);
    s.declare("model.beta", V::real, "0.31622776601683794");
}

struct Entry {
    ScenarioInfo info;
    void (*defaults)(Settings&);
};

const std::vector<Entry>& entries() {
    static const std::vector<Entry> table = {
        {{"kdv-soliton-momentum", "Fig. 1", "KdV soliton, momentum enforced, L=100 N=2048 dt=0.02 T=10"},
         [](Settings& s) {
             soliton_keys(s, "2048", "100");
             time_keys(s, "10", "1", "500");
             s.declare("solver.laws", V::list, "kdv_momentum");
             s.declare("output.snapshots", V::list, "0, 5, 10");
             guess_window(s, "0", "100", "47.5");
         }},
        {{"zabusky-kruskal", "Figs. 3-4", "u0=cos(pi x), alpha=1 eps=0.022, N=256, blocks of 20 steps to t=30.4/pi"},
         [](Settings& s) {
             s.declare("grid.points", V::integer, "256");
             s.declare("model.alpha", V::real, "1");
             s.declare("model.epsilon", V::real, "0.022");
             time_keys(s, "30.4/pi", "608", "20");
             s.declare("solver.laws", V::list, "kdv_momentum");
             s.declare("output.snapshots", V::list, "0, 1/pi, 3.6/pi");
             s.set("output.every", "20");
             guess_window(s, "1", "2", "0.95");
         }},
        {{"ac-travelling-wave", "Fig. 5", "Allen-Cahn front on [-2,2], Chebyshev/Neumann, eps=0.05 N=1024 dt=1.25e-4 T=0.02"},
         [](Settings& s) {
             s.declare("grid.points", V::integer, "1024");
             s.declare("model.epsilon", V::real, "0.05");
             time_keys(s, "0.02", "2", "80");
             s.declare("solver.laws", V::list, "");
             s.declare("output.snapshots", V::list, "0, 0.01, 0.02");
             guess_window(s, "0", "4", "1.9");
         }},
        {{"ac-metastable", "Fig. 6", "Dirichlet Allen-Cahn, D=0.01 gamma=1, N=256 dt=0.016 T=80 in blocks of 8"},
         [](Settings& s) {
             s.declare("grid.points", V::integer, "256");
             s.declare("model.diffusion", V::real, "0.01");
             s.declare("model.gamma", V::real, "1");
             time_keys(s, "80", "10", "500");
             s.declare("solver.laws", V::list, "");
             s.declare("output.snapshots", V::list, "0, 20, 40, 80");
             s.set("output.every", "250");
             guess_window(s, "0", "2", "0.95");
         }},
        {{"kdv-mass-momentum", "Fig. 7", "KdV soliton, mass and momentum enforced, L=800 N=16384 dt=0.5 T=60"},
         [](Settings& s) {
             soliton_keys(s, "16384", "800");
             time_keys(s, "60", "1", "120");
             s.declare("solver.laws", V::list, "kdv_mass, kdv_momentum");
             s.set("solver.split", "bell_sech");
             guess_window(s, "0", "800", "380");
         }},
        {{"kdv-two-soliton", "Fig. 8", "Two-soliton collision, mass and momentum enforced, L=800 N=16384 dt=0.5 T=200"},
         [](Settings& s) {
             s.declare("grid.points", V::integer, "16384");
             s.declare("grid.length", V::real, "800");
             s.declare("model.beta1", V::real, "0.31622776601683794");
             s.declare("model.beta2", V::real, "0.15811388300841897");
             s.declare("model.offset", V::real, "40");
             time_keys(s, "200", "10", "40");
             s.declare("solver.laws", V::list, "kdv_mass, kdv_momentum");
             s.set("solver.split", "bell_sech");
             s.set("output.every", "10");
             s.declare("output.snapshots", V::list, "0, 100, 200");
             guess_window(s, "0", "800", "380");
         }},
        {{"kdv-mass-hamiltonian", "Fig. 9", "KdV soliton, mass and Hamiltonian enforced by Newton, L=800 N=16384 dt=0.5 T=30"},
         [](Settings& s) {
             soliton_keys(s, "16384", "800");
             time_keys(s, "30", "3", "20");
             s.declare("solver.laws", V::list, "kdv_mass, kdv_hamiltonian");
             s.set("solver.split", "bell_sech");
             guess_window(s, "0", "800", "380");
         }},
        {{"kdv-three-laws", "Fig. 10", "KdV soliton, mass, momentum and Hamiltonian enforced, L=100 N=2048 dt=0.5 T=5"},
         [](Settings& s) {
             soliton_keys(s, "2048", "100");
             time_keys(s, "5", "1", "10");
             s.declare("solver.laws", V::list, "kdv_mass, kdv_momentum, kdv_hamiltonian");
             s.set("solver.split", "bell_gauss");
             guess_window(s, "0", "100", "47.5");
         }},
        {{"nls2d-townes", "Fig. 11", "2D cubic NLS Townes soliton, power enforced, 40x40 box 256^2 dt=0.05 T=2"},
         [](Settings& s) {
             s.declare("grid.points", V::integer, "256");
             s.declare("grid.length", V::real, "40");
             s.declare("model.lambda", V::real, "1");
             s.declare("model.cache_dir", V::text, "");
             time_keys(s, "2", "1", "40");
             s.declare("solver.laws", V::list, "nls_power");
             s.declare("output.snapshots", V::list, "0, 2");
             guess_window(s, "0", "40", "19");
         }},
    };
    return table;
}

const Entry& find(std::string_view name) {
    for (const auto& e : entries())
        if (e.info.name == name) return e;
    fail("unknown scenario '" + std::string(name) + "' (see `list`)");
}

CVector sampled(const std::vector<double>& x, auto&& f) {
    CVector out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = f(x[i]);
    return out;
}

std::size_t checked_points(const Settings& s) {
    const auto n = s.integer("grid.points");
    if (n < 4) fail("grid.points must be at least 4");
    return static_cast<std::size_t>(n);
}

RunOptions run_options(const Settings& s, const Problem& problem) {
    RunOptions o;
    const auto blocks = s.integer("time.blocks");
    const auto steps = s.integer("time.steps");
    if (blocks < 1 || steps < 1) fail("time.blocks and time.steps must be positive");
    const double t_end = s.real("time.t_end");
    o.plan = make_plan(t_end, t_end / static_cast<double>(blocks), scenario_dt(s));

    for (const auto& name : s.list("solver.laws")) {
        const auto kind = parse_functional(name);
        if (!kind) fail("unknown law '" + name + "'");
        o.laws.push_back(*kind);
    }
    const auto split = parse_split(s.text("solver.split"));
    if (!split) fail("unknown split '" + s.text("solver.split") + "'");
    if (*split == SplitStrategy::explicit_parts) fail("explicit splits are not available from a config");
    o.split = *split;

    const auto& guess = s.text("solver.guess");
    if (guess == "linear")
        o.guess = GuessPolicy::linear;
    else if (guess == "random")
        o.guess = GuessPolicy::random;
    else
        fail("solver.guess must be linear or random");
    o.random_guess.count = static_cast<int>(s.integer("guess.count"));
    o.random_guess.width = s.real("guess.width");
    o.random_guess.mollifier_a = s.real("guess.mollifier_a");
    o.random_guess.mollifier_b = s.real("guess.mollifier_b");
    o.random_guess.center = s.real("guess.center");
    o.random_guess.length = s.real("guess.length");
    o.random_guess.seed = static_cast<std::uint64_t>(s.integer("solver.seed"));

    o.block.tolerance = s.real("solver.tolerance");
    o.block.max_iterations = static_cast<int>(s.integer("solver.max_iterations"));
    o.block.check_identities = s.flag("solver.check_identities");
    const auto every = s.integer("output.every");
    if (every < 1) fail("output.every must be positive");
    o.keep_every = static_cast<std::size_t>(every);
    o.monitored = problem.diagnostics();
    return o;
}

Scenario soliton_scenario(const Settings& s) {
    const std::size_t n = checked_points(s);
    Problem p(kdv_model(), PeriodicGrid::line(s.real("grid.length"), n));
    auto x = node_coordinates(p.grid());
    const double beta = s.real("model.beta");
    auto u0 = sampled(x, [&](double v) { return kdv_soliton_exact(beta, v, 0.0); });
    auto o = run_options(s, p);
    ExactSolution exact = [x, beta](double t, std::span<Complex> out) {
        for (std::size_t i = 0; i < x.size(); ++i) out[i] = kdv_soliton_exact(beta, x[i], t);
    };
    return {s.text("scenario.name"), std::move(p), std::move(u0), std::move(o), std::move(exact), std::move(x), {}, {}};
}

}  // namespace

const std::vector<ScenarioInfo>& scenario_catalog() {
    static const std::vector<ScenarioInfo> list = [] {
        std::vector<ScenarioInfo> out;
        for (const auto& e : entries()) out.push_back(e.info);
        return out;
    }();
    return list;
}

Settings scenario_defaults(std::string_view name) {
    const auto& e = find(name);
    Settings s;
    common_keys(s, name);
    e.defaults(s);
    return s;
}

double scenario_dt(const Settings& s) {
    if (!s.empty("time.dt")) return s.real("time.dt");
    return s.real("time.t_end") / (static_cast<double>(s.integer("time.blocks")) * static_cast<double>(s.integer("time.steps")));
}

Scenario build_scenario(const Settings& s) {
    const std::string& name = s.text("scenario.name");
    find(name);

    if (name == "kdv-soliton-momentum" || name == "kdv-mass-momentum" || name == "kdv-mass-hamiltonian" ||
        name == "kdv-three-laws")
        return soliton_scenario(s);

    if (name == "zabusky-kruskal") {
        Problem p(kdv_model(s.real("model.alpha"), s.real("model.epsilon"), BoundaryKind::periodic),
                  PeriodicGrid::line(2.0, checked_points(s), GridOrigin::zero));
        auto x = node_coordinates(p.grid());
        auto u0 = sampled(x, [](double v) { return std::cos(std::numbers::pi * v); });
        auto o = run_options(s, p);
        o.monitored = {FunctionalKind::zk_q1, FunctionalKind::zk_q2, FunctionalKind::zk_q3,
                       FunctionalKind::zk_q4, FunctionalKind::zk_q5, FunctionalKind::zk_q6};
        return {name, std::move(p), std::move(u0), std::move(o), {}, std::move(x), {}, {}};
    }

    if (name == "kdv-two-soliton") {
        Problem p(kdv_model(), PeriodicGrid::line(s.real("grid.length"), checked_points(s)));
        auto x = node_coordinates(p.grid());
        const double b1 = s.real("model.beta1"), b2 = s.real("model.beta2"), x0 = s.real("model.offset");
        auto u0 = sampled(x, [&](double v) { return kdv_two_soliton_initial(b1, b2, x0, v); });
        auto o = run_options(s, p);
        return {name, std::move(p), std::move(u0), std::move(o), {}, std::move(x), {}, {}};
    }

    if (name == "ac-travelling-wave") {
        const double eps = s.real("model.epsilon");
        Problem p(allen_cahn_model(1.0, 1.0 / (eps * eps)), ChebyshevGrid(-2.0, 2.0, checked_points(s)));
        auto x = node_coordinates(p.grid());
        auto u0 = sampled(x, [&](double v) { return ac_travelling_exact(eps, v, 0.0); });
        auto o = run_options(s, p);
        ExactSolution exact = [x, eps](double t, std::span<Complex> out) {
            for (std::size_t i = 0; i < x.size(); ++i) out[i] = ac_travelling_exact(eps, x[i], t);
        };
        return {name, std::move(p), std::move(u0), std::move(o), std::move(exact), std::move(x), {}, {}};
    }

    if (name == "ac-metastable") {
        const auto model = homogenize_dirichlet(
            allen_cahn_model(s.real("model.diffusion"), s.real("model.gamma"), BoundaryKind::dirichlet), -1.0, 1.0);
        Problem p(model, ChebyshevGrid(-1.0, 1.0, checked_points(s)));
        auto x = node_coordinates(p.grid());
        std::vector<double> lift = p.lift();
        CVector w0(x.size());
        for (std::size_t i = 0; i < x.size(); ++i)
            w0[i] = 0.53 * x[i] + 0.47 * std::sin(-1.5 * std::numbers::pi * x[i]) - lift[i];
        auto o = run_options(s, p);
        o.monitored.clear();
        return {name, std::move(p), std::move(w0), std::move(o), {}, std::move(x), {}, std::move(lift)};
    }

    // nls2d-townes
    const double length = s.real("grid.length");
    const std::size_t n = checked_points(s);
    const auto plane = PeriodicGrid::plane(length, length, n, n);
    const double lambda = s.real("model.lambda");
    const auto profile = townes_profile(lambda, plane, {.cache_dir = s.text("model.cache_dir")});
    Problem p(nls_model(), plane);
    CVector u0(profile.values.begin(), profile.values.end());
    auto o = run_options(s, p);
    ExactSolution exact = [u0, lambda](double t, std::span<Complex> out) {
        const Complex phase = std::polar(1.0, lambda * lambda * t);
        for (std::size_t i = 0; i < u0.size(); ++i) out[i] = u0[i] * phase;
    };
    auto x = node_coordinates(p.grid(), 0);
    auto y = node_coordinates(p.grid(), 1);
    return {name, std::move(p), std::move(u0), std::move(o), std::move(exact), std::move(x), std::move(y), {}};
}

}  // namespace tdsr::app
