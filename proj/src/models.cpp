#include "tdsr/models.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <sstream>

#include "tdsr/error.hpp"
#include "tdsr/propagator.hpp"

namespace tdsr {

std::string_view model_name(ModelKind kind) {
    switch (kind) {
        case ModelKind::kdv: return "kdv";
        case ModelKind::nls: return "nls";
        case ModelKind::allen_cahn: return "allen_cahn";
    }
    return "unknown";
}

std::string_view boundary_name(BoundaryKind kind) {
    switch (kind) {
        case BoundaryKind::periodic: return "periodic";
        case BoundaryKind::decaying: return "decaying";
        case BoundaryKind::neumann: return "neumann";
        case BoundaryKind::dirichlet: return "dirichlet";
    }
    return "unknown";
}

ModelSpec kdv_model(double alpha, double epsilon, BoundaryKind boundary) {
    ModelSpec m;
    m.kind = ModelKind::kdv;
    m.alpha = alpha;
    m.epsilon = epsilon;
    m.boundary = boundary;
    return m;
}

ModelSpec nls_model() {
    ModelSpec m;
    m.kind = ModelKind::nls;
    m.boundary = BoundaryKind::decaying;
    return m;
}

ModelSpec allen_cahn_model(double diffusion, double gamma, BoundaryKind boundary) {
    ModelSpec m;
    m.kind = ModelKind::allen_cahn;
    m.diffusion = diffusion;
    m.gamma = gamma;
    m.boundary = boundary;
    return m;
}

ModelSpec homogenize_dirichlet(ModelSpec model, double g_l, double g_r) {
    if (model.kind != ModelKind::allen_cahn)
        throw Error(ErrorKind::validation, "Dirichlet homogenization applies to Allen-Cahn only");
    model.boundary = BoundaryKind::dirichlet;
    model.left_value = g_l;
    model.right_value = g_r;
    return model;
}

Problem::Problem(ModelSpec model, SpatialGrid grid) : model_(model), grid_(std::move(grid)) {
    const bool periodic = std::holds_alternative<PeriodicGrid>(grid_);
    switch (model_.kind) {
        case ModelKind::kdv:
            if (!periodic || std::get<PeriodicGrid>(grid_).dimension() != 1)
                throw Error(ErrorKind::validation, "KdV needs a one-dimensional periodic grid");
            if (model_.boundary != BoundaryKind::periodic && model_.boundary != BoundaryKind::decaying)
                throw Error(ErrorKind::validation, "KdV boundary must be periodic or decaying");
            break;
        case ModelKind::nls:
            if (!periodic) throw Error(ErrorKind::validation, "NLS needs a periodic grid");
            if (model_.boundary != BoundaryKind::periodic && model_.boundary != BoundaryKind::decaying)
                throw Error(ErrorKind::validation, "NLS boundary must be periodic or decaying");
            break;
        case ModelKind::allen_cahn:
            if (periodic) throw Error(ErrorKind::validation, "Allen-Cahn needs a Chebyshev grid");
            if (model_.boundary != BoundaryKind::neumann && model_.boundary != BoundaryKind::dirichlet)
                throw Error(ErrorKind::validation, "Allen-Cahn boundary must be neumann or dirichlet");
            break;
    }
    if (model_.boundary == BoundaryKind::dirichlet) {
        const auto& c = std::get<ChebyshevGrid>(grid_);
        lift_.resize(c.size());
        const double span = c.right() - c.left();
        for (std::size_t i = 0; i < c.size(); ++i)
            lift_[i] = model_.left_value +
                       (model_.right_value - model_.left_value) * (c.nodes()[i] - c.left()) / span;
    }
}

void Problem::nonlinear(std::span<const Complex> u, std::span<Complex> out) const {
    const std::size_t n = points();
    if (u.size() != n || out.size() != n) throw Error(ErrorKind::dimension, "nonlinear: field size mismatch");
    switch (model_.kind) {
        case ModelKind::kdv: {
            CVector sq(n);
            for (std::size_t i = 0; i < n; ++i) sq[i] = u[i] * u[i];
            std::get<PeriodicGrid>(grid_).differentiate(sq, out, 1);
            const double c = -0.5 * model_.alpha;
            for (auto& z : out) z = Complex(c * z.real(), 0.0);
            break;
        }
        case ModelKind::nls:
            for (std::size_t i = 0; i < n; ++i) out[i] = Complex(0.0, std::norm(u[i])) * u[i];
            break;
        case ModelKind::allen_cahn: {
            const double g = model_.gamma;
            if (lift_.empty()) {
                for (std::size_t i = 0; i < n; ++i) {
                    const double s = u[i].real();
                    out[i] = g * (s - s * s * s);
                }
            } else {
                for (std::size_t i = 0; i < n; ++i) {
                    const double s = u[i].real() + lift_[i];
                    out[i] = g * (s - s * s * s);
                }
                out[0] = out[n - 1] = 0.0;
            }
            break;
        }
    }
}

SpaceTimeField Problem::nonlinear(const SpaceTimeField& u) const {
    SpaceTimeField out(u.levels(), u.points());
    for (std::size_t i = 0; i < u.levels(); ++i) nonlinear(u.level(i), out.level(i));
    return out;
}

LinearSymbol Problem::linear_symbol() const {
    switch (model_.kind) {
        case ModelKind::kdv:
            return kdv_symbol(std::get<PeriodicGrid>(grid_), model_.epsilon);
        case ModelKind::nls:
            return schrodinger_symbol(std::get<PeriodicGrid>(grid_));
        case ModelKind::allen_cahn:
            break;
    }
    throw Error(ErrorKind::validation, "model has no Fourier symbol");
}

LinearMatrix Problem::linear_matrix() const {
    if (model_.kind != ModelKind::allen_cahn) throw Error(ErrorKind::validation, "model has no collocation matrix");
    const auto bc = model_.boundary == BoundaryKind::dirichlet ? MatrixBoundary::dirichlet : MatrixBoundary::neumann;
    return diffusion_matrix(std::get<ChebyshevGrid>(grid_), model_.diffusion, bc);
}

std::unique_ptr<LinearFlow> Problem::linear_flow(double dt) const {
    if (model_.kind == ModelKind::allen_cahn) return std::make_unique<TrapezoidalFlow>(linear_matrix(), dt);
    return std::make_unique<FilonFlow>(std::get<PeriodicGrid>(grid_), linear_symbol(), dt);
}

bool Problem::supports(FunctionalKind kind) const {
    switch (model_.kind) {
        case ModelKind::kdv:
            return kind == FunctionalKind::kdv_mass || kind == FunctionalKind::kdv_momentum ||
                   kind == FunctionalKind::kdv_hamiltonian || kind == FunctionalKind::zk_q1 ||
                   kind == FunctionalKind::zk_q2 || kind == FunctionalKind::zk_q3 ||
                   kind == FunctionalKind::zk_q4 || kind == FunctionalKind::zk_q5 ||
                   kind == FunctionalKind::zk_q6;
        case ModelKind::nls:
            return kind == FunctionalKind::nls_power || kind == FunctionalKind::nls_momentum ||
                   kind == FunctionalKind::nls_hamiltonian;
        case ModelKind::allen_cahn:
            return kind == FunctionalKind::ac_l2;
    }
    return false;
}

Functional Problem::functional(FunctionalKind kind) const {
    if (!supports(kind)) {
        std::ostringstream os;
        os << "functional " << functional_name(kind) << " does not belong to model " << model_name(model_.kind);
        throw Error(ErrorKind::validation, os.str());
    }
    return Functional{kind, model_.alpha, model_.epsilon};
}

std::vector<FunctionalKind> Problem::diagnostics() const {
    switch (model_.kind) {
        case ModelKind::kdv:
            return {FunctionalKind::kdv_mass, FunctionalKind::kdv_momentum, FunctionalKind::kdv_hamiltonian};
        case ModelKind::nls:
            return {FunctionalKind::nls_power, FunctionalKind::nls_hamiltonian};
        case ModelKind::allen_cahn:
            return {FunctionalKind::ac_l2};
    }
    return {};
}

DissipationModel Problem::dissipation() const {
    if (model_.kind != ModelKind::allen_cahn)
        throw Error(ErrorKind::validation, "only Allen-Cahn carries a dissipation law");
    return DissipationModel{model_.diffusion, model_.gamma, lift_};
}

double kdv_soliton_exact(double beta, double x, double t) {
    const double c = std::cosh(beta * (x - 4.0 * beta * beta * t));
    return 2.0 * beta * beta / (c * c);
}

double kdv_two_soliton_initial(double beta1, double beta2, double x0, double x) {
    return kdv_soliton_exact(beta1, x, 0.0) + kdv_soliton_exact(beta2, x - x0, 0.0);
}

double ac_travelling_exact(double epsilon, double x, double t) {
    const double s2 = std::numbers::sqrt2;
    const double xi = x - 3.0 * t / (s2 * epsilon);
    return 0.5 - 0.5 * std::tanh(xi / (2.0 * s2 * epsilon));
}

namespace {

std::string townes_key(double lambda, const PeriodicGrid& g) {
    std::ostringstream os;
    os << std::setprecision(17) << "lambda " << lambda << "\ngrid " << g.count(0) << ' ' << g.count(1) << ' '
       << g.length(0) << ' ' << g.length(1) << '\n';
    return os.str();
}

std::filesystem::path townes_stem(const std::filesystem::path& dir, double lambda, const PeriodicGrid& g) {
    std::ostringstream os;
    os << "townes_" << std::hash<std::string>{}(townes_key(lambda, g));
    return dir / os.str();
}

double townes_residual(double lambda, const PeriodicGrid& g, std::span<const Complex> u) {
    const std::size_t n = g.size();
    CVector uxx(n), uyy(n);
    g.differentiate(u, uxx, 2, 0);
    g.differentiate(u, uyy, 2, 1);
    double r = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double v = u[i].real();
        r = std::max(r, std::abs(uxx[i].real() + uyy[i].real() + v * v * v - lambda * lambda * v));
    }
    return r;
}

}  // namespace

TownesProfile townes_profile(double lambda, const PeriodicGrid& plane, const TownesOptions& options) {
    if (plane.dimension() != 2) throw Error(ErrorKind::dimension, "Townes profile needs a plane grid");
    if (!(lambda > 0.0)) throw Error(ErrorKind::validation, "Townes lambda must be positive");
    const std::size_t n = plane.size();
    TownesProfile out;

    std::filesystem::path stem;
    if (!options.cache_dir.empty()) {
        stem = townes_stem(options.cache_dir, lambda, plane);
        std::ifstream side(stem.string() + ".txt");
        std::ifstream bin(stem.string() + ".bin", std::ios::binary);
        if (side && bin) {
            std::stringstream text;
            text << side.rdbuf();
            const std::string key = townes_key(lambda, plane);
            const std::string body = text.str();
            if (body.compare(0, key.size(), key) == 0) {
                out.values.resize(n);
                bin.read(reinterpret_cast<char*>(out.values.data()), static_cast<std::streamsize>(n * sizeof(double)));
                if (bin.gcount() == static_cast<std::streamsize>(n * sizeof(double))) {
                    CVector u(out.values.begin(), out.values.end());
                    out.residual = townes_residual(lambda, plane, u);
                    if (out.residual <= options.tolerance) {
                        out.from_cache = true;
                        return out;
                    }
                }
            }
        }
    }

    CVector u(n), u_hat(n), cube(n), cube_hat(n);
    std::vector<double> symbol(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double x = plane.coordinate(i, 0), y = plane.coordinate(i, 1);
        u[i] = 2.0 * lambda / std::cosh(lambda * std::hypot(x, y));
        symbol[i] = lambda * lambda + plane.wavenumber_squared(i);
    }
    for (int it = 1; it <= options.max_iterations; ++it) {
        for (std::size_t i = 0; i < n; ++i) cube[i] = u[i] * u[i] * u[i];
        plane.forward(u, u_hat);
        plane.forward(cube, cube_hat);
        double num = 0.0, den = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            num += symbol[i] * std::norm(u_hat[i]);
            den += (std::conj(u_hat[i]) * cube_hat[i]).real();
        }
        if (!(den > 0.0)) throw Error(ErrorKind::convergence, "Townes iteration lost its profile");
        const double m = std::pow(num / den, 1.5);
        for (std::size_t i = 0; i < n; ++i) u_hat[i] = m * cube_hat[i] / symbol[i];
        plane.inverse(u_hat, u);
        drop_imaginary(u);
        out.iterations = it;
        out.residual = townes_residual(lambda, plane, u);
        if (out.residual <= options.tolerance) break;
    }
    if (out.residual > options.tolerance) {
        std::ostringstream os;
        os << "Townes iteration stalled at residual " << out.residual << " after " << out.iterations << " steps";
        throw Error(ErrorKind::convergence, os.str());
    }
    out.values.resize(n);
    for (std::size_t i = 0; i < n; ++i) out.values[i] = u[i].real();

    if (!stem.empty()) {
        std::error_code ec;
        std::filesystem::create_directories(options.cache_dir, ec);
        std::ofstream bin(stem.string() + ".bin", std::ios::binary);
        std::ofstream side(stem.string() + ".txt");
        if (bin && side) {
            bin.write(reinterpret_cast<const char*>(out.values.data()),
                      static_cast<std::streamsize>(n * sizeof(double)));
            side << townes_key(lambda, plane) << std::setprecision(17) << "residual " << out.residual << '\n'
                 << "layout row-major float64 " << plane.count(0) << 'x' << plane.count(1) << '\n';
        }
    }
    return out;
}

LocalErrors local_conservation_errors(std::span<const std::span<const Complex>> levels, double dt,
                                      double alpha, double epsilon, const PeriodicGrid& grid) {
    if (levels.size() < 5)
        throw Error(ErrorKind::stencil, "local conservation errors need five time levels");
    const std::size_t n = grid.size();
    const std::size_t last = levels.size() - 1;
    for (std::size_t l = last - 4; l <= last; ++l)
        if (levels[l].size() != n) throw Error(ErrorKind::dimension, "level size mismatch");
    static constexpr double w[5] = {25.0, -48.0, 36.0, -16.0, 3.0};

    const auto u = levels[last];
    CVector ux(n), uxx(n), uxxx(n), flux(n), flux_x(n);
    grid.differentiate(u, ux, 1);
    grid.differentiate(u, uxx, 2);
    grid.differentiate(u, uxxx, 3);
    const double e2 = epsilon * epsilon;
    for (std::size_t i = 0; i < n; ++i) {
        const double v = u[i].real(), vx = ux[i].real(), vxx = uxx[i].real();
        flux[i] = alpha * v * v * v / 3.0 + e2 * (v * vxx - 0.5 * vx * vx);
    }
    grid.differentiate(flux, flux_x, 1);

    LocalErrors out;
    out.mass.resize(n);
    out.momentum.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        double ut = 0.0, qt = 0.0;
        for (int k = 0; k < 5; ++k) {
            const double v = levels[last - k][i].real();
            ut += w[k] * v;
            qt += w[k] * 0.5 * v * v;
        }
        ut /= 12.0 * dt;
        qt /= 12.0 * dt;
        const double v = u[i].real();
        out.mass[i] = ut + alpha * v * ux[i].real() + e2 * uxxx[i].real();
        out.momentum[i] = qt + flux_x[i].real();
    }
    return out;
}

}  // namespace tdsr
