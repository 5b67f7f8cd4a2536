#include "fwlab/rbsde.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "fwlab/forward.hpp"

namespace fwlab {

int RegressionBasis::size(int dim) const {
    int poly = 0;
    if (dim == 1) {
        poly = poly_degree + 1;
    } else if (dim == 2) {
        poly = (poly_degree + 1) * (poly_degree + 2) / 2;
    } else {
        // axis monomials only above n = 2
        poly = 1 + dim * poly_degree;
    }
    return poly + (include_obstacle ? 1 : 0);
}

std::string RegressionBasis::describe() const {
    return "poly<=" + std::to_string(poly_degree) +
           (include_obstacle ? "+obstacle" : "");
}

DeterministicLimit solve_deterministic_limit(const ProblemSpec& spec, const TimeGrid& grid) {
    const SpacePath chi = solve_flow(spec, grid);
    const int N = grid.steps;
    const double dt = grid.dt();
    const std::vector<double> zeros(spec.dimension, 0.0);

    DeterministicLimit out{ScalarPath(grid), ScalarPath(grid)};
    std::vector<double> dk(N, 0.0);  // reflection on interval [t_k, t_{k+1}]
    out.y.values[N] = terminal_of(spec, chi.at(N));
    for (int k = N - 1; k >= 0; --k) {
        const double t = grid.node(k);
        const double ytil =
            out.y.values[k + 1] + driver_of(spec, t, chi.at(k), out.y.values[k + 1], zeros) * dt;
        const double h = obstacle_of(spec, t, chi.at(k));
        out.y.values[k] = std::max(ytil, h);
        dk[k] = out.y.values[k] - ytil;
    }
    // K(t0) = 0; increment dk_k sits on interval k, so K_m = sum_{j<m} dk_j.
    out.k.values[0] = 0.0;
    for (int k = 0; k < N; ++k) out.k.values[k + 1] = out.k.values[k] + dk[k];
    return out;
}

namespace {

// Fills one design-matrix row: monomials in (x - x0), then the obstacle.
void basis_row(const RegressionBasis& basis, const ProblemSpec& spec, double t,
               std::span<const double> x, double* row) {
    const int n = static_cast<int>(x.size());
    int c = 0;
    if (n == 1) {
        const double u = x[0] - spec.x0[0];
        double p = 1.0;
        for (int d = 0; d <= basis.poly_degree; ++d) {
            row[c++] = p;
            p *= u;
        }
    } else if (n == 2) {
        const double u = x[0] - spec.x0[0];
        const double v = x[1] - spec.x0[1];
        for (int total = 0; total <= basis.poly_degree; ++total)
            for (int i = 0; i <= total; ++i)
                row[c++] = std::pow(u, total - i) * std::pow(v, i);
    } else {
        row[c++] = 1.0;
        for (int a = 0; a < n; ++a) {
            double p = 1.0;
            for (int d = 1; d <= basis.poly_degree; ++d) {
                p *= x[a] - spec.x0[a];
                row[c++] = p;
            }
        }
    }
    if (basis.include_obstacle) row[c++] = obstacle_of(spec, t, x);
}

} // namespace

RBSDESolution solve_rbsde_mc(const ProblemSpec& spec, double eps, const TimeGrid& grid,
                             int trajectory_count, const RegressionBasis& basis,
                             std::uint64_t master_seed) {
    if (eps < 0.0) throw SolverError(ErrorCode::ConfigError, "LSMC requires eps >= 0");
    const int n = spec.dimension;
    const int N = grid.steps;
    const int M = trajectory_count;
    const int B = basis.size(n);
    if (M < 10 * B)
        throw SolverError(ErrorCode::ConfigError,
                          "need M >= 10 x basis size (" + std::to_string(10 * B) + ")");
    const double dt = grid.dt();

    // Forward sweep: all paths and their Brownian increments.
    std::vector<SpacePath> paths;
    std::vector<NoiseStream> noises;
    paths.reserve(M);
    noises.reserve(M);
    for (int m = 0; m < M; ++m) {
        noises.push_back(make_noise(master_seed, m, grid, n));
        paths.push_back(simulate_forward(spec, eps, grid, noises.back()));
    }

    RBSDESolution sol;
    sol.trajectory_count = M;
    sol.basis_descriptor = basis.describe();
    sol.y_mean = ScalarPath(grid);
    sol.y_se = ScalarPath(grid);
    sol.z_mean = SpacePath(grid, n);
    sol.k_mean = ScalarPath(grid);
    sol.dk_mean = ScalarPath(grid);

    Eigen::VectorXd y(M);            // current Y_k per trajectory
    Eigen::VectorXd kT = Eigen::VectorXd::Zero(M);  // accumulated K(T)
    Eigen::VectorXd acc_z2 = Eigen::VectorXd::Zero(M);
    Eigen::VectorXd sup_y2(M), sup_h2(M), acc_f2 = Eigen::VectorXd::Zero(M);
    sol.min_obstacle_slack = std::numeric_limits<double>::infinity();
    sol.min_dk = std::numeric_limits<double>::infinity();
    sol.max_skorohod_sum = 0.0;
    Eigen::VectorXd skorohod = Eigen::VectorXd::Zero(M);

    const std::vector<double> zeros(n, 0.0);
    for (int m = 0; m < M; ++m) {
        auto xT = paths[m].at(N);
        y(m) = terminal_of(spec, xT);
        sup_y2(m) = y(m) * y(m);
        const double hT = obstacle_of(spec, grid.t1, xT);
        sup_h2(m) = hT * hT;
        sol.min_obstacle_slack = std::min(sol.min_obstacle_slack, y(m) - hT);
    }
    auto record_node = [&](int k, const Eigen::VectorXd& yk, const Eigen::VectorXd& se_source) {
        sol.y_mean.values[k] = yk.mean();
        const double var = (yk.array() - yk.mean()).square().sum() / M;
        sol.y_se.values[k] = std::sqrt(var / M);
        (void)se_source;
    };
    record_node(N, y, y);

    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> phi(M, B);
    Eigen::MatrixXd zk(M, n);
    Eigen::VectorXd ytil(M), cont(M);

    for (int k = N - 1; k >= 0; --k) {
        const double t = grid.node(k);
        if (k == 0) {
            // X_0 is a point mass at x: the regression degenerates to means.
            const double ybar = y.mean();
            cont.setConstant(ybar);
            for (int i = 0; i < n; ++i) {
                double s = 0.0;
                // Centering Y is free variance reduction: E[c dW | X_0] = 0.
                for (int m = 0; m < M; ++m) s += (y(m) - ybar) * noises[m].dw(0, i);
                zk.col(i).setConstant(s / M / dt);
            }
        } else {
            for (int m = 0; m < M; ++m) basis_row(basis, spec, t, paths[m].at(k), phi.row(m).data());
            // A numerically constant obstacle column duplicates the intercept;
            // drop it rather than reporting a phantom rank deficiency.
            int cols = B;
            if (basis.include_obstacle) {
                const auto col = phi.col(B - 1);
                if (col.maxCoeff() - col.minCoeff() <=
                    1e-12 * (1.0 + std::abs(col.mean())))
                    cols = B - 1;
            }
            // Unit-RMS column scaling: the rank test and the pivoting are then
            // insensitive to wildly different column magnitudes. Fitted values
            // are scale-invariant so nothing needs undoing.
            Eigen::MatrixXd scaled = phi.leftCols(cols);
            for (int c = 0; c < cols; ++c) {
                const double norm = scaled.col(c).norm();
                if (norm > 0.0) scaled.col(c) /= norm;
            }
            Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(scaled);
            qr.setThreshold(1e-8);
            if (qr.rank() < cols)
                throw SolverError(ErrorCode::SingularRegression,
                                  "rank " + std::to_string(qr.rank()) + " < basis size " +
                                      std::to_string(cols) + " at node " + std::to_string(k));
            cont = scaled * qr.solve(y);
            // Regress (Y - C) dW rather than Y dW: same conditional mean
            // (E[C dW | X_k] = 0), a fraction of the variance.
            Eigen::MatrixXd targets(M, n);
            for (int i = 0; i < n; ++i)
                for (int m = 0; m < M; ++m)
                    targets(m, i) = (y(m) - cont(m)) * noises[m].dw(k, i);
            zk = scaled * qr.solve(targets) / dt;
        }

        // Driver with one predictor-corrector pass on its implicit Y argument.
        double dk_sum = 0.0;
        for (int m = 0; m < M; ++m) {
            auto xk = paths[m].at(k);
            std::span<const double> zrow(zk.row(m).data(), static_cast<size_t>(n));
            std::vector<double> zcopy(n);
            for (int i = 0; i < n; ++i) zcopy[i] = zk(m, i);
            const double pred = cont(m) + driver_of(spec, t, xk, cont(m), zcopy) * dt;
            ytil(m) = cont(m) + driver_of(spec, t, xk, pred, zcopy) * dt;
            const double h = obstacle_of(spec, t, xk);
            const double yk = std::max(ytil(m), h);
            const double dk = yk - ytil(m);
            skorohod(m) += (yk - h) * dk;
            kT(m) += dk;
            dk_sum += dk;
            sol.min_dk = std::min(sol.min_dk, dk);
            sol.min_obstacle_slack = std::min(sol.min_obstacle_slack, yk - h);
            sup_y2(m) = std::max(sup_y2(m), yk * yk);
            sup_h2(m) = std::max(sup_h2(m), h * h);
            double z2 = 0.0;
            for (int i = 0; i < n; ++i) z2 += zk(m, i) * zk(m, i);
            acc_z2(m) += z2 * dt;
            const double f0 = driver_of(spec, t, xk, 0.0, zeros);
            acc_f2(m) += f0 * f0 * dt;
            y(m) = yk;
            (void)zrow;
        }
        record_node(k, y, y);
        sol.dk_mean.values[k] = dk_sum / M;
        for (int i = 0; i < n; ++i) sol.z_mean.at(k)[i] = zk.col(i).mean();
    }

    // K(t0) = 0; mean K path is the running sum of mean increments.
    sol.k_mean.values[0] = 0.0;
    for (int k = 0; k < N; ++k)
        sol.k_mean.values[k + 1] = sol.k_mean.values[k] + sol.dk_mean.values[k];

    sol.y0 = y.mean();  // identical across trajectories: X_0 is a point mass
    // The start value is a sample mean of Y_1 (plus lower-order driver and
    // projection terms); its standard error is the node-1 SE of the mean.
    sol.y0_se = std::max(sol.y_se.values[0], N >= 1 ? sol.y_se.values[1] : 0.0);
    sol.max_skorohod_sum = skorohod.maxCoeff();
    sol.e_sup_y2 = sup_y2.mean();
    sol.e_int_z2 = acc_z2.mean();
    sol.e_kT2 = kT.array().square().mean();
    double g2 = 0.0;
    for (int m = 0; m < M; ++m) {
        const double g = terminal_of(spec, paths[m].at(N));
        g2 += g * g;
    }
    sol.e_g2 = g2 / M;
    sol.e_int_f2 = acc_f2.mean();
    sol.e_sup_h2 = sup_h2.mean();
    return sol;
}

AprioriReport apriori_check(const RBSDESolution& solution) {
    AprioriReport report;
    report.lhs = solution.e_sup_y2 + solution.e_int_z2 + solution.e_kT2;
    report.rhs = solution.e_g2 + solution.e_int_f2 + solution.e_sup_h2;
    report.degenerate_rhs = report.rhs < 1e-10;
    report.ratio = report.degenerate_rhs ? 0.0 : report.lhs / report.rhs;
    return report;
}

} // namespace fwlab
