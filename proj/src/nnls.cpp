#include "phasecost/nnls.hpp"

#include <algorithm>
#include <limits>
#include <vector>

namespace phasecost {

NnlsResult nnls(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, int max_iterations) {
    const Eigen::Index n = A.cols();
    if (max_iterations <= 0) max_iterations = static_cast<int>(3 * n + 10);
    NnlsResult out;
    out.x = Eigen::VectorXd::Zero(n);
    std::vector<char> passive(static_cast<std::size_t>(n), 0);
    const double tol = 10.0 * std::numeric_limits<double>::epsilon() * A.norm() * std::max<Eigen::Index>(A.rows(), n);

    auto solve_passive = [&](Eigen::VectorXd& s) {
        std::vector<Eigen::Index> idx;
        for (Eigen::Index j = 0; j < n; ++j)
            if (passive[static_cast<std::size_t>(j)]) idx.push_back(j);
        Eigen::MatrixXd Ap(A.rows(), static_cast<Eigen::Index>(idx.size()));
        for (std::size_t k = 0; k < idx.size(); ++k) Ap.col(static_cast<Eigen::Index>(k)) = A.col(idx[k]);
        const Eigen::VectorXd sp = Ap.colPivHouseholderQr().solve(b);
        s.setZero(n);
        for (std::size_t k = 0; k < idx.size(); ++k) s(idx[k]) = sp(static_cast<Eigen::Index>(k));
    };

    Eigen::VectorXd w = A.transpose() * (b - A * out.x);
    Eigen::VectorXd s(n);
    int it = 0;
    while (true) {
        Eigen::Index jmax = -1;
        double wmax = tol;
        for (Eigen::Index j = 0; j < n; ++j)
            if (!passive[static_cast<std::size_t>(j)] && w(j) > wmax) {
                wmax = w(j);
                jmax = j;
            }
        if (jmax < 0) break;
        if (++it > max_iterations) {
            out.converged = false;
            break;
        }
        passive[static_cast<std::size_t>(jmax)] = 1;
        while (true) {
            solve_passive(s);
            bool feasible = true;
            for (Eigen::Index j = 0; j < n; ++j)
                if (passive[static_cast<std::size_t>(j)] && s(j) <= 0.0) feasible = false;
            if (feasible) {
                out.x = s;
                break;
            }
            double alpha = 1.0;
            for (Eigen::Index j = 0; j < n; ++j)
                if (passive[static_cast<std::size_t>(j)] && s(j) <= 0.0)
                    alpha = std::min(alpha, out.x(j) / (out.x(j) - s(j)));
            out.x += alpha * (s - out.x);
            for (Eigen::Index j = 0; j < n; ++j)
                if (passive[static_cast<std::size_t>(j)] && out.x(j) <= tol) {
                    passive[static_cast<std::size_t>(j)] = 0;
                    out.x(j) = 0.0;
                }
        }
        w = A.transpose() * (b - A * out.x);
    }
    out.iterations = it;
    out.residual_norm = (A * out.x - b).norm();
    return out;
}

}  // namespace phasecost
