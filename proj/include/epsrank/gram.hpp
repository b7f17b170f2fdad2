#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include <json.hpp>

#include "epsrank/grid.hpp"
#include "epsrank/linalg.hpp"
#include "epsrank/matrix.hpp"

namespace epsrank {

/* Eigenvalue spectrum of a Gram matrix together with its eps-rank:
 * the number of eigenvalues strictly above epsilon. */
struct GramSpectrum {
    std::vector<double> eigenvalues; // descending
    double epsilon = 0.0;
    std::size_t eps_rank = 0;

    nlohmann::json to_json() const {
        return nlohmann::json{{"epsilon", epsilon},
                              {"eigenvalues", eigenvalues},
                              {"eps_rank", eps_rank}};
    }
};

/* Discrete Gram matrix M = D^T W D for feature samples D (grid points x
 * features) and diagonal quadrature weights W. Output is symmetrized. */
inline Matrix gram_matrix(const Matrix& d, const QuadratureGrid& grid) {
    if (d.rows != grid.size())
        throw std::invalid_argument("gram_matrix: feature rows != grid points");
    Matrix wd = d;
    for (std::size_t i = 0; i < wd.rows; ++i) {
        const double w = grid.weights[i];
        double* r = wd.row(i);
        for (std::size_t j = 0; j < wd.cols; ++j) r[j] *= w;
    }
    Matrix m;
    gemm_tn(d, wd, m);
    for (std::size_t i = 0; i < m.rows; ++i)
        for (std::size_t j = i + 1; j < m.cols; ++j) {
            const double v = 0.5 * (m(i, j) + m(j, i));
            m(i, j) = m(j, i) = v;
        }
    return m;
}

/* eps-rank per Definition: count of eigenvalues strictly greater than
 * epsilon. Tiny negative eigenvalues (roundoff from a PSD Gram) are
 * clamped to zero; genuinely negative spectra of general symmetric inputs
 * are left alone. */
inline GramSpectrum eps_rank(const Matrix& m, double epsilon) {
    if (epsilon < 0.0)
        throw std::invalid_argument("eps_rank: epsilon must be >= 0");
    SymEigResult eig = sym_eig(m);
    const double clamp = 1e-10 * std::max(1.0, frobenius_norm(m));
    for (double& lam : eig.eigenvalues)
        if (lam < 0.0 && lam > -clamp) lam = 0.0;
    GramSpectrum s;
    s.eigenvalues = std::move(eig.eigenvalues);
    s.epsilon = epsilon;
    s.eps_rank = static_cast<std::size_t>(
        std::count_if(s.eigenvalues.begin(), s.eigenvalues.end(),
                      [&](double lam) { return lam > epsilon; }));
    return s;
}

/* Per-layer eps-rank: entry k is the eps-rank of the Gram matrix of the
 * layer-k hidden features evaluated on the grid. Templated over the network
 * type; requires depth() and layer_features(points, k). */
template <class Net>
std::vector<std::size_t> layer_rank_profile(const Net& net, const QuadratureGrid& grid,
                                            double epsilon) {
    std::vector<std::size_t> out;
    out.reserve(net.depth());
    for (std::size_t k = 0; k < net.depth(); ++k) {
        const Matrix feats = net.layer_features(grid.points, k);
        out.push_back(eps_rank(gram_matrix(feats, grid), epsilon).eps_rank);
    }
    return out;
}

} // namespace epsrank
