// Test-only SVD oracle, independent of the library's eigensolver path:
// classical cyclic Jacobi rotations on the full Gram matrix A'A, with the
// left vectors recovered as A v / sigma. Plain std::vector storage on
// purpose; nothing here touches the code under test.
#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

namespace oracle {

struct Svd {
    std::vector<std::vector<double>> U;  // m x k (column-major: U[j] is column j)
    std::vector<double> D;               // k descending
    std::vector<std::vector<double>> V;  // n x k
};

// Eigendecomposition of a symmetric n x n matrix by cyclic Jacobi sweeps.
inline void jacobi_symmetric(std::vector<std::vector<double>> A,
                             std::vector<double>& values,
                             std::vector<std::vector<double>>& vectors) {
    const std::size_t n = A.size();
    vectors.assign(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) vectors[i][i] = 1.0;

    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) off += A[p][q] * A[p][q];
        if (off < 1e-30) break;

        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                if (std::abs(A[p][q]) < 1e-300) continue;
                const double theta = (A[q][q] - A[p][p]) / (2.0 * A[p][q]);
                const double t = (theta >= 0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = A[k][p], akq = A[k][q];
                    A[k][p] = c * akp - s * akq;
                    A[k][q] = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = A[p][k], aqk = A[q][k];
                    A[p][k] = c * apk - s * aqk;
                    A[q][k] = s * apk + c * aqk;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double vkp = vectors[k][p], vkq = vectors[k][q];
                    vectors[k][p] = c * vkp - s * vkq;
                    vectors[k][q] = s * vkp + c * vkq;
                }
            }
        }
    }
    values.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) values[i] = A[i][i];
}

// Thin SVD of an m x n matrix held as rows; returns the top k triplets.
inline Svd svd(const std::vector<std::vector<double>>& A, std::size_t k) {
    const std::size_t m = A.size();
    const std::size_t n = A[0].size();

    std::vector<std::vector<double>> G(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            double s = 0.0;
            for (std::size_t t = 0; t < m; ++t) s += A[t][i] * A[t][j];
            G[i][j] = s;
        }

    std::vector<double> evals;
    std::vector<std::vector<double>> evecs;  // evecs[row][col]
    jacobi_symmetric(G, evals, evecs);

    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (evals[idx[j]] > evals[idx[i]]) std::swap(idx[i], idx[j]);

    Svd out;
    out.D.resize(k);
    out.V.assign(k, std::vector<double>(n, 0.0));
    out.U.assign(k, std::vector<double>(m, 0.0));
    for (std::size_t j = 0; j < k; ++j) {
        const double lam = evals[idx[j]] > 0 ? evals[idx[j]] : 0.0;
        out.D[j] = std::sqrt(lam);
        for (std::size_t i = 0; i < n; ++i) out.V[j][i] = evecs[i][idx[j]];
        if (out.D[j] > 0) {
            for (std::size_t t = 0; t < m; ++t) {
                double s = 0.0;
                for (std::size_t i = 0; i < n; ++i) s += A[t][i] * out.V[j][i];
                out.U[j][t] = s / out.D[j];
            }
        }
    }
    return out;
}

// Rank-k reconstruction sum_j D_j U_j V_j'.
inline std::vector<std::vector<double>> reconstruct(const Svd& s, std::size_t m,
                                                    std::size_t n) {
    std::vector<std::vector<double>> R(m, std::vector<double>(n, 0.0));
    for (std::size_t j = 0; j < s.D.size(); ++j)
        for (std::size_t t = 0; t < m; ++t)
            for (std::size_t i = 0; i < n; ++i) R[t][i] += s.D[j] * s.U[j][t] * s.V[j][i];
    return R;
}

}  // namespace oracle
