#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>

namespace starclab::detail {

using Rng = std::mt19937_64;

/// Mixes a user seed with a stream tag so that independent draws from one seed do not share state.
inline Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
    return Rng(seq);
}

/// Symmetric Dirichlet draw. A row whose gamma draws all underflow becomes a vertex of the simplex.
inline Eigen::VectorXd dirichlet(Rng& rng, Eigen::Index n, double concentration) {
    std::gamma_distribution<double> gamma(concentration, 1.0);
    Eigen::VectorXd x(n);
    for (Eigen::Index i = 0; i < n; ++i) x[i] = gamma(rng);
    const double total = x.sum();
    if (!(total > 0.0)) {
        std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
        x.setZero();
        x[pick(rng)] = 1.0;
        return x;
    }
    return x / total;
}

inline Eigen::VectorXd standard_normal(Rng& rng, Eigen::Index n) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::VectorXd x(n);
    for (Eigen::Index i = 0; i < n; ++i) x[i] = normal(rng);
    return x;
}

/// Inverse-CDF draw from a discrete distribution given as a row or column.
template <typename Vec>
Eigen::Index sample_index(Rng& rng, const Vec& probs) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const double u = unif(rng);
    double acc = 0.0;
    Eigen::Index last_positive = 0;
    for (Eigen::Index i = 0; i < probs.size(); ++i) {
        if (probs[i] <= 0.0) continue;
        last_positive = i;
        acc += probs[i];
        if (u < acc) return i;
    }
    return last_positive;
}

}  // namespace starclab::detail
