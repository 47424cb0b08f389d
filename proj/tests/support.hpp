#pragma once

#include "starclab/mdp.hpp"

#include <Eigen/Dense>

namespace testing {

inline starclab::TabularMdp single_state(std::size_t n_actions, double discount) {
    return starclab::TabularMdp(1, n_actions, Eigen::MatrixXd::Ones(static_cast<Eigen::Index>(n_actions), 1),
                                Eigen::VectorXd::Ones(1), discount);
}

inline starclab::RewardFunction single_state_reward(std::initializer_list<double> values) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(values.size()));
    Eigen::Index i = 0;
    for (const double x : values) v(i++) = x;
    return starclab::RewardFunction(1, static_cast<std::size_t>(v.size()), v);
}

inline double linf(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) { return (a - b).cwiseAbs().maxCoeff(); }

// Independent Bellman evaluation by fixed-point iteration, for cross-checks against the direct solve.
inline Eigen::VectorXd iterate_policy_values(const starclab::TabularMdp& mdp, const starclab::RewardFunction& r,
                                             const starclab::Policy& pi, int sweeps = 4000) {
    const auto S = static_cast<Eigen::Index>(mdp.n_states());
    const auto A = static_cast<Eigen::Index>(mdp.n_actions());
    Eigen::VectorXd v = Eigen::VectorXd::Zero(S);
    for (int it = 0; it < sweeps; ++it) {
        Eigen::VectorXd next = Eigen::VectorXd::Zero(S);
        for (Eigen::Index s = 0; s < S; ++s)
            for (Eigen::Index a = 0; a < A; ++a)
                for (Eigen::Index t = 0; t < S; ++t) {
                    const double p = mdp.transition()(s * A + a, t);
                    next(s) += pi.probs()(s, a) * p * (r.values()((s * A + a) * S + t) + mdp.discount() * v(t));
                }
        v = next;
    }
    return v;
}

}  // namespace testing

namespace testing {

// Conditional-mean operator M with (M r)(s,a) = E_{s' ~ tau(s,a)} r(s,a,s').
inline Eigen::MatrixXd conditional_mean_operator(const starclab::TabularMdp& mdp) {
    const auto S = static_cast<Eigen::Index>(mdp.n_states());
    const auto A = static_cast<Eigen::Index>(mdp.n_actions());
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(S * A, S * A * S);
    for (Eigen::Index row = 0; row < S * A; ++row)
        for (Eigen::Index t = 0; t < S; ++t) m(row, row * S + t) = mdp.transition()(row, t);
    return m;
}

// Column k is the shaping reward of the indicator potential on state k.
inline Eigen::MatrixXd shaping_operator(std::size_t n_states, std::size_t n_actions, double discount) {
    const auto S = static_cast<Eigen::Index>(n_states);
    const auto A = static_cast<Eigen::Index>(n_actions);
    Eigen::MatrixXd sh = Eigen::MatrixXd::Zero(S * A * S, S);
    for (Eigen::Index s = 0; s < S; ++s)
        for (Eigen::Index a = 0; a < A; ++a)
            for (Eigen::Index t = 0; t < S; ++t) {
                sh((s * A + a) * S + t, t) += discount;
                sh((s * A + a) * S + t, s) -= 1.0;
            }
    return sh;
}

// Least-squares residual of r against span(shaping) + ker(M): the canonical reward, computed densely.
inline Eigen::VectorXd dense_canonical(const starclab::TabularMdp& mdp, const Eigen::VectorXd& r) {
    const Eigen::MatrixXd sh = shaping_operator(mdp.n_states(), mdp.n_actions(), mdp.discount());
    Eigen::FullPivLU<Eigen::MatrixXd> lu(conditional_mean_operator(mdp));
    const Eigen::MatrixXd kernel = lu.dimensionOfKernel() == 0 ? Eigen::MatrixXd(r.size(), 0) : Eigen::MatrixXd(lu.kernel());
    Eigen::MatrixXd span(r.size(), sh.cols() + kernel.cols());
    span << sh, kernel;
    const Eigen::VectorXd coef = span.completeOrthogonalDecomposition().solve(r);
    return r - span * coef;
}

}  // namespace testing
