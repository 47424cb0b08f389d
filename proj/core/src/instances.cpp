#include "starclab/instances.hpp"

namespace starclab {

TabularMdp three_state_chain(double discount) {
    Eigen::MatrixXd t = Eigen::MatrixXd::Zero(6, 3);
    t(0, 1) = 1.0;
    t(1, 2) = 1.0;
    t(2, 2) = 1.0;
    t(3, 2) = 1.0;
    t(4, 2) = 1.0;
    t(5, 2) = 1.0;
    return TabularMdp(3, 2, std::move(t), Eigen::Vector3d(1.0, 0.0, 0.0), discount);
}

std::pair<TabularMdp, TabularMdp> differing_row_environments(double discount) {
    Eigen::MatrixXd t = Eigen::MatrixXd::Constant(6, 3, 1.0 / 3.0);
    const Eigen::VectorXd mu0 = Eigen::VectorXd::Constant(3, 1.0 / 3.0);
    t.row(0) << 0.5, 0.5, 0.0;
    TabularMdp first(3, 2, t, mu0, discount);
    t.row(0) << 0.0, 0.5, 0.5;
    return {std::move(first), TabularMdp(3, 2, std::move(t), mu0, discount)};
}

}  // namespace starclab
