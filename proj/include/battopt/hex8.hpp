#ifndef BATTOPT_HEX8_HPP
#define BATTOPT_HEX8_HPP

#include <array>
#include <cmath>

#include <Eigen/Dense>

namespace battopt::hex8 {

using Mat8 = Eigen::Matrix<double, 8, 8>;
using Mat24 = Eigen::Matrix<double, 24, 24>;
using Mat24x8 = Eigen::Matrix<double, 24, 8>;
using Mat6 = Eigen::Matrix<double, 6, 6>;
using Mat6x24 = Eigen::Matrix<double, 6, 24>;
using Vec8 = Eigen::Matrix<double, 8, 1>;
using Vec24 = Eigen::Matrix<double, 24, 1>;
using Vec6 = Eigen::Matrix<double, 6, 1>;

/// Corner signs in reference coordinates [-1, 1]^3, matching StructuredGrid::element_nodes.
inline constexpr std::array<std::array<int, 3>, 8> corners{{
    {-1, -1, -1}, {1, -1, -1}, {1, 1, -1}, {-1, 1, -1},
    {-1, -1, 1},  {1, -1, 1},  {1, 1, 1},  {-1, 1, 1},
}};

inline Vec8 shape(double xi, double eta, double zeta) {
    Vec8 n;
    for (int a = 0; a < 8; ++a)
        n[a] = 0.125 * (1 + xi * corners[a][0]) * (1 + eta * corners[a][1]) *
               (1 + zeta * corners[a][2]);
    return n;
}

/// Physical gradients (3 x 8) of the shape functions on an axis-aligned box.
inline Eigen::Matrix<double, 3, 8> shape_gradient(double xi, double eta, double zeta, double hx,
                                                  double hy, double hz) {
    Eigen::Matrix<double, 3, 8> g;
    for (int a = 0; a < 8; ++a) {
        const double sx = corners[a][0], sy = corners[a][1], sz = corners[a][2];
        g(0, a) = 0.125 * sx * (1 + eta * sy) * (1 + zeta * sz) * 2.0 / hx;
        g(1, a) = 0.125 * sy * (1 + xi * sx) * (1 + zeta * sz) * 2.0 / hy;
        g(2, a) = 0.125 * sz * (1 + xi * sx) * (1 + eta * sy) * 2.0 / hz;
    }
    return g;
}

struct GaussPoint {
    double xi, eta, zeta, weight;
};

inline std::array<GaussPoint, 8> gauss_2x2x2() {
    const double g = 1.0 / std::sqrt(3.0);
    std::array<GaussPoint, 8> pts{};
    for (int a = 0; a < 8; ++a)
        pts[a] = {g * corners[a][0], g * corners[a][1], g * corners[a][2], 1.0};
    return pts;
}

/// Strain-displacement matrix, Voigt order xx yy zz yz xz xy with engineering shear.
inline Mat6x24 strain_matrix(const Eigen::Matrix<double, 3, 8>& grad) {
    Mat6x24 b = Mat6x24::Zero();
    for (int a = 0; a < 8; ++a) {
        const double dx = grad(0, a), dy = grad(1, a), dz = grad(2, a);
        b(0, 3 * a) = dx;
        b(1, 3 * a + 1) = dy;
        b(2, 3 * a + 2) = dz;
        b(3, 3 * a + 1) = dz;
        b(3, 3 * a + 2) = dy;
        b(4, 3 * a) = dz;
        b(4, 3 * a + 2) = dx;
        b(5, 3 * a) = dy;
        b(5, 3 * a + 1) = dx;
    }
    return b;
}

inline Mat6 isotropic_elasticity(double youngs, double poisson) {
    const double lambda = youngs * poisson / ((1 + poisson) * (1 - 2 * poisson));
    const double mu = youngs / (2 * (1 + poisson));
    Mat6 c = Mat6::Zero();
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) c(i, j) = lambda;
        c(i, i) = lambda + 2 * mu;
        c(i + 3, i + 3) = mu;
    }
    return c;
}

inline Vec6 unit_volumetric() {
    Vec6 m;
    m << 1, 1, 1, 0, 0, 0;
    return m;
}

/// Element conductivity matrix for unit conductivity.
inline Mat8 conductivity_matrix(double hx, double hy, double hz) {
    const double det = hx * hy * hz / 8.0;
    Mat8 k = Mat8::Zero();
    for (const auto& gp : gauss_2x2x2()) {
        const auto g = shape_gradient(gp.xi, gp.eta, gp.zeta, hx, hy, hz);
        k.noalias() += gp.weight * det * g.transpose() * g;
    }
    return k;
}

/// Element stiffness matrix for unit Young's modulus.
inline Mat24 stiffness_matrix(double hx, double hy, double hz, double poisson) {
    const double det = hx * hy * hz / 8.0;
    const Mat6 c = isotropic_elasticity(1.0, poisson);
    Mat24 k = Mat24::Zero();
    for (const auto& gp : gauss_2x2x2()) {
        const Mat6x24 b = strain_matrix(shape_gradient(gp.xi, gp.eta, gp.zeta, hx, hy, hz));
        k.noalias() += gp.weight * det * b.transpose() * c * b;
    }
    return k;
}

/// Maps nodal temperature rise to nodal thermal-expansion forces for unit
/// Young's modulus and unit expansion coefficient: f = G * dT.
inline Mat24x8 thermal_coupling_matrix(double hx, double hy, double hz, double poisson) {
    const double det = hx * hy * hz / 8.0;
    const Vec6 cm = isotropic_elasticity(1.0, poisson) * unit_volumetric();
    Mat24x8 g = Mat24x8::Zero();
    for (const auto& gp : gauss_2x2x2()) {
        const Mat6x24 b = strain_matrix(shape_gradient(gp.xi, gp.eta, gp.zeta, hx, hy, hz));
        const Vec8 n = shape(gp.xi, gp.eta, gp.zeta);
        g.noalias() += gp.weight * det * (b.transpose() * cm) * n.transpose();
    }
    return g;
}

} // namespace battopt::hex8

#endif // BATTOPT_HEX8_HPP
