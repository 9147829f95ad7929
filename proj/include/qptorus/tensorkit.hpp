#pragma once

// Dense kernels shared by the assembly and the U/S-domain transforms.
//
// Every multi-dimensional array in the library is linearized column-major:
// for a shape (d0, d1, ..., dk) the element (i0, i1, ..., ik) lives at
// i0 + d0*(i1 + d1*(i2 + ...)). Eigen's default storage is column-major as
// well, so a DenseMatrix of r x c is the 2-d case of the same rule.

#include <Eigen/Dense>

#include <array>
#include <cstddef>
#include <span>
#include <vector>

namespace qpt {

using DenseMatrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;
using Shape = std::vector<std::size_t>;

namespace tensorkit {

/// Default cap on the number of elements of any materialized operator.
inline constexpr std::size_t kDefaultElementCap = std::size_t{1} << 31;

/// Throws DimensionTooLarge when rows*cols overflows or exceeds cap.
void check_element_count(std::size_t rows, std::size_t cols, std::size_t cap = kDefaultElementCap);

[[nodiscard]] DenseMatrix kron(const DenseMatrix& a, const DenseMatrix& b,
                               std::size_t cap = kDefaultElementCap);

/// kron(a_1, ..., a_k) applied to x without forming the product.
/// The factors are ordered as written, so the last factor's index varies
/// fastest in x. Works column by column when x has several columns.
[[nodiscard]] DenseMatrix kron_apply(std::span<const DenseMatrix* const> factors, const DenseMatrix& x);

[[nodiscard]] std::size_t element_count(const Shape& shape);

/// Multiplies axis `axis` of a column-major tensor by m (m.cols() == dims[axis]);
/// dims[axis] becomes m.rows(). No data movement beyond the products.
[[nodiscard]] std::vector<double> mode_product(std::span<const double> x, Shape& dims, std::size_t axis,
                                               const DenseMatrix& m);

/// Interprets data as a tensor of from_shape, permutes its axes so that
/// output axis k is input axis perm[k], and re-linearizes into to_shape.
/// to_shape only regroups the permuted axes; its product must match.
[[nodiscard]] std::vector<double> relayout(std::span<const double> data, const Shape& from_shape,
                                           std::span<const std::size_t> perm, const Shape& to_shape);

/// DenseMatrix convenience overload; the result is reshaped to rows x cols.
[[nodiscard]] DenseMatrix relayout(const DenseMatrix& x, const Shape& from_shape,
                                   std::span<const std::size_t> perm, std::size_t rows, std::size_t cols);

struct Tensor3 {
    std::array<std::size_t, 3> dims{0, 0, 0};
    std::vector<double> data;

    Tensor3() = default;
    Tensor3(std::size_t d1, std::size_t d2, std::size_t d3);
    Tensor3(std::size_t d1, std::size_t d2, std::size_t d3, std::vector<double> values);

    [[nodiscard]] double& operator()(std::size_t i, std::size_t j, std::size_t k) {
        return data[i + dims[0] * (j + dims[1] * k)];
    }
    [[nodiscard]] double operator()(std::size_t i, std::size_t j, std::size_t k) const {
        return data[i + dims[0] * (j + dims[1] * k)];
    }
};

/// Turns each length-d1 page vector of a (d1 x 1 x d3) tensor into a
/// d1 x d1 diagonal page.
[[nodiscard]] Tensor3 diag_expand(const Tensor3& x);

}  // namespace tensorkit
}  // namespace qpt
