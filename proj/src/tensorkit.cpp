#include "qptorus/tensorkit.hpp"

#include "qptorus/error.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <string>

namespace qpt {

const char* to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::DimensionTooLarge: return "DimensionTooLarge";
        case ErrorCode::ShapeError: return "ShapeError";
        case ErrorCode::AliasingError: return "AliasingError";
        case ErrorCode::StencilError: return "StencilError";
        case ErrorCode::ConstraintMismatch: return "ConstraintMismatch";
        case ErrorCode::FoldHandling: return "FoldHandling";
        case ErrorCode::BranchStall: return "BranchStall";
        case ErrorCode::NotAnNSPoint: return "NotAnNSPoint";
        case ErrorCode::NumericalBlowup: return "NumericalBlowup";
        case ErrorCode::Blowup: return "Blowup";
        case ErrorCode::ConfigError: return "ConfigError";
        case ErrorCode::IoError: return "IoError";
        case ErrorCode::InvalidArgument: return "InvalidArgument";
    }
    return "UnknownError";
}

namespace tensorkit {

void check_element_count(std::size_t rows, std::size_t cols, std::size_t cap) {
    if (rows != 0 && cols > std::numeric_limits<std::size_t>::max() / rows) {
        fail(ErrorCode::DimensionTooLarge, "element count overflows size_t");
    }
    const std::size_t count = rows * cols;
    if (count > cap) {
        fail(ErrorCode::DimensionTooLarge, std::to_string(rows) + "x" + std::to_string(cols) +
                                               " exceeds the element cap of " + std::to_string(cap));
    }
}

DenseMatrix kron(const DenseMatrix& a, const DenseMatrix& b, std::size_t cap) {
    const auto rows = static_cast<std::size_t>(a.rows()) * static_cast<std::size_t>(b.rows());
    const auto cols = static_cast<std::size_t>(a.cols()) * static_cast<std::size_t>(b.cols());
    check_element_count(rows, cols, cap);
    DenseMatrix out(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    const Eigen::Index br = b.rows();
    const Eigen::Index bc = b.cols();
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
        for (Eigen::Index i = 0; i < a.rows(); ++i) {
            out.block(i * br, j * bc, br, bc) = a(i, j) * b;
        }
    }
    return out;
}

std::size_t element_count(const Shape& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::vector<double> relayout(std::span<const double> data, const Shape& from_shape,
                             std::span<const std::size_t> perm, const Shape& to_shape) {
    const std::size_t count = element_count(from_shape);
    if (count != data.size() || count != element_count(to_shape)) {
        fail(ErrorCode::ShapeError, "relayout: element counts of data, source and target shapes differ");
    }
    const std::size_t rank = from_shape.size();
    if (perm.size() != rank) {
        fail(ErrorCode::ShapeError, "relayout: permutation rank does not match source shape");
    }
    std::vector<bool> seen(rank, false);
    for (auto axis : perm) {
        if (axis >= rank || seen[axis]) fail(ErrorCode::ShapeError, "relayout: invalid axis permutation");
        seen[axis] = true;
    }

    std::vector<std::size_t> in_stride(rank, 1);
    for (std::size_t k = 1; k < rank; ++k) in_stride[k] = in_stride[k - 1] * from_shape[k - 1];

    // Walk the output in linear order; stride[k] is the input stride of output axis k.
    std::vector<std::size_t> out_dims(rank), stride(rank);
    for (std::size_t k = 0; k < rank; ++k) {
        out_dims[k] = from_shape[perm[k]];
        stride[k] = in_stride[perm[k]];
    }

    std::vector<double> out(count);
    if (count == 0) return out;
    if (rank == 0) {
        out[0] = data[0];
        return out;
    }
    std::vector<std::size_t> index(rank, 0);
    std::size_t src = 0;
    const std::size_t inner = out_dims[0];
    const std::size_t inner_stride = stride[0];
    for (std::size_t dst = 0; dst < count; dst += inner) {
        const double* s = data.data() + src;
        double* o = out.data() + dst;
        for (std::size_t i = 0; i < inner; ++i) o[i] = s[i * inner_stride];
        for (std::size_t k = 1; k < rank; ++k) {
            ++index[k];
            src += stride[k];
            if (index[k] < out_dims[k]) break;
            src -= stride[k] * out_dims[k];
            index[k] = 0;
        }
    }
    return out;
}

DenseMatrix relayout(const DenseMatrix& x, const Shape& from_shape, std::span<const std::size_t> perm,
                     std::size_t rows, std::size_t cols) {
    auto moved = relayout(std::span<const double>(x.data(), static_cast<std::size_t>(x.size())), from_shape,
                          perm, Shape{rows, cols});
    return Eigen::Map<const DenseMatrix>(moved.data(), static_cast<Eigen::Index>(rows),
                                         static_cast<Eigen::Index>(cols));
}

std::vector<double> mode_product(std::span<const double> x, Shape& dims, std::size_t axis, const DenseMatrix& m) {
    if (axis >= dims.size()) fail(ErrorCode::ShapeError, "mode_product: axis out of range");
    if (x.size() != element_count(dims)) fail(ErrorCode::ShapeError, "mode_product: data does not match dims");
    std::size_t before = 1, after = 1;
    for (std::size_t k = 0; k < axis; ++k) before *= dims[k];
    for (std::size_t k = axis + 1; k < dims.size(); ++k) after *= dims[k];
    const auto len = static_cast<Eigen::Index>(dims[axis]);
    const auto rows = static_cast<Eigen::Index>(m.rows());
    if (m.cols() != len) fail(ErrorCode::ShapeError, "mode_product: factor does not match the tensor axis");
    std::vector<double> out(before * after * static_cast<std::size_t>(rows));
    if (axis == 0) {
        Eigen::Map<const DenseMatrix> X(x.data(), len, static_cast<Eigen::Index>(after));
        Eigen::Map<DenseMatrix> Y(out.data(), rows, static_cast<Eigen::Index>(after));
        Y.noalias() = m * X;
    } else {
        // Each trailing slab is a (before x len) matrix; right-multiply by m^T.
        const auto a = static_cast<Eigen::Index>(before);
        for (std::size_t b = 0; b < after; ++b) {
            Eigen::Map<const DenseMatrix> X(x.data() + b * before * dims[axis], a, len);
            Eigen::Map<DenseMatrix> Y(out.data() + b * before * static_cast<std::size_t>(rows), a, rows);
            Y.noalias() = X * m.transpose();
        }
    }
    dims[axis] = static_cast<std::size_t>(rows);
    return out;
}

DenseMatrix kron_apply(std::span<const DenseMatrix* const> factors, const DenseMatrix& x) {
    // x rows are indexed (i_1, ..., i_k) with i_k fastest, i.e. column-major
    // axes (i_k, ..., i_1) followed by the column axis.
    std::size_t rows = 1;
    for (const auto* f : factors) rows *= static_cast<std::size_t>(f->cols());
    if (rows != static_cast<std::size_t>(x.rows())) {
        fail(ErrorCode::ShapeError, "kron_apply: operand rows do not match the Kronecker factors");
    }
    const std::size_t k = factors.size();
    Shape dims(k + 1);
    for (std::size_t a = 0; a < k; ++a) dims[a] = static_cast<std::size_t>(factors[k - 1 - a]->cols());
    dims[k] = static_cast<std::size_t>(x.cols());
    std::vector<double> cur(x.data(), x.data() + x.size());
    for (std::size_t a = 0; a < k; ++a) cur = mode_product(cur, dims, a, *factors[k - 1 - a]);
    std::size_t out_rows = 1;
    for (const auto* f : factors) out_rows *= static_cast<std::size_t>(f->rows());
    return Eigen::Map<const DenseMatrix>(cur.data(), static_cast<Eigen::Index>(out_rows), x.cols());
}

Tensor3::Tensor3(std::size_t d1, std::size_t d2, std::size_t d3) : dims{d1, d2, d3}, data(d1 * d2 * d3, 0.0) {}

Tensor3::Tensor3(std::size_t d1, std::size_t d2, std::size_t d3, std::vector<double> values)
    : dims{d1, d2, d3}, data(std::move(values)) {
    if (data.size() != d1 * d2 * d3) fail(ErrorCode::ShapeError, "Tensor3: data length does not match dims");
}

Tensor3 diag_expand(const Tensor3& x) {
    if (x.dims[1] != 1) fail(ErrorCode::ShapeError, "diag_expand: middle dimension must be 1");
    const std::size_t n = x.dims[0];
    Tensor3 out(n, n, x.dims[2]);
    for (std::size_t p = 0; p < x.dims[2]; ++p) {
        for (std::size_t i = 0; i < n; ++i) out(i, i, p) = x(i, 0, p);
    }
    return out;
}

}  // namespace tensorkit
}  // namespace qpt
