#pragma once

#include <cstddef>
#include <vector>

namespace csight {

// A set of n points in R^d stored dimension-major: dimension d occupies the
// contiguous range [d*n, (d+1)*n). This layout lets the SIMD kernels stream
// one dimension across many points at a time.
class PointSet {
public:
    PointSet() = default;
    PointSet(std::size_t n, std::size_t dims)
        : n_(n), dims_(dims), data_(n * dims, 0.0) {}

    double& at(std::size_t point, std::size_t dim) { return data_[dim * n_ + point]; }
    double at(std::size_t point, std::size_t dim) const { return data_[dim * n_ + point]; }

    double* dim(std::size_t d) { return data_.data() + d * n_; }
    const double* dim(std::size_t d) const { return data_.data() + d * n_; }

    std::size_t size() const { return n_; }
    std::size_t dims() const { return dims_; }

    std::vector<const double*> dim_ptrs() const {
        std::vector<const double*> p(dims_);
        for (std::size_t d = 0; d < dims_; ++d) p[d] = dim(d);
        return p;
    }

    bool operator==(const PointSet&) const = default;

private:
    std::size_t n_ = 0;
    std::size_t dims_ = 0;
    std::vector<double> data_;
};

} // namespace csight
