#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "ncert/interval.hpp"
#include "ncert/map_model.hpp"
#include "ncert/noise.hpp"

namespace ncert {

// Homogeneous partition of [0,1] into k cells (k a power of two, so cell
// boundaries i/k are exact doubles).
struct UlamGrid {
    size_t k = 0;

    explicit UlamGrid(size_t k_);
    Interval delta() const { return Interval(1.0 / static_cast<double>(k)); }
    double delta_d() const { return 1.0 / static_cast<double>(k); }
    double left(size_t i) const { return static_cast<double>(i) / static_cast<double>(k); }
    double right(size_t i) const { return static_cast<double>(i + 1) / static_cast<double>(k); }
    Interval cell(size_t i) const { return {left(i), right(i)}; }
    size_t cell_of(double x) const;
};

using DensityVector = std::vector<Interval>;

// Cell averages of f from an enclosure of its primitive F (exact when F is).
DensityVector project_primitive(const UlamGrid& grid, const std::function<Interval(const Interval&)>& F);
// Cell averages of f from its range enclosure on `pieces` sub-cells.
DensityVector project_range(const UlamGrid& grid, const std::function<Interval(const Interval&)>& f,
                            int pieces = 1);
// Average a fine vector onto a coarser grid (k_fine a multiple of k_coarse).
DensityVector coarsen(const DensityVector& v, size_t k_coarse);
std::vector<double> coarsen(const std::vector<double>& v, size_t k_coarse);

// delta * sum |v_i| as a certified enclosure.
Interval l1_norm(const DensityVector& v);
Interval mass(const DensityVector& v);
// Rounded-up delta * sum |v_i| for a float vector.
double l1_norm_up(const double* v, size_t k);
// Per-lane l1_norm_up of kLanes interleaved vectors.
void l1_norm_up_batch(const double* V, size_t k, double* out);

// pi_delta L pi_delta as a sparse matrix of interval entries in compressed
// column form. Entry (i,j) encloses m(I_j ∩ T^{-1} I_i) / m(I_j); it acts
// identically on cell masses and cell averages.
class UlamOperator {
public:
    UlamOperator() = default;

    size_t k() const { return k_; }
    const std::string& map_id() const { return map_id_; }
    const std::string& map_hash() const { return map_hash_; }
    size_t nnz() const { return row_.size(); }
    const std::vector<uint32_t>& col_ptr() const { return col_ptr_; }
    const std::vector<uint32_t>& rows() const { return row_; }
    const std::vector<double>& lo() const { return lo_; }
    const std::vector<double>& hi() const { return hi_; }
    const std::vector<double>& mid() const { return mid_; }
    Interval entry(size_t i, size_t j) const;
    Interval column_sum(size_t j) const;
    const std::vector<std::string>& warnings() const { return warnings_; }

    // y = P_mid x in round-to-nearest (y is overwritten).
    void apply_fast(const double* x, double* y) const;
    // Certified bound on || P x - apply_fast(x) ||_1 (delta-scaled).
    double fast_error(const double* x) const;
    // Certified enclosure of P x.
    DensityVector apply(const DensityVector& x) const;

    // kLanes vectors interleaved (X[j * kLanes + l]); per lane the same
    // operations as apply_fast / fast_error.
    void apply_fast_batch(const double* X, double* Y) const;
    void fast_error_batch(const double* X, double* err) const;

    void save(const std::string& path) const;
    static UlamOperator load(const std::string& path);
    bool operator==(const UlamOperator& o) const;

    friend UlamOperator assemble(const MapModel& m, const UlamGrid& grid, double tol);

private:
    size_t k_ = 0;
    std::string map_id_, map_hash_;
    std::vector<uint32_t> col_ptr_, row_;
    std::vector<double> lo_, hi_, mid_;
    std::vector<double> col_weight_;  // per-column error weight used by fast_error
    std::vector<std::string> warnings_;
    void finalize();
};

UlamOperator assemble(const MapModel& m, const UlamGrid& grid, double tol = 0x1p-50);

// Load from `cache_dir` when a matching file exists, otherwise assemble and
// store. Empty cache_dir disables caching.
UlamOperator assemble_cached(const MapModel& m, const UlamGrid& grid, const std::string& cache_dir);

// One step of L_{delta,xi}: Ulam matrix, then the discretized noise.
DensityVector apply(const UlamOperator& op, const NoiseStencil& noise, const DensityVector& v);
DensityVector apply(const UlamOperator& op, const NoiseKernel& kernel, const DensityVector& v);

}  // namespace ncert
