#include "ncert/ulam.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <stdexcept>

namespace ncert {

namespace {

constexpr double kU = 0x1p-53;

double gamma_up(double n) { return n * kU / (1.0 - n * kU) * (1.0 + 1e-12); }

double sub_down(double a, double b) { return add_down(a, -b); }
double sub_up(double a, double b) { return add_up(a, -b); }

// Lower / upper bound of |[a,b] ∩ [l,r]|.
double overlap_down(double a, double b, double l, double r) {
    double lo = std::max(a, l), hi = std::min(b, r);
    return hi > lo ? sub_down(hi, lo) : 0.0;
}
double overlap_up(double a, double b, double l, double r) {
    double lo = std::max(a, l), hi = std::min(b, r);
    return hi > lo ? sub_up(hi, lo) : 0.0;
}

struct Triplet {
    uint32_t col, row;
    double lo, hi;
};

}  // namespace

UlamGrid::UlamGrid(size_t k_) : k(k_) {
    if (k < 2 || (k & (k - 1)) != 0) throw std::invalid_argument("grid size must be a power of two >= 2");
}

size_t UlamGrid::cell_of(double x) const {
    if (x <= 0) return 0;
    if (x >= 1) return k - 1;
    return std::min(k - 1, static_cast<size_t>(std::floor(x * static_cast<double>(k))));
}

DensityVector project_primitive(const UlamGrid& grid, const std::function<Interval(const Interval&)>& F) {
    DensityVector out(grid.k);
    Interval kk(static_cast<double>(grid.k));
    Interval prev = F(Interval(0.0));
    for (size_t i = 0; i < grid.k; ++i) {
        Interval next = F(Interval(grid.right(i)));
        out[i] = (next - prev) * kk;
        prev = next;
    }
    return out;
}

DensityVector project_range(const UlamGrid& grid, const std::function<Interval(const Interval&)>& f,
                            int pieces) {
    DensityVector out(grid.k);
    for (size_t i = 0; i < grid.k; ++i) {
        Interval acc(0.0);
        for (int p = 0; p < pieces; ++p) {
            double l = grid.left(i) + (grid.right(i) - grid.left(i)) * p / pieces;
            double r = p + 1 == pieces ? grid.right(i) : grid.left(i) + (grid.right(i) - grid.left(i)) * (p + 1) / pieces;
            acc += f(Interval(l, r));
        }
        out[i] = acc / Interval(static_cast<double>(pieces));
    }
    return out;
}

DensityVector coarsen(const DensityVector& v, size_t k_coarse) {
    if (k_coarse == 0 || v.size() % k_coarse != 0) throw std::invalid_argument("coarsen: size mismatch");
    size_t r = v.size() / k_coarse;
    DensityVector out(k_coarse);
    for (size_t i = 0; i < k_coarse; ++i) {
        Interval acc(0.0);
        for (size_t t = 0; t < r; ++t) acc += v[i * r + t];
        out[i] = acc / Interval(static_cast<double>(r));
    }
    return out;
}

std::vector<double> coarsen(const std::vector<double>& v, size_t k_coarse) {
    if (k_coarse == 0 || v.size() % k_coarse != 0) throw std::invalid_argument("coarsen: size mismatch");
    size_t r = v.size() / k_coarse;
    std::vector<double> out(k_coarse);
    for (size_t i = 0; i < k_coarse; ++i) {
        double acc = 0;
        for (size_t t = 0; t < r; ++t) acc += v[i * r + t];
        out[i] = acc / static_cast<double>(r);
    }
    return out;
}

Interval l1_norm(const DensityVector& v) {
    Interval acc(0.0);
    for (const auto& x : v) acc += abs(x);
    return acc / Interval(static_cast<double>(v.size()));
}

Interval mass(const DensityVector& v) {
    Interval acc(0.0);
    for (const auto& x : v) acc += x;
    return acc / Interval(static_cast<double>(v.size()));
}

double l1_norm_up(const double* v, size_t k) {
    double s = 0;
    for (size_t i = 0; i < k; ++i) s += std::fabs(v[i]);
    // Recursive summation of k nonnegative terms: relative error <= gamma_k.
    return s * (1.0 + gamma_up(static_cast<double>(k) + 2)) / static_cast<double>(k);
}

void l1_norm_up_batch(const double* V, size_t k, double* out) {
    double s[kLanes] = {};
    for (size_t i = 0; i < k; ++i)
        for (size_t l = 0; l < kLanes; ++l) s[l] += std::fabs(V[i * kLanes + l]);
    const double f = 1.0 + gamma_up(static_cast<double>(k) + 2);
    for (size_t l = 0; l < kLanes; ++l) out[l] = s[l] * f / static_cast<double>(k);
}

// ------------------------------------------------------------------ operator

Interval UlamOperator::entry(size_t i, size_t j) const {
    for (uint32_t p = col_ptr_[j]; p < col_ptr_[j + 1]; ++p)
        if (row_[p] == i) return {lo_[p], hi_[p]};
    return Interval(0.0);
}

Interval UlamOperator::column_sum(size_t j) const {
    double l = 0, h = 0;
    for (uint32_t p = col_ptr_[j]; p < col_ptr_[j + 1]; ++p) {
        l = add_down(l, lo_[p]);
        h = add_up(h, hi_[p]);
    }
    return {l, h};
}

void UlamOperator::finalize() {
    mid_.resize(lo_.size());
    for (size_t p = 0; p < lo_.size(); ++p) mid_[p] = 0.5 * (lo_[p] + hi_[p]);
    std::vector<uint32_t> row_count(k_, 0);
    for (uint32_t r : row_) ++row_count[r];
    uint32_t max_row = 0;
    for (uint32_t c : row_count) max_row = std::max(max_row, c);
    const double g = gamma_up(static_cast<double>(max_row) + 1);
    col_weight_.assign(k_, 0.0);
    for (size_t j = 0; j < k_; ++j) {
        double rad = 0, absm = 0;
        for (uint32_t p = col_ptr_[j]; p < col_ptr_[j + 1]; ++p) {
            rad = add_up(rad, std::max(sub_up(hi_[p], mid_[p]), sub_up(mid_[p], lo_[p])));
            absm = add_up(absm, std::fabs(mid_[p]));
        }
        col_weight_[j] = add_up(rad, mul_up(g, absm));
    }
}

void UlamOperator::apply_fast(const double* x, double* y) const {
    std::fill(y, y + k_, 0.0);
    const uint32_t* cp = col_ptr_.data();
    const uint32_t* rw = row_.data();
    const double* m = mid_.data();
    for (size_t j = 0; j < k_; ++j) {
        const double xj = x[j];
        if (xj == 0.0) continue;
        for (uint32_t p = cp[j]; p < cp[j + 1]; ++p) y[rw[p]] += m[p] * xj;
    }
}

double UlamOperator::fast_error(const double* x) const {
    double s = 0;
    for (size_t j = 0; j < k_; ++j) s += std::fabs(x[j]) * col_weight_[j];
    return s * (1.0 + gamma_up(2.0 * static_cast<double>(k_) + 4)) / static_cast<double>(k_);
}

void UlamOperator::apply_fast_batch(const double* X, double* Y) const {
    std::fill(Y, Y + k_ * kLanes, 0.0);
    const uint32_t* cp = col_ptr_.data();
    const uint32_t* rw = row_.data();
    const double* m = mid_.data();
    for (size_t j = 0; j < k_; ++j) {
        const double* xj = X + j * kLanes;
        bool any = false;
        for (size_t l = 0; l < kLanes; ++l) any |= xj[l] != 0.0;
        if (!any) continue;
        for (uint32_t p = cp[j]; p < cp[j + 1]; ++p) {
            double* y = Y + static_cast<size_t>(rw[p]) * kLanes;
            const double mp = m[p];
            for (size_t l = 0; l < kLanes; ++l) y[l] += mp * xj[l];
        }
    }
}

void UlamOperator::fast_error_batch(const double* X, double* err) const {
    double s[kLanes] = {};
    for (size_t j = 0; j < k_; ++j) {
        const double w = col_weight_[j];
        for (size_t l = 0; l < kLanes; ++l) s[l] += std::fabs(X[j * kLanes + l]) * w;
    }
    const double f = 1.0 + gamma_up(2.0 * static_cast<double>(k_) + 4);
    for (size_t l = 0; l < kLanes; ++l) err[l] = s[l] * f / static_cast<double>(k_);
}

DensityVector UlamOperator::apply(const DensityVector& x) const {
    if (x.size() != k_) throw std::invalid_argument("ulam apply: length mismatch");
    DensityVector y(k_, Interval(0.0));
    for (size_t j = 0; j < k_; ++j)
        for (uint32_t p = col_ptr_[j]; p < col_ptr_[j + 1]; ++p)
            y[row_[p]] += Interval(lo_[p], hi_[p]) * x[j];
    return y;
}

bool UlamOperator::operator==(const UlamOperator& o) const {
    return k_ == o.k_ && map_hash_ == o.map_hash_ && col_ptr_ == o.col_ptr_ && row_ == o.row_ &&
           lo_ == o.lo_ && hi_ == o.hi_;
}

namespace {
constexpr char kMagic[8] = {'N', 'C', 'U', 'L', 'A', 'M', '1', '\n'};

template <class T>
void put(std::ofstream& f, const T& v) { f.write(reinterpret_cast<const char*>(&v), sizeof(T)); }
template <class T>
void get(std::ifstream& f, T& v) { f.read(reinterpret_cast<char*>(&v), sizeof(T)); }
void put_str(std::ofstream& f, const std::string& s) {
    put(f, static_cast<uint64_t>(s.size()));
    f.write(s.data(), static_cast<std::streamsize>(s.size()));
}
std::string get_str(std::ifstream& f) {
    uint64_t n = 0;
    get(f, n);
    if (n > (1u << 20)) throw std::runtime_error("operator cache: corrupt string");
    std::string s(n, '\0');
    f.read(s.data(), static_cast<std::streamsize>(n));
    return s;
}
template <class T>
void put_vec(std::ofstream& f, const std::vector<T>& v) {
    put(f, static_cast<uint64_t>(v.size()));
    f.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(T)));
}
template <class T>
void get_vec(std::ifstream& f, std::vector<T>& v) {
    uint64_t n = 0;
    get(f, n);
    if (n > (1ull << 34)) throw std::runtime_error("operator cache: corrupt length");
    v.resize(n);
    f.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(T)));
}
}  // namespace

void UlamOperator::save(const std::string& path) const {
    std::string tmp = path + ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary);
        if (!f) throw std::runtime_error("cannot write " + tmp);
        f.write(kMagic, sizeof kMagic);
        put(f, static_cast<uint64_t>(k_));
        put_str(f, map_id_);
        put_str(f, map_hash_);
        put_vec(f, col_ptr_);
        put_vec(f, row_);
        put_vec(f, lo_);
        put_vec(f, hi_);
        put(f, static_cast<uint64_t>(warnings_.size()));
        for (const auto& w : warnings_) put_str(f, w);
        if (!f) throw std::runtime_error("write failed: " + tmp);
    }
    std::filesystem::rename(tmp, path);
}

UlamOperator UlamOperator::load(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot read " + path);
    char magic[8];
    f.read(magic, sizeof magic);
    if (!f || std::memcmp(magic, kMagic, sizeof kMagic) != 0) throw std::runtime_error("not an operator cache: " + path);
    UlamOperator op;
    uint64_t k = 0;
    get(f, k);
    op.k_ = k;
    op.map_id_ = get_str(f);
    op.map_hash_ = get_str(f);
    get_vec(f, op.col_ptr_);
    get_vec(f, op.row_);
    get_vec(f, op.lo_);
    get_vec(f, op.hi_);
    uint64_t nw = 0;
    get(f, nw);
    for (uint64_t i = 0; i < nw && f; ++i) op.warnings_.push_back(get_str(f));
    if (!f || op.col_ptr_.size() != k + 1 || op.row_.size() != op.lo_.size() || op.lo_.size() != op.hi_.size())
        throw std::runtime_error("operator cache truncated: " + path);
    op.finalize();
    return op;
}

// ------------------------------------------------------------------ assembly

UlamOperator assemble(const MapModel& m, const UlamGrid& grid, double tol) {
    const size_t k = grid.k;
    const double kd = static_cast<double>(k);
    std::vector<Triplet> trip;
    trip.reserve(8 * k);
    std::vector<std::string> warnings;

    auto emit = [&](size_t row, double in_a, double in_b, double out_a, double out_b) {
        out_a = std::max(out_a, 0.0);
        out_b = std::min(out_b, 1.0);
        if (out_b <= out_a) return;
        size_t j0 = grid.cell_of(out_a), j1 = grid.cell_of(out_b);
        for (size_t j = j0; j <= j1; ++j) {
            double l = grid.left(j), r = grid.right(j);
            double hi = overlap_up(out_a, out_b, l, r) * kd;
            if (hi <= 0) continue;
            double lo = in_b > in_a ? overlap_down(in_a, in_b, l, r) * kd : 0.0;
            trip.push_back({static_cast<uint32_t>(j), static_cast<uint32_t>(row), std::min(lo, 1.0), std::min(hi, 1.0)});
        }
    };

    for (size_t b = 0; b < m.branch_count(); ++b) {
        const BranchSpec& s = m.branch(b);
        if (s.mono == Monotonicity::Constant) {
            Interval v = m.eval(b, m.outer_domain(b));
            Interval in = m.inner_domain(b), out = m.outer_domain(b);
            size_t r0 = grid.cell_of(v.lo), r1 = grid.cell_of(v.hi);
            for (size_t r = r0; r <= r1; ++r) {
                if (r0 == r1) emit(r, in.lo, in.hi, out.lo, out.hi);
                else emit(r, 0, 0, out.lo, out.hi);
            }
            continue;
        }
        Interval img = m.branch_image(b);
        size_t r0 = grid.cell_of(std::max(img.lo, 0.0)), r1 = grid.cell_of(std::min(img.hi, 1.0));
        // p[r - r0] encloses the crossing of y = r/k.
        std::vector<Interval> p(r1 - r0 + 2);
        for (size_t r = r0; r <= r1 + 1; ++r) p[r - r0] = m.crossing(b, static_cast<double>(r) / kd, tol);
        const bool inc = s.mono == Monotonicity::Increasing;
        size_t wide = 0;
        for (size_t r = r0; r <= r1; ++r) {
            const Interval& a = inc ? p[r - r0] : p[r + 1 - r0];
            const Interval& c = inc ? p[r + 1 - r0] : p[r - r0];
            // Preimage of row r is [a, c) (increasing) or (a, c] (decreasing).
            if (a.width() > grid.delta_d() || c.width() > grid.delta_d()) ++wide;
            emit(r, a.hi, c.lo, a.lo, c.hi);
        }
        if (wide > 0)
            warnings.push_back("branch " + std::to_string(b) + ": " + std::to_string(wide) +
                               " rows with preimage enclosures wider than one cell");
    }

    std::sort(trip.begin(), trip.end(), [](const Triplet& x, const Triplet& y) {
        return x.col != y.col ? x.col < y.col : x.row < y.row;
    });
    UlamOperator op;
    op.k_ = k;
    op.map_id_ = m.id();
    op.map_hash_ = m.content_hash();
    op.warnings_ = std::move(warnings);
    op.col_ptr_.assign(k + 1, 0);
    for (size_t t = 0; t < trip.size();) {
        size_t u = t;
        double lo = 0, hi = 0;
        while (u < trip.size() && trip[u].col == trip[t].col && trip[u].row == trip[t].row) {
            lo = add_down(lo, trip[u].lo);
            hi = add_up(hi, trip[u].hi);
            ++u;
        }
        op.row_.push_back(trip[t].row);
        op.lo_.push_back(std::min(lo, 1.0));
        op.hi_.push_back(std::min(hi, 1.0));
        op.col_ptr_[trip[t].col + 1]++;
        t = u;
    }
    for (size_t j = 0; j < k; ++j) op.col_ptr_[j + 1] += op.col_ptr_[j];
    op.finalize();
    return op;
}

UlamOperator assemble_cached(const MapModel& m, const UlamGrid& grid, const std::string& cache_dir) {
    if (cache_dir.empty()) return assemble(m, grid);
    namespace fs = std::filesystem;
    fs::create_directories(cache_dir);
    std::string path = (fs::path(cache_dir) / ("ulam_" + m.id() + "_" + m.content_hash() + "_k" +
                                               std::to_string(grid.k) + ".bin")).string();
    if (fs::exists(path)) {
        try {
            UlamOperator op = UlamOperator::load(path);
            if (op.k() == grid.k && op.map_hash() == m.content_hash()) return op;
        } catch (const std::exception&) {
            // fall through and rebuild
        }
    }
    UlamOperator op = assemble(m, grid);
    op.save(path);
    return op;
}

DensityVector apply(const UlamOperator& op, const NoiseStencil& noise, const DensityVector& v) {
    return noise.apply(op.apply(v));
}

DensityVector apply(const UlamOperator& op, const NoiseKernel& kernel, const DensityVector& v) {
    return apply(op, NoiseStencil(kernel, op.k()), v);
}

}  // namespace ncert
