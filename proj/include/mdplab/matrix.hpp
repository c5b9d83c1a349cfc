#ifndef MDPLAB_MATRIX_HPP
#define MDPLAB_MATRIX_HPP

#include <algorithm>
#include <cmath>
#include <map>
#include <span>
#include <stdexcept>
#include <vector>

namespace mdplab {

using Vec = std::vector<double>;

// Dense row-major matrix. Everything in this project is desk scale
// (|S||A| <= ~1e4), so no sparsity and double precision throughout.
class Mat {
public:
    Mat() : rows_(0), cols_(0) {}
    Mat(int rows, int cols, double fill = 0.0)
        : rows_(rows), cols_(cols), a_(static_cast<size_t>(rows) * cols, fill) {
        if (rows < 0 || cols < 0) throw std::invalid_argument("Mat: negative dimension");
    }

    static Mat identity(int n) {
        Mat m(n, n);
        for (int i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    int rows() const { return rows_; }
    int cols() const { return cols_; }

    double& operator()(int r, int c) { return a_[static_cast<size_t>(r) * cols_ + c]; }
    double operator()(int r, int c) const { return a_[static_cast<size_t>(r) * cols_ + c]; }

    std::span<const double> row(int r) const {
        return {a_.data() + static_cast<size_t>(r) * cols_, static_cast<size_t>(cols_)};
    }
    std::span<double> row(int r) {
        return {a_.data() + static_cast<size_t>(r) * cols_, static_cast<size_t>(cols_)};
    }

    const Vec& data() const { return a_; }
    Vec& data() { return a_; }

private:
    int rows_, cols_;
    Vec a_;
};

inline Mat matmul(const Mat& a, const Mat& b) {
    if (a.cols() != b.rows()) throw std::invalid_argument("matmul: shape mismatch");
    Mat out(a.rows(), b.cols());
    for (int i = 0; i < a.rows(); ++i) {
        for (int k = 0; k < a.cols(); ++k) {
            const double aik = a(i, k);
            if (aik == 0.0) continue;
            for (int j = 0; j < b.cols(); ++j) out(i, j) += aik * b(k, j);
        }
    }
    return out;
}

inline Vec matvec(const Mat& a, std::span<const double> x) {
    if (a.cols() != static_cast<int>(x.size())) throw std::invalid_argument("matvec: shape mismatch");
    Vec out(a.rows(), 0.0);
    for (int i = 0; i < a.rows(); ++i) {
        double s = 0.0;
        for (int j = 0; j < a.cols(); ++j) s += a(i, j) * x[j];
        out[i] = s;
    }
    return out;
}

// Row vector times matrix (distribution pushforward x^T P).
inline Vec vecmat(std::span<const double> x, const Mat& a) {
    if (a.rows() != static_cast<int>(x.size())) throw std::invalid_argument("vecmat: shape mismatch");
    Vec out(a.cols(), 0.0);
    for (int i = 0; i < a.rows(); ++i) {
        const double xi = x[i];
        if (xi == 0.0) continue;
        for (int j = 0; j < a.cols(); ++j) out[j] += xi * a(i, j);
    }
    return out;
}

inline double max_abs(std::span<const double> x) {
    double m = 0.0;
    for (double v : x) m = std::max(m, std::fabs(v));
    return m;
}

inline double max_abs_diff(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw std::invalid_argument("max_abs_diff: size mismatch");
    double m = 0.0;
    for (size_t i = 0; i < x.size(); ++i) m = std::max(m, std::fabs(x[i] - y[i]));
    return m;
}

// LU factorization with partial pivoting, in place. Throws if a pivot
// underflows; the systems solved here (I - gamma*P and friends) are
// nonsingular for gamma < 1.
class LuFactors {
public:
    explicit LuFactors(Mat a) : lu_(std::move(a)), piv_(lu_.rows()) {
        if (lu_.rows() != lu_.cols()) throw std::invalid_argument("LuFactors: square matrix required");
        const int n = lu_.rows();
        for (int i = 0; i < n; ++i) piv_[i] = i;
        for (int col = 0; col < n; ++col) {
            int best = col;
            double best_abs = std::fabs(lu_(col, col));
            for (int r = col + 1; r < n; ++r) {
                const double v = std::fabs(lu_(r, col));
                if (v > best_abs) { best = r; best_abs = v; }
            }
            if (best_abs < 1e-300) throw std::runtime_error("LuFactors: singular matrix");
            if (best != col) {
                std::swap(piv_[best], piv_[col]);
                for (int j = 0; j < n; ++j) std::swap(lu_(best, j), lu_(col, j));
            }
            const double inv_pivot = 1.0 / lu_(col, col);
            for (int r = col + 1; r < n; ++r) {
                const double f = lu_(r, col) * inv_pivot;
                lu_(r, col) = f;
                if (f == 0.0) continue;
                for (int j = col + 1; j < n; ++j) lu_(r, j) -= f * lu_(col, j);
            }
        }
    }

    Vec solve(std::span<const double> b) const {
        const int n = lu_.rows();
        if (static_cast<int>(b.size()) != n) throw std::invalid_argument("LuFactors::solve: size mismatch");
        Vec y(n);
        for (int i = 0; i < n; ++i) {
            double s = b[piv_[i]];
            for (int j = 0; j < i; ++j) s -= lu_(i, j) * y[j];
            y[i] = s;
        }
        for (int i = n - 1; i >= 0; --i) {
            double s = y[i];
            for (int j = i + 1; j < n; ++j) s -= lu_(i, j) * y[j];
            y[i] = s / lu_(i, i);
        }
        return y;
    }

    // Solves A X = B column by column.
    Mat solve_multi(const Mat& b) const {
        const int n = lu_.rows();
        if (b.rows() != n) throw std::invalid_argument("LuFactors::solve_multi: shape mismatch");
        Mat x(n, b.cols());
        Vec col(n);
        for (int j = 0; j < b.cols(); ++j) {
            for (int i = 0; i < n; ++i) col[i] = b(i, j);
            Vec sol = solve(col);
            for (int i = 0; i < n; ++i) x(i, j) = sol[i];
        }
        return x;
    }

private:
    Mat lu_;
    std::vector<int> piv_;
};

inline Vec solve_linear(const Mat& a, std::span<const double> b) { return LuFactors(a).solve(b); }

inline Mat invert(const Mat& a) { return LuFactors(a).solve_multi(Mat::identity(a.rows())); }

inline bool is_stochastic(const Mat& p, double tol = 1e-12) {
    if (p.rows() == 0 || p.rows() != p.cols()) return false;
    for (int i = 0; i < p.rows(); ++i) {
        double s = 0.0;
        for (int j = 0; j < p.cols(); ++j) {
            if (p(i, j) < -tol) return false;
            s += p(i, j);
        }
        if (std::fabs(s - 1.0) > tol * p.cols()) return false;
    }
    return true;
}

// Memoized powers of a stochastic kernel, built by binary exponentiation
// over cached squarings. Rows are renormalized whenever accumulated drift
// stays under the guard; larger drift aborts (it would mean the inputs are
// not stochastic to begin with).
class KernelPowerCache {
public:
    explicit KernelPowerCache(Mat p, double drift_guard = 1e-9) : guard_(drift_guard) {
        if (!is_stochastic(p)) throw std::invalid_argument("KernelPowerCache: kernel rows must be nonnegative and sum to 1");
        pw_[1] = std::move(p);
    }

    const Mat& base() const { return pw_.at(1); }
    int dim() const { return pw_.at(1).rows(); }

    const Mat& power(int n) {
        if (n < 0) throw std::invalid_argument("KernelPowerCache::power: negative exponent");
        if (n == 0) {
            auto it = pw_.find(0);
            if (it == pw_.end()) it = pw_.emplace(0, Mat::identity(dim())).first;
            return it->second;
        }
        auto it = pw_.find(n);
        if (it != pw_.end()) return it->second;
        const int half = n / 2;
        Mat result = matmul(power(half), power(n - half));
        renormalize(result);
        return pw_.emplace(n, std::move(result)).first->second;
    }

private:
    void renormalize(Mat& m) const {
        for (int i = 0; i < m.rows(); ++i) {
            double s = 0.0;
            for (int j = 0; j < m.cols(); ++j) s += m(i, j);
            if (std::fabs(s - 1.0) > guard_) throw std::runtime_error("KernelPowerCache: row sum drift exceeds guard");
            const double inv = 1.0 / s;
            for (int j = 0; j < m.cols(); ++j) m(i, j) = std::max(0.0, m(i, j) * inv);
        }
    }

    double guard_;
    std::map<int, Mat> pw_;
};

}  // namespace mdplab

#endif
