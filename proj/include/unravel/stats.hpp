// stats.hpp — Plain-sum accumulators for Monte Carlo means and standard errors.
// Sums are kept in fixed accumulation order so ensemble reductions are
// bit-reproducible; standard error = sample standard deviation / sqrt(n).

#pragma once

#include <cmath>
#include <complex>
#include <optional>

namespace unravel {

struct ScalarStat {
    double sum{0.0};
    double sum_sq{0.0};
    long n{0};

    void add(double x) {
        sum += x;
        sum_sq += x * x;
        ++n;
    }

    void merge(const ScalarStat& o) {
        sum += o.sum;
        sum_sq += o.sum_sq;
        n += o.n;
    }

    double mean() const { return n > 0 ? sum / static_cast<double>(n) : 0.0; }

    double variance() const {
        if (n < 2) return 0.0;
        const double m = mean();
        // Guard against cancellation producing a tiny negative value.
        return std::max(0.0, (sum_sq - static_cast<double>(n) * m * m) / static_cast<double>(n - 1));
    }

    double stderr_of_mean() const {
        return n > 0 ? std::sqrt(variance() / static_cast<double>(n)) : 0.0;
    }
};

// Mean of a complex sample with the 2x2 covariance of (Re, Im), plus
// delta-method standard errors for the modulus and argument of the mean.
struct ComplexStat {
    double sum_re{0.0}, sum_im{0.0};
    double sum_rr{0.0}, sum_ii{0.0}, sum_ri{0.0};
    long n{0};

    void add(const std::complex<double>& z) {
        sum_re += z.real();
        sum_im += z.imag();
        sum_rr += z.real() * z.real();
        sum_ii += z.imag() * z.imag();
        sum_ri += z.real() * z.imag();
        ++n;
    }

    void merge(const ComplexStat& o) {
        sum_re += o.sum_re;
        sum_im += o.sum_im;
        sum_rr += o.sum_rr;
        sum_ii += o.sum_ii;
        sum_ri += o.sum_ri;
        n += o.n;
    }

    std::complex<double> mean() const {
        return n > 0 ? std::complex<double>(sum_re, sum_im) / static_cast<double>(n)
                     : std::complex<double>(0.0);
    }

    // Covariance matrix of the *mean* vector (sample covariance / n).
    void mean_covariance(double& vrr, double& vii, double& vri) const {
        if (n < 2) {
            vrr = vii = vri = 0.0;
            return;
        }
        const double nn = static_cast<double>(n);
        const double mr = sum_re / nn, mi = sum_im / nn;
        vrr = std::max(0.0, (sum_rr - nn * mr * mr) / (nn - 1.0)) / nn;
        vii = std::max(0.0, (sum_ii - nn * mi * mi) / (nn - 1.0)) / nn;
        vri = ((sum_ri - nn * mr * mi) / (nn - 1.0)) / nn;
    }

    double stderr_modulus() const {
        const auto m = mean();
        const double mod2 = std::norm(m);
        if (mod2 == 0.0 || n < 2) return 0.0;
        double vrr, vii, vri;
        mean_covariance(vrr, vii, vri);
        const double x = m.real(), y = m.imag();
        return std::sqrt(std::max(0.0, (x * x * vrr + 2.0 * x * y * vri + y * y * vii) / mod2));
    }

    double stderr_argument() const {
        const auto m = mean();
        const double mod2 = std::norm(m);
        if (mod2 == 0.0 || n < 2) return 0.0;
        double vrr, vii, vri;
        mean_covariance(vrr, vii, vri);
        const double x = m.real(), y = m.imag();
        return std::sqrt(std::max(0.0, (y * y * vrr - 2.0 * x * y * vri + x * x * vii))) / mod2;
    }
};

}  // namespace unravel
