#pragma once

#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>

namespace qsf {

using Complex = std::complex<double>;

namespace defaults {
inline constexpr double tol = 1e-14;
inline constexpr int k_cap = 128;
}  // namespace defaults

/// Thrown when an adaptive sum or product fails to meet its stopping rule.
class ConvergenceError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Thrown when an evaluation lands on (or within guard distance of) a pole
/// or a vanishing denominator. The message names the offending factor.
class PoleError : public std::domain_error {
    using std::domain_error::domain_error;
};

/// Base of the q-calculus, restricted to the open interval (0,1).
class QBase {
public:
    explicit QBase(double q) : q_(q) {
        if (!(q > 0.0) || !(q < 1.0))
            throw std::invalid_argument("QBase: q must lie strictly in (0,1), got " +
                                        std::to_string(q));
    }
    double value() const noexcept { return q_; }
    /// q^e for any integer exponent (negative allowed).
    double pow(long e) const { return std::pow(q_, static_cast<double>(e)); }

private:
    double q_;
};

/// A complex value produced by a truncated infinite sum or product, together
/// with the number of terms/factors used and an absolute bound on the
/// omitted tail. tail_bound == 0 exactly for terminating sums evaluated fully.
struct SeriesValue {
    Complex value{0.0, 0.0};
    std::size_t terms_used = 0;
    double tail_bound = 0.0;
};

// Tail-propagating arithmetic on SeriesValue.
SeriesValue sv_mul(const SeriesValue& a, const SeriesValue& b);
SeriesValue sv_mul(const SeriesValue& a, Complex b);
SeriesValue sv_div(const SeriesValue& a, const SeriesValue& b);
SeriesValue sv_div(const SeriesValue& a, Complex b);

/// Integer power of a complex base; n may be negative.
Complex pow_int(Complex base, long n);

/// (a;q)_n = prod_{k=0}^{n-1} (1 - a q^k). Exact finite product.
Complex poch_finite(Complex a, const QBase& q, int n);

/// (a;q)_infty, truncated once |a| q^N / (1-q) < tol.
SeriesValue poch_infinite(Complex a, const QBase& q, double tol = defaults::tol);

/// Smallest |1 - a q^k| over the factors of (a;q)_infty. Used as a
/// proximity-to-zero diagnostic before dividing by a q-shifted factorial.
double poch_min_factor(Complex a, const QBase& q);

/// theta(x;q) = (x;q)_infty (q/x;q)_infty. Vanishes exactly on x in q^Z.
SeriesValue theta(Complex x, const QBase& q, double tol = defaults::tol);

/// True when x is (numerically) a positive real within `guard` relative
/// distance of some q^k, k in Z -- i.e. inside the zero set of theta(.;q).
bool near_q_power(Complex x, const QBase& q, double guard = 1e-9);

/// (b;q)_infty * 1phi1(a;b;q,z)
///   = sum_n (a;q)_n (b q^n;q)_infty / (q;q)_n * (-1)^n q^(n(n-1)/2) z^n,
/// entire in a, b and z. Callers divide by (b;q)_infty themselves when
/// b is not of the form q^(-N).
SeriesValue phi11_regularized(Complex a, Complex b, const QBase& q, Complex z,
                              double tol = defaults::tol);

/// 2phi1(a,b;c;q,z) = sum_n (a;q)_n (b;q)_n / ((c;q)_n (q;q)_n) z^n.
/// Requires |z| < 1 unless the series terminates (a or b in q^(-N)).
SeriesValue phi21(Complex a, Complex b, Complex c, const QBase& q, Complex z,
                  double tol = defaults::tol);

/// Terminating 2phi0(q^(-n), w; -; q, z)
///   = sum_{k=0}^{n} (q^(-n);q)_k (w;q)_k / (q;q)_k * (-1)^k q^(-k(k-1)/2) z^k.
/// Exact finite sum of n+1 terms, summed forward.
Complex phi20_terminating(int n, Complex w, const QBase& q, Complex z);

/// Relative residual of the three-term transformation
///   (az;q)_inf/(z;q)_inf 1phi1(a;az;q,bz)
///     = (b;q)_inf theta(az;q) / ((b/a;q)_inf theta(z;q)) 1phi1(a;aq/b;q,q^2/bz)
///     + (a;q)_inf theta(bz;q) / ((a/b;q)_inf theta(z;q)) 1phi1(b;bq/a;q,q^2/az).
double verify_three_term_transform(Complex a, Complex b, Complex z, const QBase& q,
                                   double tol = defaults::tol);

/// Relative residual of the terminating transformation
///   1phi1(a; aq^(-n); q, bq^(-n))
///     = (b;q)_inf / (q/a;q)_n * (b/a)^n * 2phi0(q^(-n), q/a; -; q, aq^n/b).
double verify_terminating_transform(int n, Complex a, Complex b, const QBase& q,
                                    double tol = defaults::tol);

}  // namespace qsf
