#include "qsf/qcore.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace qsf {

namespace {

constexpr std::size_t kHardIterationCap = 200000;

double combined_tail(const SeriesValue& a, const SeriesValue& b) {
    return std::abs(a.value) * b.tail_bound + std::abs(b.value) * a.tail_bound +
           a.tail_bound * b.tail_bound;
}

}  // namespace

SeriesValue sv_mul(const SeriesValue& a, const SeriesValue& b) {
    return {a.value * b.value, a.terms_used + b.terms_used, combined_tail(a, b)};
}

SeriesValue sv_mul(const SeriesValue& a, Complex b) {
    return {a.value * b, a.terms_used, a.tail_bound * std::abs(b)};
}

SeriesValue sv_div(const SeriesValue& a, const SeriesValue& b) {
    const double bm = std::abs(b.value);
    if (bm == 0.0) throw PoleError("sv_div: division by zero SeriesValue");
    const Complex v = a.value / b.value;
    // first-order propagation, valid while tail(b) << |b|
    const double tb = (a.tail_bound + std::abs(v) * b.tail_bound) / bm;
    return {v, a.terms_used + b.terms_used, tb};
}

SeriesValue sv_div(const SeriesValue& a, Complex b) {
    if (b == Complex{}) throw PoleError("sv_div: division by zero");
    return {a.value / b, a.terms_used, a.tail_bound / std::abs(b)};
}

Complex pow_int(Complex base, long n) {
    if (n < 0) return 1.0 / pow_int(base, -n);
    Complex r = 1.0;
    Complex p = base;
    for (long e = n; e > 0; e >>= 1) {
        if (e & 1) r *= p;
        p *= p;
    }
    return r;
}

Complex poch_finite(Complex a, const QBase& q, int n) {
    if (n < 0) throw std::invalid_argument("poch_finite: n must be nonnegative");
    Complex prod = 1.0;
    Complex aqk = a;
    for (int k = 0; k < n; ++k) {
        prod *= (1.0 - aqk);
        aqk *= q.value();
    }
    return prod;
}

SeriesValue poch_infinite(Complex a, const QBase& q, double tol) {
    if (!(tol > 0.0)) throw std::invalid_argument("poch_infinite: tol must be > 0");
    if (a == Complex{}) return {1.0, 0, 0.0};
    const double qq = q.value();
    Complex prod = 1.0;
    Complex aqk = a;
    std::size_t k = 0;
    while (k < kHardIterationCap) {
        // remaining log-product tail: |log prod_{j>=k} (1 - a q^j)| <= |a| q^k / (1-q)
        const double tail_log = std::abs(aqk) / (1.0 - qq);
        if (tail_log < tol) {
            const double tb = std::abs(prod) * std::expm1(tail_log);
            return {prod, k, tb};
        }
        const Complex factor = 1.0 - aqk;
        if (factor == Complex{}) return {0.0, k + 1, 0.0};
        prod *= factor;
        aqk *= qq;
        ++k;
    }
    throw ConvergenceError("poch_infinite: factor count exceeded hard cap");
}

double poch_min_factor(Complex a, const QBase& q) {
    if (a == Complex{}) return 1.0;
    const double qq = q.value();
    double m = std::numeric_limits<double>::infinity();
    Complex aqk = a;
    while (std::abs(aqk) > 1e-3) {
        m = std::min(m, std::abs(1.0 - aqk));
        aqk *= qq;
        if (std::abs(aqk) > 1e300) break;  // unreachable: |aqk| decreases
    }
    return std::min(m, std::abs(1.0 - aqk));
}

SeriesValue theta(Complex x, const QBase& q, double tol) {
    if (x == Complex{}) throw std::domain_error("theta: x must be nonzero");
    const SeriesValue t1 = poch_infinite(x, q, tol / 2);
    const SeriesValue t2 = poch_infinite(q.value() / x, q, tol / 2);
    return sv_mul(t1, t2);
}

bool near_q_power(Complex x, const QBase& q, double guard) {
    const double mag = std::abs(x);
    if (mag == 0.0) return false;
    if (std::abs(x.imag()) > guard * mag) return false;
    if (x.real() <= 0.0) return false;
    const double t = std::log(x.real()) / std::log(q.value());
    return std::abs(t - std::round(t)) * std::log(1.0 / q.value()) < guard;
}

SeriesValue phi11_regularized(Complex a, Complex b, const QBase& q, Complex z,
                              double tol) {
    if (!(tol > 0.0)) throw std::invalid_argument("phi11_regularized: tol must be > 0");
    const double qq = q.value();
    const double inner_tol = std::min(tol, 1e-15);

    Complex sum = 0.0;
    Complex poch_a = 1.0;   // (a;q)_n
    Complex poch_q = 1.0;   // (q;q)_n
    Complex zfac = 1.0;     // (-1)^n q^(n(n-1)/2) z^n
    std::size_t terms = 0;
    double inner_tail = 0.0;
    int consecutive_small = 0;

    for (std::size_t n = 0; n < kHardIterationCap; ++n) {
        const SeriesValue pinf = poch_infinite(b * q.pow(static_cast<long>(n)), q, inner_tol);
        const Complex term = poch_a * pinf.value / poch_q * zfac;
        sum += term;
        inner_tail += std::abs(poch_a / poch_q * zfac) * pinf.tail_bound;
        ++terms;

        // next (a;q)_{n+1}; exact zero factor terminates the series
        const Complex afac = 1.0 - a * q.pow(static_cast<long>(n));
        poch_a *= afac;
        if (poch_a == Complex{}) return {sum, terms, inner_tail};

        poch_q *= (1.0 - q.pow(static_cast<long>(n) + 1));
        zfac *= -z * q.pow(static_cast<long>(n));

        // a-posteriori stopping: ratio bound once the surviving factors settle
        const double qn = q.pow(static_cast<long>(n) + 1);
        const double bqn = std::abs(b) * qn;
        const double rho = std::abs(z) * qn * (1.0 + std::abs(a) * qn) /
                           ((1.0 - qn * qq) * std::max(1e-300, std::abs(1.0 - bqn)));
        const bool small = std::abs(term) < tol * std::max(std::abs(sum), 1e-300);
        consecutive_small = small ? consecutive_small + 1 : 0;
        if (consecutive_small >= 3 && rho < 0.5 && bqn < 0.5) {
            const double tb = std::abs(term) * rho / (1.0 - rho) + inner_tail;
            return {sum, terms, tb};
        }
    }
    throw ConvergenceError("phi11_regularized: term count exceeded hard cap");
}

SeriesValue phi21(Complex a, Complex b, Complex c, const QBase& q, Complex z,
                  double tol) {
    if (!(tol > 0.0)) throw std::invalid_argument("phi21: tol must be > 0");
    const double qq = q.value();
    if (z == Complex{}) return {1.0, 1, 0.0};

    Complex sum = 0.0;
    Complex term = 1.0;
    int consecutive_small = 0;
    for (std::size_t n = 0; n < kHardIterationCap; ++n) {
        sum += term;
        const Complex num = (1.0 - a * q.pow(static_cast<long>(n))) *
                            (1.0 - b * q.pow(static_cast<long>(n)));
        if (num == Complex{}) return {sum, n + 1, 0.0};  // terminating series
        const Complex den = (1.0 - c * q.pow(static_cast<long>(n))) *
                            (1.0 - q.pow(static_cast<long>(n) + 1));
        if (den == Complex{})
            throw PoleError("phi21: denominator parameter c hit q^(-n) before termination");
        term *= num / den * z;

        const double qn1 = q.pow(static_cast<long>(n) + 1);
        const double rho = std::abs(z) * (1.0 + std::abs(a) * qn1) * (1.0 + std::abs(b) * qn1) /
                           ((1.0 - qn1 * qq) *
                            std::max(1e-300, std::abs(1.0 - std::abs(c) * qn1)));
        const bool small = std::abs(term) < tol * std::max(std::abs(sum), 1e-300);
        consecutive_small = small ? consecutive_small + 1 : 0;
        if (consecutive_small >= 3 && rho < 0.9) {
            return {sum, n + 1, std::abs(term) * rho / (1.0 - rho)};
        }
        if (n > 100 && std::abs(z) >= 1.0 && std::abs(term) > std::abs(sum))
            throw ConvergenceError("phi21: |z| >= 1 and series does not terminate");
    }
    throw ConvergenceError("phi21: term count exceeded hard cap");
}

Complex phi20_terminating(int n, Complex w, const QBase& q, Complex z) {
    if (n < 0) throw std::invalid_argument("phi20_terminating: n must be nonnegative");
    Complex sum = 0.0;
    Complex term = 1.0;
    for (int k = 0; k <= n; ++k) {
        sum += term;
        if (k == n) break;
        // t_{k+1}/t_k = (1 - q^(k-n)) (1 - w q^k) / (1 - q^(k+1)) * (-z) q^(-k)
        term *= (1.0 - q.pow(k - n)) * (1.0 - w * q.pow(k)) /
                (1.0 - q.pow(k + 1)) * (-z) * q.pow(-k);
    }
    return sum;
}

double verify_three_term_transform(Complex a, Complex b, Complex z, const QBase& q,
                                   double tol) {
    const SeriesValue th_z = theta(z, q, tol);
    if (std::abs(th_z.value) == 0.0 || near_q_power(z, q))
        throw std::domain_error("three_term_transform: theta(z;q) vanishes (z in q^Z)");
    for (Complex arg : {a * z, b * z}) {
        if (arg == Complex{})
            throw std::domain_error("three_term_transform: theta argument vanishes");
    }

    const SeriesValue lhs =
        sv_div(phi11_regularized(a, a * z, q, b * z, tol), poch_infinite(z, q, tol));

    const Complex q2 = q.value() * q.value();
    auto side = [&](Complex u, Complex v) {
        // (v;q)_inf theta(uz;q) / ((v/u;q)_inf theta(z;q)) 1phi1(u; uq/v; q, q^2/(vz))
        const SeriesValue pv = poch_infinite(v, q, tol);
        const SeriesValue pvu = poch_infinite(v / u, q, tol);
        if (std::abs(pvu.value) < 1e-12)
            throw PoleError("three_term_transform: (b/a;q)_inf nearly vanishes");
        const SeriesValue phi =
            sv_div(phi11_regularized(u, u * q.value() / v, q, q2 / (v * z), tol),
                   poch_infinite(u * q.value() / v, q, tol));
        SeriesValue r = sv_mul(pv, theta(u * z, q, tol));
        r = sv_div(r, sv_mul(pvu, th_z));
        return sv_mul(r, phi);
    };
    const SeriesValue rhs1 = side(a, b);
    const SeriesValue rhs2 = side(b, a);
    const Complex rhs = rhs1.value + rhs2.value;
    const double scale = std::max(std::abs(lhs.value), std::abs(rhs));
    if (scale == 0.0) return 0.0;
    return std::abs(lhs.value - rhs) / scale;
}

double verify_terminating_transform(int n, Complex a, Complex b, const QBase& q,
                                    double tol) {
    if (n < 0) throw std::invalid_argument("verify_terminating_transform: n >= 0");
    if (b == Complex{}) throw std::invalid_argument("verify_terminating_transform: b != 0");
    const Complex qa = q.value() / a;
    const Complex poch_qa_n = poch_finite(qa, q, n);
    if (std::abs(poch_qa_n) < 1e-12)
        throw PoleError("terminating_transform: (q/a;q)_n nearly vanishes (a in q^(N+1))");

    const Complex bshift = b * q.pow(-n);
    const SeriesValue preg = phi11_regularized(a, a * q.pow(-n), q, bshift, tol);
    const SeriesValue pinf = poch_infinite(a * q.pow(-n), q, tol);
    if (std::abs(pinf.value) == 0.0)
        throw PoleError("terminating_transform: (a q^(-n);q)_inf vanishes");
    const Complex lhs = preg.value / pinf.value;

    const Complex rhs = poch_infinite(b, q, tol).value / poch_qa_n *
                        pow_int(b / a, n) *
                        phi20_terminating(n, qa, q, a * q.pow(n) / b);
    const double scale = std::max(std::abs(lhs), std::abs(rhs));
    if (scale == 0.0) return 0.0;
    return std::abs(lhs - rhs) / scale;
}

}  // namespace qsf
