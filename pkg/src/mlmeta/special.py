"""Scalar special functions: log-gamma, regularized incomplete gamma and beta,
chi-square survival and Student-t distribution/quantile.

Everything here is plain ``math``; no array inputs.
"""

import math

__all__ = [
    "ln_gamma",
    "ln_beta",
    "gammainc_lower",
    "gammainc_upper",
    "betainc",
    "chisq_sf",
    "chisq_cdf",
    "t_cdf",
    "t_pdf",
    "t_quantile",
]

_EPS = 1e-16
_TINY = 1e-300
_MAXITER = 20000

# Lanczos approximation, g = 7, n = 9 (Godfrey's coefficients)
_LANCZOS_G = 7.0
_LANCZOS_COEF = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)
_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)


def ln_gamma(x):
    """Natural log of the gamma function for x > 0."""
    x = float(x)
    if not x > 0.0 or math.isinf(x):
        raise ValueError(f"ln_gamma requires a finite x > 0, got {x!r}")
    if x < 0.5:
        # reflection: Gamma(x) Gamma(1-x) = pi / sin(pi x)
        return math.log(math.pi / math.sin(math.pi * x)) - ln_gamma(1.0 - x)
    if x == 1.0 or x == 2.0:
        return 0.0
    z = x - 1.0
    acc = _LANCZOS_COEF[0]
    for i in range(1, len(_LANCZOS_COEF)):
        acc += _LANCZOS_COEF[i] / (z + i)
    t = z + _LANCZOS_G + 0.5
    return _HALF_LOG_2PI + (z + 0.5) * math.log(t) - t + math.log(acc)


def ln_beta(a, b):
    return ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)


def _gamma_series(a, x):
    # P(a, x) by its power series; good for x < a + 1
    term = 1.0 / a
    total = term
    ap = a
    for _ in range(_MAXITER):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * _EPS:
            break
    else:
        raise ArithmeticError("incomplete gamma series did not converge")
    return total * math.exp(-x + a * math.log(x) - ln_gamma(a))


def _gamma_contfrac(a, x):
    # Q(a, x) by modified Lentz on the Legendre continued fraction; x >= a + 1
    b = x + 1.0 - a
    c = 1.0 / _TINY
    d = 1.0 / b
    h = d
    for i in range(1, _MAXITER):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < _TINY:
            d = _TINY
        c = b + an / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            break
    else:
        raise ArithmeticError("incomplete gamma continued fraction did not converge")
    return math.exp(-x + a * math.log(x) - ln_gamma(a)) * h


def gammainc_lower(a, x):
    """Regularized lower incomplete gamma P(a, x)."""
    if a <= 0.0:
        raise ValueError("gammainc_lower requires a > 0")
    if x < 0.0:
        raise ValueError("gammainc_lower requires x >= 0")
    if x == 0.0:
        return 0.0
    if math.isinf(x):
        return 1.0
    if x < a + 1.0:
        return _gamma_series(a, x)
    return 1.0 - _gamma_contfrac(a, x)


def gammainc_upper(a, x):
    """Regularized upper incomplete gamma Q(a, x) = 1 - P(a, x)."""
    if a <= 0.0:
        raise ValueError("gammainc_upper requires a > 0")
    if x < 0.0:
        raise ValueError("gammainc_upper requires x >= 0")
    if x == 0.0:
        return 1.0
    if math.isinf(x):
        return 0.0
    if x < a + 1.0:
        return 1.0 - _gamma_series(a, x)
    return _gamma_contfrac(a, x)


def _check_df(df):
    if isinstance(df, bool) or not float(df) >= 1.0 or float(df) != int(df):
        raise ValueError(f"chi-square df must be a positive integer, got {df!r}")


def chisq_sf(q, df):
    """Upper tail P(X > q) for X ~ chi-square(df)."""
    _check_df(df)
    if not q >= 0.0:
        raise ValueError(f"chisq_sf requires q >= 0, got {q!r}")
    return gammainc_upper(0.5 * df, 0.5 * q)


def chisq_cdf(q, df):
    _check_df(df)
    if not q >= 0.0:
        raise ValueError(f"chisq_cdf requires q >= 0, got {q!r}")
    return gammainc_lower(0.5 * df, 0.5 * q)


def _betacf(a, b, x):
    # continued fraction for I_x(a, b), modified Lentz
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _TINY:
        d = _TINY
    d = 1.0 / d
    h = d
    for m in range(1, _MAXITER):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            return h
    raise ArithmeticError("incomplete beta continued fraction did not converge")


def betainc(a, b, x):
    """Regularized incomplete beta I_x(a, b)."""
    if a <= 0.0 or b <= 0.0:
        raise ValueError("betainc requires a > 0 and b > 0")
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"betainc requires 0 <= x <= 1, got {x!r}")
    if x == 0.0 or x == 1.0:
        return x
    log_front = a * math.log(x) + b * math.log1p(-x) - ln_beta(a, b)
    if x < (a + 1.0) / (a + b + 2.0):
        return math.exp(log_front) * _betacf(a, b, x) / a
    return 1.0 - math.exp(log_front) * _betacf(b, a, 1.0 - x) / b


def _check_t_df(df):
    if not (df > 0.0) or math.isinf(df):
        raise ValueError(f"t distribution requires finite df > 0, got {df!r}")


def t_cdf(t, df):
    """Student-t CDF."""
    _check_t_df(df)
    if math.isnan(t):
        raise ValueError("t_cdf of NaN")
    if math.isinf(t):
        return 1.0 if t > 0 else 0.0
    t2 = t * t
    if t2 < df:
        # central region: I_{t^2/(df+t^2)}(1/2, df/2) is accurate near 0
        half = 0.5 * betainc(0.5, 0.5 * df, t2 / (df + t2))
        return 0.5 + half if t >= 0.0 else 0.5 - half
    tail = 0.5 * betainc(0.5 * df, 0.5, df / (df + t2))
    return 1.0 - tail if t >= 0.0 else tail


def t_pdf(t, df):
    _check_t_df(df)
    log_norm = ln_gamma(0.5 * (df + 1.0)) - ln_gamma(0.5 * df) - 0.5 * math.log(df * math.pi)
    return math.exp(log_norm - 0.5 * (df + 1.0) * math.log1p(t * t / df))


def _upper_tail(t, df):
    # 1 - t_cdf(t) for t >= 0 without cancellation
    t2 = t * t
    if t2 < df:
        return 0.5 - 0.5 * betainc(0.5, 0.5 * df, t2 / (df + t2))
    return 0.5 * betainc(0.5 * df, 0.5, df / (df + t2))


def t_quantile(prob, df):
    """Inverse Student-t CDF.

    The upper half is solved by bracketing + bisection on the tail
    probability and then polished with Newton steps; the lower half is the
    exact negation, so ``t_quantile(1 - p) == -t_quantile(p)``.
    """
    _check_t_df(df)
    if not 0.0 < prob < 1.0:
        raise ValueError(f"t_quantile requires 0 < prob < 1, got {prob!r}")
    if prob == 0.5:
        return 0.0
    if prob < 0.5:
        return -_t_upper_quantile(prob, df)
    return _t_upper_quantile(1.0 - prob, df)


def _t_upper_quantile(tail, df):
    """t >= 0 with P(T > t) = tail, tail in (0, 0.5)."""
    lo, hi = 0.0, 1.0
    while _upper_tail(hi, df) > tail:
        lo, hi = hi, 2.0 * hi
        if hi > 1e300:
            return math.inf
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if _upper_tail(mid, df) > tail:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-10 * max(1.0, hi):
            break
    t = 0.5 * (lo + hi)
    for _ in range(8):
        dens = t_pdf(t, df)
        if dens <= 0.0:
            break
        step = (_upper_tail(t, df) - tail) / dens
        t_new = t + step
        if not lo <= t_new <= hi:
            break
        t = t_new
        if abs(step) <= 1e-15 * max(1.0, abs(t)):
            break
    return t
