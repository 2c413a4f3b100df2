"""Independent high-precision reference implementations (mpmath) used only by tests."""

import mpmath as mp

mp.mp.dps = 40


def qpoch_inf(a, q):
    return mp.qp(mp.mpf(a), mp.mpf(q))


def qgamma(x, q):
    return mp.qgamma(mp.mpf(x), mp.mpf(q))


def ml_series(alpha, beta, z, q, terms=400):
    """Direct partial sum of sum_k z^k / Gamma_q(alpha k + beta) in 40-digit arithmetic."""
    alpha, beta, z, q = (mp.mpf(v) for v in (alpha, beta, z, q))
    total = mp.mpf(0)
    for k in range(terms):
        e = alpha * k + beta
        if e == 0:
            continue
        total += z**k / mp.qgamma(e, q)
    return total


def ml_continuation(alpha, beta, z, q, terms=200):
    """e_{alpha,beta}(z; q) for z < 0 at any size.

    Expanding 1/Gamma_q(alpha k + beta) through (q^(alpha k + beta); q)_inf
    with Euler's identity and summing the geometric series in k gives

        (1-q)^(beta-1)/(q;q)_inf * sum_j (-1)^j q^(j(j-1)/2 + beta j)
                                   / ((q;q)_j (1 - z (1-q)^alpha q^(alpha j))),

    which converges for every z off the positive poles.
    """
    alpha, beta, z, q = (mp.mpf(v) for v in (alpha, beta, z, q))
    r = z * (1 - q) ** alpha
    total = mp.mpf(0)
    qq = mp.mpf(1)
    for j in range(terms):
        if j:
            qq *= 1 - q**j
        total += (-1) ** j * q ** (j * (j - 1) / 2 + beta * j) / (qq * (1 - r * q ** (alpha * j)))
    return (1 - q) ** (beta - 1) / mp.qp(q, q) * total


def q_exp_series(x, q, terms=400):
    x, q = mp.mpf(x), mp.mpf(q)
    total = mp.mpf(0)
    term = mp.mpf(1)
    for k in range(terms):
        total += term
        term *= x * (1 - q) / (1 - q ** (k + 1))
    return total


def rl_integral(f, alpha, x, q, terms=300):
    """(1-q) x^alpha / Gamma_q(alpha) * sum_m q^m (q^(m+1);q)_inf / (q^(m+alpha);q)_inf f(x q^m)."""
    alpha, x, q = mp.mpf(alpha), mp.mpf(x), mp.mpf(q)
    total = mp.mpf(0)
    for m in range(terms):
        w = q**m * mp.qp(q ** (m + 1), q) / mp.qp(q ** (m + alpha), q)
        total += w * f(x * q**m)
    return (1 - q) * x**alpha / mp.qgamma(alpha, q) * total


def qgamma_brute(x, q, terms=50000):
    """Gamma_q(x) from the factor-by-factor log of (q;q)_inf/(q^x;q)_inf.

    mpmath's own qgamma gives up for q near 1; this is slow but plain.
    """
    with mp.workdps(25):
        x, q = mp.mpf(x), mp.mpf(q)
        s = mp.mpf(0)
        a, b = q, q**x
        for _ in range(terms):
            s += mp.log1p(-a) - mp.log1p(-b)
            a *= q
            b *= q
        return mp.exp(s) * (1 - q) ** (1 - x)
