r"""Amplitude law of a sum of N double-Nakagami-m random vectors.

:math:`H = \sum_k h_k e^{j\theta_k}` with i.i.d. double-Nakagami amplitudes
(shapes ``m1, m2``, spreads ``Omega1, Omega2``) and uniform phases.  The
density of ``|H|`` is a signed mixture

.. math::
    f(r) = \sum_s c_s \frac{4 c^{u+1}}{(u-1)!} r^u K_{u-1}(2 c r),
    \qquad u = N(m_1+m_2-1) - s,

where ``c_s`` is the coefficient of ``y**s`` in ``(sum_k w_k y**k)**N``.
The ``w_k`` are integers, so the ``c_s`` are computed exactly with Python
ints.  When more than one coefficient survives they alternate in sign and
grow like ``(sum |w_k|)**N``; those sums are evaluated in Arb ball arithmetic
with the working precision raised until the ball is tight.  The single-term
case (one of the shapes equal to 1) runs in plain floats.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import cached_property

import flint
import numpy as np
from scipy import integrate
from scipy import special as sc

from . import specfun
from .errors import DomainError, NumericalError, OracleError, ParameterError

TAIL_EPS = 1e-10
DEFAULT_CHUNK = 8192

_LN4 = math.log(4.0)
_LN2 = math.log(2.0)
_TARGET_BITS = 56
_MAX_PREC = 1 << 16
_FLOAT_MIN_X = 1e-100


@dataclass(frozen=True)
class NakagamiParams:
    """One hop's Nakagami-m law: integer shape ``m``, spread ``omega > 0``."""

    m: int
    omega: float = 1.0

    def __post_init__(self):
        m = self.m
        if isinstance(m, bool) or not isinstance(m, (int, np.integer, float)):
            raise ParameterError(f"shape m must be an integer, got {m!r}")
        if int(m) != m or m < 1:
            raise ParameterError(f"shape m must be a positive integer, got {m!r}")
        if not (self.omega > 0 and math.isfinite(self.omega)):
            raise ParameterError(f"spread omega must be positive and finite, got {self.omega!r}")
        object.__setattr__(self, "m", int(m))
        object.__setattr__(self, "omega", float(self.omega))


def base_weights(m1, m2):
    """Exact integer weights ``w_k``, ``k = 0..m1-1``.

    ``w_k = (m2)_{m1-1-k} (1-m2)_k / ((m1-1-k)! k!)``, which simplifies to
    ``C(m1+m2-2-k, m1-1-k) * (-1)**k * C(m2-1, k)``.
    """
    return tuple(
        math.comb(m1 + m2 - 2 - k, m1 - 1 - k) * (-1) ** k * math.comb(m2 - 1, k)
        for k in range(m1)
    )


def _poly_mul(a, b):
    out = [0] * (len(a) + len(b) - 1)
    for i, ai in enumerate(a):
        if ai:
            for j, bj in enumerate(b):
                out[i + j] += ai * bj
    return out


def _poly_pow(p, n):
    result = [1]
    base = list(p)
    while n:
        if n & 1:
            result = _poly_mul(result, base)
        n >>= 1
        if n:
            base = _poly_mul(base, base)
    return result


@dataclass(frozen=True)
class CoefficientExpansion:
    """Collapsed coefficients ``c_s`` of the N-fold index sum.

    ``m1`` here is the smaller of the two shapes; the sum over every
    ``(k_1..k_N)`` depends only on ``s = sum k_i`` and is replaced by one term
    per ``s``.
    """

    n_vectors: int
    m1: int
    m2: int
    weights: tuple
    coefficients: tuple

    @classmethod
    def build(cls, m1, m2, n_vectors):
        w = base_weights(m1, m2)
        return cls(n_vectors, m1, m2, w, tuple(_poly_pow(w, n_vectors)))

    @property
    def top_order(self):
        """``u`` for ``s = 0``: ``N(m1+m2-1)``."""
        return self.n_vectors * (self.m1 + self.m2 - 1)

    def u_of_s(self, s):
        return self.top_order - s

    @property
    def orders(self):
        return tuple(self.u_of_s(s) for s in range(len(self.coefficients)))

    @property
    def base_weights(self):
        """``w_k`` rebuilt from Pochhammer symbols, as :class:`LogSigned`."""
        m1, m2 = self.m1, self.m2
        out = []
        for k in range(m1):
            num = specfun.pochhammer(m2, m1 - 1 - k) * specfun.pochhammer(1 - m2, k)
            den = specfun.LogSigned(math.lgamma(m1 - k) + math.lgamma(k + 1), 1)
            out.append(num / den)
        return tuple(out)

    @property
    def collapsed(self):
        return tuple(specfun.LogSigned.from_value(c) for c in self.coefficients)

    @property
    def is_single_term(self):
        return len(self.coefficients) == 1

    @cached_property
    def abs_sum_bits(self):
        return sum(abs(c) for c in self.coefficients).bit_length()

    @cached_property
    def log_terms(self):
        """``(ln|c_s|, sign(c_s), u)`` for every nonzero coefficient."""
        return tuple(
            (math.log(abs(cs)), 1 if cs > 0 else -1, u)
            for cs, u in zip(self.coefficients, self.orders) if cs
        )


@dataclass(frozen=True)
class SumDistribution:
    """Law of ``|H|`` for ``n_vectors`` i.i.d. double-Nakagami vectors."""

    link1: NakagamiParams
    link2: NakagamiParams
    n_vectors: int
    expansion: CoefficientExpansion
    scale: float

    @property
    def m1(self):
        return self.link1.m

    @property
    def m2(self):
        return self.link2.m

    @property
    def omega_product(self):
        return self.link1.omega * self.link2.omega

    @property
    def is_special(self):
        """True for the Rayleigh / Nakagami-m product (one shape equal to 1)."""
        return min(self.m1, self.m2) == 1

    @cached_property
    def tail_radius(self):
        """Smallest ``R = sqrt(N*Omega1*Omega2) * 2**k`` with ``sf(R) < TAIL_EPS``."""
        r = math.sqrt(self.n_vectors * self.omega_product)
        while sf(self, r) >= TAIL_EPS:
            r *= 2.0
        return r

    @cached_property
    def peak_density(self):
        grid = np.linspace(0.0, self.tail_radius, 401)[1:]
        return max(pdf(self, x) for x in grid)

    @cached_property
    def breakpoints(self):
        """Interior points splitting ``[0, tail_radius]`` around the bulk."""
        rms = math.sqrt(self.n_vectors * self.omega_product)
        pts = [rms * f for f in (0.125, 0.25, 0.5, 1.0, 1.5, 2.0, 3.0)]
        return [p for p in pts if p < self.tail_radius]


def build(link1, link2, n_vectors):
    """Precompute the coefficient structure for ``n_vectors`` vectors."""
    if isinstance(n_vectors, bool) or int(n_vectors) != n_vectors or n_vectors < 1:
        raise ParameterError(f"number of vectors must be a positive integer, got {n_vectors!r}")
    n_vectors = int(n_vectors)
    lo, hi = sorted((link1.m, link2.m))
    expansion = CoefficientExpansion.build(lo, hi, n_vectors)
    scale = math.sqrt(link1.m * link2.m / (link1.omega * link2.omega))
    return SumDistribution(link1, link2, n_vectors, expansion, scale)


def from_params(m1, m2, omega1=1.0, omega2=1.0, n_vectors=1):
    return build(NakagamiParams(m1, omega1), NakagamiParams(m2, omega2), n_vectors)


def _vectorized(func):
    def wrapper(d, r, *args, **kwargs):
        if np.ndim(r) == 0:
            return func(d, float(r), *args, **kwargs)
        arr = np.asarray(r, dtype=float)
        flat = [func(d, float(x), *args, **kwargs) for x in arr.ravel()]
        return np.array(flat).reshape(arr.shape)

    wrapper.__name__ = func.__name__
    wrapper.__doc__ = func.__doc__
    return wrapper


# ---------------------------------------------------------------------------
# single-term kernels (float)

def _log_g(u, y):
    """``ln(2 y**u K_u(2y) / (u-1)!)`` for ``u >= 1``.

    Built from ``g_{j+1} = g_j (1 + y / (j K_j/K_{j-1}))``, whose factors
    are all >= 1, so there is no cancellation at small ``y``.
    """
    x = 2.0 * y
    if x < _FLOAT_MIN_X:
        return 0.0
    k0, k1 = float(sc.k0e(x)), float(sc.k1e(x))
    out = math.log(x * k1) - x
    rho = k1 / k0
    for j in range(1, u):
        out += math.log1p(y / (j * rho))
        rho = 1.0 / rho + 2.0 * j / x
    return out


def _single_log_pdf(u, c, r):
    y = c * r
    if u == 1:
        return _LN4 + math.log(c * y) + specfun.log_bessel_k(0, 2.0 * y)
    return math.log(2.0 * c * y / (u - 1)) + _log_g(u - 1, y)


def _single_log_sf(u, c, r):
    return _log_g(u, c * r)


# ---------------------------------------------------------------------------
# signed-mixture kernels (Arb)

def _arb_float(value):
    """Float of an Arb ball, or None if the ball is too wide."""
    if value.rel_accuracy_bits() >= _TARGET_BITS:
        return float(value.mid())
    upper = float(abs(value).upper())
    if upper < 1e-300:
        return 0.0
    return None


def _arb_k01(x, prec):
    """``K_0(x), K_1(x)`` as Arb balls good to about ``prec`` bits.

    Arb's own K is fast on its series branch (which loses ~2x/ln2 bits, so it
    gets that much headroom) and on its asymptotic branch (x large against
    the precision); in between it is very slow, and the confluent U function
    is used instead.
    """
    xf = float(x.mid())
    old = flint.ctx.prec
    try:
        if xf > 0.55 * prec or xf < 0.25 * prec:
            flint.ctx.prec = prec if xf > 0.55 * prec else prec + int(3 * xf) + 32
            k0, k1 = x.bessel_k(0), x.bessel_k(1)
            if min(k0.rel_accuracy_bits(), k1.rel_accuracy_bits()) >= prec:
                return k0, k1
        flint.ctx.prec = prec + 32
        pref = flint.arb.pi().sqrt() * (-x).exp()
        k0 = pref * (2 * x).hypgeom_u(0.5, 1)
        k1 = pref * 2 * x * (2 * x).hypgeom_u(1.5, 3)
        return k0, k1
    finally:
        flint.ctx.prec = old


# float attempt is accepted when the summed magnitudes exceed the result by
# at most this factor; each term carries ~1e-13 relative error
_MAX_CONDITION = 64.0


def _signed_log_sum(logs, signs):
    top = max(logs)
    vals = [sg * math.exp(lg - top) for lg, sg in zip(logs, signs)]
    return math.fsum(vals), math.fsum(abs(v) for v in vals), top


def _float_sums(exp, c, r, want):
    """Same contract as :func:`_arb_sums` in double precision, or None when
    cancellation would cost more than ``_MAX_CONDITION``."""
    y = c * r
    x = 2.0 * y
    # tiny x: K ratios overflow in binary64
    if not _FLOAT_MIN_X <= x < math.inf:
        return None
    lk = specfun.log_bessel_k_table(exp.top_order, x)
    ly = math.log(y)
    terms = exp.log_terms
    out = {}
    if "pdf" in want:
        tot, mag, top = _signed_log_sum(
            [lc + u * ly - math.lgamma(u) + lk[u - 1] for lc, _, u in terms],
            [sg for _, sg, _ in terms])
        if tot <= 0 or mag > _MAX_CONDITION * tot:
            return None
        out["pdf"] = 4.0 * c * tot * math.exp(top)
    if "sf" in want or "cdf" in want:
        tot, mag, top = _signed_log_sum(
            [lc + u * ly - math.lgamma(u) + lk[u] for lc, _, u in terms],
            [sg for _, sg, _ in terms])
        if tot <= 0 or mag > _MAX_CONDITION * tot:
            return None
        val = 2.0 * tot * math.exp(top)
        if "cdf" in want:
            # 1 - sf loses digits when sf is near 1
            if val > 0.999:
                return None
            out["cdf"] = 1.0 - val
        out["sf"] = val
    return out


def _mixture(exp, c, r, want):
    return _float_sums(exp, c, r, want) or _arb_sums(exp, c, r, want)


def _arb_sums(exp, c, r, want):
    """Return a dict with the requested subset of ``pdf``, ``sf``, ``cdf``,
    each a float accurate to about ``_TARGET_BITS`` bits."""
    prec = exp.abs_sum_bits + 96
    orders = exp.orders
    u_top, u_low = orders[0], orders[-1]
    while prec <= _MAX_PREC:
        old = flint.ctx.prec
        flint.ctx.prec = prec
        try:
            y = flint.arb(c) * flint.arb(r)
            x = 2 * y
            kv = list(_arb_k01(x, prec))
            for v in range(1, u_top):
                kv.append(kv[v - 1] + (2 * v) * kv[v] / x)
            # y**u / (u-1)! for increasing u
            p = y ** u_low / flint.arb.fac_ui(u_low - 1)
            powers = {u_low: p}
            for u in range(u_low + 1, u_top + 1):
                p = p * y / (u - 1)
                powers[u] = p
            res = {}
            if "pdf" in want:
                tot = flint.arb(0)
                for cs, u in zip(exp.coefficients, orders):
                    tot += cs * powers[u] * kv[u - 1]
                res["pdf"] = 4 * flint.arb(c) * tot
            if "sf" in want or "cdf" in want:
                tot = flint.arb(0)
                for cs, u in zip(exp.coefficients, orders):
                    tot += cs * powers[u] * kv[u]
                res["sf"] = 2 * tot
                res["cdf"] = 1 - res["sf"]
            out = {}
            worst = prec
            for key in want:
                val = _arb_float(res[key])
                if val is None:
                    worst = min(worst, res[key].rel_accuracy_bits())
                else:
                    out[key] = val
            if len(out) == len(want):
                return out
        finally:
            flint.ctx.prec = old
        # a ball straddling zero reports no relative accuracy; at most double then
        prec += min(max(_TARGET_BITS - worst, 0) + 64, prec)
    raise NumericalError(f"signed mixture did not resolve at {_MAX_PREC} bits (r={r})")


def _arb_sums_single(u, c, r):
    return _arb_sums(CoefficientExpansion.build(1, u, 1), c, r, ("cdf",))["cdf"]


def _check_nonnegative(d, raw):
    if raw < 0:
        if raw < -1e-9 * d.peak_density:
            raise NumericalError(f"negative density {raw!r} below tolerance")
        return 0.0
    return raw


@_vectorized
def pdf(d, r):
    """Density of ``|H|`` at ``r >= 0``."""
    if r < 0:
        raise DomainError(f"pdf needs r >= 0, got {r!r}")
    if r == 0.0:
        return 0.0
    exp = d.expansion
    if exp.is_single_term:
        return math.exp(_single_log_pdf(exp.top_order, d.scale, r))
    if not math.isfinite(r):
        return 0.0
    return _check_nonnegative(d, _mixture(exp, d.scale, r, ("pdf",))["pdf"])


@_vectorized
def sf(d, r):
    """Survival function ``1 - F(r)``."""
    if r < 0:
        raise DomainError(f"sf needs r >= 0, got {r!r}")
    if r == 0.0:
        return 1.0
    if math.isinf(r):
        return 0.0
    exp = d.expansion
    if exp.is_single_term:
        return min(math.exp(_single_log_sf(exp.top_order, d.scale, r)), 1.0)
    return _mixture(exp, d.scale, r, ("sf",))["sf"]


@_vectorized
def cdf(d, r):
    """Distribution function of ``|H|``."""
    if r < 0:
        raise DomainError(f"cdf needs r >= 0, got {r!r}")
    if r == 0.0:
        return 0.0
    if math.isinf(r):
        return 1.0
    exp = d.expansion
    if exp.is_single_term:
        if 2.0 * d.scale * r < _FLOAT_MIN_X:
            return _arb_sums_single(exp.top_order, d.scale, r)
        s = math.exp(_single_log_sf(exp.top_order, d.scale, r))
        if s < 0.999:
            return 1.0 - s
        return _arb_sums_single(exp.top_order, d.scale, r)
    val = _mixture(exp, d.scale, r, ("cdf",))["cdf"]
    return min(max(val, 0.0), 1.0)


def moment(d, n):
    """``E[|H|**n]`` from the Gamma-ratio form (Arb, any integer ``n >= 0``)."""
    if n < 0 or int(n) != n:
        raise DomainError(f"moment order must be a nonnegative integer, got {n!r}")
    n = int(n)
    if n == 0:
        return 1.0
    exp = d.expansion
    m_prod = d.m1 * d.m2
    prec = exp.abs_sum_bits + 96
    while prec <= _MAX_PREC:
        old = flint.ctx.prec
        flint.ctx.prec = prec
        try:
            half = flint.arb(n) / 2
            tot = flint.arb(0)
            for cs, u in zip(exp.coefficients, exp.orders):
                tot += cs * (half + u).gamma() * flint.arb(u).rgamma()
            tot *= (half + 1).gamma()
            ratio = flint.arb(d.link1.omega) * flint.arb(d.link2.omega) / m_prod
            val = _arb_float(tot * ratio ** half)
        finally:
            flint.ctx.prec = old
        if val is not None:
            return val
        prec *= 2
    raise NumericalError(f"moment {n} did not resolve at {_MAX_PREC} bits")


def even_moment(d, order):
    """``E[|H|**(2l)]`` via ``l! (u)_l`` in exact integer arithmetic."""
    if order < 0 or order % 2:
        raise DomainError(f"even_moment needs a nonnegative even order, got {order!r}")
    ell = order // 2
    exp = d.expansion
    total = 0
    for cs, u in zip(exp.coefficients, exp.orders):
        rising = 1
        for i in range(ell):
            rising *= u + i
        total += cs * rising
    total *= math.factorial(ell)
    return float(total) * (d.omega_product / (d.m1 * d.m2)) ** ell


# ---------------------------------------------------------------------------
# integrals against the density

def _segments(d, extra=()):
    pts = sorted({0.0, d.tail_radius, *d.breakpoints, *(p for p in extra if 0 < p < d.tail_radius)})
    return list(zip(pts[:-1], pts[1:]))


def expectation(d, g, extra_points=(), epsrel=1e-11, epsabs=1e-14):
    """``int_0^R g(r) f(r) dr`` on the truncated support, piecewise adaptive."""
    total = 0.0
    err = 0.0
    for a, b in _segments(d, extra_points):
        val, e = integrate.quad(lambda r: g(r) * pdf(d, r), a, b,
                                epsrel=epsrel, epsabs=epsabs, limit=200)
        total += val
        err += e
    if err > max(1e-8 * abs(total), 1e-12):
        raise NumericalError(f"quadrature error {err:.3g} exceeds target", achieved=err)
    return total


def char_fn(d, t):
    r"""Characteristic function ``E[exp(j t |H|)]`` by oscillatory quadrature.

    The equivalent hypergeometric closed form has a unit-modulus argument
    where the Gauss series is not usable, so the defining integral is
    evaluated instead.
    """
    t = float(t)
    if t == 0.0:
        return complex(1.0, 0.0)
    re = im = 0.0
    for a, b in _segments(d):
        re += integrate.quad(lambda r: pdf(d, r), a, b, weight="cos", wvar=t,
                             epsabs=1e-14, epsrel=1e-12, limit=200)[0]
        im += integrate.quad(lambda r: pdf(d, r), a, b, weight="sin", wvar=t,
                             epsabs=1e-14, epsrel=1e-12, limit=200)[0]
    return complex(re, im)


# ---------------------------------------------------------------------------
# Rayleigh / Nakagami-m special case (one shape equal to 1)

def _special_order_scale(m, omega1, omega2, n_vectors):
    NakagamiParams(m, omega1)
    NakagamiParams(1, omega2)
    return n_vectors * int(m), math.sqrt(m / (omega1 * omega2))


def special_pdf(m, omega1, omega2, n_vectors, r):
    """Single-term density for the Rayleigh x Nakagami-m product vectors."""
    if r < 0:
        raise DomainError(f"pdf needs r >= 0, got {r!r}")
    u, c = _special_order_scale(m, omega1, omega2, n_vectors)
    if r == 0:
        return 0.0
    return math.exp(_single_log_pdf(u, c, r))


def special_cdf(m, omega1, omega2, n_vectors, r):
    if r < 0:
        raise DomainError(f"cdf needs r >= 0, got {r!r}")
    u, c = _special_order_scale(m, omega1, omega2, n_vectors)
    if r == 0:
        return 0.0
    s = math.exp(_single_log_sf(u, c, r))
    if s < 0.999:
        return 1.0 - s
    return _arb_sums_single(u, c, r)


def special_moment(m, omega1, omega2, n_vectors, n):
    if n < 0 or int(n) != n:
        raise DomainError(f"moment order must be a nonnegative integer, got {n!r}")
    u, c = _special_order_scale(m, omega1, omega2, n_vectors)
    half = n / 2.0
    return (omega1 * omega2 / m) ** half * float(sc.gamma(half + 1.0) * sc.poch(u, half))


def special_charfn(m, omega1, omega2, n_vectors, t):
    return char_fn(from_params(1, m, omega1, omega2, n_vectors), t)


def double_nakagami_pdf(z, m1, m2, omega1, omega2):
    """Density of the product of two independent Nakagami-m amplitudes."""
    if z < 0:
        raise DomainError(f"pdf needs z >= 0, got {z!r}")
    if z == 0:
        return 0.0
    k = m1 * m2 / (omega1 * omega2)
    log_val = (
        _LN4 + (m1 + m2 - 1) * math.log(z) - math.lgamma(m1) - math.lgamma(m2)
        + 0.5 * (m1 + m2) * math.log(k)
        + specfun.log_bessel_k(abs(m1 - m2), 2.0 * z * math.sqrt(k))
    )
    return math.exp(log_val)


# ---------------------------------------------------------------------------
# sampling

def chunk_generator(seed, index):
    """Philox stream for chunk ``index``, keyed from ``(seed, index)`` only."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(index),))
    return np.random.Generator(np.random.Philox(ss))


def _gamma_draw(rng, shape, size):
    g = rng.standard_exponential(size)
    for _ in range(shape - 1):
        g += rng.standard_exponential(size)
    return g


def sample_chunk(d, seed, index, size):
    """``size`` draws of ``|H|`` from the substream of chunk ``index``."""
    rng = chunk_generator(seed, index)
    shape = (size, d.n_vectors)
    g1 = _gamma_draw(rng, d.link1.m, shape) * (d.link1.omega / d.link1.m)
    g2 = _gamma_draw(rng, d.link2.m, shape) * (d.link2.omega / d.link2.m)
    theta = rng.uniform(0.0, 2.0 * math.pi, shape)
    amp = np.sqrt(g1 * g2)
    re = (amp * np.cos(theta)).sum(axis=1)
    im = (amp * np.sin(theta)).sum(axis=1)
    return np.hypot(re, im)


def chunk_sizes(count, chunk_size):
    full, rest = divmod(int(count), int(chunk_size))
    return [int(chunk_size)] * full + ([rest] if rest else [])


def sample(d, rng_seed, count, chunk_size=DEFAULT_CHUNK, workers=1):
    """Draw ``count`` samples of ``|H|``.

    Work is split into chunks of ``chunk_size``; chunk ``i`` always uses the
    stream keyed by ``(rng_seed, i)``, so the output does not depend on
    ``workers``.
    """
    if count < 1:
        raise ParameterError(f"count must be positive, got {count!r}")
    sizes = chunk_sizes(count, chunk_size)
    jobs = [(d, rng_seed, i, n) for i, n in enumerate(sizes)]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda a: sample_chunk(*a), jobs))
    else:
        parts = [sample_chunk(*a) for a in jobs]
    return np.concatenate(parts)


# ---------------------------------------------------------------------------
# Hankel-transform reference density

def expected_j0_coefficients(m1, m2):
    """Finite-sum coefficients for ``E[J0(h rho)]`` in powers of
    ``x = 4 m1 m2 / (4 m1 m2 + Omega1 Omega2 rho**2)``; returns
    ``[(exponent, coefficient), ...]``."""
    lead = math.prod(range(m1, m1 + m2 - 1)) / math.factorial(m2 - 1)
    out = []
    for k in range(m1):
        num = math.prod(1 - m1 + i for i in range(k)) * math.prod(1 - m2 + i for i in range(k))
        den = math.prod(2 - m1 - m2 + i for i in range(k)) * math.factorial(k)
        out.append((m1 + m2 - 1 - k, lead * num / den))
    return out


def expected_j0(d, rho):
    """``E[J0(h rho)]`` for a single double-Nakagami amplitude ``h``."""
    a2 = 4.0 * d.m1 * d.m2 / d.omega_product
    x = a2 / (a2 + np.asarray(rho, dtype=float) ** 2)
    total = 0.0
    for power, coef in expected_j0_coefficients(d.m1, d.m2):
        total = total + coef * x ** power
    return total


def _wynn_epsilon(seq):
    """Wynn epsilon extrapolation; returns (estimate, error estimate)."""
    n = len(seq)
    e_prev = [0.0] * (n + 1)
    e_cur = list(seq)
    estimates = []
    for k in range(1, n):
        e_next = []
        for i in range(len(e_cur) - 1):
            diff = e_cur[i + 1] - e_cur[i]
            if diff == 0:
                e_next.append(math.inf)
            else:
                e_next.append(e_prev[i + 1] + 1.0 / diff)
        e_prev, e_cur = e_cur, e_next
        if k % 2 == 0 and e_cur:
            estimates.append(e_cur[-1])
        if len(e_cur) < 2:
            break
    estimates = [e for e in estimates if math.isfinite(e)]
    if len(estimates) < 2:
        return seq[-1], abs(seq[-1] - seq[-2])
    return estimates[-1], abs(estimates[-1] - estimates[-2])


_GL_X, _GL_W = np.polynomial.legendre.leggauss(40)


def oracle_pdf_hankel(d, r, rtol=1e-9):
    """Reference density ``r * int rho J0(r rho) E[J0(h rho)]**N d rho``.

    The integral is split at the zeros of ``J0(r rho)``; each half-wave is
    done by 40-point Gauss-Legendre and the alternating tail is accelerated
    with Wynn's epsilon algorithm.
    """
    if not r > 0:
        raise DomainError(f"oracle needs r > 0, got {r!r}")
    n = d.n_vectors
    a = 2.0 * d.scale

    def integrand(rho):
        return rho * sc.j0(r * rho) * expected_j0(d, rho) ** n

    # envelope ~ sqrt(rho) * lam**N; find where it is negligible
    rho_cut = a
    while np.sqrt(rho_cut) * abs(expected_j0(d, rho_cut)) ** n > 1e-17 * np.sqrt(a):
        rho_cut *= 1.5
        if rho_cut > 1e8 * a:
            break
    n_int = int(min(max(200, r * rho_cut / math.pi + 60), 40000))
    zeros = sc.jn_zeros(0, n_int) / r
    edges = np.concatenate(([0.0], zeros))
    lo, hi = edges[:-1], edges[1:]
    mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
    nodes = mid[:, None] + half[:, None] * _GL_X[None, :]
    pieces = (integrand(nodes) * _GL_W[None, :]).sum(axis=1) * half
    partial = np.cumsum(pieces)
    # Wynn on short windows ending at several depths; once partial sums have
    # settled the table degenerates, so keep the best-agreeing neighbours
    ends = sorted({int(e) for e in np.geomspace(40, n_int, 14)})
    ests = [_wynn_epsilon(partial[e - 12:e].tolist())[0] for e in ends]
    ests.append(float(partial[-1]))
    diffs = [abs(b - a) for a, b in zip(ests[:-1], ests[1:])]
    best = int(np.argmin(diffs))
    estimate, err = ests[best + 1], diffs[best]
    value = r * estimate
    scale = max(abs(estimate), 1e-300)
    if err > rtol * scale and err > 1e-15:
        raise OracleError(
            f"Hankel oracle did not converge at r={r}: err={err:.3g}, value={estimate:.6g}, "
            f"intervals={n_int}, rho_cut={rho_cut:.3g}",
            achieved=err / scale,
        )
    return value
