r"""Real special functions with scaled and log-space variants.

The orders of :math:`K_v` that show up in the sum-distribution formulas grow
like ``N*(m1+m2-1)``, i.e. several hundred for realistic surfaces.  ``K_0``
and ``K_1`` come from the exponentially scaled Cephes kernels; every higher
order is reached by upward recurrence on the ratio
:math:`\rho_v = K_{v+1}(x)/K_v(x)`, which is stable for ``K`` and keeps the
logarithm finite where the value itself would overflow.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy import special as sc

from .errors import DomainError

_SQRT_PI = math.sqrt(math.pi)
# renormalisation threshold for the running ratio product
_PROD_LIMIT = 1e250


@dataclass(frozen=True)
class LogSigned:
    """A real number stored as ``sign * exp(log_magnitude)``.

    ``sign == 0`` marks an exact zero; ``log_magnitude`` is then ``-inf``.
    """

    log_magnitude: float
    sign: int

    def __post_init__(self):
        if self.sign not in (-1, 0, 1):
            raise ValueError(f"sign must be -1, 0 or +1, got {self.sign!r}")
        if self.sign == 0 and self.log_magnitude != -math.inf:
            object.__setattr__(self, "log_magnitude", -math.inf)

    @classmethod
    def from_value(cls, value):
        """Encode a float or (arbitrarily large) int."""
        if value == 0:
            return cls(-math.inf, 0)
        sign = 1 if value > 0 else -1
        return cls(math.log(abs(value)), sign)

    @property
    def is_zero(self):
        return self.sign == 0

    def __float__(self):
        if self.sign == 0:
            return 0.0
        return self.sign * math.exp(self.log_magnitude)

    def __neg__(self):
        return LogSigned(self.log_magnitude, -self.sign)

    def __mul__(self, other):
        if not isinstance(other, LogSigned):
            other = LogSigned.from_value(other)
        if self.sign == 0 or other.sign == 0:
            return ZERO
        return LogSigned(self.log_magnitude + other.log_magnitude, self.sign * other.sign)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if not isinstance(other, LogSigned):
            other = LogSigned.from_value(other)
        if other.sign == 0:
            raise ZeroDivisionError("division by a zero LogSigned")
        if self.sign == 0:
            return ZERO
        return LogSigned(self.log_magnitude - other.log_magnitude, self.sign * other.sign)

    def __add__(self, other):
        if not isinstance(other, LogSigned):
            other = LogSigned.from_value(other)
        if other.sign == 0:
            return self
        if self.sign == 0:
            return other
        big, small = (self, other) if self.log_magnitude >= other.log_magnitude else (other, self)
        ratio = math.exp(small.log_magnitude - big.log_magnitude)
        if big.sign == small.sign:
            return LogSigned(big.log_magnitude + math.log1p(ratio), big.sign)
        if ratio == 1.0:
            return ZERO
        return LogSigned(big.log_magnitude + math.log1p(-ratio), big.sign)

    __radd__ = __add__

    def __sub__(self, other):
        if not isinstance(other, LogSigned):
            other = LogSigned.from_value(other)
        return self + (-other)


ZERO = LogSigned(-math.inf, 0)
ONE = LogSigned(0.0, 1)


def ln_gamma(x):
    """Natural log of the Gamma function for ``x > 0``."""
    if not x > 0:
        raise DomainError(f"ln_gamma requires x > 0, got {x!r}")
    return math.lgamma(x)


def pochhammer(a, n):
    """Rising factorial ``(a)_n`` as a :class:`LogSigned`.

    Exact zero is returned when some factor ``a + i`` vanishes, which happens
    for non-positive integer ``a`` with ``n > -a``.
    """
    if n < 0 or int(n) != n:
        raise DomainError(f"pochhammer needs a nonnegative integer n, got {n!r}")
    log_mag = 0.0
    sign = 1
    for i in range(int(n)):
        f = a + i
        if f == 0:
            return ZERO
        if f < 0:
            sign = -sign
        log_mag += math.log(abs(f))
    return LogSigned(log_mag, sign)


def _check_k_args(v, x):
    if v < 0 or int(v) != v:
        raise DomainError(f"Bessel K order must be a nonnegative integer, got {v!r}")
    if not x > 0:
        raise DomainError(f"Bessel K argument must be positive, got {x!r}")


def log_bessel_k(v, x):
    """``ln K_v(x)`` for integer ``v >= 0`` and ``x > 0``; never overflows."""
    _check_k_args(v, x)
    x = float(x)
    k0 = float(sc.k0e(x))
    base = math.log(k0) - x
    if v == 0:
        return base
    ratio = float(sc.k1e(x)) / k0
    acc = base
    prod = 1.0
    for j in range(1, int(v)):
        prod *= ratio
        if prod > _PROD_LIMIT:
            acc += math.log(prod)
            prod = 1.0
        ratio = 1.0 / ratio + 2.0 * j / x
    prod *= ratio
    return acc + math.log(prod)


def log_bessel_k_table(vmax, x):
    """List of ``ln K_v(x)`` for ``v = 0..vmax``."""
    _check_k_args(vmax, x)
    x = float(x)
    k0 = float(sc.k0e(x))
    out = [math.log(k0) - x]
    ratio = float(sc.k1e(x)) / k0
    acc = out[0]
    prod = 1.0
    for v in range(1, int(vmax) + 1):
        prod *= ratio
        out.append(acc + math.log(prod))
        if prod > _PROD_LIMIT:
            acc += math.log(prod)
            prod = 1.0
        ratio = 1.0 / ratio + 2.0 * v / x
    return out


def bessel_k_scaled(v, x):
    """``exp(x) * K_v(x)``.

    Raises ``OverflowError`` when the scaled value is not representable (huge
    order at tiny argument); use :func:`log_bessel_k` there.
    """
    lg = log_bessel_k(v, x) + float(x)
    if lg > 709.0:
        raise OverflowError(f"exp(x)K_{v}({x}) overflows a double; use log_bessel_k")
    return math.exp(lg)


def bessel_k(v, x):
    """Unscaled ``K_v(x)``; underflows to 0, raises ``OverflowError`` when too large."""
    lg = log_bessel_k(v, x)
    if lg > 709.0:
        raise OverflowError(f"K_{v}({x}) overflows a double; use log_bessel_k")
    return math.exp(lg)


def xv_kv_limit(v):
    """Limit of ``x**v * K_v(x)`` as ``x -> 0`` for integer ``v > 0``: ``2**(v-1) (v-1)!``."""
    if v < 1 or int(v) != v:
        raise DomainError(f"limit defined for integer v > 0, got {v!r}")
    return math.ldexp(math.factorial(int(v) - 1), int(v) - 1)


def bessel_j0(x):
    """Bessel function of the first kind, order zero."""
    return sc.j0(x) if np.ndim(x) else float(sc.j0(x))


def erfc(x):
    """Complementary error function (scalar or array).

    Past ``x = 26`` the value heads into the subnormal range; there it is
    formed as ``erfcx(x) * exp(-x*x)``, which keeps the leading digits that
    survive instead of flushing to zero.
    """
    xa = np.asarray(x, dtype=float)
    out = np.where(xa > 26.0, sc.erfcx(xa) * np.exp(-xa * xa), sc.erfc(xa))
    return out if np.ndim(x) else float(out)


def log_erfc(x):
    """``ln erfc(x)``, accurate far into the right tail."""
    x = float(x)
    if x > 5.0:
        return math.log(float(sc.erfcx(x))) - x * x
    return math.log(float(sc.erfc(x)))


def upper_incomplete_gamma(b, x):
    """Upper incomplete Gamma function ``Gamma(b, x)`` for ``b > 0``, ``x >= 0``."""
    return regularized_upper_gamma(b, x) * math.gamma(b)


def regularized_upper_gamma(b, x):
    """``Gamma(b, x) / Gamma(b)``; the binary-modulation shapes 1/2 and 1 go
    through ``erfc`` and ``exp`` directly."""
    if not b > 0:
        raise DomainError(f"upper incomplete gamma needs b > 0, got {b!r}")
    scalar = np.ndim(x) == 0
    xa = np.asarray(x, dtype=float)
    if np.any(xa < 0):
        raise DomainError("upper incomplete gamma needs x >= 0")
    if b == 0.5:
        out = sc.erfc(np.sqrt(xa))
    elif b == 1.0:
        out = np.exp(-xa)
    else:
        out = sc.gammaincc(b, xa)
    return float(out) if scalar else out
