"""Performance of a link relayed by a randomly reconfigurable surface.

The base station reaches the user only through the surface; each element
applies an independent uniform phase, so the composite gain ``|H|`` follows
:mod:`rrsfading.sumdist`.  Received SNR is ``l * gamma_t * |H|**2`` where
``l`` is the product of the two hops' path losses.

Public constructors take dB for ``C0``, ``gamma_t`` and ``gamma_thr``; the
dataclasses store linear values.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy import special as sc

from . import specfun, sumdist
from .errors import ParameterError
from .sumdist import SumDistribution


def db_to_linear(db):
    return 10.0 ** (db / 10.0)


def linear_to_db(x):
    return 10.0 * math.log10(x)


@dataclass(frozen=True)
class PathLossModel:
    """Two-hop power-law path loss ``l_i = C0 (d_i/d0)**-alpha_i``."""

    c0: float
    d0: float
    d1: float
    d2: float
    alpha1: float
    alpha2: float

    def __post_init__(self):
        if not self.c0 > 0:
            raise ParameterError(f"reference loss must be positive, got {self.c0!r}")
        for name in ("d0", "d1", "d2"):
            if not getattr(self, name) > 0:
                raise ParameterError(f"{name} must be positive")
        if self.d1 < self.d0 or self.d2 < self.d0:
            raise ParameterError("hop distances must not be shorter than the reference distance d0")

    @classmethod
    def from_db(cls, c0_db=-30.0, d0=1.0, d1=25.0, d2=5.0, alpha1=2.8, alpha2=2.2):
        return cls(db_to_linear(c0_db), d0, d1, d2, alpha1, alpha2)

    @classmethod
    def from_split(cls, w, d=30.0, c0_db=-30.0, d0=1.0, alpha1=2.8, alpha2=2.2):
        """Surface placed at fraction ``w`` of the BS-user distance ``d``."""
        if not 0 < w < 1:
            raise ParameterError(f"w must lie in (0, 1), got {w!r}")
        return cls.from_db(c0_db, d0, w * d, (1.0 - w) * d, alpha1, alpha2)

    @property
    def l1(self):
        return self.c0 * (self.d1 / self.d0) ** (-self.alpha1)

    @property
    def l2(self):
        return self.c0 * (self.d2 / self.d0) ** (-self.alpha2)


def equivalent_loss(p):
    return p.l1 * p.l2


@dataclass(frozen=True)
class BinaryModulation:
    """Conditional BEP ``Gamma(b, a*snr) / (2 Gamma(b))``."""

    name: str
    a: float
    b: float


BPSK = BinaryModulation("bpsk", 1.0, 0.5)
DBPSK = BinaryModulation("dbpsk", 1.0, 1.0)
BFSK = BinaryModulation("bfsk", 0.5, 0.5)
NBFSK = BinaryModulation("nbfsk", 0.5, 1.0)
BINARY_SCHEMES = {m.name: m for m in (BPSK, DBPSK, BFSK, NBFSK)}


@dataclass(frozen=True)
class MaryModulation:
    """Gray-mapped M-QAM or M-PSK, ``M >= 4``.

    Conditional BEP is ``a_M * sum_k erfc(sqrt(b_k * snr))``.
    """

    kind: str
    order: int

    def __post_init__(self):
        kind = self.kind.lower()
        object.__setattr__(self, "kind", kind)
        m = self.order
        if kind not in ("qam", "psk"):
            raise ParameterError(f"unknown M-ary family {self.kind!r}")
        if int(m) != m or m < 4 or (int(m) & (int(m) - 1)):
            raise ParameterError(f"M must be a power of two >= 4, got {m!r}")
        if kind == "qam" and math.isqrt(int(m)) ** 2 != m:
            raise ParameterError(f"square QAM needs M to be a perfect square, got {m}")

    @property
    def name(self):
        return f"{self.kind}:{self.order}"

    @property
    def bits(self):
        return int(self.order).bit_length() - 1

    @property
    def terms(self):
        if self.kind == "qam":
            return math.isqrt(self.order) // 2
        return max(self.order // 4, 1)

    @property
    def weight(self):
        if self.kind == "qam":
            return 2.0 / self.bits * (1.0 - 1.0 / math.sqrt(self.order))
        return 1.0 / max(self.bits, 2)

    @property
    def b_values(self):
        k = np.arange(1, self.terms + 1)
        if self.kind == "qam":
            return 3.0 * self.bits / (2.0 * (self.order - 1)) * (2 * k - 1) ** 2
        return self.bits * np.sin((2 * k - 1) * math.pi / self.order) ** 2


def parse_modulation(text):
    """``bpsk``/``dbpsk``/``bfsk``/``nbfsk`` or ``qam:M``/``psk:M``."""
    key = text.strip().lower()
    if key in BINARY_SCHEMES:
        return BINARY_SCHEMES[key]
    if ":" in key:
        kind, _, m = key.partition(":")
        try:
            order = int(m)
        except ValueError:
            raise ParameterError(f"bad modulation order in {text!r}") from None
        return MaryModulation(kind, order)
    raise ParameterError(f"unknown modulation {text!r}")


@dataclass(frozen=True)
class LinkScenario:
    dist: SumDistribution
    loss: PathLossModel
    gamma_t: float
    gamma_thr: float = 1.0
    bandwidth: float = 1.0

    def __post_init__(self):
        if not self.gamma_t > 0:
            raise ParameterError("transmit SNR must be positive")
        if not self.gamma_thr >= 0:
            raise ParameterError("outage threshold must be nonnegative")
        if not self.bandwidth > 0:
            raise ParameterError("bandwidth must be positive")

    @classmethod
    def from_db(cls, dist, loss, gamma_t_db, gamma_thr_db=0.0, bandwidth=1.0):
        return cls(dist, loss, db_to_linear(gamma_t_db), db_to_linear(gamma_thr_db), bandwidth)

    @property
    def snr_gain(self):
        """``l * gamma_t``: received SNR per unit ``|H|**2``."""
        return equivalent_loss(self.loss) * self.gamma_t


def _special_args(d):
    m = max(d.m1, d.m2)
    if d.m1 == 1:
        return m, d.link1.omega, d.link2.omega, d.n_vectors
    return m, d.link2.omega, d.link1.omega, d.n_vectors


def outage_probability(s):
    """``P(l gamma_t |H|^2 < gamma_thr)``."""
    if s.gamma_thr == 0:
        return 0.0
    r = math.sqrt(s.gamma_thr / s.snr_gain)
    d = s.dist
    if d.is_special:
        return sumdist.special_cdf(*_special_args(d), r)
    return sumdist.cdf(d, r)


def average_received_snr(s):
    d = s.dist
    return equivalent_loss(s.loss) * d.n_vectors * d.omega_product * s.gamma_t


def _scale_points(s, b=1.0):
    """Breakpoints where ``b * snr_gain * r**2`` is of order one."""
    base = 1.0 / math.sqrt(b * s.snr_gain)
    return [base * k for k in (0.5, 1.0, 2.0, 4.0, 8.0)]


def ergodic_capacity(s):
    """``B * E[log2(1 + l gamma_t |H|^2)]`` in bit/s."""
    g = s.snr_gain
    val = sumdist.expectation(s.dist, lambda r: math.log1p(g * r * r) / math.log(2.0),
                              extra_points=_scale_points(s))
    return s.bandwidth * val


def conditional_bep(mod, snr):
    """BEP given the instantaneous received SNR (scalar or array)."""
    x = np.asarray(snr, dtype=float)
    if isinstance(mod, BinaryModulation):
        out = 0.5 * specfun.regularized_upper_gamma(mod.b, mod.a * x)
    else:
        root = np.sqrt(x)
        out = mod.weight * sum(sc.erfc(np.sqrt(bk) * root) for bk in mod.b_values)
    return float(out) if x.ndim == 0 else out


def bep_binary(s, mod):
    if not isinstance(mod, BinaryModulation):
        raise TypeError("bep_binary needs a binary modulation; use bep_mary for M >= 4")
    g = s.snr_gain
    return sumdist.expectation(
        s.dist, lambda r: conditional_bep(mod, g * r * r),
        extra_points=_scale_points(s, mod.a),
    )


def bep_mary(s, mod):
    if not isinstance(mod, MaryModulation):
        raise TypeError("bep_mary needs an M-ary scheme with M >= 4; use bep_binary")
    g = s.snr_gain
    b_min = float(np.min(mod.b_values))
    return sumdist.expectation(
        s.dist, lambda r: conditional_bep(mod, g * r * r),
        extra_points=_scale_points(s, b_min),
    )


def bep(s, mod):
    if isinstance(mod, BinaryModulation):
        return bep_binary(s, mod)
    return bep_mary(s, mod)


def aof(d):
    """Amount of fading: variance over squared mean of the received SNR."""
    m1, m2, n = d.m1, d.m2, d.n_vectors
    if min(m1, m2) == 1:
        m = max(m1, m2)
        return (2 + n * m) / (n * m)
    return 1.0 + (1 + m1 + m2 - m1 * m2) / (n * m1 * m2)


def cqei(s):
    """Variance over cubed mean of the received SNR."""
    d = s.dist
    m1, m2, n = d.m1, d.m2, d.n_vectors
    return (1 + m1 + m2 + m1 * m2 * (n - 1)) / (
        n * n * m1 * m2 * d.omega_product * equivalent_loss(s.loss) * s.gamma_t
    )
