"""Acceptance criteria, one test each.

Every test prints a single ``[criterion k] PASS|FAIL`` line straight to the
terminal (visible without ``-s``) and then asserts the same verdict.
"""

import itertools
import math
import time
from fractions import Fraction

import numpy as np
import pytest
from scipy import integrate
from scipy.interpolate import PchipInterpolator

from rrsfading import cli
from rrsfading import linkmetrics as L
from rrsfading import mcsim as M
from rrsfading import sumdist as S

SHAPES = list(itertools.product((1, 2, 3), repeat=2))
NS = (1, 2, 8, 64)
GRID = [(m1, m2, n) for (m1, m2) in SHAPES for n in NS]
OMEGAS = list(itertools.product((0.5, 1.0, 2.0), repeat=2))


@pytest.fixture
def verdict(capsys, request):
    def report(number, title, checks, elapsed, budget=None):
        failed = [name for name, ok in checks if not ok]
        if budget is not None and elapsed > budget:
            failed.append(f"time {elapsed:.1f}s > {budget}s")
        status = "PASS" if not failed else "FAIL"
        line = f"[criterion {number}] {status} {title} ({len(checks)} checks, {elapsed:.1f}s)"
        if failed:
            line += " failed: " + "; ".join(failed[:5])
        with capsys.disabled():
            print("\n" + line)
        assert not failed, line
    return report


def fig1_scenario(m1, m2, n, gamma_t_db=110.0):
    return L.LinkScenario.from_db(S.from_params(m1, m2, 1.0, 1.0, n), L.PathLossModel.from_db(), gamma_t_db)


def test_criterion_1_identities(verdict):
    t0 = time.perf_counter()
    checks = []
    for m1, m2 in itertools.product(range(1, 9), repeat=2):
        w = S.base_weights(m1, m2)
        checks.append((f"sum1 {m1},{m2}", abs(sum(w) - 1) <= 1e-12))
        checks.append((f"sum2 {m1},{m2}", abs(sum(k * x for k, x in enumerate(w)) - (1 - m2) * (m1 - 1)) <= 1e-12))
        rhs = (1 - m2) * (Fraction((2 - m2) * m1 * (m1 + 1), 2) - (3 - 2 * m2) * m1 + 1 - m2)
        checks.append((f"sum3 {m1},{m2}", abs(sum(k * k * x for k, x in enumerate(w)) - rhs) <= 1e-12))
    for m1, m2, n in GRID:
        o1, o2 = OMEGAS[(m1 + m2 + n) % len(OMEGAS)]
        d = S.from_params(m1, m2, o1, o2, n)
        checks.append((f"sum w {m1},{m2}", abs(sum(d.expansion.weights) - 1) <= 1e-10))
        checks.append((f"sum c {m1},{m2},{n}", abs(sum(d.expansion.coefficients) - 1) <= 1e-10))
        mu2, mu4 = S.moment(d, 2), S.moment(d, 4)
        checks.append((f"mu2 {m1},{m2},{n}", abs(mu2 - n * o1 * o2) <= 1e-10 * n * o1 * o2))
        checks.append((f"aof {m1},{m2},{n}", abs(L.aof(d) - (mu4 / mu2 ** 2 - 1)) <= 1e-10))
    verdict(1, "identity suite", checks, time.perf_counter() - t0, budget=1.0)


def test_criterion_2_normalization(verdict):
    t0 = time.perf_counter()
    checks = []
    for i, (m1, m2, n) in enumerate(GRID):
        for j in range(3):
            o1, o2 = OMEGAS[(3 * i + j) % len(OMEGAS)]
            d = S.from_params(m1, m2, o1, o2, n)
            qs = np.quantile(S.sample(d, 12345, 4000), (np.arange(20) + 0.5) / 20)
            pts = sorted({0.0, d.tail_radius, *d.breakpoints, *qs})
            acc, cum = 0.0, {}
            for a, b in zip(pts[:-1], pts[1:]):
                acc += integrate.quad(lambda r: S.pdf(d, r), a, b, epsabs=1e-13, epsrel=1e-12, limit=200)[0]
                cum[b] = acc
            tag = f"{m1},{m2},{n},{o1},{o2}"
            checks.append((f"norm {tag}", abs(acc - 1) <= 1e-8))
            worst = max(abs(S.cdf(d, q) - cum[q]) for q in qs)
            checks.append((f"cdf {tag}", worst <= 1e-8))
    assert len(checks) == 2 * 108
    verdict(2, "normalization and cdf consistency (108 runs)", checks, time.perf_counter() - t0, budget=30.0)


def test_criterion_3_hankel_oracle(verdict):
    t0 = time.perf_counter()
    spots = [(1, 1, 1, 1.0, 1.0), (2, 1, 2, 0.5, 2.0), (3, 1, 4, 1.0, 1.0),
             (2, 2, 2, 1.0, 0.5), (3, 2, 4, 2.0, 1.0), (2, 3, 8, 1.0, 1.0)]
    checks = []
    for m1, m2, n, o1, o2 in spots:
        d = S.from_params(m1, m2, o1, o2, n)
        rms = math.sqrt(n * o1 * o2)
        for f in np.linspace(0.15, 2.4, 10):
            r = f * rms
            ref = S.oracle_pdf_hankel(d, r)
            err = abs(S.pdf(d, r) - ref) / ref
            checks.append((f"{m1},{m2},{n} r={r:.3g} err={err:.1e}", err <= 1e-6))
    verdict(3, "Hankel-transform oracle", checks, time.perf_counter() - t0, budget=60.0)


def test_criterion_4_special_case(verdict):
    t0 = time.perf_counter()
    checks = []

    def close(a, b, tol=1e-12):
        return abs(a - b) <= tol * max(abs(b), 1e-300)

    for m, o1, o2, n in [(1, 1.0, 1.0, 1), (3, 2.0, 0.5, 4), (2, 1.0, 1.0, 32), (6, 0.5, 2.0, 128)]:
        d = S.from_params(1, m, o1, o2, n)
        rms = math.sqrt(n * o1 * o2)
        for r in np.array([0.05, 0.3, 0.8, 1.5, 3.0]) * rms:
            checks.append((f"pdf {m},{n}", close(S.pdf(d, r), S.special_pdf(m, o1, o2, n, r))))
            checks.append((f"cdf {m},{n}", close(S.cdf(d, r), S.special_cdf(m, o1, o2, n, r))))
        for k in range(6):
            checks.append((f"moment {k}", close(S.moment(d, k), S.special_moment(m, o1, o2, n, k))))
        for t in (0.2, 1.0):
            t = t / rms
            checks.append((f"charfn {t:.3g}", abs(S.char_fn(d, t) - S.special_charfn(m, o1, o2, n, t)) <= 1e-12))
        for r in np.linspace(0.02, 4.0, 50) * rms:
            a = S.special_pdf(m, o1, o2, n, r)
            checks.append((f"double-Nakagami r={r:.3g}", close(a, S.double_nakagami_pdf(r, 1, n * m, o1, n * o2))))
    verdict(4, "special-case reduction", checks, time.perf_counter() - t0, budget=5.0)


def test_criterion_5_monte_carlo(verdict):
    t0 = time.perf_counter()
    checks = []
    cfg = M.McConfig(seed=20240601, samples=10 ** 6)
    qam16 = L.parse_modulation("qam:16")
    for m1, m2 in [(3, 1), (1, 1)]:
        s = fig1_scenario(m1, m2, 32)
        d = s.dist
        moments = M.mc_moments(d, cfg, [2, 4])
        pairs = {
            "outage": (L.outage_probability(s), M.mc_outage(s, cfg)),
            "capacity": (L.ergodic_capacity(s), M.mc_capacity(s, cfg)),
            "bep bpsk": (L.bep(s, L.BPSK), M.mc_bep(s, L.BPSK, cfg)),
            "bep 16qam": (L.bep(s, qam16), M.mc_bep(s, qam16, cfg)),
            "moment2": (S.moment(d, 2), moments[2]),
            "moment4": (S.moment(d, 4), moments[4]),
        }
        for name, (analytic, est) in pairs.items():
            z = (est.mean - analytic) / est.std_error
            checks.append((f"({m1},{m2}) {name} z={z:+.2f}", abs(z) <= 3))
    n = 10 ** 5
    eps = math.sqrt(math.log(2 / 0.01) / (2 * n))
    for m1, m2 in [(3, 1), (1, 1)]:
        d = S.from_params(m1, m2, 1.0, 1.0, 32)
        xs = np.sort(S.sample(d, 4242, n))
        nodes = np.unique(np.concatenate([[0.0], np.quantile(xs, np.linspace(0, 1, 2000)), [xs[-1] * 1.01]]))
        f = PchipInterpolator(nodes, [S.cdf(d, v) for v in nodes])(xs)
        i = np.arange(1, n + 1)
        ks = max(np.max(i / n - f), np.max(f - (i - 1) / n))
        checks.append((f"DKW ({m1},{m2}) D={ks:.4f} eps={eps:.4f}", ks <= eps))
    verdict(5, "Monte Carlo agreement", checks, time.perf_counter() - t0, budget=300.0)


def test_criterion_6_exact_values(verdict):
    t0 = time.perf_counter()
    checks = []
    for n in range(32, 257, 8):
        checks.append((f"aof(3,2,{n})", L.aof(S.from_params(3, 2, 1.0, 1.0, n)) == 1.0))
    for n in (1, 16, 32, 64, 128):
        a = L.average_received_snr(fig1_scenario(3, 1, n))
        b = L.average_received_snr(fig1_scenario(3, 1, 2 * n))
        checks.append((f"snr doubling {n}", b == 2 * a))
    qam4 = L.parse_modulation("qam:4")
    for w, n in [(0.1, 256), (0.5, 128), (0.9, 32)]:
        s = L.LinkScenario.from_db(S.from_params(3, 1, 1.0, 1.0, n), L.PathLossModel.from_split(w), 110.0)
        a, b = L.bep(s, L.BPSK), L.bep(s, qam4)
        checks.append((f"bpsk=4qam w={w}", abs(a - b) <= 1e-12 * b))
    for m1, m2, n in itertools.product((1, 2, 3), (1, 3, 6), (1, 32, 256)):
        s = fig1_scenario(m1, m2, n, 100.0)
        ratio = L.aof(s.dist) / L.average_received_snr(s)
        checks.append((f"cqei {m1},{m2},{n}", abs(L.cqei(s) - ratio) <= 1e-12 * ratio))
    verdict(6, "exact anchored values", checks, time.perf_counter() - t0)


def _load(path):
    rows = [ln.split() for ln in path.read_text().splitlines()[1:]]
    return np.array([[float(v) for v in r] for r in rows])


def _crossing(xy, level):
    """x where the curve first drops through ``level``, interpolating log10 P linearly."""
    x, y = xy[:, 0], np.log10(np.maximum(xy[:, 1], 1e-300))
    target = math.log10(level)
    for i in range(len(x) - 1):
        if y[i] >= target > y[i + 1]:
            return x[i] + (target - y[i]) * (x[i + 1] - x[i]) / (y[i + 1] - y[i])
    raise AssertionError("curve never crosses the level")


def test_criterion_7_figures(tmp_path, verdict):
    t0 = time.perf_counter()
    out = tmp_path / "figs"
    code = cli.main(["figures", "--out", str(out), "--workers", "4"])
    checks = [("exit code", code == 0)]
    expected = ([f"outage/out{n}.dat" for n in cli.FIGURE_NS] + [f"average_snr/y{i}.dat" for i in range(1, 5)]
                + [f"ec/ec{n}.dat" for n in cli.FIGURE_NS] + [f"bep/bep{n}.dat" for n in cli.FIGURE_NS]
                + [f"aof/aof{a}{b}.dat" for a, b in cli.AOF_PAIRS] + [f"cqei/cqei{n}.dat" for n in cli.FIGURE_NS])
    checks += [(f"exists {name}", (out / name).is_file()) for name in expected]

    xs = {n: _crossing(_load(out / f"outage/out{n}.dat"), 1e-2) for n in cli.FIGURE_NS}
    for a, b in zip(cli.FIGURE_NS, cli.FIGURE_NS[1:]):
        shift = xs[a] - xs[b]
        checks.append((f"fig1 shift {a}->{b} = {shift:.3f} dB", 2.5 <= shift <= 3.5))

    for i in range(1, 5):
        xy = _load(out / f"average_snr/y{i}.dat")
        k = int(np.argmin(xy[:, 1]))
        w_min = xy[k, 0]
        checks.append((f"fig2 y{i} interior argmin w={w_min:.2f}", 0 < k < len(xy) - 1 and w_min > 0.4))
        checks.append((f"fig2 y{i} near-BS side higher", xy[0, 1] > xy[-1, 1]))

    for m1, m2 in cli.AOF_PAIRS:
        xy = _load(out / f"aof/aof{m1}{m2}.dat")
        if (m1, m2) == (3, 2):
            checks.append(("fig5 aof32 constant 1", bool(np.all(xy[:, 1] == 1.0))))
            continue
        gap = np.abs(xy[:, 1] - 1.0)
        checks.append((f"fig5 aof{m1}{m2} monotone toward 1", bool(np.all(np.diff(gap) < 0))))
    verdict(7, "figure reproduction", checks, time.perf_counter() - t0, budget=600.0)


def test_criterion_8_determinism(tmp_path, verdict):
    t0 = time.perf_counter()
    checks = []
    d = S.from_params(3, 1, 1.0, 1.0, 32)
    a = S.sample(d, 99, 50000, chunk_size=4096)
    b = S.sample(d, 99, 50000, chunk_size=4096, workers=4)
    checks.append(("sampler bytes", a.tobytes() == b.tobytes()))
    blobs = []
    for workers in ("1", "4", "1"):
        p = tmp_path / f"sim{len(blobs)}.csv"
        cli.main(["simulate", "--n-list", "8,32", "--samples", "50000", "--seed", "11",
                  "--workers", workers, "--out", str(p)])
        blobs.append(p.read_bytes())
    checks.append(("simulate bytes", blobs[0] == blobs[1] == blobs[2]))
    figs = []
    for workers in ("1", "3"):
        root = tmp_path / f"fig{workers}"
        cli.main(["figures", "--only", "1,4", "--workers", workers, "--out", str(root)])
        figs.append({p.relative_to(root).as_posix(): p.read_bytes() for p in sorted(root.rglob("*.dat"))})
    checks.append(("figure bytes", figs[0] == figs[1] and len(figs[0]) == 8))
    verdict(8, "determinism across worker counts", checks, time.perf_counter() - t0)
