"""Command-line front end.

Subcommands::

    dist      pdf/cdf, moment or characteristic-function tables
    metrics   analytic link metrics over N and transmit-SNR sweeps
    simulate  Monte Carlo estimates of the same metrics
    validate  analytic vs Monte Carlo report (exit 1 on any failure)
    figures   datasets for the six standard performance plots

Ranges are written ``start:stop:count`` (inclusive, evenly spaced) or as a
comma list.  Values given on the command line override those read from
``--config``, a plain ``key = value`` file using the long flag names.
"""

import argparse
import configparser
import csv
import io
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import linkmetrics as lm
from . import mcsim, sumdist
from .errors import NumericalError, ParameterError

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_USAGE = 2

DEFAULTS = {
    "m1": 3, "m2": 1, "omega1": 1.0, "omega2": 1.0, "n": 32, "n_list": None,
    "c0_db": -30.0, "d0": 1.0, "d1": 25.0, "d2": 5.0, "alpha1": 2.8, "alpha2": 2.2,
    "w": None, "d": 30.0,
    "gamma_t_db": "110", "gamma_thr_db": 0.0, "bandwidth": 1.0,
    "mod": "bpsk", "seed": 1, "samples": 1_000_000, "workers": 1,
    "out": None, "format": None,
    "table": "pdf", "grid": None, "pairs": "3:1,1:1", "only": None,
}

FIGURE_NS = (32, 64, 128, 256)
AOF_PAIRS = ((3, 1), (1, 1), (3, 2), (3, 3), (6, 3))
VALIDATE_METRICS = ("outage", "capacity", "bep_bpsk", "bep_16qam", "moment2", "moment4")


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# parsing helpers

def parse_range(text, kind=float):
    """``a:b:k`` -> k evenly spaced points; ``x,y,z`` -> list; ``x`` -> [x]."""
    text = str(text).strip()
    if not text:
        raise UsageError("empty range")
    try:
        if ":" in text:
            parts = text.split(":")
            if len(parts) != 3:
                raise UsageError(f"range {text!r} must look like start:stop:count")
            a, b, k = kind(parts[0]), kind(parts[1]), int(parts[2])
            if k < 1:
                raise UsageError(f"range {text!r} is empty")
            if b < a:
                raise UsageError(f"range {text!r} is not ordered")
            if k == 1:
                return [a]
            if kind is int:
                if (b - a) % (k - 1):
                    raise UsageError(f"integer range {text!r} does not divide evenly")
                return list(range(a, b + 1, (b - a) // (k - 1))) if b > a else [a]
            return [float(x) for x in np.linspace(a, b, k)]
        vals = [kind(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise UsageError(f"bad range {text!r}: {exc}") from None
    if not vals:
        raise UsageError("empty range")
    if any(y <= x for x, y in zip(vals, vals[1:])):
        raise UsageError(f"range {text!r} is not strictly increasing")
    return vals


def _or(value, default):
    """``default`` only when the option was not given at all."""
    return default if value is None else value


def _parse_pairs(text):
    out = []
    for item in str(text).split(","):
        try:
            a, b = item.split(":")
            out.append((int(a), int(b)))
        except ValueError:
            raise UsageError(f"bad shape pair {item!r}; expected m1:m2") from None
    if not out:
        raise UsageError("no shape pairs given")
    return out


def _add_common(p):
    g = p.add_argument_group("channel")
    g.add_argument("--m1", type=int)
    g.add_argument("--m2", type=int)
    g.add_argument("--omega1", type=float)
    g.add_argument("--omega2", type=float)
    g.add_argument("--n", type=int, help="number of surface elements")
    g.add_argument("--n-list", help="several N, as a range")
    g = p.add_argument_group("geometry")
    g.add_argument("--c0-db", type=float)
    g.add_argument("--d0", type=float)
    g.add_argument("--d1", type=float)
    g.add_argument("--d2", type=float)
    g.add_argument("--alpha1", type=float)
    g.add_argument("--alpha2", type=float)
    g.add_argument("--w", help="surface position as a fraction of --d (range allowed)")
    g.add_argument("--d", type=float, help="BS-user distance used with --w")
    g = p.add_argument_group("link")
    g.add_argument("--gamma-t-db", help="transmit SNR in dB (range allowed)")
    g.add_argument("--gamma-thr-db", type=float)
    g.add_argument("--bandwidth", type=float)
    g.add_argument("--mod", help="bpsk, dbpsk, bfsk, nbfsk, qam:M or psk:M")
    g = p.add_argument_group("run")
    g.add_argument("--seed", type=int)
    g.add_argument("--samples", type=int)
    g.add_argument("--workers", type=int)
    g.add_argument("--out")
    g.add_argument("--format", choices=("dat", "csv", "json"))
    g.add_argument("--config", help="key = value file; flags take precedence")


def build_parser():
    parser = argparse.ArgumentParser(prog="rrsfading", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("dist", help="distribution tables")
    _add_common(p)
    p.add_argument("--table", choices=("pdf", "moment", "charfn"))
    p.add_argument("--grid", help="r, n or t values as a range")
    for name, text in (("metrics", "analytic link metrics"), ("simulate", "Monte Carlo link metrics")):
        _add_common(sub.add_parser(name, help=text))
    p = sub.add_parser("validate", help="analytic vs Monte Carlo report")
    _add_common(p)
    p.add_argument("--pairs", help="shape pairs m1:m2,... (default 3:1,1:1)")
    p = sub.add_parser("figures", help="figure datasets")
    _add_common(p)
    p.add_argument("--only", help="comma list of figure numbers 1-6")
    return parser


def _config_values(path, parser, argv_command):
    cp = configparser.ConfigParser()
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from None
    try:
        cp.read_string("[run]\n" + text)
    except configparser.Error as exc:
        raise UsageError(f"bad config file {path}: {exc}") from None
    sub = parser._subparsers._group_actions[0].choices[argv_command]
    types = {a.dest: a.type for a in sub._actions}
    out = {}
    for key, raw in cp["run"].items():
        dest = key.strip().lstrip("-").replace("-", "_")
        if dest not in types or dest == "config":
            raise UsageError(f"unknown config key {key!r}")
        conv = types[dest] or str
        try:
            out[dest] = conv(raw.strip())
        except ValueError:
            raise UsageError(f"bad value for {key!r} in config: {raw!r}") from None
    return out


def resolve(args, parser):
    """Merge flags, config file and defaults into one dict."""
    cfg = _config_values(args.config, parser, args.command) if args.config else {}
    opts = {}
    for key, default in DEFAULTS.items():
        val = getattr(args, key, None)
        if val is None:
            val = cfg.get(key, default)
        opts[key] = val
    opts["command"] = args.command
    explicit = {k for k in DEFAULTS if getattr(args, k, None) is not None or k in cfg}
    if opts["w"] is not None and explicit & {"d1", "d2"}:
        raise UsageError("give either --w/--d or --d1/--d2, not both")
    if opts["samples"] < mcsim.MIN_SAMPLES:
        raise UsageError(f"--samples must be at least {mcsim.MIN_SAMPLES}")
    opts["n_values"] = parse_range(opts["n_list"], int) if opts["n_list"] else [int(opts["n"])]
    opts["gamma_t_values"] = parse_range(opts["gamma_t_db"])
    opts["w_values"] = parse_range(opts["w"]) if opts["w"] is not None else [None]
    return opts


# ---------------------------------------------------------------------------
# model construction

def _dist(o, n, m1=None, m2=None):
    return sumdist.from_params(o["m1"] if m1 is None else m1, o["m2"] if m2 is None else m2,
                               o["omega1"], o["omega2"], n)


def _loss(o, w=None):
    if w is not None:
        return lm.PathLossModel.from_split(w, o["d"], o["c0_db"], o["d0"], o["alpha1"], o["alpha2"])
    return lm.PathLossModel.from_db(o["c0_db"], o["d0"], o["d1"], o["d2"], o["alpha1"], o["alpha2"])


def _scenario(o, dist, gamma_t_db, w=None):
    return lm.LinkScenario.from_db(dist, _loss(o, w), gamma_t_db, o["gamma_thr_db"], o["bandwidth"])


def _pmap(fn, items, workers):
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


# ---------------------------------------------------------------------------
# output

def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, str):
        return v
    v = float(v)
    if not math.isfinite(v):
        raise NumericalError(f"refusing to write non-finite value {v!r}")
    return repr(v)


def _json_safe(v):
    if isinstance(v, dict):
        return {k: _json_safe(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_json_safe(x) for x in v]
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if not math.isfinite(v):
            raise NumericalError(f"refusing to write non-finite value {v!r}")
        return v
    return v


def render(columns, rows, fmt, extra=None):
    if fmt == "json":
        doc = dict(extra or {})
        doc["rows"] = [dict(zip(columns, r)) for r in rows]
        return json.dumps(_json_safe(doc), indent=2) + "\n"
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([_fmt(v) for v in r])
        return buf.getvalue()
    lines = [" ".join(columns)]
    lines += [" ".join(_fmt(v) for v in r) for r in rows]
    return "\n".join(lines) + "\n"


def emit(text, out):
    if out is None:
        sys.stdout.write(text)
    else:
        path = Path(out)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)


# ---------------------------------------------------------------------------
# subcommands

def run_dist(o):
    if len(o["n_values"]) != 1:
        raise UsageError("dist takes a single --n")
    d = _dist(o, o["n_values"][0])
    table = o["table"]
    if table == "pdf":
        rms = math.sqrt(d.n_vectors * d.omega_product)
        grid = parse_range(_or(o["grid"], f"0:{3 * rms!r}:31"))
        if grid[0] < 0:
            raise UsageError("r grid must be nonnegative")
        cols = ["r", "pdf", "cdf"]
        rows = _pmap(lambda r: (r, sumdist.pdf(d, r), sumdist.cdf(d, r)), grid, o["workers"])
    elif table == "moment":
        grid = parse_range(_or(o["grid"], "0:4:5"), int)
        if grid[0] < 0:
            raise UsageError("moment orders must be nonnegative")
        cols = ["n", "moment"]
        rows = [(n, sumdist.moment(d, n)) for n in grid]
    else:
        grid = parse_range(_or(o["grid"], "-5:5:21"))
        cols = ["t", "re", "im"]

        def row(t):
            phi = sumdist.char_fn(d, t)
            return (t, phi.real, phi.imag)
        rows = _pmap(row, grid, o["workers"])
    emit(render(cols, rows, o["format"] or "dat"), o["out"])
    return EXIT_OK


def _analytic_row(o, n, gt, w):
    d = _dist(o, n)
    s = _scenario(o, d, gt, w)
    mod = lm.parse_modulation(o["mod"])
    snr = lm.average_received_snr(s)
    return [lm.outage_probability(s), snr, lm.linear_to_db(snr), lm.ergodic_capacity(s),
            lm.bep(s, mod), lm.aof(d), lm.cqei(s)]


def run_metrics(o):
    points = [(n, w, gt) for n in o["n_values"] for w in o["w_values"] for gt in o["gamma_t_values"]]
    vals = _pmap(lambda p: _analytic_row(o, p[0], p[2], p[1]), points, o["workers"])
    use_w = o["w_values"] != [None]
    cols = ["n"] + (["w"] if use_w else []) + ["gamma_t_db", "outage", "avg_snr", "avg_snr_db",
                                              "capacity", "bep", "aof", "cqei"]
    rows = [[n] + ([w] if use_w else []) + [gt] + v for (n, w, gt), v in zip(points, vals)]
    emit(render(cols, rows, o["format"] or "dat"), o["out"])
    return EXIT_OK


def _mc_cfg(o):
    return mcsim.McConfig(o["seed"], o["samples"], workers=o["workers"])


def _mc_metric(name, s, cfg):
    d = s.dist
    if name == "outage":
        return mcsim.mc_outage(s, cfg)
    if name == "capacity":
        return mcsim.mc_capacity(s, cfg)
    if name.startswith("bep_"):
        return mcsim.mc_bep(s, lm.parse_modulation(_MOD_ALIASES.get(name[4:], name[4:])), cfg)
    if name.startswith("moment"):
        k = int(name[6:])
        return mcsim.mc_moments(d, cfg, [k])[k]
    if name == "aof":
        return mcsim.mc_aof(d, cfg)
    raise UsageError(f"unknown metric {name!r}")


_MOD_ALIASES = {"16qam": "qam:16", "4qam": "qam:4"}


def _analytic_metric(name, s):
    d = s.dist
    if name == "outage":
        return lm.outage_probability(s)
    if name == "capacity":
        return lm.ergodic_capacity(s)
    if name.startswith("bep_"):
        return lm.bep(s, lm.parse_modulation(_MOD_ALIASES.get(name[4:], name[4:])))
    if name.startswith("moment"):
        return sumdist.moment(d, int(name[6:]))
    if name == "aof":
        return lm.aof(d)
    raise UsageError(f"unknown metric {name!r}")


def run_simulate(o):
    cfg = _mc_cfg(o)
    names = ("outage", "capacity", "bep_" + o["mod"].lower(), "moment2", "moment4", "aof")
    rows = []
    for n in o["n_values"]:
        for w in o["w_values"]:
            for gt in o["gamma_t_values"]:
                s = _scenario(o, _dist(o, n), gt, w)
                for name in names:
                    e = _mc_metric(name, s, cfg)
                    rows.append([n, w if w is not None else "", gt, name, e.mean, e.std_error,
                                 e.ci_low, e.ci_high, e.samples_used])
    cols = ["n", "w", "gamma_t_db", "metric", "mean", "std_error", "ci_low", "ci_high", "samples"]
    if o["w_values"] == [None]:
        cols.pop(1)
        rows = [r[:1] + r[2:] for r in rows]
    emit(render(cols, rows, o["format"] or "csv"), o["out"])
    return EXIT_OK


def run_validate(o):
    cfg = _mc_cfg(o)
    gt = o["gamma_t_values"]
    if len(gt) != 1 or o["w_values"] != [None]:
        raise UsageError("validate takes a single --gamma-t-db and fixed --d1/--d2 geometry")
    rows = []
    for m1, m2 in _parse_pairs(o["pairs"]):
        for n in o["n_values"]:
            s = _scenario(o, _dist(o, n, m1, m2), gt[0])
            for name in VALIDATE_METRICS:
                a = _analytic_metric(name, s)
                e = _mc_metric(name, s, cfg)
                gap = abs(a - e.mean)
                if e.std_error > 0:
                    ok, note = gap <= 3 * e.std_error, "ok"
                else:
                    ok, note = gap == 0, "zero-variance"
                rows.append([m1, m2, n, name, a, e.mean, e.std_error, e.ci_low, e.ci_high,
                             gap / e.std_error if e.std_error > 0 else 0.0, bool(ok), note])
    cols = ["m1", "m2", "n", "metric", "analytic", "mc_mean", "std_error", "ci_low", "ci_high",
            "z_score", "pass", "flag"]
    all_pass = all(r[10] for r in rows)
    extra = {"seed": o["seed"], "samples": o["samples"], "gamma_t_db": gt[0],
             "gamma_thr_db": o["gamma_thr_db"], "all_pass": all_pass}
    emit(render(cols, rows, o["format"] or "json", extra), o["out"])
    return EXIT_OK if all_pass else EXIT_FAIL


# figure datasets -------------------------------------------------------------

def _fig_outage(o):
    xs = [float(x) for x in range(80, 121)]
    files = {}
    for n in FIGURE_NS:
        d = _dist(o, n)
        loss = _loss(o)
        # P_o depends only on gamma_t / gamma_thr
        files[f"outage/out{n}.dat"] = [
            (x, lm.outage_probability(lm.LinkScenario.from_db(d, loss, x, 0.0))) for x in xs
        ]
    return files


def _fig_average_snr(o):
    ws = [round(0.1 + 0.02 * i, 10) for i in range(41)]
    files = {}
    for i, n in enumerate(FIGURE_NS, 1):
        d = _dist(o, n)
        files[f"average_snr/y{i}.dat"] = [
            (w, lm.linear_to_db(lm.average_received_snr(_scenario(o, d, 110.0, w)))) for w in ws
        ]
    return files


def _fig_capacity(o):
    xs = [float(x) for x in range(80, 121, 2)]
    files = {}
    for n in FIGURE_NS:
        d = _dist(o, n)
        files[f"ec/ec{n}.dat"] = [(x, lm.ergodic_capacity(_scenario(o, d, x))) for x in xs]
    return files


def _fig_bep(o):
    ws = [round(0.1 + 0.05 * i, 10) for i in range(17)]
    files = {}
    for n in FIGURE_NS:
        d = _dist(o, n)
        files[f"bep/bep{n}.dat"] = [(w, lm.bep_binary(_scenario(o, d, 110.0, w), lm.BPSK)) for w in ws]
    return files


def _fig_aof(o):
    ns = list(range(32, 257, 8))
    files = {}
    for m1, m2 in AOF_PAIRS:
        files[f"aof/aof{m1}{m2}.dat"] = [(n, lm.aof(_dist(o, n, m1, m2))) for n in ns]
    return files


def _fig_cqei(o):
    xs = [float(x) for x in range(80, 121, 2)]
    files = {}
    for n in FIGURE_NS:
        d = _dist(o, n)
        files[f"cqei/cqei{n}.dat"] = [(x, lm.cqei(_scenario(o, d, x))) for x in xs]
    return files


FIGURES = {1: _fig_outage, 2: _fig_average_snr, 3: _fig_capacity, 4: _fig_bep, 5: _fig_aof, 6: _fig_cqei}
FIGURE_COLUMNS = {1: ("gamma_ratio_db", "outage"), 2: ("w", "avg_snr_db"), 3: ("gamma_t_db", "capacity"),
                  4: ("w", "bep"), 5: ("n", "aof"), 6: ("gamma_t_db", "cqei")}


def run_figures(o):
    if o["w_values"] != [None]:
        raise UsageError("figures choose their own w grid; drop --w")
    which = sorted(parse_range(o["only"], int)) if o["only"] else sorted(FIGURES)
    if any(k not in FIGURES for k in which):
        raise UsageError("figure numbers must lie in 1..6")
    root = Path(o["out"] or "figures")
    results = _pmap(lambda k: (k, FIGURES[k](o)), which, o["workers"])
    for k, files in results:
        for name, rows in files.items():
            emit(render(FIGURE_COLUMNS[k], rows, "dat"), root / name)
    return EXIT_OK


COMMANDS = {"dist": run_dist, "metrics": run_metrics, "simulate": run_simulate,
            "validate": run_validate, "figures": run_figures}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        opts = resolve(args, parser)
        return COMMANDS[args.command](opts)
    except (UsageError, ParameterError) as exc:
        print(f"{parser.prog} {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericalError as exc:
        print(f"{parser.prog} {args.command}: numerical failure: {exc}", file=sys.stderr)
        return EXIT_FAIL
