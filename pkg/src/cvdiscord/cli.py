"""Command-line sweeps over the channel family.

Every command writes either CSV (a ``#``-prefixed JSON header line with the
run config, then a header row and data rows) or one JSON document with
``config`` and ``records``. Numbers carry 12 significant digits and rows come
out in input order regardless of ``--jobs``, so repeated runs are
byte-identical.
"""

from __future__ import annotations

import argparse
import io
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, fields

import numpy as np

from . import __version__
from .discord import (
    channel_discord,
    discord_dp_closed,
    discord_dp_from_variance,
    qd_variance_point,
    qvar,
)
from .errors import ConvergenceError, NumericalIntegrityError, TruncationError
from .homodyne import QuadGrid, amid, homodyne_state, jqp_closed, jqp_grid, mid, projected_entropies
from .states import ChannelKind

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_USAGE = 2
EXIT_UNCONVERGED = 3

JQP_NORM_TOL = 1e-6

DEFAULTS = {
    "kind": "dpc",
    "alpha0": "1",
    "n0": None,
    "eta": "1",
    "sigma": "0",
    "lambda_a": "0",
    "lambda_b": "0",
    "grid": None,
    "over": "eta",
    "format": "csv",
    "out": None,
    "jobs": None,
    "allow_unconverged": False,
}

# grid used when --grid is not given
DEFAULT_GRIDS = {
    "mid-map": "0:3.14159265358979:13",
    "amid-sweep": "0:10:11",
    "discord-sweep": "0:1:11",
    "qd-vs-variance": "0:1:11",
}

# not part of the result, so kept out of the output header
VOLATILE_KEYS = ("jobs", "out")


class UsageError(ValueError):
    pass


@dataclass
class SweepRecord:
    kind: str
    alpha0: float
    n0: float
    eta: float | None = None
    sigma: float | None = None
    lambda_a: float | None = None
    lambda_b: float | None = None
    theta_m: float | None = None
    phi_m: float | None = None
    discord_bits: float | None = None
    variance: float | None = None
    mid_bits: float | None = None
    amid_bits: float | None = None
    truncation_dim: int | None = None
    converged: bool = True
    phase_converged: bool = True
    limit: str = ""


def parse_grid(text: str) -> np.ndarray:
    """``start:stop:count``, endpoints included."""
    parts = str(text).split(":")
    if len(parts) != 3:
        raise UsageError(f"grid must be start:stop:count, got {text!r}")
    try:
        start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError as exc:
        raise UsageError(f"bad grid {text!r}: {exc}") from None
    if count < 1:
        raise UsageError("grid count must be positive")
    return np.linspace(start, stop, count)


def parse_values(text) -> list[float]:
    """A number, a comma list, or a ``start:stop:count`` range."""
    text = str(text).strip()
    if ":" in text:
        vals = list(parse_grid(text))
    else:
        try:
            vals = [float(t) for t in text.split(",") if t.strip()]
        except ValueError:
            raise UsageError(f"not a number or list: {text!r}") from None
    if not vals or not all(math.isfinite(v) for v in vals):
        raise UsageError(f"values must be finite: {text!r}")
    return [float(v) for v in vals]


def read_config_file(path: str) -> dict:
    out = {}
    try:
        with open(path) as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from None
    for num, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{num}: expected key=value")
        key, value = (t.strip() for t in line.split("=", 1))
        key = key.lstrip("-").replace("-", "_")
        if key not in DEFAULTS:
            raise UsageError(f"{path}:{num}: unknown key {key!r}")
        if key == "allow_unconverged":
            value = value.lower() in ("1", "true", "yes", "on")
        out[key] = value
    return out


def merge_config(file_cfg: dict, cli_cfg: dict) -> dict:
    """Flags over config file over defaults; alpha0 and n0 displace each other."""
    cfg = dict(DEFAULTS)
    for layer in (file_cfg, cli_cfg):
        if "alpha0" in layer and "n0" in layer:
            raise UsageError("give either alpha0 or n0, not both")
        for key, value in layer.items():
            if key in ("alpha0", "n0"):
                cfg["n0" if key == "alpha0" else "alpha0"] = None
            cfg[key] = value
    return cfg


def _alpha0_values(cfg: dict) -> list[float]:
    if cfg.get("n0") is not None:
        n0s = parse_values(cfg["n0"])
        if any(n < 0 for n in n0s):
            raise UsageError("n0 must be nonnegative")
        return [math.sqrt(n) for n in n0s]
    vals = parse_values(cfg["alpha0"])
    if any(a < 0 for a in vals):
        raise UsageError("alpha0 must be nonnegative")
    return vals


def _single(name: str, vals: list[float]) -> float:
    if len(vals) != 1:
        raise UsageError(f"{name} takes a single value for this command")
    return vals[0]


def _kind(cfg: dict) -> ChannelKind:
    try:
        return ChannelKind.parse(cfg["kind"])
    except ValueError:
        raise UsageError(f"kind must be dpc or pac, got {cfg['kind']!r}") from None


def _etas(cfg: dict) -> list[float]:
    vals = parse_values(cfg["eta"])
    if any(not 0.0 <= e <= 1.0 for e in vals):
        raise UsageError("eta must lie in [0, 1]")
    return vals


def _sigmas(cfg: dict) -> list[float]:
    vals = parse_values(cfg["sigma"])
    if any(s < 0 for s in vals):
        raise UsageError("sigma must be nonnegative")
    return vals


def _run_tasks(func, tasks: list, jobs: int) -> list:
    if jobs <= 1 or len(tasks) <= 1:
        return [func(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        # map keeps input order
        return list(pool.map(func, tasks))


# --- per-point workers (top level so they pickle) -------------------------


def _discord_task(task) -> SweepRecord:
    kind, a0, eta, sigma, lam_a, allow, tag_limits = task
    if tag_limits:
        pt = qd_variance_point(kind, a0, eta, sigma, lam_a, raise_on_stall=not allow)
        return SweepRecord(
            kind, a0, a0**2, eta, sigma, lam_a, None, pt.theta, pt.phi, pt.discord, pt.variance,
            truncation_dim=pt.truncation_dim, converged=pt.converged, limit=pt.limit,
            phase_converged=pt.phase_converged,
        )
    res = channel_discord(kind, a0, eta, sigma, raise_on_stall=not allow)
    return SweepRecord(
        kind, a0, a0**2, eta, sigma, lam_a, None, res.theta, res.phi, res.value,
        qvar(kind, lam_a, a0, eta, sigma),
        truncation_dim=int(res.meta["truncation_dim"]), converged=res.converged,
        phase_converged=bool(res.meta.get("phase_converged", True)),
    )


def _amid_task(task) -> SweepRecord:
    kind, a0, allow = task
    state = homodyne_state(kind, a0)
    res = amid(state, grid=QuadGrid.for_alpha0(a0), raise_on_stall=not allow)
    return SweepRecord(
        kind, a0, a0**2, lambda_a=res.lam_a, lambda_b=res.lam_b, amid_bits=res.value,
        truncation_dim=state.space.mode_dims[0], converged=res.converged,
    )


def _mid_task(task) -> dict:
    kind, a0, la, lb = task
    state = homodyne_state(kind, a0)
    return {
        "kind": kind, "alpha0": a0, "n0": a0**2, "lambda_a": la, "lambda_b": lb,
        "mid_bits": mid(state, la, lb, QuadGrid.for_alpha0(a0)),
        "truncation_dim": state.space.mode_dims[0], "converged": True,
    }


# --- commands ---------------------------------------------------------------


def cmd_jqp(cfg: dict) -> list[dict]:
    kind = _kind(cfg).value
    a0 = _single("alpha0", _alpha0_values(cfg))
    lam_a = _single("lambda-a", parse_values(cfg["lambda_a"]))
    lam_b = _single("lambda-b", parse_values(cfg["lambda_b"]))
    xs = parse_grid(cfg["grid"] or f"{-(a0 + 8)}:{a0 + 8}:201")
    if len(xs) < 2:
        raise UsageError("jqp grid needs at least two points")
    state = homodyne_state(kind, a0)
    p = jqp_grid(state, xs, xs, lam_a, lam_b)
    dx = xs[1] - xs[0]
    total = float(p.sum() * dx * dx)
    ok = abs(total - 1.0) <= JQP_NORM_TOL
    if not ok and not cfg["allow_unconverged"]:
        raise ConvergenceError(f"jqp grid holds probability {total:.9f}; widen or refine --grid")
    dim = state.space.mode_dims[0]
    return [
        {"kind": kind, "alpha0": a0, "n0": a0**2, "lambda_a": lam_a, "lambda_b": lam_b,
         "x_a": xa, "x_b": xb, "p": p[i, j], "truncation_dim": dim, "converged": ok}
        for i, xa in enumerate(xs) for j, xb in enumerate(xs)
    ]


def cmd_mid_map(cfg: dict) -> list[dict]:
    kind = _kind(cfg).value
    a0 = _single("alpha0", _alpha0_values(cfg))
    lams = parse_grid(cfg["grid"] or DEFAULT_GRIDS["mid-map"])
    tasks = [(kind, a0, float(la), float(lb)) for la in lams for lb in lams]
    return _run_tasks(_mid_task, tasks, cfg["jobs"])


def cmd_amid_sweep(cfg: dict) -> list[SweepRecord]:
    kind = _kind(cfg).value
    n0s = parse_grid(cfg["grid"] or DEFAULT_GRIDS["amid-sweep"])
    if any(n < 0 for n in n0s):
        raise UsageError("n0 grid must be nonnegative")
    tasks = [(kind, math.sqrt(n), cfg["allow_unconverged"]) for n in n0s]
    return _run_tasks(_amid_task, tasks, cfg["jobs"])


def _sweep_tasks(cfg: dict, tag_limits: bool) -> list:
    kind = _kind(cfg).value
    a0s, etas, sigmas = _alpha0_values(cfg), _etas(cfg), _sigmas(cfg)
    axis = parse_grid(cfg["grid"] or DEFAULT_GRIDS["discord-sweep"])
    over = cfg["over"]
    if over == "eta":
        if any(not 0.0 <= e <= 1.0 for e in axis):
            raise UsageError("eta grid must lie in [0, 1]")
        etas = list(axis)
    elif over == "sigma":
        if any(s < 0 for s in axis):
            raise UsageError("sigma grid must be nonnegative")
        sigmas = list(axis)
    elif over == "n0":
        if any(n < 0 for n in axis):
            raise UsageError("n0 grid must be nonnegative")
        a0s = [math.sqrt(n) for n in axis]
    else:
        raise UsageError(f"--over must be eta, sigma or n0, got {over!r}")
    lam_a = _single("lambda-a", parse_values(cfg["lambda_a"]))
    return [
        (kind, float(a0), float(e), float(s), lam_a, cfg["allow_unconverged"], tag_limits)
        for a0 in a0s for e in etas for s in sigmas
    ]


def cmd_discord_sweep(cfg: dict) -> list[SweepRecord]:
    return _run_tasks(_discord_task, _sweep_tasks(cfg, False), cfg["jobs"])


def cmd_qd_vs_variance(cfg: dict) -> list[SweepRecord]:
    return _run_tasks(_discord_task, _sweep_tasks(cfg, True), cfg["jobs"])


def _selftest_checks() -> list[tuple[str, bool]]:
    checks = []
    for eta in (0.3, 0.7):
        d = channel_discord("dpc", 1.0, eta).value
        checks.append((f"dpc discord matches closed form at eta={eta}", abs(d - discord_dp_closed(eta)) < 1e-4))
    checks.append(("variance identity", abs(discord_dp_from_variance(0.8) - discord_dp_closed(0.6)) < 1e-10))
    checks.append(("pure dpc discord is 1 bit", abs(channel_discord("dpc", 2.0, 1.0).value - 1.0) < 1e-8))
    g = QuadGrid.for_alpha0(1.0, 401)
    x, w = g.points()
    norm = float(w @ jqp_closed("pac", 1.0, x[:, None], x[None, :], 0.3, 0.9) @ w)
    checks.append(("jqp normalized", abs(norm - 1.0) < 1e-8))
    s = projected_entropies(homodyne_state("dpc", 1.0), 0.0, 0.0).s_a
    checks.append(("dpc marginal entropy near 2.00208 bits", abs(s - 2.00208) < 5e-3))
    return checks


def cmd_selftest(cfg: dict) -> list[dict]:
    return [{"check": name, "passed": ok} for name, ok in _selftest_checks()]


COMMANDS = {
    "jqp": (cmd_jqp, "joint quadrature density on an X grid (CSV of X_A, X_B, P)"),
    "mid-map": (cmd_mid_map, "MID over a square grid of LO phases"),
    "amid-sweep": (cmd_amid_sweep, "AMID of the pure channel over an n0 grid"),
    "discord-sweep": (cmd_discord_sweep, "discord over eta, sigma or n0"),
    "qd-vs-variance": (cmd_qd_vs_variance, "(variance, discord) pairs with endpoint tags"),
    "selftest": (cmd_selftest, "quick internal consistency checks"),
}


# --- output -------------------------------------------------------------------


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.12g}"
    return str(value)


def _jsonable(value):
    if isinstance(value, (float, np.floating)):
        return float(f"{float(value):.12g}")
    if isinstance(value, np.integer):
        return int(value)
    return value


def _rows(records) -> tuple[list[str], list[dict]]:
    if records and isinstance(records[0], SweepRecord):
        return [f.name for f in fields(SweepRecord)], [asdict(r) for r in records]
    cols = list(records[0]) if records else []
    return cols, list(records)


def render(command: str, cfg: dict, records) -> str:
    meta = {k: v for k, v in cfg.items() if k not in VOLATILE_KEYS}
    meta.update(command=command, tool="cvdiscord", version=__version__)
    meta = dict(sorted(meta.items()))
    cols, rows = _rows(records)
    if cfg["format"] == "json":
        doc = {"config": meta, "records": [{c: _jsonable(r[c]) for c in cols} for r in rows]}
        return json.dumps(doc, indent=1) + "\n"
    buf = io.StringIO()
    buf.write("# " + json.dumps(meta, sort_keys=True) + "\n")
    buf.write(",".join(cols) + "\n")
    for r in rows:
        buf.write(",".join(_fmt(r[c]) for c in cols) + "\n")
    return buf.getvalue()


def _check_records(records, allow: bool) -> list:
    _, rows = _rows(records)
    bad = [r for r in rows if not (r.get("converged", True) and r.get("phase_converged", True))]
    if bad and not allow:
        raise ConvergenceError(f"{len(bad)} point(s) did not converge; rerun with --allow-unconverged to keep them")
    for r in rows:
        for key, value in r.items():
            if isinstance(value, (float, np.floating)) and not math.isfinite(value):
                raise NumericalIntegrityError(f"non-finite {key} in output")
    return records


# --- argument parsing ---------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    common.add_argument("--kind", choices=["dpc", "pac"], help="channel (default dpc)")
    amp = common.add_mutually_exclusive_group()
    amp.add_argument("--alpha0", help="coherent amplitude alpha0: number, list a,b,c or start:stop:count (default 1)")
    amp.add_argument("--n0", help="mean photon number n0 = alpha0^2, same forms as --alpha0")
    common.add_argument("--eta", help="scattering transmittance in [0, 1] (default 1)")
    common.add_argument("--sigma", help="phase-noise standard deviation in radians (default 0)")
    common.add_argument("--lambda-a", dest="lambda_a", help="LO phase on A in radians (default 0)")
    common.add_argument("--lambda-b", dest="lambda_b", help="LO phase on B in radians (default 0)")
    common.add_argument("--grid", help="start:stop:count for the command's sweep axis (write --grid=-5:5:101 for a negative start)")
    common.add_argument("--over", choices=["eta", "sigma", "n0"], help="sweep axis for discord commands (default eta)")
    common.add_argument("--out", help="write here instead of stdout")
    common.add_argument("--format", choices=["csv", "json"], help="output format (default csv)")
    common.add_argument("--jobs", type=int, help="worker processes (default: logical cores)")
    common.add_argument("--allow-unconverged", dest="allow_unconverged", action="store_true",
                        help="emit rows whose optimizer did not converge")
    common.add_argument("--config", dest="config_file", help="key=value file; flags override it")
    common.add_argument("--show-config", dest="show_config", action="store_true",
                        help="print the merged configuration and exit")

    parser = argparse.ArgumentParser(prog="cvdiscord", description="Correlation measures of hybrid two-mode optical channels.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in COMMANDS.items():
        sub.add_parser(name, parents=[common], help=help_text, description=help_text)
    return parser


def resolve_config(ns: argparse.Namespace) -> dict:
    cli_cfg = {k: v for k, v in vars(ns).items() if k in DEFAULTS}
    file_cfg = read_config_file(ns.config_file) if getattr(ns, "config_file", None) else {}
    cfg = merge_config(file_cfg, cli_cfg)
    jobs = cfg["jobs"]
    cfg["jobs"] = int(jobs) if jobs not in (None, "") else (os.cpu_count() or 1)
    if cfg["jobs"] < 1:
        raise UsageError("--jobs must be at least 1")
    if cfg["format"] not in ("csv", "json"):
        raise UsageError("format must be csv or json")
    return cfg


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    try:
        cfg = resolve_config(ns)
        if getattr(ns, "show_config", False):
            print(json.dumps({"command": ns.command, **cfg}, indent=1, sort_keys=True))
            return EXIT_OK
        func = COMMANDS[ns.command][0]
        records = func(cfg)
        if ns.command != "selftest":
            _check_records(records, cfg["allow_unconverged"])
        text = render(ns.command, cfg, records)
    except (UsageError, ValueError, TypeError) as exc:
        print(f"cvdiscord: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ConvergenceError, TruncationError, NumericalIntegrityError) as exc:
        print(f"cvdiscord: numerical failure: {exc}", file=sys.stderr)
        return EXIT_UNCONVERGED
    if cfg["out"]:
        with open(cfg["out"], "w") as fh:
            fh.write(text)
    else:
        try:
            sys.stdout.write(text)
            sys.stdout.flush()
        except BrokenPipeError:
            # reader went away (e.g. piped into head); silence the flush at exit
            os.dup2(os.open(os.devnull, os.O_WRONLY), sys.stdout.fileno())
    if ns.command == "selftest" and not all(r["passed"] for r in records):
        return EXIT_FAILED
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
