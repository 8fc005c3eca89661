"""Command-line interface: reproducible classification, curves, and runs.

Subcommands
-----------
``classify``
    Stop/forever verdict as JSON.  Exit code 0 for ``StopsDownCrossing``,
    1 for ``DownCrossesForever``, 2 for ``Indeterminate``; 3 and above
    signal errors (3 config, 4 not transient, 5 quadrature, 6 other).
``onset``
    CSV of ``gamma, analytic_survival, oracle_lower, oracle_upper`` over
    an offset grid, bracketing the onset-location survival.
``simulate``
    Monte Carlo event stream as CSV (``path_id, onset_location,
    onset_time, completion_time``) plus a summary JSON.
``verify``
    End-to-end comparison of the simulated onset distribution with the
    analytic law; emits ``{n, censored, ks, dkw_alpha05, pass}`` and
    exits 0 when the distance is inside the band, 1 otherwise.
``bessel``
    Level-revisit series verdict for the radial family, with partial
    sums as CSV.

Every command reads a TOML or JSON config (``--config``), echoes the
fully resolved configuration into its output (JSON payloads carry a
``config`` key; CSV outputs carry one ``# config {...}`` comment line),
and stamps every JSON payload with the package ``version``.  Reusing an
echoed config reproduces the output byte for byte.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import traceback
from pathlib import Path
from typing import Mapping

try:
    import tomllib as _toml  # Python >= 3.11
except ModuleNotFoundError:  # pragma: no cover - depends on interpreter
    import tomli as _toml

from . import __version__
from .analysis import (
    DOWNCROSSES_FOREVER,
    INDETERMINATE,
    STOPS_DOWNCROSSING,
    bessel_sequence_series,
    classify_downcrossing,
    make_onset_law,
    onset_survival_product_oracle,
    survival_grid,
)
from .errors import (
    ConfigError,
    DowncrossError,
    NotTransientError,
    QuadratureError,
)
from .model import model_from_config
from .pathsim import (
    EXIT_ABSORBED,
    EXIT_HORIZON,
    PathConfig,
    simulate_paths,
)
from .scale import ScaleFunction
from .stats import EmpiricalSurvival, comparison_report

__all__ = ["main"]

_CLASSIFY_EXIT = {STOPS_DOWNCROSSING: 0, DOWNCROSSES_FOREVER: 1, INDETERMINATE: 2}


def _exit_code(err: DowncrossError) -> int:
    if isinstance(err, ConfigError):
        return 3
    if isinstance(err, NotTransientError):
        return 4
    if isinstance(err, QuadratureError):
        return 5
    return 6


# -- config plumbing -------------------------------------------------------


def _load_config(path: str) -> dict:
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file not found: {path}")
    text = p.read_text()
    if p.suffix == ".toml":
        try:
            return _toml.loads(text)
        except _toml.TOMLDecodeError as err:
            raise ConfigError(f"invalid TOML in {path}: {err}") from err
    if p.suffix == ".json":
        try:
            return json.loads(text)
        except json.JSONDecodeError as err:
            raise ConfigError(f"invalid JSON in {path}: {err}") from err
    raise ConfigError(f"config must be a .toml or .json file, got {path}")


def _block(cfg: Mapping, name: str) -> dict:
    block = cfg.get(name, {})
    if not isinstance(block, Mapping):
        raise ConfigError(f"[{name}] must be a table/object, got {type(block).__name__}")
    return dict(block)


def _need(block: Mapping, key: str, where: str):
    if key not in block:
        raise ConfigError(f"missing required key {key!r} in [{where}]")
    return block[key]


def _as_float(value, key: str) -> float:
    try:
        return float(value)
    except (TypeError, ValueError) as err:
        raise ConfigError(f"{key} must be a number, got {value!r}") from err


def _as_int(value, key: str) -> int:
    if isinstance(value, bool) or (isinstance(value, float) and not value.is_integer()):
        raise ConfigError(f"{key} must be an integer, got {value!r}")
    try:
        return int(value)
    except (TypeError, ValueError) as err:
        raise ConfigError(f"{key} must be an integer, got {value!r}") from err


def _crossing_depth(cfg: Mapping) -> float:
    """The drawdown depth ``c``, cross-checked everywhere it can appear.

    The depth may be stated at the top level, inside the model block
    (critical-growth drifts carry their own), or inside a command block;
    stating different values is a configuration contradiction, not a
    tie to break silently.
    """
    found: dict[str, float] = {}
    if "c" in cfg:
        found["top-level"] = _as_float(cfg["c"], "c")
    model = cfg.get("model", {})
    if isinstance(model, Mapping) and "c" in model:
        found["model"] = _as_float(model["c"], "model.c")
    for name in ("classify", "onset", "simulate", "verify"):
        block = cfg.get(name, {})
        if isinstance(block, Mapping) and "c" in block:
            found[name] = _as_float(block["c"], f"{name}.c")
    if not found:
        raise ConfigError("crossing depth c is not set anywhere in the config")
    values = set(found.values())
    if len(values) > 1:
        detail = ", ".join(f"{k}={v}" for k, v in sorted(found.items()))
        raise ConfigError(f"crossing depth c is inconsistent across blocks: {detail}")
    c = values.pop()
    if not (c > 0.0 and math.isfinite(c)):
        raise ConfigError(f"crossing depth c must be positive and finite, got {c}")
    return c


def _model_block(cfg: Mapping, c: float) -> dict:
    """Model block with the shared crossing depth filled in where the
    family needs one; consistency was already enforced."""
    block = dict(_need(cfg, "model", "config"))
    if block.get("family") == "logloglog":
        block.setdefault("c", c)
    return block


def _scale_function(block: Mapping, tol: float | None) -> ScaleFunction:
    model = model_from_config(block)
    if tol is None:
        return ScaleFunction(model)
    return ScaleFunction(model, rel_tol=tol)


def _sanitize(obj):
    """JSON-safe copy; non-finite floats become strings that ``float()``
    accepts, so echoed configs stay machine-reusable."""
    if isinstance(obj, Mapping):
        return {str(k): _sanitize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_sanitize(v) for v in obj]
    if isinstance(obj, float):
        if math.isnan(obj):
            return "NaN"
        if math.isinf(obj):
            return "Infinity" if obj > 0 else "-Infinity"
        return obj
    if hasattr(obj, "item"):  # numpy scalars
        return _sanitize(obj.item())
    return obj


def _emit_json(payload: dict, out: str | None) -> None:
    text = json.dumps(_sanitize(payload), indent=2) + "\n"
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _emit_csv(
    header: list[str],
    rows: list[list],
    resolved: dict,
    out: str | None,
) -> None:
    buf = io.StringIO()
    buf.write(
        "# config " + json.dumps(_sanitize(resolved), separators=(",", ":")) + "\n"
    )
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    if out:
        Path(out).write_text(buf.getvalue())
    else:
        sys.stdout.write(buf.getvalue())


def _path_config(block: Mapping, where: str, seed_override: int | None) -> PathConfig:
    seed = seed_override if seed_override is not None else block.get("seed", 0)
    return PathConfig(
        x0=_as_float(block.get("x0", 0.0), f"{where}.x0"),
        dt=_as_float(block.get("dt", 1e-3), f"{where}.dt"),
        t_max=_as_float(_need(block, "t_max", where), f"{where}.t_max"),
        x_stop=_as_float(block.get("x_stop", math.inf), f"{where}.x_stop"),
        seed=_as_int(seed, f"{where}.seed"),
        scheme=str(block.get("scheme", "EulerMaruyama")),
        stop_guard=_as_float(block.get("stop_guard", 0.0), f"{where}.stop_guard"),
        bridge_extrema=bool(block.get("bridge_extrema", True)),
        domain_policy=str(block.get("domain_policy", "error")),
    )


def _resolved_sim_block(pcfg: PathConfig, n_paths: int) -> dict:
    # Worker count is deliberately absent: results are independent of
    # scheduling, so it is not part of the result-defining config.
    return {
        "x0": pcfg.x0,
        "dt": pcfg.dt,
        "t_max": pcfg.t_max,
        "x_stop": pcfg.x_stop,
        "seed": pcfg.seed,
        "scheme": pcfg.scheme,
        "stop_guard": pcfg.stop_guard,
        "bridge_extrema": pcfg.bridge_extrema,
        "domain_policy": pcfg.domain_policy,
        "n_paths": n_paths,
    }


# -- subcommands -----------------------------------------------------------


def _cmd_classify(args: argparse.Namespace) -> int:
    cfg = _load_config(args.config)
    c = _crossing_depth(cfg)
    mblock = _model_block(cfg, c)
    sf = _scale_function(mblock, args.tol)
    block = _block(cfg, "classify")
    options = {}
    for key in ("x_max", "fit_min_x", "margin", "fit_rms_limit"):
        if key in block:
            options[key] = _as_float(block[key], f"classify.{key}")
    verdict = classify_downcrossing(sf, c, **options)
    resolved = {"model": mblock, "c": c, "classify": {**options}}
    payload = {
        "version": __version__,
        "command": "classify",
        "config": resolved,
        **verdict.to_dict(),
    }
    _emit_json(payload, args.out)
    return _CLASSIFY_EXIT[verdict.classification]


def _cmd_onset(args: argparse.Namespace) -> int:
    cfg = _load_config(args.config)
    c = _crossing_depth(cfg)
    mblock = _model_block(cfg, c)
    sf = _scale_function(mblock, args.tol)
    block = _block(cfg, "onset")
    x0 = _as_float(block.get("x0", 0.0), "onset.x0")
    if "gammas" in block:
        gammas = [_as_float(g, "onset.gammas[]") for g in block["gammas"]]
    else:
        gamma_max = _as_float(_need(block, "gamma_max", "onset"), "onset.gamma_max")
        count = _as_int(block.get("gamma_count", 11), "onset.gamma_count")
        if count < 2 or gamma_max <= 0.0:
            raise ConfigError("onset grid needs gamma_max > 0 and gamma_count >= 2")
        gammas = [gamma_max * i / (count - 1) for i in range(count)]
    oracle_n = _as_int(block.get("oracle_n", 16), "onset.oracle_n")
    law = make_onset_law(sf, c, x0)
    analytic = survival_grid(law, gammas)
    rows = []
    for gamma, surv in zip(gammas, analytic):
        lower, upper = onset_survival_product_oracle(law, gamma, oracle_n)
        rows.append([gamma, float(surv), lower, upper])
    resolved = {
        "model": mblock,
        "c": c,
        "onset": {"x0": x0, "gammas": gammas, "oracle_n": oracle_n},
    }
    if args.format == "json":
        payload = {
            "version": __version__,
            "command": "onset",
            "config": resolved,
            "columns": ["gamma", "analytic_survival", "oracle_lower", "oracle_upper"],
            "rows": rows,
        }
        _emit_json(payload, args.out)
    else:
        _emit_csv(
            ["gamma", "analytic_survival", "oracle_lower", "oracle_upper"],
            rows,
            resolved,
            args.out,
        )
    return 0


def _cmd_simulate(args: argparse.Namespace) -> int:
    cfg = _load_config(args.config)
    c = _crossing_depth(cfg)
    mblock = _model_block(cfg, c)
    model = model_from_config(mblock)
    block = _block(cfg, "simulate")
    pcfg = _path_config(block, "simulate", args.seed)
    n_paths = _as_int(_need(block, "n_paths", "simulate"), "simulate.n_paths")
    n_workers = _as_int(block.get("n_workers", 1), "simulate.n_workers")
    results = simulate_paths(model, pcfg, c, n_paths, n_workers=n_workers)

    resolved = {
        "model": mblock,
        "c": c,
        "simulate": _resolved_sim_block(pcfg, n_paths),
    }
    event_rows = [
        [i, ev.onset_location, ev.onset_time, ev.completion_time]
        for i, res in enumerate(results)
        for ev in res.events
    ]
    summary = {
        "version": __version__,
        "command": "simulate",
        "config": resolved,
        "n_paths": n_paths,
        "total_events": len(event_rows),
        "paths_with_events": sum(1 for r in results if r.events),
        "censored": sum(1 for r in results if not r.events),
        "exit_reasons": {
            EXIT_HORIZON: sum(1 for r in results if r.exit_reason == EXIT_HORIZON),
            EXIT_ABSORBED: sum(1 for r in results if r.exit_reason == EXIT_ABSORBED),
        },
    }
    header = ["path_id", "onset_location", "onset_time", "completion_time"]
    if args.out:
        _emit_csv(header, event_rows, resolved, args.out)
        _emit_json(summary, None)
    elif args.format == "json":
        summary["events"] = event_rows
        _emit_json(summary, None)
    else:
        _emit_csv(header, event_rows, resolved, None)
    return 0


def _cmd_verify(args: argparse.Namespace) -> int:
    cfg = _load_config(args.config)
    c = _crossing_depth(cfg)
    mblock = _model_block(cfg, c)
    sf = _scale_function(mblock, args.tol)
    block = _block(cfg, "verify")
    pcfg = _path_config(block, "verify", args.seed)
    n_paths = _as_int(_need(block, "n_paths", "verify"), "verify.n_paths")
    n_workers = _as_int(block.get("n_workers", 1), "verify.n_workers")
    alpha = _as_float(block.get("alpha", 0.05), "verify.alpha")
    allowance = _as_float(block.get("allowance", 0.01), "verify.allowance")
    if "gamma_max" in block:
        gamma_max = _as_float(block["gamma_max"], "verify.gamma_max")
    elif math.isfinite(pcfg.x_stop):
        gamma_max = 0.8 * (pcfg.x_stop - pcfg.x0 - c)
    else:
        gamma_max = 20.0
    if gamma_max <= 0.0:
        raise ConfigError(f"verify.gamma_max must be positive, got {gamma_max}")
    grid_count = _as_int(block.get("grid_count", 201), "verify.grid_count")

    results = simulate_paths(sf.model, pcfg, c, n_paths, n_workers=n_workers)
    onsets = [r.first_onset for r in results]
    censored_records = [
        r.running_max for r in results if not r.events
    ]
    frontier = (
        min(censored_records) - pcfg.x0 if censored_records else math.inf
    )
    emp = EmpiricalSurvival.from_samples(
        onsets, start_x=pcfg.x0, censoring_frontier=frontier
    )
    grid = [gamma_max * i / (grid_count - 1) for i in range(grid_count)]
    law = make_onset_law(sf, c, pcfg.x0)
    report = comparison_report(emp, law, grid, alpha=alpha, allowance=allowance)
    resolved = {
        "model": mblock,
        "c": c,
        "verify": {
            **_resolved_sim_block(pcfg, n_paths),
            "alpha": alpha,
            "allowance": allowance,
            "gamma_max": gamma_max,
            "grid_count": grid_count,
        },
    }
    payload = {
        "version": __version__,
        "command": "verify",
        "config": resolved,
        **report,
    }
    _emit_json(payload, args.out)
    return 0 if report["pass"] else 1


def _cmd_bessel(args: argparse.Namespace) -> int:
    cfg = _load_config(args.config)
    block = _block(cfg, "bessel")
    k = _as_float(_need(block, "k", "bessel"), "bessel.k")
    rho = _as_float(_need(block, "rho", "bessel"), "bessel.rho")
    n_max = _as_int(block.get("n_max", 1000), "bessel.n_max")
    partial_sums, verdict = bessel_sequence_series(k, rho, n_max)
    resolved = {"bessel": {"k": k, "rho": rho, "n_max": n_max}}
    payload = {
        "version": __version__,
        "command": "bessel",
        "config": resolved,
        "verdict": verdict,
        "exponent": rho * (k - 2.0),
        "final_partial_sum": float(partial_sums[-1]),
    }
    rows = [[i + 1, float(s)] for i, s in enumerate(partial_sums)]
    if args.out:
        _emit_csv(["n", "partial_sum"], rows, resolved, args.out)
        _emit_json(payload, None)
    elif args.format == "csv":
        _emit_csv(["n", "partial_sum"], rows, resolved, None)
    else:
        _emit_json(payload, None)
    return 0


_DISPATCH = {
    "classify": _cmd_classify,
    "onset": _cmd_onset,
    "simulate": _cmd_simulate,
    "verify": _cmd_verify,
    "bessel": _cmd_bessel,
}


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="downcross",
        description="Drawdown persistence analysis for one-dimensional diffusions.",
    )
    parser.add_argument(
        "--version", action="version", version=f"%(prog)s {__version__}"
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="TOML or JSON config file")
    common.add_argument("--seed", type=int, default=None,
                        help="override the master seed from the config")
    common.add_argument("--out", default=None,
                        help="write the primary output to this file instead of stdout")
    common.add_argument("--format", choices=("json", "csv"), default=None,
                        help="primary output format (default depends on the command)")
    common.add_argument("--tol", type=float, default=None,
                        help="relative quadrature tolerance override")
    sub = parser.add_subparsers(dest="command", required=True)
    defaults = {
        "classify": "json",
        "onset": "csv",
        "simulate": "csv",
        "verify": "json",
        "bessel": "json",
    }
    helps = {
        "classify": "decide whether drawdowns of depth c almost surely stop",
        "onset": "analytic onset-survival curve with product-oracle brackets",
        "simulate": "Monte Carlo drawdown event stream",
        "verify": "simulated onset distribution vs the analytic law",
        "bessel": "level-revisit series for the radial family",
    }
    for name in _DISPATCH:
        p = sub.add_parser(name, parents=[common], help=helps[name])
        p.set_defaults(default_format=defaults[name])
    return parser


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    if args.format is None:
        args.format = args.default_format
    try:
        return _DISPATCH[args.command](args)
    except DowncrossError as err:
        print(f"error: {type(err).__name__}: {err}", file=sys.stderr)
        return _exit_code(err)
    except Exception:  # pragma: no cover - defensive
        traceback.print_exc()
        return 70


if __name__ == "__main__":
    sys.exit(main())
