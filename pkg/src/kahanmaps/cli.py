"""Command-line front end: orbit simulation, property verification, and
Wronskian null-space scans, driven by a JSON config or flags.

Outputs are plain files (orbit.csv, verify.json, hkscan.json, report.txt)
written with fixed formatting so identical config and seed reproduce them
byte for byte.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .hkbasis import (
    WronskianBasisSpec,
    conjugate_pairs,
    default_window,
    hk_nullspace,
    iterate_orbit,
)
from .integrals import DenominatorZeroError, evaluate_named
from .quadfield import SingularStepError, kahan_step
from .systems import build_system, params_from_dict, params_to_dict
from .verify import draw_initial_state, reports_to_json, run_suites, suites_passed

__all__ = [
    "ExperimentConfig",
    "config_to_json_dict",
    "main",
    "parse_config",
    "run_command",
]

DEFAULT_EPS = 0.05
DEFAULT_STEPS = 1000
DEFAULT_SEED = 42
DEFAULT_TRIALS = 500

# config keys that are not system parameters when params are given flat
RESERVED_KEYS = frozenset(
    {"system", "params", "x0", "eps", "steps", "seed", "orders", "trials"}
)


@dataclass(frozen=True)
class ExperimentConfig:
    """One validated experiment: a catalog system plus run settings."""

    kind: str
    params: object
    x0: Optional[np.ndarray]
    eps: float
    steps: int
    seed: int
    orders: Optional[tuple]
    trials: int


def parse_config(path: Optional[str] = None, overrides: Optional[dict] = None) -> ExperimentConfig:
    """Read a JSON config and/or flag overrides into a validated config.

    Defaults: eps=0.05, steps=1000, seed=42, trials=500.  System parameters
    may sit under a "params" key or flat at top level, not both.
    """
    doc: dict = {}
    if path is not None:
        try:
            with open(path, encoding="utf-8") as fh:
                doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValueError(
                f"config parse error at line {exc.lineno}, column {exc.colno}: {exc.msg}"
            ) from exc
        if not isinstance(doc, dict):
            raise ValueError("config must be a JSON object")
    if overrides:
        doc = {**doc, **{k: v for k, v in overrides.items() if v is not None}}
    if "system" not in doc:
        raise ValueError("config missing required field 'system'")
    kind = doc["system"]
    flat = {k: v for k, v in doc.items() if k not in RESERVED_KEYS}
    if "params" in doc:
        if flat:
            raise ValueError(
                f"system parameters given both nested and flat: {sorted(flat)}"
            )
        if not isinstance(doc["params"], dict):
            raise ValueError("'params' must be a JSON object")
        params = params_from_dict(kind, doc["params"])
    else:
        params = params_from_dict(kind, flat)
    desc = build_system(kind, params)

    x0 = None
    if doc.get("x0") is not None:
        x0 = np.asarray(doc["x0"], dtype=float)
        if x0.shape != (desc.dim,):
            raise ValueError(
                f"x0 must have {desc.dim} components for {kind}, got shape {x0.shape}"
            )
        if not np.isfinite(x0).all():
            raise ValueError("x0 must be finite")

    eps = float(doc.get("eps", DEFAULT_EPS))
    steps = int(doc.get("steps", DEFAULT_STEPS))
    seed = int(doc.get("seed", DEFAULT_SEED))
    trials = int(doc.get("trials", DEFAULT_TRIALS))
    if not np.isfinite(eps):
        raise ValueError("eps must be finite")
    if steps < 0:
        raise ValueError("steps must be >= 0")
    if trials < 1:
        raise ValueError("trials must be >= 1")
    orders = None
    if doc.get("orders") is not None:
        orders = tuple(int(o) for o in doc["orders"])
        if not orders or any(o < 1 for o in orders):
            raise ValueError("orders must be a non-empty list of integers >= 1")
    return ExperimentConfig(
        kind=kind,
        params=params,
        x0=x0,
        eps=eps,
        steps=steps,
        seed=seed,
        orders=orders,
        trials=trials,
    )


def config_to_json_dict(cfg: ExperimentConfig) -> dict:
    """Canonical JSON form; parsing it again reproduces the same config."""
    return {
        "system": cfg.kind,
        "params": params_to_dict(cfg.params),
        "x0": None if cfg.x0 is None else [float(v) for v in cfg.x0],
        "eps": cfg.eps,
        "steps": cfg.steps,
        "seed": cfg.seed,
        "orders": None if cfg.orders is None else list(cfg.orders),
        "trials": cfg.trials,
    }


def _fmt(value: float) -> str:
    return f"{value:.17g}"


def _resolve_x0(cfg: ExperimentConfig, desc) -> np.ndarray:
    if cfg.x0 is not None:
        return np.asarray(cfg.x0, dtype=float)
    rng = np.random.default_rng(cfg.seed)
    return draw_initial_state(rng, desc, cfg.eps)


def _simulate(cfg: ExperimentConfig, out_dir: str) -> int:
    desc = build_system(cfg.kind, cfg.params)
    x0 = _resolve_x0(cfg, desc)
    columns = list(desc.integral_names) + [f"density_{d}" for d in desc.density_names]
    header = (
        ["step"]
        + [f"x{i + 1}" for i in range(desc.dim)]
        + ["delta"]
        + columns
    )
    lines = [",".join(header)]
    x = x0
    truncated_at = None
    for k in range(1, cfg.steps + 1):
        try:
            result = kahan_step(desc.field, x, cfg.eps)
        except SingularStepError as exc:
            if k == 1:
                raise ValueError(f"orbit hits a pole at the first step: {exc}") from exc
            truncated_at = k
            break
        x = result.next
        row = [str(k)] + [_fmt(v) for v in x] + [_fmt(result.delta)]
        for name in columns:
            try:
                row.append(_fmt(evaluate_named(desc, name, x, cfg.eps)))
            except (DenominatorZeroError, SingularStepError):
                row.append("nan")
        lines.append(",".join(row))
    path = os.path.join(out_dir, "orbit.csv")
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("\n".join(lines) + "\n")
    if truncated_at is not None:
        print(
            f"orbit truncated: pole at step {truncated_at} of {cfg.steps}",
            file=sys.stderr,
        )
    return 0


def _verify_reports(cfg: ExperimentConfig) -> list:
    desc = build_system(cfg.kind, cfg.params)
    return run_suites(
        [desc], eps=cfg.eps, trials=cfg.trials, steps=cfg.steps, seed=cfg.seed
    )


def _verify(cfg: ExperimentConfig, out_dir: str) -> int:
    reports = _verify_reports(cfg)
    path = os.path.join(out_dir, "verify.json")
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(reports_to_json(reports) + "\n")
    return 0 if suites_passed(reports) else 1


def _scan_orders(cfg: ExperimentConfig):
    desc = build_system(cfg.kind, cfg.params)
    if desc.dim != 6:
        raise ValueError(
            f"hk-scan needs conjugate coordinate pairs; '{cfg.kind}' has none"
        )
    orders = cfg.orders if cfg.orders is not None else (1, 2, 3, 4)
    pairs = conjugate_pairs(desc.dim)
    window = default_window(len(pairs))
    x0 = _resolve_x0(cfg, desc)
    results = []
    for order in orders:
        observables = WronskianBasisSpec(order=order, pairs=pairs).observables()
        orbit = iterate_orbit(desc.field, x0, cfg.eps, window - 1 + order)
        report = hk_nullspace(orbit, observables, window)
        results.append((order, report))
    return x0, window, results


def _hk_scan(cfg: ExperimentConfig, out_dir: str) -> int:
    x0, window, results = _scan_orders(cfg)
    doc = {
        "system": cfg.kind,
        "eps": cfg.eps,
        "seed": cfg.seed,
        "x0": [float(v) for v in x0],
        "window": window,
        "orders": [
            {"order": order, **report.to_json_dict()} for order, report in results
        ],
    }
    path = os.path.join(out_dir, "hkscan.json")
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(json.dumps(doc, indent=2) + "\n")
    return 0


def _describe(report_name: str, cfg: ExperimentConfig) -> str:
    kind_prefix = f"{cfg.kind}."
    name = report_name[len(kind_prefix):] if report_name.startswith(kind_prefix) else report_name
    if name == "reversibility":
        return "reversibility: backward step at -eps undoes the forward step"
    if name.startswith("conserved."):
        return f"conservation of {name[len('conserved.'):]} over {cfg.steps} steps"
    if name.startswith("measure."):
        return (
            f"invariant density {name[len('measure.'):]}: one-step ratio matches "
            "the map Jacobian determinant"
        )
    if name == "identities":
        return "one-step bilinear coefficient identities"
    return name


def _report(cfg: ExperimentConfig, out_dir: str) -> int:
    reports = _verify_reports(cfg)
    lines = [
        "kahan map property report",
        f"system: {cfg.kind}",
        f"eps: {_fmt(cfg.eps)}  steps: {cfg.steps}  trials: {cfg.trials}  seed: {cfg.seed}",
        "",
    ]
    for rep in reports:
        tag = "PASS" if rep.passed else "FAIL"
        lines.append(
            f"[{tag}] {_describe(rep.name, cfg)}"
            f"  (worst {rep.max_violation:.3e}, tolerance {rep.tolerance:.0e},"
            f" skipped {rep.skipped})"
        )
    all_passed = suites_passed(reports)
    desc = build_system(cfg.kind, cfg.params)
    if desc.dim == 6:
        lines.append("")
        _, _, results = _scan_orders(cfg)
        for order, hk in results:
            expected = order in desc.wronskian_orders
            ok = hk.null_dim == 1 and hk.gap_ratio >= 1e6
            if expected:
                tag = "PASS" if ok else "FAIL"
                all_passed = all_passed and ok
            else:
                tag = "INFO"
            gap = "inf" if not np.isfinite(hk.gap_ratio) else f"{hk.gap_ratio:.3e}"
            lines.append(
                f"[{tag}] order-{order} Wronskian null space"
                f"  (dimension {hk.null_dim}, spectral gap {gap})"
            )
    lines.append("")
    lines.append(f"overall: {'PASS' if all_passed else 'FAIL'}")
    path = os.path.join(out_dir, "report.txt")
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("\n".join(lines) + "\n")
    return 0 if all_passed else 1


_COMMANDS = {
    "simulate": _simulate,
    "verify": _verify,
    "hk-scan": _hk_scan,
    "report": _report,
}


def run_command(cfg: ExperimentConfig, command: str, out_dir: str = ".") -> int:
    """Run one command against a validated config; returns the exit status."""
    if command not in _COMMANDS:
        raise ValueError(f"unknown command '{command}'")
    os.makedirs(out_dir, exist_ok=True)
    return _COMMANDS[command](cfg, out_dir)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kahanmaps",
        description=(
            "Simulate and verify the birational maps obtained by polarizing "
            "quadratic vector fields"
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for command, text in (
        ("simulate", "write an orbit with per-step integral columns to orbit.csv"),
        ("verify", "run the property suites and write verify.json"),
        ("hk-scan", "write Wronskian null-space reports to hkscan.json"),
        ("report", "write a human-readable pass/fail summary to report.txt"),
    ):
        cmd = sub.add_parser(command, help=text)
        cmd.add_argument("--config", help="JSON config file")
        cmd.add_argument("--system", help="system kind (overrides config)")
        cmd.add_argument("--eps", type=float, help="step parameter")
        cmd.add_argument("--steps", type=int, help="orbit length")
        cmd.add_argument("--seed", type=int, help="seed for random draws")
        cmd.add_argument("--out", default=".", help="output directory")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    overrides = {
        "system": args.system,
        "eps": args.eps,
        "steps": args.steps,
        "seed": args.seed,
    }
    try:
        cfg = parse_config(args.config, overrides)
        return run_command(cfg, args.command, args.out)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
