"""Command-line interface.

Subcommands
-----------
ft       transform round-trip and Parseval check
symbol   quantize and extract a built-in family, fit its order
wxi      mollifier diagnostics
garding  full pipeline with report.json and CSV sidecars
decay    defect slopes only
report   re-render an existing report.json and its CSVs

The exit status is 0 exactly when every pass/fail flag of the run passes,
1 when some flag fails and 2 on configuration or stage errors.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .config import ExperimentConfig, load_config
from .errors import LiequantError
from .report import dumps, emit_json, emit_outputs, load_report


def _parse_cutoffs(text: str) -> list:
    return [float(t) for t in text.split(",") if t.strip()]


def build_config(args) -> ExperimentConfig:
    """Config file (if any) overridden by command-line flags."""
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    data = cfg.to_dict()
    for key in ("group", "seed", "out", "tol", "family"):
        val = getattr(args, key, None)
        if val is not None:
            data[key] = val
    if args.cutoffs is not None:
        data["cutoffs"] = _parse_cutoffs(args.cutoffs)
    return ExperimentConfig(**data)


def _write(out: str, name: str, payload: dict) -> None:
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    (path / name).write_text(dumps(payload) + "\n", encoding="utf-8")
    print(dumps(payload))


def cmd_ft(cfg: ExperimentConfig) -> bool:
    from .diagnostics import ft_roundtrip
    spec = cfg.spec
    rows = [ft_roundtrip(spec, lev, seed=cfg.seed) for lev in cfg.cutoffs]
    _write(cfg.out, "ft.json", {"group": spec.name, "levels": rows})
    return all(r["passed"] for r in rows)


def cmd_symbol(cfg: ExperimentConfig) -> bool:
    from .diagnostics import symbol_roundtrip
    from .pipeline import _fitted_order, build_symbol
    rows = []
    for lev in cfg.cutoffs:
        sigma = build_symbol(cfg, lev)
        row = symbol_roundtrip(sigma)
        row.update(level=lev, order=sigma.order, fitted_order=_fitted_order(sigma))
        rows.append(row)
    _write(cfg.out, "symbol.json", {"group": cfg.spec.name, "family": cfg.family, "levels": rows})
    return all(r["passed"] for r in rows)


def cmd_wxi(cfg: ExperimentConfig) -> bool:
    from .diagnostics import mollifier_diagnostics
    from .mollifier import MollifierSpec
    spec = cfg.spec
    weights = [spec.weight_of_level(lev) for lev in cfg.cutoffs]
    rows = mollifier_diagnostics(spec, weights, MollifierSpec(r=cfg.mollifier_r), seed=cfg.seed)
    ok = all(abs(r["norm"] - 1) <= 1e-12 and r["support_exact"]
             and max(r["evenness_residual"], r["centrality_residual"]) <= 1e-9 for r in rows)
    _write(cfg.out, "wxi.json", {"group": spec.name, "levels": rows, "passed": ok})
    return ok


def _run(cfg: ExperimentConfig) -> bool:
    from .pipeline import run_config
    rep = run_config(cfg)
    emit_outputs(rep, cfg.out)
    for name, flag in sorted(rep.flags.items()):
        print(f"{'PASS' if flag['passed'] else 'FAIL'} {name}")
    return rep.passed


def cmd_garding(cfg: ExperimentConfig) -> bool:
    return _run(cfg)


def cmd_decay(cfg: ExperimentConfig) -> bool:
    cfg.stages = ["decay"]
    return _run(cfg)


def cmd_report(cfg: ExperimentConfig) -> bool:
    data = load_report(Path(cfg.out) / "report.json")
    emit_json(data, cfg.out)
    return bool(data.get("passed", True))


COMMANDS = {"ft": cmd_ft, "symbol": cmd_symbol, "wxi": cmd_wxi, "garding": cmd_garding,
            "decay": cmd_decay, "report": cmd_report}


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="liequant", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in COMMANDS.items():
        p = sub.add_parser(name, help=fn.__name__.replace("cmd_", ""))
        p.add_argument("--config", help="key=value or JSON config file")
        p.add_argument("--group", help="su2 or torus<n>")
        p.add_argument("--cutoffs", help="comma-separated ascending levels")
        p.add_argument("--seed", type=int)
        p.add_argument("--out", help="output directory")
        p.add_argument("--tol", type=float, help="relative eigenvalue tolerance")
        p.add_argument("--family", help="built-in symbol family")
    return parser


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    try:
        cfg = build_config(args)
        ok = COMMANDS[args.command](cfg)
    except (LiequantError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
