"""Command-line front end: ``doflab region|sweep|verify|fixtures``."""
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import __version__
from .ais import NAMED_AIS, ais_instance, expected_sizes_sweep, toy_example_check
from .channel import config_from_dict, normalize_config
from .engine import Label
from .errors import BudgetExceeded, ConfigError, DomainError, RegionError
from .lab import (NAMED_SUMSET, Block, LemmaOptions, SumsetInstance, ffgt_blocks,
                  verify_lemma3, verify_lemma_example1, verify_lemma_example2,
                  verify_lemma_general, verify_sumset)
from .power_levels import as_fraction
from .region import region, sweep_csv, sweep_rows
from .report import DEFAULT_SWEEP, EXIT_CODES, env_threads

SUITES = ("lemma1", "lemma2", "lemma3", "lemma4", "lemma5", "sumset", "ais", "toy")
BAD_CONFIG = 2


def _rational(text: str):
    try:
        return as_fraction(text)
    except (ValueError, ZeroDivisionError, TypeError) as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def _emit(text: str, out: str | None):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _seed(args, cfg: dict) -> int:
    if args.seed is not None:
        return args.seed
    if "DOFLAB_SEED" in os.environ:
        try:
            return int(os.environ["DOFLAB_SEED"])
        except ValueError as exc:
            raise ConfigError("DOFLAB_SEED must be an integer") from exc
    return int(cfg.get("seed", 0))


def _threads(args) -> int:
    if args.threads is not None:
        if args.threads < 1:
            raise ConfigError("--threads must be positive")
        return args.threads
    return env_threads()


def _lemma_opts(cfg: dict, seed: int, threads: int) -> LemmaOptions:
    lab = cfg.get("label", {})
    return LemmaOptions(
        P_sweep=tuple(int(P) for P in cfg.get("P_sweep", DEFAULT_SWEEP)),
        draws=int(cfg.get("draws", 200)), seed=seed, tau=float(cfg.get("tau", 0.15)),
        label=Label(lab.get("kind", "msb"), int(lab.get("coord", 0))),
        zero_inputs=tuple(cfg.get("zero_inputs", ())), threads=threads)


def run_suite(suite: str, cfg: dict, seed: int, threads: int):
    """Run one verification suite; returns a report with .verdict and .to_json()."""
    if suite in ("lemma1", "lemma2", "lemma4", "lemma5"):
        opts = _lemma_opts(cfg, seed, threads)
        inst = cfg.get("instance")
        if suite == "lemma1":
            return verify_lemma_example1(config_from_dict(inst) if inst else (5, 2, 3, "1/2", "2/3"), opts)
        if suite == "lemma2":
            return verify_lemma_example2(config_from_dict(inst) if inst else (4, 1, 3, "1/4", "1/2"), opts)
        if inst is None:
            raise ConfigError(f"{suite} needs an 'instance' block")
        return verify_lemma_general(config_from_dict(inst), "ge1" if suite == "lemma4" else "lt1", opts)
    if suite == "lemma3":
        opts = _lemma_opts(cfg, seed, threads)
        if "blocks" in cfg:
            blocks = [Block(int(s), as_fraction(a), as_fraction(b)) for s, a, b in cfg["blocks"]]
            N1, N2 = int(cfg["N1"]), int(cfg["N2"])
        elif "instance" in cfg:
            c = config_from_dict(cfg["instance"]).lab_ready()
            blocks, N1, N2 = ffgt_blocks(c), c.N1, c.N2
        else:
            raise ConfigError("lemma3 needs 'blocks' (with N1, N2) or an 'instance'")
        return verify_lemma3(blocks, N1, N2, opts, shared=bool(cfg.get("shared", False)))
    if suite == "sumset":
        if "definition" in cfg:
            inst = SumsetInstance.from_dict(cfg["definition"])
        elif cfg.get("instance") in NAMED_SUMSET:
            inst = NAMED_SUMSET[cfg["instance"]]()
        else:
            raise ConfigError(f"sumset needs 'definition' or 'instance' in {sorted(NAMED_SUMSET)}")
        return verify_sumset(inst, tuple(int(P) for P in cfg.get("P_sweep", DEFAULT_SWEEP)),
                             int(cfg.get("draws", 200)), seed, float(cfg.get("tau", 0.15)),
                             threads, bool(cfg.get("enforce_condt4", True)))
    if suite == "ais":
        name = cfg.get("instance", "toy")
        if name not in NAMED_AIS:
            raise ConfigError(f"unknown AIS instance {name!r}")
        return expected_sizes_sweep(ais_instance(name, **cfg.get("params", {})),
                                    tuple(int(p) for p in cfg.get("Pbar", (4, 8, 16, 32))),
                                    int(cfg.get("draws", 1000)), seed)
    if suite == "toy":
        return toy_example_check(tuple(int(P) for P in cfg.get("P_sweep", DEFAULT_SWEEP)),
                                 int(cfg.get("draws", 200)), seed, cfg.get("cut", "4/5"),
                                 bool(cfg.get("same", False)),
                                 tuple(cfg.get("zero_inputs", ())),
                                 float(cfg.get("tau", 0.15)), threads)
    raise ConfigError(f"unknown suite {suite!r}")


def cmd_region(args) -> int:
    reg = region(normalize_config(args.M, args.N1, args.N2, args.b1, args.b2))
    _emit(reg.to_json() if args.format == "json" else reg.to_csv(), args.out)
    return 0


def cmd_sweep(args) -> int:
    grid = [_rational(g) for g in args.grid.split(",")] if args.grid else args.steps
    rows = sweep_rows(args.M, args.N1, args.N2, grid)
    text = sweep_csv(rows) if args.format == "csv" else json.dumps(rows, indent=2) + "\n"
    _emit(text, args.out)
    return 0


def cmd_verify(args) -> int:
    path = Path(args.config)
    try:
        cfg = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    suite = args.suite or cfg.get("suite")
    if suite not in SUITES:
        raise ConfigError(f"suite must be one of {', '.join(SUITES)}")
    rep = run_suite(suite, cfg, _seed(args, cfg), _threads(args))
    _emit(rep.to_json() if args.format == "json" else rep.to_csv(), args.out)
    print(f"{suite}: {rep.verdict}", file=sys.stderr)
    return EXIT_CODES[rep.verdict]


def default_fixtures() -> dict[str, dict]:
    """Config files for every suite, keyed by path relative to the fixture root."""
    ex1 = {"M": 5, "N1": 2, "N2": 3, "beta1": "1/2", "beta2": "2/3"}
    ex2 = {"M": 4, "N1": 1, "N2": 3, "beta1": "1/4", "beta2": "1/2"}
    base = {"P_sweep": list(DEFAULT_SWEEP), "draws": 200, "seed": 0}
    out = {
        "instances/example1.json": ex1,
        "instances/example2.json": ex2,
        "instances/lemma1.json": {"suite": "lemma1", "instance": ex1, **base},
        "instances/lemma2.json": {"suite": "lemma2", "instance": ex2, **base},
        "instances/lemma3_ffgt.json": {"suite": "lemma3", "instance": ex1, **base},
        "instances/lemma4.json": {"suite": "lemma4", "instance": ex1, **base},
        "instances/lemma5.json": {"suite": "lemma5", "instance": ex2, **base},
        "ais/toy.json": {"suite": "ais", "instance": "toy", "Pbar": [4, 8, 16, 32],
                         "draws": 1000, "seed": 0},
        "ais/identity.json": {"suite": "ais", "instance": "identity", "Pbar": [4, 8, 16, 32],
                              "draws": 50, "seed": 0},
        "ais/lossy.json": {"suite": "ais", "instance": "lossy", "Pbar": [4, 8, 16, 32],
                           "draws": 200, "seed": 0},
        "ais/toy_check.json": {"suite": "toy", "cut": "4/5", **base},
    }
    for name, make in NAMED_SUMSET.items():
        out[f"sumset/{name}.json"] = {"suite": "sumset", "definition": make().to_dict(),
                                      "enforce_condt4": name != "condt4_violation", **base}
    out["sumset_example1.json"] = out["sumset/shared_y2.json"]
    out["negative_control.json"] = out["ais/lossy.json"]
    return out


def cmd_fixtures(args) -> int:
    root = Path(args.out)
    for rel, body in default_fixtures().items():
        p = root / rel
        p.parent.mkdir(parents=True, exist_ok=True)
        p.write_text(json.dumps(body, indent=2) + "\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="doflab", description=__doc__)
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    def antennas(p):
        p.add_argument("-M", type=int, required=True)
        p.add_argument("-N1", type=int, required=True)
        p.add_argument("-N2", type=int, required=True)

    def output(p, default="json"):
        p.add_argument("--format", choices=("json", "csv"), default=default)
        p.add_argument("--out", metavar="PATH")

    p = sub.add_parser("region", help="DoF region for one configuration")
    antennas(p)
    p.add_argument("-b1", type=_rational, required=True, metavar="BETA1")
    p.add_argument("-b2", type=_rational, required=True, metavar="BETA2")
    output(p)
    p.set_defaults(func=cmd_region)

    p = sub.add_parser("sweep", help="sum DoF and vertices over a (beta1, beta2) grid")
    antennas(p)
    g = p.add_mutually_exclusive_group()
    g.add_argument("--steps", type=int, default=11, help="points per axis on [0,1]")
    g.add_argument("--grid", help="comma-separated rational grid values")
    output(p, "csv")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("verify", help="run a verification suite")
    p.add_argument("--suite", choices=SUITES)
    p.add_argument("--config", required=True, metavar="PATH")
    p.add_argument("--seed", type=int)
    p.add_argument("--threads", type=int)
    output(p)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("fixtures", help="write the default suite configs")
    p.add_argument("--out", default="fixtures", metavar="DIR")
    p.set_defaults(func=cmd_fixtures)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, DomainError, RegionError, BudgetExceeded) as exc:
        print(f"doflab: error: {exc}", file=sys.stderr)
        return BAD_CONFIG


if __name__ == "__main__":
    sys.exit(main())
