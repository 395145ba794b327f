"""Command line interface.

Subcommands:

    forward    potential -> spectral data (JSON) + figures
    invert     spectral data -> potential (CSV) + figures
    roundtrip  forward map then reconstruction, with error report
    verify     admissibility gate only (exit 3 on rejection)
    sweep      stability of the reconstruction under data perturbations

Every run writes its outputs into --out (created if missing) together
with a summary.json recording the command, the config digest and the data
format version.  Exit codes: 0 success, 2 invalid input, 3 gate
rejection, 4 numerical failure.  The environment variable QTREE_LOG sets
the log level (e.g. QTREE_LOG=debug).
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys

import numpy as np

from . import __version__
from .config import RunConfig
from .contour import ContourError
from .pipeline import (DATA_FORMAT, GateError, SampledData, check_data_gate,
                       forward_data, reconstruct, roundtrip, stability_sweep)
from .potential import (PotentialError, load_potential, save_potential)
from .transition import TransitionError
from .tree import TreeError, load_tree

log = logging.getLogger("qtree")

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_GATE = 3
EXIT_NUMERICAL = 4


def _setup_logging():
    level = os.environ.get("QTREE_LOG", "warning").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")


def _load_config(args):
    cfg = RunConfig.load(args.config) if args.config else RunConfig()
    if getattr(args, "jobs", None):
        cfg = RunConfig.from_dict({**cfg.to_dict(), "jobs": args.jobs})
    if getattr(args, "seed", None) is not None:
        cfg = RunConfig.from_dict({**cfg.to_dict(), "seed": args.seed})
    return cfg


def _outdir(args):
    os.makedirs(args.out, exist_ok=True)
    return args.out


def _write_summary(out, command, cfg, extra=None):
    summary = {"command": command, "version": __version__,
               "data_format": DATA_FORMAT, "config": cfg.to_dict(),
               "config_digest": cfg.digest()}
    if extra:
        summary.update(extra)
    with open(os.path.join(out, "summary.json"), "w") as fh:
        json.dump(summary, fh, indent=2)
        fh.write("\n")


def _write_errors_csv(path, errors):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["edge_index", "rel_l2_error"])
        for j in sorted(errors):
            w.writerow([j, repr(float(errors[j]))])


def cmd_forward(args):
    from .plots import plot_potential, plot_samples

    cfg = _load_config(args)
    tree = load_tree(args.tree)
    pot = load_potential(args.potential, tree)
    out = _outdir(args)
    data = forward_data(tree, pot, cfg)
    data.save(os.path.join(out, "data.json"))
    plot_potential(pot, os.path.join(out, "potential.png"),
                   title="input potential")
    plot_samples(data, os.path.join(out, "samples.png"))
    _write_summary(out, "forward", cfg,
                   {"tau": data.tau, "n_nodes": int((data.nu.size - 1) // 2)})
    print(f"forward: {data.nu.size} samples at tau={data.tau:g} -> {out}")
    return EXIT_OK


def cmd_invert(args):
    from .plots import plot_potential, plot_samples

    cfg = _load_config(args)
    data = SampledData.load(args.data)
    out = _outdir(args)
    rec, report = reconstruct(data, cfg)
    save_potential(os.path.join(out, "potential.csv"), rec)
    plot_potential(rec, os.path.join(out, "potential.png"),
                   title="recovered potential")
    plot_samples(data, os.path.join(out, "samples.png"))
    with open(os.path.join(out, "report.json"), "w") as fh:
        json.dump(report, fh, indent=2)
        fh.write("\n")
    _write_summary(out, "invert", cfg, {"tau": report["tau"],
                                        "steps": len(report["steps"])})
    print(f"invert: {data.tree.m} edges recovered -> {out}")
    return EXIT_OK


def cmd_roundtrip(args):
    from .plots import plot_potential

    cfg = _load_config(args)
    tree = load_tree(args.tree)
    pot = load_potential(args.potential, tree)
    out = _outdir(args)
    rec, errors, report = roundtrip(tree, pot, cfg)
    save_potential(os.path.join(out, "recovered.csv"), rec)
    _write_errors_csv(os.path.join(out, "errors.csv"), errors)
    plot_potential(rec, os.path.join(out, "comparison.png"), reference=pot,
                   title="recovered vs input")
    with open(os.path.join(out, "report.json"), "w") as fh:
        json.dump(report, fh, indent=2)
        fh.write("\n")
    _write_summary(out, "roundtrip", cfg, {"errors": errors})
    worst = max(errors.values())
    print(f"roundtrip: worst relative L2 error {worst:.3g} -> {out}")
    return EXIT_OK


def cmd_verify(args):
    cfg = _load_config(args)
    data = SampledData.load(args.data)
    out = _outdir(args)
    verdict = {"accepted": True, "reason": None}
    try:
        check_data_gate(data, cfg)
    except GateError as exc:
        verdict = {"accepted": False, "reason": str(exc)}
    with open(os.path.join(out, "verify.json"), "w") as fh:
        json.dump(verdict, fh, indent=2)
        fh.write("\n")
    _write_summary(out, "verify", cfg, verdict)
    if verdict["accepted"]:
        print("verify: data accepted")
        return EXIT_OK
    print(f"verify: data rejected: {verdict['reason']}", file=sys.stderr)
    return EXIT_GATE


def cmd_sweep(args):
    from .plots import plot_sweep

    cfg = _load_config(args)
    tree = load_tree(args.tree)
    pot = load_potential(args.potential, tree)
    amplitudes = [float(a) for a in args.amplitudes.split(",") if a.strip()]
    if not amplitudes or any(a <= 0 for a in amplitudes):
        raise ValueError("--amplitudes must be positive numbers")
    out = _outdir(args)
    report = stability_sweep(tree, pot, amplitudes, cfg, seed=cfg.seed)
    with open(os.path.join(out, "sweep.json"), "w") as fh:
        json.dump(report, fh, indent=2)
        fh.write("\n")
    with open(os.path.join(out, "sweep.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        edges = sorted(report["rows"][0]["ratios"])
        w.writerow(["amplitude"] + [f"ratio_edge_{j}" for j in edges])
        for row in report["rows"]:
            w.writerow([repr(row["amplitude"])]
                       + [repr(float(row["ratios"][j])) for j in edges])
    plot_sweep(report, os.path.join(out, "sweep.png"))
    _write_summary(out, "sweep", cfg, {"amplitudes": amplitudes})
    print(f"sweep: {len(amplitudes)} amplitudes -> {out}")
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(
        prog="qtree",
        description="Forward and inverse Sturm-Liouville spectral solver "
                    "on metric trees")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, tree=False, potential=False, data=False):
        if tree:
            sp.add_argument("--tree", required=True,
                            help="tree spec JSON file")
        if potential:
            sp.add_argument("--potential", required=True,
                            help="per-edge potential CSV file")
        if data:
            sp.add_argument("--data", required=True,
                            help="spectral data JSON file")
        sp.add_argument("--config", help="RunConfig JSON file")
        sp.add_argument("--out", required=True, help="output directory")
        sp.add_argument("--jobs", type=int, help="worker threads")
        sp.add_argument("--seed", type=int, help="seed for randomized steps")

    sp = sub.add_parser("forward", help="potential -> spectral data")
    common(sp, tree=True, potential=True)
    sp.set_defaults(fn=cmd_forward)

    sp = sub.add_parser("invert", help="spectral data -> potential")
    common(sp, data=True)
    sp.set_defaults(fn=cmd_invert)

    sp = sub.add_parser("roundtrip", help="forward map then reconstruction")
    common(sp, tree=True, potential=True)
    sp.set_defaults(fn=cmd_roundtrip)

    sp = sub.add_parser("verify", help="admissibility gate only")
    common(sp, data=True)
    sp.set_defaults(fn=cmd_verify)

    sp = sub.add_parser("sweep", help="stability under data perturbations")
    common(sp, tree=True, potential=True)
    sp.add_argument("--amplitudes", default="1e-2,5e-3,2.5e-3",
                    help="comma separated perturbation amplitudes")
    sp.set_defaults(fn=cmd_sweep)
    return p


def main(argv=None):
    _setup_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except TransitionError as exc:
        # covers GateError: data inconsistent with the admissible class
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_GATE
    except (TreeError, PotentialError, ValueError, OSError,
            json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (ContourError, np.linalg.LinAlgError,
            FloatingPointError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
