"""Command line front end: plan | simulate | verify | report.

Exit codes: 0 success (all checks pass), 1 a check failed, 2 usage or
configuration error, 3 I/O error.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .artifacts import (config_from_json, load_config, write_json, write_moment_table,
                        write_run_directory)
from .errors import ConfigurationError, UnsupportedRegimeError
from .planner import materialize_spectra, plan_schedule, plan_summary
from .solvers import fixed_point_regime_check, simulate
from .verification import SUITES, default_workers, reports_to_json, reports_to_text, run_suite

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_IO = 0, 1, 2, 3
OUT_ENV = "BURGERS_LEVELS_OUT"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _out_dir(args, default_name):
    if args.out:
        return Path(args.out)
    return Path(os.environ.get(OUT_ENV, ".")) / default_name


def cmd_plan(args) -> int:
    if args.alpha is None:
        raise ConfigurationError("plan needs --alpha")
    plan = plan_schedule(args.alpha)
    if args.K:
        plan = materialize_spectra(plan, args.K)
    out = _out_dir(args, "plan")
    out.mkdir(parents=True, exist_ok=True)
    write_json(out / "plan.json", plan.to_json())
    print(plan_summary(plan))
    print(f"wrote {out / 'plan.json'}")
    return EXIT_OK


def cmd_simulate(args) -> int:
    if not args.config:
        raise ConfigurationError("simulate needs --config")
    doc = load_config(args.config)
    if args.seed is not None:
        doc["seed"] = args.seed
    cfg = config_from_json(doc)
    system = doc.get("system", "x" if cfg.plan.n >= 1 else "direct")
    samples = range(int(doc.get("samples", 1)))
    result = simulate(cfg, system, samples, split=bool(doc.get("split", False)),
                      direct=system != "direct" and bool(doc.get("direct", False)))
    out = _out_dir(args, "run")
    write_run_directory(out, cfg, result, config_doc=doc)
    deaths = {k: int((v == v).sum()) for k, v in result["death_times"].items()}
    regime = None
    if cfg.plan.n >= 1:
        regime = fixed_point_regime_check(0.5 - cfg.plan.alpha, 0.5 - cfg.plan.beta_n,
                                          0.5 - cfg.plan.beta_n)
    write_json(out / "summary.json", {"system": system, "blowups": deaths,
                                      "fixed_point_regime": regime})
    print(f"simulated {system} system, {len(result['samples'])} sample(s); blow-ups: {deaths}")
    print(f"wrote {out}")
    return EXIT_OK


def _write_reports(out: Path, suite, seed, reports):
    out.mkdir(parents=True, exist_ok=True)
    doc = reports_to_json(reports, suite, seed)
    write_json(out / "report.json", doc)
    (out / "report.txt").write_text(reports_to_text(reports) + "\n")
    fits = out / "fits"
    fits.mkdir(exist_ok=True)
    for i, r in enumerate(reports):
        if r.fit_rows:
            name = "".join(ch if ch.isalnum() or ch in "-_=." else "_" for ch in r.check)
            with open(fits / f"{i:02d}_{name}.csv", "w") as fh:
                for row in r.fit_rows:
                    fh.write(" ".join(repr(float(x)) for x in row) + "\n")
    return doc


def cmd_verify(args) -> int:
    suite = args.suite or "fast"
    if suite not in SUITES:
        raise ConfigurationError(f"unknown suite {suite!r}; choose from {sorted(SUITES)}")
    seed = 0 if args.seed is None else args.seed
    workers = args.workers or default_workers()
    reports = run_suite(suite, seed, workers)
    out = _out_dir(args, f"verify-{suite}")
    doc = _write_reports(out, suite, seed, reports)
    write_json(out / "config.json", {"suite": suite, "seed": seed})
    print(reports_to_text(reports))
    print(f"wrote {out}")
    return EXIT_OK if doc["all_pass"] else EXIT_FAIL


def cmd_report(args) -> int:
    """Print an existing report, or rerun the suite recorded in a directory."""
    if not args.out:
        raise ConfigurationError("report needs --out pointing at a verify directory")
    out = Path(args.out)
    path = out / "report.json"
    doc = json.loads(path.read_text())
    if args.suite:
        # reproduce: rerun the recorded suite and compare
        cfg = json.loads((out / "config.json").read_text())
        reports = run_suite(cfg["suite"], cfg["seed"], args.workers or default_workers())
        fresh = reports_to_json(reports, cfg["suite"], cfg["seed"])
        same = json.dumps(fresh, sort_keys=True) == json.dumps(doc, sort_keys=True)
        print("reproduced bit-identically" if same else "report differs from the recorded one")
        doc = fresh
    for r in doc["reports"]:
        print(f"[{r['verdict'].upper():>13s}] {r['check']}: measured {r['measured']} "
              f"predicted {r['predicted']} tol {r['tolerance']}")
    return EXIT_OK if doc["all_pass"] else EXIT_FAIL


COMMANDS = {"plan": cmd_plan, "simulate": cmd_simulate, "verify": cmd_verify, "report": cmd_report}


def build_parser():
    p = _Parser(prog="burgers-levels", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--config", help="JSON run configuration (simulate)")
    p.add_argument("--out", help=f"output directory (default under ${OUT_ENV} or .)")
    p.add_argument("--seed", type=int, help="64-bit seed base")
    p.add_argument("--workers", type=int, help="worker processes (default: available cores)")
    p.add_argument("--suite", help=f"verification suite: {', '.join(sorted(SUITES))}")
    p.add_argument("--alpha", type=float, help="noise roughness (plan)")
    p.add_argument("--K", type=int, help="cutoff for materialized spectra (plan)")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.seed is not None and not 0 <= args.seed < 2 ** 64:
        print("error: --seed must be an unsigned 64-bit integer", file=sys.stderr)
        return EXIT_USAGE
    if args.workers is not None and args.workers < 1:
        print("error: --workers must be positive", file=sys.stderr)
        return EXIT_USAGE
    try:
        return COMMANDS[args.command](args)
    except UnsupportedRegimeError as exc:
        print(f"error: unsupported regime: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ConfigurationError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
