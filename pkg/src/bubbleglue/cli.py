"""Command-line interface: ``bubbleglue <command> [options]``.

Exit status is 0 on success, 1 on numerical failure and 2 for invalid or
inadmissible input.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import balancing, convergence, kernel, solver
from .analysis import GridSpec, build_metric_and_weight, check_pregluing_estimates, check_sobolev_c0
from .artifacts import ExperimentConfig, SchemaError, artifact, dumps, read_json, validate, write_csv, write_json
from .bubbles import BubbleError, BubbleMap, _as_complex, map_from_json, map_to_json
from .gluing import GluingError, GluingParameter, build_glued, dbar_qupsilon
from .selftest import run_selftest
from .trees import TreeError

EXIT_OK, EXIT_NUMERIC, EXIT_INPUT = 0, 1, 2


class InputError(Exception):
    pass


# --------------------------------------------------------------------------
# loading
# --------------------------------------------------------------------------

def _load_map(path: str) -> BubbleMap:
    return map_from_json(read_json(path, "bubble_map"))


def _load_necks(path: str) -> dict[int, complex]:
    doc = read_json(path, "necks")
    return {int(n["node"]): _as_complex(n["v"]) for n in doc["necks"]}


def _config(args) -> ExperimentConfig:
    cfg = ExperimentConfig.from_json(read_json(args.config, "config")) if args.config else ExperimentConfig(seed=0)
    over = {}
    for key in ("seed", "p", "tol", "max_iter"):
        val = getattr(args, key, None)
        if val is not None:
            over[key] = val
    return cfg.with_overrides(**over) if over else cfg


def parse_schedule(text: str) -> list[float]:
    """``a:b:Nlog`` (log-spaced), ``a:b:Nlin`` or a comma-separated list."""
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise InputError(f"schedule {text!r} must look like 1e-2:1e-5:7log")
        a, b, spec = float(parts[0]), float(parts[1]), parts[2]
        kind = "log" if spec.endswith("log") else "lin" if spec.endswith("lin") else None
        if kind is None:
            raise InputError(f"schedule count {spec!r} must end in 'log' or 'lin'")
        n = int(spec[:-3])
        if n < 1:
            return []
        if kind == "log":
            if a <= 0 or b <= 0:
                raise InputError("log schedules need positive endpoints")
            return [float(x) for x in np.geomspace(a, b, n)]
        return [float(x) for x in np.linspace(a, b, n)]
    return [float(x) for x in text.split(",") if x.strip()]


# --------------------------------------------------------------------------
# commands
# --------------------------------------------------------------------------

def cmd_glue(args, cfg):
    b = _load_map(args.input)
    gp = GluingParameter.make(b, _load_necks(args.necks))
    gc = build_glued(gp)
    rng = np.random.default_rng(cfg.seed)
    worst = 0.0
    for a in gc.annuli:
        if a.component != a.kept_component:
            continue
        # points inside the bubble disk and just outside the neck, away from A^+ and A^-
        t = np.concatenate([rng.uniform(0.1, 0.45, 8), rng.uniform(2.2, 3.0, 8)])
        z = a.center + t * a.middle * np.exp(2j * np.pi * rng.uniform(size=t.size))
        rel = dbar_qupsilon(gp, a.kept_component, z)["relative"]
        worst = max(worst, float(np.max(rel)))
    return {"glued_curve": gc.to_json(), "delta_bound": gp.check_admissible() if gp.glued else None,
            "holomorphic_defect_off_necks": worst}


def cmd_norms(args, cfg):
    b = _load_map(args.input)
    gp = GluingParameter.make(b, _load_necks(args.necks))
    surface = build_metric_and_weight(gp, cfg.grid)
    est = check_pregluing_estimates(gp, cfg.p, surface=surface)
    sob = check_sobolev_c0(gp, cfg.p, trials=args.trials, seed=cfg.seed, surface=surface)
    return {"pregluing": est, "sobolev": sob, "surface": surface.to_json()}


def cmd_balance(args, cfg):
    b = _load_map(args.input)
    comps = None if not args.include_root else sorted(b.tree.elements)
    before = {i: balancing.balance_functionals(b, i).to_json() for i in (comps or sorted(set(b.tree.elements) - {b.tree.root}))}
    out, info = balancing.balance_solve(b, tol=args.balance_tol, max_iter=cfg.max_iter, components=comps)
    after = {i: balancing.balance_functionals(out, i).to_json() for i in before}
    return {"balanced_map": map_to_json(out), "parameters": info, "before": before, "after": after}


def cmd_kernel(args, cfg):
    b = _load_map(args.input)
    comps = {}
    for i, u in b.maps:
        kb = kernel.kernel_basis(u)
        comps[i] = {
            "n": u.n,
            "degree": u.degree,
            "dimension": kb.dim,
            "expected": kernel.index_half(u.n, u.degree),
            "check": kernel.check_kernel(kb, seed=cfg.seed),
            "singular_values": kb.singular_values,
        }
    tuples, sv = solver.matched_kernel(b)
    dim = next(iter(tuples.values())).shape[0]
    return {
        "components": comps,
        "regularity": kernel.check_regularity(b),
        "matched_dimension": dim,
        "index_half": solver.index_half_glued(b),
    }


def cmd_correct(args, cfg):
    b = _load_map(args.input)
    gp = GluingParameter.make(b, _load_necks(args.necks))
    if gp.glued:
        gp.check_admissible()
    st = solver.picard_correct(gp, cfg.p, tol=cfg.tol, max_iter=cfg.max_iter, spec=cfg.grid)
    res = st.to_json()
    if not cfg.record_timing:
        res.pop("runtime_s", None)
    return res


def _sweep_row(job):
    b, size, p, grid = job
    return convergence.neck_sweep(b, [size], p, spec=grid)[0]


def cmd_sweep(args, cfg):
    b = _load_map(args.input)
    schedule = parse_schedule(args.schedule)
    workers = max(1, int(os.environ.get("BUBBLEGLUE_THREADS", "1")))
    jobs = [(b, s, cfg.p, cfg.grid) for s in schedule]
    if workers > 1 and len(jobs) > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=workers) as ex:
            rows = list(ex.map(_sweep_row, jobs))
    else:
        rows = [_sweep_row(j) for j in jobs]
    for k, r in enumerate(rows):
        r["index"] = k
        if not cfg.record_timing:
            r["runtime_s"] = ""
    return rows


def _load_sequence(path: str):
    doc = read_json(path, "sequence")
    grid = GridSpec(**doc["grid"]) if "grid" in doc else None
    seq, wit = [], []
    for item in doc["items"]:
        seq.append(map_from_json(item["map"]))
        w = item["witness"]
        wit.append(convergence.Witness(
            {int(n["node"]): _as_complex(n["v"]) for n in w["necks"]},
            {int(p["node"]): _as_complex(p["value"]) for p in w.get("x", [])},
            {int(p["node"]): _as_complex(p["value"]) for p in w.get("y", [])},
        ))
    return seq, wit, grid


def cmd_converge(args, cfg):
    target = _load_map(args.target)
    seq, wit, grid = _load_sequence(args.sequence)
    cert = convergence.converge_check(target, seq, wit, spec=grid or cfg.grid)
    return cert.to_json()


def cmd_selftest(args, cfg):
    return run_selftest(cfg.seed, echo=lambda line: print(line, file=sys.stderr if not args.emit else sys.stdout))


COMMANDS = {
    "glue": cmd_glue,
    "norms": cmd_norms,
    "balance": cmd_balance,
    "kernel": cmd_kernel,
    "correct": cmd_correct,
    "sweep": cmd_sweep,
    "converge": cmd_converge,
    "selftest": cmd_selftest,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="bubbleglue", description="Pregluing and correction of bubble maps into CP^n.")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, needs_input=True, necks=False):
        if needs_input:
            p.add_argument("--input", required=True, help="bubble map JSON")
        if necks:
            p.add_argument("--necks", required=True, help="neck parameters JSON")
        p.add_argument("--config", help="experiment configuration JSON")
        p.add_argument("--seed", type=int)
        p.add_argument("--emit", help="output path (stdout when omitted)")
        return p

    common(sub.add_parser("glue", help="build the glued curve and check admissibility"), necks=True)
    p = common(sub.add_parser("norms", help="pregluing estimate and C0 bound"), necks=True)
    p.add_argument("--p", type=float)
    p.add_argument("--trials", type=int, default=50)
    p = common(sub.add_parser("balance", help="balance a bubble map"))
    p.add_argument("--include-root", action="store_true", help="also balance the root component")
    p.add_argument("--balance-tol", type=float, default=1e-10)
    p.add_argument("--max-iter", dest="max_iter", type=int)
    common(sub.add_parser("kernel", help="kernel bases and regularity"))
    p = common(sub.add_parser("correct", help="Picard correction of the preglued map"), necks=True)
    p.add_argument("--p", type=float)
    p.add_argument("--tol", type=float)
    p.add_argument("--max-iter", dest="max_iter", type=int)
    p = common(sub.add_parser("sweep", help="neck-size sweep to CSV"))
    p.add_argument("--schedule", required=True, help="e.g. 1e-2:1e-5:7log")
    p.add_argument("--p", type=float)
    p = common(sub.add_parser("converge", help="Gromov convergence certificate"), needs_input=False)
    p.add_argument("--target", required=True)
    p.add_argument("--sequence", required=True)
    common(sub.add_parser("selftest", help="run the property scoreboard"), needs_input=False)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _config(args)
        result = COMMANDS[args.command](args, cfg)
    except SchemaError as exc:
        print(f"schema violation at {exc}", file=sys.stderr)
        return EXIT_INPUT
    except GluingError as exc:
        print(f"inadmissible gluing parameter: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (BubbleError, TreeError, InputError, ValueError, KeyError, FileNotFoundError) as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (solver.SolverError, balancing.BalanceError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    if args.command == "sweep":
        text = write_csv(args.emit, result, convergence.SWEEP_COLUMNS, cfg)
        if not args.emit:
            sys.stdout.write(text)
        failed = any(r["error"] for r in result)
        return EXIT_NUMERIC if failed else EXIT_OK
    doc = artifact(args.command, cfg, result)
    validate(json.loads(dumps(doc)), "artifact")
    if args.emit:
        write_json(args.emit, doc)
    else:
        sys.stdout.write(dumps(doc))
    if args.command == "selftest" and not result["passed"]:
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
