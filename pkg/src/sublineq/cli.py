"""Command-line entry point.

Subcommands: solve, certify, kato, intrinsic, kernel-check, scenario.
Artifacts are JSON reports plus plot-ready CSV. Exit codes: 0 success,
1 configuration error, 2 violated certificates, 3 nonexistence-flagged.
The output directory can be overridden with the SUBLINEQ_OUTDIR variable.
"""

import argparse
import csv
import datetime
import json
import os
import sys

import numpy as np

from . import certify
from .config import load_config, build_problem
from .errors import SublineqError, ConfigurationError
from .intrinsic import intrinsic_potential
from .kernels import estimate_qm_constant, check_wmp
from .potentials import kato_modulus, kato_tail
from .scenarios import run_scenario, scenario_list
from .solver import schauder_iterate, solve_from_above, solve_minimal

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_VIOLATED = 2
EXIT_NONEXISTENCE = 3


def _outdir(args_dir, cfg_dir):
    out = os.environ.get("SUBLINEQ_OUTDIR") or args_dir or cfg_dir or "."
    os.makedirs(out, exist_ok=True)
    return out


def _write_json(path, payload):
    payload = dict(payload)
    payload["metadata"] = {"timestamp": datetime.datetime.now().isoformat(), "tool": "sublineq"}
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, default=_json_default)
    return path


def _json_default(x):
    if isinstance(x, (np.floating, np.integer, np.bool_)):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    raise TypeError(f"not JSON serializable: {type(x)}")


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)
    return path


def _write_solution_csv(path, problem, report, cert):
    n = problem.kernel.domain.dim
    uv = report.solution.values
    cst = report.constants
    lower = problem.gsig0.values + problem.H.values
    upper = problem.gsig0.values + problem.H.values
    for q, f in zip(problem.exponents, problem.gsig):
        lower = lower + cst.c_lower * f.values ** (1.0 / (1.0 - q))
        upper = upper + cst.c_upper**problem.q1 * f.values
    rows = [list(map(float, p)) + [float(u), float(lo), float(hi)]
            for p, u, lo, hi in zip(problem.points, uv, lower, upper)]
    return _write_csv(path, [f"x{i + 1}" for i in range(n)] + ["u", "lower", "upper"], rows)


def cmd_solve(args):
    cfg = load_config(args.config)
    problem, mode = build_problem(cfg["problem_cfg"], cfg["solver_cfg"], cfg["seed"])
    out = _outdir(args.out, cfg["output_dir"])
    solver = {"minimal": solve_minimal, "from-above": solve_from_above,
              "schauder": schauder_iterate}.get(mode)
    if solver is None:
        raise ConfigurationError(f"unknown solver mode {mode!r}")
    report = solver(problem)
    payload = report.to_json()
    if report.status == "nonexistence-flagged":
        _write_json(os.path.join(out, "report.json"), payload)
        print(f"nonexistence-flagged: {report.diagnostics.get('message', '')}")
        return EXIT_NONEXISTENCE
    certs = [certify.check_bilateral(report.solution, problem, report.constants)]
    res = certify.residual(report.solution, problem)
    payload["certificates"] = [c.to_json() for c in certs]
    payload["residual"] = res
    _write_json(os.path.join(out, "report.json"), payload)
    _write_solution_csv(os.path.join(out, "solution.csv"), problem, report, certs[0])
    violated = any(c.status == "violated" for c in certs)
    print(f"status={report.status} iterations={report.iterations} residual={res:.3e} "
          f"certificates={'violated' if violated else 'hold'}")
    return EXIT_VIOLATED if violated else EXIT_OK


def cmd_certify(args):
    cfg = load_config(args.config)
    problem, _ = build_problem(cfg["problem_cfg"], cfg["solver_cfg"], cfg["seed"])
    out = _outdir(args.out, cfg["output_dir"])
    with open(args.solution) as fh:
        rows = list(csv.reader(fh))
    header, data = rows[0], np.array([[float(x) for x in r] for r in rows[1:]])
    n = problem.kernel.domain.dim
    pts, uv = data[:, :n], data[:, header.index("u")]
    if len(pts) != len(problem.points) or not np.allclose(pts, problem.points, atol=1e-12):
        raise ConfigurationError("solution.csv points do not match the config's evaluation points")
    u = problem.field(uv)
    certs = [certify.check_bilateral(u, problem)]
    if problem.kernel.symmetry == "symmetric":
        certs.append(certify.check_symmetric_lower(u, problem))
    if problem.kernel.qm_constant is not None:
        certs.append(certify.check_qm_upper(u, problem))
    res = certify.residual(u, problem)
    payload = {"certificates": [c.to_json() for c in certs], "residual": res,
               "summary": certify.batch_summary(certs)}
    _write_json(os.path.join(out, "report.json"), payload)
    _write_csv(os.path.join(out, "certificates.csv"),
               ["inequality_id", "instances", "min_slack", "violations", "not_applicable"],
               [[r["inequality_id"], r["instances"], r["min_slack"], r["violations"],
                 r["not_applicable"]] for r in certify.batch_summary(certs)])
    violated = any(c.status == "violated" for c in certs)
    for c in certs:
        print(f"{c.inequality_id}: {c.status} (worst slack {c.worst_slack:.3e})")
    return EXIT_VIOLATED if violated else EXIT_OK


def cmd_kato(args):
    cfg = load_config(args.config)
    problem, _ = build_problem(cfg["problem_cfg"], cfg["solver_cfg"], cfg["seed"])
    out = _outdir(args.out, cfg["output_dir"])
    kcfg = cfg["kato_cfg"]
    radii = kcfg.get("radii") or [0.4, 0.2, 0.1, 0.05]
    rows = []
    for i, meas in enumerate(problem.measures):
        for r, w in kato_modulus(problem.kernel, meas, radii, problem.points,
                                 problem.options.diagonal_policy):
            rows.append([i, r, w])
    if not problem.kernel.domain.bounded and kcfg.get("tails"):
        for i, meas in enumerate(problem.measures):
            for R, w in kato_tail(problem.kernel, meas, kcfg["tails"], problem.points):
                rows.append([i, -R, w])  # negative radius marks a tail row
    path = _write_csv(os.path.join(out, "kato.csv"), ["measure", "r", "omega"], rows)
    print(f"wrote {path} ({len(rows)} rows)")
    return EXIT_OK


def cmd_intrinsic(args):
    cfg = load_config(args.config)
    problem, _ = build_problem(cfg["problem_cfg"], cfg["solver_cfg"], cfg["seed"])
    out = _outdir(args.out, cfg["output_dir"])
    x = problem.points[args.point]
    rows = []
    report = {}
    for i, (q, meas) in enumerate(zip(problem.exponents, problem.measures)):
        cands = np.vstack([meas.locations, problem.points])
        res = intrinsic_potential(problem.kernel, meas, q, x, cands)
        report[f"measure_{i}"] = {"value": res.value, "head_bound": res.head_bound,
                                  "tail_value": res.tail_value, "tail_exact": res.tail_exact,
                                  "status": res.status, "notes": res.notes}
        for a, k in zip(res.timeline[:-1], res.kappas):
            rows.append([i, float(a), float(k)])
    _write_json(os.path.join(out, "intrinsic.json"), report)
    path = _write_csv(os.path.join(out, "kappa.csv"), ["measure", "r", "kappa"], rows)
    print(f"wrote {path}; values: " +
          ", ".join(f"{k}={v['value']:.6g}" for k, v in report.items()))
    return EXIT_OK


def cmd_kernel_check(args):
    cfg = load_config(args.config)
    problem, _ = build_problem(cfg["problem_cfg"], cfg["solver_cfg"], cfg["seed"])
    out = _outdir(args.out, cfg["output_dir"])
    kernel = problem.kernel
    pts = problem.points[: min(len(problem.points), 40)]
    G = kernel.matrix(pts, pts)
    finite = np.isfinite(G) & np.isfinite(G.T)
    sym_dev = float(np.max(np.abs(G[finite] - G.T[finite]), initial=0.0))
    payload = {
        "kernel": kernel.name,
        "symmetry_class": kernel.symmetry,
        "symmetry_deviation_sampled": sym_dev,
        "wmp_constant": kernel.wmp_constant,
        "qm_constant": kernel.qm_constant,
    }
    if kernel.symmetry == "symmetric":
        payload["qm_estimate_sampled"] = estimate_qm_constant(kernel, pts)
    if kernel.wmp_constant is not None and problem.measures:
        try:
            cert = check_wmp(kernel, problem.measures[0], kernel.wmp_constant, problem.points)
            payload["wmp_certificate"] = cert.to_json()
        except SublineqError as err:
            payload["wmp_certificate"] = {"skipped": str(err)}
    _write_json(os.path.join(out, "kernel-check.json"), payload)
    print(json.dumps(payload, indent=2, default=_json_default))
    wmp_cert = payload.get("wmp_certificate", {})
    return EXIT_VIOLATED if wmp_cert.get("status") == "violated" else EXIT_OK


def cmd_scenario(args):
    if args.action == "list":
        rows = scenario_list()
        width = max(len(r[0]) for r in rows)
        print(f"{'id':<{width}}  {'target':<28}  runtime  description")
        for rid, desc, target, hint in rows:
            print(f"{rid:<{width}}  {target:<28}  {hint:<7}  {desc}")
        return EXIT_OK
    out = _outdir(args.out, None)
    result = run_scenario(args.id, seed=args.seed, outdir=out)
    _write_json(os.path.join(out, f"scenario-{args.id}.json"), result)
    print(f"scenario {args.id}: {'PASS' if result['passed'] else 'FAIL'}")
    for k, v in result["checks"].items():
        print(f"  {k}: {v}")
    return result.get("exit_code", EXIT_OK if result["passed"] else EXIT_VIOLATED)


def build_parser():
    p = argparse.ArgumentParser(
        prog="sublineq",
        description="Solve sublinear kernel integral equations and certify their two-sided bounds.")
    sub = p.add_subparsers(dest="command", required=True)

    def add_config(sp):
        sp.add_argument("--config", required=True, help="path to the JSON problem config")
        sp.add_argument("--out", default=None, help="output directory (default: config or cwd)")

    sp = sub.add_parser("solve", help="solve the configured problem and write report + solution CSV")
    add_config(sp)
    sp.set_defaults(fn=cmd_solve)

    sp = sub.add_parser("certify", help="re-check certificates for a stored solution CSV")
    add_config(sp)
    sp.add_argument("--solution", required=True, help="solution.csv produced by solve")
    sp.set_defaults(fn=cmd_certify)

    sp = sub.add_parser("kato", help="small-ball decay table for each measure")
    add_config(sp)
    sp.set_defaults(fn=cmd_kato)

    sp = sub.add_parser("intrinsic", help="intrinsic potential at one evaluation point")
    add_config(sp)
    sp.add_argument("--point", type=int, default=0, help="index into the evaluation points")
    sp.set_defaults(fn=cmd_intrinsic)

    sp = sub.add_parser("kernel-check", help="sampled structural checks of the configured kernel")
    add_config(sp)
    sp.set_defaults(fn=cmd_kernel_check)

    sp = sub.add_parser("scenario", help="run or list the bundled scenarios")
    sp.add_argument("action", choices=["run", "list"])
    sp.add_argument("id", nargs="?", default=None)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", default=None)
    sp.set_defaults(fn=cmd_scenario)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.command == "scenario" and args.action == "run" and not args.id:
        print("scenario run needs an id; try `sublineq scenario list`", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return args.fn(args)
    except (ConfigurationError, FileNotFoundError) as err:
        print(f"configuration error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except SublineqError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
