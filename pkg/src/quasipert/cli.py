"""Command-line runner for the bundled and user-written experiment configs.

Subcommands run one pipeline each (``dirac``, ``quasicanon``, ``soperator``,
``oracle``), join results (``compare``), run everything a config enables
(``run``) or several configs at once (``sweep``).

Exit codes: 0 success, 2 configuration error, 3 numerical-policy violation.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .config import Experiment, build, bundled_names, load_raw, resolve
from .dirac import assemble_h1, euler_norm_demo, first_order_amplitudes, integrate_coefficients
from .errors import ConfigError, NumericalPolicyError
from .fields import gauge_transform, physical_fields
from .oracle import exact_expectation, gauge_phase, propagate
from .quasicanon import build_observable, catalog, evolve_expectation, poisson_form_check
from .soperator import consistency_check, s_matrix, write_consistency_csv

log = logging.getLogger("quasipert")

EXIT_OK, EXIT_CONFIG, EXIT_POLICY = 0, 2, 3
PIPELINES = ("dirac", "quasicanon", "soperator", "oracle")
COMPARE_COLUMNS = ("quantity", "perturbative", "exact", "abs_diff", "rel_diff")


def fmt(x) -> str:
    """17 significant digits, scientific notation (round-trips doubles)."""
    return f"{float(x):.16e}"


def write_csv(path: Path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
    log.info("wrote %s (%d rows)", path, len(rows))


def _qn(basis, n):
    return ";".join(str(x) for x in basis.quantum_numbers[n])


def _need_eigenstate(exp: Experiment, what: str) -> int:
    if exp.initial_index is None:
        raise ConfigError("initial.state", f"{what} needs an eigenstate initial condition")
    return exp.initial_index


def _physical(exp: Experiment):
    pf = physical_fields(exp.field, exp.constants)
    for imp in pf.impulses:
        log.warning("impulsive %s%d contribution at t=%g omitted", imp.kind, imp.component, imp.time)
    return pf


# pipelines

def run_dirac(exp: Experiment, out: Path) -> list[str]:
    cfg = exp.config["dirac"]
    basis, T = exp.basis, exp.T
    k = _need_eigenstate(exp, "dirac")
    H1 = assemble_h1(exp.field, basis, include_A2=cfg["include_A2"])
    amps = first_order_amplitudes(H1, basis, k, T, cfg["quadrature"])
    rows = [[k, n, _qn(basis, n), fmt(a.real), fmt(a.imag), fmt(abs(a) ** 2)] for n, a in enumerate(amps)]
    write_csv(out / "dirac_first_order.csv", ("k", "n", "qn", "amp_re", "amp_im", "probability"), rows)
    files = ["dirac_first_order.csv"]

    norms = euler_norm_demo(H1, basis, k, cfg["euler_dt"], cfg["euler_steps"])
    rows = [[j, fmt(j * cfg["euler_dt"]), fmt(v), fmt(v - 1.0)] for j, v in enumerate(norms)]
    write_csv(out / "dirac_euler_norm.csv", ("step", "time", "norm2", "excess"), rows)
    files.append("dirac_euler_norm.csv")

    if cfg["rk4"]:
        traj = integrate_coefficients(H1, basis, k, T, cfg["dt"])
        rows = [[k, n, _qn(basis, n), fmt(traj.probability(n))] for n in range(basis.interior_dim)]
        write_csv(out / "dirac_rk4.csv", ("k", "n", "qn", "probability"), rows)
        norms = traj.norms
        write_csv(out / "dirac_rk4_norm.csv", ("time", "norm2"),
                  [[fmt(t), fmt(v)] for t, v in zip(traj.times, norms)])
        files += ["dirac_rk4.csv", "dirac_rk4_norm.csv"]

    if exp.gauge is not None:
        other = gauge_transform(exp.field, exp.gauge, exp.constants)
        H1b = assemble_h1(other, basis, include_A2=cfg["include_A2"])
        amps_b = first_order_amplitudes(H1b, basis, k, T, cfg["quadrature"])
        rows = []
        for n in range(basis.interior_dim):
            if n == k:
                continue
            p0, p1 = abs(amps[n]) ** 2, abs(amps_b[n]) ** 2
            big = max(p0, p1)
            rows.append([k, n, _qn(basis, n), fmt(p0), fmt(p1), fmt(abs(p0 - p1) / big if big else 0.0)])
        write_csv(out / "dirac_gauge_sensitivity.csv",
                  ("k", "n", "qn", "P_original", "P_transformed", "rel_diff"), rows)
        files.append("dirac_gauge_sensitivity.csv")
    return files


def run_quasicanon(exp: Experiment, out: Path) -> list[str]:
    cfg = exp.config["quasicanon"]
    basis = exp.basis
    pf = _physical(exp)
    header, cols = ["time"], []
    times = None
    for name in cfg["observables"]:
        tr = evolve_expectation(catalog(name, basis), pf, basis, exp.psi0, exp.T, cfg["dt"], rule=cfg["rule"])
        times = tr.times
        header += [name, f"{name}_electric", f"{name}_magnetic"]
        cols += [tr.values, tr.electric, tr.magnetic]
    rows = [[fmt(t)] + [fmt(c[j]) for c in cols] for j, t in enumerate(times)]
    write_csv(out / "quasicanon_trajectories.csv", header, rows)

    fields = [("original", exp.field)]
    if exp.gauge is not None:
        fields.append(("transformed", gauge_transform(exp.field, exp.gauge, exp.constants)))
    rows = []
    for name in cfg["observables"]:
        spec = catalog(name, basis)
        for label, f in fields:
            for t in cfg["poisson_times"]:
                rows.append([name, label, fmt(t), fmt(poisson_form_check(spec, f, basis, t))])
    write_csv(out / "quasicanon_poisson.csv", ("observable", "gauge", "time", "residual"), rows)
    return ["quasicanon_trajectories.csv", "quasicanon_poisson.csv"]


def run_soperator(exp: Experiment, out: Path) -> list[str]:
    cfg = exp.config["soperator"]
    basis = exp.basis
    pf = _physical(exp)
    res = s_matrix(catalog(cfg["observable"], basis), pf, basis, exp.T, cfg["quadrature"])
    n = basis.interior_dim
    rows = []
    for k in range(n):
        for kp in range(n):
            if k == kp:
                continue
            if res.defined[k, kp]:
                s = res.s[k, kp]
                rows.append([k, kp, "true", fmt(s.real), fmt(s.imag), fmt(abs(s) ** 2)])
            else:
                rows.append([k, kp, "false", "nan", "nan", "nan"])
    write_csv(out / "soperator_s_matrix.csv", ("k", "k_prime", "defined", "s_re", "s_im", "probability"), rows)
    files = ["soperator_s_matrix.csv"]
    if cfg["consistency"]:
        a, b = (catalog(x, basis) for x in cfg["consistency"])
        report = consistency_check(pf, basis, exp.T, a, b, cfg["quadrature"])
        write_consistency_csv(report, out / "soperator_consistency.csv")
        log.info("consistency: %d pairs, %d unequal", len(report), sum(r.verdict == "unequal" for r in report))
        files.append("soperator_consistency.csv")
    return files


def run_oracle(exp: Experiment, out: Path) -> list[str]:
    cfg = exp.config["oracle"]
    basis = exp.basis
    field = exp.field
    if cfg["gauge"] == "transformed":
        field = gauge_transform(field, exp.gauge, exp.constants)
    H1 = assemble_h1(field, basis, include_A2=cfg["include_A2"])
    prop = propagate(basis.H0, H1, exp.psi0, exp.T, cfg["dt"], method=cfg["method"],
                     hbar=exp.constants.hbar)
    states = prop.states
    if cfg["gauge"] == "transformed":
        # map back to the original gauge before measuring
        states = np.array([gauge_phase(exp.gauge, basis, t).matrix.conj().T @ s
                           for t, s in zip(prop.times, states)])
    final = states[-1]
    k = exp.initial_index
    rows = [["" if k is None else k, n, _qn(basis, n), fmt(abs(final[n]) ** 2)]
            for n in range(basis.interior_dim)]
    write_csv(out / "oracle_transitions.csv", ("k", "n", "qn", "probability"), rows)

    header, cols = ["time", "norm"], [np.linalg.norm(states, axis=1)]
    mapped = type(prop)(prop.times, states, prop.method)
    for name in cfg["observables"]:
        header.append(name)
        cols.append(exact_expectation(mapped, build_observable(catalog(name, basis), basis)))
    rows = [[fmt(t)] + [fmt(c[j]) for c in cols] for j, t in enumerate(prop.times)]
    write_csv(out / "oracle_expectations.csv", header, rows)
    return ["oracle_transitions.csv", "oracle_expectations.csv"]


def _read(path: Path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def _compare_row(q, a, b):
    diff = abs(a - b)
    rel = diff / abs(b) if b != 0 else (0.0 if diff == 0 else math.inf)
    return [q, fmt(a), fmt(b), fmt(diff), fmt(rel)]


def run_compare(out: Path) -> list[str]:
    """Join perturbative outputs in ``out`` with the oracle outputs there."""
    rows = []
    trans = out / "oracle_transitions.csv"
    expect = out / "oracle_expectations.csv"
    found = False
    if trans.exists():
        exact = {(r["k"], r["n"]): float(r["probability"]) for r in _read(trans)}
        for fname, label in (("dirac_first_order.csv", "P1"), ("dirac_rk4.csv", "Prk4")):
            if (out / fname).exists():
                found = True
                for r in _read(out / fname):
                    key = (r["k"], r["n"])
                    if r["k"] != r["n"] and key in exact:
                        rows.append(_compare_row(f"{label}[{r['k']}->{r['n']}]", float(r["probability"]), exact[key]))
        if (out / "soperator_s_matrix.csv").exists():
            found = True
            for r in _read(out / "soperator_s_matrix.csv"):
                key = (r["k"], r["k_prime"])
                if r["defined"] == "true" and key in exact:
                    rows.append(_compare_row(f"Ps[{r['k']}->{r['k_prime']}]", float(r["probability"]), exact[key]))
    if expect.exists() and (out / "quasicanon_trajectories.csv").exists():
        found = True
        ex_last = _read(expect)[-1]
        qc_last = _read(out / "quasicanon_trajectories.csv")[-1]
        for name in qc_last:
            if name != "time" and name in ex_last and name != "norm":
                rows.append(_compare_row(f"<{name}>(T)", float(qc_last[name]), float(ex_last[name])))
    if not found:
        raise ConfigError("compare", f"no perturbative/oracle output pair found in {out}")
    write_csv(out / "compare.csv", COMPARE_COLUMNS, rows)
    return ["compare.csv"]


RUNNERS = {"dirac": run_dirac, "quasicanon": run_quasicanon, "soperator": run_soperator,
           "oracle": run_oracle}


def write_manifest(out: Path, command: str, source: str, resolved: dict | None, files: list[str]):
    manifest = {"version": __version__, "command": command, "config_source": source,
                "config": resolved, "outputs": sorted(files)}
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def execute(command: str, config: str | None, out: str | None) -> int:
    """Run one subcommand; raises package errors (mapped to exit codes by :func:`main`)."""
    if command == "compare":
        if out is None:
            raise ConfigError("--out", "compare needs the directory holding previous outputs")
        outdir = Path(out)
        files = run_compare(outdir)
        write_manifest(outdir, command, str(outdir), None, files)
        return EXIT_OK
    if config is None:
        raise ConfigError("--config", "missing")
    resolved = resolve(load_raw(config))
    outdir = Path(out) if out else Path("results") / resolved["experiment"]["name"]
    outdir.mkdir(parents=True, exist_ok=True)
    exp = build(resolved)
    if command == "run":
        todo = [p for p in PIPELINES if p in resolved]
        if not todo:
            raise ConfigError("config", "no pipeline section ([dirac], [quasicanon], [soperator], [oracle])")
    else:
        if command not in resolved:
            raise ConfigError(command, f"section [{command}] required for this subcommand")
        todo = [command]
    files = []
    for name in todo:
        log.info("running %s", name)
        files += RUNNERS[name](exp, outdir)
    if command == "run" and "oracle" in resolved and len(todo) > 1:
        files += run_compare(outdir)
    write_manifest(outdir, command, str(config), resolved, files)
    return EXIT_OK


def _guarded(command, config, out) -> int:
    try:
        return execute(command, config, out)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalPolicyError as exc:
        print(f"error: numerical policy {exc.policy!r} violated: {exc}", file=sys.stderr)
        return EXIT_POLICY


def _sweep_one(args):
    config, out = args
    return _guarded("run", config, out)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="quasipert", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)
    for name in PIPELINES + ("run", "compare"):
        p = sub.add_parser(name)
        p.add_argument("--config", help="config file or bundled config name")
        p.add_argument("--out", help="output directory")
        p.add_argument("--seed", type=int, default=None, help="reserved; no stochastic components")
        p.add_argument("--verbose", "-v", action="store_true")
    p = sub.add_parser("sweep", help="run several configs, each into OUT/<name>")
    p.add_argument("--config", action="append", required=True)
    p.add_argument("--out", default="results")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--verbose", "-v", action="store_true")
    sub.add_parser("list", help="list bundled configs")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "list":
        print("\n".join(bundled_names()))
        return EXIT_OK
    if args.command == "sweep":
        jobs = []
        for c in args.config:
            try:
                name = resolve(load_raw(c))["experiment"]["name"]
            except ConfigError as exc:
                print(f"error: {exc}", file=sys.stderr)
                return EXIT_CONFIG
            jobs.append((c, str(Path(args.out) / name)))
        if args.jobs > 1:
            with ProcessPoolExecutor(max_workers=args.jobs) as pool:
                codes = list(pool.map(_sweep_one, jobs))
        else:
            codes = [_sweep_one(j) for j in jobs]
        return max(codes, default=EXIT_OK)
    return _guarded(args.command, args.config, args.out)


if __name__ == "__main__":
    sys.exit(main())
