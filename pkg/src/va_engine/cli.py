"""Command line entry point ``va-engine``.

Commands: check, boundary, price, fair-fee, tables.  Exit codes: 0 ok,
1 configuration error, 2 advisory (assumption violated), 3 solver failure,
4 verification failure, 5 fee calibration failure.
"""

from __future__ import annotations

import argparse
import csv
import logging
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from decimal import Decimal
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np

from . import kernels
from .boundary import NonConvergenceError, lambda_cap, picard_solve, surrender_curve
from .config import ConfigError, RunConfig, apply_override, load_config
from .contract import check_assumptions, f_function
from .mc_oracle import max_workers, mc_stopped_value, mc_value_Q
from .pricer import BracketError, PricingError, fair_fee, price_V0
from .tables import run_table1, run_table2

log = logging.getLogger("va_engine")

EXIT_OK, EXIT_CONFIG, EXIT_ADVISORY, EXIT_SOLVER, EXIT_VERIFY, EXIT_CALIBRATION = range(6)

PRICE_HEADER = ["V0", "U0", "V_SO", "w01", "c", "K", "g", "r", "sigma", "T", "eta", "n", "iterations"]
VERIFY_HEADER = ["w01_mc", "w01_mc_se", "V0_mc_Q", "V0_mc_Q_se"]


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    x = float(x)
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return repr(x)


def _write_csv(path: Path, header: Sequence[str], rows) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([v if isinstance(v, str) else _fmt(v) for v in row])
    return path


def _sweep_values(spec: str):
    """Parse ``KEY=lo:hi:step`` into the key and an inclusive list of values."""
    try:
        key, rng = spec.split("=", 1)
        lo, hi, step = (Decimal(v) for v in rng.split(":"))
    except ValueError:
        raise ConfigError(f"--sweep expects KEY=lo:hi:step, got {spec!r}") from None
    if step <= 0 or hi < lo:
        raise ConfigError("--sweep needs step > 0 and hi >= lo")
    vals = []
    v = lo
    while v <= hi:
        vals.append(v)
        v += step
    return key.strip(), vals


def _configs(cfg: RunConfig, sweep: Optional[str]):
    """``[(tag, config)]``; one entry without a sweep."""
    if not sweep:
        return [("", cfg)]
    key, vals = _sweep_values(sweep)
    return [(f"_{key}={v}", apply_override(cfg, key, float(v))) for v in vals]


def _solve(cfg: RunConfig, multi: bool = False):
    spec, mort = cfg.contract(), cfg.mortality()
    sv = cfg.values["solver"]
    b = picard_solve(spec, mort, sv["n"], sv["eps"], rule=sv["rule"], scheme=cfg.scheme(multi))
    return spec, mort, b


def _map(fn, items):
    items = list(items)
    if len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(min(max_workers(), len(items))) as pool:
        return list(pool.map(fn, items))


def cmd_check(cfg: RunConfig, args) -> int:
    code = EXIT_OK
    rows = []
    for tag, c in _configs(cfg, args.sweep):
        spec, mort = c.contract(), c.mortality()
        rep = check_assumptions(spec, mort)
        lam = lambda_cap(spec, mort)
        ts = np.linspace(0.0, spec.T, 11)
        mu = mort.force(ts)
        h = np.where(mu > 0, np.maximum(1.0 - np.asarray(f_function(spec, mort, ts)) / mu, 0.0), np.inf)
        print(f"check{tag}:")
        for line in rep.lines():
            print(f"  {line}")
        print(f"  Lambda: {lam:.6f}")
        print("  h(t) at t=0..T step T/10: " + " ".join(f"{v:.4f}" for v in h))
        print(f"  overall: {'pass' if rep.ok else 'ADVISORY'}")
        rows.append([tag.lstrip("_") or "base", *(int(v) for v in rep.clauses.values()), rep.t_star, lam, int(rep.ok)])
        if not rep.ok:
            code = EXIT_ADVISORY
    _write_csv(Path(args.out) / "check.csv",
               ["config", "penalty", "aging_rate", "single_sign_change", "clause_i", "clause_ii", "t_star",
                "lambda_cap", "ok"], rows)
    return code


def _boundary_rows(b, spec):
    ell = [e for _, e in surrender_curve(b, spec)]
    return [[t, v, be, e, h] for t, v, be, e, h in zip(b.times, b.values, b.beta, ell, b.h)]


def cmd_boundary(cfg: RunConfig, args) -> int:
    out = Path(args.out)

    def run(item):
        tag, c = item
        try:
            spec, _, b = _solve(c)
        except NonConvergenceError as exc:
            _write_csv(out / f"boundary{tag}_diagnostics.csv", ["sweep", "sup_change"],
                       enumerate(exc.history, 1))
            return tag, None, str(exc)
        rows = _boundary_rows(b, spec)
        _write_csv(out / f"boundary{tag}.csv", ["t", "b", "beta", "ell", "h"], rows)
        if args.plot:
            for j, name in enumerate(("b", "beta", "ell", "h"), 1):
                _write_csv(out / f"plot{tag}_{name}.csv", ["t", name], ((r[0], r[j]) for r in rows))
        return tag, b, None

    code = EXIT_OK
    for tag, b, err in _map(run, _configs(cfg, args.sweep)):
        if err:
            print(f"boundary{tag}: solver failed: {err}", file=sys.stderr)
            code = EXIT_SOLVER
        else:
            print(f"boundary{tag}: t*={b.t_star:.4f} b(0)={b.values[0]:.6f} sweeps={b.iterations} "
                  f"last change={b.final_sup_change:.2e}")
    return code


def cmd_price(cfg: RunConfig, args) -> int:
    out = Path(args.out)
    header = PRICE_HEADER + (VERIFY_HEADER if args.verify else [])

    def run(item):
        tag, c = item
        spec, mort, b = _solve(c)
        res = price_V0(spec, mort, b)
        K = getattr(spec.penalty, "K", float("nan"))
        row = [res.V0, res.U0, res.V_SO, res.w01, spec.c, K, spec.g, spec.r, spec.sigma, spec.T, mort.eta,
               b.grid.n, b.iterations]
        ok = True
        if args.verify:
            mc = c.mc()
            w_mc = mc_stopped_value(b, spec, mort, mc)
            v_mc = mc_value_Q(b, spec, mort, mc)
            row += [w_mc.mean, w_mc.std_error, v_mc.mean, v_mc.std_error]
            ok = abs(w_mc.mean - res.w01) <= 3 * w_mc.std_error and abs(v_mc.mean - res.V0) <= max(
                3 * v_mc.std_error, 0.5)
        _write_csv(out / f"price{tag}.csv", header, [row])
        return tag, res, row, ok

    code = EXIT_OK
    try:
        results = _map(run, _configs(cfg, args.sweep))
    except NonConvergenceError as exc:
        print(f"solver failed: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except PricingError as exc:
        print(f"pricing check failed: {exc}", file=sys.stderr)
        return EXIT_VERIFY
    for tag, res, row, ok in results:
        print(f"price{tag}: V0={res.V0:.4f} U0={res.U0:.4f} V_SO={res.V_SO:.4f} w(0,1)={res.w01:.6f}")
        if args.verify:
            print(f"  MC w(0,1)={row[-4]:.6f} +/- {row[-3]:.6f}; MC V0={row[-2]:.4f} +/- {row[-1]:.4f}; "
                  f"{'agree' if ok else 'DISAGREE'}")
            if not ok:
                code = EXIT_VERIFY
    return code


def cmd_fair_fee(cfg: RunConfig, args) -> int:
    out = Path(args.out)
    rows = []
    code = EXIT_OK
    for tag, c in _configs(cfg, args.sweep):
        spec, mort = c.contract(), c.mortality()
        sv = c.values["solver"]
        try:
            res = fair_fee(spec, mort, (0.001, 0.10), n=sv["n"], eps=sv["eps"], scheme=c.scheme(True))
        except BracketError as exc:
            print(f"fair-fee{tag}: {exc}", file=sys.stderr)
            code = EXIT_CALIBRATION
            continue
        except NonConvergenceError as exc:
            print(f"fair-fee{tag}: solver failed: {exc}", file=sys.stderr)
            code = max(code, EXIT_SOLVER)
            continue
        print(f"fair-fee{tag}: c*={res.c:.5f} ({100 * res.c:.3f}%), V0(c*)-x0={res.residual:+.4e}")
        rows.append([tag.lstrip("_") or "base", res.c, res.V0, res.residual, mort.eta, res.evaluations])
    _write_csv(out / "fair_fee.csv", ["config", "c_star", "V0", "residual", "eta", "evaluations"], rows)
    return code


def cmd_tables(cfg: RunConfig, args) -> int:
    spec, mort = cfg.contract(), cfg.mortality()
    sv = cfg.values["solver"]
    try:
        cells = run_table2(spec, mort, sv["n"], sv["eps"], scheme=cfg.scheme(True), rule=sv["rule"])
        cells += run_table1(spec, mort, sv["n"], sv["eps"], scheme=cfg.scheme(True))
    except NonConvergenceError as exc:
        print(f"solver failed: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (BracketError, PricingError) as exc:
        print(f"table run failed: {exc}", file=sys.stderr)
        return EXIT_VERIFY
    out = Path(args.out)
    t2 = [c for c in cells if c.table == "table2"]
    rows2 = {}
    for c in t2:
        rows2.setdefault(c.row, {})[c.quantity] = c.computed
    _write_csv(out / "table2.csv", ["row", "V0", "U0", "V_SO"],
               [[r, v["V0"], v["U0"], v["V_SO"]] for r, v in rows2.items()])
    _write_csv(out / "table1.csv", ["row", "fair_fee"], [[c.row, c.computed] for c in cells if c.table == "table1"])
    _write_csv(out / "comparison.csv", ["table", "row", "quantity", "reference", "computed", "gap", "band", "pass"],
               [[c.table, c.row, c.quantity, c.reference, c.computed, c.gap, c.band, str(c.ok).lower()]
                for c in cells])
    bad = [c for c in cells if not c.ok]
    for c in cells:
        flag = "" if c.ok else "  <-- outside band"
        print(f"{c.table} {c.row:<16} {c.quantity:<8} ref={c.reference:<8g} got={c.computed:<10.4f} "
              f"gap={c.gap:+.4f}{flag}")
    print(f"{len(cells) - len(bad)}/{len(cells)} cells within bands")
    return EXIT_VERIFY if bad else EXIT_OK


COMMANDS = {
    "check": cmd_check,
    "boundary": cmd_boundary,
    "price": cmd_price,
    "fair-fee": cmd_fair_fee,
    "tables": cmd_tables,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="va-engine", description="Surrender-option pricing for variable annuities.")
    p.add_argument("command", choices=list(COMMANDS))
    p.add_argument("--config", help="INI-style run configuration")
    p.add_argument("--out", help="output directory for CSV files (default: [output] dir or .)")
    p.add_argument("--plot", action="store_true", help="also write two-column plot series")
    p.add_argument("--verify", action="store_true", help="cross-check prices against Monte Carlo")
    p.add_argument("--sweep", metavar="KEY=lo:hi:step", help="run once per value of a config key")
    p.add_argument("--n", type=int, help="time steps for the boundary grid")
    p.add_argument("--eps", type=float, help="Picard stopping tolerance")
    p.add_argument("--seed", type=int, help="Monte Carlo seed")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = load_config(args.config)
        for key, val in (("solver.n", args.n), ("solver.eps", args.eps), ("mc.seed", args.seed)):
            if val is not None:
                cfg = apply_override(cfg, key, val)
        if args.out is None:
            args.out = cfg.values["output"]["dir"]
        if args.sweep:
            _sweep_values(args.sweep)
            _configs(cfg, args.sweep)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    log.debug("kernel backend: %s", kernels.BACKEND)
    return COMMANDS[args.command](cfg, args)


if __name__ == "__main__":
    sys.exit(main())
