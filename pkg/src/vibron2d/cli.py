"""Command-line front end: ``vibron2d {scan,fit,classify,probe}``."""
from __future__ import annotations

import argparse
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import probes
from .basis import enumerate_block, so3_transform
from .config import RunConfig, load_config, parse_grid, parse_int_list, validate
from .errors import (
    ConfigError,
    ConvergenceError,
    DataError,
    DegenerateSpectrumError,
    FlatCurveError,
    InvalidArgumentError,
    SingularNormalEquationsError,
)
from .fitting import FitConfig, assign, band_origins, fit, read_lines
from .operators import matrix
from .spectra import (
    HamiltonianParams,
    ModelParams,
    build_model,
    correlation_scan,
    fmt12,
    lambda_scan,
    scan_csv,
    split_lambda,
    split_model,
)

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_NUMERIC = 0, 2, 3, 4
NUMERICAL = (ConvergenceError, DegenerateSpectrumError, FlatCurveError, SingularNormalEquationsError)


def write_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _split(cfg: RunConfig, l: int):
    block = enumerate_block(cfg.N, l)
    if isinstance(cfg.params, ModelParams):
        return split_model(cfg.params, block)
    return split_lambda(cfg.params, block)


def cmd_scan(cfg: RunConfig, args) -> list[Path]:
    out = Path(args.out)
    if cfg.xi_grid is not None:
        if cfg.hamiltonian != "model":
            raise ConfigError("xi scans apply only to the model Hamiltonian")
        N = cfg.N
        scans = [
            correlation_scan(lambda xi, b: build_model(ModelParams(xi, N), b), cfg.xi_grid,
                             enumerate_block(N, l), args.threads)
            for l in cfg.l_list
        ]
        path = out / "scan_xi.csv"
    else:
        scans = [lambda_scan(_split(cfg, l), cfg.lambda_grid, args.threads) for l in cfg.l_list]
        path = out / "scan_lambda.csv"
    write_atomic(path, scan_csv(scans))
    print(f"{cfg.molecule}: {sum(s.energies.size for s in scans)} levels written to {path}")
    return [path]


def _fit_inputs(cfg: RunConfig, args):
    if not isinstance(cfg.params, HamiltonianParams):
        raise ConfigError("fits need a four_body Hamiltonian")
    data = Path(args.data) if args.data else cfg.data
    if data is None:
        raise ConfigError("no data file: pass --data or set data in the config")
    lines = read_lines(data)
    for x in lines:
        try:
            assign(x, cfg.N)
        except InvalidArgumentError as exc:
            raise DataError(f"{data}: {exc}") from None
    active = tuple(cfg.fit_active or cfg.params.active)
    return lines, active


def cmd_fit(cfg: RunConfig, args) -> list[Path]:
    lines, active = _fit_inputs(cfg, args)
    if args.dry_run:
        calc = band_origins(cfg.params, lines)
        print(f"{'notation':8} {'label1':>6} {'label2':>6} {'l':>4} {'index':>5} {'obs':>12} {'calc':>12}")
        for x, c in zip(lines, calc):
            r = assign(x, cfg.N)
            print(f"{x.notation:8} {x.label1:6d} {x.label2:6d} {r.l:4d} {r.k:5d} {x.energy:12.4f} {c:12.4f}")
        print(f"{len(lines)} lines, active parameters: {', '.join(active)} (dry run, no fit)")
        return []
    res = fit(FitConfig(cfg.N, active, cfg.params, cfg.max_iterations, cfg.tolerance_cm1), lines)
    out = Path(args.out)
    paths = [out / "fit_result.json", out / "fit_residuals.csv"]
    write_atomic(paths[0], res.to_json())
    write_atomic(paths[1], res.residual_csv())
    status = "converged" if res.converged else "NOT converged (best so far)"
    print(f"{cfg.molecule}: rms = {res.rms:.4f} cm-1 over {len(lines)} lines, {res.iterations} iterations, {status}")
    for k in active:
        print(f"  {k} = {res.params.get(k):.8g} +/- {res.sigma[k]:.2g}")
    return paths


def cmd_classify(cfg: RunConfig, args) -> list[Path]:
    reports = []
    for l in cfg.l_list:
        reports.append(
            probes.classify(_split(cfg, l), cfg.n_states, cfg.lambda_grid, cfg.critical_tol,
                            cfg.min_peak_width, args.threads)
        )
    out = Path(args.out)
    summary = []
    for r in reports:
        bent = [c.state for c in r.states if c.phase == probes.BENT]
        crit = [c.state for c in r.states if c.phase == probes.CRITICAL]
        summary.append(
            f"l={r.l}: bent={bent} critical={crit} transition_state={r.transition_state} "
            f"max_chi_at_0={r.critical_state}"
        )
    paths = [out / "classification.csv", out / "classification_summary.txt"]
    write_atomic(paths[0], probes.classification_csv(reports))
    write_atomic(paths[1], "".join(s + "\n" for s in summary))
    print(f"{cfg.molecule}:")
    for s in summary:
        print("  " + s)
    return paths


def cmd_probe(cfg: RunConfig, args) -> list[Path]:
    lam0 = cfg.probe_lambda
    rows = ["l,state_index,energy,pr_u2,pr_so3,chi,chi_over_N"]
    scans = []
    pr_rows = ["lambda,l,state_index,pr_u2,pr_so3"]
    for l in cfg.l_list:
        s = _split(cfg, l)
        chi, spec = probes.qfs_all(s, lam0)
        u2, so3 = probes.pr_profile(s, lam0)
        n = min(cfg.n_states, s.dim)
        for j in range(n):
            rows.append(",".join([str(l), str(j), fmt12(spec.eigenvalues[j]), fmt12(u2[j]),
                                  fmt12(so3[j]), fmt12(chi[j]), fmt12(chi[j] / cfg.N)]))
        scans.append(probes.qfs_scan(s, cfg.lambda_grid, args.threads))
        T = so3_transform(s.block, matrix("W2", s.block))
        for lam in cfg.lambda_grid:
            u2, so3 = probes.pr_profile(s, float(lam), T)
            for j in range(n):
                pr_rows.append(",".join([fmt12(lam), str(l), str(j), fmt12(u2[j]), fmt12(so3[j])]))
    out = Path(args.out)
    paths = [out / "probe_states.csv", out / "qfs_scan.csv", out / "pr_scan.csv"]
    write_atomic(paths[0], "\n".join(rows) + "\n")
    write_atomic(paths[1], probes.qfs_csv(scans, cfg.n_states))
    write_atomic(paths[2], "\n".join(pr_rows) + "\n")
    print(f"{cfg.molecule}: probes at lambda={lam0:g} and on {cfg.lambda_grid.size} grid points written to {out}")
    return paths


COMMANDS = {"scan": cmd_scan, "fit": cmd_fit, "classify": cmd_classify, "probe": cmd_probe}


def _l_list(text: str) -> list[int]:
    try:
        values = parse_int_list(text)
    except ConfigError as exc:
        raise argparse.ArgumentTypeError(str(exc))
    if not values:
        raise argparse.ArgumentTypeError("l list is empty")
    return values


def _grid(text: str) -> np.ndarray:
    try:
        return parse_grid(text)
    except ConfigError as exc:
        raise argparse.ArgumentTypeError(str(exc))


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="config file or bundled molecule key (e.g. si2c)")
    common.add_argument("--data", help="band-origin CSV (overrides the config's data entry)")
    common.add_argument("--out", default=".", help="output directory (default: current)")
    common.add_argument("--l-list", type=_l_list, help="comma-separated l values, e.g. 0,1,2")
    common.add_argument("--lambda-grid", type=_grid, help="min:max:step")
    common.add_argument("--xi-grid", type=_grid, help="min:max:step (model Hamiltonian scans)")
    common.add_argument("--threads", type=int, default=1, help="worker threads (default 1)")
    common.add_argument("--dry-run", action="store_true", help="fit: print the assignment table only")

    p = argparse.ArgumentParser(prog="vibron2d", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("scan", parents=[common], help="correlation diagram over a lambda or xi grid")
    sub.add_parser("fit", parents=[common], help="least-squares fit to observed band origins")
    sub.add_parser("classify", parents=[common], help="bent/linear/critical labels from QFS peaks")
    sub.add_parser("probe", parents=[common], help="participation ratios and QFS")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.threads < 1:
        parser.error("--threads must be >= 1")
    try:
        cfg = load_config(args.config)
        if args.l_list is not None:
            cfg.l_list = args.l_list
        if args.lambda_grid is not None:
            cfg.lambda_grid = args.lambda_grid
        if args.xi_grid is not None:
            cfg.xi_grid = args.xi_grid

        validate(cfg)
        COMMANDS[args.command](cfg, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NUMERICAL as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except InvalidArgumentError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
