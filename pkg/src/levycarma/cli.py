"""Command-line front end.

Subcommands ``simulate``, ``moments``, ``fit``, ``table1`` and ``table2``
read an optional JSON config (``--config``) carrying ``schema_version``;
command-line flags override config values. Exit codes: 0 success, 2 input
error, 3 non-convergence, 4 numerical failure.
"""

import argparse
import logging
import sys
from dataclasses import fields
from pathlib import Path

import numpy as np

from . import io
from .errors import DomainError, NumericalError, UnsupportedError
from .experiments import (
    LONG_RUNNING_REPLICATIONS,
    Table1Config,
    Table2Config,
    gamma_ks_distance,
    run_table1,
    run_table2,
)
from .levy import model_from_dict, moment_rates
from .model import CarmaSpec, StateSpace, companion
from .moments import autocov_table, spectral_density
from .qml import FitSettings, fit, parametrization_from_dict
from .recovery import RecoveredIncrements, increment_diagnostics
from .sampler import simulate_gaussian, simulate_levy

log = logging.getLogger("levycarma")

SCHEMA_VERSION = 1

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NOT_CONVERGED = 3
EXIT_NUMERICAL = 4


class InputError(Exception):
    """Bad configuration or missing file."""


# -- config handling --------------------------------------------------------


def load_config(path) -> dict:
    if path is None:
        return {"schema_version": SCHEMA_VERSION}
    path = Path(path)
    try:
        cfg = io.read_json(path)
    except DomainError as exc:
        raise InputError(str(exc)) from exc
    if not isinstance(cfg, dict):
        raise InputError(f"{path}: config must be a JSON object")
    version = cfg.get("schema_version")
    if version != SCHEMA_VERSION:
        raise InputError(f"{path}: unsupported schema_version {version!r} (expected {SCHEMA_VERSION})")
    cfg["_base"] = str(path.resolve().parent)
    return cfg


def _merge(cfg, args, names):
    out = dict(cfg)
    for name in names:
        val = getattr(args, name, None)
        if val is not None:
            out[name] = val
    return out


def _resolve(cfg, p):
    p = Path(p)
    if not p.is_absolute() and "_base" in cfg:
        p = Path(cfg["_base"]) / p
    return p


def build_model(d) -> StateSpace:
    """``{"kind": "carma", "ar": ..., "ma": ..., "sigma_l": ...}`` or a state-space dict."""
    if not isinstance(d, dict):
        raise InputError("config needs a 'model' object")
    kind = d.get("kind", "carma")
    if kind == "carma":
        ar, ma = d.get("ar"), d.get("ma", [1.0])
        if ar is None:
            raise InputError("carma model needs 'ar'")
        if np.ndim(ar) == 1:
            spec = CarmaSpec.univariate(ar, ma)
        else:
            spec = CarmaSpec.from_dict({"ar": ar, "ma": ma})
        return companion(spec, d.get("sigma_l"))
    if kind == "state_space":
        return StateSpace.from_dict(d)
    raise InputError(f"unknown model kind {kind!r}")


def _n_steps(cfg):
    h = float(cfg.get("h", 1.0))
    if "n" in cfg:
        n = int(cfg["n"])
    elif "horizon" in cfg:
        n = int(round(float(cfg["horizon"]) / h))
    else:
        raise InputError("config needs 'n' or 'horizon'")
    return h, n


def _write_csv_table(path, header, rows):
    io.write_table(path, header, [["n/a" if c is None else c for c in row] for row in rows])


# -- commands ---------------------------------------------------------------


def cmd_simulate(cfg, out: Path) -> int:
    ss = build_model(cfg.get("model"))
    h, n = _n_steps(cfg)
    seed = int(cfg.get("seed", 0))
    reps = int(cfg.get("replications", 1))
    substeps = int(cfg.get("substeps", 64))
    drv_spec = cfg.get("driver")
    driver = model_from_dict(drv_spec) if drv_spec else None
    for r in range(reps):
        if driver is None:
            path = simulate_gaussian(ss, h, n, seed=seed, stream=r)
        else:
            path = simulate_levy(ss, driver, h, n, substeps=substeps, seed=seed, stream=r)
        meta = {"model": ss.to_dict(), "driver": drv_spec or {"family": "brownian"}, "replication": r}
        if driver is None:
            meta["substeps"] = None
        io.write_path(out / f"path_{r:04d}.csv", path, meta)
    return EXIT_OK


def cmd_moments(cfg, out: Path) -> int:
    ss = build_model(cfg.get("model"))
    if cfg.get("driver"):
        _, cov = moment_rates(model_from_dict(cfg["driver"]))
        ss = ss.with_sigma(cov)
    lags = np.asarray(cfg.get("lags", [0.0, 1.0, 2.0, 5.0]), dtype=float).ravel()
    omegas = np.asarray(cfg.get("omegas", [0.0, 0.5, 1.0, 2.0]), dtype=float).ravel()
    d = ss.d
    idx = [(i, j) for i in range(d) for j in range(d)]
    acf = autocov_table(ss, lags)
    _write_csv_table(
        out / "acf.csv", ["lag"] + [f"c{i + 1}{j + 1}" for i, j in idx],
        [[float(lag)] + [float(acf[k, i, j]) for i, j in idx] for k, lag in enumerate(lags)],
    )
    rows = []
    for w in omegas:
        f = spectral_density(ss, float(w))
        rows.append([float(w)] + [v for i, j in idx for v in (float(f[i, j].real), float(f[i, j].imag))])
    _write_csv_table(
        out / "spectrum.csv",
        ["omega"] + [c for i, j in idx for c in (f"f{i + 1}{j + 1}_re", f"f{i + 1}{j + 1}_im")],
        rows,
    )
    return EXIT_OK


def cmd_fit(cfg, out: Path) -> int:
    if "data" not in cfg:
        raise InputError("fit config needs 'data' (path CSV)")
    data = _resolve(cfg, cfg["data"])
    if not data.is_file():
        raise InputError(f"data file not found: {data}")
    path = io.read_path(data)
    par_spec = cfg.get("parametrization", {"family": "univariate-canonical", "p": 1, "q": 0})
    par = parametrization_from_dict(par_spec)
    theta_init = cfg.get("theta_init")
    if theta_init is None:
        theta_init = 0.5 * (par.lower + par.upper)
    known = {f.name for f in fields(FitSettings)}
    opts = {k: v for k, v in cfg.get("settings", {}).items() if k in known}
    if "seed" in cfg and "seed" not in opts:
        opts["seed"] = int(cfg["seed"])
    res = fit(par, path, theta_init, FitSettings(**opts))
    io.write_json(out / "fit.json", res)
    if not res.converged:
        log.error("fit did not converge (gradient norm %.3g)", res.grad_norm)
        return EXIT_NOT_CONVERGED
    return EXIT_OK


def _config_from(cls, cfg, renames=None):
    renames = renames or {}
    known = {f.name for f in fields(cls)}
    opts = {}
    for k, v in cfg.items():
        k = renames.get(k, k)
        if k in known:
            opts[k] = tuple(v) if isinstance(v, list) else v
    return cls(**opts)


def cmd_table1(cfg, out: Path) -> int:
    t1 = _config_from(Table1Config, cfg)
    if t1.replications < 1:
        raise InputError("replications must be >= 1")
    if t1.replications >= LONG_RUNNING_REPLICATIONS:
        print(f"note: {t1.replications} replications is long-running", file=sys.stderr)
    res = run_table1(t1)
    rows = res["summary"]
    _write_csv_table(
        out / "table1.csv", ["parameter", "true", "mean", "bias", "sd", "est_sd"],
        [[r["parameter"], r["true"], r["mean"], r["bias"], r["sd"], r["est_sd"]] for r in rows],
    )
    io.write_json(out / "table1.json", res)
    _print_rows(["parameter", "mean", "bias", "sd", "est_sd"], rows)
    return EXIT_OK


def cmd_table2(cfg, out: Path) -> int:
    cfg = dict(cfg)
    if "h" in cfg:  # a single observation spacing from --h
        cfg["h_fines"] = [float(cfg.pop("h"))]
    t2 = _config_from(Table2Config, cfg, renames={"replications": "paths"})
    t2 = Table2Config(**{**t2.__dict__, "keep_increments": True})
    res = run_table2(t2)
    rows = res["summary"]
    _write_csv_table(out / "table2.csv", ["h", "mean", "sd", "paths"],
                     [[r["h"], r["mean"], r["sd"], r["paths"]] for r in rows])
    diagnostics = []
    for j, hf in enumerate(t2.h_fines):
        pooled = np.concatenate([rep["rows"][j].pop("increments") for rep in res["replications"]])
        first = res["replications"][0]
        inc = RecoveredIncrements(t2.h_coarse, hf, pooled, first["a_used"])
        if j == 0:
            n0 = pooled.size // max(1, len(res["replications"]))
            io.write_increments(out / "increments_path0000.csv",
                                RecoveredIncrements(t2.h_coarse, hf, pooled[:n0], first["a_used"]))
        diag = increment_diagnostics(inc) if inc.n >= 10 else {}
        diag["h_fine"] = float(hf)
        diag["ks_distance"] = gamma_ks_distance(pooled, t2.gamma, t2.h_coarse)
        diagnostics.append(diag)
    io.write_json(out / "diagnostics.json", diagnostics)
    io.write_json(out / "table2.json", res)
    _print_rows(["h", "mean", "sd", "paths"], rows)
    return EXIT_OK


def _print_rows(cols, rows):
    print("  ".join(f"{c:>12}" for c in cols))
    for r in rows:
        cells = []
        for c in cols:
            v = r[c]
            cells.append(f"{'n/a':>12}" if v is None else f"{v:>12.4f}" if isinstance(v, float) else f"{v!s:>12}")
        print("  ".join(cells))


COMMANDS = {
    "simulate": cmd_simulate,
    "moments": cmd_moments,
    "fit": cmd_fit,
    "table1": cmd_table1,
    "table2": cmd_table2,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="levycarma", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--config", help="JSON config file with a schema_version field")
        s.add_argument("--seed", type=int, help="base seed (unsigned 64-bit)")
        s.add_argument("--out", default="out", help="output directory")
        s.add_argument("--replications", type=int)
        s.add_argument("--horizon", type=float)
        s.add_argument("--h", type=float)
        s.add_argument("--substeps", type=int)
        s.add_argument("--threads", type=int)
        s.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.seed is not None and args.seed < 0:
            raise InputError("seed must be non-negative")
        cfg = load_config(args.config)
        cfg = _merge(cfg, args, ("seed", "replications", "horizon", "h", "substeps", "threads"))
        if args.horizon is not None:
            cfg.pop("n", None)
        out = io.ensure_dir(args.out)
        return COMMANDS[args.command](cfg, out)
    except (InputError, DomainError, UnsupportedError, ValueError, KeyError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
