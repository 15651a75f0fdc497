"""Command-line experiment runner.

    emcel <subcommand> --config run.yaml [--out DIR] [--threads N] [--verbose]

Subcommands: simulate, exit-law, check-conditions, compare, counterexample.
Exit codes: 0 success, 2 config error, 3 numerical failure, 4 assertion failure.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import hashlib
import json
import logging
import math
import platform
import sys
from pathlib import Path

import numba
import numpy as np
import scipy
from scipy import integrate

from . import __version__, _rng
from . import config as cfgmod
from .chain import simulate_chain
from .conditions import CSV_COLUMNS, TrendPolicy, check_condition_A, check_condition_B, check_condition_D
from .errors import ConfigError, DomainError, NumericalError
from .io import write_csv, write_json, write_law_csv, write_path_csv
from .montecarlo import EmpiricalLaw, ks_distance_truncated, ks_noise, simulate_exit_sample
from .reference import cev_absorption_law
from .scalefactors import EMCELScheme, TruncatedEMCELScheme

log = logging.getLogger("emcel")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_ASSERTION = 4

SUBCOMMANDS = ("simulate", "exit-law", "check-conditions", "compare", "counterexample")


class AssertionFailure(Exception):
    pass


def _policy(cfg) -> TrendPolicy:
    t = cfg.trend
    return TrendPolicy(zero_tol=t.zero_tol, shrink=t.shrink, final_max=t.final_max, monotone_tol=t.monotone_tol)


def _K(cfg):
    return tuple(cfg.K) if cfg.K is not None else None


# ------------------------------------------------------------ subcommands


def run_simulate(cfg, out: Path) -> list[Path]:
    scheme = cfgmod.build_scheme(cfg)
    files = []
    rows = []
    for i, h in enumerate(cfg.h):
        for p in range(cfg.dump_paths):
            seed = _rng.derive_seed(cfg.base_seed, p)
            path = simulate_chain(scheme, cfg.y0, h, cfg.horizon_T, seed, cfg.max_steps)
            files.append(write_path_csv(out / "paths" / f"h{i}_path{p}.csv", path))
            hl, hr = path.exit_times()
            status = path.absorbed_at[0] if path.absorbed_at else ("frozen" if path.frozen_at is not None else "censored")
            rows.append((h, p, path.n_steps, status, _tval(hl), _tval(hr), float(path.values[-1])))
            log.info("h=%g path %d: %s after %d steps", h, p, status, path.n_steps)
    files.append(write_csv(out / "simulate_summary.csv", ("h", "path", "n_steps", "status", "H_l", "H_r", "final"), rows))
    return files


def _tval(t):
    return "censored" if t.censored else t.value


def run_exit_law(cfg, out: Path) -> list[Path]:
    scheme = cfgmod.build_scheme(cfg)
    ts = cfg.t_grid()
    law_rows, summary = [], []
    for h in cfg.h:
        sample = simulate_exit_sample(scheme, cfg.y0, h, cfg.n_paths, cfg.horizon_T, cfg.base_seed, cfg.max_steps)
        lower, upper = sample.laws()
        for t in ts:
            law_rows.append((h, float(t), lower.cdf(float(t)), upper.cdf(float(t))))
        summary.append((
            h, cfg.n_paths, lower.n_finite, upper.n_finite,
            int(np.sum(np.isinf(sample.lower) & np.isinf(sample.upper))), lower.n_censored,
        ))
        log.info("h=%g: %d lower, %d upper hits", h, lower.n_finite, upper.n_finite)
    return [
        write_csv(out / "exit_law.csv", ("h", "t", "F_lower", "F_upper"), law_rows),
        write_csv(out / "exit_summary.csv", ("h", "n_paths", "hits_lower", "hits_upper", "never", "censored"), summary),
    ]


def _audits(cfg, scheme):
    K = _K(cfg)
    policy = _policy(cfg)
    reports = []
    if K is not None:
        reports.append(check_condition_A(scheme, K, cfg.h, cfg.grid_size, policy))
    reports.append(check_condition_B(scheme, K, cfg.h, cfg.grid_size, policy))
    reports.append(check_condition_D(scheme, cfg.h, cfg.grid_size, policy, K=K))
    return reports


def run_check_conditions(cfg, out: Path) -> list[Path]:
    scheme = cfgmod.build_scheme(cfg)
    reports = _audits(cfg, scheme)
    rows = [(rep.condition, *row) for rep in reports for row in rep.table()]
    verdicts = {}
    for rep in reports:
        verdicts.update(rep.verdicts)
        log.info("Condition %s: %s", rep.condition, rep.verdicts)
    return [
        write_csv(out / "conditions.csv", ("condition", *CSV_COLUMNS), rows),
        write_json(out / "conditions.json", {"verdicts": verdicts, "reports": [r.to_json() for r in reports]}),
    ]


def _truncated_mean(law, T):
    # E[min(H, T)] = int_0^T (1 - F(t)) dt
    val, _ = integrate.quad(lambda t: 1.0 - law.cdf(t), 0.0, T, limit=200, epsabs=1e-12, epsrel=1e-10)
    return val


def run_compare(cfg, out: Path) -> list[Path]:
    scheme = cfgmod.build_scheme(cfg)
    ref, p_lower = cfgmod.build_reference(cfg)
    T = cfg.horizon_T
    ref_mean = _truncated_mean(ref, T) / T
    ks_rows, fn_rows = [], []
    for h in cfg.h:
        sample = simulate_exit_sample(scheme, cfg.y0, h, cfg.n_paths, T, cfg.base_seed, cfg.max_steps)
        if p_lower is None:
            emp = sample.laws()[0]
            times = sample.lower
            p_hat = math.nan
        else:
            times = sample.exit_times()
            emp = EmpiricalLaw.from_array(times, sample.horizon)
            p_hat = float(np.mean(sample.status == 1))
        ks = ks_distance_truncated(emp, ref, T)
        ks_rows.append((h, cfg.n_paths, T, ks, ks_noise(cfg.n_paths), emp.cdf(T), ref.cdf(T), p_hat,
                        math.nan if p_lower is None else p_lower))
        vals = np.minimum(np.where(np.isnan(times), T, times), T) / T
        se = float(np.std(vals, ddof=1) / math.sqrt(vals.size)) if vals.size > 1 else math.nan
        if cfg.bootstrap > 0:
            rng = np.random.Generator(np.random.PCG64(cfg.base_seed))
            boots = [vals[rng.integers(0, vals.size, vals.size)].mean() for _ in range(cfg.bootstrap)]
            se = float(np.std(boots, ddof=1))
        fn_rows.append((h, cfg.n_paths, "min(H,T)/T", float(np.mean(vals)), se, ref_mean))
        log.info("h=%g: KS=%.5f (noise %.5f)", h, ks, ks_noise(cfg.n_paths))
    return [
        write_csv(out / "compare.csv", ("h", "n_paths", "T", "ks", "ks_noise", "F_emp_T", "F_ref_T", "p_lower_emp", "p_lower_ref"), ks_rows),
        write_csv(out / "functionals.csv", ("h", "n_paths", "functional", "mean", "std_error", "reference"), fn_rows),
        write_law_csv(out / "reference_law.csv", ref, cfg.t_grid()),
    ]


def run_counterexample(cfg, out: Path) -> list[Path]:
    m = cfgmod.build_measure(cfg)
    if cfg.diffusion.kind != "cev":
        raise ConfigError("counterexample runs on a cev diffusion", field="diffusion.kind")
    factor = float(cfg.scheme.params.get("truncation_factor", 2.0)) if cfg.scheme.kind == "truncated-emcel" else 2.0
    try:
        trunc = TruncatedEMCELScheme(m, factor=factor)
    except DomainError as exc:
        raise ConfigError(str(exc), field="scheme") from exc
    emcel = EMCELScheme(m)
    K = _K(cfg) or (0.5, 2.0)
    policy = _policy(cfg)
    rep_a = check_condition_A(trunc, K, cfg.h, cfg.grid_size, policy)
    rep_b = check_condition_B(trunc, K, cfg.h, cfg.grid_size, policy)
    p = m.family[1]
    ref = cev_absorption_law(p, cfg.y0)
    T = cfg.horizon_T
    rows = []
    hits_total = 0
    for h in cfg.h:
        s_t = simulate_exit_sample(trunc, cfg.y0, h, cfg.n_paths, T, cfg.base_seed, cfg.max_steps)
        s_e = simulate_exit_sample(emcel, cfg.y0, h, cfg.n_paths, T, cfg.base_seed, cfg.max_steps)
        hits = int(np.sum(np.isfinite(s_t.lower)))
        hits_total += hits
        absorbed = float(np.mean(s_e.lower <= T))
        rows.append((h, cfg.n_paths, hits, absorbed, ref.cdf(T), trunc.level(h)))
        log.info("h=%g: truncated lower hits %d, EMCEL absorbed %.4f", h, hits, absorbed)
    verdicts = {
        "condition_A": rep_a.verdicts["A"],
        "condition_B_i": rep_b.verdicts["B(i)"],
        "lower_hits": hits_total,
    }
    ok = verdicts["condition_A"] and not verdicts["condition_B_i"] and hits_total == 0
    verdicts["reproduced"] = ok
    files = [
        write_csv(out / "counterexample.csv",
                  ("h", "n_paths", "truncated_lower_hits", "emcel_absorbed_by_T", "reference_F_T", "truncation_level"), rows),
        write_csv(out / "counterexample_conditions.csv", ("condition", *CSV_COLUMNS),
                  [(r.condition, *row) for r in (rep_a, rep_b) for row in r.table()]),
        write_json(out / "counterexample.json", {"verdicts": verdicts, "reports": [rep_a.to_json(), rep_b.to_json()]}),
    ]
    if not ok:
        raise AssertionFailure(f"counterexample not reproduced: {verdicts}")
    return files


RUNNERS = {
    "simulate": run_simulate,
    "exit-law": run_exit_law,
    "check-conditions": run_check_conditions,
    "compare": run_compare,
    "counterexample": run_counterexample,
}


# ------------------------------------------------------------ plumbing


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _manifest(cfg, sub, out, files):
    return {
        "subcommand": sub,
        "config": cfg.to_dict(),
        "config_sha256": cfg.digest(),
        "base_seed": cfg.base_seed,
        "rng": _rng.RNG_NAME,
        "versions": {
            "emcel": __version__,
            "python": platform.python_version(),
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "numba": numba.__version__,
        },
        "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(),
        "files": {str(f.relative_to(out)): _sha256(f) for f in files},
    }


def _error(out, code, exc):
    record = {
        "error": type(exc).__name__,
        "message": str(exc),
        "field": getattr(exc, "field", None),
        "exit_code": code,
    }
    print(json.dumps(record), file=sys.stderr)
    if out is not None:
        try:
            write_json(out / "error.json", record)
        except OSError:
            pass
    return code


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="emcel", description="Coin-tossing chain approximations of general diffusions.")
    ap.add_argument("subcommand", choices=SUBCOMMANDS)
    ap.add_argument("--config", required=True, help="YAML or JSON experiment config")
    ap.add_argument("--out", help="output directory (overrides output_dir)")
    ap.add_argument("--threads", type=int, default=0, help="worker threads, 0 = all available")
    ap.add_argument("--verbose", action="store_true")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    out = Path(args.out) if args.out else None
    try:
        cfg = cfgmod.load(args.config)
    except FileNotFoundError as exc:
        return _error(out, EXIT_CONFIG, ConfigError(f"config file not found: {exc.filename}", field="--config"))
    except ConfigError as exc:
        return _error(out, EXIT_CONFIG, exc)
    if out is None:
        out = Path(cfg.output_dir or "emcel-out")
    if args.threads < 0:
        return _error(out, EXIT_CONFIG, ConfigError("--threads must be nonnegative", field="--threads"))
    numba.set_num_threads(args.threads or numba.config.NUMBA_NUM_THREADS)
    out.mkdir(parents=True, exist_ok=True)
    try:
        files = RUNNERS[args.subcommand](cfg, out)
    except ConfigError as exc:
        return _error(out, EXIT_CONFIG, exc)
    except AssertionFailure as exc:
        return _error(out, EXIT_ASSERTION, exc)
    except (NumericalError, DomainError, FloatingPointError) as exc:
        return _error(out, EXIT_NUMERICAL, exc)
    write_json(out / "manifest.json", _manifest(cfg, args.subcommand, out, files))
    log.info("wrote %d files to %s", len(files), out)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
