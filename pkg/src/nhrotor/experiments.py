"""Batch runs: evolve a configured system and persist series, spectra and fits.

Output files (schema version 1, columns fixed in this order):

``timeseries.csv``
    step, log_norm, p1_sq, entropy, classical_p1_sq, boundary_mass
``marginal_t<N>.csv``
    n, p, P
``rho_spectrum_t<N>.csv``
    rank, xi, eig_index
``qes_marginal.csv`` (spectral runs)
    n, p, P_qes, P_state
``spectral.json``, ``fits.json``, ``run.json``, ``config.ini``

CSV files open with a ``# nhrotor-csv v1 config_hash=<hash>`` comment line;
JSON files carry a ``config_hash`` field.  Empty CSV cells mean "not
evaluated at this step".
"""
from __future__ import annotations

import csv
import io
import json
import math
import os
import platform
import tempfile
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np
import scipy
import scipy.fft as sfft
import scipy.linalg

from . import __version__
from .analysis import fit_exponential_localization, fit_gaussian, fit_linear_diffusion, saturation_value
from .classical import ensemble_p1_squared, sample_ensemble
from .config import ConfigError, ExperimentConfig
from .evolution import Observer, SystemParams, build_propagator, evolve
from .hilbert import (
    TruncationError,
    boundary_mass,
    entangled_gaussian_state,
    ground_product_state,
    make_grid,
)
from .observables import linear_entropy, mean_p1_squared, momentum_marginal, reduced_density, rho_spectrum
from .spectral import (
    build_floquet_matrix,
    dominant_from_params,
    eig_full,
    eigenvector_state,
    fidelity,
    fidelity_panel,
)

SCHEMA_VERSION = 1
TIMESERIES_COLUMNS = ["step", "log_norm", "p1_sq", "entropy", "classical_p1_sq", "boundary_mass"]


class AliasingAbort(RuntimeError):
    def __init__(self, message, out_dir, step):
        super().__init__(message)
        self.out_dir = out_dir
        self.step = step


def _fmt(x):
    if x is None:
        return ""
    if isinstance(x, str):
        return x
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".17g")


def _atomic_write(path: Path, text: str):
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    with os.fdopen(fd, "w", newline="") as fh:
        fh.write(text)
    os.replace(tmp, path)


def write_csv(path: Path, columns, rows, config_hash):
    buf = io.StringIO()
    buf.write(f"# nhrotor-csv v{SCHEMA_VERSION} config_hash={config_hash}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_fmt(x) for x in row])
    _atomic_write(path, buf.getvalue())


def write_json(path: Path, payload: dict, config_hash):
    payload = dict(payload, config_hash=config_hash, schema_version=SCHEMA_VERSION)
    _atomic_write(path, json.dumps(_jsonable(payload), indent=2, sort_keys=True) + "\n")


def _jsonable(x):
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else repr(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


def read_csv(path) -> tuple[str, list[str], list[list[str]]]:
    """Return ``(config_hash, header, rows)`` of an nhrotor CSV file."""
    with open(path) as fh:
        first = fh.readline().strip()
        if not first.startswith("# nhrotor-csv"):
            raise ValueError(f"{path} lacks the nhrotor header line")
        chash = first.split("config_hash=", 1)[1]
        reader = csv.reader(fh)
        header = next(reader)
        return chash, header, list(reader)


def verify_artifacts(out_dir) -> str:
    """Check that every output file carries the hash recorded in run.json."""
    out_dir = Path(out_dir)
    expected = json.loads((out_dir / "run.json").read_text())["config_hash"]
    for path in sorted(out_dir.iterdir()):
        if path.suffix == ".csv":
            found = read_csv(path)[0]
        elif path.suffix == ".json":
            found = json.loads(path.read_text()).get("config_hash")
        else:
            continue
        if found != expected:
            raise ValueError(f"{path.name}: config hash {found} does not match run.json ({expected})")
    return expected


def params_of(cfg: ExperimentConfig) -> SystemParams:
    p = cfg["params"]
    return SystemParams(p["K1"], p["K2"], p["lambda1"], p["lambda2"], p["eps"], p["hbar"])


def initial_state(cfg: ExperimentConfig, grid):
    run = cfg["run"]
    if run["initial_state"] == "ground_product":
        return ground_product_state(grid)
    try:
        return entangled_gaussian_state(grid, run["sigma"])
    except TruncationError as err:
        raise ConfigError(str(err)) from None


def check_rho(rho, entropy, hermitian_tol=1e-12, trace_tol=1e-12, neg_tol=1e-12, entropy_tol=1e-10):
    """Hermiticity, trace, positivity and ``S = 1 - sum xi^2``; returns the raw eigenvalues."""
    rho.check(hermitian_tol, trace_tol)
    xi = scipy.linalg.eigvalsh(rho.rho)
    if xi.size and xi.min() < -neg_tol:
        raise ValueError(f"rho eigenvalue {xi.min():.3e} below -{neg_tol:g}")
    gap = abs(entropy - (1.0 - np.sum(xi**2)))
    if gap > entropy_tol:
        raise ValueError(f"S disagrees with 1 - sum(xi^2) by {gap:.2e}")
    return xi


def _environment():
    return {
        "nhrotor": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
    }


def run(cfg: ExperimentConfig, out_dir, threads: int = 1, progress=None) -> Path:
    """Execute one experiment and write its artifacts into ``out_dir``.

    Raises `AliasingAbort` after writing partial artifacts when the aliasing
    guard stops the evolution.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    chash = cfg.hash
    params = params_of(cfg)
    grid = make_grid(cfg["grid"]["M"], params.hbar)
    obs_cfg = cfg["observers"]
    steps = cfg["run"]["steps"]
    spectrum_steps = set(obs_cfg["spectrum_steps"] or [steps])

    with sfft.set_workers(threads):
        prop = build_propagator(params, grid)
        state0 = initial_state(cfg, grid)

        spectral_out = None
        qes = None
        if cfg["spectral"]["enabled"]:
            spectral_out, qes = _spectral(cfg, params, grid)

        support_tol = obs_cfg["support_tol"]
        rho_cache = {}
        rho_checks = []

        def rho_of(s):
            if rho_cache.get("key") is not s.amps:
                rho_cache["key"], rho_cache["rho"] = s.amps, reduced_density(s, support_tol)
            return rho_cache["rho"]

        def entropy(s):
            rho = rho_of(s)
            S = linear_entropy(rho)
            check_rho(rho, S)
            rho_checks.append(S)
            return S

        final = frozenset([steps])
        observers = [
            Observer("p1_sq", mean_p1_squared, obs_cfg["scalars_every"]),
            Observer("boundary_mass", boundary_mass, obs_cfg["scalars_every"]),
            Observer("entropy", entropy, obs_cfg["entropy_every"], frozenset(spectrum_steps)),
            Observer("rho_spectrum", lambda s: rho_spectrum(rho_of(s)), 0, frozenset(spectrum_steps)),
            Observer("marginal", lambda s: momentum_marginal(s, 1), obs_cfg["distributions_every"], final),
        ]
        if qes is not None:
            observers.append(Observer("fidelity", lambda s: fidelity(qes, s), cfg["spectral"]["fidelity_every"]))

        def after_step(t, s):
            rho_cache.clear()
            if progress is not None:
                progress(t, s)

        traj = evolve(state0, steps, prop, observers, alias_tol=cfg["run"]["alias_tol"],
                      band_fraction=cfg["run"]["band_fraction"], progress=after_step)

        rho_cache.clear()
        marginals = {r.step: r.values["marginal"] for r in traj.records if "marginal" in r.values}
        spectra = {r.step: r.values["rho_spectrum"] for r in traj.records if "rho_spectrum" in r.values}

        classical = None
        if cfg["classical"]["enabled"]:
            c = cfg["classical"]
            ens = sample_ensemble(c["n_trajectories"], c["seed"], params)
            classical = ensemble_p1_squared(ens, steps, threads=threads)

    rows = []
    for r in traj.records:
        v = r.values
        rows.append([
            r.step, r.log_norm, v.get("p1_sq"), v.get("entropy"),
            None if classical is None or r.step > steps else classical[r.step],
            v.get("boundary_mass"),
        ])
    write_csv(out_dir / "timeseries.csv", TIMESERIES_COLUMNS, rows, chash)
    for t, P in sorted(marginals.items()):
        write_csv(out_dir / f"marginal_t{t}.csv", ["n", "p", "P"],
                  zip(grid.n, grid.p, P), chash)
    for t, spec in sorted(spectra.items()):
        write_csv(out_dir / f"rho_spectrum_t{t}.csv", ["rank", "xi", "eig_index"],
                  zip(range(spec.xi.size), spec.xi, spec.eig_index), chash)

    if spectral_out is not None:
        t_f, F = traj.series("fidelity")
        spectral_out["fidelity_series"] = {"step": t_f.tolist(), "fidelity": F.tolist()}
        final = traj.state
        if spectral_out.get("eigenpairs_full") is not None:
            spectral_out["fidelity_panel"] = {
                "step": traj.records[-1].step,
                "fidelity": fidelity_panel(spectral_out.pop("_pairs"), final).tolist(),
            }
        P_qes = momentum_marginal(qes, 1)
        P_state = momentum_marginal(final, 1)
        write_csv(out_dir / "qes_marginal.csv", ["n", "p", "P_qes", "P_state"],
                  zip(grid.n, grid.p, P_qes, P_state), chash)
        write_json(out_dir / "spectral.json", spectral_out, chash)

    fits = _fits(cfg, traj, marginals, classical, grid)
    write_json(out_dir / "fits.json", fits, chash)
    _atomic_write(out_dir / "config.ini", f"# config_hash={chash}\n" + cfg.to_ini())
    status = {
        "config": cfg.canonical(),
        "preset": cfg.name,
        "seed": cfg["classical"]["seed"],
        "completed": traj.completed,
        "aborted_at": traj.aborted_at,
        "abort_reason": traj.abort_reason,
        "rho_checks_passed": len(rho_checks),
        "environment": _environment(),
    }
    write_json(out_dir / "run.json", status, chash)
    if not traj.completed:
        raise AliasingAbort(f"aliasing guard tripped at step {traj.aborted_at}: {traj.abort_reason}",
                            out_dir, traj.aborted_at)
    return out_dir


def _spectral(cfg, params, grid):
    sc = cfg["spectral"]
    seed = cfg["classical"]["seed"]
    out = {"mode": sc["mode"], "log_gain_bound": params.log_gain_max}
    dom = dominant_from_params(params, grid, seed=seed)
    out["dominant_power_iteration"] = _pair_dict(dom)
    out["eigenpairs_full"] = None
    if sc["mode"] == "full":
        pairs = eig_full(build_floquet_matrix(params, grid, sc["cap"]))
        out["eigenpairs_full"] = [_pair_dict(p) for p in pairs]
        out["max_eps_i"] = pairs[0].eps_i
        out["residual_contract_violations"] = sum(not p.residual_ok for p in pairs)
        out["_pairs"] = pairs
    qes = eigenvector_state(dom, grid)
    return out, qes


def _pair_dict(p):
    return {
        "mu_re": p.mu.real, "mu_im": p.mu.imag, "eps_r": p.eps_r, "eps_i": p.eps_i,
        "residual": p.residual,
    }


def _fits(cfg, traj, marginals, classical, grid):
    fc = cfg["fits"]
    out = {}
    t, y = traj.series("p1_sq")
    lo, hi = fc["diffusion_window"]
    for label, series in (("D_quantum", (t, y)),
                          ("D_classical", None if classical is None else (np.arange(classical.size), classical))):
        if series is None:
            continue
        try:
            out[label] = fit_linear_diffusion(*series, window=(lo, hi)).as_dict()
        except ValueError as err:
            out[label] = {"error": str(err)}
    if marginals:
        last = max(marginals)
        P = marginals[last]
        for label, fn in (("zeta", fit_exponential_localization), ("sigma", fit_gaussian)):
            try:
                out[label] = dict(fn(P, grid.hbar, fc["floor"]).as_dict(), step=last)
            except ValueError as err:
                out[label] = {"error": str(err)}
    for name in ("p1_sq", "entropy"):
        ts, ys = traj.series(name)
        if ys.size >= 10:
            s = saturation_value(ys, fc["tail_fraction"], t=ts)
            out[f"saturation_{name}"] = {"mean": s.mean, "drift": s.drift, "saturated": s.saturated,
                                         "tail": list(s.tail)}
    return out


def lambda_scan(cfg: ExperimentConfig, lambdas, out_dir, which: str = "both", threads: int = 1,
                jobs: int = 1) -> Path:
    """Run ``cfg`` once per lambda and tabulate saturation values and zeta in ``scan.csv``.

    ``which`` selects the lambda being varied: ``both``, ``1`` or ``2``.
    Failed runs are recorded with their error and the scan continues.
    """
    lambdas = [float(x) for x in lambdas]
    if len(lambdas) < 2:
        raise ConfigError("a lambda scan needs at least two values")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    def one(lam):
        keys = {"both": ("lambda1", "lambda2"), "1": ("lambda1",), "2": ("lambda2",)}[which]
        sub = cfg.override({f"params.{k}": lam for k in keys})
        if lam != 0 and sub["classical"]["enabled"]:
            sub = sub.override({"classical.enabled": False})
        target = out_dir / f"lambda_{lam:g}"
        try:
            run(sub, target, threads=threads)
            status = "ok"
        except Exception as err:  # noqa: BLE001 - a failed point must not stop the scan
            status = f"failed: {type(err).__name__}: {err}"
        fits_path = target / "fits.json"
        fits = json.loads(fits_path.read_text()) if fits_path.exists() else {}
        return [
            lam, status,
            fits.get("saturation_entropy", {}).get("mean"),
            fits.get("saturation_p1_sq", {}).get("mean"),
            fits.get("zeta", {}).get("value"),
        ]

    if jobs > 1:
        with ThreadPoolExecutor(jobs) as pool:
            rows = list(pool.map(one, lambdas))
    else:
        rows = [one(lam) for lam in lambdas]
    write_csv(out_dir / "scan.csv", ["lambda", "status", "entropy_saturation", "p1_sq_saturation", "zeta"],
              rows, cfg.hash)
    return out_dir
