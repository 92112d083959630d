"""Desk-scale numerical studies: the heterogeneity sweep, peak-power
minimization over an inner approximation, and grouped disaggregation.

The sweep samples fleets at increasing heterogeneity, runs the three inner
approximation methods against the LP outer approximation, and records the
volume ratio of each method -- the quantity that separates general affine
transforms from the dilation-only baseline as populations diversify.
"""

from dataclasses import dataclass
from multiprocessing import get_context

import numpy as np

from .disaggregation import disaggregate
from .errors import DomainError, FlexsumError, SolverFailure
from .ev_model import sample_scenario
from .inner_approx import (TransformResult, solve_general_affine,
                           solve_homothet_baseline, solve_structure_preserving)
from .lp_backend import LinearProgram, solve_lp
from .outer_approx import solve_outer_lp
from .polytope import log_abs_det, volume_ratio

SWEEP_METHODS = ("structure", "affine", "homothet")

_INNER_SOLVERS = {
    "structure": solve_structure_preserving,
    "affine": solve_general_affine,
    "homothet": solve_homothet_baseline,
}


@dataclass(frozen=True)
class SweepRow:
    """One (sigma, trial, method) record of the heterogeneity sweep."""

    sigma: float
    trial: int
    method: str
    alpha_or_trace: float
    logdet_inner: float
    logdet_outer: float
    ratio: float
    status: str

    def as_csv_row(self) -> list:
        return [self.sigma, self.trial, self.method, self.alpha_or_trace,
                self.logdet_inner, self.logdet_outer, self.ratio, self.status]


SWEEP_CSV_COLUMNS = ("sigma", "trial", "method", "alpha_or_trace",
                     "logdet_inner", "logdet_outer", "ratio", "status")


def _trial_seed(seed: int, sigma_index: int, trial: int) -> int:
    state = np.random.SeedSequence(entropy=seed, spawn_key=(sigma_index, trial))
    return int(state.generate_state(1, dtype=np.uint32)[0])


def _run_trial(args) -> list[SweepRow]:
    n, T, delta, sigma, sigma_index, trial, seed, epsilon = args
    scenario = sample_scenario(n=n, T=T, delta=delta, sigma=sigma,
                               seed=_trial_seed(seed, sigma_index, trial),
                               homogenize_windows=True)
    models = list(scenario.models)
    rows = []
    try:
        outer = solve_outer_lp(models, scenario.base, epsilon=epsilon)
        _, logdet_outer = log_abs_det(outer.Q_map)
    except FlexsumError:
        outer = None
        logdet_outer = float("nan")
    for method in SWEEP_METHODS:
        if outer is None:
            rows.append(SweepRow(sigma, trial, method, float("nan"), float("nan"),
                                 float("nan"), 0.0, "solver_failure"))
            continue
        try:
            inner = _INNER_SOLVERS[method](models, scenario.base)
        except FlexsumError:
            rows.append(SweepRow(sigma, trial, method, float("nan"), float("nan"),
                                 logdet_outer, 0.0, "solver_failure"))
            continue
        sign_inner, logdet_inner = log_abs_det(inner.map)
        ratio = volume_ratio(inner.map, outer.Q_map)
        if sign_inner == 0:
            status = "singular_inner"
        elif outer.method == "lp_translated":
            status = "ok_translated_outer"
        else:
            status = "ok"
        rows.append(SweepRow(sigma, trial, method, inner.objective,
                             logdet_inner, logdet_outer, ratio, status))
    return rows


def heterogeneity_sweep(n: int, T: int, delta: float, sigmas: list[float], trials: int,
                        seed: int, epsilon: float = 1e-6,
                        n_jobs: int = 1) -> tuple[list[SweepRow], dict]:
    """Volume ratios of the three inner methods across heterogeneity levels.

    Windows are homogenized (full-horizon availability) so the dilation
    baseline is well defined for every resource. Each (sigma, trial) pair
    seeds its own scenario deterministically; trials whose outer solve fails
    are recorded with status ``solver_failure`` and excluded from the means,
    while singular inner maps contribute ratio zero. Returns the row list and
    a per-(sigma, method) summary with mean and standard error.
    """
    if trials < 1:
        raise DomainError("trials must be at least 1")
    configs = [(n, T, delta, float(sigma), si, trial, seed, epsilon)
               for si, sigma in enumerate(sigmas) for trial in range(trials)]
    if n_jobs > 1:
        with get_context("spawn").Pool(processes=n_jobs) as pool:
            nested = pool.map(_run_trial, configs)
    else:
        nested = [_run_trial(cfg) for cfg in configs]
    rows = [row for batch in nested for row in batch]
    summary = summarize_sweep(rows)
    return rows, summary


def summarize_sweep(rows: list[SweepRow]) -> dict:
    """Mean ratio with standard error per (sigma, method), failures counted."""
    summary = {}
    for row in rows:
        key = (row.sigma, row.method)
        summary.setdefault(key, {"ratios": [], "failures": 0})
        if row.status == "solver_failure":
            summary[key]["failures"] += 1
        else:
            summary[key]["ratios"].append(row.ratio)
    out = {}
    for key, agg in summary.items():
        ratios = np.asarray(agg["ratios"])
        if ratios.size:
            mean = float(ratios.mean())
            stderr = float(ratios.std(ddof=1) / np.sqrt(ratios.size)) if ratios.size > 1 else 0.0
        else:
            mean, stderr = float("nan"), float("nan")
        out[key] = {"mean_ratio": mean, "stderr": stderr,
                    "valid": int(ratios.size), "failures": agg["failures"]}
    return out


def peak_power_profile(result: TransformResult, tol: float | None = None) -> np.ndarray:
    """Aggregate profile in the inner set minimizing the peak power |u|_inf.

    Membership is encoded through the base set (``u = center + map @ u0``),
    so the returned profile disaggregates feasibly by construction.
    """
    base_poly = result.base.polytope
    T = result.base.T
    lp = LinearProgram("min")
    lp.add_block("u0", (T,))
    lp.add_block("peak", (), lower=0.0)
    lp.add_ineq({"u0": base_poly.A}, base_poly.b)
    ones = np.ones((T, 1))
    lp.add_ineq({"u0": result.map, "peak": -ones}, -result.center)
    lp.add_ineq({"u0": -result.map, "peak": -ones}, result.center)
    lp.set_objective(peak=1.0)
    sol = solve_lp(lp, tol=tol)
    if sol.status != "optimal":
        raise SolverFailure(f"peak-power LP failed with status {sol.status}")
    return result.center + result.map @ sol.value("u0")


def group_disaggregation(result: TransformResult, u: np.ndarray, group_size: int,
                         arrivals: list[int] | None = None,
                         tol: float = 1e-9) -> np.ndarray:
    """Disaggregate ``u`` and sum the per-resource profiles in groups.

    Resources are ordered by ``arrivals`` (stable sort) when given, then cut
    into consecutive groups of ``group_size``; a trailing smaller group is kept
    when the population does not divide evenly. Group rows sum to ``u``.
    """
    if group_size < 1:
        raise DomainError("group_size must be at least 1")
    profiles = disaggregate(result, u, tol=tol)
    n = profiles.shape[0]
    if arrivals is not None:
        if len(arrivals) != n:
            raise DomainError(f"got {len(arrivals)} arrival indices for {n} resources")
        order = np.argsort(np.asarray(arrivals), kind="stable")
        profiles = profiles[order]
    groups = [profiles[start:start + group_size].sum(axis=0)
              for start in range(0, n, group_size)]
    return np.array(groups)
