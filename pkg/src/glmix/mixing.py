"""Ensemble statistics: uniform moments, law-distance proxies, and rate fitting.

The distance between laws of the field at a fixed time cannot be estimated
in the full state space, so every state is first projected to the observable
vector O(u) = (||u||_gamma, c0, a1, b1, a2, b2).  Distances are histogram
total-variation estimates on these observables, weighted by
V_{gamma,p}(u) = ||u||_gamma^p + 1 evaluated at bin centers of the norm
axis; the binning (32 equal-width bins per axis over the pooled sample
range) is deterministic given the samples.  The fitted decay rate is a
proxy: it witnesses that exponential decay happens, it does not reproduce
any particular constant.  Moment tables report per-initial-condition Monte
Carlo estimates together with an explicit uniformity verdict (pairwise
ratio threshold plus confidence-interval overlap) instead of assuming
uniformity silently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dataclass_field

import numpy as np

from .field import SpectralField, eigenvalues
from .integrator import EnsembleResult, SimulationParams, run_ensemble

__all__ = [
    "EnsembleSpec",
    "MomentEntry",
    "UniformityVerdict",
    "MomentTable",
    "SupWindowTable",
    "RateFit",
    "MixingReport",
    "observables",
    "law_distance",
    "sliced_mean_difference",
    "moment_bound",
    "sup_window_bound",
    "fit_rate",
    "mixing_report",
    "report_csv",
    "report_summary",
]

_N_BINS = 32


@dataclass
class EnsembleSpec:
    """Initial conditions, ensemble size, and the (gamma, p) weighting.

    gamma may not exceed the spectral decay exponent alpha of the noise, and
    p must be at least 1.  Trajectory ids are allocated deterministically:
    initial condition i owns the contiguous block [i n_traj, (i+1) n_traj).
    """

    initial_conditions: list
    n_traj: int
    params: SimulationParams
    gamma: float = 1.0
    p: float = 2.0

    def __post_init__(self):
        if not self.initial_conditions:
            raise ValueError("at least one initial condition is required")
        if self.n_traj < 2:
            raise ValueError("n_traj must be at least 2")
        if self.gamma > self.params.spectrum.alpha:
            raise ValueError("gamma must not exceed the noise decay exponent alpha")
        if self.p < 1.0:
            raise ValueError("p must be at least 1")

    def traj_ids(self, ic_index: int) -> np.ndarray:
        lo = ic_index * self.n_traj
        return np.arange(lo, lo + self.n_traj, dtype=np.int64)


def _coeff_array(x, n_modes: int) -> np.ndarray:
    c = x.coeffs if isinstance(x, SpectralField) else np.asarray(x, dtype=float)
    if c.shape != (2 * n_modes + 1,):
        raise ValueError("initial condition length does not match n_modes")
    return c


def observables(states: np.ndarray, gamma: float) -> np.ndarray:
    """Project (n, slots) coefficient rows to (n, k) observable rows.

    The first column is ||u||_gamma; the rest are the first coefficients
    c0, a1, b1, a2, b2 (fewer if the field has fewer slots).
    """
    states = np.atleast_2d(np.asarray(states, dtype=float))
    n_modes = (states.shape[1] - 1) // 2
    w = eigenvalues(n_modes) ** (2.0 * gamma)
    norms = np.sqrt(np.sum(w * states * states, axis=1))
    n_coeff = min(5, states.shape[1])
    return np.column_stack([norms, states[:, :n_coeff]])


def _bin_codes(obs_a: np.ndarray, obs_b: np.ndarray):
    """Shared equal-width binning over the pooled range; returns codes and
    the axis-0 bin centers lookup."""
    pooled = np.vstack([obs_a, obs_b])
    lo = pooled.min(axis=0)
    hi = pooled.max(axis=0)
    width = (hi - lo) / _N_BINS

    def codes(obs):
        idx = np.zeros(obs.shape, dtype=np.int64)
        for j in range(obs.shape[1]):
            if width[j] > 0.0:
                idx[:, j] = np.clip(
                    np.floor((obs[:, j] - lo[j]) / width[j]).astype(np.int64),
                    0,
                    _N_BINS - 1,
                )
        key = np.zeros(obs.shape[0], dtype=np.int64)
        for j in range(obs.shape[1]):
            key = key * _N_BINS + idx[:, j]
        return key

    n_axes = obs_a.shape[1]

    def axis0_center(key):
        i0 = key // (_N_BINS ** (n_axes - 1))
        if width[0] > 0.0:
            return lo[0] + (np.asarray(i0, dtype=float) + 0.5) * width[0]
        return np.full(np.shape(i0), lo[0], dtype=float)

    return codes, axis0_center


def law_distance(
    states_a: np.ndarray,
    states_b: np.ndarray,
    gamma: float,
    p: float,
    weighted: bool = True,
) -> float:
    """Weighted histogram total-variation proxy between two sample clouds.

    Both inputs are (n, slots) coefficient arrays drawn at the same time.
    The proxy is sum over occupied bins of V(center) |p_A - p_B| with
    V = (norm-axis bin center)^p + 1, or V = 1 when weighted is False; it is
    symmetric, vanishes on identical samples, and is bounded by twice the
    largest V over the occupied range.
    """
    a = np.atleast_2d(np.asarray(states_a, dtype=float))
    b = np.atleast_2d(np.asarray(states_b, dtype=float))
    if a.size == 0 or b.size == 0:
        raise ValueError("ensembles must be nonempty")
    if a.shape[1] != b.shape[1]:
        raise ValueError("ensembles live on different mode counts")
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
        raise ValueError("ensembles contain non-finite rows; drop aborted rows first")
    obs_a = observables(a, gamma)
    obs_b = observables(b, gamma)
    codes, axis0_center = _bin_codes(obs_a, obs_b)
    keys_a, counts_a = np.unique(codes(obs_a), return_counts=True)
    keys_b, counts_b = np.unique(codes(obs_b), return_counts=True)
    keys = np.union1d(keys_a, keys_b)
    pa = np.zeros(keys.size)
    pb = np.zeros(keys.size)
    pa[np.searchsorted(keys, keys_a)] = counts_a / obs_a.shape[0]
    pb[np.searchsorted(keys, keys_b)] = counts_b / obs_b.shape[0]
    if weighted:
        v = axis0_center(keys) ** p + 1.0
    else:
        v = np.ones(keys.size)
    return float(np.sum(v * np.abs(pa - pb)))


def sliced_mean_difference(
    states_a: np.ndarray, states_b: np.ndarray, gamma: float
) -> float:
    """Largest standardized per-observable mean gap (unweighted diagnostic)."""
    obs_a = observables(np.atleast_2d(states_a), gamma)
    obs_b = observables(np.atleast_2d(states_b), gamma)
    pooled = np.vstack([obs_a, obs_b])
    scale = np.maximum(pooled.std(axis=0), 1e-12)
    gap = np.abs(obs_a.mean(axis=0) - obs_b.mean(axis=0)) / scale
    return float(gap.max())


# ---------------------------------------------------------------------------
# moment tables
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MomentEntry:
    ic_index: int
    t: float
    estimate: float
    stderr: float
    n_traj: int
    n_aborted: int


@dataclass(frozen=True)
class UniformityVerdict:
    """Uniformity of estimates across initial conditions, made explicit."""

    max_ratio: float
    ratio_ok: bool
    ci_overlap_ok: bool

    @property
    def uniform(self) -> bool:
        return self.ratio_ok and self.ci_overlap_ok


@dataclass(frozen=True)
class MomentTable:
    t: float
    gamma: float
    p: float
    entries: tuple
    uniformity: UniformityVerdict


@dataclass(frozen=True)
class SupWindowTable:
    t1: float
    t2: float
    entries: tuple
    uniformity: UniformityVerdict


def _uniformity(
    estimates, stderrs, ratio_threshold: float = 2.0, z: float = 1.96
) -> UniformityVerdict:
    est = np.asarray(estimates, dtype=float)
    se = np.asarray(stderrs, dtype=float)
    lo = est - z * se
    hi = est + z * se
    ratio_ok = True
    max_ratio = 1.0
    ci_ok = True
    for i in range(est.size):
        for j in range(i + 1, est.size):
            small, big = sorted([est[i], est[j]])
            if big <= 0.0:
                ratio = 1.0
            elif small <= 0.0:
                ratio = math.inf
            else:
                ratio = big / small
            max_ratio = max(max_ratio, ratio)
            if ratio > ratio_threshold:
                ratio_ok = False
            if lo[i] > hi[j] or lo[j] > hi[i]:
                ci_ok = False
    return UniformityVerdict(max_ratio=max_ratio, ratio_ok=ratio_ok, ci_overlap_ok=ci_ok)


def _mean_entry(ic_index, t, values: np.ndarray, n_traj: int) -> MomentEntry:
    finite = values[np.isfinite(values)]
    n_aborted = n_traj - finite.size
    if finite.size == 0:
        raise ValueError(f"all trajectories aborted for initial condition {ic_index}")
    est = float(finite.mean())
    se = float(finite.std(ddof=1) / math.sqrt(finite.size)) if finite.size > 1 else 0.0
    return MomentEntry(
        ic_index=ic_index, t=float(t), estimate=est, stderr=se,
        n_traj=n_traj, n_aborted=n_aborted,
    )


def _norm_power(states: np.ndarray, gamma: float, p: float) -> np.ndarray:
    n_modes = (states.shape[-1] - 1) // 2
    w = eigenvalues(n_modes) ** (2.0 * gamma)
    return np.sum(w * states * states, axis=-1) ** (p / 2.0)


def moment_bound(
    spec: EnsembleSpec,
    t: float,
    ratio_threshold: float = 2.0,
    z: float = 1.96,
    block_size: int = 512,
    threads: int = 1,
) -> MomentTable:
    """Monte Carlo table of E ||Phi_t(x)||_gamma^p per initial condition.

    Runs one ensemble per initial condition, estimates the moment with its
    standard error (aborted trajectories are excluded and counted), and
    reports whether the estimates are uniform across initial conditions:
    pairwise ratios within ratio_threshold and z-score confidence intervals
    pairwise overlapping.
    """
    if t <= 0.0 or t > spec.params.t_final + 1e-9:
        raise ValueError("t must lie in (0, t_final]")
    entries = []
    for i, ic in enumerate(spec.initial_conditions):
        x = _coeff_array(ic, spec.params.n_modes)
        ens = run_ensemble(
            x, spec.params, spec.traj_ids(i), record_times=[t],
            block_size=block_size, threads=threads,
        )
        vals = _norm_power(ens.states_at(t), spec.gamma, spec.p)
        entries.append(_mean_entry(i, t, vals, spec.n_traj))
    verdict = _uniformity(
        [e.estimate for e in entries], [e.stderr for e in entries],
        ratio_threshold, z,
    )
    return MomentTable(
        t=float(t), gamma=spec.gamma, p=spec.p,
        entries=tuple(entries), uniformity=verdict,
    )


def sup_window_bound(
    spec: EnsembleSpec,
    t1: float,
    t2: float,
    ratio_threshold: float = 2.0,
    z: float = 1.96,
    block_size: int = 512,
    threads: int = 1,
    oversample: int = 8,
) -> SupWindowTable:
    """Monte Carlo table of E sup_{t1 < s <= t2} ||Phi_s(x)||_inf per start.

    The sup is tracked densely (every step inside the window) on an
    oversampled grid, so no dense state storage is needed.  Uniformity is
    reported exactly as in moment_bound.
    """
    if not (0.0 < t1 < t2 <= spec.params.t_final + 1e-9):
        raise ValueError("window must satisfy 0 < t1 < t2 <= t_final")
    entries = []
    for i, ic in enumerate(spec.initial_conditions):
        x = _coeff_array(ic, spec.params.n_modes)
        ens = run_ensemble(
            x, spec.params, spec.traj_ids(i),
            record_times=[spec.params.t_final], sup_window=(t1, t2),
            block_size=block_size, threads=threads, oversample=oversample,
        )
        entries.append(_mean_entry(i, t2, ens.window_sup, spec.n_traj))
    verdict = _uniformity(
        [e.estimate for e in entries], [e.stderr for e in entries],
        ratio_threshold, z,
    )
    return SupWindowTable(
        t1=float(t1), t2=float(t2), entries=tuple(entries), uniformity=verdict
    )


# ---------------------------------------------------------------------------
# rate fitting
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RateFit:
    """Exponential fit d_t ~ C e^{-lambda t} over the above-floor window."""

    lam: float
    intercept: float
    ci_low: float
    ci_high: float
    n_used: int
    floor: float
    identifiable: bool
    method: str = "ols"
    message: str = ""


def fit_rate(
    times,
    distances,
    floor: float | None = None,
    min_points: int = 4,
    window_factor: float = 4.0,
) -> RateFit:
    """Least-squares exponential rate on the points clearly above the floor.

    floor = None estimates the statistical floor as 1.25 times the smallest
    distance; only points with distance >= window_factor * floor enter the
    log-linear fit.  Fewer than min_points usable points (for example when
    the distances are constant) yields an unidentifiable result rather than
    a rate.  The confidence interval is the OLS two-sided 95% interval from
    the fit residuals; pipeline callers replace it by a bootstrap interval.
    """
    t = np.asarray(times, dtype=float)
    d = np.asarray(distances, dtype=float)
    if t.shape != d.shape or t.size < min_points:
        raise ValueError(f"need at least {min_points} (time, distance) pairs")
    if np.any(~np.isfinite(d)) or np.any(d < 0.0):
        raise ValueError("distances must be finite and nonnegative")
    used_floor = 1.25 * float(d.min()) if floor is None else float(floor)
    mask = d >= window_factor * max(used_floor, 0.0)
    mask &= d > 0.0
    if np.count_nonzero(mask) < min_points:
        return RateFit(
            lam=math.nan, intercept=math.nan, ci_low=math.nan, ci_high=math.nan,
            n_used=int(np.count_nonzero(mask)), floor=used_floor,
            identifiable=False, message="rate not identifiable: "
            f"{np.count_nonzero(mask)} points above the floor window",
        )
    tt = t[mask]
    y = np.log(d[mask])
    a = np.column_stack([np.ones_like(tt), -tt])
    coef, *_ = np.linalg.lstsq(a, y, rcond=None)
    log_c, lam = float(coef[0]), float(coef[1])
    resid = y - a @ coef
    dof = max(tt.size - 2, 1)
    s2 = float(resid @ resid) / dof
    se = math.sqrt(s2 / float(np.sum((tt - tt.mean()) ** 2)))
    return RateFit(
        lam=lam, intercept=math.exp(log_c),
        ci_low=lam - 1.96 * se, ci_high=lam + 1.96 * se,
        n_used=int(tt.size), floor=used_floor, identifiable=True,
    )


# ---------------------------------------------------------------------------
# full pipeline
# ---------------------------------------------------------------------------


@dataclass
class MixingReport:
    """Distances between two evolving ensembles, their decay fit, moments."""

    times: np.ndarray
    distances: np.ndarray
    distance_stderr: np.ndarray
    fit: RateFit
    floor: float
    moment_table: tuple
    gamma: float
    p: float
    sliced_means: np.ndarray = dataclass_field(default_factory=lambda: np.array([]))


def _finite_rows(states: np.ndarray) -> np.ndarray:
    keep = np.all(np.isfinite(states), axis=-1)
    return states[keep]


def mixing_report(
    spec: EnsembleSpec,
    times=None,
    n_boot: int = 200,
    block_size: int = 512,
    threads: int = 1,
) -> MixingReport:
    """Distance decay between the first two initial conditions of spec.

    Runs one ensemble per initial condition, computes the weighted histogram
    distance at each requested integer time, estimates the statistical floor
    by half-splitting each ensemble (distance between same-law halves), fits
    the exponential rate above that floor, and attaches a trajectory
    bootstrap (n_boot resamples) confidence interval for the rate and a
    standard error for each distance.  The moment table covers every initial
    condition at every time.
    """
    if len(spec.initial_conditions) < 2:
        raise ValueError("mixing_report needs two initial conditions")
    params = spec.params
    if times is None:
        times = np.arange(1.0, math.floor(params.t_final + 1e-9) + 1.0)
    times = np.asarray(times, dtype=float)
    if times.size < 4:
        raise ValueError("need at least 4 report times")

    ensembles: list[EnsembleResult] = []
    for i, ic in enumerate(spec.initial_conditions):
        x = _coeff_array(ic, params.n_modes)
        ensembles.append(
            run_ensemble(
                x, params, spec.traj_ids(i), record_times=times,
                block_size=block_size, threads=threads,
            )
        )

    state_a = [_finite_rows(ensembles[0].states[:, j, :]) for j in range(times.size)]
    state_b = [_finite_rows(ensembles[1].states[:, j, :]) for j in range(times.size)]
    for j, t in enumerate(times):
        if state_a[j].shape[0] < 2 or state_b[j].shape[0] < 2:
            raise ValueError(f"too many aborted trajectories at t = {t}")

    distances = np.array(
        [
            law_distance(state_a[j], state_b[j], spec.gamma, spec.p)
            for j in range(times.size)
        ]
    )
    sliced = np.array(
        [
            sliced_mean_difference(state_a[j], state_b[j], spec.gamma)
            for j in range(times.size)
        ]
    )

    # statistical floor: same-law half-split distances, median over times
    floors = []
    for j in range(times.size):
        for side in (state_a[j], state_b[j]):
            half = side.shape[0] // 2
            floors.append(
                law_distance(side[:half], side[half:], spec.gamma, spec.p)
            )
    floor = float(np.median(floors))

    fit = fit_rate(times, distances, floor=floor)

    rng = np.random.default_rng([params.seed, 0xB007])
    boot_lams = []
    boot_d = np.empty((n_boot, times.size))
    for b in range(n_boot):
        da = np.empty(times.size)
        for j in range(times.size):
            ia = rng.integers(0, state_a[j].shape[0], state_a[j].shape[0])
            ib = rng.integers(0, state_b[j].shape[0], state_b[j].shape[0])
            da[j] = law_distance(
                state_a[j][ia], state_b[j][ib], spec.gamma, spec.p
            )
        boot_d[b] = da
        bfit = fit_rate(times, da, floor=floor)
        if bfit.identifiable:
            boot_lams.append(bfit.lam)
    distance_stderr = boot_d.std(axis=0, ddof=1) if n_boot > 1 else np.zeros(times.size)

    if fit.identifiable and len(boot_lams) >= max(10, n_boot // 2):
        lo, hi = np.percentile(boot_lams, [2.5, 97.5])
        fit = RateFit(
            lam=fit.lam, intercept=fit.intercept, ci_low=float(lo), ci_high=float(hi),
            n_used=fit.n_used, floor=fit.floor, identifiable=True,
            method="bootstrap",
        )

    moment_entries = []
    for i, ens in enumerate(ensembles):
        for j, t in enumerate(times):
            vals = _norm_power(ens.states[:, j, :], spec.gamma, spec.p)
            moment_entries.append(_mean_entry(i, t, vals, spec.n_traj))

    return MixingReport(
        times=times,
        distances=distances,
        distance_stderr=distance_stderr,
        fit=fit,
        floor=floor,
        moment_table=tuple(moment_entries),
        gamma=spec.gamma,
        p=spec.p,
        sliced_means=sliced,
    )


def _fmt(x: float) -> str:
    return repr(float(x))


def report_csv(report: MixingReport, header_lines=()) -> str:
    """CSV body of the distance track: t, distance, stderr."""
    lines = [f"# {h}" for h in header_lines]
    lines.append("t,distance,stderr")
    for j in range(report.times.size):
        lines.append(
            f"{_fmt(report.times[j])},{_fmt(report.distances[j])},"
            f"{_fmt(report.distance_stderr[j])}"
        )
    return "\n".join(lines) + "\n"


def report_summary(report: MixingReport) -> str:
    """Key = value summary block of the fitted decay."""
    fit = report.fit
    lines = [
        f"lambda = {_fmt(fit.lam)}",
        f"lambda_ci_low = {_fmt(fit.ci_low)}",
        f"lambda_ci_high = {_fmt(fit.ci_high)}",
        f"C = {_fmt(fit.intercept)}",
        f"floor = {_fmt(report.floor)}",
        f"n_used = {fit.n_used}",
        f"identifiable = {int(fit.identifiable)}",
        f"ci_method = {fit.method}",
    ]
    return "\n".join(lines) + "\n"
