"""Exponential Euler integration of the stochastic Ginzburg-Landau dynamics.

The model, written against the reference operator L = 1 - d^2/dxi^2, is

    du = (-L u + N(u)) dt + Q dW,      N(u) = u - P(u),

which is exactly du = (d^2 u/dxi^2 - P(u)) dt + Q dW.  One step of size h of
the scheme applies the linear flow and the noise exactly and the nonlinearity
to first order:

    u' = e^{-Lh} u + phi(h) N(u) + xi,      phi(h) = (1 - e^{-l_k h}) / l_k,

with xi the exact stochastic-convolution increment from the noise module.
With N == 0 the scheme is exact in distribution, and the recursion for the
convolution path W_L is driven by the same draws, so the remainder
Psi = Phi - W_L satisfies Psi' = e^{-Lh} Psi + phi(h) N(Psi + W_L) to
rounding error, step by step.

Ensembles are stepped as (trajectories x slots) blocks through batched FFTs;
each trajectory consumes its own counter-based stream, so results do not
depend on block sizes or thread schedules.  Rows that cross the blow-up
guard are set to NaN and stay NaN.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field as dataclass_field

import numpy as np
from scipy.integrate import solve_ivp

from .field import (
    DriftPolynomial,
    SpectralField,
    coeffs_to_values,
    dealias_points,
    eigenvalues,
    sup_norm_values,
    values_to_coeffs,
)
from .noise import ConvolutionStepSampler, NoiseSpectrum, trajectory_generator, validate

__all__ = [
    "SimulationParams",
    "Trajectory",
    "EnsembleResult",
    "ExponentialEulerStepper",
    "TrajectoryBlowup",
    "step",
    "simulate",
    "run_ensemble",
    "psi_step_residual",
    "dini_check",
    "fit_dini_constants",
    "OdeComparison",
    "ode_comparison",
    "write_trajectory_csv",
]


class TrajectoryBlowup(RuntimeError):
    """Raised when a single-trajectory run exceeds the blow-up guard."""

    def __init__(self, time: float, norm: float):
        super().__init__(
            f"trajectory norm {norm:.3e} exceeded the blow-up guard at t = {time:g}; "
            "the step size is too large for this amplitude"
        )
        self.time = time
        self.norm = norm


@dataclass
class SimulationParams:
    """Resolved model and discretization parameters.

    dt must divide 1 exactly in the rational sense (so integer times fall on
    the step grid) and t_final must be at least 1.  poly = None selects the
    pure Ornstein-Uhlenbeck dynamics N == 0.
    """

    n_modes: int = 32
    dt: float = 1.0 / 256.0
    t_final: float = 1.0
    poly: DriftPolynomial | None = dataclass_field(
        default_factory=lambda: DriftPolynomial([0.0, -1.0, 0.0, 1.0])
    )
    spectrum: NoiseSpectrum | None = None
    seed: int = 1234
    blowup_guard: float = 1e12

    def __post_init__(self):
        if self.n_modes < 1:
            raise ValueError("n_modes must be at least 1")
        if not (0.0 < self.dt <= 1.0):
            raise ValueError("dt must lie in (0, 1]")
        per_unit = round(1.0 / self.dt)
        if abs(per_unit * self.dt - 1.0) > 1e-9:
            raise ValueError("dt must divide 1 exactly (1/dt integer)")
        if self.t_final < 1.0:
            raise ValueError("t_final must be at least 1")
        if self.spectrum is None:
            self.spectrum = NoiseSpectrum.default(self.n_modes)
        if self.spectrum.n_modes != self.n_modes:
            raise ValueError("spectrum length does not match n_modes")
        bad = validate(self.spectrum)
        if bad is not None:
            raise ValueError("inadmissible noise spectrum:\n" + str(bad))
        if self.blowup_guard <= 0:
            raise ValueError("blowup_guard must be positive")

    @property
    def steps_per_unit(self) -> int:
        return round(1.0 / self.dt)

    @property
    def n_steps(self) -> int:
        n = round(self.t_final / self.dt)
        if abs(n * self.dt - self.t_final) > 1e-9:
            raise ValueError("t_final must be a multiple of dt")
        return n


class ExponentialEulerStepper:
    """Precomputed per-slot factors for one step of the scheme."""

    def __init__(self, params: SimulationParams):
        self.params = params
        self.n_modes = params.n_modes
        ell = eigenvalues(self.n_modes)
        self.decay = np.exp(-ell * params.dt)
        self.phi = -np.expm1(-ell * params.dt) / ell
        self.sampler = ConvolutionStepSampler(params.spectrum)
        self.std = self.sampler.step_std(params.dt)
        self.poly = params.poly
        self.guard_sq = params.blowup_guard**2
        if self.poly is not None:
            self.grid_points = dealias_points(self.n_modes, self.poly.degree)

    def nonlinearity(self, u: np.ndarray) -> np.ndarray:
        """Coefficients of N(u) = u - P(u), dealiased."""
        vals = coeffs_to_values(u, self.n_modes, self.grid_points)
        return values_to_coeffs(vals - self.poly(vals), self.n_modes)

    def step_block(self, u: np.ndarray, g: np.ndarray) -> np.ndarray:
        """Advance a (..., slots) coefficient block with unit normals g."""
        if self.poly is None:
            return self.decay * u + self.std * g
        return self.decay * u + self.phi * self.nonlinearity(u) + self.std * g

    def blown_up(self, u: np.ndarray) -> np.ndarray:
        """Guard mask; NaN rows (already aborted) report False."""
        with np.errstate(invalid="ignore"):
            return np.sum(u * u, axis=-1) > self.guard_sq


def step(
    u: SpectralField,
    h: float,
    poly: DriftPolynomial | None,
    sampler: ConvolutionStepSampler,
    rng: np.random.Generator,
) -> SpectralField:
    """Single exponential-Euler step of size h on one field."""
    if u.n_modes != sampler.n_modes:
        raise ValueError("field and sampler mode counts differ")
    ell = eigenvalues(u.n_modes)
    decay = np.exp(-ell * h)
    g = rng.standard_normal(2 * u.n_modes + 1)
    noise = sampler.step_std(h) * g
    if poly is None:
        return SpectralField(u.n_modes, decay * u.coeffs + noise)
    vals = coeffs_to_values(u.coeffs, u.n_modes, dealias_points(u.n_modes, poly.degree))
    nl = values_to_coeffs(vals - poly(vals), u.n_modes)
    phi = -np.expm1(-ell * h) / ell
    return SpectralField(u.n_modes, decay * u.coeffs + phi * nl + noise)


@dataclass
class Trajectory:
    """One path recorded at integer times, with its convolution path.

    states[i] holds the coefficients at times[i]; rows at and after an abort
    are NaN.  Dense per-step arrays are populated when requested.
    """

    params: SimulationParams
    trajectory_id: int
    initial: np.ndarray
    times: np.ndarray
    states: np.ndarray
    wl: np.ndarray
    aborted: bool = False
    abort_time: float | None = None
    dense_times: np.ndarray | None = None
    dense_states: np.ndarray | None = None
    dense_wl: np.ndarray | None = None

    def state_at(self, t: float) -> SpectralField:
        i = int(np.flatnonzero(np.isclose(self.times, t))[0])
        row = self.states[i]
        if not np.all(np.isfinite(row)):
            raise ValueError(f"trajectory aborted before t = {t}")
        return SpectralField(self.params.n_modes, row)


def simulate(
    x: SpectralField | np.ndarray,
    params: SimulationParams,
    trajectory_id: int = 0,
    record_dense: bool = False,
    raise_on_blowup: bool = False,
) -> Trajectory:
    """Integrate one trajectory to t_final, recording integer times.

    The convolution path W_L is advanced by the same noise draws as the
    state.  On blow-up the trajectory is flagged (or TrajectoryBlowup raised
    when raise_on_blowup) with the crossing time in the diagnostic.
    """
    coeffs = x.coeffs if isinstance(x, SpectralField) else np.asarray(x, dtype=float)
    n_slots = 2 * params.n_modes + 1
    if coeffs.shape != (n_slots,):
        raise ValueError("initial condition length does not match n_modes")
    stepper = ExponentialEulerStepper(params)
    rng = trajectory_generator(params.seed, trajectory_id)

    n_steps = params.n_steps
    per_unit = params.steps_per_unit
    rec_times = np.arange(int(math.floor(params.t_final + 1e-9)) + 1, dtype=float)
    states = np.full((rec_times.size, n_slots), np.nan)
    wl_rec = np.full((rec_times.size, n_slots), np.nan)
    states[0] = coeffs
    wl_rec[0] = 0.0

    if record_dense:
        dense_times = params.dt * np.arange(n_steps + 1)
        dense_states = np.full((n_steps + 1, n_slots), np.nan)
        dense_wl = np.full((n_steps + 1, n_slots), np.nan)
        dense_states[0] = coeffs
        dense_wl[0] = 0.0
    else:
        dense_times = dense_states = dense_wl = None

    u = coeffs.copy()
    w = np.zeros(n_slots)
    aborted = False
    abort_time = None
    for n in range(1, n_steps + 1):
        g = rng.standard_normal(n_slots)
        u = stepper.step_block(u, g)
        w = stepper.decay * w + stepper.std * g
        if stepper.blown_up(u):
            aborted = True
            abort_time = n * params.dt
            if raise_on_blowup:
                raise TrajectoryBlowup(abort_time, float(np.sqrt(np.sum(u * u))))
            break
        if record_dense:
            dense_states[n] = u
            dense_wl[n] = w
        if n % per_unit == 0 and n // per_unit < rec_times.size:
            states[n // per_unit] = u
            wl_rec[n // per_unit] = w

    return Trajectory(
        params=params,
        trajectory_id=trajectory_id,
        initial=coeffs.copy(),
        times=rec_times,
        states=states,
        wl=wl_rec,
        aborted=aborted,
        abort_time=abort_time,
        dense_times=dense_times,
        dense_states=dense_states,
        dense_wl=dense_wl,
    )


@dataclass
class EnsembleResult:
    """Integer-time records for a batch of trajectories from one start point."""

    params: SimulationParams
    traj_ids: np.ndarray
    times: np.ndarray
    states: np.ndarray  # (n_traj, n_times, slots), NaN at and after abort
    aborted: np.ndarray  # (n_traj,) bool
    abort_times: np.ndarray
    window_sup: np.ndarray | None = None
    wl: np.ndarray | None = None

    @property
    def n_traj(self) -> int:
        return self.states.shape[0]

    def states_at(self, t: float) -> np.ndarray:
        i = int(np.flatnonzero(np.isclose(self.times, t))[0])
        return self.states[:, i, :]


def _slab_steps(block: int, n_slots: int, budget_bytes: int = 64 << 20) -> int:
    return max(1, min(256, budget_bytes // max(1, 8 * block * n_slots)))


def _run_block(
    stepper: ExponentialEulerStepper,
    x: np.ndarray,
    seed: int,
    ids: np.ndarray,
    rec_steps: dict[int, int],
    out: EnsembleResult,
    rows: slice,
    window_steps: tuple[int, int] | None,
    oversample: int,
):
    params = stepper.params
    n = ids.size
    n_slots = x.size
    u = np.tile(x, (n, 1))
    w = np.zeros((n, n_slots)) if out.wl is not None else None
    alive = np.ones(n, dtype=bool)
    abort_t = np.full(n, np.nan)
    sup_run = np.zeros(n) if window_steps is not None else None
    gens = [trajectory_generator(seed, int(j)) for j in ids]

    if 0 in rec_steps:
        out.states[rows, rec_steps[0], :] = u
        if out.wl is not None:
            out.wl[rows, rec_steps[0], :] = 0.0

    n_steps = params.n_steps
    slab = _slab_steps(n, n_slots)
    done = 0
    while done < n_steps:
        m = min(slab, n_steps - done)
        g = np.stack([gen.standard_normal((m, n_slots)) for gen in gens])
        for s in range(m):
            step_no = done + s + 1
            gs = g[:, s, :]
            u = stepper.step_block(u, gs)
            if w is not None:
                w = stepper.decay * w + stepper.std * gs
            blown = stepper.blown_up(u) & alive
            if blown.any():
                abort_t[blown] = step_no * params.dt
                u[blown] = np.nan
                alive &= ~blown
            if sup_run is not None and window_steps[0] < step_no <= window_steps[1]:
                vals = sup_norm_values(u, params.n_modes, oversample)
                sup_run = np.where(np.isnan(vals), np.nan, np.maximum(sup_run, vals))
            if step_no in rec_steps:
                out.states[rows, rec_steps[step_no], :] = u
                if out.wl is not None:
                    out.wl[rows, rec_steps[step_no], :] = np.where(
                        alive[:, None], w, np.nan
                    )
        done += m

    out.aborted[rows] = ~alive
    out.abort_times[rows] = abort_t
    if sup_run is not None:
        out.window_sup[rows] = sup_run


def run_ensemble(
    x: SpectralField | np.ndarray,
    params: SimulationParams,
    traj_ids,
    record_times=None,
    sup_window: tuple[float, float] | None = None,
    record_wl: bool = False,
    block_size: int = 512,
    threads: int = 1,
    oversample: int = 8,
) -> EnsembleResult:
    """Integrate an ensemble from one initial condition.

    traj_ids are the per-trajectory stream ids (distinct ids give independent
    noise under the same seed).  Results are bitwise independent of
    block_size and threads because every trajectory owns its stream and rows
    are written by index.  sup_window = (t1, t2) tracks the running grid sup
    norm over that open-left window.
    """
    coeffs = x.coeffs if isinstance(x, SpectralField) else np.asarray(x, dtype=float)
    n_slots = 2 * params.n_modes + 1
    if coeffs.shape != (n_slots,):
        raise ValueError("initial condition length does not match n_modes")
    ids = np.asarray(traj_ids, dtype=np.int64)
    if record_times is None:
        record_times = np.arange(int(math.floor(params.t_final + 1e-9)) + 1, dtype=float)
    else:
        record_times = np.asarray(record_times, dtype=float)
    rec_steps: dict[int, int] = {}
    for i, t in enumerate(record_times):
        n = round(float(t) / params.dt)
        if abs(n * params.dt - t) > 1e-9 or not 0 <= n <= params.n_steps:
            raise ValueError(f"record time {t} is not on the step grid")
        rec_steps[n] = i

    window_steps = None
    if sup_window is not None:
        t1, t2 = sup_window
        if not 0 <= t1 < t2 <= params.t_final:
            raise ValueError("sup window must satisfy 0 <= t1 < t2 <= t_final")
        window_steps = (round(t1 / params.dt), round(t2 / params.dt))

    stepper = ExponentialEulerStepper(params)
    out = EnsembleResult(
        params=params,
        traj_ids=ids,
        times=record_times,
        states=np.full((ids.size, record_times.size, n_slots), np.nan),
        aborted=np.zeros(ids.size, dtype=bool),
        abort_times=np.full(ids.size, np.nan),
        window_sup=np.zeros(ids.size) if window_steps is not None else None,
        wl=np.full((ids.size, record_times.size, n_slots), np.nan) if record_wl else None,
    )

    blocks = [
        (slice(lo, min(lo + block_size, ids.size)), ids[lo : lo + block_size])
        for lo in range(0, ids.size, block_size)
    ]
    if threads > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            futures = [
                pool.submit(
                    _run_block, stepper, coeffs, params.seed, bid, rec_steps, out,
                    rows, window_steps, oversample,
                )
                for rows, bid in blocks
            ]
            for f in futures:
                f.result()
    else:
        for rows, bid in blocks:
            _run_block(
                stepper, coeffs, params.seed, bid, rec_steps, out, rows,
                window_steps, oversample,
            )
    return out


def psi_step_residual(traj: Trajectory) -> float:
    """Max defect of the remainder recursion on the dense records.

    Psi = Phi - W_L must satisfy Psi' = e^{-Lh} Psi + phi(h) N(Psi + W_L)
    exactly (the noise cancels), so this is rounding-level for any valid run.
    """
    if traj.dense_states is None:
        raise ValueError("dense records required; simulate with record_dense=True")
    stepper = ExponentialEulerStepper(traj.params)
    psi = traj.dense_states - traj.dense_wl
    ok = np.all(np.isfinite(traj.dense_states), axis=1)
    worst = 0.0
    for n in range(len(psi) - 1):
        if not (ok[n] and ok[n + 1]):
            break
        pred = stepper.decay * psi[n]
        if stepper.poly is not None:
            pred = pred + stepper.phi * stepper.nonlinearity(psi[n] + traj.dense_wl[n])
        worst = max(worst, float(np.max(np.abs(psi[n + 1] - pred))))
    return worst


# ---------------------------------------------------------------------------
# pathwise dissipativity diagnostics
# ---------------------------------------------------------------------------


def _dini_data(traj: Trajectory, oversample: int = 8):
    if traj.dense_states is None:
        raise ValueError("dense records required; simulate with record_dense=True")
    if traj.params.poly is None:
        raise ValueError("dini check needs a drift polynomial")
    n_modes = traj.params.n_modes
    ok = np.all(np.isfinite(traj.dense_states), axis=1)
    psi = traj.dense_states[ok] - traj.dense_wl[ok]
    sup_psi = sup_norm_values(psi, n_modes, oversample)
    sup_wl = sup_norm_values(traj.dense_wl[ok], n_modes, oversample)
    h = traj.params.dt
    quot = (sup_psi[1:] - sup_psi[:-1]) / h
    q = traj.params.poly.degree
    return quot, sup_psi[1:] ** q, sup_wl[1:] ** q


def dini_check(
    traj: Trajectory,
    c1: float,
    c2: float,
    c3: float,
    oversample: int = 8,
) -> float:
    """Fraction of steps satisfying the pathwise decay inequality.

    Checks the backward difference quotient of ||Psi||_inf against
    c1 - c2 ||Psi||_inf^q + c3 ||W_L||_inf^q at the right endpoint of each
    recorded step.
    """
    if min(c1, c2, c3) <= 0:
        raise ValueError("constants must be positive")
    quot, psi_q, wl_q = _dini_data(traj, oversample)
    if quot.size == 0:
        raise ValueError("trajectory has no usable steps")
    good = quot <= c1 - c2 * psi_q + c3 * wl_q + 1e-12
    return float(np.mean(good))


def fit_dini_constants(traj: Trajectory, oversample: int = 8) -> tuple[float, float, float]:
    """Propose positive (c1, c2, c3) making the decay inequality hold on traj.

    Least-squares fit of the quotient against (1, -||Psi||^q, ||W_L||^q) with
    the slopes floored at small positive values, then c1 inflated to cover
    every sample with margin.
    """
    quot, psi_q, wl_q = _dini_data(traj, oversample)
    a = np.column_stack([np.ones_like(quot), -psi_q, wl_q])
    kappa, *_ = np.linalg.lstsq(a, quot, rcond=None)
    c2 = max(float(kappa[1]), 1e-6)
    c3 = max(float(kappa[2]), 1e-6)
    c1 = float(np.max(quot + c2 * psi_q - c3 * wl_q))
    c1 = max(c1, 1e-6) * (1.0 + 1e-9) + 1e-12
    return c1, c2, c3


# ---------------------------------------------------------------------------
# scalar comparison ODE
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class OdeComparison:
    """Numerical solution of y' = -c y^q + f against both decay bounds."""

    y_final: float
    forcing_integral: float
    corrected_bound: float
    literal_bound: float
    corrected_holds: bool
    literal_holds: bool


def ode_comparison(
    q: int,
    c: float,
    y0: float,
    t: float,
    forcing=None,
    tol: float = 1e-8,
) -> OdeComparison:
    """Integrate y' = -c y^q + f(s) on [0, t] and compare both decay bounds.

    The corrected bound ((q-1) c t)^(-1/(q-1)) + int_0^t f is the comparison
    constant valid for every y0 (equality as y0 -> infinity); the literal
    variant (q c t)^(-1/(q-1)) + int_0^t f is reported as well and can fail.
    forcing is a piecewise-constant step function as (start_time, value)
    pairs, start times increasing from 0, values nonnegative; None means 0.
    """
    if not (isinstance(q, (int, np.integer)) and q >= 3 and q % 2 == 1):
        raise ValueError("q must be an odd integer >= 3")
    if c <= 0 or y0 <= 0 or t <= 0:
        raise ValueError("c, y0 and t must be positive")
    if forcing is None:
        forcing = [(0.0, 0.0)]
    starts = [float(s) for s, _ in forcing]
    values = [float(v) for _, v in forcing]
    if starts[0] != 0.0 or any(b <= a for a, b in zip(starts, starts[1:])):
        raise ValueError("forcing segments must start at 0 with increasing times")
    if any(v < 0 for v in values):
        raise ValueError("forcing values must be nonnegative")

    edges = [s for s in starts if s < t] + [t]
    vals = values[: len(edges) - 1]
    f_int = sum(v * (b - a) for v, a, b in zip(vals, edges[:-1], edges[1:]))

    y = y0
    for v, a, b in zip(vals, edges[:-1], edges[1:]):
        sol = solve_ivp(
            lambda s, z, vv=v: -c * z**q + vv,
            (a, b),
            [y],
            method="LSODA",
            rtol=1e-11,
            atol=1e-13,
        )
        if not sol.success:
            raise RuntimeError(f"reference integration failed: {sol.message}")
        y = float(sol.y[0, -1])

    corrected = ((q - 1) * c * t) ** (-1.0 / (q - 1)) + f_int
    literal = (q * c * t) ** (-1.0 / (q - 1)) + f_int
    return OdeComparison(
        y_final=y,
        forcing_integral=f_int,
        corrected_bound=corrected,
        literal_bound=literal,
        corrected_holds=bool(y <= corrected + tol),
        literal_holds=bool(y <= literal + tol),
    )


# ---------------------------------------------------------------------------
# trajectory export
# ---------------------------------------------------------------------------


def _fmt(x: float) -> str:
    return repr(float(x))


def write_trajectory_csv(
    path,
    results,
    gamma: float,
    header_lines: list[str],
    oversample: int = 8,
) -> str:
    """Write integer-time records as CSV with a '#'-prefixed header block.

    results is a list of EnsembleResult objects or (trajectory_id, times,
    states) triples; rows carry a trajectory column.  Aborted spans appear
    as rows with aborted = 1 and empty numeric fields.  Returns the text.
    """
    rows = []
    n_modes = None
    for item in results:
        if isinstance(item, EnsembleResult):
            n_modes = item.params.n_modes
            for j in range(item.n_traj):
                rows.append((int(item.traj_ids[j]), item.times, item.states[j]))
        else:
            tid, times, states = item
            n_modes = (states.shape[-1] - 1) // 2
            rows.append((int(tid), times, states))

    ell = eigenvalues(n_modes)
    weights = ell ** (2.0 * gamma)
    n_coeff_cols = min(6, 2 * n_modes + 1)
    coeff_names = ["c0", "a1", "b1", "a2", "b2", "a3"][:n_coeff_cols]
    lines = [f"# {h}" for h in header_lines]
    lines.append(
        "trajectory,t,norm_0,norm_gamma,norm_sup,aborted," + ",".join(coeff_names)
    )
    for tid, times, states in rows:
        finite = np.all(np.isfinite(states), axis=-1)
        sups = np.full(len(times), np.nan)
        if finite.any():
            sups[finite] = sup_norm_values(states[finite], n_modes, oversample)
        for i, t in enumerate(times):
            if finite[i]:
                u = states[i]
                n0 = math.sqrt(float(np.sum(u * u)))
                ng = math.sqrt(float(np.sum(weights * u * u)))
                fields = [_fmt(n0), _fmt(ng), _fmt(sups[i]), "0"]
                fields += [_fmt(u[j]) for j in range(n_coeff_cols)]
            else:
                fields = ["", "", "", "1"] + [""] * n_coeff_cols
            lines.append(f"{tid},{_fmt(t)}," + ",".join(fields))
    text = "\n".join(lines) + "\n"
    with open(path, "w") as fh:
        fh.write(text)
    return text
