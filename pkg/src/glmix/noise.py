"""Degenerate diagonal noise and exact stochastic-convolution sampling.

The driving noise is Q dW with Q diagonal in the same H-orthonormal basis as
L: mode k (both cos and sin slots) carries the amplitude q_k.  The admissible
spectra have a free head and a polynomially pinched tail: for constants
c1, c2 > 0, alpha >= 2 and beta in (alpha - 1/8, alpha],

    c1 * k^(-2 alpha) <= q_k <= c2 * k^(-2 beta)     for k > k_star,

while q_k for k <= k_star (including the constant mode q_0) is only required
to be nonnegative and may vanish.  The default configuration forces no mode
below k = 4, so the low modes feel the noise only through the nonlinearity.

The stochastic convolution W_L(t) = int_0^t e^{-L(t-s)} Q dW(s) is an
independent Ornstein-Uhlenbeck process per coefficient slot, so a time step h
can be sampled exactly:

    W_L(t+h) = e^{-Lh} W_L(t) + xi,    xi_k ~ N(0, s_k(h)^2),
    s_k(h) = q_k * sqrt((1 - e^{-2 l_k h}) / (2 l_k)).

Randomness is counter-based: each trajectory owns a Philox stream keyed by
(seed, trajectory id), and every step consumes exactly one standard normal
per coefficient slot, in slot order.  The increment at (seed, trajectory,
step) is therefore reproducible bitwise, independent of chunking or thread
schedule.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dataclass_field

import numpy as np

from .field import eigenvalues, mode_numbers

__all__ = [
    "NoiseSpectrum",
    "SpectrumViolation",
    "validate",
    "ConvolutionStepSampler",
    "convolution_step",
    "sup_gaussian_check",
    "trajectory_generator",
]


@dataclass(frozen=True)
class SpectrumViolation:
    """First violated admissibility bound, as structured data."""

    rule: str
    bound: str
    k: int | None = None
    value: float | None = None

    def lines(self) -> list[str]:
        out = [f"violation = {self.rule}", f"bound = {self.bound}"]
        if self.k is not None:
            out.append(f"k = {self.k}")
        if self.value is not None:
            out.append(f"value = {self.value!r}")
        return out

    def __str__(self):
        return "\n".join(self.lines())


@dataclass(frozen=True)
class NoiseSpectrum:
    """Diagonal noise amplitudes q_0..q_N with tail-pinching constants."""

    q: np.ndarray
    alpha: float = 2.0
    beta: float = 2.0
    c1: float = 1.0
    c2: float = 1.0
    k_star: int = 3

    def __post_init__(self):
        q = np.asarray(self.q, dtype=float)
        if q.ndim != 1 or q.size < 1:
            raise ValueError("q must be a 1-d array of amplitudes q_0..q_N")
        object.__setattr__(self, "q", q)

    @property
    def n_modes(self) -> int:
        return self.q.size - 1

    @classmethod
    def default(cls, n_modes: int = 32) -> "NoiseSpectrum":
        """q_k = k^-4 for k > 3, zero on k <= 3 (alpha = beta = 2)."""
        k = np.arange(n_modes + 1, dtype=float)
        q = np.zeros(n_modes + 1)
        tail = k > 3
        q[tail] = k[tail] ** -4.0
        return cls(q=q, alpha=2.0, beta=2.0, c1=1.0, c2=1.0, k_star=3)

    def per_slot(self) -> np.ndarray:
        """Amplitudes expanded to the flat coefficient layout (2N+1,)."""
        return self.q[mode_numbers(self.n_modes)]


def validate(spectrum: NoiseSpectrum) -> SpectrumViolation | None:
    """Return the first violated bound, or None if the spectrum is admissible.

    Checked in order: constant positivity, alpha floor, the beta window
    (strict lower end, closed upper end), nonnegativity everywhere, and the
    two-sided tail bounds for k > k_star.
    """
    s = spectrum
    if not np.isfinite(s.c1) or s.c1 <= 0:
        return SpectrumViolation("c1_positive", "c1 must be positive", value=float(s.c1))
    if not np.isfinite(s.c2) or s.c2 <= 0:
        return SpectrumViolation("c2_positive", "c2 must be positive", value=float(s.c2))
    if not np.isfinite(s.alpha) or s.alpha < 2.0:
        return SpectrumViolation("alpha_floor", "alpha must be at least 2", value=float(s.alpha))
    if not np.isfinite(s.beta) or not (s.alpha - 0.125 < s.beta <= s.alpha):
        return SpectrumViolation(
            "beta_window",
            "beta must lie in (alpha - 1/8, alpha]",
            value=float(s.beta),
        )
    if s.k_star < 0:
        return SpectrumViolation("k_star_sign", "k_star must be nonnegative", value=int(s.k_star))
    if not np.all(np.isfinite(s.q)):
        k = int(np.flatnonzero(~np.isfinite(s.q))[0])
        return SpectrumViolation("q_finite", "q_k must be finite", k=k, value=float(s.q[k]))
    neg = np.flatnonzero(s.q < 0)
    if neg.size:
        k = int(neg[0])
        return SpectrumViolation("q_nonnegative", "q_k must be nonnegative", k=k, value=float(s.q[k]))
    for k in range(s.k_star + 1, s.n_modes + 1):
        lo = s.c1 * float(k) ** (-2.0 * s.alpha)
        hi = s.c2 * float(k) ** (-2.0 * s.beta)
        if s.q[k] < lo * (1.0 - 1e-12):
            return SpectrumViolation(
                "tail_lower",
                "q_k must be at least c1 * k^(-2 alpha) for k > k_star",
                k=k,
                value=float(s.q[k]),
            )
        if s.q[k] > hi * (1.0 + 1e-12):
            return SpectrumViolation(
                "tail_upper",
                "q_k must be at most c2 * k^(-2 beta) for k > k_star",
                k=k,
                value=float(s.q[k]),
            )
    return None


def trajectory_generator(seed: int, trajectory_id: int) -> np.random.Generator:
    """Philox stream for one trajectory, keyed by (seed, trajectory id)."""
    key = np.array([np.uint64(seed), np.uint64(trajectory_id)], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


@dataclass
class ConvolutionStepSampler:
    """Exact per-mode sampler for increments of the stochastic convolution."""

    spectrum: NoiseSpectrum
    _cache: dict = dataclass_field(default_factory=dict, repr=False)

    @property
    def n_modes(self) -> int:
        return self.spectrum.n_modes

    @property
    def n_slots(self) -> int:
        return 2 * self.n_modes + 1

    def step_std(self, h: float) -> np.ndarray:
        """s_k(h) per coefficient slot; monotone in h with limit q_k/sqrt(2 l_k)."""
        if not (h > 0 and np.isfinite(h)):
            raise ValueError("step size must be positive and finite")
        got = self._cache.get(h)
        if got is None:
            ell = eigenvalues(self.n_modes)
            q = self.spectrum.per_slot()
            got = q * np.sqrt(-np.expm1(-2.0 * ell * h) / (2.0 * ell))
            got.setflags(write=False)
            self._cache[h] = got
        return got

    def decay(self, h: float) -> np.ndarray:
        return np.exp(-eigenvalues(self.n_modes) * h)

    def increments(self, h: float, rng: np.random.Generator, n: int | None = None) -> np.ndarray:
        """Draw xi ~ N(0, diag(s_k(h)^2)); rows are independent samples.

        Every call consumes one standard normal per slot (also for slots with
        q_k = 0, which return exactly 0), keeping stream positions aligned
        across spectra.
        """
        shape = (self.n_slots,) if n is None else (n, self.n_slots)
        return rng.standard_normal(shape) * self.step_std(h)


def convolution_step(
    prev: np.ndarray,
    h: float,
    sampler: ConvolutionStepSampler,
    rng: np.random.Generator,
) -> np.ndarray:
    """Advance the convolution state one step: e^{-Lh} prev + fresh increment."""
    prev = np.asarray(prev, dtype=float)
    if prev.shape[-1] != sampler.n_slots:
        raise ValueError("state length does not match the spectrum")
    return sampler.decay(h) * prev + sampler.increments(h, rng)


def sup_gaussian_check(
    spectrum: NoiseSpectrum,
    t: float,
    p: float = 1.0,
    h: float = 1.0 / 256.0,
    n_samples: int = 1000,
    seed: int = 0,
    oversample: int = 8,
) -> tuple[float, float]:
    """Monte Carlo estimate of E sup_{s <= t} ||W_L(s)||_inf^p.

    Simulates the exact per-mode recursion on the step grid and tracks the
    running grid sup norm.  Returns (estimate, standard error).
    """
    from .field import sup_norm_values

    if t <= 0:
        raise ValueError("t must be positive")
    sampler = ConvolutionStepSampler(spectrum)
    n_steps = int(round(t / h))
    if abs(n_steps * h - t) > 1e-9 * max(t, 1.0):
        raise ValueError("t must be an integer multiple of h")
    dec = sampler.decay(h)
    std = sampler.step_std(h)
    sups = np.zeros(n_samples)
    w = np.zeros((n_samples, sampler.n_slots))
    gens = [trajectory_generator(seed, j) for j in range(n_samples)]
    for _ in range(n_steps):
        g = np.stack([gen.standard_normal(sampler.n_slots) for gen in gens])
        w = dec * w + std * g
        np.maximum(sups, sup_norm_values(w, spectrum.n_modes, oversample), out=sups)
    vals = sups**p
    return float(vals.mean()), float(vals.std(ddof=1) / np.sqrt(n_samples))
