"""Exact minorization, coupling contraction, and drift certificates on finite state spaces.

Everything here manipulates finite row-stochastic kernels as plain matrices,
so every inequality a certificate claims can be checked entry by entry.  The
pieces fit together as follows: a small-set certificate (K, m, delta, nu)
asserts P^m(x, .) >= delta nu for all x in K; when K is reached from
everywhere in one step with probability at least delta_prime, the two-step
coupling contracts total variation by 1 - delta delta_prime, which iterates
into a geometric convergence bound toward the invariant measure.  A
constructive search builds two-step certificates from the density threshold
sets S_x = {y : p(x, y) > 1/2}, optionally through a coarse partition, and a
composition rule extends a certificate on an accessible set A to any set C
that reaches A.  Total variation is normalized as the total mass of the
absolute value, so distinct Dirac measures sit at distance 2.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "FiniteKernel",
    "WeightedMeasure",
    "SmallSetCertificate",
    "variation_norm",
    "minorization",
    "condition_b",
    "contraction_check",
    "geometric_bound_check",
    "invariant_measure",
    "small_set_search",
    "two_small_compose",
    "drift_condition_check",
    "ball_partition",
    "read_kernel",
    "write_kernel",
    "certificate_text",
    "parse_certificate",
]

_TOL = 1e-12


def variation_norm(vec, v=None) -> float:
    """Weighted variation norm of a signed measure given as a vector.

    With v = None this is the total mass of the absolute value, so the
    distance between two distinct Dirac measures is 2.
    """
    vec = np.asarray(vec, dtype=float)
    if v is None:
        return float(np.sum(np.abs(vec)))
    v = np.asarray(v, dtype=float)
    return float(np.sum(v * np.abs(vec)))


class FiniteKernel:
    """Row-stochastic transition matrix on states 0..n-1."""

    def __init__(self, rows):
        rows = np.array(rows, dtype=float)
        if rows.ndim != 2 or rows.shape[0] != rows.shape[1]:
            raise ValueError("kernel must be a square matrix")
        if not np.all(np.isfinite(rows)):
            raise ValueError("kernel entries must be finite")
        if np.any(rows < 0.0):
            raise ValueError("kernel entries must be nonnegative")
        sums = rows.sum(axis=1)
        bad = np.flatnonzero(np.abs(sums - 1.0) > _TOL)
        if bad.size:
            raise ValueError(
                f"row {bad[0]} sums to {sums[bad[0]]!r}, not 1 within 1e-12"
            )
        rows.setflags(write=False)
        self.rows = rows
        self.n = rows.shape[0]

    def power(self, m: int) -> np.ndarray:
        if m < 0:
            raise ValueError("power must be nonnegative")
        return np.linalg.matrix_power(self.rows, m)

    def __repr__(self):
        return f"FiniteKernel(n={self.n})"


@dataclass(frozen=True)
class WeightedMeasure:
    """Nonnegative measure on 0..n-1, optionally carrying a weight function.

    The weight function v, when present, must be >= 1 everywhere; it enters
    only through the weighted variation norm.
    """

    weights: np.ndarray
    v: np.ndarray | None = None

    def __post_init__(self):
        w = np.array(self.weights, dtype=float)
        if w.ndim != 1:
            raise ValueError("weights must be a vector")
        if not np.all(np.isfinite(w)) or np.any(w < 0.0):
            raise ValueError("weights must be finite and nonnegative")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)
        if self.v is not None:
            v = np.array(self.v, dtype=float)
            if v.shape != w.shape or np.any(v < 1.0 - _TOL):
                raise ValueError("weight function must match length and be >= 1")
            v.setflags(write=False)
            object.__setattr__(self, "v", v)

    @property
    def n(self) -> int:
        return self.weights.size

    @property
    def mass(self) -> float:
        return float(self.weights.sum())

    @property
    def is_probability(self) -> bool:
        return abs(self.mass - 1.0) <= 1e-9

    def variation(self, v=None) -> float:
        return variation_norm(self.weights, self.v if v is None else v)


def _as_state_tuple(k, n: int) -> tuple[int, ...]:
    states = tuple(sorted({int(x) for x in k}))
    if not states:
        raise ValueError("state subset must be nonempty")
    if states[0] < 0 or states[-1] >= n:
        raise ValueError("state subset out of range")
    return states


@dataclass(frozen=True)
class SmallSetCertificate:
    """Claim that P^m(x, .) >= delta nu(.) for every x in K.

    delta_prime, when present, additionally claims min_x P(x, K) >= delta_prime.
    Both claims are checked entry by entry by validate().  v_cell_mass and
    e_mass are provenance from the constructive search (the mu0 masses of the
    middle cell and of the support of nu); they are informational only and do
    not appear in the emitted text block.
    """

    K: tuple[int, ...]
    m: int
    delta: float
    nu: WeightedMeasure
    delta_prime: float | None = None
    v_cell_mass: float | None = None
    e_mass: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "K", tuple(int(x) for x in self.K))
        if len(set(self.K)) != len(self.K) or list(self.K) != sorted(self.K):
            raise ValueError("K must be sorted distinct state indices")
        if self.m < 1:
            raise ValueError("m must be a positive integer")
        if not (0.0 < self.delta <= 1.0 + 1e-9):
            raise ValueError("delta must lie in (0, 1]")
        if not self.nu.is_probability:
            raise ValueError("nu must be a probability measure")
        if self.delta_prime is not None and not (0.0 < self.delta_prime <= 1.0 + 1e-9):
            raise ValueError("delta_prime must lie in (0, 1]")

    def validate(self, kernel: FiniteKernel, tol: float = _TOL) -> None:
        """Check every claimed inequality against the kernel; raise on failure."""
        k = _as_state_tuple(self.K, kernel.n)
        if self.nu.n != kernel.n:
            raise ValueError("nu length does not match the kernel")
        pm = kernel.power(self.m)
        floor = self.delta * self.nu.weights
        gap = pm[list(k), :] - floor[None, :]
        if gap.min() < -tol:
            i, j = np.unravel_index(np.argmin(gap), gap.shape)
            raise ValueError(
                f"minorization fails at x = {k[i]}, y = {j}: "
                f"P^{self.m}(x,y) = {pm[k[i], j]!r} < delta nu(y) = {floor[j]!r}"
            )
        if self.delta_prime is not None:
            hit = kernel.rows[:, list(k)].sum(axis=1)
            if hit.min() < self.delta_prime - tol:
                x = int(np.argmin(hit))
                raise ValueError(
                    f"return probability fails at x = {x}: "
                    f"P(x,K) = {hit[x]!r} < delta_prime = {self.delta_prime!r}"
                )


def minorization(kernel: FiniteKernel, k, m: int) -> SmallSetCertificate | None:
    """Maximal minorization of P^m on K via column minima.

    Returns the certificate with delta = sum_y min_{x in K} P^m(x,y) and nu
    the normalized column-minimum measure, or None when delta = 0.  No valid
    pair for this (K, m) can have a larger delta.
    """
    states = _as_state_tuple(k, kernel.n)
    if m < 1:
        raise ValueError("m must be a positive integer")
    pm = kernel.power(m)
    colmin = pm[list(states), :].min(axis=0)
    delta = float(colmin.sum())
    if delta <= 0.0:
        return None
    cert = SmallSetCertificate(
        K=states, m=m, delta=delta, nu=WeightedMeasure(colmin / delta)
    )
    cert.validate(kernel)
    return cert


def condition_b(kernel: FiniteKernel, k) -> float:
    """Worst-case one-step probability of hitting K from any state."""
    states = _as_state_tuple(k, kernel.n)
    return float(kernel.rows[:, list(states)].sum(axis=1).min())


def contraction_check(
    kernel: FiniteKernel,
    cert: SmallSetCertificate,
    n_random: int = 1000,
    seed: int = 0,
) -> float:
    """Verify the two-step total-variation contraction implied by (delta, delta_prime).

    Requires a one-step certificate carrying delta_prime.  Checks that
    (P^2 mu)(y) >= delta delta_prime nu(y) for every state y and Dirac mu,
    then that the worst ratio ||P^2 mu - P^2 nu|| / ||mu - nu|| over all
    Dirac pairs is at most 1 - delta delta_prime, and that no random measure
    pair beats the Dirac pairs (they are extremal for this coefficient).
    Returns the worst observed ratio.
    """
    if cert.m != 1:
        raise ValueError("contraction check requires a one-step certificate")
    if cert.delta_prime is None:
        raise ValueError("contraction check requires delta_prime")
    cert.validate(kernel)
    eps = cert.delta * cert.delta_prime
    p2 = kernel.rows @ kernel.rows

    floor = eps * cert.nu.weights
    gap = p2 - floor[None, :]
    if gap.min() < -_TOL:
        x, y = np.unravel_index(np.argmin(gap), gap.shape)
        raise ValueError(
            f"two-step floor fails at x = {x}, y = {y}: "
            f"P^2(x,y) = {p2[x, y]!r} < {floor[y]!r}"
        )

    worst = 0.0
    for x in range(kernel.n):
        diffs = p2[x + 1 :, :] - p2[x, :]
        if diffs.size:
            worst = max(worst, float(np.abs(diffs).sum(axis=1).max()) / 2.0)

    rng = np.random.default_rng(seed)
    for _ in range(n_random):
        mu = rng.random(kernel.n)
        nu = rng.random(kernel.n)
        mu /= mu.sum()
        nu /= nu.sum()
        base = variation_norm(mu - nu)
        if base < 1e-12:
            continue
        ratio = variation_norm((mu - nu) @ p2) / base
        if ratio > worst + _TOL:
            raise ValueError(
                f"random pair beats Dirac pairs: ratio {ratio!r} > {worst!r}"
            )

    if worst > 1.0 - eps + _TOL:
        raise ValueError(
            f"contraction factor {worst!r} exceeds 1 - delta delta_prime = {1.0 - eps!r}"
        )
    return worst


def invariant_measure(kernel: FiniteKernel) -> WeightedMeasure:
    """Exact stationary distribution of the kernel.

    Solves mu P = mu with the mass constraint and checks uniqueness through
    the singular values of P^T - I; a kernel with more than one stationary
    distribution (identity, disconnected chains) is rejected.
    """
    n = kernel.n
    a = kernel.rows.T - np.eye(n)
    svals = np.linalg.svd(a, compute_uv=False)
    tol = max(n * np.finfo(float).eps * (svals[0] if svals.size else 1.0), 1e-12)
    if np.sum(svals <= tol) != 1:
        raise ValueError("stationary distribution is not unique")
    system = np.vstack([a, np.ones((1, n))])
    rhs = np.zeros(n + 1)
    rhs[-1] = 1.0
    mu, *_ = np.linalg.lstsq(system, rhs, rcond=None)
    mu = np.where(np.abs(mu) < 1e-15, 0.0, mu)
    mu = mu / mu.sum()
    residual = float(np.max(np.abs(mu @ kernel.rows - mu)))
    if residual > _TOL or np.any(mu < 0.0):
        raise RuntimeError(f"stationary solve residual {residual!r} too large")
    return WeightedMeasure(mu)


def geometric_bound_check(
    kernel: FiniteKernel, cert: SmallSetCertificate, n: int
) -> float:
    """Check ||P^k mu - mu_*|| <= 2 (1 - delta delta_prime)^floor(k/2).

    Verifies the bound for every Dirac start and every horizon k <= n against
    the exact invariant measure.  Returns the worst gap (distance minus
    bound), which must be <= 1e-9; positive beyond that raises.
    """
    if cert.m != 1 or cert.delta_prime is None:
        raise ValueError("geometric bound requires a one-step certificate with delta_prime")
    cert.validate(kernel)
    eps = cert.delta * cert.delta_prime
    if not (0.0 < eps < 1.0):
        raise ValueError("delta delta_prime must lie in (0, 1)")
    mu_star = invariant_measure(kernel).weights
    q = np.eye(kernel.n)
    worst = -np.inf
    for k in range(n + 1):
        dists = np.abs(q - mu_star[None, :]).sum(axis=1)
        bound = 2.0 * (1.0 - eps) ** (k // 2)
        worst = max(worst, float(dists.max() - bound))
        q = q @ kernel.rows
    if worst > 1e-9:
        raise ValueError(f"geometric bound violated by {worst!r}")
    return worst


def _check_partition(partition, n: int) -> list[np.ndarray]:
    cells = [np.asarray(sorted(int(x) for x in cell), dtype=int) for cell in partition]
    seen = np.concatenate(cells) if cells else np.array([], dtype=int)
    if sorted(seen.tolist()) != list(range(n)):
        raise ValueError("cells must partition the state space")
    if any(cell.size == 0 for cell in cells):
        raise ValueError("cells must be nonempty")
    return cells


def small_set_search(
    kernel: FiniteKernel, mu0, partition=None
) -> SmallSetCertificate | None:
    """Constructive two-step small set from the density threshold 1/2.

    With densities p(x,y) = P(x,y)/mu0(y), the set S^2 = {p > 1/2} is scanned
    for a cell triple (U, V, W) of the partition (singletons by default) such
    that S^2 covers at least 7/8 of U x V and of V x W in mu0 x mu0 mass.
    The certificate is then K = D = {x in U : mu0(S_x cap V) >= 3/4 mu0(V)},
    m = 2, nu = mu0 restricted to E = {z in W : mu0(S_z* cap V) >= 3/4 mu0(V)}
    and normalized, delta = mu0(V) mu0(E) / 8.  Among admissible triples the
    one with the largest delta is returned (ties broken by cell index); None
    when no triple passes the covering thresholds at this refinement.
    """
    mu = mu0.weights if isinstance(mu0, WeightedMeasure) else np.asarray(mu0, dtype=float)
    if mu.shape != (kernel.n,) or np.any(mu <= 0.0):
        raise ValueError("mu0 must be strictly positive on all states")
    if abs(mu.sum() - 1.0) > 1e-9:
        raise ValueError("mu0 must be a probability measure")
    cells = (
        [np.array([i]) for i in range(kernel.n)]
        if partition is None
        else _check_partition(partition, kernel.n)
    )
    s2 = kernel.rows / mu[None, :] > 0.5

    cell_mass = np.array([mu[c].sum() for c in cells])
    n_cells = len(cells)
    cover = np.empty((n_cells, n_cells))
    for a in range(n_cells):
        for b in range(n_cells):
            block = s2[np.ix_(cells[a], cells[b])]
            cover[a, b] = (mu[cells[a]][:, None] * mu[cells[b]][None, :] * block).sum()
    good_pair = cover >= 0.875 * cell_mass[:, None] * cell_mass[None, :]

    best = None
    for a in range(n_cells):
        for b in range(n_cells):
            if not good_pair[a, b]:
                continue
            v_cell = cells[b]
            v_mass = cell_mass[b]
            sx_in_v = (s2[:, v_cell] * mu[v_cell][None, :]).sum(axis=1)
            for c in range(n_cells):
                if not good_pair[b, c]:
                    continue
                d_states = cells[a][sx_in_v[cells[a]] >= 0.75 * v_mass]
                sz_in_v = (s2[np.ix_(v_cell, cells[c])] * mu[v_cell][:, None]).sum(axis=0)
                e_states = cells[c][sz_in_v >= 0.75 * v_mass]
                if d_states.size == 0 or e_states.size == 0:
                    continue
                e_mass = float(mu[e_states].sum())
                delta = v_mass * e_mass / 8.0
                key = (delta, -a, -b, -c)
                if best is None or key > best[0]:
                    best = (key, d_states, e_states, e_mass, delta, v_mass)

    if best is None:
        return None
    _, d_states, e_states, e_mass, delta, v_mass = best
    # the density-level two-step bound behind the certificate must hold with
    # the advertised constant before the measure-level claim is even formed
    p2 = (kernel.rows @ kernel.rows) / mu[None, :]
    dens_min = float(p2[np.ix_(d_states, e_states)].min())
    if dens_min < v_mass / 8.0 - _TOL:
        raise AssertionError(
            f"two-step density minimum {dens_min!r} under the provable bound"
        )
    nu_w = np.zeros(kernel.n)
    nu_w[e_states] = mu[e_states] / e_mass
    cert = SmallSetCertificate(
        K=tuple(int(x) for x in d_states), m=2, delta=float(delta),
        nu=WeightedMeasure(nu_w), v_cell_mass=float(v_mass), e_mass=e_mass,
    )
    cert.validate(kernel)
    return cert


def two_small_compose(
    kernel: FiniteKernel, cert_a: SmallSetCertificate, c
) -> SmallSetCertificate | None:
    """Extend a certificate on an accessible set A to a set C reaching A.

    P^{m+1}(x, .) >= P(x, A) delta nu for x in C, so C gets an (m+1)-step
    certificate with delta scaled by min_{x in C} P(x, A); None when some
    state of C cannot reach A in one step.
    """
    cert_a.validate(kernel)
    c_states = _as_state_tuple(c, kernel.n)
    reach = float(kernel.rows[np.ix_(c_states, cert_a.K)].sum(axis=1).min())
    if reach <= 0.0:
        return None
    cert = SmallSetCertificate(
        K=c_states, m=cert_a.m + 1, delta=cert_a.delta * reach, nu=cert_a.nu
    )
    cert.validate(kernel)
    return cert


def drift_condition_check(kernel: FiniteKernel, v, k, c: float, lam: float) -> list[int]:
    """Check (PV)(x) <= c V(x) off K and (PV)(x) <= Lambda on K.

    Returns the (sorted) list of violating states; an empty list means the
    drift condition holds exactly as stated.
    """
    if not (0.0 < c < 1.0):
        raise ValueError("c must lie in (0, 1)")
    if lam <= 0.0:
        raise ValueError("Lambda must be positive")
    v = np.asarray(v, dtype=float)
    if v.shape != (kernel.n,) or np.any(v < 1.0 - _TOL):
        raise ValueError("V must be >= 1 on every state")
    states = set(_as_state_tuple(k, kernel.n))
    pv = kernel.rows @ v
    bad = [
        x
        for x in range(kernel.n)
        if (pv[x] > lam + _TOL if x in states else pv[x] > c * v[x] + _TOL)
    ]
    return bad


def ball_partition(dist, centers, radius: float) -> list[list[int]]:
    """Partition generated by the metric balls B(center, radius).

    Two states share a cell exactly when they belong to the same set of
    balls; cells are ordered by their smallest member.  This is the finite
    realization of refining a space by balls around chosen centers.
    """
    dist = np.asarray(dist, dtype=float)
    n = dist.shape[0]
    if dist.shape != (n, n):
        raise ValueError("dist must be a square matrix")
    signatures = {}
    for x in range(n):
        sig = tuple(bool(dist[int(c), x] <= radius) for c in centers)
        signatures.setdefault(sig, []).append(x)
    return sorted(signatures.values(), key=lambda cell: cell[0])


# ---------------------------------------------------------------------------
# plain-text formats
# ---------------------------------------------------------------------------


def write_kernel(path, kernel: FiniteKernel) -> None:
    """Write a kernel as plain text: first line n, then n rows of n decimals."""
    lines = [str(kernel.n)]
    for row in kernel.rows:
        lines.append(" ".join(repr(float(x)) for x in row))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_kernel(path) -> FiniteKernel:
    """Read a kernel written by write_kernel."""
    with open(path) as fh:
        tokens = fh.read().split("\n")
    rows_text = [line for line in tokens if line.strip()]
    if not rows_text:
        raise ValueError("empty kernel file")
    n = int(rows_text[0])
    if len(rows_text) != n + 1:
        raise ValueError(f"expected {n} rows, found {len(rows_text) - 1}")
    rows = [[float(tok) for tok in line.split()] for line in rows_text[1:]]
    if any(len(r) != n for r in rows):
        raise ValueError("row length does not match the state count")
    return FiniteKernel(rows)


def certificate_text(cert: SmallSetCertificate) -> str:
    """Render a certificate as a key = value text block."""
    lines = [
        "K = " + " ".join(str(x) for x in cert.K),
        f"m = {cert.m}",
        f"delta = {cert.delta!r}",
        "nu = " + " ".join(repr(float(w)) for w in cert.nu.weights),
    ]
    if cert.delta_prime is not None:
        lines.append(f"delta_prime = {cert.delta_prime!r}")
    return "\n".join(lines) + "\n"


def parse_certificate(text: str) -> SmallSetCertificate:
    """Parse the key = value block written by certificate_text."""
    fields = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        fields[key.strip()] = value.strip()
    missing = {"K", "m", "delta", "nu"} - fields.keys()
    if missing:
        raise ValueError(f"certificate block is missing {sorted(missing)}")
    return SmallSetCertificate(
        K=tuple(int(x) for x in fields["K"].split()),
        m=int(fields["m"]),
        delta=float(fields["delta"]),
        nu=WeightedMeasure(np.array([float(x) for x in fields["nu"].split()])),
        delta_prime=float(fields["delta_prime"]) if "delta_prime" in fields else None,
    )
