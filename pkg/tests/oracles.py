"""Independent oracle routes used by the test suite.

Everything here recomputes quantities from first principles with plain
numpy summation, dense finite differences, or coefficient convolution, so
agreement with the package is a genuine two-route check.  In particular
nothing in this file calls scipy.fft or the package transforms.
"""

import numpy as np

TWO_PI = 2.0 * np.pi


def ell(k):
    """Eigenvalue 1 + 4 pi^2 k^2 of 1 - d^2/dxi^2 for frequency k."""
    k = np.asarray(k, dtype=float)
    return 1.0 + 4.0 * np.pi**2 * k**2


def synth_scale(n_modes):
    """Physical amplitude sqrt(2/l_k) of each flat-layout slot (1 for c0)."""
    k = np.zeros(2 * n_modes + 1)
    k[1::2] = np.arange(1, n_modes + 1)
    k[2::2] = np.arange(1, n_modes + 1)
    s = np.sqrt(2.0 / ell(k))
    s[0] = 1.0
    return s


def synthesize(coeffs, xs, deriv=0):
    """Evaluate the field (or its deriv-th derivative) by direct summation.

    coeffs is the flat layout [c0, a1, b1, ...].  The d-th derivative of
    cos(2 pi k xi) is (2 pi k)^d cos(2 pi k xi + d pi/2), likewise for sin,
    so each mode contributes an explicitly phase-shifted trig term.
    """
    coeffs = np.asarray(coeffs, dtype=float)
    xs = np.asarray(xs, dtype=float)
    n_modes = (coeffs.size - 1) // 2
    s = synth_scale(n_modes)
    out = np.zeros_like(xs)
    if deriv == 0:
        out += coeffs[0]
    shift = deriv * np.pi / 2.0
    for k in range(1, n_modes + 1):
        theta = TWO_PI * k * xs
        fac = (TWO_PI * k) ** deriv
        out += coeffs[2 * k - 1] * s[2 * k - 1] * fac * np.cos(theta + shift)
        out += coeffs[2 * k] * s[2 * k] * fac * np.sin(theta + shift)
    return out


def h_norm_by_quadrature(coeffs, n_points=4096):
    """sqrt(int u^2 + (u')^2) by the periodic rectangle rule.

    The rule is exact for trigonometric polynomials once n_points exceeds
    twice the integrand bandwidth.
    """
    xs = np.arange(n_points) / n_points
    u = synthesize(coeffs, xs)
    up = synthesize(coeffs, xs, deriv=1)
    return float(np.sqrt(np.mean(u * u + up * up)))


def rectangle_analysis(values, n_modes):
    """Recover the flat coefficient layout from uniform grid samples.

    Plain rectangle-rule inner products against 1, cos, sin; exact when the
    sample count resolves the bandwidth.
    """
    values = np.asarray(values, dtype=float)
    m = values.size
    xs = np.arange(m) / m
    s = synth_scale(n_modes)
    out = np.zeros(2 * n_modes + 1)
    out[0] = values.mean()
    for k in range(1, n_modes + 1):
        ck = 2.0 * np.mean(values * np.cos(TWO_PI * k * xs))
        sk = 2.0 * np.mean(values * np.sin(TWO_PI * k * xs))
        out[2 * k - 1] = ck / s[2 * k - 1]
        out[2 * k] = sk / s[2 * k]
    return out


def to_complex(coeffs):
    """Two-sided complex Fourier coefficients c_{-N}..c_N (origin at N)."""
    coeffs = np.asarray(coeffs, dtype=float)
    n_modes = (coeffs.size - 1) // 2
    s = synth_scale(n_modes)
    c = np.zeros(2 * n_modes + 1, dtype=complex)
    c[n_modes] = coeffs[0]
    for k in range(1, n_modes + 1):
        a = coeffs[2 * k - 1] * s[2 * k - 1]
        b = coeffs[2 * k] * s[2 * k]
        c[n_modes + k] = 0.5 * (a - 1j * b)
        c[n_modes - k] = 0.5 * (a + 1j * b)
    return c


def from_complex(c, origin, n_modes):
    """Truncate a two-sided complex array back to the flat layout."""
    s = synth_scale(n_modes)
    out = np.zeros(2 * n_modes + 1)
    out[0] = c[origin].real
    for k in range(1, n_modes + 1):
        ck = c[origin + k] if origin + k < c.size else 0.0
        out[2 * k - 1] = 2.0 * np.real(ck) / s[2 * k - 1]
        out[2 * k] = -2.0 * np.imag(ck) / s[2 * k]
    return out


def poly_by_convolution(pcoeffs, coeffs):
    """Coefficients of P(u) via exact convolution of Fourier sequences.

    Powers of u are built with np.convolve on the two-sided complex
    coefficients, then the polynomial is assembled and truncated back to the
    input bandwidth.  This is the independent route against pseudospectral
    dealiased evaluation.
    """
    pcoeffs = np.asarray(pcoeffs, dtype=float)
    coeffs = np.asarray(coeffs, dtype=float)
    n_modes = (coeffs.size - 1) // 2
    deg = pcoeffs.size - 1
    c = to_complex(coeffs)
    m = deg * n_modes
    acc = np.zeros(2 * m + 1, dtype=complex)
    acc[m] = pcoeffs[0]
    power = np.array([1.0 + 0j])
    origin = 0
    for j in range(1, deg + 1):
        power = np.convolve(power, c)
        origin += n_modes
        if pcoeffs[j] != 0.0:
            lo = m - origin
            acc[lo : lo + power.size] += pcoeffs[j] * power
    return from_complex(acc, m, n_modes)


def fd_eigenvalue(k, h):
    """Apply 1 - d^2/dxi^2 to a sampled cosine with a dense FD stencil."""
    m = int(round(1.0 / h))
    xs = np.arange(m) / m
    u = np.cos(TWO_PI * k * xs)
    upp = (np.roll(u, -1) - 2.0 * u + np.roll(u, 1)) * m * m
    w = u - upp
    j = int(np.argmax(np.abs(u)))
    return w[j] / u[j]


def fd_eigenvalue_richardson(k, h=1.0 / 1024.0):
    """Richardson-extrapolated FD eigenvalue, O(h^4) accurate."""
    return (4.0 * fd_eigenvalue(k, h / 2.0) - fd_eigenvalue(k, h)) / 3.0


def fd_heat_decay(k, t, n_grid=256):
    """Decay factor of mode k under u_t = u_xx - u by explicit FD stepping."""
    xs = np.arange(n_grid) / n_grid
    u = np.cos(TWO_PI * k * xs)
    h2 = 1.0 / n_grid**2
    n_steps = int(np.ceil(t / (h2 / 4.0)))
    dt = t / n_steps
    for _ in range(n_steps):
        upp = (np.roll(u, -1) - 2.0 * u + np.roll(u, 1)) / h2
        u = u + dt * (upp - u)
    return float(u[0])
