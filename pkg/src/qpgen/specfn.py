"""Special functions and numerical kernels.

Complete elliptic integrals (AGM), Bessel functions of the first kind
(Miller's downward recurrence), the pair-breaking structure factors S_ph^±
(closed form and quadrature), and the dense Hermitian eigensolver contract
used throughout the package.

Unit conventions: energies are stored as frequencies (value/h, in GHz),
rates in s^-1. The dimensionless structure-factor argument is
z = hbar*omega/Delta = f / (Delta/h).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad


class StructureFactorKind(enum.Enum):
    """Selects S^+ (pairs with the cos-type matrix element) or S^- (sin-type)."""

    PLUS = "plus"
    MINUS = "minus"


@dataclass(frozen=True)
class Gap:
    """Superconducting gap, stored as Delta/h in GHz.

    The default corresponds to bulk aluminum, 2*Delta/h = 90 GHz.
    """

    delta_GHz: float = 45.0

    def __post_init__(self) -> None:
        if not self.delta_GHz > 0:
            raise ValueError(f"gap must be positive, got {self.delta_GHz}")

    @property
    def pair_breaking_GHz(self) -> float:
        """Pair-breaking threshold frequency 2*Delta/h in GHz."""
        return 2.0 * self.delta_GHz

    def z(self, freq_GHz: float) -> float:
        """Dimensionless frequency z = hbar*omega/Delta for f in GHz."""
        return freq_GHz / self.delta_GHz


_AGM_TOL = 1e-16
_AGM_MAX_ITER = 64


def elliptic_K(m: float) -> float:
    """Complete elliptic integral K(m), parameter convention m = k^2.

    Computed by the arithmetic-geometric mean iteration; negative m is
    allowed (1 - m > 1 keeps the AGM real).
    """
    if m >= 1.0:
        raise ValueError(f"elliptic_K requires m < 1, got {m}")
    a, b = 1.0, math.sqrt(1.0 - m)
    for _ in range(_AGM_MAX_ITER):
        if abs(a - b) <= _AGM_TOL * abs(a):
            break
        a, b = 0.5 * (a + b), math.sqrt(a * b)
    return math.pi / (2.0 * a)


def elliptic_E(m: float) -> float:
    """Complete elliptic integral E(m), parameter convention m = k^2."""
    if m > 1.0:
        raise ValueError(f"elliptic_E requires m <= 1, got {m}")
    if m == 1.0:
        return 1.0
    # E = K * (1 - sum_{n>=0} 2^{n-1} c_n^2), c_0^2 = m, c_{n+1} = (a_n - b_n)/2.
    a, b = 1.0, math.sqrt(1.0 - m)
    s = 0.5 * m
    p = 0.5
    for _ in range(_AGM_MAX_ITER):
        if abs(a - b) <= _AGM_TOL * abs(a):
            break
        c = 0.5 * (a - b)
        a, b = 0.5 * (a + b), math.sqrt(a * b)
        p *= 2.0
        s += p * c * c
    K = math.pi / (2.0 * a)
    return K * (1.0 - s)


def bessel_J(order: int, x: float) -> float:
    """Bessel function of the first kind J_order(x) for integer order >= 0.

    Miller's downward recurrence with even-harmonic normalization; accurate
    to ~1e-12 absolute over |x| <= 50.
    """
    if order < 0:
        raise ValueError(f"order must be >= 0, got {order}")
    return bessel_J_all(order, x)[order]


def bessel_J_all(n_max: int, x: float) -> np.ndarray:
    """J_0(x) .. J_{n_max}(x) in one downward-recurrence pass."""
    if n_max < 0:
        raise ValueError(f"n_max must be >= 0, got {n_max}")
    sign = np.ones(n_max + 1)
    if x < 0:
        # J_n(-x) = (-1)^n J_n(x)
        sign[1::2] = -1.0
        x = -x
    if x == 0.0:
        out = np.zeros(n_max + 1)
        out[0] = 1.0
        return out
    if x < 1e-7:
        # leading series terms; avoids the recurrence's 0/0 at tiny x
        out = np.zeros(n_max + 1)
        term = 1.0
        for n in range(n_max + 1):
            out[n] = term * (1.0 - 0.25 * x * x / (n + 1))
            term *= 0.5 * x / (n + 1)
        return sign * out
    start = n_max + int(1.4 * x) + 42
    if start % 2:
        start += 1
    jp, j = 0.0, 1e-300
    out = np.zeros(n_max + 1)
    norm = 0.0
    for k in range(start, 0, -1):
        jm = (2.0 * k / x) * j - jp
        jp, j = j, jm
        if abs(j) > 1e250:
            jp *= 1e-250
            j *= 1e-250
            out *= 1e-250
            norm *= 1e-250
        k -= 1  # now holds J_k in j
        if k <= n_max:
            out[k] = j
        if k % 2 == 0:
            norm += j if k == 0 else 2.0 * j
    return sign * (out / norm)


def _s_integrand_reduced(u: float, z: float, sgn: float) -> float:
    # After x = 1 + u^2 the sqrt(x - 1) endpoint factor cancels against dx = 2u du;
    # integrand of the half-range [1, z/2], doubled by the x <-> z-x symmetry.
    x = 1.0 + u * u
    y = z - x
    return 4.0 * (x * y + sgn) / (math.sqrt(x + 1.0) * math.sqrt((y - 1.0) * (y + 1.0)))


def s_ph_quadrature(
    kind: StructureFactorKind, freq_GHz: float, gap: Gap, tol: float = 1e-10
) -> float:
    """Structure factor S_ph^± via adaptive quadrature of the reduced integral.

    The delta-constrained double integral collapses to
    ∫_1^{z-1} dx (x(z-x) ± 1) / (sqrt(x²-1) sqrt((z-x)²-1)); the inverse-
    square-root endpoints are removed by the substitution x = 1 + u² and the
    x <-> z-x symmetry. Returns 0 for z <= 2 (empty domain).
    """
    if not tol > 0:
        raise ValueError(f"tol must be positive, got {tol}")
    z = gap.z(freq_GHz)
    if z <= 2.0:
        return 0.0
    sgn = 1.0 if kind is StructureFactorKind.PLUS else -1.0
    u_max = math.sqrt(0.5 * z - 1.0)
    val, _ = quad(
        _s_integrand_reduced, 0.0, u_max, args=(z, sgn), epsabs=0.0, epsrel=tol, limit=400
    )
    return val


def s_ph_analytic(kind: StructureFactorKind, freq_GHz: float, gap: Gap) -> float:
    """Closed-form structure factor S_ph^±(omega) in terms of K and E.

    With z = hbar*omega/Delta and parameter m = ((z-2)/(z+2))²:

        S^±(z) = (z+2) E(m) - 4 (z+1∓1)/(z+2) K(m)

    (argument convention and signs fixed against the quadrature form, which
    is authoritative; this reproduces the thresholds S⁺→π, S⁻→0 at z→2⁺).
    Returns 0 at or below the pair-breaking threshold z <= 2.
    """
    z = gap.z(freq_GHz)
    if z <= 2.0:
        return 0.0
    k = (z - 2.0) / (z + 2.0)
    m = k * k
    sgn = 1.0 if kind is StructureFactorKind.PLUS else -1.0
    return (z + 2.0) * elliptic_E(m) - 4.0 * (z + 1.0 - sgn) / (z + 2.0) * elliptic_K(m)


def hermitian_eig(H: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a Hermitian matrix with a deterministic gauge.

    Returns (eigenvalues ascending, eigenvectors as orthonormal columns);
    each column's first significant component is rotated to be positive
    real. Raises if the input violates the Hermiticity contract.
    """
    H = np.asarray(H)
    if H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {H.shape}")
    scale = np.abs(H).max() or 1.0
    dev = np.abs(H - H.conj().T).max()
    if dev > 1e-10 * scale:
        raise ValueError(
            f"matrix is not Hermitian: max |H - H^dag| = {dev:.3e} vs {1e-10 * scale:.3e} allowed"
        )
    w, V = np.linalg.eigh(H)
    V = _fix_column_phases(V)
    return w, V


def _fix_column_phases(V: np.ndarray) -> np.ndarray:
    V = V.copy()
    absV = np.abs(V)
    thresh = 1e-8 * absV.max(axis=0)
    for j in range(V.shape[1]):
        i = int(np.argmax(absV[:, j] > thresh[j]))
        v = V[i, j]
        if np.iscomplexobj(V):
            ph = v / abs(v)
            V[:, j] *= np.conj(ph)
        elif v < 0:
            V[:, j] *= -1.0
    return V
