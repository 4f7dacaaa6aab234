"""Golden-rule quasiparticle generation and tunneling rates for dressed states.

A microwave drive lets an absorbed photon-number n supplement a dressed
qubit transition, so pair breaking across the superconducting gap opens up
whenever h*(n*f_d + E_alpha - E_beta) > 2*Delta. Rates follow from matrix
elements of the junction half-angle operators cos(phi_j/2), sin(phi_j/2)
between the even-parity initial dressed state and odd-parity final states,
weighted by the BCS structure factors S+/S-:

    Gamma^(n) = (16 E_J / h) * [ |<beta,m0-n| cos(phi_j/2) |alpha,m0>|^2 S+(w)
                                + |<beta,m0-n| sin(phi_j/2) |alpha,m0>|^2 S-(w) ]

All energies are frequencies (E/h) in GHz; rates are 1/s.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .floquet import FourierSeries, LabeledSpectrum, TruncationWarning, mean_photon_index
from .specfn import Gap, StructureFactorKind, s_ph_analytic

GHZ_TO_PER_S = 1.0e9


def gamma_ph_per_s(e_j_GHz: float) -> float:
    """Pair-breaking rate prefactor 16 E_J / h in 1/s."""
    return 16.0 * e_j_GHz * GHZ_TO_PER_S


@dataclass(frozen=True)
class QpEnvironment:
    """Superconducting gap plus quasiparticle recombination bookkeeping."""

    gap: Gap = field(default_factory=Gap)
    n_cp: float = 2.0e6            # Cooper pairs in the recombination volume
    c_r_per_s: float = 1.0 / 120e-9  # recombination prefactor

    def __post_init__(self) -> None:
        if self.n_cp <= 0 or self.c_r_per_s <= 0:
            raise ValueError("n_cp and c_r_per_s must be positive")


@dataclass(frozen=True)
class JunctionOperators:
    """Half-angle transition-operator Fourier series for one junction.

    The series map the even-parity sector to the odd one and must be built
    in the same basis as the eigenvectors they will be contracted with.
    """

    junction: int
    e_j_GHz: float
    cos_series: FourierSeries
    sin_series: FourierSeries

    def __post_init__(self) -> None:
        if self.e_j_GHz <= 0:
            raise ValueError("junction energy must be positive")
        if self.cos_series.components[0].shape != self.sin_series.components[0].shape:
            raise ValueError("cos/sin series must share dimensions")


@dataclass(frozen=True)
class RateRow:
    """One (alpha -> beta, n-photon, junction) pair-breaking channel."""

    alpha: int
    beta: int
    n: int
    junction: int
    omega_GHz: float
    gamma_per_s: float
    flags: tuple[str, ...] = ()


def _channel_gamma(elem_cos: complex, elem_sin: complex, omega_GHz: float,
                   e_j_GHz: float, gap: Gap) -> float:
    sp = s_ph_analytic(StructureFactorKind.PLUS, omega_GHz, gap)
    sm = s_ph_analytic(StructureFactorKind.MINUS, omega_GHz, gap)
    return gamma_ph_per_s(e_j_GHz) * (abs(elem_cos) ** 2 * sp + abs(elem_sin) ** 2 * sm)


def interior_n_max(m0: int, m_max: int, m_guard: int = 5) -> int:
    """Largest photon number n with the final replica m0 - n inside the
    guard window |m| <= m_max - m_guard."""
    n = m0 + m_max - m_guard
    if n < 1:
        raise ValueError(
            f"no interior absorption channels for m0={m0}, m_max={m_max}, guard={m_guard}"
        )
    return n


def _check_interior(m: int, m_max: int, m_guard: int) -> None:
    if abs(m) > m_max - m_guard:
        raise ValueError(
            f"replica index {m} lies in the guard band (|m| > {m_max - m_guard})"
        )


def _check_no_open_emission(e_alpha: float, odd_energies: np.ndarray, gap: Gap) -> None:
    # n <= 0 channels are excluded from the sums; that is only valid while
    # the undriven transitions all sit below the pair-breaking threshold.
    head = float(e_alpha - odd_energies.min())
    if head > gap.pair_breaking_GHz:
        raise RuntimeError(
            f"bare transition energy {head:.3f} GHz exceeds the pair-breaking "
            f"threshold {gap.pair_breaking_GHz:.3f} GHz; n <= 0 channels "
            "cannot be neglected"
        )


def pair_breaking_channels(
    even_labels: LabeledSpectrum,
    odd_labels: LabeledSpectrum,
    point: int,
    alpha: int,
    m0: int,
    junctions: Sequence[JunctionOperators],
    env: QpEnvironment,
    betas: Sequence[int] | None = None,
    n_values: Sequence[int] | None = None,
    m_guard: int = 5,
) -> list[RateRow]:
    """Labeled-channel rates Gamma_{alpha beta}^{(n)} at one sweep point.

    Both spectra must track the required (state, replica) pairs: the even
    one (alpha, m0), the odd one (beta, m0 - n) for every requested (beta,
    n). Channels with h*omega below the pair-breaking threshold contribute
    zero rows (kept, flagged 'below-threshold').
    """
    M = even_labels.m_max
    _check_interior(m0, M, m_guard)
    if betas is None:
        betas = sorted({a for a, _ in odd_labels.tracked})
    if n_values is None:
        n_values = range(1, interior_n_max(m0, M, m_guard) + 1)
    n_values = list(n_values)
    _check_no_open_emission(float(even_labels.base_energies[alpha]),
                            odd_labels.base_energies, env.gap)

    e_alpha = even_labels.energy(point, alpha, m0)
    v_alpha = even_labels.vector(point, alpha, m0).reshape(2 * M + 1, even_labels.dim)
    rows: list[RateRow] = []
    for j in junctions:
        w_cos = j.cos_series.apply_blocks(v_alpha).ravel()
        w_sin = j.sin_series.apply_blocks(v_alpha).ravel()
        for n in n_values:
            _check_interior(m0 - n, M, m_guard)
            for beta in betas:
                flags: list[str] = []
                if odd_labels.is_ambiguous(point, beta, m0 - n):
                    flags.append("ambiguous-label")
                v_beta = odd_labels.vector(point, beta, m0 - n)
                omega = e_alpha - odd_labels.energy(point, beta, m0 - n)
                if omega <= env.gap.pair_breaking_GHz:
                    rows.append(RateRow(alpha, beta, n, j.junction, omega, 0.0,
                                        tuple(flags + ["below-threshold"])))
                    continue
                gamma = _channel_gamma(np.vdot(v_beta, w_cos), np.vdot(v_beta, w_sin),
                                       omega, j.e_j_GHz, env.gap)
                rows.append(RateRow(alpha, beta, n, j.junction, omega, gamma, tuple(flags)))
    return rows


def direct_sum_channels(
    even_vector: np.ndarray,
    e_alpha: float,
    odd_energies: np.ndarray,
    odd_vectors: np.ndarray,
    junctions: Sequence[JunctionOperators],
    env: QpEnvironment,
    alpha: int,
    m0: int,
    m_max: int,
    dim: int,
    m_guard: int = 5,
) -> list[RateRow]:
    """Rates summed over every odd-sector Floquet eigenvector directly.

    Each interior eigenvector is one (beta, n) channel: its replica index
    is estimated from the mean photon index and only columns inside the
    guard window are kept, so no channel is double counted. `beta` is
    reported as the eigenvector's energy rank within its replica bucket.
    """
    _check_interior(m0, m_max, m_guard)
    blocks = even_vector.reshape(2 * m_max + 1, dim)
    mbar = mean_photon_index(odd_vectors, dim, m_max)
    m_est = np.rint(mbar).astype(int)
    keep = np.abs(m_est) <= m_max - m_guard
    omega = e_alpha - odd_energies
    rows: list[RateRow] = []
    # energy rank within each replica bucket, for reporting only
    rank: dict[int, int] = {}
    beta_of = np.zeros(odd_energies.size, dtype=int)
    for idx in np.argsort(odd_energies):
        m = int(m_est[idx])
        beta_of[idx] = rank.get(m, 0)
        rank[m] = beta_of[idx] + 1
    for j in junctions:
        w_cos = j.cos_series.apply_blocks(blocks).ravel()
        w_sin = j.sin_series.apply_blocks(blocks).ravel()
        elems_cos = odd_vectors.conj().T @ w_cos
        elems_sin = odd_vectors.conj().T @ w_sin
        for lam in np.nonzero(keep)[0]:
            n = m0 - int(m_est[lam])
            if omega[lam] <= env.gap.pair_breaking_GHz:
                continue
            gamma = _channel_gamma(elems_cos[lam], elems_sin[lam], float(omega[lam]),
                                   j.e_j_GHz, env.gap)
            rows.append(RateRow(alpha, int(beta_of[lam]), n, j.junction,
                                float(omega[lam]), gamma, ("direct-sum",)))
    return rows


def total_rate(rows: Iterable[RateRow], m0: int | None = None, m_max: int | None = None,
               m_guard: int = 5) -> float:
    """Gamma_alpha = sum over channels, warning when the largest contributing
    photon number sits near the interior-window edge."""
    rows = list(rows)
    gamma = sum(r.gamma_per_s for r in rows)
    if m0 is not None and m_max is not None:
        n_edge = interior_n_max(m0, m_max, m_guard)
        # far-replica channels always carry some numerical dust; only count
        # channels that actually matter for the total
        floor = 1e-9 * max((r.gamma_per_s for r in rows), default=0.0)
        contributing = [r.n for r in rows if r.gamma_per_s > floor and r.gamma_per_s > 0.0]
        if contributing and max(contributing) >= n_edge - 2:
            warnings.warn(
                f"largest contributing photon number n={max(contributing)} is within "
                f"2 of the interior-window edge n_max={n_edge}; increase m_max",
                TruncationWarning,
                stacklevel=2,
            )
    return gamma


def lifetime_s(gamma_per_s: float) -> float:
    """Parity lifetime 1/Gamma with an explicit infinity for zero rate."""
    if gamma_per_s < 0:
        raise ValueError("negative rate")
    return math.inf if gamma_per_s == 0.0 else 1.0 / gamma_per_s


def steady_state_xqp(gamma_per_s: float, env: QpEnvironment) -> float:
    """Normalized steady-state quasiparticle density x_qp* = sqrt(Gamma / (N_cp c_r))."""
    if gamma_per_s < 0:
        raise ValueError("negative rate")
    return math.sqrt(gamma_per_s / (env.n_cp * env.c_r_per_s))


def qp_tunneling_rate(
    even_labels: LabeledSpectrum,
    odd_labels: LabeledSpectrum,
    point: int,
    alpha: int,
    beta: int,
    m0: int,
    junctions: Sequence[JunctionOperators],
    s_qp_plus: Callable[[float], float],
    s_qp_minus: Callable[[float], float],
    m_guard: int = 5,
) -> float:
    """Rate of existing quasiparticles tunneling across the junction(s).

    Uses the opposite structure-factor pairing from pair breaking — the
    cos element weights s_qp_minus and the sin element s_qp_plus — with
    final replica m0 + n and frequency argument w = n*f_d + (E_beta -
    E_alpha). The spectral weights are supplied by the caller (they depend
    on the quasiparticle distribution), as plain callables of w in GHz.
    """
    M = even_labels.m_max
    _check_interior(m0, M, m_guard)
    e_alpha = even_labels.energy(point, alpha, m0)
    v_alpha = even_labels.vector(point, alpha, m0).reshape(2 * M + 1, even_labels.dim)
    interior = M - m_guard
    n_lo, n_hi = -interior - m0, interior - m0
    tracked = set(odd_labels.tracked)
    gamma = 0.0
    for j in junctions:
        w_cos = j.cos_series.apply_blocks(v_alpha).ravel()
        w_sin = j.sin_series.apply_blocks(v_alpha).ravel()
        for n in range(n_lo, n_hi + 1):
            if (beta, m0 + n) not in tracked:
                continue
            v_beta = odd_labels.vector(point, beta, m0 + n)
            # extended energies already carry the replica offsets, so the
            # difference is n*f_d + (E_beta - E_alpha) directly
            omega = odd_labels.energy(point, beta, m0 + n) - e_alpha
            gamma += gamma_ph_per_s(j.e_j_GHz) * (
                abs(np.vdot(v_beta, w_cos)) ** 2 * s_qp_minus(omega)
                + abs(np.vdot(v_beta, w_sin)) ** 2 * s_qp_plus(omega)
            )
    return gamma
