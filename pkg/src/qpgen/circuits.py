"""Charge-basis circuit operators for single-junction and SQUID transmons.

Both charge-parity sectors are built on the same cutoff: the Even sector
carries integer Cooper-pair numbers k in [-Nc, Nc], the Odd sector carries
k + 1/2. The half-Cooper-pair translation operators cos(phi/2), sin(phi/2)
connect the sectors and are assembled as rectangular Odd x Even matrices.

Periodic drives phi(t) = phi_dc + phi_ac sin(w_d t) enter through the
Jacobi-Anger expansion, producing Fourier series whose components remain
purely real in the charge basis (i*sin(phi) is real antisymmetric there),
so the Floquet matrices can stay float64.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .floquet import FourierSeries
from .specfn import bessel_J_all, hermitian_eig


@dataclass(frozen=True)
class TransmonParams:
    """Single-junction transmon; all energies are frequencies E/h in GHz."""

    e_j_GHz: float
    e_c_GHz: float
    n_g: float = 0.0

    def __post_init__(self) -> None:
        if self.e_j_GHz <= 0 or self.e_c_GHz <= 0:
            raise ValueError("E_J and E_C must be positive")


@dataclass(frozen=True)
class SquidParams:
    """Two-junction (SQUID) transmon with flux allocation c1 + c2 = 1."""

    e_j1_GHz: float
    e_j2_GHz: float
    e_c_GHz: float
    n_g: float = 0.0
    c_1: float = 0.5
    c_2: float = 0.5

    def __post_init__(self) -> None:
        if self.e_j1_GHz <= 0 or self.e_j2_GHz <= 0 or self.e_c_GHz <= 0:
            raise ValueError("junction energies and E_C must be positive")
        if abs(self.c_1 + self.c_2 - 1.0) > 1e-12:
            raise ValueError(
                f"flux allocation must satisfy c_1 + c_2 = 1, got {self.c_1 + self.c_2}"
            )


@dataclass(frozen=True)
class ChargeBasisOperators:
    """Charge-basis matrices on a common cutoff Nc for both parity sectors.

    Within-sector operators are (2*Nc+1) square per sector; the half-angle
    operators map Even -> Odd and are rectangular of the same size.
    """

    n_cut: int
    charges_even: np.ndarray
    charges_odd: np.ndarray
    n_even: np.ndarray
    n_odd: np.ndarray
    cos_phi: np.ndarray
    sin_phi: np.ndarray       # complex Hermitian
    i_sin_phi: np.ndarray     # i*sin(phi): real antisymmetric, used for real assembly
    cos_half: np.ndarray      # Even -> Odd rectangle
    sin_half: np.ndarray
    i_sin_half: np.ndarray
    identity: np.ndarray

    @property
    def dim(self) -> int:
        return 2 * self.n_cut + 1


def build_charge_operators(n_cut: int) -> ChargeBasisOperators:
    """Charge operators on both parity sectors with the shift convention
    e^{i phi} |k> = |k+1>."""
    if n_cut < 1:
        raise ValueError(f"charge cutoff must be >= 1, got {n_cut}")
    dim = 2 * n_cut + 1
    k = np.arange(-n_cut, n_cut + 1, dtype=float)
    shift_up = np.eye(dim, k=-1)   # e^{i phi}: row k+1, column k
    shift_dn = np.eye(dim, k=1)    # e^{-i phi}
    cos_phi = 0.5 * (shift_up + shift_dn)
    i_sin_phi = 0.5 * (shift_up - shift_dn)  # i*sin(phi); real antisymmetric
    # e^{i phi/2} maps Even |k> to Odd |k+1/2>, which sits at the same array
    # index, so the raising half-shift is the identity and the lowering one
    # loses the bottom boundary row.
    half_up = np.eye(dim)
    half_dn = np.eye(dim, k=1)
    cos_half = 0.5 * (half_up + half_dn)
    i_sin_half = 0.5 * (half_up - half_dn)
    return ChargeBasisOperators(
        n_cut=n_cut,
        charges_even=k,
        charges_odd=k + 0.5,
        n_even=np.diag(k),
        n_odd=np.diag(k + 0.5),
        cos_phi=cos_phi,
        sin_phi=-1j * i_sin_phi,
        i_sin_phi=i_sin_phi,
        cos_half=cos_half,
        sin_half=-1j * i_sin_half,
        i_sin_half=i_sin_half,
        identity=np.eye(dim),
    )


def charging_term(e_c_GHz: float, n_g: float, charges: np.ndarray) -> np.ndarray:
    return np.diag(4.0 * e_c_GHz * (charges - n_g) ** 2)


def transmon_hamiltonian(p: TransmonParams, ops: ChargeBasisOperators,
                         odd: bool = False) -> np.ndarray:
    """Static H = 4 E_C (n - n_g)^2 - E_J cos(phi) in one parity sector."""
    charges = ops.charges_odd if odd else ops.charges_even
    return charging_term(p.e_c_GHz, p.n_g, charges) - p.e_j_GHz * ops.cos_phi


def squid_hamiltonian(p: SquidParams, ops: ChargeBasisOperators, phi_dc: float = 0.0,
                      odd: bool = False) -> np.ndarray:
    """Static SQUID Hamiltonian at dc flux phi_dc (symmetric or not)."""
    charges = ops.charges_odd if odd else ops.charges_even
    h = charging_term(p.e_c_GHz, p.n_g, charges).astype(complex)
    for e_j, c in ((p.e_j1_GHz, p.c_1), (p.e_j2_GHz, -p.c_2)):
        a = c * phi_dc
        h -= e_j * (math.cos(a) * ops.cos_phi + math.sin(a) * 1j * ops.i_sin_phi)
    if np.abs(h.imag).max() < 1e-15 * max(np.abs(h.real).max(), 1.0):
        return h.real.copy()
    return h


# ---------------------------------------------------------------------------
# Jacobi-Anger drive series
# ---------------------------------------------------------------------------

def _drift_series(cos_op: np.ndarray, i_sin_op: np.ndarray, amplitude: float,
                  dc_phase: float, k_max: int, kind: str) -> dict[int, np.ndarray]:
    """Fourier components of cos/sin(phi_op + dc_phase + amplitude*sin(theta)).

    Uses cos(a sin th) = sum_{k even} J_k(a) e^{ik th} and
    sin(a sin th) = sum_{k odd} (-i) J_k(a) e^{ik th}. The operators are
    passed as the real pair (cos_op, i*sin_op) so even components come out
    real and odd ones purely imaginary (times i_sin_op, i.e. real storage
    is possible upstream).
    """
    if k_max < 0:
        raise ValueError("k_max must be >= 0")
    # rotate the dc phase into the operator pair
    ca, sa = math.cos(dc_phase), math.sin(dc_phase)
    cos_rot = ca * cos_op + 1j * sa * i_sin_op      # cos(phi + dc)
    i_sin_rot = ca * i_sin_op + 1j * sa * cos_op    # i*sin(phi + dc)
    if kind == "sin":
        # sin(x + a sin th): even harmonics carry sin(x), odd ones -i cos(x)
        cos_rot, i_sin_rot = -1j * i_sin_rot, -1j * cos_rot
    elif kind != "cos":
        raise ValueError(f"unknown series kind {kind!r}")
    J = bessel_J_all(k_max, amplitude)
    comps: dict[int, np.ndarray] = {}
    for k in range(0, k_max + 1):
        jk = J[k]
        if k == 0:
            comps[0] = jk * cos_rot
            continue
        if abs(jk) < 1e-300:
            continue
        if k % 2 == 0:
            comps[k] = jk * cos_rot
            comps[-k] = jk * cos_rot
        else:
            # odd harmonics: cos(x + a sin th) -> +i J_k sin(x) via J_{-k} = -J_k
            comps[k] = jk * i_sin_rot
            comps[-k] = -jk * i_sin_rot
    return comps


def _realify(comps: dict[int, np.ndarray]) -> dict[int, np.ndarray]:
    out = {}
    for k, c in comps.items():
        if np.iscomplexobj(c) and np.abs(c.imag).max() < 1e-15 * max(np.abs(c).max(), 1.0):
            out[k] = np.ascontiguousarray(c.real)
        else:
            out[k] = c
    return out


def phase_driven_hamiltonian(static_h: np.ndarray, cos_op: np.ndarray,
                             i_sin_op: np.ndarray, e_j_GHz: float, phi_d: float,
                             k_max: int | None = None) -> FourierSeries:
    """Fourier series of H_static + E_J cos(phi) - E_J cos(phi + phi_d sin(w_d t)).

    Works in any basis: `static_h` is the full static Hamiltonian and the
    operator pair must be expressed in the same basis (e.g. a truncated
    eigenbasis), with i_sin_op = i*sin(phi).
    """
    if k_max is None:
        k_max = _auto_k_max(phi_d)
    comps = _drift_series(cos_op, i_sin_op, phi_d, 0.0, k_max, "cos")
    comps = {k: -e_j_GHz * c for k, c in comps.items()}
    comps[0] = comps[0] + static_h + e_j_GHz * cos_op
    return FourierSeries(_realify(comps))


def transmon_drive_fourier(p: TransmonParams, ops: ChargeBasisOperators, phi_d: float,
                           k_max: int | None = None, odd: bool = False) -> FourierSeries:
    """Fourier series of H(t) = 4E_C(n-n_g)^2 - E_J cos(phi + phi_d sin(w_d t))."""
    charges = ops.charges_odd if odd else ops.charges_even
    static_h = charging_term(p.e_c_GHz, p.n_g, charges) - p.e_j_GHz * ops.cos_phi
    return phase_driven_hamiltonian(static_h, ops.cos_phi, ops.i_sin_phi,
                                    p.e_j_GHz, phi_d, k_max)


def half_angle_ops(cos_half: np.ndarray, i_sin_half: np.ndarray, phi_d: float,
                   dc_phase: float = 0.0,
                   k_max: int | None = None) -> tuple[FourierSeries, FourierSeries]:
    """Fourier series of cos((phi + dc + phi_d sin th)/2) and sin(.../2).

    The operator pair is the Even -> Odd half-angle rectangle in whichever
    basis the dressed eigenvectors live in.
    """
    if k_max is None:
        k_max = _auto_k_max(0.5 * abs(phi_d))
    cos_c = _drift_series(cos_half, i_sin_half, 0.5 * phi_d, 0.5 * dc_phase, k_max, "cos")
    sin_c = _drift_series(cos_half, i_sin_half, 0.5 * phi_d, 0.5 * dc_phase, k_max, "sin")
    return FourierSeries(_realify(cos_c)), FourierSeries(_realify(sin_c))


def transmon_junction_half_ops(p: TransmonParams, ops: ChargeBasisOperators, phi_d: float,
                               k_max: int | None = None) -> tuple[FourierSeries, FourierSeries]:
    """Fourier series of cos((phi + phi_d sin th)/2) and sin(.../2), Even -> Odd."""
    return half_angle_ops(ops.cos_half, ops.i_sin_half, phi_d, 0.0, k_max)


def squid_drive_fourier(
    p: SquidParams,
    ops: ChargeBasisOperators,
    phi_dc: float,
    phi_ac: float,
    k_max: int | None = None,
    odd: bool = False,
) -> FourierSeries:
    """Fourier series of the flux-driven SQUID Hamiltonian.

    Junction phases are phi +/- c_j * phi_e(t) with the external flux
    phi_e(t) = phi_dc + phi_ac sin(w_d t) split across the loop.
    """
    if k_max is None:
        k_max = _auto_k_max(max(abs(p.c_1), abs(p.c_2)) * abs(phi_ac))
    charges = ops.charges_odd if odd else ops.charges_even
    comps: dict[int, np.ndarray] = {0: charging_term(p.e_c_GHz, p.n_g, charges).astype(complex)}
    for e_j, c in ((p.e_j1_GHz, p.c_1), (p.e_j2_GHz, -p.c_2)):
        jc = _drift_series(ops.cos_phi, ops.i_sin_phi, c * phi_ac, c * phi_dc, k_max, "cos")
        for k, mat in jc.items():
            comps[k] = comps.get(k, 0.0) - e_j * mat
    return FourierSeries(_realify(comps))


def squid_junction_half_ops(
    p: SquidParams,
    ops: ChargeBasisOperators,
    phi_dc: float,
    phi_ac: float,
    k_max: int | None = None,
) -> list[tuple[float, FourierSeries, FourierSeries]]:
    """Per-junction (E_J, cos(phi_j/2) series, sin(phi_j/2) series), Even -> Odd."""
    out = []
    for e_j, c in ((p.e_j1_GHz, p.c_1), (p.e_j2_GHz, -p.c_2)):
        cos_s, sin_s = half_angle_ops(ops.cos_half, ops.i_sin_half,
                                      c * phi_ac, c * phi_dc, k_max)
        out.append((e_j, cos_s, sin_s))
    return out


def _auto_k_max(amplitude: float) -> int:
    """Harmonic cutoff where J_k(a) drops well below double precision."""
    a = abs(amplitude)
    return max(6, int(math.ceil(a + 18.0 + 6.0 * a ** (1.0 / 3.0))))


# ---------------------------------------------------------------------------
# Eigenbasis rotation and the static large-amplitude effective model
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EigenbasisOperators:
    """Low-energy eigenbasis data for both parity sectors, truncated to d states."""

    d: int
    energies_even: np.ndarray
    energies_odd: np.ndarray
    basis_even: np.ndarray      # charge-basis columns (dim, d)
    basis_odd: np.ndarray
    n_even: np.ndarray
    cos_phi_even: np.ndarray
    i_sin_phi_even: np.ndarray  # stays real when the eigenvectors are real
    cos_phi_odd: np.ndarray
    i_sin_phi_odd: np.ndarray
    cos_half: np.ndarray        # odd x even, i.e. <odd_b| cos(phi/2) |even_a>
    i_sin_half: np.ndarray

    def static_h(self, odd: bool = False) -> np.ndarray:
        return np.diag(self.energies_odd if odd else self.energies_even)


def to_eigenbasis(h_even: np.ndarray, h_odd: np.ndarray, ops: ChargeBasisOperators,
                  d: int) -> EigenbasisOperators:
    """Diagonalize both parity sectors and rotate the operator set.

    Within-sector operators rotate with their own eigenvectors; the
    half-angle operators become V_odd^dag O V_even rectangles.
    """
    if not 1 <= d <= ops.dim:
        raise ValueError(f"truncation d={d} outside [1, {ops.dim}]")
    w_e, v_e = hermitian_eig(h_even)
    w_o, v_o = hermitian_eig(h_odd)
    v_e, v_o = v_e[:, :d], v_o[:, :d]
    rot_e = lambda o: v_e.conj().T @ o @ v_e
    rot_o = lambda o: v_o.conj().T @ o @ v_o
    cross = lambda o: v_o.conj().T @ o @ v_e
    return EigenbasisOperators(
        d=d,
        energies_even=w_e[:d],
        energies_odd=w_o[:d],
        basis_even=v_e,
        basis_odd=v_o,
        n_even=rot_e(ops.n_even),
        cos_phi_even=rot_e(ops.cos_phi),
        i_sin_phi_even=rot_e(ops.i_sin_phi),
        cos_phi_odd=rot_o(ops.cos_phi),
        i_sin_phi_odd=rot_o(ops.i_sin_phi),
        cos_half=cross(ops.cos_half),
        i_sin_half=cross(ops.i_sin_half),
    )


def eigen_drive_fourier(p: TransmonParams, eig: EigenbasisOperators, phi_d: float,
                        k_max: int | None = None, odd: bool = False) -> FourierSeries:
    """Phase-driven transmon Fourier series in the truncated eigenbasis."""
    if odd:
        return phase_driven_hamiltonian(eig.static_h(True), eig.cos_phi_odd,
                                        eig.i_sin_phi_odd, p.e_j_GHz, phi_d, k_max)
    return phase_driven_hamiltonian(eig.static_h(False), eig.cos_phi_even,
                                    eig.i_sin_phi_even, p.e_j_GHz, phi_d, k_max)


def eigen_junction_half_ops(eig: EigenbasisOperators, phi_d: float,
                            k_max: int | None = None) -> tuple[FourierSeries, FourierSeries]:
    """Half-angle transition-operator series in the truncated eigenbasis."""
    return half_angle_ops(eig.cos_half, eig.i_sin_half, phi_d, 0.0, k_max)


def effective_hamiltonian_kapitza(
    p: SquidParams,
    ops: ChargeBasisOperators,
    phi_ac: float,
    omega_d_GHz: float,
    n_terms: int = 60,
    odd: bool = False,
) -> tuple[np.ndarray, float, float]:
    """Static effective model of the rapidly flux-driven symmetric SQUID.

    Returns (H_eff, E_J_eff, E_J2phi): the averaged potential keeps a
    -2 E_J J_0(phi_ac/2) cos(phi) term plus a drive-induced
    -E_J2phi cos(2 phi) well with
    E_J2phi = (4 E_C E_J^2 / f_d^2) * sum_n [J_{2n}(phi_ac/2)/n]^2.
    """
    if abs(p.e_j1_GHz - p.e_j2_GHz) > 1e-12 * p.e_j1_GHz or abs(p.c_1 - 0.5) > 1e-12:
        raise ValueError("effective model assumes a symmetric SQUID with c_1 = c_2 = 1/2")
    e_j = p.e_j1_GHz
    J = bessel_J_all(2 * n_terms, 0.5 * phi_ac)
    s = sum((J[2 * n] / n) ** 2 for n in range(1, n_terms + 1))
    e_j_eff = 2.0 * e_j * J[0]
    e_j2 = 4.0 * p.e_c_GHz * e_j ** 2 / omega_d_GHz ** 2 * s
    dim = ops.dim
    shift2_up = np.eye(dim, k=-2)
    cos_2phi = 0.5 * (shift2_up + shift2_up.T)
    charges = ops.charges_odd if odd else ops.charges_even
    h = (charging_term(p.e_c_GHz, p.n_g, charges)
         - e_j_eff * ops.cos_phi - e_j2 * cos_2phi)
    return h, e_j_eff, e_j2


def potential_curve(e_j_eff: float, e_j2: float, phi: np.ndarray) -> np.ndarray:
    """Effective Josephson potential U(phi) = -E_J_eff cos(phi) - E_J2phi cos(2 phi)."""
    return -e_j_eff * np.cos(phi) - e_j2 * np.cos(2.0 * phi)
