"""Sweep orchestration for the three driven-qubit case studies.

* charge-driven transmon: pair-breaking rate maps over (drive frequency,
  amplitude) and cuts of constant ac-Stark shift,
* dispersive readout: parity lifetimes versus resonator photon number at
  fixed dispersive shift,
* flux-modulated SQUID (Floquet 0-pi regime): lifetimes of the 0- and
  pi-well states versus flux drive amplitude,

plus truncation-convergence audits. Grid totals are obtained by direct
summation over every interior odd-parity Floquet eigenvector (robust at
multiphoton resonances, where per-state labels can collide); labeled final
states are used for the state-resolved {g, e} decompositions.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from . import circuits as cir
from . import floquet as flq
from . import rates as rts
from .circuits import SquidParams, TransmonParams
from .floquet import FloquetProblem, LabeledSpectrum, TruncationWarning
from .rates import JunctionOperators, QpEnvironment, RateRow
from .specfn import hermitian_eig


@dataclass(frozen=True)
class Numerics:
    """Truncation knobs shared by the transmon scenarios."""

    n_cut: int = 50
    d: int = 20
    m_max: int = 15
    m_guard: int = 5
    k_max: int | None = None

    def __post_init__(self) -> None:
        if self.d < 2 or self.n_cut < 1 or self.m_max < 1:
            raise ValueError("invalid truncation parameters")
        if self.m_guard < 0 or self.m_guard >= self.m_max:
            raise ValueError("m_guard must lie in [0, m_max)")

    @property
    def m0(self) -> int:
        """Initial photon index; positive to maximize the usable downward range."""
        return math.ceil(self.m_max / 2)


#: transmon scenarios keep the extended dimension at desk scale
TRANSMON_DIM_CAP = 2000
SQUID_DIM_CAP = 8100


def _check_axis(values: Sequence[float], name: str) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 1 or arr.size == 0 or not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} axis must be a non-empty finite 1-D grid")
    if arr.size > 1 and not (np.all(np.diff(arr) > 0) or np.all(np.diff(arr) < 0)):
        raise ValueError(f"{name} axis must be strictly monotone")
    return arr


def _row_dict(grid_index: int, omega_d: float, amplitude: float, r: RateRow,
              t_s: float, xqp: float) -> dict:
    return {
        "grid_index": grid_index,
        "omega_d_GHz": omega_d,
        "amplitude": amplitude,
        "alpha": r.alpha,
        "beta": r.beta,
        "n": r.n,
        "junction": r.junction,
        "omega_GHz": r.omega_GHz,
        "gamma_per_s": r.gamma_per_s,
        "T_s": t_s,
        "xqp_star": xqp,
        "flags": ";".join(r.flags),
    }


def build_transmon_eigenbasis(p: TransmonParams, num: Numerics) -> cir.EigenbasisOperators:
    ops = cir.build_charge_operators(num.n_cut)
    return cir.to_eigenbasis(
        cir.transmon_hamiltonian(p, ops),
        cir.transmon_hamiltonian(p, ops, odd=True),
        ops,
        num.d,
    )


def _transmon_problems(p: TransmonParams, eig, phi_ds: Sequence[float],
                       omega_d: float, num: Numerics, odd: bool) -> list[FloquetProblem]:
    return [
        FloquetProblem(
            cir.eigen_drive_fourier(p, eig, pd, num.k_max, odd=odd),
            omega_d,
            num.m_max,
            dim_limit=TRANSMON_DIM_CAP,
        )
        for pd in phi_ds
    ]


def _alpha_totals(rows_by_alpha: Mapping[int, list[RateRow]], env: QpEnvironment,
                  m0: int, m_max: int, m_guard: int) -> dict[int, tuple[float, float, float]]:
    out = {}
    for alpha, rows in rows_by_alpha.items():
        gamma = rts.total_rate(rows, m0=m0, m_max=m_max, m_guard=m_guard)
        out[alpha] = (gamma, rts.lifetime_s(gamma), rts.steady_state_xqp(gamma, env))
    return out


# ---------------------------------------------------------------------------
# Charge-driven transmon
# ---------------------------------------------------------------------------

def charge_drive_map(
    p: TransmonParams,
    omega_d_values: Sequence[float],
    omega_values: Sequence[float],
    num: Numerics = Numerics(),
    env: QpEnvironment = QpEnvironment(),
    alphas: Sequence[int] = (0,),
    threads: int = 1,
) -> list[dict]:
    """Total parity-switching rate over a (drive frequency, amplitude) grid.

    The phase-drive amplitude at each point is phi_d = Omega / omega_d
    (charge-displaced frame). Each frequency column is an independent
    labeling sweep in Omega; totals sum over all interior odd eigenvectors.
    """
    omega_ds = _check_axis(omega_d_values, "omega_d")
    omegas = _check_axis(omega_values, "Omega")
    if omegas[0] != 0.0:
        raise ValueError("Omega axis must start at zero (labeling contract)")
    eig = build_transmon_eigenbasis(p, num)

    def column(i_wd: int) -> list[dict]:
        omega_d = float(omega_ds[i_wd])
        phi_ds = [float(om) / omega_d for om in omegas]
        probs_e = _transmon_problems(p, eig, phi_ds, omega_d, num, odd=False)
        probs_o = _transmon_problems(p, eig, phi_ds, omega_d, num, odd=True)
        labels = flq.label_sweep(probs_e, [(a, num.m0) for a in alphas], axis=omegas)
        rows: list[dict] = []
        for j, om in enumerate(omegas):
            w_o, v_o = flq.diagonalize(probs_o[j])
            junctions = [JunctionOperators(
                1, p.e_j_GHz, *cir.eigen_junction_half_ops(eig, phi_ds[j], num.k_max))]
            gi = i_wd * len(omegas) + j
            for a in alphas:
                ch = rts.direct_sum_channels(
                    labels.vector(j, a, num.m0), labels.energy(j, a, num.m0),
                    w_o, v_o, junctions, env, a, num.m0, num.m_max, num.d,
                    m_guard=num.m_guard)
                gamma = rts.total_rate(ch, m0=num.m0, m_max=num.m_max, m_guard=num.m_guard)
                t_s, xqp = rts.lifetime_s(gamma), rts.steady_state_xqp(gamma, env)
                if not ch:  # keep one explicit zero row per (point, state)
                    ch = [RateRow(a, -1, 0, 1, 0.0, 0.0, ("no-open-channel",))]
                if labels.is_ambiguous(j, a, num.m0):
                    ch = [replace(r, flags=r.flags + ("ambiguous-label",)) for r in ch]
                rows.extend(_row_dict(gi, omega_d, float(om), r, t_s, xqp) for r in ch)
        return rows

    return _gather([column], range(len(omega_ds)), threads)


def _gather(fns: Sequence[Callable[[int], list[dict]]], indices: Iterable[int],
            threads: int) -> list[dict]:
    fn = fns[0]
    idx = list(indices)
    if threads <= 1 or len(idx) <= 1:
        chunks = [fn(i) for i in idx]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            chunks = list(pool.map(fn, idx))
    out: list[dict] = []
    for c in chunks:
        out.extend(c)
    out.sort(key=lambda r: (r["grid_index"], r["alpha"], r["junction"], r["n"],
                            r["beta"], r["omega_GHz"]))
    return out


@dataclass
class StarkSolution:
    omega_d_GHz: float
    omega_GHz: float          # solved drive amplitude Omega
    delta_ac_GHz: float
    iterations: int
    flags: tuple[str, ...] = ()


def _stark_of_omega(p: TransmonParams, eig, omega_d: float, omega: float,
                    num: Numerics, n_steps: int = 2) -> float:
    """ac-Stark shift at drive amplitude Omega via a short labeling sweep."""
    if omega == 0.0:
        return 0.0
    oms = np.linspace(0.0, omega, max(2, n_steps))
    phi_ds = [float(om) / omega_d for om in oms]
    probs = _transmon_problems(p, eig, phi_ds, omega_d, num, odd=False)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", TruncationWarning)
        labels = flq.label_sweep(probs, [(0, num.m0), (1, num.m0)], axis=oms)
    return float(flq.stark_shift(labels, m=num.m0)[-1])


def solve_constant_stark(
    p: TransmonParams,
    eig,
    omega_d: float,
    num: Numerics,
    delta_target_GHz: float = 3e-3,
    tol_GHz: float = 1e-6,
    omega_max: float = 40.0,
    max_iter: int = 80,
) -> StarkSolution:
    """Bisect the drive amplitude until |delta_ac| matches the target.

    The shift magnitude must grow monotonically over the solved bracket;
    a violation (multiphoton resonance inside the bracket) is flagged and
    the point is reported unusable rather than silently crossed.
    """
    target = abs(delta_target_GHz)
    f = lambda om: abs(_stark_of_omega(p, eig, omega_d, om, num))
    # expand the bracket geometrically from a perturbative guess
    lo, f_lo = 0.0, 0.0
    hi = 0.05 * omega_d
    f_hi = f(hi)
    expansions = 0
    while f_hi < target:
        lo, f_lo = hi, f_hi
        hi *= 2.0
        if hi > omega_max:
            return StarkSolution(omega_d, math.nan, math.nan, expansions,
                                 ("no-bracket",))
        f_hi = f(hi)
        if f_hi < f_lo:
            return StarkSolution(omega_d, math.nan, math.nan, expansions,
                                 ("non-monotone-stark",))
        expansions += 1
    it = 0
    while hi - lo > 0 and it < max_iter:
        mid = 0.5 * (lo + hi)
        f_mid = f(mid)
        if abs(f_mid - target) <= tol_GHz:
            return StarkSolution(omega_d, mid, math.copysign(f_mid, -1.0), it)
        if not (f_lo - 1e-12 <= f_mid <= f_hi + 1e-12):
            return StarkSolution(omega_d, math.nan, math.nan, it,
                                 ("non-monotone-stark",))
        if f_mid < target:
            lo, f_lo = mid, f_mid
        else:
            hi, f_hi = mid, f_mid
        it += 1
    return StarkSolution(omega_d, math.nan, math.nan, it, ("no-convergence",))


def constant_stark_cut(
    p: TransmonParams,
    omega_d_values: Sequence[float],
    num: Numerics = Numerics(),
    env: QpEnvironment = QpEnvironment(),
    delta_target_GHz: float = 3e-3,
    tol_GHz: float = 1e-6,
    betas: Sequence[int] = (0, 1),
    sweep_step_phi: float = 0.05,
    threads: int = 1,
) -> tuple[list[dict], list[StarkSolution]]:
    """State-resolved rates along the constant-ac-Stark-shift line.

    For each drive frequency the amplitude is solved so the qubit Stark
    shift magnitude equals the target (default 3 MHz within 1 kHz), then
    Gamma_{alpha beta} are computed for alpha, beta in the qubit manifold
    through labeled final states.
    """
    omega_ds = _check_axis(omega_d_values, "omega_d")
    eig = build_transmon_eigenbasis(p, num)
    n_hi_cap = rts.interior_n_max(num.m0, num.m_max, num.m_guard)
    solutions: list[StarkSolution] = []

    def point(i_wd: int) -> list[dict]:
        omega_d = float(omega_ds[i_wd])
        sol = solve_constant_stark(p, eig, omega_d, num, delta_target_GHz, tol_GHz)
        solutions.append(sol)
        if sol.flags:
            return []
        phi_d = sol.omega_GHz / omega_d
        n_steps = max(3, int(math.ceil(phi_d / sweep_step_phi)) + 1)
        oms = np.linspace(0.0, sol.omega_GHz, n_steps)
        phi_ds = [float(om) / omega_d for om in oms]
        n_hi = min(n_hi_cap, int(math.ceil(env.gap.pair_breaking_GHz / omega_d)) + 3)
        tracked_o = [(b, m) for b in betas for m in range(num.m0 - n_hi, num.m0)]
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", TruncationWarning)
            lab_e = flq.label_sweep(
                _transmon_problems(p, eig, phi_ds, omega_d, num, odd=False),
                [(a, num.m0) for a in (0, 1)], axis=oms)
            lab_o = flq.label_sweep(
                _transmon_problems(p, eig, phi_ds, omega_d, num, odd=True),
                tracked_o, axis=oms)
        junctions = [JunctionOperators(
            1, p.e_j_GHz, *cir.eigen_junction_half_ops(eig, phi_d, num.k_max))]
        rows: list[dict] = []
        last = n_steps - 1
        for a in (0, 1):
            ch = rts.pair_breaking_channels(
                lab_e, lab_o, last, a, num.m0, junctions, env,
                betas=betas, n_values=range(1, n_hi + 1), m_guard=num.m_guard)
            by_alpha = sum(r.gamma_per_s for r in ch)
            t_s, xqp = rts.lifetime_s(by_alpha), rts.steady_state_xqp(by_alpha, env)
            rows.extend(_row_dict(i_wd, omega_d, sol.omega_GHz, r, t_s, xqp)
                        for r in ch)
        return rows

    rows = _gather([point], range(len(omega_ds)), threads)
    solutions.sort(key=lambda s: s.omega_d_GHz)
    return rows, solutions


# ---------------------------------------------------------------------------
# Dispersive readout
# ---------------------------------------------------------------------------

def dispersive_shift(p: TransmonParams, eig, g_GHz: float, omega_r_GHz: float) -> float:
    """chi = -8 E_C g^2 w_r^2 / [(w_r^2 - f_ge^2)(w_r^2 - f_ef^2)] (GHz)."""
    e = eig.energies_even
    f_ge = float(e[1] - e[0])
    f_ef = float(e[2] - e[1])
    return (-8.0 * p.e_c_GHz * g_GHz ** 2 * omega_r_GHz ** 2
            / ((omega_r_GHz ** 2 - f_ge ** 2) * (omega_r_GHz ** 2 - f_ef ** 2)))


def solve_readout_coupling(p: TransmonParams, omega_r_GHz: float,
                           chi_target_GHz: float,
                           num: Numerics = Numerics()) -> float:
    """Coupling g with |chi(g)| = chi_target, solved in closed form (chi ~ g^2)."""
    if chi_target_GHz < 0:
        raise ValueError("chi target is a magnitude; must be >= 0")
    eig = build_transmon_eigenbasis(p, num)
    e = eig.energies_even
    f_ge, f_ef = float(e[1] - e[0]), float(e[2] - e[1])
    for f_pole in (f_ge, f_ef):
        if abs(omega_r_GHz - f_pole) < 1e-3:
            raise ValueError(
                f"resonator frequency {omega_r_GHz} GHz within 1 MHz of the "
                f"qubit transition at {f_pole:.6f} GHz")
    if chi_target_GHz == 0.0:
        return 0.0
    denom = (omega_r_GHz ** 2 - f_ge ** 2) * (omega_r_GHz ** 2 - f_ef ** 2)
    g2 = chi_target_GHz * abs(denom) / (8.0 * p.e_c_GHz * omega_r_GHz ** 2)
    return math.sqrt(g2)


def readout_sweep(
    p: TransmonParams,
    omega_r_GHz: float,
    nbar_values: Sequence[float],
    chi_target_GHz: float = 1e-3,
    num: Numerics = Numerics(),
    env: QpEnvironment = QpEnvironment(),
    alphas: Sequence[int] = (0, 1),
    threads: int = 1,
) -> list[dict]:
    """Parity lifetimes vs resonator photon number for a resonant readout tone.

    The resonator is traced out semiclassically: a population nbar maps to
    an equivalent phase-drive amplitude phi_d = 2 g sqrt(nbar) / omega_r at
    drive frequency omega_d = omega_r.
    """
    nbars = _check_axis(nbar_values, "nbar")
    if np.any(nbars < 0):
        raise ValueError("nbar must be non-negative")
    if nbars[0] != 0.0:
        nbars = np.concatenate([[0.0], nbars])
        prepended = True
    else:
        prepended = False
    g = solve_readout_coupling(p, omega_r_GHz, chi_target_GHz, num)
    eig = build_transmon_eigenbasis(p, num)
    phi_ds = [2.0 * g * math.sqrt(nb) / omega_r_GHz for nb in nbars]
    probs_e = _transmon_problems(p, eig, phi_ds, omega_r_GHz, num, odd=False)
    probs_o = _transmon_problems(p, eig, phi_ds, omega_r_GHz, num, odd=True)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", TruncationWarning)
        labels = flq.label_sweep(probs_e, [(a, num.m0) for a in alphas], axis=nbars)

    def point(j: int) -> list[dict]:
        w_o, v_o = flq.diagonalize(probs_o[j])
        junctions = [JunctionOperators(
            1, p.e_j_GHz, *cir.eigen_junction_half_ops(eig, phi_ds[j], num.k_max))]
        gi = j - (1 if prepended else 0)
        if gi < 0:
            return []
        rows: list[dict] = []
        for a in alphas:
            ch = rts.direct_sum_channels(
                labels.vector(j, a, num.m0), labels.energy(j, a, num.m0),
                w_o, v_o, junctions, env, a, num.m0, num.m_max, num.d,
                m_guard=num.m_guard)
            gamma = rts.total_rate(ch, m0=num.m0, m_max=num.m_max, m_guard=num.m_guard)
            t_s, xqp = rts.lifetime_s(gamma), rts.steady_state_xqp(gamma, env)
            if not ch:
                ch = [RateRow(a, -1, 0, 1, 0.0, 0.0, ("no-open-channel",))]
            rows.extend(_row_dict(gi, omega_r_GHz, float(nbars[j]), r, t_s, xqp)
                        for r in ch)
        return rows

    return _gather([point], range(len(nbars)), threads)


# ---------------------------------------------------------------------------
# Flux-modulated SQUID (Floquet 0-pi)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SquidNumerics:
    n_cut: int = 49
    m_max: int = 35
    m_guard: int = 5
    k_max: int | None = None

    @property
    def d(self) -> int:
        return 2 * self.n_cut + 1

    @property
    def m0(self) -> int:
        return math.ceil(self.m_max / 2)


WELL_LABELS = ("g0", "e0", "g_pi", "e_pi")


@dataclass
class WellStates:
    """Bound 0-well / pi-well eigenstates of the static effective model."""

    energies: dict[str, float]
    vectors: dict[str, np.ndarray]
    barrier_GHz: float
    missing: tuple[str, ...]
    e_j_eff_GHz: float
    e_j2_GHz: float


def classify_well_states(p: SquidParams, ops: cir.ChargeBasisOperators,
                         phi_ac: float, omega_d_GHz: float,
                         n_low: int = 12) -> WellStates:
    """Ground/excited states localized at phi = 0 and pi in the effective model.

    Localization is judged in the phase representation; a state counts as
    bound only when its energy lies below the barrier top U(pi/2).
    """
    h_eff, e_j_eff, e_j2 = cir.effective_hamiltonian_kapitza(p, ops, phi_ac, omega_d_GHz)
    w, v = hermitian_eig(h_eff)
    barrier = float(cir.potential_curve(e_j_eff, e_j2, np.array([0.5 * math.pi]))[0])
    phis = np.linspace(-math.pi, math.pi, 721, endpoint=False)
    kets = np.exp(1j * np.outer(phis, ops.charges_even)) / math.sqrt(len(phis))
    found: dict[str, tuple[float, np.ndarray]] = {}
    counts = {"0": 0, "pi": 0}
    for i in range(min(n_low, v.shape[1])):
        if w[i] >= barrier:
            break
        psi2 = np.abs(kets @ v[:, i]) ** 2
        mass_0 = float(psi2[np.abs(phis) < 0.5 * math.pi].sum())
        well = "0" if mass_0 > 0.5 else "pi"
        rank = counts[well]
        counts[well] += 1
        if rank < 2:
            name = ("g" if rank == 0 else "e") + ("0" if well == "0" else "_pi")
            found[name] = (float(w[i]), v[:, i])
    missing = tuple(n for n in WELL_LABELS if n not in found)
    return WellStates(
        energies={n: found[n][0] for n in found},
        vectors={n: found[n][1] for n in found},
        barrier_GHz=barrier,
        missing=missing,
        e_j_eff_GHz=e_j_eff,
        e_j2_GHz=e_j2,
    )


def locate_dressed_states(
    vectors: np.ndarray,
    targets: Mapping[str, np.ndarray],
    dim: int,
    m_max: int,
    m0: int,
) -> dict[str, tuple[int, float, tuple[str, ...]]]:
    """Pick the extended-space eigenvector for each effective-model target.

    The theta = 0 projection of every eigenvector is compared against the
    target wavefunctions; only the replica copy whose mean photon index
    rounds to m0 competes. Returns name -> (eigenindex, overlap, flags).
    """
    n_blocks = 2 * m_max + 1
    proj = vectors.reshape(n_blocks, dim, -1).sum(axis=0)  # theta = 0 stack
    norms = np.linalg.norm(proj, axis=0)
    mbar = flq.mean_photon_index(vectors, dim, m_max)
    in_replica = np.abs(mbar - m0) <= 0.5
    out: dict[str, tuple[int, float, tuple[str, ...]]] = {}
    for name, tgt in targets.items():
        ov = np.abs(tgt.conj() @ proj) / np.where(norms > 1e-12, norms, 1.0)
        masked = np.where(in_replica, ov, -1.0)
        best = int(np.argmax(masked))
        flags: tuple[str, ...] = ()
        if masked[best] < 0.5:
            flags = ("weak-projection-overlap",)
        out[name] = (best, float(masked[best]), flags)
    return out


def kapitza_sweep(
    p: SquidParams,
    omega_d_GHz: float,
    phi_ac_values: Sequence[float],
    num: SquidNumerics = SquidNumerics(),
    env: QpEnvironment = QpEnvironment(),
    threads: int = 1,
) -> list[dict]:
    """Per-junction pair-breaking rates of the 0- and pi-well states.

    At each flux amplitude the initial states are identified by projecting
    the even-sector dressed states at theta = 0 onto the bound eigenstates
    of the static effective model; missing well states are flagged absent
    rather than failing the sweep.
    """
    if abs(p.n_g) > 1e-12:
        raise ValueError("the 0-pi sweep assumes n_g = 0")
    phi_acs = _check_axis(phi_ac_values, "phi_ac")
    ops = cir.build_charge_operators(num.n_cut)

    def point(i_pt: int) -> list[dict]:
        phi_ac = float(phi_acs[i_pt])
        wells = classify_well_states(p, ops, phi_ac, omega_d_GHz)
        ser_e = cir.squid_drive_fourier(p, ops, 0.0, phi_ac, num.k_max)
        ser_o = cir.squid_drive_fourier(p, ops, 0.0, phi_ac, num.k_max, odd=True)
        prob_e = FloquetProblem(ser_e, omega_d_GHz, num.m_max, dim_limit=SQUID_DIM_CAP)
        prob_o = FloquetProblem(ser_o, omega_d_GHz, num.m_max, dim_limit=SQUID_DIM_CAP)
        w_e, v_e = flq.diagonalize(prob_e)
        w_o, v_o = flq.diagonalize(prob_o)
        junctions = [
            JunctionOperators(jidx + 1, e_j, cos_s, sin_s)
            for jidx, (e_j, cos_s, sin_s) in enumerate(
                cir.squid_junction_half_ops(p, ops, 0.0, phi_ac, num.k_max))
        ]
        located = locate_dressed_states(v_e, wells.vectors, num.d,
                                        num.m_max, num.m0)
        rows: list[dict] = []
        for a_idx, name in enumerate(WELL_LABELS):
            if name in wells.missing:
                rows.append(_row_dict(
                    i_pt, omega_d_GHz, phi_ac,
                    RateRow(a_idx, -1, 0, 0, 0.0, 0.0, (f"absent:{name}",)),
                    math.inf, 0.0))
                continue
            lam, ov, flags = located[name]
            ch = rts.direct_sum_channels(
                v_e[:, lam], float(w_e[lam]), w_o, v_o, junctions, env,
                a_idx, num.m0, num.m_max, num.d, m_guard=num.m_guard)
            gamma = rts.total_rate(ch, m0=num.m0, m_max=num.m_max,
                                   m_guard=num.m_guard)
            t_s, xqp = rts.lifetime_s(gamma), rts.steady_state_xqp(gamma, env)
            if flags:
                ch = [replace(r, flags=r.flags + flags) for r in ch]
            if not ch:
                ch = [RateRow(a_idx, -1, 0, 0, 0.0, 0.0,
                              flags + ("no-open-channel",))]
            rows.extend(_row_dict(i_pt, omega_d_GHz, phi_ac, r, t_s, xqp)
                        for r in ch)
        return rows

    return _gather([point], range(len(phi_acs)), threads)


def kapitza_potentials(p: SquidParams, omega_d_GHz: float,
                       phi_ac_values: Sequence[float],
                       phi_grid: np.ndarray | None = None,
                       n_cut: int = 25) -> list[dict]:
    """Effective-potential samples U_eff(phi) per flux amplitude."""
    if phi_grid is None:
        phi_grid = np.linspace(-math.pi, math.pi, 201)
    ops = cir.build_charge_operators(n_cut)
    out: list[dict] = []
    for i, phi_ac in enumerate(_check_axis(phi_ac_values, "phi_ac")):
        _, e_j_eff, e_j2 = cir.effective_hamiltonian_kapitza(
            p, ops, float(phi_ac), omega_d_GHz)
        u = cir.potential_curve(e_j_eff, e_j2, phi_grid)
        out.extend(
            {"grid_index": i, "phi_ac": float(phi_ac), "phi": float(ph),
             "U_eff_GHz": float(uu), "E_J_eff_GHz": e_j_eff, "E_J2phi_GHz": e_j2}
            for ph, uu in zip(phi_grid, u)
        )
    return out


# ---------------------------------------------------------------------------
# Convergence audits
# ---------------------------------------------------------------------------

@dataclass
class ConvergenceReport:
    levels: list[Mapping[str, float]]          # truncation settings per level
    observables: list[Mapping[str, float]]     # evaluated quantities per level
    drifts: list[dict[str, float]]             # relative drift between levels
    threshold: float
    passed: bool


def convergence_audit(
    evaluate: Callable[[Mapping[str, float]], Mapping[str, float]],
    levels: Sequence[Mapping[str, float]],
    threshold: float = 1e-4,
) -> ConvergenceReport:
    """Re-run one scenario point at escalating truncations.

    Pass iff the maximum relative drift of every observable between the
    last two levels is below the threshold. Observables that are zero at
    both levels count as zero drift.
    """
    if len(levels) < 2:
        raise ValueError("need at least two truncation levels")
    obs = [dict(evaluate(lv)) for lv in levels]
    drifts: list[dict[str, float]] = []
    for a, b in zip(obs, obs[1:]):
        d = {}
        for key in a:
            ref = max(abs(a[key]), abs(b[key]))
            d[key] = 0.0 if ref == 0.0 else abs(b[key] - a[key]) / ref
        drifts.append(d)
    passed = bool(max(drifts[-1].values(), default=0.0) < threshold)
    return ConvergenceReport(list(levels), obs, drifts, threshold, passed)


def charge_drive_point_observables(
    p: TransmonParams,
    omega_d_GHz: float,
    omega_GHz: float,
    num: Numerics,
    env: QpEnvironment = QpEnvironment(),
) -> dict[str, float]:
    """Gamma_g and the dressed qubit energies at one map point (audit probe)."""
    rows = charge_drive_map(p, [omega_d_GHz], [0.0, 0.5 * omega_GHz, omega_GHz],
                            num=num, env=env)
    last = [r for r in rows if r["grid_index"] == 2 and r["alpha"] == 0]
    gamma = sum(r["gamma_per_s"] for r in last)
    eig = build_transmon_eigenbasis(p, num)
    oms = np.array([0.0, 0.5 * omega_GHz, omega_GHz])
    probs = _transmon_problems(p, eig, [o / omega_d_GHz for o in oms],
                               omega_d_GHz, num, odd=False)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", TruncationWarning)
        labels = flq.label_sweep(probs, [(0, num.m0), (1, num.m0)], axis=oms)
    return {
        "gamma_g": gamma,
        "E_g": labels.energy(2, 0, num.m0) - num.m0 * omega_d_GHz,
        "E_e": labels.energy(2, 1, num.m0) - num.m0 * omega_d_GHz,
    }


def kapitza_point_observables(
    p: SquidParams,
    omega_d_GHz: float,
    phi_ac: float,
    num: SquidNumerics,
    env: QpEnvironment = QpEnvironment(),
) -> dict[str, float]:
    """Per-state total rates at one flux amplitude (audit probe)."""
    rows = kapitza_sweep(p, omega_d_GHz, [phi_ac], num=num, env=env)
    out: dict[str, float] = {}
    for a_idx, name in enumerate(WELL_LABELS):
        out[f"gamma_{name}"] = sum(
            r["gamma_per_s"] for r in rows if r["alpha"] == a_idx)
    return out
