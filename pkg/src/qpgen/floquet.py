"""Extended Hilbert space Floquet engine.

A time-periodic Hamiltonian H(t) = sum_k H^(k) e^{ik w_d t} is represented
by its Fourier components and assembled into a block Floquet matrix on the
qubit x photon-index space, with blocks (m', m) = H^(m'-m) + delta_{m'm}
m*w_d*I. Dressed eigenstates are tracked across a drive-amplitude sweep by
overlap labeling with diabatic resonance crossing and periodic reference
restarts.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from .specfn import hermitian_eig


class TruncationWarning(UserWarning):
    """Result may be corrupted by photon-index or harmonic truncation."""


@dataclass(frozen=True)
class FourierSeries:
    """Fourier components k -> matrix of a time-periodic operator.

    Square components describe a Hamiltonian (and must satisfy
    H^(-k) = H^(k)^dag); rectangular ones describe cross-parity-sector
    transition operators (odd x even).
    """

    components: Mapping[int, np.ndarray]

    def __post_init__(self) -> None:
        if 0 not in self.components:
            raise ValueError("FourierSeries requires a k = 0 component")
        shape = self.components[0].shape
        for k, c in self.components.items():
            if c.shape != shape:
                raise ValueError(f"component {k} has shape {c.shape}, expected {shape}")

    @property
    def dim_out(self) -> int:
        return self.components[0].shape[0]

    @property
    def dim_in(self) -> int:
        return self.components[0].shape[1]

    @property
    def k_max(self) -> int:
        return max(abs(k) for k in self.components)

    def hermitian_closure_defect(self) -> float:
        """max_k || H^(-k) - H^(k)^dag ||_max (square series only)."""
        if self.dim_out != self.dim_in:
            raise ValueError("Hermitian closure applies to square series only")
        defect = 0.0
        for k, c in self.components.items():
            other = self.components.get(-k)
            if other is None:
                defect = max(defect, float(np.abs(c).max()))
            else:
                defect = max(defect, float(np.abs(other - c.conj().T).max()))
        return defect

    def reconstruct(self, theta: float) -> np.ndarray:
        """Time-domain operator sum_k C^(k) e^{ik theta}."""
        out = np.zeros(self.components[0].shape, dtype=complex)
        for k, c in self.components.items():
            out += c * np.exp(1j * k * theta)
        return out

    def apply_blocks(self, blocks: np.ndarray) -> np.ndarray:
        """Apply the extended-space operator sum_k C^(k) (x) e^{ik theta_hat}.

        `blocks` has shape (2*M+1, dim_in); returns (2*M+1, dim_out) with
        out[m'] = sum_k C^(k) blocks[m'-k]. Avoids forming the (large)
        extended-space matrix.
        """
        n_blocks = blocks.shape[0]
        dtype = np.result_type(*(c.dtype for c in self.components.values()), blocks.dtype)
        out = np.zeros((n_blocks, self.dim_out), dtype=dtype)
        for k, c in self.components.items():
            if abs(k) >= n_blocks:
                continue
            if k >= 0:
                out[k:] += blocks[: n_blocks - k] @ c.T
            else:
                out[: n_blocks + k] += blocks[-k:] @ c.T
        return out


@dataclass(frozen=True)
class FloquetProblem:
    """A Fourier series plus drive frequency and photon-index truncation."""

    series: FourierSeries
    omega_d_GHz: float
    m_max: int
    dim_limit: int = 40000

    def __post_init__(self) -> None:
        if self.m_max < 1:
            raise ValueError(f"m_max must be >= 1, got {self.m_max}")
        if self.series.dim_out != self.series.dim_in:
            raise ValueError("Floquet assembly requires a square (Hamiltonian) series")
        if self.extended_dim > self.dim_limit:
            raise RuntimeError(
                f"extended dimension {self.extended_dim} exceeds limit {self.dim_limit}"
            )

    @property
    def dim(self) -> int:
        return self.series.dim_in

    @property
    def extended_dim(self) -> int:
        return self.dim * (2 * self.m_max + 1)


def build_floquet(problem: FloquetProblem) -> np.ndarray:
    """Assemble the block Floquet matrix (real if all components allow it)."""
    d, M = problem.dim, problem.m_max
    n_blocks = 2 * M + 1
    comps = {k: np.asarray(c) for k, c in problem.series.components.items()}
    real = all(np.abs(c.imag).max() < 1e-14 * max(np.abs(c).max(), 1.0)
               if np.iscomplexobj(c) else True
               for c in comps.values())
    dtype = np.float64 if real else np.complex128
    H = np.zeros((n_blocks * d, n_blocks * d), dtype=dtype)
    eye = np.eye(d)
    for bi in range(n_blocks):  # row block, m' = bi - M
        for bj in range(n_blocks):
            k = bi - bj
            c = comps.get(k)
            if c is None:
                continue
            blk = c.real if real else c
            H[bi * d : (bi + 1) * d, bj * d : (bj + 1) * d] = blk
        m = bi - M
        H[bi * d : (bi + 1) * d, bi * d : (bi + 1) * d] += m * problem.omega_d_GHz * eye
    return H


def diagonalize(problem: FloquetProblem) -> tuple[np.ndarray, np.ndarray]:
    """Dressed energies (ascending, GHz) and eigenvectors of the Floquet matrix."""
    return hermitian_eig(build_floquet(problem))


def split_blocks(vec: np.ndarray, dim: int) -> np.ndarray:
    """Reshape an extended-space vector into (2*M+1, dim) photon blocks."""
    return vec.reshape(-1, dim)


def project_mode(vec: np.ndarray, theta: float, dim: int, m_max: int) -> np.ndarray:
    """Qubit-space projection sum_m e^{im theta} (block m) of an eigenvector."""
    blocks = split_blocks(vec, dim)
    phases = np.exp(1j * theta * np.arange(-m_max, m_max + 1))
    return phases @ blocks


def mean_photon_index(vectors: np.ndarray, dim: int, m_max: int) -> np.ndarray:
    """Weight-averaged photon index per eigenvector column."""
    n_blocks = 2 * m_max + 1
    weights = np.abs(vectors.reshape(n_blocks, dim, -1)) ** 2
    block_w = weights.sum(axis=1)  # (n_blocks, n_vec)
    ms = np.arange(-m_max, m_max + 1)
    return (ms[:, None] * block_w).sum(axis=0) / block_w.sum(axis=0)


@dataclass
class LabeledSpectrum:
    """Dressed energies/eigenvectors with (state, photon-index) labels over a sweep."""

    axis: np.ndarray                      # sweep amplitude values
    tracked: list[tuple[int, int]]        # (alpha, m) pairs
    energies: np.ndarray                  # (n_points, n_tracked), GHz
    overlaps: np.ndarray                  # (n_points, n_tracked)
    indices: np.ndarray                   # (n_points, n_tracked) eigenindices
    ambiguous: np.ndarray                 # (n_points, n_tracked) bool
    vectors: list[np.ndarray]             # per point: (extended_dim, n_tracked)
    base_energies: np.ndarray             # static spectrum E_alpha at zero drive
    omega_d_GHz: float
    dim: int
    m_max: int
    _pos: dict[tuple[int, int], int] = field(default_factory=dict, repr=False)

    def __post_init__(self) -> None:
        self._pos = {lab: i for i, lab in enumerate(self.tracked)}

    def slot(self, alpha: int, m: int) -> int:
        try:
            return self._pos[(alpha, m)]
        except KeyError:
            raise KeyError(f"state ({alpha}, {m}) is not tracked") from None

    def energy(self, point: int, alpha: int, m: int) -> float:
        return float(self.energies[point, self.slot(alpha, m)])

    def vector(self, point: int, alpha: int, m: int) -> np.ndarray:
        return self.vectors[point][:, self.slot(alpha, m)]

    def is_ambiguous(self, point: int, alpha: int, m: int) -> bool:
        return bool(self.ambiguous[point, self.slot(alpha, m)])


_AMBIGUITY_GAP = 1e-3


def label_sweep(
    problems: Sequence[FloquetProblem],
    tracked: Sequence[tuple[int, int]],
    axis: Sequence[float] | None = None,
    restart_threshold: float = 0.5,
    smooth_warn: float = 0.3,
    diagonalizer: Callable[[FloquetProblem], tuple[np.ndarray, np.ndarray]] = diagonalize,
) -> LabeledSpectrum:
    """Track dressed states (alpha, m) along an ordered drive-amplitude sweep.

    The first problem must be at (near) zero drive so the product basis
    labels exactly; each tracked state's reference is updated to the last
    labeled dressed state whenever its best overlap drops below
    `restart_threshold` (diabatic crossing of multiphoton resonances).
    """
    if not 0 < restart_threshold < 1:
        raise ValueError(f"restart_threshold must lie in (0, 1), got {restart_threshold}")
    problems = list(problems)
    if not problems:
        raise ValueError("empty sweep")
    first = problems[0]
    d, M = first.dim, first.m_max
    h0 = first.series.components[0]
    off = max(
        (float(np.abs(c).max()) for k, c in first.series.components.items() if k != 0),
        default=0.0,
    )
    if off > 1e-9 * max(float(np.abs(h0).max()), 1.0):
        raise ValueError("labeling sweep must start at (near) zero drive amplitude")
    tracked = list(tracked)
    for alpha, m in tracked:
        if not (0 <= alpha < d) or abs(m) > M:
            raise ValueError(f"tracked state ({alpha}, {m}) outside problem dimensions")
    if axis is None:
        axis = np.arange(len(problems), dtype=float)
    axis = np.asarray(axis, dtype=float)

    static_E, static_V = hermitian_eig(h0)
    n_tr = len(tracked)
    ext = first.extended_dim
    refs = np.zeros((ext, n_tr), dtype=static_V.dtype)
    for j, (alpha, m) in enumerate(tracked):
        refs[(m + M) * d : (m + M + 1) * d, j] = static_V[:, alpha]

    n_pts = len(problems)
    energies = np.zeros((n_pts, n_tr))
    overlaps = np.zeros((n_pts, n_tr))
    indices = np.zeros((n_pts, n_tr), dtype=int)
    ambiguous = np.zeros((n_pts, n_tr), dtype=bool)
    vectors: list[np.ndarray] = []
    prev_cols: np.ndarray | None = None
    max_step = 0.0

    for p, problem in enumerate(problems):
        if problem.dim != d or problem.m_max != M:
            raise ValueError("all sweep problems must share dim and m_max")
        w, V = diagonalizer(problem)
        ov = np.abs(V.conj().T @ refs)  # (n_eig, n_tracked)
        cols = np.zeros((ext, n_tr), dtype=V.dtype)
        for j in range(n_tr):
            o = ov[:, j]
            best = int(np.argmax(o))
            if o[best] < restart_threshold and p > 0:
                # reference lost; restart from the previously labeled dressed state
                refs[:, j] = prev_cols[:, j]
                o = np.abs(V.conj().T @ refs[:, j])
                best = int(np.argmax(o))
            top = float(o[best])
            o_other = np.delete(o, best)
            if o_other.size and top - float(o_other.max()) < _AMBIGUITY_GAP:
                ambiguous[p, j] = True
            v = V[:, best]
            if prev_cols is not None:
                inner = np.vdot(prev_cols[:, j], v)
                if abs(inner) > 0:
                    v = v * (np.conj(inner) / abs(inner)) if np.iscomplexobj(v) else (
                        v if inner >= 0 else -v
                    )
            energies[p, j] = w[best]
            overlaps[p, j] = top
            indices[p, j] = best
            cols[:, j] = v
            if p > 0:
                max_step = max(max_step, abs(top - overlaps[p - 1, j]))
        vectors.append(cols)
        prev_cols = cols

    if max_step > smooth_warn:
        warnings.warn(
            f"labeling overlap changed by {max_step:.3f} between sweep steps "
            f"(> {smooth_warn}); consider a finer sweep",
            TruncationWarning,
            stacklevel=2,
        )
    return LabeledSpectrum(
        axis=axis,
        tracked=tracked,
        energies=energies,
        overlaps=overlaps,
        indices=indices,
        ambiguous=ambiguous,
        vectors=vectors,
        base_energies=static_E,
        omega_d_GHz=first.omega_d_GHz,
        dim=d,
        m_max=M,
    )


def stark_shift(labels: LabeledSpectrum, g: int = 0, e: int = 1, m: int | None = None) -> np.ndarray:
    """ac-Stark shift (E_e0 - E_g0)(Omega) - (E_e - E_g) per sweep point, GHz."""
    if m is None:
        ms = sorted({mm for a, mm in labels.tracked if a in (g, e)})
        m = ms[0] if ms else 0
    jg, je = labels.slot(g, m), labels.slot(e, m)
    dressed = labels.energies[:, je] - labels.energies[:, jg]
    bare = labels.base_energies[e] - labels.base_energies[g]
    return dressed - bare
