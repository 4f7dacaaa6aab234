"""Golden-rule rate bookkeeping checked against dense extended-space oracles.

The toy model is a small random (but reproducible) parity pair: an even
and an odd Hermitian Fourier series plus a rectangular transition-operator
series. Expected rates are computed here from scratch by assembling the
dense extended matrices with numpy and applying the golden-rule formula
term by term, independently of the block machinery under test.
"""

import math
import warnings

import numpy as np
import pytest

from qpgen import floquet as flq
from qpgen import rates as rts
from qpgen.floquet import FloquetProblem, FourierSeries, TruncationWarning
from qpgen.rates import (JunctionOperators, QpEnvironment, RateRow,
                         direct_sum_channels, gamma_ph_per_s, interior_n_max,
                         lifetime_s, pair_breaking_channels, qp_tunneling_rate,
                         steady_state_xqp, total_rate)
from qpgen.specfn import Gap, StructureFactorKind, s_ph_analytic


# ---------------------------------------------------------------------------
# toy parity pair
# ---------------------------------------------------------------------------

DIM = 3
F_D = 40.0        # GHz, so a few-photon channel crosses the 90 GHz threshold
M_MAX = 8
M_GUARD = 2
M0 = 4
E_J = 5.0


def _random_series(rng: np.ndarray, dim: int, k_list, scale: float,
                   diag: np.ndarray | None = None) -> FourierSeries:
    comps: dict[int, np.ndarray] = {}
    for k in k_list:
        a = scale * (rng.standard_normal((dim, dim))
                     + 1j * rng.standard_normal((dim, dim)))
        if k == 0:
            a = 0.5 * (a + a.conj().T)
            if diag is not None:
                a = a + np.diag(diag)
        comps[k] = a
        if k != 0:
            comps[-k] = a.conj().T
    return FourierSeries(comps)


def _toy():
    rng = np.random.default_rng(7)
    even = _random_series(rng, DIM, [0, 1], 0.6, diag=np.array([0.0, 6.0, 13.0]))
    odd = _random_series(rng, DIM, [0, 1], 0.6, diag=np.array([2.5, 8.0, 16.0]))
    # rectangular odd x even transition operators; closure is not required
    cos_c = {k: 0.3 * (rng.standard_normal((DIM, DIM))
                       + 1j * rng.standard_normal((DIM, DIM)))
             for k in (-1, 0, 1)}
    sin_c = {k: 0.2 * (rng.standard_normal((DIM, DIM))
                       + 1j * rng.standard_normal((DIM, DIM)))
             for k in (-1, 0, 2)}
    return even, odd, FourierSeries(cos_c), FourierSeries(sin_c)


def _dense_floquet(series: FourierSeries, f_d: float, m_max: int) -> np.ndarray:
    n = 2 * m_max + 1
    dim = series.dim_out
    h = np.zeros((n * dim, n * dim), dtype=complex)
    for mp in range(n):
        for m in range(n):
            k = mp - m
            if k in series.components:
                h[mp * dim:(mp + 1) * dim, m * dim:(m + 1) * dim] += series.components[k]
        h[mp * dim:(mp + 1) * dim, mp * dim:(mp + 1) * dim] += (
            (mp - m_max) * f_d * np.eye(dim))
    return h


def _dense_operator(series: FourierSeries, m_max: int) -> np.ndarray:
    n = 2 * m_max + 1
    do, di = series.dim_out, series.dim_in
    c = np.zeros((n * do, n * di), dtype=complex)
    for mp in range(n):
        for m in range(n):
            k = mp - m
            if k in series.components:
                c[mp * do:(mp + 1) * do, m * di:(m + 1) * di] = series.components[k]
    return c


def _brute_force_gamma(w_e, v_e, w_o, v_o, cos_ext, sin_ext, ia, ib,
                       gap: Gap) -> tuple[float, float]:
    """(omega, gamma) for one extended-space channel, from first principles."""
    omega = float(w_e[ia] - w_o[ib])
    if omega <= gap.pair_breaking_GHz:
        return omega, 0.0
    ec = v_o[:, ib].conj() @ cos_ext @ v_e[:, ia]
    es = v_o[:, ib].conj() @ sin_ext @ v_e[:, ia]
    sp = s_ph_analytic(StructureFactorKind.PLUS, omega, gap)
    sm = s_ph_analytic(StructureFactorKind.MINUS, omega, gap)
    return omega, gamma_ph_per_s(E_J) * (abs(ec) ** 2 * sp + abs(es) ** 2 * sm)


@pytest.fixture(scope="module")
def toy():
    even, odd, cos_s, sin_s = _toy()
    prob_e = FloquetProblem(even, F_D, M_MAX)
    prob_o = FloquetProblem(odd, F_D, M_MAX)
    w_e, v_e = flq.diagonalize(prob_e)
    w_o, v_o = flq.diagonalize(prob_o)
    junctions = [JunctionOperators(1, E_J, cos_s, sin_s)]
    return dict(even=even, odd=odd, cos_s=cos_s, sin_s=sin_s,
                w_e=w_e, v_e=v_e, w_o=w_o, v_o=v_o, junctions=junctions,
                cos_ext=_dense_operator(cos_s, M_MAX),
                sin_ext=_dense_operator(sin_s, M_MAX))


def _pick_alpha(toy_data) -> int:
    """Extended index of the even state labeling (alpha=0, m=M0)."""
    mbar = flq.mean_photon_index(toy_data["v_e"], DIM, M_MAX)
    cands = np.nonzero(np.abs(mbar - M0) < 0.25)[0]
    return int(cands[np.argmin(toy_data["w_e"][cands])])


# ---------------------------------------------------------------------------
# prefactor and scalar maps
# ---------------------------------------------------------------------------

def test_gamma_ph_prefactor():
    assert gamma_ph_per_s(40.8) == pytest.approx(16 * 40.8e9, rel=1e-15)


def test_lifetime_inverse_and_infinity():
    assert lifetime_s(4.0) == 0.25
    assert lifetime_s(0.0) == math.inf
    with pytest.raises(ValueError):
        lifetime_s(-1.0)


def test_steady_state_xqp_closed_form():
    env = QpEnvironment()
    gamma = 1.0e3
    expected = math.sqrt(gamma / (2.0e6 * (1.0 / 120e-9)))
    assert steady_state_xqp(gamma, env) == pytest.approx(expected, rel=1e-12)
    assert steady_state_xqp(0.0, env) == 0.0


def test_environment_validation():
    with pytest.raises(ValueError):
        QpEnvironment(n_cp=0.0)
    with pytest.raises(ValueError):
        QpEnvironment(c_r_per_s=-1.0)


def test_interior_n_max_and_guard():
    assert interior_n_max(4, 8, 2) == 10
    with pytest.raises(ValueError):
        interior_n_max(-10, 8, 2)


# ---------------------------------------------------------------------------
# direct summation vs the dense extended-space oracle
# ---------------------------------------------------------------------------

def test_dense_floquet_agrees_with_block_assembly(toy):
    dense = _dense_floquet(toy["even"], F_D, M_MAX)
    w_ref = np.linalg.eigvalsh(dense)
    assert np.allclose(w_ref, toy["w_e"], atol=1e-10)


def test_direct_sum_matches_brute_force(toy):
    ia = _pick_alpha(toy)
    rows = direct_sum_channels(
        toy["v_e"][:, ia], float(toy["w_e"][ia]), toy["w_o"], toy["v_o"],
        toy["junctions"], QpEnvironment(), alpha=0, m0=M0, m_max=M_MAX,
        dim=DIM, m_guard=M_GUARD)
    assert rows, "toy spectrum should produce open channels"
    # reproduce the total by brute force over every interior odd eigenvector
    mbar = flq.mean_photon_index(toy["v_o"], DIM, M_MAX)
    keep = np.abs(np.rint(mbar)) <= M_MAX - M_GUARD
    total_ref = 0.0
    n_open = 0
    gap = Gap()
    for ib in np.nonzero(keep)[0]:
        omega, gamma = _brute_force_gamma(
            toy["w_e"], toy["v_e"], toy["w_o"], toy["v_o"],
            toy["cos_ext"], toy["sin_ext"], ia, int(ib), gap)
        total_ref += gamma
        n_open += omega > gap.pair_breaking_GHz
    assert n_open == len(rows)
    got = sum(r.gamma_per_s for r in rows)
    assert got == pytest.approx(total_ref, rel=1e-10)


def test_direct_sum_photon_numbers_match_replica_distance(toy):
    ia = _pick_alpha(toy)
    rows = direct_sum_channels(
        toy["v_e"][:, ia], float(toy["w_e"][ia]), toy["w_o"], toy["v_o"],
        toy["junctions"], QpEnvironment(), alpha=0, m0=M0, m_max=M_MAX,
        dim=DIM, m_guard=M_GUARD)
    for r in rows:
        # absorbing n photons must supply roughly n*f_d of energy
        assert r.omega_GHz == pytest.approx(r.n * F_D, abs=0.6 * F_D)
        assert r.flags == ("direct-sum",)


def test_labeled_channels_match_brute_force(toy):
    # label both sectors through a short ramp of the off-diagonal blocks
    def ramp(series, s):
        return FourierSeries({k: (c if k == 0 else s * c)
                              for k, c in series.components.items()})

    xs = [0.0, 0.5, 1.0]
    probs_e = [FloquetProblem(ramp(toy["even"], s), F_D, M_MAX) for s in xs]
    probs_o = [FloquetProblem(ramp(toy["odd"], s), F_D, M_MAX) for s in xs]
    n_values = range(1, interior_n_max(M0, M_MAX, M_GUARD) + 1)
    tracked_o = [(b, M0 - n) for b in range(DIM) for n in n_values]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", TruncationWarning)
        lab_e = flq.label_sweep(probs_e, [(0, M0)], axis=xs)
        lab_o = flq.label_sweep(probs_o, tracked_o, axis=xs)
    rows = pair_breaking_channels(lab_e, lab_o, 2, 0, M0, toy["junctions"],
                                  QpEnvironment(), m_guard=M_GUARD)
    assert rows
    gap = Gap()
    for r in rows:
        ia = int(lab_e.indices[2, lab_e.slot(0, M0)])
        ib = int(lab_o.indices[2, lab_o.slot(r.beta, M0 - r.n)])
        omega, gamma = _brute_force_gamma(
            toy["w_e"], toy["v_e"], toy["w_o"], toy["v_o"],
            toy["cos_ext"], toy["sin_ext"], ia, ib, gap)
        assert r.omega_GHz == pytest.approx(omega, abs=1e-10)
        assert r.gamma_per_s == pytest.approx(gamma, rel=1e-10, abs=1e-30)
        if omega <= gap.pair_breaking_GHz:
            assert "below-threshold" in r.flags


def test_labeled_total_agrees_with_direct_sum(toy):
    """Tracking every final state must reproduce the direct summation."""
    def ramp(series, s):
        return FourierSeries({k: (c if k == 0 else s * c)
                              for k, c in series.components.items()})

    xs = [0.0, 1.0]
    probs_e = [FloquetProblem(ramp(toy["even"], s), F_D, M_MAX) for s in xs]
    probs_o = [FloquetProblem(ramp(toy["odd"], s), F_D, M_MAX) for s in xs]
    n_values = range(1, interior_n_max(M0, M_MAX, M_GUARD) + 1)
    tracked_o = [(b, M0 - n) for b in range(DIM) for n in n_values]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", TruncationWarning)
        lab_e = flq.label_sweep(probs_e, [(0, M0)], axis=xs)
        lab_o = flq.label_sweep(probs_o, tracked_o, axis=xs)
    labeled = pair_breaking_channels(lab_e, lab_o, 1, 0, M0, toy["junctions"],
                                     QpEnvironment(), m_guard=M_GUARD)
    ia = int(lab_e.indices[1, lab_e.slot(0, M0)])
    direct = direct_sum_channels(
        toy["v_e"][:, ia], float(toy["w_e"][ia]), toy["w_o"], toy["v_o"],
        toy["junctions"], QpEnvironment(), alpha=0, m0=M0, m_max=M_MAX,
        dim=DIM, m_guard=M_GUARD)
    # labeling covers exactly the interior finals of the toy, so the totals
    # must agree whenever every labeled final is unambiguous
    if not lab_o.ambiguous[1].any():
        got = sum(r.gamma_per_s for r in labeled)
        ref = sum(r.gamma_per_s for r in direct)
        assert got == pytest.approx(ref, rel=1e-8)


def test_open_emission_guard(toy):
    """A bare transition above threshold invalidates dropping n <= 0 terms."""
    def shift(series, delta):
        comps = dict(series.components)
        comps[0] = comps[0] + delta * np.eye(DIM)
        return FourierSeries(comps)

    hot = FloquetProblem(shift(toy["odd"], -120.0), F_D, M_MAX)
    w_o, v_o = flq.diagonalize(hot)
    ia = _pick_alpha(toy)
    with pytest.raises(RuntimeError, match="pair-breaking"):
        xs = [0.0, 1.0]

        def ramp(series, s):
            return FourierSeries({k: (c if k == 0 else s * c)
                                  for k, c in series.components.items()})

        probs_e = [FloquetProblem(ramp(toy["even"], s), F_D, M_MAX) for s in xs]
        probs_o = [FloquetProblem(ramp(shift(toy["odd"], -120.0), s), F_D, M_MAX)
                   for s in xs]
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", TruncationWarning)
            lab_e = flq.label_sweep(probs_e, [(0, M0)], axis=xs)
            lab_o = flq.label_sweep(probs_o, [(0, M0 - 1)], axis=xs)
        pair_breaking_channels(lab_e, lab_o, 1, 0, M0, toy["junctions"],
                               QpEnvironment(), m_guard=M_GUARD)


def test_guard_band_rejected(toy):
    with pytest.raises(ValueError, match="guard"):
        direct_sum_channels(
            toy["v_e"][:, 0], float(toy["w_e"][0]), toy["w_o"], toy["v_o"],
            toy["junctions"], QpEnvironment(), alpha=0, m0=M_MAX,
            m_max=M_MAX, dim=DIM, m_guard=M_GUARD)


# ---------------------------------------------------------------------------
# totals and truncation warnings
# ---------------------------------------------------------------------------

def _row(n, gamma):
    return RateRow(0, 0, n, 1, 100.0, gamma)


def test_total_rate_sums_channels():
    rows = [_row(1, 2.0), _row(2, 3.0), _row(3, 0.5)]
    assert total_rate(rows) == pytest.approx(5.5)


def test_total_rate_warns_near_window_edge():
    n_edge = interior_n_max(M0, M_MAX, m_guard=M_GUARD)
    rows = [_row(1, 5.0), _row(n_edge - 1, 1.0)]
    with pytest.warns(TruncationWarning, match="interior-window edge"):
        total_rate(rows, m0=M0, m_max=M_MAX, m_guard=M_GUARD)


def test_total_rate_ignores_numerical_dust_at_edge():
    n_edge = interior_n_max(M0, M_MAX, m_guard=M_GUARD)
    rows = [_row(1, 5.0), _row(n_edge, 1e-12)]
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        total_rate(rows, m0=M0, m_max=M_MAX, m_guard=M_GUARD)


# ---------------------------------------------------------------------------
# quasiparticle tunneling (finite-density channel)
# ---------------------------------------------------------------------------

def test_qp_tunneling_matches_brute_force(toy):
    def ramp(series, s):
        return FourierSeries({k: (c if k == 0 else s * c)
                              for k, c in series.components.items()})

    xs = [0.0, 1.0]
    probs_e = [FloquetProblem(ramp(toy["even"], s), F_D, M_MAX) for s in xs]
    probs_o = [FloquetProblem(ramp(toy["odd"], s), F_D, M_MAX) for s in xs]
    interior = M_MAX - M_GUARD
    tracked_o = [(0, m) for m in range(-interior, interior + 1)]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", TruncationWarning)
        lab_e = flq.label_sweep(probs_e, [(0, M0)], axis=xs)
        lab_o = flq.label_sweep(probs_o, tracked_o, axis=xs)

    s_plus = lambda w: 1.0 / (1.0 + (w / 10.0) ** 2)   # arbitrary smooth weights
    s_minus = lambda w: math.exp(-abs(w) / 25.0)
    got = qp_tunneling_rate(lab_e, lab_o, 1, 0, 0, M0, toy["junctions"],
                            s_plus, s_minus, m_guard=M_GUARD)

    ia = int(lab_e.indices[1, lab_e.slot(0, M0)])
    ref = 0.0
    for m in range(-interior, interior + 1):
        ib = int(lab_o.indices[1, lab_o.slot(0, m)])
        omega = float(toy["w_o"][ib] - toy["w_e"][ia])
        ec = toy["v_o"][:, ib].conj() @ toy["cos_ext"] @ toy["v_e"][:, ia]
        es = toy["v_o"][:, ib].conj() @ toy["sin_ext"] @ toy["v_e"][:, ia]
        ref += gamma_ph_per_s(E_J) * (abs(ec) ** 2 * s_minus(omega)
                                      + abs(es) ** 2 * s_plus(omega))
    assert got == pytest.approx(ref, rel=1e-10)


def test_junction_operator_validation(toy):
    with pytest.raises(ValueError, match="positive"):
        JunctionOperators(1, 0.0, toy["cos_s"], toy["sin_s"])
