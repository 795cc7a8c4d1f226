import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from securebf.conic import (
    INFEASIBLE,
    OPTIMAL,
    ConicProgram,
    Herm,
    Lin,
    SolverOptions,
    ZeroBeamformerError,
    embed_hermitian,
    extract_rank1,
    phase_one_margin,
    rank1_gap,
    solve,
    unembed_hermitian,
)

seeds = st.integers(0, 2**32 - 1)


def _rand_herm(r, n):
    A = r.standard_normal((n, n)) + 1j * r.standard_normal((n, n))
    return (A + A.conj().T) / 2


def _rand_psd(r, n, rank=None):
    A = r.standard_normal((n, rank or n)) + 1j * r.standard_normal((n, rank or n))
    return A @ A.conj().T


def test_embedding_identity():
    np.testing.assert_array_equal(embed_hermitian(np.eye(2)), np.eye(4))


def test_embedding_pauli_y_spectrum():
    S = embed_hermitian(np.array([[0, -1j], [1j, 0]]))
    np.testing.assert_allclose(np.sort(np.linalg.eigvalsh(S)), [-1, -1, 1, 1], atol=1e-12)


@given(st.integers(1, 6), seeds)
def test_embedding_trace_and_round_trip(n, seed):
    H = _rand_herm(np.random.default_rng(seed), n)
    S = embed_hermitian(H)
    assert np.allclose(S, S.T)
    assert np.trace(S) == pytest.approx(2 * np.trace(H).real)
    np.testing.assert_allclose(unembed_hermitian(S), H, atol=1e-12)


@given(st.integers(1, 5), seeds)
def test_embedding_preserves_spectrum(n, seed):
    H = _rand_herm(np.random.default_rng(seed), n)
    lam = np.linalg.eigvalsh(H)
    np.testing.assert_allclose(np.linalg.eigvalsh(embed_hermitian(H)), np.sort(np.repeat(lam, 2)), atol=1e-10)


def test_embedding_rejects_non_hermitian():
    with pytest.raises(ValueError):
        embed_hermitian(np.array([[0, 1], [0, 0]]))


@given(st.integers(1, 5), seeds)
def test_hvec_norm_equals_frobenius(n, seed):
    H = _rand_herm(np.random.default_rng(seed), n)
    h = Herm(np.zeros((0, n, n)), H).hvec()
    assert np.linalg.norm(h.const) == pytest.approx(np.linalg.norm(H), rel=1e-12)
    assert np.linalg.norm(Herm(np.zeros((0, n, n)), H).vec().const) == pytest.approx(np.linalg.norm(H), rel=1e-12)


def test_lp_single_variable():
    prog = ConicProgram()
    t = prog.scalar("t")
    prog.add_le(Lin.constant(1.0), t, "t>=1")
    prog.minimize(t)
    rep = solve(prog)
    assert rep.status == OPTIMAL
    assert rep.values["t"] == pytest.approx(1.0, abs=1e-7)


def test_max_trace_with_unit_diagonal():
    prog = ConicProgram()
    W = prog.hermitian("W", 2)
    for i in range(2):
        E = np.zeros((2, 2))
        E[i, i] = 1
        prog.add_le(W.inner(E), 1.0, f"diag[{i}]")
    prog.maximize(W.trace())
    rep = solve(prog)
    assert rep.status == OPTIMAL
    assert rep.objective == pytest.approx(2.0, abs=1e-6)
    np.testing.assert_allclose(np.diag(rep.values["W"]).real, [1, 1], atol=1e-6)


def test_empty_soc_is_infeasible():
    prog = ConicProgram()
    x, y = prog.scalar("x"), prog.scalar("y")
    prog.add_soc(Lin.constant(-1.0), Lin.stack([x, y]), "soc")
    prog.minimize(x)
    assert solve(prog).status == INFEASIBLE


def test_phase_one_margin_sign():
    prog = ConicProgram()
    t = prog.scalar("t")
    prog.add_le(t, -1.0, "t<=-1")
    prog.add_le(Lin.constant(1.0), t, "t>=1")
    q, A, b, cones = prog.standard_form()
    assert phase_one_margin(A, b, cones, SolverOptions()) == pytest.approx(1.0, abs=1e-6)
    prog = ConicProgram()
    t = prog.scalar("t")
    prog.add_le(t, 1.0, "t<=1")
    q, A, b, cones = prog.standard_form()
    assert phase_one_margin(A, b, cones, SolverOptions()) < 0


def test_solve_is_deterministic():
    r = np.random.default_rng(0)
    C = _rand_herm(r, 3)

    def build():
        prog = ConicProgram()
        W = prog.hermitian("W", 3)
        prog.add_le(W.trace(), 1.0, "tr")
        prog.maximize(W.inner(C))
        return prog

    a, b = solve(build()), solve(build())
    assert a.status == OPTIMAL
    np.testing.assert_array_equal(a.x, b.x)
    assert a.objective == b.objective
    # max <C, W> over the unit-trace spectraplex is lambda_max(C)
    assert a.objective == pytest.approx(np.linalg.eigvalsh(C)[-1], abs=1e-6)


def test_solved_matrix_is_hermitian():
    prog = ConicProgram()
    W = prog.hermitian("W", 3)
    h = np.array([1.0, 1j, 0.5])
    prog.add_le(W.trace(), 2.0, "tr")
    prog.maximize(W.quad(h))
    rep = solve(prog)
    Wv = rep.values["W"]
    assert np.abs(Wv - Wv.conj().T).max() <= 1e-8


def test_extract_rank1_exact():
    w0 = np.array([1.0 - 1j, 0.3j, 2.0])
    w, gap = extract_rank1(np.outer(w0, w0.conj()))
    assert gap == pytest.approx(0.0, abs=1e-12)
    ph = np.vdot(w, w0) / abs(np.vdot(w, w0))
    np.testing.assert_allclose(w * ph, w0, atol=1e-12)


def test_extract_rank1_identity_gap():
    _, gap = extract_rank1(np.eye(2))
    assert gap == pytest.approx(1.0)
    assert rank1_gap(np.eye(2)) == pytest.approx(1.0)


def test_extract_rank1_zero_matrix():
    with pytest.raises(ZeroBeamformerError):
        extract_rank1(np.zeros((2, 2)))


@given(st.integers(1, 6), seeds)
def test_rank1_is_best_frobenius_approximation(n, seed):
    r = np.random.default_rng(seed)
    W = _rand_psd(r, n)
    w, _ = extract_rank1(W)
    err = np.linalg.norm(W - np.outer(w, w.conj()))
    lam = np.linalg.eigvalsh(W)
    assert err == pytest.approx(np.sqrt(np.sum(lam[:-1] ** 2)), rel=1e-9, abs=1e-9)
    # no random rank-one matrix does better
    for _ in range(5):
        v = r.standard_normal(n) + 1j * r.standard_normal(n)
        assert np.linalg.norm(W - np.outer(v, v.conj())) >= err - 1e-9


@settings(max_examples=50)
@given(st.integers(1, 6), st.integers(1, 6), seeds)
def test_gap_nonnegative_for_psd(n, k, seed):
    W = _rand_psd(np.random.default_rng(seed), n, k)
    assert rank1_gap(W) >= -1e-10 * np.trace(W).real
