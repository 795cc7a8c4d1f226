import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from securebf.channel import ChannelSet
from securebf.metrics import interference, min_asr, quad_form, secrecy_rate, snr

cplx = st.complex_numbers(max_magnitude=1e3, allow_nan=False, allow_infinity=False)
vec3 = st.lists(cplx, min_size=3, max_size=3).map(np.array)


def test_snr_examples():
    assert snr([1, 0], [1, 0], 1.0) == 1.0
    assert snr([1, 0], [0, 1], 1.0) == 0.0
    assert snr(np.array([1, 1]) / np.sqrt(2), [1, 1], 2.0) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        snr([1], [1], 0.0)


def test_interference_examples():
    assert interference([1, 0], [1, 0]) == 1.0
    assert interference([1, 0], [0, 1]) == 0.0
    assert interference(np.array([1, 1]) / np.sqrt(2), [1, 1]) == pytest.approx(2.0)


def test_secrecy_rate_examples():
    assert secrecy_rate(2.0, [2.0]) == 0.0
    assert secrecy_rate(3.0, [1.0]) == pytest.approx(1.0)
    assert secrecy_rate(1.0, [3.0]) == 0.0


@given(vec3, vec3, cplx, st.floats(1e-3, 1e3))
def test_snr_homogeneous(h, w, c, s2):
    assert snr(h, c * w, s2) == pytest.approx(abs(c) ** 2 * snr(h, w, s2), rel=1e-9, abs=1e-300)


@given(vec3, vec3)
def test_quad_form_matches_rank_one(h, w):
    W = np.outer(w, w.conj())
    ref = abs(np.vdot(h, w)) ** 2
    assert quad_form(h, W) == pytest.approx(ref, rel=1e-12, abs=1e-12 * (1 + np.vdot(h, h).real * np.vdot(w, w).real))


def _set(su, eve):
    n = len(su[0])
    return ChannelSet(su, eve, np.zeros((0, n)), [_zero(n) for _ in eve], [], 1.0, 1.0)


def _zero(n):
    from securebf.channel import CsiErrorModel

    return CsiErrorModel(np.zeros((n, n)))


def test_min_asr_single_pair():
    ch = _set([[2.0, 0.0]], [[0.0, 1.0]])
    w = np.array([1.0, 0.5])
    assert min_asr(ch, w) == pytest.approx(secrecy_rate(snr(ch.su[0], w, 1.0), [snr(ch.eve_est[0], w, 1.0)]))


def test_min_asr_duplicates_and_phase():
    r = np.random.default_rng(0)
    su = r.standard_normal((2, 3)) + 1j * r.standard_normal((2, 3))
    eve = 0.3 * (r.standard_normal((2, 3)) + 1j * r.standard_normal((2, 3)))
    w = r.standard_normal(3) + 1j * r.standard_normal(3)
    base = min_asr(_set(su, eve), w)
    assert min_asr(_set(np.vstack([su, su[:1]]), eve), w) == pytest.approx(base)
    assert min_asr(_set(su, eve), np.exp(0.7j) * w) == pytest.approx(base, rel=1e-12)


def test_min_asr_permutation_invariant():
    r = np.random.default_rng(1)
    su = r.standard_normal((3, 2)) + 1j * r.standard_normal((3, 2))
    eve = 0.2 * (r.standard_normal((3, 2)) + 1j * r.standard_normal((3, 2)))
    w = np.array([1.0, 1j])
    base = min_asr(_set(su, eve), w)
    for ps in itertools.permutations(range(3)):
        assert min_asr(_set(su[list(ps)], eve[list(ps[::-1])]), w) == pytest.approx(base, rel=1e-12)
