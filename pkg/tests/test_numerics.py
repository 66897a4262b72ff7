import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mixbank.numerics import (
    RankDeficientError,
    condition_number,
    convolve,
    dft,
    hermitian_eig,
    idft,
    lstsq_apply,
)


def random_psd(rng, n, rank=None, complex_=False):
    rank = rank or n
    G = rng.standard_normal((n, rank))
    if complex_:
        G = G + 1j * rng.standard_normal((n, rank))
    return G @ G.conj().T


def test_eig_identity():
    w, V = hermitian_eig(np.eye(7))
    assert np.allclose(w, 1)
    assert np.allclose(V.conj().T @ V, np.eye(7))


def test_eig_diag_sorted():
    w, V = hermitian_eig(np.diag([3.0, 1.0, 2.0]))
    assert np.allclose(w, [3, 2, 1])
    assert np.allclose(np.abs(V), np.eye(3)[:, [0, 2, 1]])


def test_eig_rejects_non_hermitian():
    with pytest.raises(ValueError):
        hermitian_eig(np.array([[1.0, 2.0], [0.0, 1.0]]))
    with pytest.raises(ValueError):
        hermitian_eig(np.ones((2, 3)))
    with pytest.raises(ValueError):
        hermitian_eig(np.array([[np.nan]]))


@pytest.mark.parametrize("complex_", [False, True])
def test_eig_residuals_51(complex_):
    rng = np.random.default_rng(11)
    Q = random_psd(rng, 51, complex_=complex_)
    w, V = hermitian_eig(Q)
    nq = np.linalg.norm(Q, 2)
    for k in range(51):
        assert np.linalg.norm(Q @ V[:, k] - w[k] * V[:, k]) <= 1e-8 * nq
    assert np.linalg.norm(V.conj().T @ V - np.eye(51)) < 1e-8
    rec = (V * w) @ V.conj().T
    assert np.linalg.norm(Q - rec) / np.linalg.norm(Q) < 1e-8


@settings(max_examples=40, deadline=None)
@given(n=st.integers(1, 40), seed=st.integers(0, 2**32 - 1))
def test_eig_trace_property(n, seed):
    Q = random_psd(np.random.default_rng(seed), n, rank=max(1, n // 2))
    w, _ = hermitian_eig(Q)
    assert np.all(np.diff(w) <= 1e-9 * max(1.0, w[0]))
    assert abs(w.sum() - np.trace(Q)) <= 1e-8 * max(1.0, abs(np.trace(Q)))


def test_lstsq_identity_and_orthogonal():
    y = np.arange(5.0)
    assert np.allclose(lstsq_apply(np.eye(5), y), y)
    A = np.eye(5)[:, :2]
    y = np.array([0, 0, 1.0, 2.0, 3.0])
    assert np.allclose(lstsq_apply(A, y), 0)


def test_lstsq_planted_complex():
    rng = np.random.default_rng(3)
    A = rng.standard_normal((51, 12)) + 1j * rng.standard_normal((51, 12))
    z = rng.standard_normal(12) + 1j * rng.standard_normal(12)
    z_hat = lstsq_apply(A, A @ z)
    assert np.linalg.norm(z_hat - z) / np.linalg.norm(z) < 1e-9


def test_lstsq_residual_orthogonal():
    rng = np.random.default_rng(4)
    A = rng.standard_normal((20, 6)) + 1j * rng.standard_normal((20, 6))
    y = rng.standard_normal((20, 3)) + 1j * rng.standard_normal((20, 3))
    r = y - A @ lstsq_apply(A, y)
    assert np.max(np.abs(A.conj().T @ r)) < 1e-8


def test_lstsq_square_matches_solve():
    rng = np.random.default_rng(5)
    A = rng.standard_normal((9, 9))
    y = rng.standard_normal(9)
    assert np.allclose(lstsq_apply(A, y), np.linalg.solve(A, y), atol=1e-10)


def test_lstsq_rank_deficient_reports_rank():
    A = np.ones((6, 3))
    with pytest.raises(RankDeficientError) as info:
        lstsq_apply(A, np.ones(6))
    assert info.value.rank == 1


def test_lstsq_empty_support():
    assert lstsq_apply(np.zeros((4, 0)), np.ones(4)).shape == (0,)


def test_condition_number():
    assert condition_number(np.diag([4.0, 2.0])) == pytest.approx(2.0)
    assert condition_number(np.array([[1.0, 0.0], [0.0, 0.0]])) == np.inf


def test_dft_constant():
    X = dft(np.ones(8))
    assert X[0] == pytest.approx(8)
    assert np.allclose(X[1:], 0)


@pytest.mark.parametrize("n", [1, 2, 7, 31, 64])
def test_dft_matches_defining_sum(n):
    x = np.random.default_rng(n).standard_normal(n) + 0j
    k = np.arange(n)
    ref = np.exp(-2j * np.pi * np.outer(k, k) / n) @ x
    assert np.max(np.abs(dft(x) - ref)) < 1e-10


@settings(max_examples=30, deadline=None)
@given(n=st.integers(1, 64), seed=st.integers(0, 2**32 - 1))
def test_dft_linearity_and_inverse(n, seed):
    rng = np.random.default_rng(seed)
    x, y = rng.standard_normal((2, n))
    a, b = rng.standard_normal(2)
    assert np.allclose(dft(a * x + b * y), a * dft(x) + b * dft(y), atol=1e-10)
    assert np.max(np.abs(idft(dft(x)) - x)) < 1e-10


def test_dft_rejects_empty():
    with pytest.raises(ValueError):
        dft([])


def test_convolve_hand_case():
    assert np.array_equal(convolve([1, 1], [1, -1]), [1, 0, -1])


@settings(max_examples=30, deadline=None)
@given(
    a=st.lists(st.integers(-5, 5), min_size=1, max_size=10),
    b=st.lists(st.integers(-5, 5), min_size=1, max_size=10),
)
def test_convolve_is_polynomial_product(a, b):
    ref = np.polynomial.polynomial.polymul(a, b)
    out = convolve(a, b)
    assert len(out) == len(a) + len(b) - 1
    assert np.allclose(out[: len(ref)], ref)
    assert np.allclose(out[len(ref):], 0)
