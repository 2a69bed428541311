import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.linalg import expm

from ellhol.errors import AlgebraMismatch, DimMismatch
from ellhol.grassmann import (ExtAlgebra, GrassMat, _exp_series, g_exp, g_exp_taylor, g_mul, g_str, indices_from_mask,
                              koszul_sign, left_regular, mask_from_indices, max_abs_diff, scalar_max_diff,
                              subset_sign)


def sort_sign(seq):
    """Sign of the permutation sorting ``seq`` (bubble sort); 0 if an index repeats."""
    seq = list(seq)
    if len(set(seq)) < len(seq):
        return 0
    sign = 1
    for i in range(len(seq)):
        for j in range(len(seq) - 1 - i):
            if seq[j] > seq[j + 1]:
                seq[j], seq[j + 1] = seq[j + 1], seq[j]
                sign = -sign
    return sign


def naive_mul(a: GrassMat, b: GrassMat) -> dict:
    out = {}
    for S, M in a.coeffs.items():
        for T, N in b.coeffs.items():
            s = sort_sign(indices_from_mask(S) + indices_from_mask(T))
            if s:
                key = tuple(sorted(indices_from_mask(S) + indices_from_mask(T)))
                out[key] = out.get(key, 0) + s * (M @ N)
    return out


def random_grass(rng, alg, d, degrees=None, scale=1.0):
    coeffs = {}
    for S in range(alg.size):
        if degrees is not None and bin(S).count("1") not in degrees:
            continue
        coeffs[S] = scale * (rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d)))
    return GrassMat(alg, d, coeffs)


def test_sign_rule_examples():
    alg = ExtAlgebra(4)
    e = [GrassMat.generator(alg, 1, i) for i in range(4)]
    assert not (e[0] * e[0]).coeffs
    assert (e[1] * e[0]).coefficient((0, 1))[0, 0] == -1
    M, N = np.array([[2.0]]), np.array([[3.0]])
    a = GrassMat(alg, 1, {(0, 1): M})
    b = GrassMat(alg, 1, {(2, 3): N})
    assert (a * b).coefficient((0, 1, 2, 3))[0, 0] == 6
    assert subset_sign(0b10, 0b01) == -1 and subset_sign(0b01, 0b10) == 1


@given(st.integers(0, 2 ** 32 - 1))
def test_product_against_naive(seed):
    rng = np.random.default_rng(seed)
    alg = ExtAlgebra(4)
    a, b = random_grass(rng, alg, 2), random_grass(rng, alg, 2)
    p = g_mul(a, b)
    ref = naive_mul(a, b)
    for key, M in ref.items():
        assert np.allclose(p.coefficient(key), M, atol=1e-12)
    assert set(p.coeffs) <= {mask_from_indices(k) for k in ref}


@given(st.integers(0, 2 ** 32 - 1))
def test_associativity(seed):
    rng = np.random.default_rng(seed)
    alg = ExtAlgebra(3)
    a, b, c = (random_grass(rng, alg, 2) for _ in range(3))
    assert max_abs_diff((a * b) * c, a * (b * c)) < 1e-11


@given(st.integers(0, 2 ** 32 - 1))
def test_regular_representation_is_multiplicative(seed):
    rng = np.random.default_rng(seed)
    alg = ExtAlgebra(3)
    a, b = random_grass(rng, alg, 2), random_grass(rng, alg, 2)
    assert np.allclose(left_regular(a * b), left_regular(a) @ left_regular(b), atol=1e-11)


@given(st.integers(0, 2 ** 32 - 1))
def test_even_trace_cyclic(seed):
    rng = np.random.default_rng(seed)
    alg = ExtAlgebra(4)
    a, b = random_grass(rng, alg, 3, {0, 2, 4}), random_grass(rng, alg, 3, {0, 2, 4})
    assert scalar_max_diff(g_str(a * b), g_str(b * a)) < 1e-10


def test_exp_trivial():
    alg = ExtAlgebra(2)
    assert max_abs_diff(g_exp(GrassMat.zero(alg, 2)), GrassMat.identity(alg, 2)) == 0
    B = 0.7 - 0.2j
    e = g_exp(GrassMat(alg, 1, {(0, 1): B}))
    assert abs(e.coefficient(()) [0, 0] - 1) < 1e-15
    assert abs(e.coefficient((0, 1))[0, 0] - B) < 1e-15


def test_exp_paths_agree(rng):
    alg = ExtAlgebra(3)
    a = random_grass(rng, alg, 3, scale=0.4)
    e1, e2, e3 = g_exp(a), g_exp_taylor(a, 60), _exp_series(a)
    assert max_abs_diff(e1, e2) < 1e-12
    assert max_abs_diff(e1, e3) < 1e-12
    assert np.allclose(e1.body(), expm(a.body()), atol=1e-13)


def test_exp_large_algebra_uses_series(rng):
    # 2^10 * 5 > 4096: falls back to the native series
    alg = ExtAlgebra(10)
    a = GrassMat(alg, 5, {0: 0.3 * rng.normal(size=(5, 5)), (0, 1): rng.normal(size=(5, 5)),
                          (2, 3): rng.normal(size=(5, 5))})
    small = ExtAlgebra(4)
    b = GrassMat(small, 5, {0: a.body(), (0, 1): a.coefficient((0, 1)), (2, 3): a.coefficient((2, 3))})
    ea, eb = g_exp(a), g_exp(b)
    for key in [(), (0, 1), (2, 3), (0, 1, 2, 3)]:
        assert np.allclose(ea.coefficient(key), eb.coefficient(key), atol=1e-11)


def test_exp_of_commuting_sum_factorizes(rng):
    alg = ExtAlgebra(4)
    A = GrassMat.scalar(alg, 2, 0.3 * rng.normal(size=(2, 2)))
    B = GrassMat(alg, 2, {(0, 1): 0.5 * np.eye(2), (2, 3): 0.2 * np.eye(2)})
    assert max_abs_diff(g_exp(A + B), g_exp(A) * g_exp(B)) < 1e-13


def test_supertrace():
    alg = ExtAlgebra(1)
    I4 = GrassMat.identity(alg, 4)
    assert g_str(I4) == {0: 4}
    assert g_str(I4, [1, 1, -1, -1]) == {}
    assert g_str(I4, np.diag([1, -1, 1, 1])) == {0: 2}
    with pytest.raises(ValueError):
        g_str(I4, [1, 2, 1, 1])
    with pytest.raises(DimMismatch):
        g_str(I4, [1, -1])


def test_structure_and_errors():
    a, b = ExtAlgebra(2), ExtAlgebra(3)
    x = GrassMat.generator(a, 1, 0) + GrassMat(a, 1, {(0, 1): 1})
    assert x.parity() is None
    assert GrassMat(a, 1, {(0, 1): 1}).parity() == 0
    assert koszul_sign(GrassMat.generator(a, 1, 0), GrassMat.generator(a, 1, 1)) == -1
    with pytest.raises(AlgebraMismatch):
        GrassMat.identity(a, 1) + GrassMat.identity(b, 1)
    with pytest.raises(DimMismatch):
        GrassMat.identity(a, 1) * GrassMat.identity(a, 2)
    with pytest.raises(ValueError):
        ExtAlgebra(17)
    with pytest.raises(ValueError):
        mask_from_indices([1, 1])
    with pytest.raises(ValueError):
        GrassMat(a, 1, {7: 1})


def test_dense_round_trip(rng):
    alg = ExtAlgebra(3)
    a = random_grass(rng, alg, 2)
    assert max_abs_diff(GrassMat.from_dense(alg, a.to_dense()), a) == 0
    assert alg.basis()[:4] == [0, 1, 3, 7]
