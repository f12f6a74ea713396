import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import complex_normal, low_rank
from gframeloc import InputError
from gframeloc.blockmat import (
    TOL_SVD,
    BlockMatrix,
    BlockVector,
    IndexSet,
    block_adjoint,
    block_apply,
    block_mul,
    block_pinv,
    default_rtol,
    flatten,
    hermitian_eig,
    pinv,
    pinv_via_formula,
    spectral_norm,
    svd,
    unflatten,
)
from oracles import mp_pinv, sturm_count


def random_block(rng, N=3, n=2, period=None):
    I = IndexSet(rng.permutation(20)[:N].astype(float), period=period)
    return BlockMatrix(I, complex_normal(rng, (N, N, n, n)))


# ---------------------------------------------------------------- dense helpers


def test_spectral_norm_examples():
    assert spectral_norm(np.eye(3)) == pytest.approx(1.0)
    assert spectral_norm(np.zeros((2, 2))) == 0.0
    assert spectral_norm(np.diag([3.0, -4.0])) == pytest.approx(4.0)


def test_spectral_norm_rejects_nonfinite():
    with pytest.raises(InputError):
        spectral_norm(np.array([[1.0, np.nan], [0.0, 1.0]]))


def test_svd_invariants(rng):
    A = complex_normal(rng, (7, 5))
    f = svd(A)
    s = f.singular_values
    assert np.all(np.diff(s) <= 0) and np.all(s >= 0)
    assert spectral_norm(A - f.reconstruct()) <= TOL_SVD * spectral_norm(A)
    assert abs(spectral_norm(A) - s[0]) <= TOL_SVD * s[0]
    assert np.allclose(f.left_vectors.conj().T @ f.left_vectors, np.eye(5), atol=1e-13)
    with pytest.raises(ValueError):
        f.singular_values[0] = 0.0


def test_default_rtol():
    assert default_rtol((32, 24)) == 32 * np.finfo(float).eps * 64


@pytest.mark.parametrize("fn", [pinv, pinv_via_formula])
def test_pinv_closed_forms(fn):
    assert np.allclose(fn(np.eye(4)), np.eye(4))
    assert np.allclose(fn(np.diag([2.0, 0.0])), np.diag([0.5, 0.0]))


def test_pinv_zero_and_empty():
    assert np.array_equal(pinv(np.zeros((2, 3))), np.zeros((3, 2)))
    with pytest.raises(InputError):
        pinv(np.zeros((0, 3)))
    with pytest.raises(InputError):
        pinv(np.eye(2), rtol=-1.0)


def moore_penrose_residuals(A, P):
    nA, nP = spectral_norm(A), spectral_norm(P)
    AP, PA = A @ P, P @ A
    return [
        spectral_norm(A @ P @ A - A) / nA,
        spectral_norm(P @ A @ P - P) / nP,
        spectral_norm(AP - AP.conj().T) / spectral_norm(AP),
        spectral_norm(PA - PA.conj().T) / spectral_norm(PA),
    ]


def test_pinv_matches_elevated_precision_oracle(rng):
    A = low_rank(rng, 24, 16, 12)
    P = pinv(A)
    oracle = mp_pinv(A, rank=12)
    assert spectral_norm(P - oracle) <= 1e-9 * spectral_norm(oracle)
    assert max(moore_penrose_residuals(A, oracle)) <= 1e-9
    assert max(moore_penrose_residuals(A, P)) <= 1e-9


def test_pinv_via_formula_matches_pinv(rng):
    A = low_rank(rng, 12, 8, 5)
    P = pinv(A)
    assert spectral_norm(pinv_via_formula(A) - P) <= 1e-8 * spectral_norm(P)


def test_pinv_kernel_and_range_relations(rng):
    A = low_rank(rng, 10, 7, 4)
    P = pinv(A)
    # N(A^+) = R(A)^perp: vectors orthogonal to R(A) are annihilated
    U, s, Vh = np.linalg.svd(A)
    perp = U[:, 4:]
    assert spectral_norm(P @ perp) <= 1e-10 * spectral_norm(P)
    # R(A^+) = N(A)^perp: the range of A^+ is orthogonal to N(A)
    null = Vh[4:].conj().T
    assert spectral_norm(null.conj().T @ P) <= 1e-10 * spectral_norm(P)


def test_hermitian_eig_examples():
    w, _ = hermitian_eig(np.eye(4))
    assert np.allclose(w, 1.0)
    w, _ = hermitian_eig(np.diag([3.0, 1.0]))
    assert np.allclose(w, [1.0, 3.0])


def test_hermitian_eig_against_sturm_counts(rng):
    X = complex_normal(rng, (16, 16))
    H = X + X.conj().T
    w, V = hermitian_eig(H)
    assert np.all(np.diff(w) >= 0)
    assert spectral_norm(H @ V - V * w) <= TOL_SVD * spectral_norm(H)
    assert np.allclose(V.conj().T @ V, np.eye(16), atol=1e-12)
    # probe points between eigenvalues so that counts are well separated
    for x in [w[0] - 1.0, 0.5 * (w[3] + w[4]), 0.5 * (w[7] + w[8]), 0.5 * (w[12] + w[13]), w[-1] + 1.0]:
        assert sturm_count(H, x) == int(np.sum(w < x))


def test_hermitian_eig_rejects_non_hermitian():
    with pytest.raises(InputError):
        hermitian_eig(np.array([[1.0, 1.0], [0.0, 1.0]]))


# ---------------------------------------------------------------- index sets


def test_index_set_validation():
    with pytest.raises(InputError):
        IndexSet([0.0, 1.0, 0.0])
    with pytest.raises(InputError):
        IndexSet([0.0, 4.0], period=4)
    with pytest.raises(InputError):
        IndexSet(np.zeros((0, 1)))


def test_toroidal_distance_uses_minimal_image():
    I = IndexSet([[0.0, 0.0], [7.0, 1.0]], period=8)
    assert I.distances()[0, 1] == pytest.approx(np.sqrt(2.0))
    E = IndexSet([[0.0, 0.0], [7.0, 1.0]])
    assert E.distances()[0, 1] == pytest.approx(np.sqrt(50.0))


def test_index_set_equality_and_density():
    a = IndexSet.line(4)
    assert a == IndexSet.line(4) and hash(a) == hash(IndexSet.line(4))
    assert a != IndexSet.line(4, period=4)
    assert a.density(radius=1.0) == 3


# ---------------------------------------------------------------- block calculus


def test_block_mul_examples(rng):
    A = random_block(rng)
    assert np.allclose(block_mul(A, BlockMatrix.identity(A.index_set, 2)).blocks, A.blocks)
    I = A.index_set
    d1 = BlockMatrix.from_blocks(I, {(k, k): complex_normal(rng, (2, 2)) for k in range(3)}, n=2)
    d2 = BlockMatrix.from_blocks(I, {(k, k): complex_normal(rng, (2, 2)) for k in range(3)}, n=2)
    prod = block_mul(d1, d2)
    for k in range(3):
        assert np.allclose(prod.block(k, k), d1.block(k, k) @ d2.block(k, k))
    assert np.count_nonzero(prod.blocks[~np.eye(3, dtype=bool)]) == 0


def test_block_mul_is_flatten_homomorphism(rng):
    A = random_block(rng)
    B = BlockMatrix(A.index_set, complex_normal(rng, A.blocks.shape))
    lhs = flatten(block_mul(A, B))
    rhs = flatten(A) @ flatten(B)
    assert spectral_norm(lhs - rhs) <= 1e-12 * spectral_norm(rhs)
    assert np.allclose((A @ B).blocks, unflatten(rhs, A.index_set, 2).blocks)


def test_block_mul_index_mismatch(rng):
    A = random_block(rng)
    B = BlockMatrix.zeros(IndexSet.line(3), 2)
    with pytest.raises(InputError):
        block_mul(A, B)


def test_block_adjoint(rng):
    A = random_block(rng)
    assert np.array_equal(block_adjoint(block_adjoint(A)).blocks, A.blocks)
    assert np.array_equal(flatten(block_adjoint(A)), flatten(A).conj().T)
    H = A + block_adjoint(A)
    assert np.array_equal(block_adjoint(H).blocks, H.blocks)
    Id = BlockMatrix.identity(A.index_set, 2)
    assert np.array_equal(block_adjoint(Id).blocks, Id.blocks)


def test_block_apply(rng):
    A = random_block(rng)
    v = BlockVector(A.index_set, complex_normal(rng, (3, 2)))
    assert np.allclose(block_apply(BlockMatrix.identity(A.index_set, 2), v).components, v.components)
    assert np.count_nonzero(block_apply(BlockMatrix.zeros(A.index_set, 2), v).components) == 0
    assert np.allclose(block_apply(A, v).flat(), flatten(A) @ v.flat(), atol=1e-12)
    with pytest.raises(InputError):
        block_apply(A, BlockVector(A.index_set, np.zeros((3, 3))))


def test_flatten_examples(rng):
    one = IndexSet.line(1)
    X = complex_normal(rng, (3, 3))
    assert np.array_equal(flatten(BlockMatrix(one, X[None, None])), X)
    A = random_block(rng)
    assert np.array_equal(unflatten(flatten(A), A.index_set, 2).blocks, A.blocks)
    with pytest.raises(InputError):
        unflatten(np.zeros((5, 5)), A.index_set, 2)


def test_sparse_and_dense_storage_agree(rng):
    I = IndexSet.line(3)
    blk = complex_normal(rng, (2, 2))
    sparse = BlockMatrix.from_blocks(I, {(0, 2): blk}, n=2)
    dense = np.zeros((3, 3, 2, 2), dtype=complex)
    dense[0, 2] = blk
    assert np.array_equal(flatten(sparse), flatten(BlockMatrix(I, dense)))


def test_block_pinv_on_gram_matrix(rng):
    I = IndexSet.line(4)
    C = complex_normal(rng, (4, 3, 3))
    # Gram-type matrix [C_k C_l^*] has rank 3 < 12
    G = BlockMatrix(I, np.einsum("kij,lmj->klim", C, C.conj()))
    P = block_pinv(G)
    assert max(moore_penrose_residuals(flatten(G), flatten(P))) <= 1e-9


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 4), st.integers(1, 3), st.integers(0, 2**32 - 1))
def test_flatten_round_trip_property(N, n, seed):
    r = np.random.default_rng(seed)
    A = BlockMatrix(IndexSet.line(N), complex_normal(r, (N, N, n, n)))
    assert np.array_equal(unflatten(flatten(A), A.index_set, n).blocks, A.blocks)
    assert np.array_equal(block_adjoint(block_adjoint(A)).blocks, A.blocks)
