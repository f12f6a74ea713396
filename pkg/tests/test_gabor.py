import numpy as np
import pytest

from conftest import complex_normal
from gframeloc import InputError
from gframeloc.blockmat import spectral_norm
from gframeloc.gabor import (
    GaborGSystem,
    TFPoint,
    WindowOperator,
    build_gabor_gsystem,
    discrete_gaussian,
    gabor_gram_block_norms,
    gram_block_triangle_bound,
    m1_norm_proxy,
    modulate,
    op_translate,
    rank_one_gram_block_closed_form,
    stft,
    tf_shift,
    tf_shift_matrix,
    translate,
    verify_decay_theorem,
)
from gframeloc.gframe import canonical_dual, frame_bounds, frame_operator, gram, mixed_gram
from oracles import brute_gaussian, brute_stft

# mpmath at 30 digits, frozen
GAUSS_8 = {0: 0.70710184939128749094, 1: 0.47745773306210437529, 2: 0.14699254549626810246, 4: 0.0026409444183818376088}
GAUSS_64 = {0: 0.42044820762685727152, 1: 0.40030786680145540488, 2: 0.34549278576759817185, 32: 1.2437149065984199239e-22}


def test_translate_modulate_examples():
    e0 = np.eye(4)[0]
    assert np.array_equal(translate(e0, 1), np.eye(4)[1])
    assert np.array_equal(translate(e0, -1), np.eye(4)[3])
    f = np.arange(4.0)
    assert np.array_equal(translate(f, 4), f)
    assert np.allclose(modulate(np.ones(4), 1), [1, 1j, -1, -1j])
    assert np.allclose(modulate(f, 0), f)
    assert np.allclose(tf_shift(e0, (1, 1)), [0, 1j, 0, 0])
    with pytest.raises(InputError):
        tf_shift(e0, (0.5, 0))


def test_tf_shift_matrix_matches_action(rng):
    L = 8
    f = complex_normal(rng, L)
    for z in [(0, 0), (3, 5), (-2, 9)]:
        assert np.allclose(tf_shift_matrix(z, L) @ f, tf_shift(f, z))


def test_tf_shift_unitary(rng):
    L = 12
    for z in [(1, 0), (0, 5), (7, 3)]:
        P = tf_shift_matrix(z, L)
        assert np.allclose(P.conj().T @ P, np.eye(L), atol=1e-13)


def test_phase_identities():
    L = 9
    for z, zp in [((1, 2), (3, 4)), ((5, 7), (8, 1)), ((2, 0), (0, 3))]:
        P, Pp = tf_shift_matrix(z, L), tf_shift_matrix(zp, L)
        s = (z[0] + zp[0], z[1] + zp[1])
        phase = np.exp(-2j * np.pi * z[0] * zp[1] / L)
        assert np.allclose(P @ Pp, phase * tf_shift_matrix(s, L), atol=1e-13)
        adj = np.exp(-2j * np.pi * z[0] * z[1] / L) * tf_shift_matrix((-z[0], -z[1]), L)
        assert np.allclose(P.conj().T, adj, atol=1e-13)


def test_stft_against_brute_force(rng):
    L = 8
    f, g = complex_normal(rng, (2, L))
    assert np.allclose(stft(f, g), brute_stft(f, g), atol=1e-12)
    e0 = np.eye(L)[0]
    V = stft(e0, e0)
    assert np.allclose(V[0], 1.0) and np.allclose(V[1:], 0.0)
    with pytest.raises(InputError):
        stft(f, g[:4])


def test_stft_orthogonality_relation(rng):
    L = 16
    f, g = complex_normal(rng, (2, L))
    lhs = np.sum(np.abs(stft(f, g)) ** 2)
    assert lhs == pytest.approx(L * np.linalg.norm(f) ** 2 * np.linalg.norm(g) ** 2, rel=1e-12)


def test_stft_covariance(rng):
    L = 10
    f, g = complex_normal(rng, (2, L))
    z = (3, 4)
    V = stft(f, g)
    W = stft(tf_shift(f, z), g)
    x, w = np.meshgrid(np.arange(L), np.arange(L), indexing="ij")
    assert np.allclose(np.abs(W), np.abs(V[(x - z[0]) % L, (w - z[1]) % L]), atol=1e-12)


def test_discrete_gaussian_frozen_values():
    g8 = discrete_gaussian(8)
    for j, v in GAUSS_8.items():
        assert g8[j].real == pytest.approx(v, rel=1e-14)
    g64 = discrete_gaussian(64)
    for j, v in GAUSS_64.items():
        assert g64[j].real == pytest.approx(v, rel=1e-12)
    assert np.allclose(g64.real, brute_gaussian(64), atol=1e-14, rtol=0)


@pytest.mark.parametrize("L", [4, 7, 16, 33])
def test_discrete_gaussian_properties(L):
    g = discrete_gaussian(L)
    assert np.linalg.norm(g) == pytest.approx(1.0)
    assert np.allclose(g, g[(-np.arange(L)) % L])
    assert np.all(g.imag == 0) and np.all(g.real > 0)


def test_discrete_gaussian_rejects_small_or_fractional():
    with pytest.raises(InputError):
        discrete_gaussian(3)
    with pytest.raises(InputError):
        discrete_gaussian(8.5)


def test_m1_proxy(rng):
    L = 16
    f = complex_normal(rng, L)
    g = discrete_gaussian(L)
    assert m1_norm_proxy(f, 0) == pytest.approx(np.sum(np.abs(stft(f, g))))
    assert m1_norm_proxy(f, 2) >= m1_norm_proxy(f, 1) >= m1_norm_proxy(f, 0)
    assert m1_norm_proxy(2 * f, 1) == pytest.approx(2 * m1_norm_proxy(f, 1))
    # the Gaussian is concentrated near the origin, the random signal is not
    assert m1_norm_proxy(g, 2) < m1_norm_proxy(f / np.linalg.norm(f), 2)


def test_window_operator_basics(rng):
    L = 6
    phi, psi = complex_normal(rng, (2, L))
    T = WindowOperator.rank_one(phi, psi)
    assert np.allclose(T.assemble(), np.outer(phi, psi.conj()))
    assert T.nuclear_bound == pytest.approx(np.linalg.norm(phi) * np.linalg.norm(psi))
    assert np.allclose(WindowOperator.identity(L).assemble(), np.eye(L))
    assert np.allclose(T.scaled(2j).assemble(), 2j * T.assemble())
    with pytest.raises(InputError):
        WindowOperator(np.zeros((1, 3)), np.zeros((1, 4)))


def test_op_translate_matches_conjugation(rng):
    L = 8
    T = WindowOperator(complex_normal(rng, (2, L)), complex_normal(rng, (2, L)))
    for z in [(0, 0), (3, 5), (7, 1)]:
        P = tf_shift_matrix(z, L)
        assert np.allclose(op_translate(T, z).assemble(), P @ T.assemble() @ P.conj().T, atol=1e-12)


def test_gabor_system_validation():
    W = WindowOperator.gaussian(8)
    with pytest.raises(InputError):
        GaborGSystem(W, (TFPoint(8, 0),))
    with pytest.raises(InputError):
        GaborGSystem(W, (TFPoint(1, 1), TFPoint(1, 1)))
    with pytest.raises(InputError):
        GaborGSystem.grid(W, 3, 2)
    sys = GaborGSystem.grid(W, 2, 4)
    assert len(sys.points) == 8
    assert sys.index_set().period == 8
    assert TFPoint(-1, 9).reduce(8) == TFPoint(7, 1)


def test_build_examples(rng):
    L = 8
    W = WindowOperator(complex_normal(rng, (2, L)), complex_normal(rng, (2, L)))
    sys = GaborGSystem(W, (TFPoint(0, 0), TFPoint(3, 5)))
    T = build_gabor_gsystem(sys)
    assert np.allclose(T[0], W.assemble())
    P = tf_shift_matrix((3, 5), L)
    assert np.allclose(T[1], P @ W.assemble() @ P.conj().T)


def test_full_lattice_is_tight():
    L = 16
    T = build_gabor_gsystem(GaborGSystem.full(WindowOperator.gaussian(L)))
    # sum over all z of pi(z) P pi(z)^* = L tr(P) I for a rank-one projection P
    assert np.allclose(frame_operator(T), L * np.eye(L))
    b = frame_bounds(T)
    assert b.lower == pytest.approx(b.upper, rel=1e-9)
    assert b.upper == pytest.approx(L, rel=1e-9)


def test_full_lattice_tight_for_any_window(rng):
    L = 8
    W = WindowOperator(complex_normal(rng, (3, L)), complex_normal(rng, (3, L)))
    b = frame_bounds(build_gabor_gsystem(GaborGSystem.full(W)))
    assert b.lower == pytest.approx(b.upper, rel=1e-9)


def test_coarse_grid_is_still_a_frame():
    sys = GaborGSystem.grid(WindowOperator.gaussian(32), 2, 2)
    b = frame_bounds(build_gabor_gsystem(sys))
    assert b.is_frame and b.lower > 0


def test_closed_form_matches_direct_blocks():
    L = 16
    sys = GaborGSystem.grid(WindowOperator.gaussian(L), 4, 4)
    G = gram(build_gabor_gsystem(sys))
    pts = sys.points
    for k in range(len(pts)):
        for l in range(len(pts)):
            direct = spectral_norm(G.block(k, l))
            assert abs(rank_one_gram_block_closed_form(sys.window, pts[k], pts[l]) - direct) <= 1e-12
    with pytest.raises(InputError):
        rank_one_gram_block_closed_form(WindowOperator.identity(4), (0, 0), (1, 1))


def test_triangle_bound_for_multi_term_window(rng):
    L = 8
    W = WindowOperator(complex_normal(rng, (3, L)), complex_normal(rng, (3, L)))
    sys = GaborGSystem.grid(W, 2, 2)
    G = gram(build_gabor_gsystem(sys))
    for k, l in [(0, 0), (1, 5), (7, 3), (15, 2)]:
        direct = spectral_norm(G.block(k, l))
        assert direct <= gram_block_triangle_bound(W, sys.points[k], sys.points[l]) * (1 + 1e-12)
    single = WindowOperator.rank_one(complex_normal(rng, L), complex_normal(rng, L))
    z, zp = (1, 2), (5, 3)
    assert gram_block_triangle_bound(single, z, zp) == pytest.approx(rank_one_gram_block_closed_form(single, z, zp))


@pytest.mark.parametrize("rank", [1, 2])
def test_structured_block_norms_match_dense(rng, rank):
    L = 12
    W = WindowOperator(complex_normal(rng, (rank, L)), complex_normal(rng, (rank, L)))
    sys = GaborGSystem.grid(W, 2, 3)
    T = build_gabor_gsystem(sys)
    Td = canonical_dual(T)
    norms = gabor_gram_block_norms(sys, powers=(0, 1, 2))
    for j, G in [(0, gram(T)), (1, mixed_gram(T, Td)), (2, gram(Td))]:
        dense = np.linalg.norm(G.blocks, ord=2, axis=(2, 3))
        assert np.allclose(norms[j], dense, rtol=1e-10, atol=1e-13 * dense.max())


def test_decay_theorem_on_disjoint_system():
    # delta windows on a time-only grid: the blocks are orthogonal projections
    L = 8
    sys = GaborGSystem(WindowOperator.rank_one(np.eye(L)[0]), tuple(TFPoint(x, 0) for x in range(L)))
    rep = verify_decay_theorem(sys, s=2)
    assert rep.C1 == pytest.approx(1.0) and rep.C2 == pytest.approx(1.0) and rep.C3 == pytest.approx(1.0)
    assert rep.fit_primal is None and rep.dual_decay_consistent is None
    assert rep.bounds.is_frame and rep.bounds.lower == pytest.approx(1.0)


def test_decay_theorem_homogeneity():
    L = 16
    W = WindowOperator.gaussian(L)
    a = verify_decay_theorem(GaborGSystem.grid(W, 2, 2), s=2)
    lam = 1.5 - 2j
    b = verify_decay_theorem(GaborGSystem.grid(W.scaled(lam), 2, 2), s=2)
    # blocks T_k T_l^* are quadratic in the window
    assert b.C1 == pytest.approx(abs(lam) ** 2 * a.C1, rel=1e-10)
    assert b.C2 == pytest.approx(a.C2, rel=1e-8)
    assert b.C3 == pytest.approx(a.C3 / abs(lam) ** 2, rel=1e-8)


def test_decay_report_fields_on_gaussian():
    rep = verify_decay_theorem(GaborGSystem.grid(WindowOperator.gaussian(32), 2, 2), s=2)
    assert rep.bounds.is_frame
    assert min(rep.C1, rep.C2, rep.C3) > 0
    assert rep.fit_primal is not None and rep.fit_primal.s_fit > 0
    assert isinstance(rep.dual_decay_consistent, bool)
