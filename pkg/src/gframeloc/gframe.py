"""Operator-valued frames on C^n indexed by a finite point set.

A g-frame is a family ``(T_k)_{k in X}`` of n x n matrices.  Its analysis
operator maps f to ``(T_k f)_k``, the synthesis operator maps ``(g_k)_k``
to ``sum_k T_k^* g_k``, the frame operator is ``S = sum_k T_k^* T_k`` and the
Gram matrix is the block matrix ``[T_k T_l^*]_{k,l}``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .blockmat import (
    BlockMatrix,
    BlockVector,
    IndexSet,
    flatten,
    hermitian_eig,
    pinv_with_norm,
    spectral_norm,
)
from .exceptions import InputError, NotAFrameError

__all__ = [
    "FRAME_TOL",
    "GFrame",
    "FrameBounds",
    "GramFactorizationReport",
    "analysis",
    "synthesis",
    "frame_operator",
    "frame_operator_power",
    "gram",
    "mixed_gram",
    "frame_bounds",
    "canonical_dual",
    "is_dual_pair",
    "reconstruct",
    "reconstruction_partial_sums",
    "verify_gram_factorization",
    "bessel_bound_from_gram",
]

# is_frame <=> lower bound > FRAME_TOL * ||S||
FRAME_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class GFrame:
    """Finite family of n x n operators indexed by ``index_set``."""

    index_set: IndexSet
    operators: np.ndarray

    def __post_init__(self):
        if not isinstance(self.index_set, IndexSet):
            raise InputError("expected an IndexSet")
        ops = np.asarray(self.operators)
        if ops.ndim != 3 or ops.shape[0] != len(self.index_set) or ops.shape[1] != ops.shape[2]:
            raise InputError(
                f"operators must have shape ({len(self.index_set)}, n, n), got {ops.shape}"
            )
        ops = ops.astype(np.complex128, copy=True)
        if not np.all(np.isfinite(ops)):
            raise InputError("operators have non-finite entries")
        ops.flags.writeable = False
        object.__setattr__(self, "operators", ops)

    @property
    def n(self):
        return self.operators.shape[1]

    def __len__(self):
        return self.operators.shape[0]

    def __getitem__(self, k):
        return self.operators[k]

    def scaled(self, c):
        return GFrame(self.index_set, self.operators * c)

    def right_multiply(self, M):
        """The family ``(T_k M)_k``."""
        return GFrame(self.index_set, self.operators @ np.asarray(M))

    @classmethod
    def orthonormal_basis(cls, n, index_set=None):
        """``T_k = e_k (x) e_k``, the coordinate projections of C^n."""
        if index_set is None:
            index_set = IndexSet.line(n)
        if len(index_set) != n:
            raise InputError("orthonormal basis frame needs exactly n index points")
        ops = np.zeros((n, n, n), dtype=np.complex128)
        ops[np.arange(n), np.arange(n), np.arange(n)] = 1.0
        return cls(index_set, ops)


@dataclass(frozen=True)
class FrameBounds:
    lower: float
    upper: float
    is_frame: bool


@dataclass(frozen=True)
class GramFactorizationReport:
    residual_dual_gram: float
    residual_mixed: float
    projection_defect: float
    norm: str = "spectral"


def _vector(f, n):
    v = np.asarray(f, dtype=np.complex128)
    if v.shape != (n,):
        raise InputError(f"vector must have shape ({n},), got {v.shape}")
    return v


def _compatible(T, U):
    if T.index_set != U.index_set:
        raise InputError("g-frames are indexed by different sets")
    if T.n != U.n:
        raise InputError(f"ambient dimensions differ ({T.n} vs {U.n})")


def analysis(T, f):
    """``C_T f = (T_k f)_k``."""
    return BlockVector(T.index_set, T.operators @ _vector(f, T.n))


def synthesis(T, g):
    """``D_T g = sum_k T_k^* g_k``."""
    if not isinstance(g, BlockVector):
        raise InputError("expected a BlockVector")
    if g.index_set != T.index_set or g.n != T.n:
        raise InputError("sequence does not match the g-frame")
    return np.einsum("kji,kj->i", T.operators.conj(), g.components)


def frame_operator(T):
    """``S_T = sum_k T_k^* T_k``."""
    ops = T.operators
    return np.einsum("kji,kjl->il", ops.conj(), ops)


def frame_operator_power(T, power):
    """``S_T^power`` through the Hermitian eigendecomposition of ``S_T``.

    Negative powers require a frame.
    """
    w, V = hermitian_eig(frame_operator(T))
    if power < 0:
        if not w[0] > FRAME_TOL * abs(w[-1]):
            raise NotAFrameError("frame operator is not invertible")
    w = np.clip(w, 0.0, None)
    return (V * w ** power) @ V.conj().T


def mixed_gram(U, T):
    """Block matrix ``[U_k T_l^*]_{k,l}``."""
    _compatible(U, T)
    return BlockMatrix(T.index_set, np.einsum("kij,lmj->klim", U.operators, T.operators.conj()))


def gram(T):
    return mixed_gram(T, T)


def frame_bounds(T):
    """Optimal frame bounds: extreme eigenvalues of ``S_T``."""
    w, _ = hermitian_eig(frame_operator(T))
    lower = max(float(w[0]), 0.0)
    upper = max(float(w[-1]), 0.0)
    return FrameBounds(lower, upper, lower > FRAME_TOL * upper)


def canonical_dual(T):
    """``(T_k S_T^{-1})_k``."""
    bounds = frame_bounds(T)
    if not bounds.is_frame:
        raise NotAFrameError(f"lower frame bound {bounds.lower:.3e} is numerically zero")
    return T.right_multiply(frame_operator_power(T, -1))


def is_dual_pair(T, Td, tol=1e-9):
    """Check ``sum_k T_k^* Td_k = I = sum_k Td_k^* T_k``.

    Returns
    -------
    ok : bool
    residual : float
        Largest spectral-norm deviation of the two sums from the identity.
    """
    _compatible(T, Td)
    eye = np.eye(T.n)
    a = np.einsum("kji,kjl->il", T.operators.conj(), Td.operators)
    b = np.einsum("kji,kjl->il", Td.operators.conj(), T.operators)
    residual = max(spectral_norm(a - eye), spectral_norm(b - eye))
    return residual <= tol, residual


def _terms(T, Td, f, order):
    _compatible(T, Td)
    f = _vector(f, T.n)
    if order == "primal":
        # T_k^* Td_k f
        return np.einsum("kji,kj->ki", T.operators.conj(), Td.operators @ f)
    if order == "dual":
        # Td_k^* T_k f
        return np.einsum("kji,kj->ki", Td.operators.conj(), T.operators @ f)
    raise InputError(f"order must be 'primal' or 'dual', got {order!r}")


def reconstruct(T, Td, f, order="primal"):
    """``sum_k T_k^* Td_k f`` (``order="primal"``) or ``sum_k Td_k^* T_k f``."""
    return _terms(T, Td, f, order).sum(axis=0)


def reconstruction_partial_sums(T, Td, f, enumeration: Optional[Sequence[int]] = None, order="primal"):
    """Partial sums of the reconstruction series.

    Row j holds the sum over the first j+1 indices of ``enumeration``, which
    defaults to increasing distance from the index-set centroid.
    """
    terms = _terms(T, Td, f, order)
    if enumeration is None:
        enumeration = T.index_set.centroid_order()
    enumeration = np.asarray(enumeration, dtype=int)
    if sorted(enumeration.tolist()) != list(range(len(T))):
        raise InputError("enumeration must be a permutation of the index set")
    return np.cumsum(terms[enumeration], axis=0)


def verify_gram_factorization(T, rtol=None, norm="spectral"):
    """Compare the Gram matrix of the canonical dual with the pseudo-inverse of ``G_T``.

    ``residual_dual_gram`` is ``||G_dual - G_T^+|| / ||G_T^+||``;
    ``residual_mixed`` is ``||G_{T,dual} - P||`` and ``projection_defect`` is
    ``max(||P^2 - P||, ||P - P^*||)`` for ``P = G_T G_T^+``.  With
    ``norm="frobenius"`` the numerators use the Frobenius norm, an upper bound
    for the spectral norm that avoids further SVDs of large matrices; the
    denominator is always the exact spectral norm.
    """
    if norm == "spectral":
        measure = spectral_norm
    elif norm == "frobenius":
        measure = np.linalg.norm
    else:
        raise InputError(f"norm must be 'spectral' or 'frobenius', got {norm!r}")
    Td = canonical_dual(T)
    G = flatten(gram(T))
    G_pinv, pinv_norm = pinv_with_norm(G, rtol=rtol)
    P = G @ G_pinv
    return GramFactorizationReport(
        residual_dual_gram=measure(flatten(gram(Td)) - G_pinv) / pinv_norm,
        residual_mixed=measure(flatten(mixed_gram(T, Td)) - P),
        projection_defect=max(measure(P @ P - P), measure(P - P.conj().T)),
        norm=norm,
    )


def bessel_bound_from_gram(T):
    """Spectral norm of ``G_T``, an upper frame bound."""
    return spectral_norm(flatten(gram(T)))


def operator_norms(T):
    return np.linalg.norm(T.operators, ord=2, axis=(1, 2))

