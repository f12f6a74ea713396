"""Dense complex linear algebra and B(H)-valued block matrices.

A ``BlockMatrix`` over an index set X with ambient dimension n is stored
densely as an array of shape ``(|X|, |X|, n, n)``; entry ``[k, l]`` is the
operator block A_{k,l}.  ``flatten`` identifies it with an ordinary
``(|X| n) x (|X| n)`` matrix acting on l^2(X; C^n) = C^{|X| n}.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Optional, Tuple

import numpy as np

from .exceptions import InputError

__all__ = [
    "TOL_SVD",
    "TOL_HERM",
    "SvdFactorization",
    "IndexSet",
    "BlockMatrix",
    "BlockVector",
    "as_matrix",
    "svd",
    "spectral_norm",
    "default_rtol",
    "pinv",
    "pinv_with_norm",
    "pinv_via_formula",
    "hermitian_eig",
    "block_mul",
    "block_adjoint",
    "block_apply",
    "flatten",
    "unflatten",
    "block_pinv",
]

TOL_SVD = 1e-12
TOL_HERM = 1e-10


def _frozen(a):
    a = np.array(a, copy=True)
    a.flags.writeable = False
    return a


def as_matrix(A, name="A"):
    """Validate and convert ``A`` to a finite complex128 2-D array."""
    M = np.asarray(A)
    if M.ndim != 2:
        raise InputError(f"{name} must be 2-dimensional, got shape {M.shape}")
    M = M.astype(np.complex128, copy=False)
    if not np.all(np.isfinite(M)):
        raise InputError(f"{name} has non-finite entries")
    return M


@dataclass(frozen=True, eq=False)
class SvdFactorization:
    """Thin SVD ``A = U diag(s) V^*`` with ``s`` nonincreasing."""

    left_vectors: np.ndarray
    singular_values: np.ndarray
    right_vectors: np.ndarray

    def reconstruct(self):
        return (self.left_vectors * self.singular_values) @ self.right_vectors.conj().T

    @property
    def rank_profile(self):
        return self.singular_values


def svd(A):
    """Thin singular value decomposition of a finite complex matrix."""
    M = as_matrix(A)
    if M.size == 0:
        raise InputError("empty matrix")
    U, s, Vh = np.linalg.svd(M, full_matrices=False)
    return SvdFactorization(_frozen(U), _frozen(s), _frozen(Vh.conj().T))


def spectral_norm(A):
    """Largest singular value of ``A``."""
    M = as_matrix(A)
    if M.size == 0:
        return 0.0
    return float(np.linalg.norm(M, ord=2))


def default_rtol(shape):
    """Relative truncation threshold ``max(rows, cols) * eps * 64``."""
    return max(shape) * np.finfo(np.float64).eps * 64


def pinv_with_norm(A, rtol=None):
    """Pseudo-inverse together with its spectral norm, read off the same SVD.

    Singular values ``sigma_i > rtol * sigma_max`` are inverted, the rest are
    treated as zero.  ``rtol`` defaults to :func:`default_rtol`.
    """
    M = as_matrix(A)
    if M.size == 0:
        raise InputError("empty matrix")
    if rtol is None:
        rtol = default_rtol(M.shape)
    if rtol < 0:
        raise InputError("rtol must be nonnegative")
    U, s, Vh = np.linalg.svd(M, full_matrices=False)
    if s[0] == 0.0:
        return np.zeros((M.shape[1], M.shape[0]), dtype=np.complex128), 0.0
    keep = s > rtol * s[0]
    s_inv = np.zeros_like(s)
    s_inv[keep] = 1.0 / s[keep]
    return (Vh.conj().T * s_inv) @ U.conj().T, float(s_inv.max())


def pinv(A, rtol=None):
    """Moore-Penrose pseudo-inverse by SVD truncation (see :func:`pinv_with_norm`)."""
    return pinv_with_norm(A, rtol)[0]


def pinv_via_formula(A, rtol=None):
    """Pseudo-inverse through ``A^+ = A^* (A A^*)^+``.

    ``rtol`` is passed unchanged to the inner pseudo-inverse of ``A A^*``,
    whose singular values are the squares of those of ``A``; the effective
    cutoff on ``A`` is therefore ``sqrt(rtol) * sigma_max``.  Squaring the
    tolerance instead would sit below the rounding floor of ``A A^*``.
    """
    M = as_matrix(A)
    if M.size == 0:
        raise InputError("empty matrix")
    if rtol is None:
        rtol = default_rtol(M.shape)
    if rtol < 0:
        raise InputError("rtol must be nonnegative")
    gram = M @ M.conj().T
    gram = 0.5 * (gram + gram.conj().T)
    return M.conj().T @ pinv(gram, rtol=rtol)


def hermitian_eig(A, tol_herm=TOL_HERM):
    """Eigen-decomposition of a Hermitian matrix.

    Returns
    -------
    eigenvalues : ndarray
        Real, nondecreasing.
    eigenvectors : ndarray
        Orthonormal columns.
    """
    M = as_matrix(A)
    if spectral_norm(M - M.conj().T) > tol_herm * spectral_norm(M):
        raise InputError("matrix is not Hermitian within tolerance")
    w, V = np.linalg.eigh(0.5 * (M + M.conj().T))
    return w, V


@dataclass(frozen=True, eq=False)
class IndexSet:
    """Ordered, pairwise distinct points in R^m.

    ``period`` selects the metric: ``None`` for Euclidean distance, a
    positive number L for the torus (R / L Z)^m where the distance is the
    Euclidean length of the minimal-image difference.
    """

    points: np.ndarray
    period: Optional[float] = None

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.ndim != 2 or pts.shape[0] == 0:
            raise InputError("index set needs a nonempty (N, m) array of points")
        if not np.all(np.isfinite(pts)):
            raise InputError("index points must be finite")
        if self.period is not None:
            if not self.period > 0:
                raise InputError("period must be positive")
            if np.any(pts < 0) or np.any(pts >= self.period):
                raise InputError("toroidal index points must lie in [0, L)")
        if len({tuple(p) for p in pts.tolist()}) != pts.shape[0]:
            raise InputError("index points must be pairwise distinct")
        object.__setattr__(self, "points", _frozen(pts))

    @classmethod
    def line(cls, count, period=None):
        """Integer points ``0, 1, ..., count-1`` on the real line."""
        return cls(np.arange(count, dtype=float)[:, None], period)

    def __len__(self):
        return self.points.shape[0]

    @property
    def dim(self):
        return self.points.shape[1]

    @property
    def toroidal(self):
        return self.period is not None

    def __eq__(self, other):
        if not isinstance(other, IndexSet):
            return NotImplemented
        return self.period == other.period and np.array_equal(self.points, other.points)

    def __hash__(self):
        return hash((self.period, self.points.tobytes()))

    def keys(self):
        return [tuple(p) for p in self.points.tolist()]

    def wrap(self, vectors):
        """Minimal-image representative of displacement vectors."""
        v = np.asarray(vectors, dtype=np.float64)
        if self.period is None:
            return v
        L = self.period
        return v - L * np.round(v / L)

    def differences(self):
        """Wrapped differences ``k - l`` as an ``(N, N, m)`` array."""
        return self.wrap(self.points[:, None, :] - self.points[None, :, :])

    def distances(self):
        """Pairwise distances ``d(k, l)`` as an ``(N, N)`` array."""
        return np.sqrt(np.sum(self.differences() ** 2, axis=-1))

    def point_norms(self):
        return np.sqrt(np.sum(self.wrap(self.points) ** 2, axis=-1))

    def is_integer(self):
        return bool(np.all(self.points == np.round(self.points)))

    def centroid_order(self):
        """Indices sorted by increasing distance from the centroid (stable)."""
        c = self.points.mean(axis=0)
        d = np.sqrt(np.sum(self.wrap(self.points - c) ** 2, axis=-1))
        return np.argsort(d, kind="stable")

    def density(self, radius=1.0):
        """Maximal number of points in a closed ball of the given radius around a point."""
        return int(np.max(np.sum(self.distances() <= radius, axis=1)))


def _check_index_set(index_set):
    if not isinstance(index_set, IndexSet):
        raise InputError("expected an IndexSet")
    return index_set


@dataclass(frozen=True, eq=False)
class BlockMatrix:
    """Matrix of n x n complex blocks indexed by ``index_set x index_set``."""

    index_set: IndexSet
    blocks: np.ndarray

    def __post_init__(self):
        _check_index_set(self.index_set)
        b = np.asarray(self.blocks)
        N = len(self.index_set)
        if b.ndim != 4 or b.shape[0] != N or b.shape[1] != N or b.shape[2] != b.shape[3]:
            raise InputError(f"blocks must have shape ({N}, {N}, n, n), got {b.shape}")
        b = b.astype(np.complex128, copy=False)
        if not np.all(np.isfinite(b)):
            raise InputError("blocks have non-finite entries")
        object.__setattr__(self, "blocks", _frozen(b))

    @property
    def n(self):
        return self.blocks.shape[2]

    def __len__(self):
        return self.blocks.shape[0]

    @classmethod
    def zeros(cls, index_set, n):
        N = len(index_set)
        return cls(index_set, np.zeros((N, N, n, n), dtype=np.complex128))

    @classmethod
    def identity(cls, index_set, n):
        N = len(index_set)
        b = np.zeros((N, N, n, n), dtype=np.complex128)
        b[np.arange(N), np.arange(N)] = np.eye(n)
        return cls(index_set, b)

    @classmethod
    def from_blocks(cls, index_set, blocks: Mapping[Tuple[int, int], np.ndarray], n):
        """Sparse construction: pairs ``(k, l)`` absent from ``blocks`` are zero."""
        N = len(index_set)
        b = np.zeros((N, N, n, n), dtype=np.complex128)
        for (k, l), block in blocks.items():
            block = as_matrix(block, name=f"block ({k}, {l})")
            if block.shape != (n, n):
                raise InputError(f"block ({k}, {l}) has shape {block.shape}, expected ({n}, {n})")
            b[k, l] = block
        return cls(index_set, b)

    @classmethod
    def from_scalars(cls, index_set, values, n=1):
        """Blocks ``values[k, l] * I_n``."""
        v = np.asarray(values, dtype=np.complex128)
        return cls(index_set, v[:, :, None, None] * np.eye(n))

    def block(self, k, l):
        return self.blocks[k, l]

    def __matmul__(self, other):
        if isinstance(other, BlockMatrix):
            return block_mul(self, other)
        if isinstance(other, BlockVector):
            return block_apply(self, other)
        return NotImplemented

    def __add__(self, other):
        _same_shape(self, other)
        return BlockMatrix(self.index_set, self.blocks + other.blocks)

    def __sub__(self, other):
        _same_shape(self, other)
        return BlockMatrix(self.index_set, self.blocks - other.blocks)

    def __mul__(self, c):
        return BlockMatrix(self.index_set, self.blocks * c)

    __rmul__ = __mul__


@dataclass(frozen=True, eq=False)
class BlockVector:
    """H-valued sequence ``(f_k)_{k in X}`` stored as an ``(N, n)`` array."""

    index_set: IndexSet
    components: np.ndarray

    def __post_init__(self):
        _check_index_set(self.index_set)
        c = np.asarray(self.components)
        if c.ndim != 2 or c.shape[0] != len(self.index_set):
            raise InputError(f"components must have shape ({len(self.index_set)}, n), got {c.shape}")
        c = c.astype(np.complex128, copy=False)
        if not np.all(np.isfinite(c)):
            raise InputError("components have non-finite entries")
        object.__setattr__(self, "components", _frozen(c))

    @property
    def n(self):
        return self.components.shape[1]

    def __len__(self):
        return self.components.shape[0]

    def flat(self):
        return self.components.reshape(-1)

    def component_norms(self):
        return np.linalg.norm(self.components, axis=1)

    def __add__(self, other):
        _same_index(self.index_set, other.index_set)
        return BlockVector(self.index_set, self.components + other.components)

    def __sub__(self, other):
        _same_index(self.index_set, other.index_set)
        return BlockVector(self.index_set, self.components - other.components)

    def __mul__(self, c):
        return BlockVector(self.index_set, self.components * c)

    __rmul__ = __mul__


def _same_index(a, b):
    if a != b:
        raise InputError("index sets differ")


def _same_shape(A, B):
    if not isinstance(B, BlockMatrix):
        raise InputError("expected a BlockMatrix")
    _same_index(A.index_set, B.index_set)
    if A.n != B.n:
        raise InputError(f"ambient dimensions differ ({A.n} vs {B.n})")


def block_mul(A, B):
    """Block product ``[AB]_{k,l} = sum_m A_{k,m} B_{m,l}``."""
    _same_shape(A, B)
    return BlockMatrix(A.index_set, np.einsum("kmij,mljp->klip", A.blocks, B.blocks, optimize=True))


def block_adjoint(A):
    """Involution ``(A^*)_{k,l} = (A_{l,k})^*``."""
    return BlockMatrix(A.index_set, A.blocks.transpose(1, 0, 3, 2).conj())


def block_apply(A, v):
    """Matrix-vector action ``(Av)_k = sum_l A_{k,l} v_l``."""
    if not isinstance(v, BlockVector):
        raise InputError("expected a BlockVector")
    _same_index(A.index_set, v.index_set)
    if A.n != v.n:
        raise InputError(f"ambient dimensions differ ({A.n} vs {v.n})")
    return BlockVector(A.index_set, np.einsum("klij,lj->ki", A.blocks, v.components))


def flatten(A):
    """The ``(N n) x (N n)`` matrix of a block matrix."""
    N, n = len(A), A.n
    return A.blocks.transpose(0, 2, 1, 3).reshape(N * n, N * n)


def unflatten(M, index_set, n):
    """Inverse of :func:`flatten`."""
    M = as_matrix(M, name="M")
    N = len(index_set)
    if M.shape != (N * n, N * n):
        raise InputError(f"matrix of shape {M.shape} does not split into {N}x{N} blocks of size {n}")
    return BlockMatrix(index_set, M.reshape(N, n, N, n).transpose(0, 2, 1, 3))


def block_pinv(A, rtol=None):
    """``unflatten(pinv(flatten(A)))``."""
    return unflatten(pinv(flatten(A), rtol=rtol), A.index_set, A.n)


def block_vector_from_flat(x, index_set, n):
    x = np.asarray(x, dtype=np.complex128)
    if x.shape != (len(index_set) * n,):
        raise InputError(f"flat vector has shape {x.shape}, expected ({len(index_set) * n},)")
    return BlockVector(index_set, x.reshape(len(index_set), n))
