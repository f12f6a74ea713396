"""Off-diagonal decay norms of block matrices and weighted operator norms.

All three algebra norms (Jaffard, weighted Schur, Baskakov-Gohberg-Sjostrand)
depend on a block matrix only through its block norms ``||A_{k,l}||``, which
makes them solid by construction.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .blockmat import BlockMatrix, IndexSet, flatten, spectral_norm, unflatten
from .exceptions import InputError, InsufficientDataError
from .gframe import GFrame, gram, mixed_gram
from .weights import Weight, constant, lp_norm, moderateness, polynomial

__all__ = [
    "FIT_FLOOR",
    "BIN_WIDTH",
    "AlgebraSpec",
    "DecayFit",
    "LocalizationReport",
    "NormBracket",
    "AdmissibilityReport",
    "block_norms",
    "scalarize",
    "jaffard_norm",
    "schur_norm",
    "bgs_norm",
    "algebra_norm",
    "solidity_check",
    "fit_polynomial_decay",
    "weighted_opnorm",
    "dual_weight",
    "localization_report",
    "jaffard_product_constant",
    "admissibility_report",
    "inverse_norm",
]

FIT_FLOOR = 1e-13
BIN_WIDTH = 0.5


@dataclass(frozen=True)
class AlgebraSpec:
    """One of the three example algebras.

    ``jaffard`` uses the exponent ``s``; ``schur`` and ``bgs`` use ``weight``.
    """

    family: str
    s: Optional[float] = None
    weight: Optional[Weight] = None

    def __post_init__(self):
        if self.family == "jaffard":
            if self.s is None or not self.s >= 0:
                raise InputError("jaffard algebra needs an exponent s >= 0")
        elif self.family in ("schur", "bgs"):
            if self.weight is None:
                object.__setattr__(self, "weight", constant())
        else:
            raise InputError(f"unknown algebra family {self.family!r}")

    @classmethod
    def jaffard(cls, s):
        return cls("jaffard", s=float(s))

    @classmethod
    def schur(cls, weight=None):
        return cls("schur", weight=weight)

    @classmethod
    def bgs(cls, weight=None):
        return cls("bgs", weight=weight)

    @property
    def label(self):
        if self.family == "jaffard":
            return f"jaffard(s={self.s:g})"
        return f"{self.family}({self.weight.label})"

    def validate_for(self, index_set: IndexSet):
        """Warn (jaffard, ``s <= m``) or raise (bgs off-lattice) for this index set."""
        if self.family == "jaffard" and self.s <= index_set.dim:
            warnings.warn(
                f"jaffard exponent s={self.s} does not exceed the index dimension {index_set.dim}",
                stacklevel=2,
            )
        if self.family == "bgs" and not index_set.is_integer():
            raise InputError("bgs norm needs an integer lattice index set")

    def norm(self, A):
        return algebra_norm(A, self)

    def admissibility_exponent(self, r, dim):
        """Smallest admissible exponent p0 for a ``nu_r``-moderate weight.

        ``dim / (s - r)`` for the Jaffard algebra when ``s > dim + r``, else
        ``None``; ``1`` for the Schur and BGS algebras.
        """
        if self.family == "jaffard":
            if self.s > dim + r:
                return dim / (self.s - r)
            return None
        return 1.0


@dataclass(frozen=True)
class DecayFit:
    """``||A_{k,l}|| ~ C (1 + d(k, l))^{-s_fit}`` fitted on the per-distance envelope."""

    C: float
    s_fit: float
    rms_log_residual: float
    pairs_used: int


@dataclass(frozen=True)
class LocalizationReport:
    algebra: AlgebraSpec
    norm_value: float
    decay_fit: Optional[DecayFit]
    sup_attained_at: Tuple[int, int]


@dataclass(frozen=True)
class NormBracket:
    """Certified enclosure ``lower <= ||A|| <= upper``."""

    lower: float
    upper: float

    @property
    def exact(self):
        return self.upper - self.lower <= 1e-10 * max(self.upper, 1e-300)

    def __iter__(self):
        return iter((self.lower, self.upper))


def block_norms(A: BlockMatrix):
    """Spectral norms of all blocks as an ``(N, N)`` real array."""
    if A.n == 1:
        return np.abs(A.blocks[:, :, 0, 0])
    return np.linalg.norm(A.blocks, ord=2, axis=(2, 3))


def scalarize(A: BlockMatrix):
    """Scalar matrix ``[||A_{k,l}||]`` as a block matrix with 1 x 1 blocks."""
    return BlockMatrix.from_scalars(A.index_set, block_norms(A))


def _jaffard_terms(A, s):
    return block_norms(A) * (1.0 + A.index_set.distances()) ** s


def jaffard_norm(A: BlockMatrix, s):
    """``sup_{k,l} ||A_{k,l}|| (1 + d(k, l))^s``."""
    if not s >= 0:
        raise InputError("jaffard exponent must be nonnegative")
    return float(_jaffard_terms(A, s).max())


def _schur_terms(A, weight):
    return block_norms(A) * weight.at_offsets(A.index_set)


def schur_norm(A: BlockMatrix, weight: Weight = None):
    """Larger of the weighted row-sum and column-sum suprema."""
    M = _schur_terms(A, weight or constant())
    return float(max(M.sum(axis=1).max(), M.sum(axis=0).max()))


def _bgs_offsets(index_set):
    if not index_set.is_integer():
        raise InputError("bgs norm needs an integer lattice index set")
    pts = np.round(index_set.points).astype(np.int64)
    diff = pts[:, None, :] - pts[None, :, :]
    if index_set.period is not None:
        L = index_set.period
        if L != round(L):
            raise InputError("bgs norm needs an integer period")
        diff = np.mod(diff, int(round(L)))
    return diff


def bgs_norm(A: BlockMatrix, weight: Weight = None):
    """``sum_l sup_k ||A_{k,k-l}|| nu(l)`` over the offsets present in the index set.

    Offsets are reduced modulo the period on a torus; the weight sees the
    minimal-image representative.
    """
    weight = weight or constant()
    I = A.index_set
    diff = _bgs_offsets(I)
    m = I.dim
    keys, inverse = np.unique(diff.reshape(-1, m), axis=0, return_inverse=True)
    inverse = inverse.reshape(-1)
    sup = np.zeros(len(keys))
    np.maximum.at(sup, inverse, block_norms(A).reshape(-1))
    nu = weight(I.wrap(keys.astype(float)))
    return float(np.sum(sup * nu))


def algebra_norm(A: BlockMatrix, spec: AlgebraSpec):
    if spec.family == "jaffard":
        return jaffard_norm(A, spec.s)
    if spec.family == "schur":
        return schur_norm(A, spec.weight)
    return bgs_norm(A, spec.weight)


def _weighted_entries(A, spec):
    if spec.family == "jaffard":
        return _jaffard_terms(A, spec.s)
    return _schur_terms(A, spec.weight)


def solidity_check(A: BlockMatrix, B: BlockMatrix, spec: AlgebraSpec):
    """True iff ``||B_{k,l}|| <= ||A_{k,l}||`` everywhere and ``norm(B) <= norm(A)``."""
    if A.index_set != B.index_set:
        raise InputError("index sets differ")
    dominated = bool(np.all(block_norms(B) <= block_norms(A)))
    return dominated and algebra_norm(B, spec) <= algebra_norm(A, spec)


def fit_polynomial_decay(A: BlockMatrix, fit_floor=FIT_FLOOR, bin_width=BIN_WIDTH):
    """Least-squares fit of ``log ||A_{k,l}||`` against ``log(1 + d(k, l))``.

    Pairs are binned by distance (bins of ``bin_width``); each bin contributes
    the pair of largest block norm.  Norms ``<= fit_floor`` are dropped.
    """
    norms = block_norms(A).reshape(-1)
    dist = A.index_set.distances().reshape(-1)
    keep = norms > fit_floor
    norms, dist = norms[keep], dist[keep]
    bins = np.floor(dist / bin_width + 1e-9).astype(np.int64)
    uniq = np.unique(bins)
    if uniq.size < 3:
        raise InsufficientDataError(
            f"need at least 3 distance bins with block norm above {fit_floor:g}, got {uniq.size}"
        )
    env_d = np.empty(uniq.size)
    env_v = np.empty(uniq.size)
    for i, b in enumerate(uniq):
        idx = np.flatnonzero(bins == b)
        j = idx[np.argmax(norms[idx])]
        env_d[i], env_v[i] = dist[j], norms[j]
    x = np.log1p(env_d)
    y = np.log(env_v)
    design = np.column_stack([np.ones_like(x), -x])
    (logC, s_fit), *_ = np.linalg.lstsq(design, y, rcond=None)
    resid = y - design @ np.array([logC, s_fit])
    return DecayFit(
        C=float(np.exp(logC)),
        s_fit=float(s_fit),
        rms_log_residual=float(np.sqrt(np.mean(resid ** 2))),
        pairs_used=int(uniq.size),
    )


def _max_sum_of_norms(mats, norms, rng, extra_starts=2, iters=100):
    """Lower bound for ``max_{|h|=1} sum_j ||M_j h||`` by monotone ascent.

    ``f(h) = sum_j ||M_j h||`` is convex and 1-homogeneous, so stepping to the
    normalized gradient never decreases it.  ``norms`` holds ``||M_j||``.
    """
    n = mats.shape[-1]
    if not np.any(norms > 0):
        return 0.0
    starts = []
    j = int(np.argmax(norms))
    starts.append(np.linalg.svd(mats[j])[2][0].conj())
    if np.count_nonzero(norms) > 1:
        starts.append(np.linalg.svd(mats.reshape(-1, n))[2][0].conj())
    for _ in range(extra_starts):
        starts.append(rng.standard_normal(n) + 1j * rng.standard_normal(n))
    best = 0.0
    for h in starts:
        h = h / np.linalg.norm(h)
        val = float(np.linalg.norm(mats @ h, axis=1).sum())
        for _ in range(iters):
            Mh = mats @ h
            r = np.linalg.norm(Mh, axis=1)
            nz = r > 0
            grad = np.einsum("jik,ji->k", mats[nz].conj(), Mh[nz] / r[nz, None])
            g = np.linalg.norm(grad)
            if g == 0:
                break
            h_new = grad / g
            new = float(np.linalg.norm(mats @ h_new, axis=1).sum())
            if new <= val * (1 + 1e-15):
                val = max(val, new)
                break
            h, val = h_new, new
        best = max(best, val)
    return best


def _best_slice(slice_at, sums, rng):
    # sums[l] bounds slice l from above, so slices that cannot beat the
    # current best are skipped
    best = 0.0
    for l in np.argsort(-sums, kind="stable"):
        if sums[l] <= best:
            break
        best = max(best, _max_sum_of_norms(*slice_at(l), rng))
    return best


def _weighted_blocks(A, weight):
    w = weight.at_points(A.index_set)
    return A.blocks * (w[:, None] / w[None, :])[:, :, None, None], w


def weighted_opnorm(A: BlockMatrix, p, weight: Weight = None, samples=500, seed=0):
    """Operator norm of ``A`` on ``l^p_w(X; C^n)`` as a :class:`NormBracket`.

    p = 2 is exact (spectral norm of the weight-conjugated matrix).  For
    p = 1 and p = inf the upper value is the weighted column / row sum of
    block norms and the lower value comes from a monotone ascent over the
    extreme points of the unit ball; the two coincide whenever every block
    is a multiple of the identity (in particular for n = 1).  Other p use
    ``samples`` random vectors for the lower value and, for 1 < p < inf,
    the interpolation bound ``U_1^{1/p} U_inf^{1 - 1/p}``; for p < 1 the
    upper value is ``(max_l sum_k ||B_{k,l}||^p)^{1/p}``.
    """
    if not p > 0:
        raise InputError(f"exponent must be positive, got {p}")
    weight = weight or constant()
    B, w = _weighted_blocks(A, weight)
    N, n = len(A), A.n
    rng = np.random.default_rng(seed)
    norms = np.linalg.norm(B, ord=2, axis=(2, 3)) if n > 1 else np.abs(B[:, :, 0, 0])
    col_sum = float(norms.sum(axis=0).max())
    row_sum = float(norms.sum(axis=1).max())

    if p == 2:
        s = spectral_norm(B.transpose(0, 2, 1, 3).reshape(N * n, N * n))
        return NormBracket(s, s)
    if p == 1:
        if n == 1:
            return NormBracket(col_sum, col_sum)
        lower = _best_slice(lambda l: (B[:, l], norms[:, l]), norms.sum(axis=0), rng)
        return _bracket(lower, col_sum)
    if np.isinf(p):
        if n == 1:
            return NormBracket(row_sum, row_sum)
        lower = _best_slice(lambda k: (B[k].conj().transpose(0, 2, 1), norms[k]), norms.sum(axis=1), rng)
        return _bracket(lower, row_sum)

    if p > 1:
        upper = col_sum ** (1.0 / p) * row_sum ** (1.0 - 1.0 / p)
    else:
        upper = float((norms ** p).sum(axis=0).max() ** (1.0 / p))
    Bw = B.transpose(0, 2, 1, 3).reshape(N * n, N * n)
    candidates = [rng.standard_normal((N, n)) + 1j * rng.standard_normal((N, n)) for _ in range(samples)]
    if N * n <= 512:
        candidates.append(np.linalg.svd(Bw)[2][0].conj().reshape(N, n))
    for l in range(min(N, 64)):
        for i in range(min(n, 4)):
            e = np.zeros((N, n))
            e[l, i] = 1.0
            candidates.append(e)
    lower = 0.0
    for v in candidates:
        # v is expressed in unweighted coordinates of the conjugated operator
        num = lp_norm(np.linalg.norm((Bw @ v.reshape(-1)).reshape(N, n), axis=1), p)
        den = lp_norm(np.linalg.norm(v, axis=1), p)
        if den > 0:
            lower = max(lower, num / den)
    return _bracket(lower, upper)


def _bracket(lower, upper):
    if lower > upper and lower <= upper * (1 + 1e-12):
        lower = upper
    return NormBracket(float(lower), float(upper))


def dual_weight(weight: Weight):
    """Pointwise reciprocal ``1 / w``."""
    return weight.reciprocal()


def localization_report(T: GFrame, U: Optional[GFrame], spec: AlgebraSpec):
    """Algebra norm, decay fit and sup location of ``G_T`` or ``G_{U,T}``."""
    G = gram(T) if U is None else mixed_gram(U, T)
    spec.validate_for(G.index_set)
    try:
        fit = fit_polynomial_decay(G)
    except InsufficientDataError:
        fit = None
    entries = _weighted_entries(G, spec)
    k, l = np.unravel_index(int(np.argmax(entries)), entries.shape)
    return LocalizationReport(spec, algebra_norm(G, spec), fit, (int(k), int(l)))


def jaffard_product_constant(index_set: IndexSet, s):
    """Smallest K with ``||AB||_J <= K ||A||_J ||B||_J`` implied by the convolution bound.

    ``K = max_{k,l} (1 + d(k,l))^s sum_m (1 + d(k,m))^{-s} (1 + d(m,l))^{-s}``.
    """
    W = (1.0 + index_set.distances()) ** s
    inv = 1.0 / W
    return float(np.max((inv @ inv) * W))


@dataclass(frozen=True)
class AdmissibilityReport:
    """Finite-truncation evidence about admissibility.

    ``consistent`` only records that the checkable necessary conditions
    hold; admissibility itself is a statement about infinite index sets.
    """

    p0: Optional[float]
    moderateness_constant: float
    consistent: bool


def admissibility_report(spec: AlgebraSpec, weight: Weight, index_set: IndexSet, r=0.0):
    """Check a weight against the ``nu_r``-moderate criterion on the index differences."""
    dim = index_set.dim
    p0 = spec.admissibility_exponent(r, dim)
    nu = polynomial(r) if spec.family == "jaffard" else spec.weight
    pts = index_set.wrap(index_set.points)
    report = moderateness(weight, nu, pts)
    consistent = p0 is not None and math.isfinite(report.constant)
    return AdmissibilityReport(p0, report.constant, consistent)


def inverse_norm(A: BlockMatrix, spec: AlgebraSpec):
    """Algebra norm of ``A^{-1}`` for invertible ``flatten(A)``; reported, never bounded."""
    inv = np.linalg.inv(flatten(A))
    return algebra_norm(unflatten(inv, A.index_set, A.n), spec)
