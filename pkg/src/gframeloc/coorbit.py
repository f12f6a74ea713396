"""Weighted Bochner sequence norms and the co-orbit norms they induce on C^n.

On a finite index set every co-orbit space is C^n as a set, so this module
only ever computes norms.  The exponent ``p = 0`` is accepted as an alias of
``p = inf``; the two norms coincide on finite sequences.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np

from .blockmat import BlockVector
from .exceptions import InputError, NotDualPairError
from .gframe import GFrame, analysis, is_dual_pair, mixed_gram, reconstruction_partial_sums
from .localization import weighted_opnorm
from .weights import Weight, constant, lp_norm

__all__ = [
    "SeqSpaceSpec",
    "CoorbitProfile",
    "EquivalenceResult",
    "conjugate_exponent",
    "bochner_norm",
    "coorbit_norm",
    "membership_Vpw",
    "reconstruction_profile",
    "norm_equivalence_check",
    "duality_pairing",
    "holder_bound",
]

DUAL_PAIR_TOL = 1e-8


@dataclass(frozen=True)
class SeqSpaceSpec:
    """The space ``l^p_w(X; C^n)``."""

    p: float = 2.0
    weight: Weight = field(default_factory=constant)

    def __post_init__(self):
        p = float(self.p)
        if np.isnan(p) or p < 0:
            raise InputError(f"exponent must be positive, got {self.p}")
        # l^0 and l^inf carry the same norm on a finite index set
        object.__setattr__(self, "p", np.inf if p == 0 else p)

    @property
    def label(self):
        p = "inf" if np.isinf(self.p) else f"{self.p:g}"
        return f"l^{p}_{self.weight.label}"

    def dual(self):
        """Conjugate exponent with the reciprocal weight (only for p >= 1)."""
        return SeqSpaceSpec(conjugate_exponent(self.p), self.weight.reciprocal())


@dataclass(frozen=True)
class CoorbitProfile:
    enumeration: Tuple[int, ...]
    partial_norm_errors: Tuple[float, ...]

    @property
    def final_error(self):
        return self.partial_norm_errors[-1]


@dataclass(frozen=True)
class EquivalenceResult:
    max_ratio_forward: float
    max_ratio_backward: float
    bound_forward: float
    bound_backward: float

    @property
    def holds(self):
        return (
            self.max_ratio_forward <= self.bound_forward + 1e-9
            and self.max_ratio_backward <= self.bound_backward + 1e-9
        )


def conjugate_exponent(p):
    """``q`` with ``1/p + 1/q = 1``; defined for ``p >= 1`` (``p = 0`` means inf)."""
    p = float(p)
    if p == 0 or np.isinf(p):
        return 1.0
    if p == 1:
        return np.inf
    if p < 1:
        raise InputError("no conjugate exponent for p < 1")
    return p / (p - 1.0)


def _spec(spec):
    return SeqSpaceSpec() if spec is None else spec


def bochner_norm(v: BlockVector, spec: SeqSpaceSpec = None):
    """``|| (||v_k|| w(k))_k ||_{l^p}``."""
    spec = _spec(spec)
    w = spec.weight.at_points(v.index_set)
    return lp_norm(v.component_norms() * w, spec.p)


def coorbit_norm(f, Td: GFrame, spec: SeqSpaceSpec = None):
    """``||C_{Td} f||`` in ``l^p_w``."""
    return bochner_norm(analysis(Td, f), spec)


def membership_Vpw(f, Td: GFrame, spec: SeqSpaceSpec = None, budget=np.inf):
    """Threshold diagnostic ``coorbit_norm(f) <= budget``.

    Every vector belongs to the co-orbit space of a finite system; the budget
    stands in for the distinction made in infinite dimensions.
    """
    if np.isinf(budget):
        return True
    return coorbit_norm(f, Td, spec) <= budget


def _require_dual_pair(T, Td, tol=DUAL_PAIR_TOL):
    ok, residual = is_dual_pair(T, Td, tol=tol)
    if not ok:
        raise NotDualPairError(f"not a dual pair (residual {residual:.3e})")


def reconstruction_profile(T: GFrame, Td: GFrame, f, spec: SeqSpaceSpec = None,
                           enumeration: Optional[Sequence[int]] = None):
    """Co-orbit norm of ``f - sum_{first j} T_k^* Td_k f`` along ``enumeration``."""
    _require_dual_pair(T, Td)
    f = np.asarray(f, dtype=np.complex128)
    if enumeration is None:
        enumeration = T.index_set.centroid_order()
    partial = reconstruction_partial_sums(T, Td, f, enumeration)
    # C_{Td} is linear, so analyse all residuals in one product
    residuals = f[None, :] - partial
    spec = _spec(spec)
    w = spec.weight.at_points(T.index_set)
    coeffs = np.einsum("kij,rj->rki", Td.operators, residuals)
    errors = [lp_norm(np.linalg.norm(c, axis=1) * w, spec.p) for c in coeffs]
    return CoorbitProfile(tuple(int(k) for k in enumeration), tuple(errors))


def _random_vectors(n, count, rng):
    return rng.standard_normal((count, n)) + 1j * rng.standard_normal((count, n))


def norm_equivalence_check(Td: GFrame, T: GFrame, Ud: GFrame, U: GFrame,
                           spec: SeqSpaceSpec = None, samples=200, seed=0):
    """Sampled norm ratios between ``H^p_w(Td, T)`` and ``H^p_w(Ud, U)`` against Gram bounds.

    The forward ratio is ``||C_{Ud} f|| / ||C_{Td} f||``; it is bounded by the
    weighted operator norm of ``G_{Ud,T}``.  The backward ratio swaps the
    roles and is bounded by ``G_{Td,U}``.
    """
    spec = _spec(spec)
    _require_dual_pair(T, Td)
    _require_dual_pair(U, Ud)
    rng = np.random.default_rng(seed)
    fwd = bwd = 0.0
    for f in _random_vectors(T.n, samples, rng):
        a = coorbit_norm(f, Td, spec)
        b = coorbit_norm(f, Ud, spec)
        fwd = max(fwd, b / a)
        bwd = max(bwd, a / b)
    bound_f = weighted_opnorm(mixed_gram(Ud, T), spec.p, spec.weight, seed=seed).upper
    bound_b = weighted_opnorm(mixed_gram(Td, U), spec.p, spec.weight, seed=seed).upper
    return EquivalenceResult(fwd, bwd, bound_f, bound_b)


def duality_pairing(f, g, T: GFrame, Td: GFrame):
    """``beta(f, g) = sum_k <Td_k f, T_k g>`` (linear in f, antilinear in g)."""
    _require_dual_pair(T, Td)
    a = analysis(Td, f).components
    b = analysis(T, g).components
    return complex(np.sum(a * b.conj()))


def holder_bound(f, g, T: GFrame, Td: GFrame, spec: SeqSpaceSpec):
    """``coorbit_norm(f; Td, p, w) * coorbit_norm(g; T, q, 1/w)``, an upper bound for ``|beta(f, g)|``."""
    return coorbit_norm(f, Td, spec) * coorbit_norm(g, T, spec.dual())
