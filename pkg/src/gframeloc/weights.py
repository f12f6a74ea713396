"""Weight functions on R^m and their evaluation on index sets."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Optional, Tuple

import numpy as np

from .blockmat import IndexSet
from .exceptions import InputError

__all__ = ["Weight", "ModeratenessReport", "polynomial", "constant", "samples", "moderateness", "lp_norm"]


@dataclass(frozen=True)
class Weight:
    """A positive weight.

    ``kind == "polynomial"`` is ``(1 + |x|)^s``.  A negative exponent is
    allowed so that reciprocals of polynomial weights stay polynomial.
    ``kind == "samples"`` looks values up in a table keyed by coordinate
    tuples.
    """

    kind: str
    s: float = 0.0
    table: Optional[Mapping[Tuple[float, ...], float]] = None

    def __post_init__(self):
        if self.kind == "polynomial":
            if not np.isfinite(self.s):
                raise InputError("polynomial weight exponent must be finite")
        elif self.kind == "samples":
            if not self.table:
                raise InputError("samples weight needs a nonempty table")
            table = {tuple(float(c) for c in np.atleast_1d(k)): float(v) for k, v in self.table.items()}
            if any(not (v > 0 and np.isfinite(v)) for v in table.values()):
                raise InputError("weight samples must be positive and finite")
            object.__setattr__(self, "table", table)
        else:
            raise InputError(f"unknown weight kind {self.kind!r}")

    @property
    def grs(self):
        """GRS condition, recorded from the kind (never checked numerically)."""
        return self.kind == "polynomial"

    @property
    def is_trivial(self):
        return self.kind == "polynomial" and self.s == 0

    @property
    def label(self):
        if self.kind == "polynomial":
            return "1" if self.s == 0 else f"nu_{self.s:g}"
        return "samples"

    def of_norm(self, r):
        """Polynomial weight as a function of ``|x|``."""
        if self.kind != "polynomial":
            raise InputError("of_norm is only defined for polynomial weights")
        return (1.0 + np.asarray(r, dtype=float)) ** self.s

    def __call__(self, x):
        """Evaluate at points ``x`` of shape ``(..., m)``."""
        x = np.asarray(x, dtype=float)
        if self.kind == "polynomial":
            return self.of_norm(np.sqrt(np.sum(x ** 2, axis=-1)))
        flat = x.reshape(-1, x.shape[-1])
        try:
            vals = [self.table[tuple(p)] for p in flat.tolist()]
        except KeyError as exc:
            raise InputError(f"weight has no sample at {exc.args[0]}") from None
        return np.asarray(vals, dtype=float).reshape(x.shape[:-1])

    def reciprocal(self):
        if self.kind == "polynomial":
            return Weight("polynomial", -self.s)
        return Weight("samples", table={k: 1.0 / v for k, v in self.table.items()})

    def at_points(self, index_set: IndexSet):
        """Sequence weight ``(w(k))_{k in X}``.

        Polynomial weights see the minimal-image coordinates on a torus;
        sample tables are keyed by the raw index points.
        """
        if self.kind == "polynomial":
            return self.of_norm(index_set.point_norms())
        return self(index_set.points)

    def at_offsets(self, index_set: IndexSet):
        """Matrix ``w(k - l)`` using wrapped differences."""
        if self.kind == "polynomial":
            return self.of_norm(index_set.distances())
        return self(index_set.differences())


def polynomial(s):
    return Weight("polynomial", float(s))


def constant():
    return Weight("polynomial", 0.0)


def samples(table):
    return Weight("samples", table=dict(table))


@dataclass(frozen=True)
class ModeratenessReport:
    constant: float
    pairs_checked: int


def moderateness(m: Weight, nu: Weight, points, include_origin=True):
    """Smallest C with ``m(x + x') <= C m(x) nu(x')`` over the sampled pairs."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if include_origin and not np.any(np.all(pts == 0, axis=1)):
        pts = np.vstack([np.zeros((1, pts.shape[1])), pts])
    x = pts[:, None, :]
    xp = pts[None, :, :]
    ratio = m(x + xp) / (m(x) * nu(xp))
    return ModeratenessReport(float(ratio.max()), int(ratio.size))


def lp_norm(values, p):
    """(Quasi-)norm ``||(v_k)||_{l^p}`` of nonnegative numbers; ``p = inf`` is the sup."""
    v = np.abs(np.asarray(values, dtype=float))
    if not p > 0:
        raise InputError(f"exponent must be positive, got {p}")
    if v.size == 0:
        return 0.0
    if np.isinf(p):
        return float(v.max())
    if p == 1:
        return float(v.sum())
    if p == 2:
        return float(np.sqrt(np.sum(v * v)))
    return float(np.sum(v ** p) ** (1.0 / p))
