"""Discrete periodic time-frequency analysis on C^L and Gabor g-systems.

Time and frequency live on the cyclic group Z_L, so time-frequency shifts are
exactly unitary and the index set ``Z_L x Z_L`` carries the toroidal metric.

Conventions
-----------
``translate(f, x)[t] = f[t - x]`` and ``modulate(f, w)[t] = exp(2 pi i w t / L) f[t]``;
``pi(z) = M_w T_x`` for ``z = (x, w)``.  With this ordering

    pi(z) pi(z') = exp(-2 pi i x w' / L) pi(z + z'),
    pi(z)^*      = exp(-2 pi i x w / L) pi(-z).

The rank-one operator ``phi (x) psi`` maps f to ``<f, psi> phi``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Optional, Tuple

import numpy as np

from .blockmat import BlockMatrix, IndexSet, hermitian_eig
from .exceptions import InputError, InsufficientDataError, NotAFrameError
from .gframe import FRAME_TOL, FrameBounds, GFrame
from .localization import DecayFit, fit_polynomial_decay

__all__ = [
    "TFPoint",
    "WindowOperator",
    "GaborGSystem",
    "DecayTheoremReport",
    "translate",
    "modulate",
    "tf_shift",
    "tf_shift_matrix",
    "stft",
    "discrete_gaussian",
    "m1_norm_proxy",
    "op_translate",
    "build_gabor_gsystem",
    "rank_one_gram_block_closed_form",
    "gram_block_triangle_bound",
    "gabor_gram_block_norms",
    "verify_decay_theorem",
]


class TFPoint(NamedTuple):
    """Time-frequency point ``(x, w)``; reduced modulo L where it is used."""

    x: int
    w: int

    def reduce(self, L):
        return TFPoint(int(self.x) % L, int(self.w) % L)


def _tf(z, L):
    x, w = z
    if int(x) != x or int(w) != w:
        raise InputError(f"time-frequency point must be integral, got {z}")
    return int(x) % L, int(w) % L


def _signal(f):
    f = np.asarray(f, dtype=np.complex128)
    if f.ndim != 1 or f.size == 0:
        raise InputError("expected a nonempty 1-d signal")
    return f


def translate(f, x):
    """Cyclic shift ``(T_x f)[t] = f[(t - x) mod L]``."""
    f = _signal(f)
    return np.roll(f, int(x) % f.size)


def modulate(f, w):
    """``(M_w f)[t] = exp(2 pi i w t / L) f[t]``."""
    f = _signal(f)
    L = f.size
    t = np.arange(L)
    return np.exp(2j * np.pi * ((int(w) * t) % L) / L) * f


def tf_shift(f, z):
    """``pi(z) f = M_w T_x f``."""
    f = _signal(f)
    x, w = _tf(z, f.size)
    return modulate(translate(f, x), w)


def tf_shift_matrix(z, L):
    """Matrix of ``pi(z)`` on C^L."""
    x, w = _tf(z, L)
    phases = np.exp(2j * np.pi * ((w * np.arange(L)) % L) / L)
    return phases[:, None] * np.roll(np.eye(L), x, axis=0)


def _shifted_copies(f, points):
    """Rows ``pi(z_k) f`` for an ``(N, 2)`` integer array of points."""
    L = f.size
    t = np.arange(L)
    x = points[:, 0] % L
    w = points[:, 1] % L
    rolled = f[(t[None, :] - x[:, None]) % L]
    return np.exp(2j * np.pi * ((w[:, None] * t[None, :]) % L) / L) * rolled


def stft(f, g):
    """``V_g f(x, w) = <f, pi((x, w)) g>`` as an ``L x L`` array indexed ``[x, w]``."""
    f = _signal(f)
    g = _signal(g)
    if f.size != g.size:
        raise InputError("signal and window lengths differ")
    L = f.size
    t = np.arange(L)
    rolled = g[(t[None, :] - t[:, None]) % L]
    return np.fft.fft(f[None, :] * rolled.conj(), axis=1)


def discrete_gaussian(L):
    """Unit-norm periodized Gaussian ``sum_p exp(-pi (t + pL)^2 / L)``, ``p in {-1, 0, 1}``.

    ``t`` is the centred representative of each residue, so the window is
    even.  The scaling ``t / sqrt(L)`` makes it invariant under the unitary DFT.
    """
    if int(L) != L or L < 4:
        raise InputError(f"discrete_gaussian needs an integer L >= 4, got {L}")
    L = int(L)
    j = np.arange(L)
    t = np.where(j < L / 2, j, j - L).astype(float)
    g = sum(np.exp(-np.pi * (t + p * L) ** 2 / L) for p in (-1, 0, 1))
    return (g / np.linalg.norm(g)).astype(np.complex128)


def _torus_norms(L):
    j = np.arange(L)
    c = np.minimum(j, L - j).astype(float)
    return np.sqrt(c[:, None] ** 2 + c[None, :] ** 2)


def m1_norm_proxy(f, s, window=None):
    """Discrete stand-in ``sum_{x,w} |V_g f(x, w)| (1 + d((x, w), 0))^s`` for the M^1 norm.

    The window defaults to :func:`discrete_gaussian`; distances are toroidal.
    """
    f = _signal(f)
    g = discrete_gaussian(f.size) if window is None else window
    V = stft(f, g)
    return float(np.sum(np.abs(V) * (1.0 + _torus_norms(f.size)) ** s))


@dataclass(frozen=True, eq=False)
class WindowOperator:
    """``T = sum_n phi_n (x) psi_n`` stored as two ``(r, L)`` arrays."""

    phis: np.ndarray
    psis: np.ndarray

    def __post_init__(self):
        phis = np.atleast_2d(np.asarray(self.phis, dtype=np.complex128)).copy()
        psis = np.atleast_2d(np.asarray(self.psis, dtype=np.complex128)).copy()
        if phis.ndim != 2 or phis.shape != psis.shape or phis.shape[0] == 0:
            raise InputError("window needs matching (r, L) arrays with r >= 1")
        if not (np.all(np.isfinite(phis)) and np.all(np.isfinite(psis))):
            raise InputError("window vectors have non-finite entries")
        phis.flags.writeable = False
        psis.flags.writeable = False
        object.__setattr__(self, "phis", phis)
        object.__setattr__(self, "psis", psis)

    @classmethod
    def from_terms(cls, terms):
        terms = list(terms)
        if not terms:
            raise InputError("window needs at least one term")
        return cls(np.array([t[0] for t in terms]), np.array([t[1] for t in terms]))

    @classmethod
    def rank_one(cls, phi, psi=None):
        return cls(np.asarray(phi)[None, :], np.asarray(phi if psi is None else psi)[None, :])

    @classmethod
    def gaussian(cls, L):
        """``g (x) g`` with ``g = discrete_gaussian(L)``."""
        return cls.rank_one(discrete_gaussian(L))

    @classmethod
    def identity(cls, L):
        """The identity written as ``sum_j e_j (x) e_j``."""
        return cls(np.eye(L), np.eye(L))

    @property
    def L(self):
        return self.phis.shape[1]

    @property
    def rank(self):
        return self.phis.shape[0]

    @property
    def terms(self):
        return list(zip(self.phis, self.psis))

    @property
    def nuclear_bound(self):
        """``sum_n ||phi_n|| ||psi_n||``."""
        return float(np.sum(np.linalg.norm(self.phis, axis=1) * np.linalg.norm(self.psis, axis=1)))

    def assemble(self):
        return self.phis.T @ self.psis.conj()

    def scaled(self, c):
        return WindowOperator(self.phis * c, self.psis)


def op_translate(T: WindowOperator, z):
    """``alpha_z(T) = pi(z) T pi(z)^*``, applied termwise."""
    pts = np.array([_tf(z, T.L)])
    return WindowOperator(
        np.array([_shifted_copies(phi, pts)[0] for phi in T.phis]),
        np.array([_shifted_copies(psi, pts)[0] for psi in T.psis]),
    )


@dataclass(frozen=True, eq=False)
class GaborGSystem:
    """The family ``(alpha_k(T))_{k in X}`` for a window T and points X in Z_L x Z_L."""

    window: WindowOperator
    points: Tuple[TFPoint, ...]

    def __post_init__(self):
        if not isinstance(self.window, WindowOperator):
            raise InputError("expected a WindowOperator")
        L = self.L
        pts = []
        for z in self.points:
            x, w = z
            if not (0 <= x < L and 0 <= w < L) or int(x) != x or int(w) != w:
                raise InputError(f"point {tuple(z)} outside Z_{L} x Z_{L}")
            pts.append(TFPoint(int(x), int(w)))
        if not pts:
            raise InputError("Gabor system needs at least one point")
        if len(set(pts)) != len(pts):
            raise InputError("Gabor system points must be distinct")
        object.__setattr__(self, "points", tuple(pts))

    @property
    def L(self):
        return self.window.L

    @classmethod
    def grid(cls, window, a, b):
        """Points ``(a i, b j)`` of the lattice ``a Z_L x b Z_L``."""
        L = window.L
        if a < 1 or b < 1 or L % a or L % b:
            raise InputError(f"lattice steps ({a}, {b}) must divide L={L}")
        return cls(window, tuple(TFPoint(x, w) for x in range(0, L, a) for w in range(0, L, b)))

    @classmethod
    def full(cls, window):
        return cls.grid(window, 1, 1)

    def coords(self):
        return np.array(self.points, dtype=np.int64).reshape(-1, 2)

    def index_set(self):
        return IndexSet(self.coords().astype(float), period=self.L)

    def density(self, radius=1.0):
        return self.index_set().density(radius)


def _term_copies(sys):
    pts = sys.coords()
    Phi = np.stack([_shifted_copies(phi, pts) for phi in sys.window.phis], axis=2)
    Psi = np.stack([_shifted_copies(psi, pts) for psi in sys.window.psis], axis=2)
    return Phi, Psi  # (N, L, r)


def build_gabor_gsystem(sys: GaborGSystem):
    """The g-frame ``T_k = alpha_k(T)`` on the toroidal index set of ``sys``."""
    Phi, Psi = _term_copies(sys)
    return GFrame(sys.index_set(), np.einsum("kim,kjm->kij", Phi, Psi.conj()))


def rank_one_gram_block_closed_form(window: WindowOperator, k, l):
    """``||alpha_k(T) alpha_l(T)^*|| = ||phi||^2 |<pi(l) psi, pi(k) psi>|`` for ``T = phi (x) psi``."""
    if window.rank != 1:
        raise InputError("closed form needs a single-term window; assemble the blocks instead")
    phi, psi = window.phis[0], window.psis[0]
    inner = np.vdot(tf_shift(psi, k), tf_shift(psi, l))
    return float(np.vdot(phi, phi).real * abs(inner))


def gram_block_triangle_bound(window: WindowOperator, k, l):
    """``sum_{m,n} ||phi_m|| ||phi_n|| |<pi(l) psi_n, pi(k) psi_m>|``."""
    pk = np.array([tf_shift(psi, k) for psi in window.psis])
    pl = np.array([tf_shift(psi, l) for psi in window.psis])
    nphi = np.linalg.norm(window.phis, axis=1)
    inner = np.abs(pk.conj() @ pl.T)  # [m, n] = <pi(l) psi_n, pi(k) psi_m>
    return float(nphi @ inner @ nphi)


def _structured_frame_operator(R, Psi):
    # S = sum_k Psi_k Phi_k^* Phi_k Psi_k^* and Phi_k^* Phi_k = R_k^* R_k
    return np.einsum("kim,kam,kan,kjn->ij", Psi, R.conj(), R, Psi.conj(), optimize=True)


def _frame_power(S, power):
    w, V = hermitian_eig(S)
    if not w[0] > FRAME_TOL * abs(w[-1]):
        raise NotAFrameError("Gabor system is not a frame")
    return (V * w ** power) @ V.conj().T


def gabor_gram_block_norms(sys: GaborGSystem, powers=(0,)):
    """Block norms of ``[T_k S^{-j} T_l^*]`` for each j in ``powers``.

    j = 0 gives the Gram matrix, j = 1 the mixed Gram matrix with the
    canonical dual and j = 2 the Gram matrix of the canonical dual.  With
    ``T_k = Phi_k Psi_k^*`` and ``Phi_k = Q_k R_k`` each block norm equals
    ``||R_k Psi_k^* S^{-j} Psi_l R_l^*||``, so no ``(N L)^2`` matrix is formed.
    """
    Phi, Psi = _term_copies(sys)
    N, L, r = Phi.shape
    R = np.linalg.qr(Phi, mode="r")  # (N, r, r) when r <= L
    if R.shape[-2] != r:
        raise InputError("window rank exceeds the signal length")
    S = None
    out = {}
    for j in powers:
        if j == 0:
            Y = Psi
        else:
            if S is None:
                S = _structured_frame_operator(R, Psi)
            Y = np.einsum("ij,kjm->kim", _frame_power(S, -j), Psi)
        C = np.einsum("kim,lin->klmn", Psi.conj(), Y, optimize=True)
        if r == 1:
            out[j] = np.abs(R[:, 0, 0])[:, None] * np.abs(C[:, :, 0, 0]) * np.abs(R[:, 0, 0])[None, :]
        else:
            B = np.einsum("kab,klbc,ldc->klad", R, C, R.conj(), optimize=True)
            out[j] = np.linalg.norm(B, ord=2, axis=(2, 3))
    return out


@dataclass(frozen=True)
class DecayTheoremReport:
    """Jaffard constants of the primal, mixed and dual Gram matrices.

    ``C1``, ``C2`` and ``C3`` belong to ``G``, ``G_{G, dual}`` and ``G_dual``.
    A fit is ``None`` when fewer than three distance bins carry
    non-negligible blocks (for instance when all off-diagonal blocks vanish),
    and ``dual_decay_consistent`` is then ``None`` as well.
    """

    s: float
    C1: float
    C2: float
    C3: float
    fit_primal: Optional[DecayFit]
    fit_mixed: Optional[DecayFit]
    fit_dual: Optional[DecayFit]
    decay_slack: float
    dual_decay_consistent: Optional[bool]
    bounds: FrameBounds
    density: int


def _fit_or_none(index_set, norms):
    try:
        return fit_polynomial_decay(BlockMatrix.from_scalars(index_set, norms))
    except InsufficientDataError:
        return None


def verify_decay_theorem(sys: GaborGSystem, s, decay_slack=0.5):
    """Jaffard norms and decay fits for the Gram matrices of a Gabor g-frame and its canonical dual."""
    I = sys.index_set()
    norms = gabor_gram_block_norms(sys, powers=(0, 1, 2))
    weight = (1.0 + I.distances()) ** s
    C = [float(np.max(norms[j] * weight)) for j in (0, 1, 2)]
    fits = [_fit_or_none(I, norms[j]) for j in (0, 1, 2)]
    if fits[0] is not None and fits[2] is not None:
        consistent = bool(fits[2].s_fit >= fits[0].s_fit - decay_slack)
    else:
        consistent = None
    Phi, Psi = _term_copies(sys)
    w, _ = hermitian_eig(_structured_frame_operator(np.linalg.qr(Phi, mode="r"), Psi))
    bounds = FrameBounds(max(float(w[0]), 0.0), float(w[-1]), bool(w[0] > FRAME_TOL * w[-1]))
    return DecayTheoremReport(
        s=float(s),
        C1=C[0],
        C2=C[1],
        C3=C[2],
        fit_primal=fits[0],
        fit_mixed=fits[1],
        fit_dual=fits[2],
        decay_slack=float(decay_slack),
        dual_decay_consistent=consistent,
        bounds=bounds,
        density=I.density(),
    )
