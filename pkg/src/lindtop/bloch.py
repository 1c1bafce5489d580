"""Momentum-space analysis of translation-invariant dissipative models.

A translation-invariant jump-operator family is described by a
:class:`BlochStencil`: finite lists of creation coefficients ``v_r`` and
annihilation coefficients ``u_r`` on integer offsets ``r``.  Its momentum
symbol (with ``a_k = N^{-1/2} sum_n e^{-ik n} a_n``) is

    v(k) = sum_r v_r e^{-i k.r},      u(k) = -sum_r u_r e^{-i k.r},

so the Fourier-transformed operator reads ``L_k = v(k) a_k^dag - u(k) a_{-k}``
and couples only the mode pair ``(k, -k)``.  Each pair sector is a two-mode
problem solved exactly: the 4x4 real Majorana blocks ``(X_k, Y_k, Gamma_k)``
come from the sector dissipator, and the 2x2 flavor-basis correlation matrix
``Gamma(k)`` (flavors ``c_1 = a^dag + a``, ``c_2 = i(a^dag - a)``) comes from
the steady state of the sector Liouvillian on the two-mode Fock space.  The
flattened unit-vector field ``n(k)`` with ``i Gamma_bar(k) = n(k).sigma``
feeds the winding-number and Chern-number invariants.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np

from . import dynamics
from .majorana import build_dissipator, nambu_from_dirac

__all__ = [
    "BlochStencil",
    "BlochSymbol",
    "MomentumState",
    "FlattenedState",
    "bz_grid",
    "momentum_state",
    "sector_rates",
    "bloch_blocks",
    "classify_symmetry",
    "flatten",
    "flattened_from_n",
    "winding_number",
    "chern_number",
    "windings_around_u_zeros",
    "symmetry_transform_check",
    "find_symmetry_center",
    "GapClosedError",
]

_SIGMA = np.array(
    [
        [[0.0, 1.0], [1.0, 0.0]],
        [[0.0, -1.0j], [1.0j, 0.0]],
        [[1.0, 0.0], [0.0, -1.0]],
    ],
    dtype=complex,
)

#: Uniform amplitude rescaling applied to every jump operator built from a
#: stencil (finite realizations and momentum sectors alike), fixing the rate
#: unit so that damping spectra match the standard closed forms.
RATE_SCALE = 2.0


class GapClosedError(ValueError):
    """A spectral gap required by the requested quantity closes at some k."""

    def __init__(self, message: str, k):
        super().__init__(message)
        self.k = k


@dataclass(frozen=True)
class BlochStencil:
    """Quasi-local translation-invariant jump-operator pattern.

    Parameters
    ----------
    dim : int
        Lattice dimension (1 or 2).
    offsets : tuple of int tuples
        Integer offsets carrying coefficients.
    u, v : tuple of complex
        Annihilation (``a_{n+r}``) and creation (``a^dag_{n+r}``)
        coefficients aligned with ``offsets``.
    center : tuple of float, optional
        Symmetry center (site- or bond-centered) when one exists.
    """

    dim: int
    offsets: Tuple[Tuple[int, ...], ...]
    u: Tuple[complex, ...]
    v: Tuple[complex, ...]
    center: Optional[Tuple[float, ...]] = None

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise ValueError(f"dim must be 1 or 2, got {self.dim}")
        offs = tuple(tuple(int(x) for x in o) for o in self.offsets)
        if any(len(o) != self.dim for o in offs):
            raise ValueError("every offset must have length dim")
        if len(set(offs)) != len(offs):
            raise ValueError("duplicate offsets")
        u = tuple(complex(x) for x in self.u)
        v = tuple(complex(x) for x in self.v)
        if not (len(offs) == len(u) == len(v)):
            raise ValueError("offsets, u, v must have equal length")
        object.__setattr__(self, "offsets", offs)
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "v", v)
        if self.center is not None:
            object.__setattr__(self, "center", tuple(float(c) for c in self.center))

    def _phases(self, k: np.ndarray) -> np.ndarray:
        """e^{-i k.r} for every offset; k has shape (..., dim)."""
        R = np.array(self.offsets, dtype=float)            # (m, dim)
        return np.exp(-1j * np.tensordot(k, R.T, axes=1))  # (..., m)

    def u_symbol(self, k) -> np.ndarray:
        """u(k) = -sum_r u_r e^{-i k.r} (coefficient of ``a_{-k}`` in -L_k)."""
        k = _as_kvec(k, self.dim)
        return -(self._phases(k) @ np.array(self.u))

    def v_symbol(self, k) -> np.ndarray:
        """v(k) = sum_r v_r e^{-i k.r} (coefficient of ``a_k^dag`` in L_k)."""
        k = _as_kvec(k, self.dim)
        return self._phases(k) @ np.array(self.v)

    def is_pure_capable(self, tol: float = 1e-12) -> bool:
        """True when u is odd and v even about a symmetry center."""
        center = self.center if self.center is not None else find_symmetry_center(self)
        if center is None:
            return False
        table = {o: i for i, o in enumerate(self.offsets)}
        for i, o in enumerate(self.offsets):
            mirror = tuple(int(round(2 * c - x)) for c, x in zip(center, o))
            j = table.get(mirror)
            uj = self.u[j] if j is not None else 0.0
            vj = self.v[j] if j is not None else 0.0
            if abs(self.u[i] + uj) > tol or abs(self.v[i] - vj) > tol:
                return False
        return True


def find_symmetry_center(stencil: BlochStencil) -> Optional[Tuple[float, ...]]:
    """Search for a center making u odd and v even; None if there is none."""
    offs = np.array(stencil.offsets, dtype=float)
    candidates = {tuple((a + b) / 2.0) for a in offs for b in offs}
    for c in sorted(candidates):
        trial = BlochStencil(stencil.dim, stencil.offsets, stencil.u, stencil.v, center=c)
        if trial.is_pure_capable():
            return c
    return None


@dataclass(frozen=True)
class BlochSymbol:
    """Momentum symbol ``k -> (u_k, v_k)`` with the derived BdG quantities.

    ``xi(k) = |u|^2 - |v|^2``, ``delta(k) = 2 conj(u) v`` and the damping
    normalization ``N(k) = sqrt(|u|^2 + |v|^2)``.
    """

    dim: int
    u: Callable[[np.ndarray], np.ndarray]
    v: Callable[[np.ndarray], np.ndarray]

    @classmethod
    def from_stencil(cls, stencil: BlochStencil) -> "BlochSymbol":
        return cls(stencil.dim, stencil.u_symbol, stencil.v_symbol)

    def xi(self, k) -> np.ndarray:
        return np.abs(self.u(k)) ** 2 - np.abs(self.v(k)) ** 2

    def delta(self, k) -> np.ndarray:
        return 2.0 * np.conj(self.u(k)) * self.v(k)

    def rate(self, k) -> np.ndarray:
        return np.sqrt(np.abs(self.u(k)) ** 2 + np.abs(self.v(k)) ** 2)


Families = Union[BlochStencil, Sequence[Tuple[float, BlochStencil]]]


def _families(model: Families) -> List[Tuple[float, BlochStencil]]:
    if isinstance(model, BlochStencil):
        return [(1.0, model)]
    if hasattr(model, "families"):   # ModelInstance and friends
        model = model.families
    fams = [(float(w), s) for (w, s) in model]
    if not fams:
        raise ValueError("empty family list")
    if any(w < 0 for w, _ in fams):
        raise ValueError("family weights must be nonnegative")
    dims = {s.dim for _, s in fams}
    if len(dims) != 1:
        raise ValueError("families must share the lattice dimension")
    return fams


def _as_kvec(k, dim: int) -> np.ndarray:
    k = np.asarray(k, dtype=float)
    if k.ndim == 0:
        if dim != 1:
            raise ValueError("scalar k only valid for 1D")
        return k.reshape(1)
    if k.shape[-1] != dim:
        if dim == 1:
            return k[..., None]
        raise ValueError(f"k must have last axis of length {dim}")
    return k


def bz_grid(nk: int, dim: int, offset: float = 0.0) -> np.ndarray:
    """Uniform Brillouin-zone grid, k in [-pi, pi), endpoint excluded.

    ``offset`` (in units of the grid spacing) shifts the grid away from
    high-symmetry points when needed.
    """
    axis = -np.pi + (np.arange(nk) + offset) * (2 * np.pi / nk)
    if dim == 1:
        return axis[:, None]
    kx, ky = np.meshgrid(axis, axis, indexing="ij")
    return np.stack([kx, ky], axis=-1)


# ---------------------------------------------------------------------------
# Two-mode Fock-space machinery for the (k, -k) pair sector
# ---------------------------------------------------------------------------

def _mode_ops_two() -> Tuple[np.ndarray, np.ndarray]:
    """Annihilation matrices (a1, a2) on the 2-mode Fock basis |n1 n2>."""
    a1 = np.zeros((4, 4), dtype=complex)
    a2 = np.zeros((4, 4), dtype=complex)
    for n1 in (0, 1):
        for n2 in (0, 1):
            i = 2 * n1 + n2
            if n1 == 1:
                a1[2 * 0 + n2, i] = 1.0
            if n2 == 1:
                a2[2 * n1 + 0, i] = (-1.0) ** n1
    return a1, a2


_A1, _A2 = _mode_ops_two()
_A1D, _A2D = _A1.conj().T, _A2.conj().T
_I4 = np.eye(4, dtype=complex)

# Flavor operators of the pair sector, with mode 1 = a_k and mode 2 = a_{-k}:
#   c_{k,1} = a_{-k}^dag + a_k          c_{k,2} = i (a_{-k}^dag - a_k)
#   c_{-k,1} = a_k^dag + a_{-k}         c_{-k,2} = i (a_k^dag - a_{-k})
_CK = (_A2D + _A1, 1j * (_A2D - _A1))
_CMK = (_A1D + _A2, 1j * (_A1D - _A2))
# (i/2) [c_{k,l}, c_{-k,m}] as four fixed matrices.
_COMM2 = np.array(
    [[0.5j * (_CK[l] @ _CMK[m] - _CMK[m] @ _CK[l]) for m in (0, 1)] for l in (0, 1)]
)

_B1 = np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex)  # single-mode a
_B1D = _B1.conj().T
_I2 = np.eye(2, dtype=complex)
_C1 = (_B1D + _B1, 1j * (_B1D - _B1))
_COMM1 = np.array(
    [[0.5j * (_C1[l] @ _C1[m] - _C1[m] @ _C1[l]) for m in (0, 1)] for l in (0, 1)]
)


def _batched_liouvillian(jump_ops: Sequence[np.ndarray], dim: int) -> np.ndarray:
    """Vectorized Lindblad generator for batched jump operators.

    Each element of ``jump_ops`` has shape (..., dim, dim); returns
    (..., dim^2, dim^2) acting on column-stacked vec(rho).
    """
    shape = jump_ops[0].shape[:-2]
    L16 = np.zeros(shape + (dim * dim, dim * dim), dtype=complex)
    eye = np.eye(dim, dtype=complex)
    for L in jump_ops:
        LdL = np.einsum("...ba,...bc->...ac", L.conj(), L)
        L16 += np.einsum("...ab,...cd->...acbd", L.conj(), L).reshape(shape + (dim * dim, dim * dim))
        L16 -= 0.5 * np.einsum("ab,...cd->...acbd", eye, LdL).reshape(shape + (dim * dim, dim * dim))
        L16 -= 0.5 * np.einsum("...ab,cd->...acbd", np.swapaxes(LdL, -1, -2), eye).reshape(
            shape + (dim * dim, dim * dim)
        )
    return L16


def _steady_rho(L_super: np.ndarray, dim: int) -> Tuple[np.ndarray, np.ndarray]:
    """Batched nullspace steady state; returns (rho, second-smallest sv)."""
    _, s, Vh = np.linalg.svd(L_super)
    vec = Vh[..., -1, :].conj()
    rho = np.swapaxes(vec.reshape(vec.shape[:-1] + (dim, dim)), -1, -2)
    rho = 0.5 * (rho + np.swapaxes(rho.conj(), -1, -2))
    tr = np.trace(rho, axis1=-2, axis2=-1)[..., None, None]
    rho = rho / tr
    return rho, s[..., -2]


def _self_paired_mask(k: np.ndarray) -> np.ndarray:
    """Points with k = -k modulo the reciprocal lattice (components 0 or pi)."""
    frac = np.mod(k / np.pi + 1.0, 2.0) - 1.0    # in [-1, 1)
    near0 = np.abs(frac) < 1e-12
    near1 = np.abs(np.abs(frac) - 1.0) < 1e-12
    return np.all(near0 | near1, axis=-1)


@dataclass(frozen=True)
class MomentumState:
    """Steady-state 2x2 flavor-basis correlation matrices on a k-grid."""

    ks: np.ndarray          # (..., dim)
    gamma: np.ndarray       # (..., 2, 2) complex, Gamma(k); i*Gamma Hermitian
    liouvillian_gap: np.ndarray  # (...,) second-smallest singular value


def momentum_state(model: Families, ks: np.ndarray) -> MomentumState:
    """Exact sector steady state Gamma(k) for every k in a grid.

    For each pair sector ``(k, -k)`` the jump operators
    ``L_k = v(k) a_k^dag - u(k) a_{-k}`` and ``L_{-k}`` of every family
    (amplitudes scaled by ``RATE_SCALE * sqrt(weight)``) act on the two-mode
    Fock space; the steady density matrix is the Liouvillian nullspace and
    Gamma(k) its flavor-basis correlation matrix.  Self-paired points
    (k = -k) are handled in the single-mode space.
    """
    fams = _families(model)
    dim = fams[0][1].dim
    k = _as_kvec(ks, dim)
    flat = k.reshape(-1, dim)
    gamma = np.zeros((flat.shape[0], 2, 2), dtype=complex)
    gap = np.zeros(flat.shape[0])
    self_paired = _self_paired_mask(flat)

    idx = np.nonzero(~self_paired)[0]
    if idx.size:
        kk = flat[idx]
        ops = []
        for w, st in fams:
            s = RATE_SCALE * np.sqrt(w)
            up, vp = st.u_symbol(kk), st.v_symbol(kk)
            um, vm = st.u_symbol(-kk), st.v_symbol(-kk)
            ops.append(s * (vp[:, None, None] * _A1D - up[:, None, None] * _A2))
            ops.append(s * (vm[:, None, None] * _A2D - um[:, None, None] * _A1))
        rho, g = _steady_rho(_batched_liouvillian(ops, 4), 4)
        gamma[idx] = np.einsum("nij,lmji->nlm", rho, _COMM2)
        gap[idx] = g

    idx = np.nonzero(self_paired)[0]
    if idx.size:
        kk = flat[idx]
        ops = []
        for w, st in fams:
            s = RATE_SCALE * np.sqrt(w)
            up, vp = st.u_symbol(kk), st.v_symbol(kk)
            ops.append(s * (vp[:, None, None] * _B1D - up[:, None, None] * _B1))
        rho, g = _steady_rho(_batched_liouvillian(ops, 2), 2)
        gamma[idx] = np.einsum("nij,lmji->nlm", rho, _COMM1)
        gap[idx] = g

    shape = k.shape[:-1]
    return MomentumState(k, gamma.reshape(shape + (2, 2)), gap.reshape(shape))


# ---------------------------------------------------------------------------
# 4x4 real Majorana pair-sector blocks
# ---------------------------------------------------------------------------

def _check_pair_symbol(fams, k, tol: float = 1e-8) -> None:
    """Reject symbols violating conj(u(k)) = u(-k), conj(v(k)) = v(-k)."""
    for _, st in fams:
        up, um = st.u_symbol(k), st.u_symbol(-k)
        vp, vm = st.v_symbol(k), st.v_symbol(-k)
        scale = max(1.0, float(np.abs([up, um, vp, vm]).max()))
        bad = max(np.abs(np.conj(up) - um).max(), np.abs(np.conj(vp) - vm).max())
        if bad > tol * scale:
            raise ValueError(
                "symbol violates conj(u(k)) = u(-k), conj(v(k)) = v(-k) "
                f"(violation {bad:.3e}); the real pair-sector basis is undefined"
            )


def _sector_nambu(fams, k) -> List[np.ndarray]:
    """Majorana coefficient vectors of the sector operators, modes (a_k, a_{-k})."""
    ops = []
    for w, st in fams:
        s = RATE_SCALE * np.sqrt(w)
        up = complex(np.asarray(st.u_symbol(k)).reshape(-1)[0])
        vp = complex(np.asarray(st.v_symbol(k)).reshape(-1)[0])
        um = complex(np.asarray(st.u_symbol(-np.asarray(k, float))).reshape(-1)[0])
        vm = complex(np.asarray(st.v_symbol(-np.asarray(k, float))).reshape(-1)[0])
        ops.append(s * nambu_from_dirac([0.0, -up], [vp, 0.0]))
        ops.append(s * nambu_from_dirac([-um, 0.0], [0.0, vm]))
    return ops


def bloch_blocks(model: Families, k) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """4x4 real Majorana blocks (X_k, Y_k, Gamma_k) of the (k, -k) sector.

    Basis ordering: the interleaved Majorana pairs of the modes ``a_k`` and
    ``a_{-k}``.  ``Gamma_k`` solves ``{X_k, Gamma_k} = Y_k`` exactly.

    Raises
    ------
    ValueError
        If the symbol violates the reality condition conj(u(k)) = u(-k)
        (the real 4x4 basis does not exist then).
    GapClosedError
        If the sector damping gap closes at this k (steady state undefined).
    """
    fams = _families(model)
    k = _as_kvec(k, fams[0][1].dim).reshape(-1)[: fams[0][1].dim]
    _check_pair_symbol(fams, k[None, :])
    d = build_dissipator(_sector_nambu(fams, k))
    rates = np.linalg.eigvalsh(d.X)
    if rates.min() <= 1e-12 * max(1.0, rates.max()):
        raise GapClosedError(f"sector damping gap closes at k = {k}", k)
    res = dynamics.steady_state(d)
    return d.X, d.Y, res.gamma


def sector_rates(model: Families, ks: np.ndarray) -> np.ndarray:
    """Per-k damping rates (two per k) of the pair-sector X_k.

    The 4x4 sector spectrum is doubly degenerate (the modes at k and -k see
    conjugate symbols); the two distinct values are attributed to k.  Over a
    full symmetric BZ grid, their union reproduces the finite periodic-chain
    damping spectrum.
    """
    fams = _families(model)
    dim = fams[0][1].dim
    k = _as_kvec(ks, dim).reshape(-1, dim)
    out = np.empty((k.shape[0], 2))
    # Batched 4x4 X: assemble M = sum conj(l) x l directly.
    ls = []
    for w, st in fams:
        s = RATE_SCALE * np.sqrt(w)
        up, vp = st.u_symbol(k), st.v_symbol(k)
        um, vm = st.u_symbol(-k), st.v_symbol(-k)
        zero = np.zeros_like(up)
        # L_k: A = (0, -u(k)), C = (v(k), 0) -> interleaved Majorana components
        l1 = np.stack([0.5j * vp, 0.5 * vp, 0.5j * up, -0.5 * up], axis=-1) * s
        # L_{-k}: A = (-u(-k), 0), C = (0, v(-k))
        l2 = np.stack([0.5j * um, -0.5 * um, 0.5j * vm, 0.5 * vm], axis=-1) * s
        ls.extend([l1, l2])
    M = sum(np.einsum("na,nb->nab", l.conj(), l) for l in ls)
    X = 2.0 * M.real
    w4 = np.linalg.eigvalsh(X)
    # Doubly degenerate pairs: report each distinct value once.
    out[:, 0] = w4[:, 0]
    out[:, 1] = w4[:, 2]
    return out.reshape(np.asarray(_as_kvec(ks, dim)).shape[:-1] + (2,))


# ---------------------------------------------------------------------------
# Symmetry classification / flattening / invariants
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SymmetryClass:
    label: str                       # "BDI" or "D"
    particle_hole: np.ndarray        # U_C witness (sigma_x)
    time_reversal: Optional[np.ndarray]  # U_T witness when present
    chiral_axis: Optional[np.ndarray] = None  # axis orthogonal to n(k) (BDI)


def classify_symmetry(stencil: BlochStencil, nk: int = 256, tol: float = 1e-8) -> SymmetryClass:
    """Altland-Zirnbauer class of the steady state: BDI or D.

    Particle-hole symmetry is structural (witness sigma_x).  Time reversal is
    detected in two stages: the gap function ``delta(k) = 2 conj(u_k) v_k``
    real up to one global phase is sufficient, but depends on the gauge of the
    jump operators.  When that test fails, the gauge-independent criterion is
    used instead: the flattened steady-state field n(k) is confined to a plane
    (a chiral axis exists), which combined with particle-hole symmetry yields
    an effective time reversal.  Only when both tests fail is the class D.
    """
    sym = BlochSymbol.from_stencil(stencil)
    ks = bz_grid(nk, stencil.dim, offset=0.5)
    delta = sym.delta(ks).reshape(-1)
    mag = np.abs(delta)
    if mag.max() <= tol:
        # No pairing at all: trivially real -> time reversal present.
        return SymmetryClass("BDI", _SIGMA[0].copy(), np.eye(2, dtype=complex))
    phase = delta[np.argmax(mag)] / mag.max()
    rotated = delta / phase
    if np.abs(rotated.imag).max() <= tol * mag.max():
        return SymmetryClass("BDI", _SIGMA[0].copy(), np.eye(2, dtype=complex))
    # Gauge-independent fallback: look for a chiral axis of n(k).
    nk_state = min(nk, 128) if stencil.dim == 1 else min(nk, 48)
    state = momentum_state(stencil, bz_grid(nk_state, stencil.dim, offset=0.5))
    try:
        axis, _, _ = _chiral_frame(flatten(state).n.reshape(-1, 3), tol=1e-6)
    except ValueError:
        return SymmetryClass("D", _SIGMA[0].copy(), None)
    # Chiral operator a.sigma; effective time reversal = chiral o particle-hole.
    u_s = np.einsum("i,ijk->jk", axis, _SIGMA)
    return SymmetryClass("BDI", _SIGMA[0].copy(), u_s @ _SIGMA[0], axis)


@dataclass(frozen=True)
class FlattenedState:
    """Unit-vector field n(k) of the spectrally flattened steady state."""

    ks: np.ndarray       # (..., dim)
    n: np.ndarray        # (..., 3) unit vectors
    eps: np.ndarray      # (...,) purity eigenvalue magnitude before flattening

    @property
    def purity_gap(self) -> float:
        return float((self.eps**2).min())

    def projector(self, index) -> np.ndarray:
        """P(k) = (1 + n(k).sigma)/2 at a grid index."""
        nvec = self.n[index]
        return 0.5 * (np.eye(2, dtype=complex) + np.einsum("i,ijk->jk", nvec, _SIGMA))


def flatten(state: MomentumState, tol: float = 1e-8) -> FlattenedState:
    """Normalize i*Gamma(k) = eps(k) n(k).sigma to a unit-vector field.

    Raises
    ------
    GapClosedError
        If the purity gap closes (eps <= tol) at some k; the error names the
        offending momentum.
    """
    G = 1j * state.gamma
    n = 0.5 * np.real(np.einsum("...ij,lji->...l", G, _SIGMA))
    eps = np.linalg.norm(n, axis=-1)
    if eps.min() <= tol:
        flat_idx = int(np.argmin(eps))
        kbad = state.ks.reshape(-1, state.ks.shape[-1])[flat_idx]
        raise GapClosedError(
            f"purity gap closes at k = {np.round(kbad, 6)} (eps = {eps.min():.3e}); "
            "topological class undefined",
            kbad,
        )
    return FlattenedState(state.ks, n / eps[..., None], eps)


def flattened_from_n(ks: np.ndarray, n: np.ndarray) -> FlattenedState:
    """Wrap an explicit n(k) field (normalizing it) as a FlattenedState."""
    n = np.asarray(n, dtype=float)
    eps = np.linalg.norm(n, axis=-1)
    if eps.min() <= 0:
        raise ValueError("n(k) vanishes somewhere; cannot flatten")
    return FlattenedState(np.asarray(ks), n / eps[..., None], eps)


def _chiral_frame(n_field: np.ndarray, tol: float = 1e-8) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Chiral axis a (orthogonal to every n(k)) and a right-handed frame.

    The axis sign is fixed deterministically: first nonzero component
    positive.  Returns (a, b1, b2) with a = b1 x b2 and the winding phase
    defined as theta = atan2(n.b1, n.b2).
    """
    pts = n_field.reshape(-1, 3)
    _, s, Vh = np.linalg.svd(pts, full_matrices=True)
    a = Vh[-1]
    worst = np.abs(pts @ a).max()
    if worst > tol:
        raise ValueError(
            f"no chiral axis: max |a.n(k)| = {worst:.3e} > {tol}; state is not chiral (class D?)"
        )
    for comp in a:
        if abs(comp) > 1e-12:
            if comp < 0:
                a = -a
            break
    e = np.eye(3)[int(np.argmin(np.abs(a)))]
    b1 = e - (e @ a) * a
    b1 /= np.linalg.norm(b1)
    b2 = np.cross(a, b1)
    return a, b1, b2


def winding_number(flat: FlattenedState, chiral_axis: Optional[np.ndarray] = None) -> int:
    """Integer winding of the planar angle of n(k) around the 1D BZ.

    ``theta(k) = atan2(n.b1, n.b2)`` in the right-handed frame of the chiral
    axis; per-step principal-value differences are accumulated around the
    closed loop and must each stay below pi/2 (refine the grid otherwise).
    """
    n = flat.n
    if n.ndim != 2:
        raise ValueError("winding_number requires a 1D k-grid")
    if chiral_axis is not None:
        a = np.asarray(chiral_axis, float)
        a = a / np.linalg.norm(a)
        if np.abs(n @ a).max() > 1e-8:
            raise ValueError("supplied chiral axis is not orthogonal to n(k)")
        e = np.eye(3)[int(np.argmin(np.abs(a)))]
        b1 = e - (e @ a) * a
        b1 /= np.linalg.norm(b1)
        b2 = np.cross(a, b1)
    else:
        _, b1, b2 = _chiral_frame(n)
    theta = np.arctan2(n @ b1, n @ b2)
    d = np.diff(np.concatenate([theta, theta[:1]]))
    d = np.mod(d + np.pi, 2 * np.pi) - np.pi
    if np.abs(d).max() >= np.pi / 2:
        raise ValueError(
            "winding step exceeds pi/2; refine the k-grid (n(k) under-resolved)"
        )
    total = float(d.sum() / (2 * np.pi))
    nu = int(round(total))
    if abs(total - nu) > 1e-6:
        raise ValueError(f"winding {total} is not integral; refine the grid")
    return nu


def _solid_angle(n1, n2, n3) -> np.ndarray:
    """Oriented solid angle of the spherical triangle (n1, n2, n3)."""
    num = np.einsum("...i,...i->...", n1, np.cross(n2, n3))
    den = (
        1.0
        + np.einsum("...i,...i->...", n1, n2)
        + np.einsum("...i,...i->...", n2, n3)
        + np.einsum("...i,...i->...", n3, n1)
    )
    return 2.0 * np.arctan2(num, den)


def chern_number(flat: FlattenedState) -> int:
    """Chern number of a 2D unit-vector field by plaquette solid angles.

    The sphere area swept by n(k) is accumulated plaquette by plaquette
    (two spherical triangles each), making the total an exact multiple of
    4*pi for any gapped field on a closed BZ.
    """
    n = flat.n
    if n.ndim != 3:
        raise ValueError("chern_number requires a 2D k-grid")
    n00 = n
    n10 = np.roll(n, -1, axis=0)
    n11 = np.roll(np.roll(n, -1, axis=0), -1, axis=1)
    n01 = np.roll(n, -1, axis=1)
    omega = _solid_angle(n00, n10, n11) + _solid_angle(n00, n11, n01)
    # Orientation fixed so that the Chern number equals the total phase
    # winding of u(k) around its zeros (see windings_around_u_zeros).
    total = float(-omega.sum() / (4 * np.pi))
    nu = int(round(total))
    if abs(total - nu) > 1e-6:
        raise ValueError(f"Chern sum {total} is not integral; refine the grid")
    return nu


@dataclass(frozen=True)
class UZeroWinding:
    location: Tuple[float, ...]   # approximate k of the zero (plaquette center)
    winding: int


def windings_around_u_zeros(
    stencil_or_symbol, nk: int = 128
) -> Tuple[List[UZeroWinding], int]:
    """Phase windings of u(k) around its zeros on the 2D BZ; returns the sum.

    A plaquette carries a phase vortex when the principal-value phase
    differences of u around its four corners sum to a nonzero multiple of
    2*pi.  Each vortex candidate is confirmed as a genuine *zero* of u by
    local refinement: the plaquette is repeatedly subsampled around the
    magnitude minimum, and the candidate is accepted only if |u| collapses
    towards 0 (phase discontinuities of non-smooth symbols produce spurious
    vortices at O(1) magnitude, which this rejects).  For any quasi-local
    symbol the zero windings sum to 0; in general the sum equals the Chern
    number of the associated flattened state.
    """
    if isinstance(stencil_or_symbol, BlochStencil):
        sym = BlochSymbol.from_stencil(stencil_or_symbol)
    else:
        sym = stencil_or_symbol
    if sym.dim != 2:
        raise ValueError("u-zero winding analysis is 2D only")
    ks = bz_grid(nk, 2, offset=0.5)   # offset avoids zeros sitting on corners
    u = sym.u(ks)
    if np.abs(u).min() == 0.0:
        ks = bz_grid(nk, 2, offset=0.25)
        u = sym.u(ks)
        if np.abs(u).min() == 0.0:
            raise ValueError("u vanishes on every offset grid tried; enlarge nk")
    v = sym.v(ks)
    if np.sqrt(np.abs(u) ** 2 + np.abs(v) ** 2).min() <= 1e-12:
        raise ValueError("u and v vanish simultaneously; symbol invalid")

    phase = np.angle(u)
    corners = [u, np.roll(u, -1, 0), np.roll(np.roll(u, -1, 0), -1, 1), np.roll(u, -1, 1)]
    phases = [phase, np.roll(phase, -1, 0), np.roll(np.roll(phase, -1, 0), -1, 1), np.roll(phase, -1, 1)]
    total = np.zeros_like(phase)
    for i in range(4):
        d = phases[(i + 1) % 4] - phases[i]
        total += np.mod(d + np.pi, 2 * np.pi) - np.pi
    charge = np.rint(total / (2 * np.pi)).astype(int)

    scale = float(np.abs(u).max())
    zeros: List[UZeroWinding] = []
    half = np.pi / nk
    for ix, iy in zip(*np.nonzero(charge)):
        center = (float(ks[ix, iy, 0] + half), float(ks[ix, iy, 1] + half))
        if _confirm_u_zero(sym.u, center, half, scale):
            zeros.append(UZeroWinding(center, int(charge[ix, iy])))
    return zeros, int(sum(z.winding for z in zeros))


def _confirm_u_zero(
    ufun, center, half: float, scale: float,
    levels: int = 4, m: int = 9, rel_tol: float = 1e-2,
) -> bool:
    """Confirm that |u| collapses to ~0 inside a plaquette by refinement."""
    cx, cy = center
    best = np.inf
    for _ in range(levels):
        gx = np.linspace(cx - half, cx + half, m)
        gy = np.linspace(cy - half, cy + half, m)
        pts = np.stack(np.meshgrid(gx, gy, indexing="ij"), axis=-1)
        vals = np.abs(ufun(pts))
        i, j = np.unravel_index(int(np.argmin(vals)), vals.shape)
        best = min(best, float(vals[i, j]))
        cx, cy = float(gx[i]), float(gy[j])
        half = 2.0 * half / (m - 1)   # shrink to one subgrid spacing
    return best <= rel_tol * scale


def symmetry_transform_check(
    lindblads: Sequence[np.ndarray],
    S: np.ndarray,
    sign: int = 1,
    gamma: Optional[np.ndarray] = None,
    tol: float = 1e-10,
) -> Tuple[bool, float]:
    """Check invariance of the dissipator (and steady state) under S.

    Verifies ``X = S X S^T``, ``Y = sign * S Y S^T`` and, when a steady state
    is supplied, ``Gamma = sign * S^T Gamma S`` (sign +1 for unitary, -1 for
    antiunitary symmetries).

    Returns (holds, max violation norm).
    """
    S = np.asarray(S, float)
    if np.linalg.norm(S @ S.T - np.eye(S.shape[0]), 2) > 1e-12:
        raise ValueError("S must be orthogonal")
    d = build_dissipator(lindblads)
    viol = np.linalg.norm(d.X - S @ d.X @ S.T, 2)
    viol = max(viol, np.linalg.norm(d.Y - sign * (S @ d.Y @ S.T), 2))
    if gamma is not None:
        viol = max(viol, np.linalg.norm(gamma - sign * (S.T @ gamma @ S), 2))
    scale = max(1.0, np.linalg.norm(d.X, 2) + np.linalg.norm(d.Y, 2))
    return bool(viol <= tol * scale), float(viol)
