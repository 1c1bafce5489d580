"""Adiabatic parameter changes and Majorana exchange statistics.

The covariance matrix is integrated in the lab frame under
``dGamma/dt = [h, Gamma] - {X, Gamma} + Y`` with a slowly varying dissipator;
the decoherence-free (zero-damping) subspace is tracked along the path with a
smoothly continued orthonormal frame.  The geometric content of the transport
is the frame holonomy, compared against the algebraic exchange matrices
``B_ij`` acting on Majorana mode labels as ``gamma_i -> -gamma_j,
gamma_j -> gamma_i``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import expm

from .dynamics import evolve
from .majorana import Dissipator

__all__ = [
    "AdiabaticSchedule",
    "AdiabaticResult",
    "BraidWord",
    "vector_potential",
    "adiabatic_evolve",
    "braid_matrix",
    "braid_via_schedule",
]


# ---------------------------------------------------------------------------
# Vector potential of a moving frame
# ---------------------------------------------------------------------------

def vector_potential(frames: Sequence[np.ndarray], ds: Optional[float] = None) -> np.ndarray:
    """Connection matrices ``A(s) = antisym(Q^T dQ/ds)`` of a frame path.

    ``frames`` is a sequence of (n, M) orthonormal frames sampled uniformly
    in s (spacing ``ds``, default 1/(S-1)).  Central differences in the
    interior, one-sided at the endpoints; each A is explicitly
    antisymmetrized (exact antisymmetry holds only in the continuum).

    Raises ``ValueError`` when consecutive frames overlap too weakly
    (min singular value of Q_s^T Q_{s+1} below 0.5): the path is
    under-resolved and finite differences are meaningless.
    """
    Q = [np.asarray(f, float) for f in frames]
    S = len(Q)
    if S < 2:
        raise ValueError("need at least two frames")
    if ds is None:
        ds = 1.0 / (S - 1)
    for s in range(S - 1):
        sv = np.linalg.svd(Q[s].T @ Q[s + 1], compute_uv=False)
        if sv.min() < 0.5:
            raise ValueError(
                f"frame jump between steps {s} and {s + 1} "
                f"(min overlap singular value {sv.min():.3f} < 0.5); use finer steps"
            )
    A = np.empty((S, Q[0].shape[1], Q[0].shape[1]))
    for s in range(S):
        if s == 0:
            dQ = (Q[1] - Q[0]) / ds
        elif s == S - 1:
            dQ = (Q[-1] - Q[-2]) / ds
        else:
            dQ = (Q[s + 1] - Q[s - 1]) / (2 * ds)
        raw = Q[s].T @ dQ
        A[s] = 0.5 * (raw - raw.T)
    return A


# ---------------------------------------------------------------------------
# Adiabatic integration with decoherence-free-subspace tracking
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AdiabaticSchedule:
    """A parameter path ``s in [0, 1] -> Dissipator`` with optional drive.

    ``hamiltonian(s)``, when given, is the real antisymmetric matrix h
    generating the coherent part ``[h, Gamma]``.
    """

    path: Callable[[float], Dissipator]
    total_time: float
    steps: int
    hamiltonian: Optional[Callable[[float], np.ndarray]] = None

    def __post_init__(self):
        if self.total_time <= 0:
            raise ValueError("total_time must be positive")
        if self.steps < 1:
            raise ValueError("steps must be >= 1")


@dataclass(frozen=True)
class AdiabaticResult:
    gamma: np.ndarray
    leakage: float                 # co-moving zero-block deviation from constancy
    holonomy: Optional[np.ndarray]  # Q(0)^T Qtilde(1), closed paths only
    min_gap: float                 # smallest damping gap above the kernel seen
    block_initial: Optional[np.ndarray]
    block_final: Optional[np.ndarray]


def _kernel_frame(d: Dissipator, block_dim: int) -> Tuple[np.ndarray, float]:
    """Lowest-damping frame (2N, block_dim) and the gap above it."""
    w, V = np.linalg.eigh(d.X)
    gap = float(w[block_dim]) if block_dim < w.size else np.inf
    return V[:, :block_dim], gap


def _align(prev: np.ndarray, cur: np.ndarray) -> np.ndarray:
    """Rotate frame ``cur`` (within its span) to best match ``prev``."""
    M = prev.T @ cur
    sv = np.linalg.svd(M, compute_uv=False)
    if sv.min() < 0.5:
        raise ValueError(
            f"decoherence-free frame jump (min overlap {sv.min():.3f} < 0.5); "
            "use finer steps"
        )
    U, _, Vt = np.linalg.svd(M)
    return cur @ (U @ Vt).T


def adiabatic_evolve(
    schedule: AdiabaticSchedule,
    gamma0: np.ndarray,
    block_dim: int = 0,
    gap_min: float = 0.0,
) -> AdiabaticResult:
    """Integrate the slow-parameter flow by Strang splitting.

    Each step evolves ``Gamma`` with the dissipator frozen at the step
    midpoint: half a closed-form dissipative step, the exact orthogonal
    rotation ``exp(h dt)`` by congruence, and another dissipative half-step.
    Both factors are exact, so the only error is the O(dt^2) splitting
    commutator plus the parameter discretization.

    With ``block_dim > 0`` the lowest-``block_dim`` damping subspace is
    tracked with a smoothly continued frame; ``leakage`` is the deviation of
    the co-moving block covariance from its initial value, and ``holonomy``
    is the net frame rotation ``Q(0)^T Qtilde(1)`` (meaningful for closed
    paths, where the final subspace coincides with the initial one).

    Aborts with ``ValueError`` naming s when the damping gap above the
    tracked block falls below ``gap_min``.
    """
    gamma = np.asarray(gamma0, float).copy()
    dt = schedule.total_time / schedule.steps
    track = block_dim > 0
    min_gap = np.inf
    if track:
        Q0, gap = _kernel_frame(schedule.path(0.0), block_dim)
        Q = Q0
        block0 = Q0.T @ gamma @ Q0
        min_gap = gap
        leakage = 0.0
    for i in range(schedule.steps):
        s_mid = (i + 0.5) / schedule.steps
        d = schedule.path(s_mid)
        if schedule.hamiltonian is None:
            gamma = evolve(d, gamma, dt)
        else:
            h = np.asarray(schedule.hamiltonian(s_mid), float)
            gamma = evolve(d, gamma, 0.5 * dt)
            O = expm(h * dt)
            gamma = O @ gamma @ O.T
            gamma = evolve(d, gamma, 0.5 * dt)
        if track:
            Qn, gap = _kernel_frame(d, block_dim)
            min_gap = min(min_gap, gap)
            if gap < gap_min:
                raise ValueError(
                    f"damping gap {gap:.3e} below {gap_min} at s = {s_mid:.4f}; "
                    "path crosses a closing gap"
                )
            Q = _align(Q, Qn)
    if not track:
        return AdiabaticResult(gamma, 0.0, None, min_gap, None, None)
    block1 = Q.T @ gamma @ Q
    leakage = float(np.linalg.norm(block1 - block0, 2))
    holonomy = Q0.T @ Q
    return AdiabaticResult(gamma, leakage, holonomy, min_gap, block0, block1)


# ---------------------------------------------------------------------------
# Braid-matrix algebra
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BraidWord:
    """A sequence of Majorana exchanges over a registry of M mode labels."""

    exchanges: Tuple[Tuple[int, int], ...]
    registry_size: int

    def __post_init__(self):
        for i, j in self.exchanges:
            if i == j:
                raise ValueError("exchange indices must be distinct")
            if not (0 <= i < self.registry_size and 0 <= j < self.registry_size):
                raise ValueError(f"exchange ({i}, {j}) outside registry")


def braid_matrix(word, registry_size: Optional[int] = None) -> np.ndarray:
    """Orthogonal matrix of a braid word on Majorana mode labels.

    A single exchange (i, j) maps ``gamma_i -> -gamma_j, gamma_j -> gamma_i``
    and fixes every other label; words compose left-to-right (the first
    exchange acts first).  The result acts on covariance matrices by
    congruence ``Gamma -> B Gamma B^T``; it is special orthogonal.
    """
    if isinstance(word, tuple) and len(word) == 2 and np.isscalar(word[0]):
        word = BraidWord((word,), registry_size)
    elif not isinstance(word, BraidWord):
        word = BraidWord(tuple(word), registry_size)
    M = word.registry_size
    B = np.eye(M)
    for i, j in word.exchanges:
        E = np.eye(M)
        E[i, i] = E[j, j] = 0.0
        E[i, j] = -1.0
        E[j, i] = 1.0
        B = E @ B
    return B


# ---------------------------------------------------------------------------
# Physical exchange vs. algebraic braid matrix
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BraidReport:
    holonomy: np.ndarray
    braid_reference: np.ndarray
    fidelity_error: float      # min over residual gauge of |W -+ B|
    leakage: float
    min_gap: float


def braid_via_schedule(
    schedule: AdiabaticSchedule,
    gamma0: np.ndarray,
    block_dim: int = 2,
    gap_min: float = 0.0,
) -> BraidReport:
    """Run an exchange schedule and compare the holonomy to ``B_12``.

    The schedule must be a closed path whose zero-damping registry has
    ``block_dim`` modes; the transported frame's holonomy W is compared to
    the algebraic exchange matrix on the first two labels, modulo the
    residual gauge (overall orientation of the exchange): the reported error
    is ``min(|W - B|, |W - B^T|)``.
    """
    res = adiabatic_evolve(schedule, gamma0, block_dim=block_dim, gap_min=gap_min)
    B = braid_matrix((0, 1), block_dim)
    W = res.holonomy
    err = min(
        float(np.linalg.norm(W - B, 2)),
        float(np.linalg.norm(W - B.T, 2)),
    )
    return BraidReport(W, B, err, res.leakage, res.min_gap)
