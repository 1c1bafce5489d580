"""Majorana-basis bookkeeping, dissipator construction, and purity analysis.

The global convention used across the whole package: site ``n`` (0-based)
carries two Majorana operators,

* index ``2n``   : ``c = i (a_n - a_n^dag)``   ("flavor 1")
* index ``2n+1`` : ``c = a_n + a_n^dag``       ("flavor 2")

with normalization ``{c_j, c_k} = 2 delta_jk``.  A linear jump operator
``L = sum_k l_k c_k`` is represented by its complex coefficient vector ``l``
of length ``2N`` (a "Nambu vector").  The dissipator is the pair of real
matrices ``(X, Y)`` obtained from ``M = sum_i conj(l_i) (x) l_i`` via
``X = 2 Re M`` (symmetric, positive semidefinite) and ``Y = -4 Im M``
(antisymmetric); they generate the covariance-matrix flow
``dGamma/dt = -{X, Gamma} + Y``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import schur

__all__ = [
    "MajoranaIndexing",
    "Dissipator",
    "PuritySpectrum",
    "PurityClassification",
    "nambu_from_dirac",
    "dirac_from_nambu",
    "build_dissipator",
    "anticommutator_table",
    "pair_gamma_eigenvalues",
    "purity_spectrum",
    "fictitious_hamiltonian",
    "parent_hamiltonian",
    "purity_class",
    "check_covariance",
    "default_tol",
]


def default_tol(*matrices: np.ndarray, rel: float = 1e-10) -> float:
    """Relative tolerance scaled by the largest matrix norm involved.

    Parameters
    ----------
    matrices : ndarray
        Matrices whose spectral scale sets the tolerance.
    rel : float
        Relative tolerance factor.
    """
    scale = max((np.linalg.norm(m, 2) for m in matrices if m.size), default=0.0)
    return rel * max(scale, 1.0)


class MajoranaIndexing:
    """Bijection between lattice sites and interleaved Majorana indices.

    Site ``n`` owns the index pair ``(2n, 2n+1)``: flavor 1 is
    ``i(a - a^dag)`` and flavor 2 is ``a + a^dag``.
    """

    def __init__(self, num_sites: int):
        if num_sites < 1:
            raise ValueError(f"num_sites must be positive, got {num_sites}")
        self.num_sites = int(num_sites)

    @property
    def num_majoranas(self) -> int:
        return 2 * self.num_sites

    def site_indices(self, site: int) -> Tuple[int, int]:
        """Majorana index pair (flavor 1, flavor 2) of a site."""
        if not 0 <= site < self.num_sites:
            raise IndexError(f"site {site} out of range [0, {self.num_sites})")
        return 2 * site, 2 * site + 1

    def site_of(self, index: int) -> Tuple[int, int]:
        """Inverse map: Majorana index -> (site, flavor) with flavor in {1, 2}."""
        if not 0 <= index < self.num_majoranas:
            raise IndexError(f"index {index} out of range [0, {self.num_majoranas})")
        return index // 2, index % 2 + 1


def nambu_from_dirac(annihilation: np.ndarray, creation: np.ndarray) -> np.ndarray:
    """Convert per-site Dirac coefficients to a Majorana coefficient vector.

    For ``L = sum_n (A_n a_n + C_n a_n^dag)`` the Majorana components are
    ``l[2n] = i (C_n - A_n) / 2`` and ``l[2n+1] = (C_n + A_n) / 2``.

    Parameters
    ----------
    annihilation, creation : (N,) array_like
        Coefficients ``A_n`` of ``a_n`` and ``C_n`` of ``a_n^dag``.

    Returns
    -------
    (2N,) complex ndarray
    """
    A = np.asarray(annihilation, dtype=complex)
    C = np.asarray(creation, dtype=complex)
    if A.shape != C.shape or A.ndim != 1:
        raise ValueError("annihilation/creation must be 1-d arrays of equal length")
    l = np.empty(2 * A.size, dtype=complex)
    l[0::2] = 0.5j * (C - A)
    l[1::2] = 0.5 * (C + A)
    return l


def dirac_from_nambu(l: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Inverse of :func:`nambu_from_dirac`: returns ``(annihilation, creation)``."""
    l = np.asarray(l, dtype=complex)
    if l.ndim != 1 or l.size % 2:
        raise ValueError("Nambu vector must have even length")
    A = l[1::2] + 1j * l[0::2]
    C = l[1::2] - 1j * l[0::2]
    return A, C


@dataclass(frozen=True)
class Dissipator:
    """The pair ``(X, Y)`` generating ``dGamma/dt = -{X, Gamma} + Y``.

    Attributes
    ----------
    X : (2N, 2N) real ndarray
        Symmetric positive-semidefinite damping matrix.
    Y : (2N, 2N) real ndarray
        Antisymmetric fluctuation matrix.
    """

    X: np.ndarray
    Y: np.ndarray

    def __post_init__(self):
        X, Y = np.asarray(self.X, float), np.asarray(self.Y, float)
        if X.shape != Y.shape or X.ndim != 2 or X.shape[0] != X.shape[1]:
            raise ValueError("X and Y must be square matrices of equal shape")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "Y", Y)
        tol = default_tol(X, Y)
        if np.abs(X - X.T).max() > tol:
            raise ValueError("X is not symmetric")
        if np.abs(Y + Y.T).max() > tol:
            raise ValueError("Y is not antisymmetric")
        if X.size and np.linalg.eigvalsh(X).min() < -tol:
            raise ValueError("X is not positive semidefinite")

    @property
    def num_majoranas(self) -> int:
        return self.X.shape[0]


def build_dissipator(lindblads: Sequence[np.ndarray], num_majoranas: Optional[int] = None) -> Dissipator:
    """Build ``(X, Y)`` from a list of jump-operator coefficient vectors.

    ``M = sum_i conj(l_i) (x) l_i``, ``X = 2 Re M``, ``Y = -4 Im M``.

    Parameters
    ----------
    lindblads : sequence of (2N,) complex arrays
        One Majorana coefficient vector per jump operator.  Rates are
        absorbed into the vectors (no separate rate argument).
    num_majoranas : int, optional
        Required when ``lindblads`` is empty (the zero dissipator needs an
        explicit dimension).
    """
    vecs = [np.asarray(l, dtype=complex) for l in lindblads]
    if not vecs:
        if num_majoranas is None:
            raise ValueError("empty operator list requires explicit num_majoranas")
        n = int(num_majoranas)
        return Dissipator(np.zeros((n, n)), np.zeros((n, n)))
    n = vecs[0].size
    for i, v in enumerate(vecs):
        if v.ndim != 1 or v.size != n:
            raise ValueError(f"operator {i} has shape {v.shape}, expected ({n},)")
    if n < 2 or n % 2:
        raise ValueError(f"Majorana dimension must be even and >= 2, got {n}")
    G = np.array(vecs)                     # rows are the l_i
    M = G.conj().T @ G                     # sum_i conj(l_i) (x) l_i
    return Dissipator(2.0 * M.real, -4.0 * M.imag)


def anticommutator_table(lindblads: Sequence[np.ndarray]) -> np.ndarray:
    """Matrix of anticommutators ``{L_i, L_j} = 2 l_i . l_j`` (plain dot).

    Vanishing of every entry is the operational test for a pure-state-capable
    dissipator.
    """
    G = np.array([np.asarray(l, complex) for l in lindblads])
    return 2.0 * (G @ G.T)


def check_covariance(gamma: np.ndarray, tol: Optional[float] = None) -> np.ndarray:
    """Validate a covariance matrix (real, antisymmetric, (i Gamma)^2 <= 1)."""
    gamma = np.asarray(gamma, dtype=float)
    if tol is None:
        tol = default_tol(gamma)
    if gamma.ndim != 2 or gamma.shape[0] != gamma.shape[1]:
        raise ValueError("covariance matrix must be square")
    if np.abs(gamma + gamma.T).max() > tol:
        raise ValueError("covariance matrix is not antisymmetric")
    if gamma.size:
        w = np.linalg.eigvalsh(-(gamma @ gamma))   # (i Gamma)^2 = -Gamma^2
        if w.min() < -tol or w.max() > 1 + tol:
            raise ValueError("eigenvalues of (i*Gamma)^2 outside [0, 1]")
    return gamma


def pair_gamma_eigenvalues(gamma: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Canonical pairing of a real antisymmetric matrix into 2x2 blocks.

    Returns
    -------
    epsilons : (N,) ndarray
        Nonnegative block magnitudes ``eps_n`` (eigenvalues come in pairs
        ``+/- i eps_n``), sorted ascending.
    planes : (2N, 2N) -> (N, 2N, 2) ndarray
        Orthonormal real 2-frames spanning each eigenplane, ordered like
        ``epsilons``.
    """
    gamma = np.asarray(gamma, dtype=float)
    n2 = gamma.shape[0]
    if n2 % 2:
        raise ValueError("antisymmetric pairing requires even dimension")
    # Enforce exact antisymmetry so the real Schur form is block-diagonal.
    A = 0.5 * (gamma - gamma.T)
    T, Z = schur(A, output="real")
    eps = np.empty(n2 // 2)
    planes = np.empty((n2 // 2, n2, 2))
    for b in range(n2 // 2):
        i = 2 * b
        eps[b] = abs(T[i, i + 1])
        planes[b, :, 0] = Z[:, i]
        planes[b, :, 1] = Z[:, i + 1]
    order = np.argsort(eps, kind="stable")
    return eps[order], planes[order]


@dataclass(frozen=True)
class PuritySpectrum:
    """Per-mode purity values ``eps_n^2`` (eigenvalues of ``(i Gamma)^2``).

    ``1`` means the mode is in a pure state, ``0`` completely mixed.
    """

    values: np.ndarray
    purity_gap: float = field(init=False)

    def __post_init__(self):
        v = np.sort(np.asarray(self.values, dtype=float))
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "purity_gap", float(v[0]) if v.size else 0.0)

    @property
    def is_pure(self) -> bool:
        return bool(self.values.size) and bool(np.all(np.abs(self.values - 1.0) <= 1e-8))


def purity_spectrum(gamma: np.ndarray, tol: Optional[float] = None) -> PuritySpectrum:
    """Purity spectrum of a covariance matrix.

    The ``2N`` eigenvalues of ``(i Gamma)^2`` are doubly degenerate; the N
    distinct-by-pairing values are extracted from the canonical antisymmetric
    Schur form and reported sorted ascending, clipped to ``[0, 1]`` within
    tolerance.
    """
    gamma = check_covariance(gamma, tol=tol)
    eps, _ = pair_gamma_eigenvalues(gamma)
    return PuritySpectrum(np.clip(eps**2, 0.0, 1.0))


def fictitious_hamiltonian(gamma: np.ndarray) -> np.ndarray:
    """First-quantized coefficient matrix of the state's fictitious Hamiltonian.

    The Gaussian state with covariance ``Gamma`` is the Gibbs/ground-state
    family of ``H = i sum_ij Gamma_ij c_i c_j`` whose first-quantized matrix
    is ``Gamma`` itself; its spectrum comes in pairs ``+/- eps_n`` with
    ``eps_n^2`` the purity values.
    """
    return check_covariance(gamma).copy()


def parent_hamiltonian(d: Dissipator) -> np.ndarray:
    """Coefficient matrix of ``H = sum_i L_i^dag L_i = i sum_ij Y_ij c_i c_j``.

    Returns ``Y``.  When the jump operators pairwise anticommute (pure-
    capable case) the parent-Hamiltonian spectrum ``+/- e_n`` relates to the
    damping spectrum by ``X^2 = -Y^2/4``, i.e. damping rates are ``|e_n|/2``.
    """
    return d.Y.copy()


@dataclass(frozen=True)
class PurityClassification:
    """Result of the pure-state-capability test with diagnostics."""

    label: str                      # "PureCapable" or "MixedForced"
    max_anticommutator: float       # max_ij |{L_i, L_j}|
    commutator_norm: float          # ||[X, Y]||
    square_relation_norm: float     # ||X^2 + Y^2/4||

    @property
    def pure_capable(self) -> bool:
        return self.label == "PureCapable"


def purity_class(lindblads: Sequence[np.ndarray], tol: Optional[float] = None) -> PurityClassification:
    """Classify a jump-operator family as pure-capable or mixed-forced.

    The family can reach a pure steady state iff all pairwise anticommutators
    ``{L_i, L_j}`` vanish; equivalently ``[X, Y] = 0`` and ``X^2 = -Y^2/4``.
    Both witnesses are computed as a cross-check of the equivalence.
    """
    if not lindblads:
        raise ValueError("purity_class requires a nonempty operator list")
    table = anticommutator_table(lindblads)
    d = build_dissipator(lindblads)
    if tol is None:
        tol = default_tol(d.X, d.Y)
    comm = np.linalg.norm(d.X @ d.Y - d.Y @ d.X, 2)
    sq = np.linalg.norm(d.X @ d.X + 0.25 * (d.Y @ d.Y), 2)
    max_ac = float(np.abs(table).max())
    label = "PureCapable" if max_ac <= tol else "MixedForced"
    return PurityClassification(label, max_ac, float(comm), float(sq))
