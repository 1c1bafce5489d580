"""Analytic Majorana zero-damping edge modes for translation-invariant stencils.

A zero-damping mode of a quasi-local jump-operator family is an exponential
ansatz ``gamma ~ sum_m alpha_m c_m`` with site amplitude
``alpha_m = e^{i phi/2} prod_n beta_n^{m_n}``.  Requiring every bulk jump
operator to annihilate the mode gives one polynomial condition per momentum
direction:

    0 = sum_j beta^j (e^{-i phi} u_j + v_j)

where (u_j, v_j) are the stencil coefficients at offset j.  Real roots beta
give edge modes decaying on the length scale ``xi = 1/|log|beta||``.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy import optimize

from .bloch import BlochStencil
from .majorana import build_dissipator
from .models import FiniteRealization, ModelInstance

__all__ = [
    "BetaSolution",
    "MajoranaMode",
    "LocalizationFit",
    "solve_beta",
    "build_mode",
    "fit_localization",
]

_REAL_ROOT_TOL = 1e-10


@dataclass(frozen=True)
class BetaSolution:
    """One real decay factor per primitive direction, at edge phase phi."""

    betas: Tuple[float, ...]
    phase: float
    localization_lengths: Tuple[float, ...]
    residual: float = 0.0

    @property
    def dim(self) -> int:
        return len(self.betas)

    def normalizable(self, inward_signs: Sequence[int]) -> bool:
        """True if |beta| < 1 along every declared inward direction.

        ``inward_signs[n] = +1`` means the bulk lies towards increasing
        coordinate n (mode sits at the low edge); ``-1`` the opposite.  A
        direction with |beta| = 1 (periodic/cylinder) never obstructs.
        """
        for b, s in zip(self.betas, inward_signs):
            mag = abs(b) if s >= 0 else 1.0 / abs(b)
            if mag > 1.0 + 1e-12:
                return False
        return True


def _xi(beta: float) -> float:
    mag = abs(beta)
    if abs(mag - 1.0) <= 1e-12:
        return math.inf
    return 1.0 / abs(math.log(mag))


def _polish_root(coeffs: np.ndarray, z: complex, steps: int = 3) -> complex:
    """A few Newton steps on the polynomial with highest-order-first coeffs."""
    p = np.polynomial.Polynomial(coeffs[::-1])
    dp = p.deriv()
    for _ in range(steps):
        d = dp(z)
        if abs(d) < 1e-300:
            break
        z = z - p(z) / d
    return z


def _real_nonzero_roots(coeffs: np.ndarray) -> List[float]:
    """Real nonzero roots of sum_m coeffs[m] beta^m (ascending powers)."""
    c = np.trim_zeros(np.asarray(coeffs, complex), "b")
    if c.size <= 1:
        return []
    roots = np.roots(c[::-1])
    out: List[float] = []
    for r in roots:
        r = _polish_root(c[::-1], complex(r))
        if abs(r.imag) <= _REAL_ROOT_TOL * max(1.0, abs(r)) and abs(r) > 1e-12:
            out.append(float(r.real))
    # Deduplicate (multiple roots polish to the same point).
    dedup: List[float] = []
    for r in sorted(out):
        if not dedup or abs(r - dedup[-1]) > 1e-9 * max(1.0, abs(r)):
            dedup.append(r)
    return dedup


def _stencil_coeffs(stencil: BlochStencil, phase: float) -> Tuple[np.ndarray, np.ndarray]:
    """Offsets (K, d) and condition coefficients e^{-i phi} u_j + v_j."""
    offs = np.asarray(stencil.offsets, dtype=int)
    if offs.ndim == 1:
        offs = offs[:, None]
    c = np.exp(-1j * phase) * np.asarray(stencil.u, complex) + np.asarray(stencil.v, complex)
    return offs, c


def solve_beta(stencil: BlochStencil, phase: float = 0.0) -> List[BetaSolution]:
    """All real-decay-factor edge-mode solutions at edge phase ``phase``.

    Solves ``sum_j beta^j (e^{-i phase} u_j + v_j) = 0`` for real nonzero
    beta (one factor per primitive direction).  In 2D the system is solved
    by factoring when the imaginary part is independent of beta_x (clear
    denominators, real roots of the imaginary part in beta_y, then of the
    real part in beta_x), falling back to a scan over beta_y otherwise.

    Returns an empty list when only complex roots exist.  Raises
    ``ValueError`` for a degenerate stencil imposing no constraint.
    """
    offs, c = _stencil_coeffs(stencil, float(phase))
    if np.abs(c).max() <= 1e-14:
        raise ValueError(
            "degenerate stencil: e^{-i phi} u + v vanishes identically; "
            "the zero-mode condition imposes no constraint"
        )
    dim = offs.shape[1]
    if dim == 1:
        return _solve_beta_1d(offs[:, 0], c, float(phase))
    if dim == 2:
        return _solve_beta_2d(offs, c, float(phase))
    raise ValueError("edge-mode solver supports 1D and 2D stencils only")


def _solve_beta_1d(offsets: np.ndarray, c: np.ndarray, phase: float) -> List[BetaSolution]:
    lo = int(offsets.min())
    poly = np.zeros(int(offsets.max()) - lo + 1, dtype=complex)
    for j, cj in zip(offsets, c):
        poly[int(j) - lo] += cj
    sols = []
    for b in _real_nonzero_roots(poly):
        res = abs(np.polynomial.Polynomial(poly)(b))
        sols.append(BetaSolution((b,), phase, (_xi(b),), float(res)))
    return sols


def _poly_matrix(offs: np.ndarray, c: np.ndarray) -> np.ndarray:
    """Coefficient matrix C[mx, my] after clearing beta^{-1} denominators."""
    lox, loy = int(offs[:, 0].min()), int(offs[:, 1].min())
    C = np.zeros((int(offs[:, 0].max()) - lox + 1, int(offs[:, 1].max()) - loy + 1), complex)
    for (jx, jy), cj in zip(offs, c):
        C[int(jx) - lox, int(jy) - loy] += cj
    return C


def _eval_poly2(C: np.ndarray, bx: float, by: float) -> complex:
    vx = bx ** np.arange(C.shape[0])
    vy = by ** np.arange(C.shape[1])
    return complex(vx @ C @ vy)


def _solve_beta_2d(offs: np.ndarray, c: np.ndarray, phase: float) -> List[BetaSolution]:
    C = _poly_matrix(offs, c)
    pairs: List[Tuple[float, float]] = []
    im_rows = np.nonzero(np.abs(C.imag).max(axis=1) > 1e-14)[0]
    if im_rows.size <= 1:
        # Imaginary part carries a single beta_x power: it factors out, so
        # the imaginary condition is a polynomial in beta_y alone.
        row = C.imag[im_rows[0]] if im_rows.size else None
        by_roots = _real_nonzero_roots(row) if row is not None else []
        if row is None:
            raise ValueError("2D condition has no imaginary part; cannot factor")
        for by in by_roots:
            re_poly = C.real @ (by ** np.arange(C.shape[1]))
            for bx in _real_nonzero_roots(re_poly):
                pairs.append((bx, by))
    else:
        pairs = _scan_solve_2d(C)
    sols = []
    scale = float(np.abs(c).max())
    for bx, by in pairs:
        # Validate against the original Laurent condition: clearing the
        # beta^{-1} denominators introduces a spurious root at the origin.
        res = abs(sum(cj * bx ** jx * by ** jy for (jx, jy), cj in zip(offs, c))) / scale
        if res <= 1e-8:
            sols.append(
                BetaSolution((bx, by), phase, (_xi(bx), _xi(by)), float(res))
            )
    return sols


def _scan_solve_2d(
    C: np.ndarray, by_range: Tuple[float, float] = (-4.0, 4.0), n_scan: int = 4001
) -> List[Tuple[float, float]]:
    """Scan beta_y, track the most-real beta_x root, polish local minima."""
    def misfit(by: float) -> Tuple[float, Optional[float]]:
        poly = (C @ (by ** np.arange(C.shape[1])))  # ascending beta_x powers
        roots = _real_nonzero_roots(poly)
        if roots:
            return 0.0, roots[0]
        cc = np.trim_zeros(np.asarray(poly, complex), "b")
        if cc.size <= 1:
            return math.inf, None
        rr = np.roots(cc[::-1])
        rr = rr[np.abs(rr) > 1e-12]
        if rr.size == 0:
            return math.inf, None
        i = int(np.argmin(np.abs(rr.imag)))
        return float(abs(rr[i].imag)), float(rr[i].real)

    grid = np.linspace(by_range[0], by_range[1], n_scan)
    grid = grid[np.abs(grid) > 1e-6]
    vals = np.array([misfit(by)[0] for by in grid])
    pairs: List[Tuple[float, float]] = []
    for i in range(1, len(grid) - 1):
        if vals[i] <= vals[i - 1] and vals[i] <= vals[i + 1] and vals[i] < 1e-2:
            r = optimize.minimize_scalar(
                lambda by: misfit(by)[0],
                bracket=(grid[i - 1], grid[i], grid[i + 1]),
                method="brent",
                options={"xtol": 1e-14},
            )
            by = float(r.x)
            m, bx = misfit(by)
            if m <= 1e-9 and bx is not None and abs(bx) > 1e-12:
                if not any(abs(by - q[1]) < 1e-8 and abs(bx - q[0]) < 1e-8 for q in pairs):
                    pairs.append((bx, by))
    return pairs


# ---------------------------------------------------------------------------
# Explicit mode construction and localization fits
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MajoranaMode:
    """A unit-norm real Majorana vector with its damping residual."""

    vector: np.ndarray
    residual: float
    solution: BetaSolution
    edge: Tuple[int, ...]   # -1: low edge, +1: high edge, 0: delocalized


def build_mode(
    solution: BetaSolution,
    model: ModelInstance,
    extent,
    boundary: str = "open",
    realization: Optional[FiniteRealization] = None,
) -> MajoranaMode:
    """Materialize a BetaSolution on a finite lattice and verify ``X v ~ 0``.

    The amplitude at site m is ``alpha_m = e^{i phi/2} prod_n beta_n^{m_n}``
    measured from the edge the mode decays away from; Majorana components are
    ``v[2s] = Im alpha, v[2s+1] = Re alpha``.  The residual is ``|X v|`` for
    the jump operators placed fully inside the lattice.

    Raises ``ValueError`` when |beta| != 1 along a periodic direction of the
    requested boundary (the mode is not single-valued on the ring).
    """
    ext = (int(extent),) if np.isscalar(extent) else tuple(int(e) for e in extent)
    if len(ext) != solution.dim:
        raise ValueError("extent and solution dimension differ")
    open_dirs = _open_directions(len(ext), boundary)
    edge = []
    for n, b in enumerate(solution.betas):
        mag = abs(b)
        if n in open_dirs:
            edge.append(-1 if mag < 1.0 else (+1 if mag > 1.0 else 0))
        else:
            if abs(mag - 1.0) > 1e-12:
                raise ValueError(
                    f"|beta_{n}| = {mag:.6g} != 1 along the periodic direction {n}; "
                    "the mode is not single-valued on the ring"
                )
            edge.append(0)

    if realization is None:
        realization = model.finite_realization(ext, boundary=boundary)
    pos = realization.positions()
    log_amp = np.zeros(pos.shape[0])
    sign = np.ones(pos.shape[0])
    for n, b in enumerate(solution.betas):
        m = pos[:, n] if edge[n] <= 0 else (ext[n] - 1) - pos[:, n]
        base = abs(b) if edge[n] != +1 else 1.0 / abs(b)
        log_amp += m * math.log(base) if base != 1.0 else 0.0
        if b < 0:
            sign *= np.where(pos[:, n].astype(int) % 2 == 0, 1.0, -1.0)
    amp = sign * np.exp(log_amp - log_amp.max())
    alpha = amp * cmath.exp(0.5j * solution.phase)
    vec = np.zeros(2 * pos.shape[0])
    vec[0::2] = np.imag(alpha)
    vec[1::2] = np.real(alpha)
    nrm = np.linalg.norm(vec)
    if nrm <= 0:
        raise ValueError("mode amplitude vanished on the finite lattice")
    vec /= nrm
    d = build_dissipator(realization.operators, num_majoranas=vec.size)
    residual = float(np.linalg.norm(d.X @ vec))
    return MajoranaMode(vec, residual, solution, tuple(edge))


def _open_directions(dim: int, boundary: str) -> Tuple[int, ...]:
    if boundary == "open":
        return tuple(range(dim))
    if boundary == "periodic":
        return ()
    if boundary == "cylinder":
        if dim != 2:
            raise ValueError("cylinder boundary requires a 2D lattice")
        return (0,)
    raise ValueError(f"unknown boundary {boundary!r}")


@dataclass(frozen=True)
class LocalizationFit:
    xi: float
    r_squared: float
    delocalized: bool


def fit_localization(
    vector: np.ndarray,
    extent,
    axis: int = 0,
    floor: float = 1e-7,
) -> LocalizationFit:
    """Least-squares exponential decay length of a Majorana vector.

    Site amplitudes are summed in quadrature over the transverse directions;
    the log-profile is fitted linearly from the peak inward, stopping at
    ``floor`` times the peak (to exclude the opposite-edge tail and noise).
    A near-flat profile is reported as delocalized.
    """
    ext = (int(extent),) if np.isscalar(extent) else tuple(int(e) for e in extent)
    v = np.asarray(vector, float)
    amps2 = v[0::2] ** 2 + v[1::2] ** 2
    profile = np.sqrt(amps2.reshape(ext).sum(axis=tuple(i for i in range(len(ext)) if i != axis)))
    peak = int(np.argmax(profile))
    inward = 1 if peak < len(profile) / 2 else -1
    xs, ys = [], []
    i = peak
    while 0 <= i < len(profile) and profile[i] >= floor * profile[peak]:
        xs.append(abs(i - peak))
        ys.append(math.log(profile[i]))
        i += inward
    if len(xs) < 3:
        return LocalizationFit(0.0, 1.0, False)
    xs_a, ys_a = np.asarray(xs, float), np.asarray(ys)
    slope, intercept = np.polyfit(xs_a, ys_a, 1)
    fitted = slope * xs_a + intercept
    ss_res = float(((ys_a - fitted) ** 2).sum())
    ss_tot = float(((ys_a - ys_a.mean()) ** 2).sum())
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    if abs(slope) < 1e-3:
        return LocalizationFit(math.inf, r2, True)
    return LocalizationFit(-1.0 / slope, r2, False)
