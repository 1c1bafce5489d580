"""Model zoo: dissipative wire and lattice models as stencils and finite sets.

Every model is a :class:`ModelInstance` bundling one or more weighted
:class:`~lindtop.bloch.BlochStencil` families with a finite-lattice
realization builder.  Finite realizations scale each jump-operator amplitude
by ``RATE_SCALE * sqrt(weight)`` so the damping spectrum matches the
momentum-space closed forms of the corresponding symbols.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
import scipy.sparse as sp

from .bloch import RATE_SCALE, BlochStencil
from .majorana import MajoranaIndexing

__all__ = [
    "ModelInstance",
    "VortexConfig",
    "FiniteRealization",
    "kitaev_wire",
    "three_site_wire",
    "zigzag_stencil",
    "zigzag_coherent",
    "zigzag_competing",
    "cross_2d",
    "cylinder_reduce",
    "insert_vortices",
    "sparse_damping_matrix",
    "residual_damping_vs_separation",
]


@dataclass(frozen=True)
class VortexConfig:
    """A phase twist e^{-i ell phi} with core profile f(r) on the u part.

    Attributes
    ----------
    center : (2,) float
        Continuous vortex position (may sit between sites or on a site).
    ell : int
        Vorticity.
    core_scale : float
        Length scale of the smooth core profile; 0 selects the point core
        f(r) = 1 for r > 0, f(0) = 0.
    """

    center: Tuple[float, float]
    ell: int = 1
    core_scale: float = 0.0

    def profile(self, r: np.ndarray) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        if self.core_scale <= 0:
            return (r > 0).astype(float)
        return np.tanh(r / self.core_scale)


@dataclass(frozen=True)
class FiniteRealization:
    """Explicit jump-operator vectors on a finite lattice."""

    operators: List[np.ndarray]
    indexing: MajoranaIndexing
    extent: Tuple[int, ...]

    def site_id(self, pos: Sequence[int]) -> int:
        if len(self.extent) == 1:
            return int(pos[0])
        return int(pos[0]) * self.extent[1] + int(pos[1])

    def positions(self) -> np.ndarray:
        """(N, d) array of site coordinates in site-id order."""
        if len(self.extent) == 1:
            return np.arange(self.extent[0], dtype=float)[:, None]
        Lx, Ly = self.extent
        xs, ys = np.meshgrid(np.arange(Lx), np.arange(Ly), indexing="ij")
        return np.stack([xs.ravel(), ys.ravel()], axis=-1).astype(float)


@dataclass(frozen=True)
class ModelInstance:
    """A named model: weighted stencil families plus finite realizations."""

    name: str
    parameters: dict
    families: Tuple[Tuple[float, BlochStencil], ...]

    @property
    def dim(self) -> int:
        return self.families[0][1].dim

    @property
    def stencil(self) -> BlochStencil:
        """Primary (first) stencil family."""
        return self.families[0][1]

    def finite_realization(
        self,
        extent,
        boundary: str = "open",
        placement: str = "interior",
        vortices: Sequence[VortexConfig] = (),
    ) -> FiniteRealization:
        """Build the explicit jump-operator list on a finite lattice.

        Parameters
        ----------
        extent : int or (int, int)
            Number of sites per direction.
        boundary : {"open", "periodic", "cylinder"}
            "cylinder" (2D only) is periodic along y, open along x.
        placement : {"interior", "truncated"}
            "interior" places operators only where the full stencil fits
            inside open directions; "truncated" places one operator per site
            and drops out-of-lattice terms (needed to lift the spurious
            kernel left by interior-only placement on open lattices).
        vortices : sequence of VortexConfig
            Applied to the annihilation coefficients (2D only): phases add,
            core profiles multiply; creation coefficients are untouched.
        """
        ext = (int(extent),) if np.isscalar(extent) else tuple(int(e) for e in extent)
        if len(ext) != self.dim:
            raise ValueError(f"extent {ext} does not match model dimension {self.dim}")
        if boundary not in ("open", "periodic", "cylinder"):
            raise ValueError(f"unknown boundary {boundary!r}")
        if boundary == "cylinder" and self.dim != 2:
            raise ValueError("cylinder boundary requires a 2D model")
        if placement not in ("interior", "truncated"):
            raise ValueError(f"unknown placement {placement!r}")
        if vortices and self.dim != 2:
            raise ValueError("vortices require a 2D model")

        periodic = tuple(
            boundary == "periodic" or (boundary == "cylinder" and ax == 1)
            for ax in range(self.dim)
        )
        nsites = int(np.prod(ext))
        idx = MajoranaIndexing(nsites)

        def site_id(pos):
            return pos[0] if self.dim == 1 else pos[0] * ext[1] + pos[1]

        def vortex_factor(pos):
            if not vortices:
                return 1.0
            x, y = float(pos[0]), float(pos[1])
            fac = 1.0 + 0.0j
            phase = 0.0
            for vx in vortices:
                dx, dy = x - vx.center[0], y - vx.center[1]
                r = math.hypot(dx, dy)
                fac *= float(vx.profile(r))
                phase += vx.ell * math.atan2(dy, dx)
            return fac * np.exp(-1j * phase)

        # Balanced interior placement: each family keeps a symmetric margin
        # equal to the mismatch between its own span and the union span of
        # all families, so competing processes of different range terminate
        # together at an open boundary (single-family models get margin 0).
        lo = [min(st.offsets[i][ax] for _, st in self.families for i in range(len(st.offsets)))
              for ax in range(self.dim)]
        hi = [max(st.offsets[i][ax] for _, st in self.families for i in range(len(st.offsets)))
              for ax in range(self.dim)]
        pads = {}
        for _, st in self.families:
            flo = [min(o[ax] for o in st.offsets) for ax in range(self.dim)]
            fhi = [max(o[ax] for o in st.offsets) for ax in range(self.dim)]
            pads[id(st)] = tuple(
                (hi[ax] - lo[ax]) - (fhi[ax] - flo[ax]) for ax in range(self.dim)
            )

        ops: List[np.ndarray] = []
        all_anchor = np.ndindex(*ext)
        for anchor in all_anchor:
            for weight, st in self.families:
                scale = RATE_SCALE * math.sqrt(weight)
                pad = pads[id(st)]
                if placement == "interior":
                    margin_bad = False
                    for ax in range(self.dim):
                        if periodic[ax] or pad[ax] == 0:
                            continue
                        fam_lo = min(o[ax] for o in st.offsets)
                        fam_hi = max(o[ax] for o in st.offsets)
                        if (anchor[ax] + fam_lo - pad[ax] < 0
                                or anchor[ax] + fam_hi + pad[ax] >= ext[ax]):
                            margin_bad = True
                            break
                    if margin_bad:
                        continue
                entries = []   # (site, u_coeff, v_coeff)
                skip = False
                for off, uc, vc in zip(st.offsets, st.u, st.v):
                    pos = [anchor[ax] + off[ax] for ax in range(self.dim)]
                    outside = False
                    for ax in range(self.dim):
                        if periodic[ax]:
                            pos[ax] %= ext[ax]
                        elif not 0 <= pos[ax] < ext[ax]:
                            outside = True
                    if outside:
                        if placement == "interior":
                            skip = True
                            break
                        continue   # truncated: drop the term
                    entries.append((tuple(pos), uc, vc))
                if skip or not entries:
                    continue
                l = np.zeros(idx.num_majoranas, dtype=complex)
                for pos, uc, vc in entries:
                    A = scale * uc * vortex_factor(pos)
                    C = scale * vc
                    n = site_id(pos)
                    l[2 * n] += 0.5j * (C - A)
                    l[2 * n + 1] += 0.5 * (C + A)
                if np.abs(l).max() > 0:
                    ops.append(l)
        return FiniteRealization(ops, idx, ext)


# ---------------------------------------------------------------------------
# Zoo constructors
# ---------------------------------------------------------------------------

def kitaev_wire() -> ModelInstance:
    """Single-wire model: L_n = (a_n^dag + a_{n+1}^dag) + (a_n - a_{n+1})."""
    st = BlochStencil(1, ((0,), (1,)), u=(1.0, -1.0), v=(1.0, 1.0), center=(0.5,))
    return ModelInstance("kitaev", {}, ((1.0, st),))


def three_site_wire(kappa: float) -> ModelInstance:
    """Three-site wire with tunable on-site pump weight kappa.

    ``L_n = [kappa a_n^dag + (a_{n+1}^dag + a_{n-1}^dag) + (a_{n-1} - a_{n+1})]
    / sqrt(4 + kappa^2)``; symbol u(k) = -2i sin k / sqrt(4+kappa^2),
    v(k) = (kappa + 2 cos k)/sqrt(4+kappa^2).
    """
    kappa = float(kappa)
    norm = 1.0 / math.sqrt(4.0 + kappa**2)
    st = BlochStencil(
        1,
        ((-1,), (0,), (1,)),
        u=(norm, 0.0, -norm),
        v=(norm, kappa * norm, norm),
        center=(0.0,),
    )
    return ModelInstance("three_site", {"kappa": kappa}, ((1.0, st),))


def zigzag_stencil(alpha: int) -> BlochStencil:
    """Half-weight wire stencil of range alpha:
    ``L_n = [(a_n^dag + a_{n+alpha}^dag) + (a_n - a_{n+alpha})]/2``."""
    if alpha not in (1, 2):
        raise ValueError("alpha must be 1 or 2")
    return BlochStencil(
        1, ((0,), (alpha,)), u=(0.5, -0.5), v=(0.5, 0.5), center=(alpha / 2.0,)
    )


def zigzag_coherent(kappa: float) -> ModelInstance:
    """Coherent superposition of range-1 and range-2 wire operators.

    ``L_n = (L_n^(1) + kappa L_n^(2)) / sqrt(1 + kappa + kappa^2)``: a single
    jump-operator family whose damping eigenvalues are
    ``2(1+kappa)^2/(1+kappa+kappa^2)`` and
    ``2(1+2 kappa cos k+kappa^2)/(1+kappa+kappa^2)``.
    """
    kappa = float(kappa)
    norm = 1.0 / math.sqrt(1.0 + kappa + kappa**2)
    offs, u, v = [], [], []
    for off, uu, vv in (
        ((0,), 0.5 * (1 + kappa), 0.5 * (1 + kappa)),
        ((1,), -0.5, 0.5),
        ((2,), -0.5 * kappa, 0.5 * kappa),
    ):
        if abs(uu) > 0 or abs(vv) > 0:
            offs.append(off)
            u.append(uu * norm)
            v.append(vv * norm)
    st = BlochStencil(1, tuple(offs), tuple(u), tuple(v), center=None)
    return ModelInstance("zigzag_coherent", {"kappa": kappa}, ((1.0, st),))


def zigzag_competing(kappa: float) -> ModelInstance:
    """Incoherent competition of the two wire dissipators.

    Two independent families L^(1), L^(2) with dissipator weights
    ``1/(1+kappa)`` and ``kappa/(1+kappa)``; requires kappa >= 0.
    """
    kappa = float(kappa)
    if kappa < 0:
        raise ValueError("zigzag_competing requires kappa >= 0")
    fams = (
        (1.0 / (1.0 + kappa), zigzag_stencil(1)),
        (kappa / (1.0 + kappa), zigzag_stencil(2)),
    )
    return ModelInstance("zigzag_competing", {"kappa": kappa}, fams)


def cross_2d(beta: float) -> ModelInstance:
    """2D cross-shaped model with chiral annihilation part.

    ``L_i = beta a_i^dag + sum_{+-e_x,+-e_y} a^dag + (a_{i+e_x} - a_{i-e_x})
    + i(a_{i+e_y} - a_{i-e_y})``; symbol u(k) = 2i(sin kx + i sin ky),
    v(k) = beta + 2(cos kx + cos ky).
    """
    beta = float(beta)
    st = BlochStencil(
        2,
        ((0, 0), (1, 0), (-1, 0), (0, 1), (0, -1)),
        u=(0.0, 1.0, -1.0, 1.0j, -1.0j),
        v=(beta, 1.0, 1.0, 1.0, 1.0),
        center=(0.0, 0.0),
    )
    return ModelInstance("cross2d", {"beta": beta}, ((1.0, st),))


def cylinder_reduce(model: ModelInstance, circumference: int, k_y: float) -> ModelInstance:
    """Reduce the 2D cross model on a cylinder to its k_y in {0, pi} wires.

    The transverse momentum sector maps onto the three-site wire with
    kappa = beta + 2 (k_y = 0) or beta - 2 (k_y = pi), up to an overall
    amplitude factor that does not affect topology (the returned wire uses
    the standard 1/sqrt(4+kappa^2) normalization).
    """
    if model.name != "cross2d":
        raise ValueError("cylinder reduction is defined for the 2D cross model")
    if circumference % 2:
        raise ValueError("circumference must be even so k_y = pi is on the grid")
    beta = model.parameters["beta"]
    if abs(k_y) < 1e-12:
        return three_site_wire(beta + 2.0)
    if abs(abs(k_y) - np.pi) < 1e-12:
        return three_site_wire(beta - 2.0)
    raise ValueError("reduction is available only for k_y in {0, pi}")


def insert_vortices(
    model: ModelInstance,
    vortices: Sequence[VortexConfig],
    lattice,
    boundary: str = "open",
    placement: str = "truncated",
) -> FiniteRealization:
    """Finite jump-operator set of a 2D model threaded by vortices.

    Vortex centers must lie inside the lattice.  Truncated placement is the
    default here: every site carries an operator so the only surviving
    quasi-zero damping modes are the vortex-bound ones.
    """
    ext = tuple(int(e) for e in (lattice if not np.isscalar(lattice) else (lattice, lattice)))
    for vx in vortices:
        if not (0 <= vx.center[0] <= ext[0] - 1 and 0 <= vx.center[1] <= ext[1] - 1):
            raise ValueError(f"vortex center {vx.center} outside lattice {ext}")
    return model.finite_realization(ext, boundary=boundary, placement=placement, vortices=vortices)


def sparse_damping_matrix(real: FiniteRealization) -> sp.csr_matrix:
    """Sparse X = 2 Re sum_i conj(l_i) x l_i from local operator supports."""
    rows, cols, vals = [], [], []
    for l in real.operators:
        support = np.nonzero(np.abs(l) > 0)[0]
        sub = l[support]
        block = 2.0 * np.real(np.outer(sub.conj(), sub))
        rr, cc = np.meshgrid(support, support, indexing="ij")
        rows.append(rr.ravel())
        cols.append(cc.ravel())
        vals.append(block.ravel())
    n = real.indexing.num_majoranas
    X = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(n, n),
    )
    return X.tocsr()


def smallest_damping_rates(real: FiniteRealization, k: int = 6) -> np.ndarray:
    """k smallest damping rates via sparse shift-invert, ascending."""
    X = sparse_damping_matrix(real)
    n = X.shape[0]
    if n <= 512:
        return np.sort(np.clip(np.linalg.eigvalsh(X.toarray()), 0, None))[:k]
    # Shift slightly negative so the factorization is definite even when X
    # has an exact kernel.
    w = sp.linalg.eigsh(X, k=k, sigma=-1e-8, which="LM", return_eigenvectors=False)
    return np.sort(np.clip(w, 0.0, None))


@dataclass(frozen=True)
class SeparationSweep:
    """Residual damping rate of a vortex pair versus separation."""

    separations: np.ndarray
    rates: np.ndarray
    fit_slope: float       # d log(rate) / d separation on the monotone branch
    fit_r2: float


def residual_damping_vs_separation(
    beta: float,
    separations: Sequence[float],
    lattice: int = 35,
    ell: int = 1,
) -> SeparationSweep:
    """Rate of the slower-decaying vortex-pair mode as a function of distance.

    Two point-core vortices are placed symmetrically about the lattice
    center; for each separation the second-smallest damping eigenvalue (the
    larger of the two hybridized core-mode rates) is recorded, and
    ``log rate`` is fitted linearly against separation over the monotone
    initial branch.
    """
    model = cross_2d(beta)
    cy = (lattice - 1) / 2.0
    cx = (lattice - 1) / 2.0
    ds = np.asarray(list(separations), dtype=float)
    rates = np.empty_like(ds)
    for i, d in enumerate(ds):
        vs = [
            VortexConfig((cx - d / 2.0, cy), ell),
            VortexConfig((cx + d / 2.0, cy), ell),
        ]
        real = insert_vortices(model, vs, (lattice, lattice))
        rates[i] = smallest_damping_rates(real, k=4)[1]

    # Monotone branch: longest decreasing prefix of the rate sequence.
    stop = 1
    while stop < len(ds) and rates[stop] < rates[stop - 1]:
        stop += 1
    x, y = ds[:stop], np.log(np.maximum(rates[:stop], 1e-300))
    if stop >= 3:
        slope, intercept = np.polyfit(x, y, 1)
        pred = slope * x + intercept
        ss_res = float(np.sum((y - pred) ** 2))
        ss_tot = float(np.sum((y - y.mean()) ** 2))
        r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    else:
        slope, r2 = float("nan"), float("nan")
    return SeparationSweep(ds, rates, float(slope), float(r2))
