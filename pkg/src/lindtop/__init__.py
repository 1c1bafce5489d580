"""Quadratic fermionic Lindblad dynamics and steady-state topology."""

from .majorana import (
    Dissipator,
    MajoranaIndexing,
    PuritySpectrum,
    build_dissipator,
    dirac_from_nambu,
    fictitious_hamiltonian,
    nambu_from_dirac,
    parent_hamiltonian,
    purity_class,
    purity_spectrum,
)
from .dynamics import (
    damping_spectrum,
    evolve,
    mode_census_and_bulk_edge_check,
    steady_state,
    zero_damping_modes,
)
from .bloch import (
    BlochStencil,
    BlochSymbol,
    bloch_blocks,
    bz_grid,
    chern_number,
    classify_symmetry,
    flatten,
    momentum_state,
    winding_number,
    windings_around_u_zeros,
)
from .models import (
    VortexConfig,
    cross_2d,
    cylinder_reduce,
    insert_vortices,
    kitaev_wire,
    residual_damping_vs_separation,
    smallest_damping_rates,
    three_site_wire,
    zigzag_coherent,
    zigzag_competing,
)
from .edge import (
    BetaSolution,
    build_mode,
    fit_localization,
    solve_beta,
)
from .meanfield import (
    MeanFieldSolution,
    fluctuation_scaling,
    linearize,
    solve_number_equation,
)
from .braiding import (
    AdiabaticSchedule,
    BraidWord,
    adiabatic_evolve,
    braid_matrix,
    braid_via_schedule,
    vector_potential,
)

__version__ = "0.1.0"
