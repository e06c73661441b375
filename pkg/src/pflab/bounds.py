"""Quantitative ground-state diagnostics built on the pull-through identity.

For a ground state Psi of H(p) with gap Delta(p) > 0, applying a mode's
annihilator gives

    a_m Psi = e * pref_m * (H(p - k_m) + omega_m - E(p))^(-1)
              * { (p - P_f - e A) . e_j + (1/2) sigma . (i k_m x e_j) } Psi,

where pref_m = phi_hat(k_m)/sqrt(2 omega_m) * sqrt(V_m).  Squaring and
integrating yields a photon-number bound <Psi, N_f Psi> <= e^2 * Theta(p)
with the rotation-invariant integral

    Theta(p) = 2 int [ (|k|^2/4 + 6 E(p)) / (E(p-k) + omega(k) - E(p))^2 ]
                   * phi_hat(k)^2 / omega(k) dk.

Small e^2 * Theta(p) forces the ground cluster to overlap the spin (x)
vacuum subspace, which is what the checks in this module quantify: the
number bound itself, the vacuum-overlap lower bound 1 - e^2 Theta, the
degeneracy upper bound 2/(1 - e^2 Theta) < 3, the proportionality
P0 Pg P0 = a P0 of the projected ground projector, the admissible-coupling
threshold, and the spinless uniqueness condition.

All integrals run on the dedicated radial-angular grid, independent of the
Hamiltonian's mode set; interpolated E enters through a radial energy
curve whose grid spacing is the quoted uncertainty proxy.  At finite
truncation the pull-through identity is only approximate, so every check
reports its numbers rather than asserting blindly.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import GapTooSmallError, PflabError
from .fock import FockBasis, spin_tensor
from .model import (
    ModelConfig,
    assemble_hamiltonian,
    build_basis,
    build_vector_potential,
    coupling_bound,
    field_amplitudes,
    _free_boson_diagonals,
)
from .quadrature import PolarGrid
from .spectra import (
    DENSE_CUTOFF,
    GroundCluster,
    RadialEnergyCurve,
    detect_ground_cluster,
    solve_lowest,
    sweep_energy_curve,
)

DENOMINATOR_FLOOR = 1e-6


def vacuum_projector(basis: FockBasis) -> sp.csr_matrix:
    """Projector onto (spin factor) x vacuum; rank 2 with spin, rank 1 without."""
    diag = np.zeros(basis.dimension)
    for idx in basis.vacuum_indices():
        diag[idx] = 1.0
    return sp.diags(diag.astype(complex), format="csr")


def default_energy_curve(config: ModelConfig, cache: Optional[dict] = None,
                         **solver_opts) -> RadialEnergyCurve:
    """Energy curve covering every |p - k| reachable by the shared quadrature.

    Only the ground energy is needed per grid point, so larger problems go
    straight to the Lanczos path (dense factorization time would dominate
    the sweep otherwise).  The choice depends only on the dimension, keeping
    runs reproducible.
    """
    q_max = config.p_norm + config.quadrature.r_max
    if "method" not in solver_opts:
        dim = (2 if config.with_spin else 1) * _basis_size(config)
        solver_opts["method"] = "lanczos" if dim > 600 else "auto"
    return sweep_energy_curve(config, q_max=q_max, cache=cache, **solver_opts)


def _basis_size(config: ModelConfig) -> int:
    from .fock import _count_occupations

    return _count_occupations(len(config.mode_set), config.N_max, config.n_max)


@dataclass
class PhotonIntegral:
    """Value of Theta(p) plus conditioning data from the quadrature."""

    value: float
    min_denominator: float
    energy_at_p: float
    grid_spacing: float


def photon_number_integral(config: ModelConfig, energy_curve,
                           denominator_floor: float = DENOMINATOR_FLOOR) -> PhotonIntegral:
    """Theta(p) on the dedicated radial-angular grid.

    Depends on p only through |p| (and through E, itself radial), so equal
    momentum magnitudes give bitwise-equal values.  Raises when the
    denominator E(p-k) + omega(k) - E(p) dips below ``denominator_floor``
    anywhere on the grid: the gap hypothesis has no numerical room left.
    """
    q = config.quadrature
    grid = PolarGrid.build(q.r_max, q.n_radial, q.n_angular)
    p = config.p_norm
    Ep = float(energy_curve(p))
    R = grid.r[:, None]
    U = grid.u[None, :]
    shifted = np.sqrt(np.maximum(p * p - 2.0 * p * R * U + R * R, 0.0))
    omega = np.asarray(config.dispersion.omega(grid.r))[:, None]
    denom = np.asarray(energy_curve(shifted)) + omega - Ep
    min_denom = float(denom.min())
    if min_denom < denominator_floor:
        raise GapTooSmallError(
            f"gap too small for the photon-number integral: minimum denominator "
            f"{min_denom:.3e} < floor {denominator_floor:.0e}"
        )
    phi2 = np.asarray(config.form_factor.phi_hat(grid.r))[:, None] ** 2
    integrand = (0.25 * R * R + 6.0 * Ep) / (denom * denom) * phi2 / omega
    value = 2.0 * grid.integrate(lambda r, u: integrand)
    return PhotonIntegral(
        value=value,
        min_denominator=min_denom,
        energy_at_p=Ep,
        grid_spacing=float(getattr(energy_curve, "spacing", 0.0)),
    )


@dataclass
class PhotonNumberCheck:
    """Pull-through number bound: max <Psi, N_f Psi> over the cluster vs e^2 Theta."""

    nf_max: float
    bound: float
    ratio: float
    slack: float
    passed: bool


def photon_number_check(cluster: GroundCluster, config: ModelConfig,
                        number_op: sp.csr_matrix, integral: PhotonIntegral,
                        slack: float = 0.10) -> PhotonNumberCheck:
    """Check <N_f> <= e^2 Theta(p) (1 + slack) over the whole ground subspace.

    The left side maximizes the number expectation over all unit vectors in
    the cluster (largest eigenvalue of the projected number operator), so it
    does not depend on the arbitrary cluster basis.  Truncation can violate
    the continuum bound, hence the slack band; the numbers are always
    recorded.
    """
    V = cluster.basis
    M = V.conj().T @ (number_op @ V)
    nf_max = float(np.linalg.eigvalsh(0.5 * (M + M.conj().T)).max())
    nf_max = max(nf_max, 0.0)
    bound = config.e**2 * integral.value
    ratio = nf_max / bound if bound > 0.0 else (0.0 if nf_max == 0.0 else math.inf)
    return PhotonNumberCheck(
        nf_max=nf_max, bound=bound, ratio=ratio, slack=slack,
        passed=nf_max <= bound * (1.0 + slack),
    )


def pull_through_residual(psi: np.ndarray, config: ModelConfig, mode_index: int,
                          energy: float, basis: Optional[FockBasis] = None,
                          denominator_floor: float = DENOMINATOR_FLOOR) -> float:
    """|| a_m Psi - RHS_m || / ||Psi|| for the pull-through identity at one mode.

    RHS_m solves the shifted linear system (H(p - k_m) + omega_m - E) x = e *
    { ... } Psi.  The identity is exact only on the untruncated space, so the
    returned residual is the truncation diagnostic.  Raises when the shifted
    operator is not safely positive (gap violation at this mode).
    """
    from .fock import annihilation_matrix  # local import to keep module deps flat

    basis = basis if basis is not None else build_basis(config)
    psi = np.asarray(psi, dtype=complex)
    norm = np.linalg.norm(psi)
    if norm == 0.0:
        raise ValueError("psi must be nonzero")
    mode = config.mode_set.modes[mode_index]
    k = np.asarray(mode.k)
    omega_m = float(config.dispersion.omega(float(np.linalg.norm(k))))

    g, h = field_amplitudes(config)
    _, pf = _free_boson_diagonals(config, basis)
    A = build_vector_potential(config, basis)
    rhs_vec = np.zeros_like(psi)
    for mu in range(3):
        if g[mode_index, mu] != 0.0:
            x_diag = spin_tensor(
                0, sp.diags((config.p[mu] - pf[:, mu]).astype(complex), format="csr"),
                basis)
            D_mu = x_diag - config.e * A[mu]
            rhs_vec += g[mode_index, mu] * (D_mu @ psi)
        if config.with_spin and h[mode_index, mu] != 0.0:
            sigma_mu = spin_tensor(mu + 1, sp.identity(basis.boson_dimension,
                                                       dtype=complex, format="csr"), basis)
            rhs_vec += 0.5j * h[mode_index, mu] * (sigma_mu @ psi)
    rhs_vec *= config.e

    H_shift = assemble_hamiltonian(config.at(p=tuple(np.asarray(config.p) - k)), basis)
    bottom = solve_lowest(H_shift, 1, method="auto").ground_energy
    if bottom + omega_m - energy < denominator_floor:
        raise GapTooSmallError(
            f"shifted resolvent at mode {mode_index} is nearly singular: "
            f"E(p-k) + omega - E(p) = {bottom + omega_m - energy:.3e}"
        )
    shifted = (H_shift + (omega_m - energy) * sp.identity(basis.dimension, dtype=complex,
                                                          format="csr")).tocsr()
    if basis.dimension <= DENSE_CUTOFF:
        x = np.linalg.solve(shifted.toarray(), rhs_vec)
    else:
        x = spla.spsolve(shifted.tocsc(), rhs_vec)
    a_psi = annihilation_matrix(mode_index, basis) @ psi
    return float(np.linalg.norm(a_psi - x) / norm)


@dataclass
class UpperBoundCheck:
    """Degeneracy upper bound under the hypothesis |e| < 1/sqrt(3 Theta)."""

    hypothesis_holds: bool
    hypothesis_limit: float
    bound_value: float
    count: int
    passed: bool


def degeneracy_upper_bound(cluster: GroundCluster, config: ModelConfig,
                           integral: PhotonIntegral) -> UpperBoundCheck:
    """When |e| < 1/sqrt(3 Theta(p)), the degeneracy is at most 2/(1 - e^2 Theta) < 3."""
    theta = integral.value
    limit = 1.0 / math.sqrt(3.0 * theta) if theta > 0.0 else math.inf
    holds = abs(config.e) < limit
    e2t = config.e**2 * theta
    bound_value = 2.0 / (1.0 - e2t) if e2t < 1.0 else math.inf
    return UpperBoundCheck(
        hypothesis_holds=holds,
        hypothesis_limit=limit,
        bound_value=bound_value,
        count=cluster.count,
        passed=(not holds) or cluster.count <= 2,
    )


@dataclass
class VacuumOverlap:
    """Per-state vacuum-sector overlaps and the lower bound 1 - e^2 Theta."""

    overlaps: np.ndarray
    minimum: float
    trace: float
    lower_bound: float
    passed: bool


def vacuum_overlap(cluster: GroundCluster, basis: FockBasis, e: float,
                   integral: PhotonIntegral) -> VacuumOverlap:
    """<Psi_i, P0 Psi_i> per cluster basis vector against 1 - e^2 Theta(p).

    The sum of the overlaps is trace(Pg P0), invariant under re-mixing of
    the cluster basis.
    """
    idx = list(basis.vacuum_indices())
    amps = cluster.basis[idx, :]
    overlaps = np.sum(np.abs(amps) ** 2, axis=0)
    lower = 1.0 - e**2 * integral.value
    return VacuumOverlap(
        overlaps=overlaps,
        minimum=float(overlaps.min()),
        trace=float(overlaps.sum()),
        lower_bound=lower,
        passed=bool(overlaps.min() >= lower - 1e-12),
    )


@dataclass
class VacuumGram:
    """Gram matrix G_ij = <x_i (x) vacuum, Pg x_j (x) vacuum> and its scalar part."""

    matrix: np.ndarray
    a_value: float
    deviation: float


def vacuum_gram(cluster: GroundCluster, basis: FockBasis) -> VacuumGram:
    """The 2x2 projected ground projector on the spin (x) vacuum subspace.

    For a certified two-fold cluster this reproduces the proportionality
    P0 Pg P0 = a P0: the Gram matrix is a * identity with a = trace/2 > 0.
    Refuses other degeneracies (the relation is the two-fold statement).
    """
    if not basis.with_spin:
        raise PflabError("the vacuum Gram relation needs the spin factor")
    if cluster.count != 2:
        raise PflabError(
            f"vacuum Gram relation applies to a two-fold cluster, got count "
            f"{cluster.count}"
        )
    idx = list(basis.vacuum_indices())
    M = cluster.basis[idx, :]                  # rows: vacuum-up, vacuum-down
    G = M @ M.conj().T
    G = 0.5 * (G + G.conj().T)
    a = float(np.trace(G).real / 2.0)
    deviation = float(np.abs(G - a * np.eye(2)).max())
    return VacuumGram(matrix=G, a_value=a, deviation=deviation)


@dataclass
class CouplingThreshold:
    """Largest admissible coupling on a grid, bisection refined."""

    value: float
    binding: str
    grid_max: float


def coupling_threshold(config: ModelConfig, e_values=None, refine_steps: int = 8,
                       cache: Optional[dict] = None, **solver_opts) -> CouplingThreshold:
    """Largest e with e < 1/sqrt(3 Theta(p, e)) and c0(e) < 1.

    Theta depends on e through the interpolated energy curve of the model at
    that coupling, so each probe re-solves the sweep.  The relative-bound
    condition c0(e) < 1 stands in for the implicit self-adjointness
    threshold.  Returns 0 with a warning when no grid point is admissible.
    """
    if e_values is None:
        e_values = np.linspace(0.0, 0.5, 11)
    e_values = np.asarray(sorted(set(float(abs(e)) for e in e_values)))
    cache = {} if cache is None else cache

    def admissible(e: float) -> tuple[bool, str]:
        probe = config.at(e=e)
        if coupling_bound(probe) >= 1.0:
            return False, "relative-bound"
        if e == 0.0:
            return True, ""
        curve = default_energy_curve(probe, cache=cache, **solver_opts)
        try:
            theta = photon_number_integral(probe, curve).value
        except GapTooSmallError:
            return False, "gap-collapse"
        if theta > 0.0 and e >= 1.0 / math.sqrt(3.0 * theta):
            return False, "photon-integral"
        return True, ""

    last_ok = None
    first_bad = None
    binding = "grid"
    for e in e_values:
        ok, why = admissible(e)
        if ok:
            last_ok = e
        else:
            first_bad = e
            binding = why
            break
    if last_ok is None:
        warnings.warn("no admissible coupling on the grid; threshold reported as 0")
        return CouplingThreshold(value=0.0, binding=binding, grid_max=float(e_values[-1]))
    if first_bad is None:
        return CouplingThreshold(value=float(last_ok), binding="grid",
                                 grid_max=float(e_values[-1]))
    lo, hi = float(last_ok), float(first_bad)
    for _ in range(refine_steps):
        mid = 0.5 * (lo + hi)
        ok, why = admissible(mid)
        if ok:
            lo = mid
        else:
            hi = mid
            binding = why
    return CouplingThreshold(value=lo, binding=binding, grid_max=float(e_values[-1]))


@dataclass
class SpinlessUniqueness:
    """The spinless pull-through uniqueness condition and the observed count."""

    integral: float
    e_squared_limit: float
    hypothesis_holds: bool
    count: Optional[int]
    gap_above: Optional[float]
    passed: bool


def spinless_uniqueness_check(config: ModelConfig, energy_curve=None,
                              cache: Optional[dict] = None,
                              denominator_floor: float = DENOMINATOR_FLOOR,
                              **solver_opts) -> SpinlessUniqueness:
    """Spinless models: e^2 <= 1 / (2 J(p)) forces a unique ground state,
    with J(p) = int E(p) / (E(p-k)+omega(k)-E(p))^2 * phi_hat^2/omega dk.

    E(p) = 0 makes the condition vacuous (limit +inf); that is handled, not
    an error.  The observed degeneracy and gap come from an eigensolve of
    the same configuration.
    """
    if config.with_spin:
        raise PflabError("spinless uniqueness check requires with_spin = false")
    cache = {} if cache is None else cache
    if energy_curve is None:
        energy_curve = default_energy_curve(config, cache=cache, **solver_opts)
    q = config.quadrature
    grid = PolarGrid.build(q.r_max, q.n_radial, q.n_angular)
    p = config.p_norm
    Ep = float(energy_curve(p))
    R = grid.r[:, None]
    U = grid.u[None, :]
    shifted = np.sqrt(np.maximum(p * p - 2.0 * p * R * U + R * R, 0.0))
    omega = np.asarray(config.dispersion.omega(grid.r))[:, None]
    denom = np.asarray(energy_curve(shifted)) + omega - Ep
    if float(denom.min()) < denominator_floor:
        raise GapTooSmallError(
            f"gap too small for the uniqueness integral: minimum denominator "
            f"{float(denom.min()):.3e}"
        )
    phi2 = np.asarray(config.form_factor.phi_hat(grid.r))[:, None] ** 2
    integrand = Ep / (denom * denom) * phi2 / omega
    J = grid.integrate(lambda r, u: integrand)
    limit = math.inf if J <= 0.0 else 1.0 / (2.0 * J)
    holds = config.e**2 <= limit
    basis = build_basis(config)
    H = assemble_hamiltonian(config, basis)
    result = solve_lowest(H, n_eig=min(6, H.shape[0] - 1), **solver_opts)
    try:
        cluster = detect_ground_cluster(result)
        count: Optional[int] = cluster.count
        gap: Optional[float] = cluster.gap_above
    except PflabError:
        count, gap = None, None
    passed = (not holds) or (count == 1 and gap is not None and gap > 0.0)
    return SpinlessUniqueness(
        integral=float(J), e_squared_limit=limit, hypothesis_holds=holds,
        count=count, gap_above=gap, passed=passed,
    )
