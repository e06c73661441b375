"""Lowest eigenpairs, ground-cluster degeneracy detection, dispersion sweeps
E(p), and the spectral gap via the continuum-onset formula
E_c(p) = inf_k { E(p-k) + omega(k) }.

The iterative path is a Lanczos process with full reorthogonalization,
thick restarts, and locking (deflation) of converged pairs, which resolves
degenerate clusters one copy at a time.  A dense eigensolver handles small
problems and doubles as the cross-check oracle.  All randomness comes from
one seeded generator, so identical inputs give bit-identical results.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
import scipy.sparse as sp

from .errors import (
    DomainError,
    IndeterminateDegeneracy,
    NonHermitianError,
    SolverError,
)
from .fock import hermiticity_defect
from .model import ModelConfig, assemble_hamiltonian, build_basis

DENSE_CUTOFF = 2000
DEFAULT_SEED = 7
DEFAULT_TOL = 1e-11
EPS_DEG = 1e-8
EPS_SEP = 1e-5


@dataclass
class SpectralResult:
    """Converged lowest eigenpairs, ascending."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    residual_norms: np.ndarray
    method: str

    @property
    def ground_energy(self) -> float:
        return float(self.eigenvalues[0])


@dataclass
class GroundCluster:
    """Eigenvalues clustered at the bottom of the spectrum and their subspace.

    ``basis`` holds orthonormal columns spanning the cluster; the rank-count
    projector is ``basis @ basis.conj().T``.
    """

    count: int
    eigenvalues: np.ndarray
    basis: np.ndarray
    cluster_width: float
    gap_above: float

    @property
    def energy(self) -> float:
        return float(self.eigenvalues[0])

    def projector(self) -> np.ndarray:
        return self.basis @ self.basis.conj().T

    def apply_projector(self, x: np.ndarray) -> np.ndarray:
        return self.basis @ (self.basis.conj().T @ x)


def _as_operator(H) -> sp.csr_matrix:
    if sp.issparse(H):
        return H.tocsr()
    return sp.csr_matrix(np.asarray(H))


def _dense_lowest(H: sp.csr_matrix, n_eig: int) -> SpectralResult:
    vals, vecs = np.linalg.eigh(H.toarray())
    vals = vals[:n_eig]
    vecs = vecs[:, :n_eig]
    resid = np.linalg.norm(H @ vecs - vecs * vals[None, :], axis=0)
    return SpectralResult(vals.copy(), vecs.copy(), resid, "dense")


def _lanczos_lowest(H: sp.csr_matrix, n_eig: int, tol: float, seed: int,
                    max_restarts: int) -> SpectralResult:
    # One converged pair is locked per restart cycle: always the bottom Ritz
    # pair of the operator deflated by everything locked so far.  A Krylov
    # space built from a single vector carries at most one copy of a
    # degenerate eigenvalue, so higher Ritz values within one cycle say
    # nothing about the deflated spectrum and must not be locked; the fresh
    # random restart after each lock is what picks up the remaining copies.
    n = H.shape[0]
    rng = np.random.default_rng(seed)
    m = int(min(n, max(2 * n_eig + 24, 48)))
    locked_vals: list[float] = []
    locked_cols: list[np.ndarray] = []
    norm_est = 1.0
    last_residual = None

    def fresh_vector() -> np.ndarray:
        return rng.standard_normal(n) + 1j * rng.standard_normal(n)

    def locked_matrix() -> np.ndarray:
        if locked_cols:
            return np.column_stack(locked_cols)
        return np.zeros((n, 0), dtype=complex)

    start = fresh_vector()
    stalls = 0
    cycles = 0
    while len(locked_vals) < n_eig:
        if cycles >= max_restarts:
            raise SolverError(
                f"Lanczos did not converge {n_eig} pairs within {max_restarts} "
                f"restarts (locked {len(locked_vals)})",
                residuals=[last_residual],
            )
        cycles += 1
        L = locked_matrix()
        v = start.astype(complex)
        for _ in range(2):
            if L.shape[1]:
                v = v - L @ (L.conj().T @ v)
        nv = np.linalg.norm(v)
        if nv < 1e-12:
            start = fresh_vector()
            continue
        v = v / nv

        steps_cap = min(m, n - len(locked_vals))
        V = np.zeros((n, steps_cap), dtype=complex)
        alphas = np.zeros(steps_cap)
        betas = np.zeros(steps_cap)
        steps = 0
        for j in range(steps_cap):
            V[:, j] = v
            w = H @ v
            alphas[j] = np.vdot(v, w).real
            w = w - alphas[j] * v
            if j > 0:
                w = w - betas[j - 1] * V[:, j - 1]
            # full reorthogonalization, twice, against the Krylov block and
            # the locked pairs
            for _ in range(2):
                w = w - V[:, :j + 1] @ (V[:, :j + 1].conj().T @ w)
                if L.shape[1]:
                    w = w - L @ (L.conj().T @ w)
            steps = j + 1
            beta = np.linalg.norm(w)
            if beta <= 1e-13 * max(1.0, norm_est):
                break                      # exact invariant subspace reached
            betas[j] = beta
            v = w / beta

        T = np.diag(alphas[:steps])
        if steps > 1:
            T = T + np.diag(betas[:steps - 1], 1) + np.diag(betas[:steps - 1], -1)
        theta, S = np.linalg.eigh(T)
        norm_est = max(norm_est, float(np.max(np.abs(theta))) if steps else 1.0)

        candidate = None
        for i in range(steps):
            x = V[:, :steps] @ S[:, i]
            if L.shape[1]:
                x = x - L @ (L.conj().T @ x)
            nx = np.linalg.norm(x)
            if nx >= 1e-8:
                candidate = x / nx
                break
        if candidate is None:
            start = fresh_vector()
            continue
        Hx = H @ candidate
        lam = np.vdot(candidate, Hx).real
        res = float(np.linalg.norm(Hx - lam * candidate))
        last_residual = res
        if res <= tol * max(1.0, norm_est):
            locked_vals.append(lam)
            locked_cols.append(candidate)
            start = fresh_vector()
            stalls = 0
        else:
            start = candidate
            stalls += 1
            if stalls >= 2:
                # hard spectrum (clustered bottom): widen the Krylov block
                m = min(n, 400, int(m * 1.5) + 1)
                stalls = 0

    order = np.argsort(locked_vals)
    vals = np.array(locked_vals)[order]
    vecs = np.column_stack([locked_cols[i] for i in order])
    resid = np.linalg.norm(H @ vecs - vecs * vals[None, :], axis=0)
    return SpectralResult(vals, vecs, resid, "lanczos")


def solve_lowest(H, n_eig: int, tol: float = DEFAULT_TOL, seed: int = DEFAULT_SEED,
                 method: str = "auto", max_restarts: int = 200) -> SpectralResult:
    """Lowest ``n_eig`` eigenpairs of a Hermitian matrix.

    ``method``: "dense", "lanczos", or "auto" (dense up to dimension 2000).
    Convergence means residual <= tol * max(1, ||H||) per pair.  Rejects
    non-Hermitian input (the assembly pipeline closes operators exactly).
    """
    H = _as_operator(H)
    n = H.shape[0]
    if H.shape[0] != H.shape[1]:
        raise NonHermitianError(f"matrix is not square: {H.shape}")
    if not (1 <= n_eig < n):
        raise ValueError(
            f"n_eig must satisfy 1 <= n_eig < dimension; got n_eig={n_eig} "
            f"for dimension {n}"
        )
    if hermiticity_defect(H) != 0.0:
        raise NonHermitianError(
            f"matrix is not exactly Hermitian (defect {hermiticity_defect(H):.3e}); "
            "symmetrize before solving"
        )
    if method not in ("auto", "dense", "lanczos"):
        raise ValueError(f"unknown method {method!r}")
    if method == "dense" or (method == "auto" and n <= DENSE_CUTOFF):
        return _dense_lowest(H, n_eig)
    return _lanczos_lowest(H, n_eig, tol, seed, max_restarts)


def detect_ground_cluster(result: SpectralResult, eps_deg: float = EPS_DEG,
                          eps_sep: float = EPS_SEP) -> GroundCluster:
    """Greedy bottom-up clustering of eigenvalues into a ground multiplet.

    The cluster collects eigenvalues within ``eps_deg * max(1, |E|)`` of the
    lowest one; the next eigenvalue must sit at least
    ``eps_sep * max(1, |E|)`` above the cluster, otherwise the degeneracy is
    reported as indeterminate rather than guessed.
    """
    evs = np.asarray(result.eigenvalues, dtype=float)
    if len(evs) < 2:
        raise IndeterminateDegeneracy(
            "need at least two eigenvalues to certify a cluster", eigenvalues=evs)
    scale = max(1.0, abs(evs[0]))
    count = int(np.searchsorted(evs - evs[0], eps_deg * scale, side="right"))
    if count >= len(evs):
        raise IndeterminateDegeneracy(
            f"cluster of width <= {eps_deg * scale:.3e} includes every computed "
            "eigenvalue; request more eigenpairs", eigenvalues=evs)
    gap_above = float(evs[count] - evs[count - 1])
    if gap_above <= eps_sep * scale:
        raise IndeterminateDegeneracy(
            f"next eigenvalue is only {gap_above:.3e} above the cluster "
            f"(separation tolerance {eps_sep * scale:.3e})", eigenvalues=evs)
    return GroundCluster(
        count=count,
        eigenvalues=evs[:count].copy(),
        basis=result.eigenvectors[:, :count].copy(),
        cluster_width=float(evs[count - 1] - evs[0]),
        gap_above=gap_above,
    )


# -- sweeps ------------------------------------------------------------------


@dataclass
class SweepRow:
    p: tuple[float, float, float]
    energy: float
    count: Optional[int]
    cluster_width: Optional[float]
    gap_above: Optional[float]
    note: str = ""


def energy_sweep(config: ModelConfig, p_values: Sequence[Sequence[float]],
                 n_eig: int = 6, tol: float = DEFAULT_TOL, seed: int = DEFAULT_SEED,
                 method: str = "auto", eps_deg: float = EPS_DEG, eps_sep: float = EPS_SEP,
                 cache: Optional[dict] = None) -> list[SweepRow]:
    """E(p) and ground degeneracy across a list of momenta on a shared basis.

    Results are cached by (configuration, solver settings); pass the same
    dict across calls to reuse solves.  Solver failures propagate annotated
    with their p; indeterminate clustering is recorded per row instead.
    """
    basis = build_basis(config)
    rows = []
    for p in p_values:
        pt = tuple(float(x) for x in p)
        cfg_p = config.at(p=pt)
        key = (cfg_p, n_eig, tol, seed, method)
        if cache is not None and key in cache:
            rows.append(cache[key])
            continue
        H = assemble_hamiltonian(cfg_p, basis)
        try:
            result = solve_lowest(H, n_eig=min(n_eig, H.shape[0] - 1), tol=tol,
                                  seed=seed, method=method)
        except SolverError as err:
            raise SolverError(f"solve failed at p={pt}: {err}",
                              residuals=err.residuals) from err
        try:
            cluster = detect_ground_cluster(result, eps_deg, eps_sep)
            row = SweepRow(pt, result.ground_energy, cluster.count,
                           cluster.cluster_width, cluster.gap_above)
        except IndeterminateDegeneracy as err:
            row = SweepRow(pt, result.ground_energy, None, None, None,
                           note=f"indeterminate degeneracy: {err}")
        if cache is not None:
            cache[key] = row
        rows.append(row)
    return rows


# -- energy interpolants and the gap formula ----------------------------------


class FreeEnergyCurve:
    """Exact noninteracting dispersion E(q) = |q|^2 / 2."""

    q_max = np.inf
    spacing = 0.0

    def __call__(self, q):
        q = np.asarray(q, dtype=float)
        out = 0.5 * q * q
        return out if out.ndim else float(out)


@dataclass(frozen=True)
class RadialEnergyCurve:
    """Linear interpolant of E(|q|) on a radial grid (rotation-invariant E).

    ``spacing`` is the grid step, reported downstream as the uncertainty
    proxy for anything built on interpolated energies.
    """

    q: np.ndarray
    values: np.ndarray
    spacing: float

    @property
    def q_max(self) -> float:
        return float(self.q[-1])

    def __call__(self, qv):
        qv = np.asarray(qv, dtype=float)
        if np.any(qv < -1e-12) or np.any(qv > self.q_max + 1e-12):
            raise DomainError(
                f"energy interpolant queried at |q| outside [0, {self.q_max}]"
            )
        out = np.interp(np.clip(qv, 0.0, self.q_max), self.q, self.values)
        return out if out.ndim else float(out)


def sweep_energy_curve(config: ModelConfig, q_max: float,
                       n_points: Optional[int] = None,
                       cache: Optional[dict] = None,
                       n_eig: int = 1, tol: float = DEFAULT_TOL,
                       seed: int = DEFAULT_SEED, method: str = "auto") -> RadialEnergyCurve:
    """Tabulate E(q) along the symmetry axis and wrap it as a radial curve.

    At e = 0 the curve is filled analytically: the ground state is the
    vacuum on any basis, so E(q) = q^2/2 exactly and solving would only add
    noise.  Otherwise each grid point is an eigensolve of the configured
    model, so the curve reflects the truncation being studied.
    """
    if config.e == 0.0:
        n_points = n_points or config.quadrature.sweep_points
        q = np.linspace(0.0, q_max, n_points)
        return RadialEnergyCurve(q=q, values=0.5 * q * q,
                                 spacing=float(q[1] - q[0]))
    axis = np.asarray(config.mode_set.axis if config.mode_set.axial else (0.0, 0.0, 1.0))
    n_points = n_points or config.quadrature.sweep_points
    q = np.linspace(0.0, q_max, n_points)
    rows = energy_sweep(config, [tuple(qi * axis) for qi in q], n_eig=n_eig,
                        tol=tol, seed=seed, method=method, cache=cache)
    values = np.array([r.energy for r in rows])
    return RadialEnergyCurve(q=q, values=values, spacing=float(q[1] - q[0]))


@dataclass
class GapReport:
    """Ground energy, continuum onset, and their difference."""

    E_p: float
    E_c_p: float
    delta_p: float
    argmin_k: tuple[float, float, float]
    grid_resolution: float


def axial_k_grid(k_max: float, n: int, axis=(0.0, 0.0, 1.0)) -> np.ndarray:
    """Symmetric 1D search grid along an axis, including k = 0 for odd n."""
    axis = np.asarray(axis, dtype=float)
    axis = axis / np.linalg.norm(axis)
    ts = np.linspace(-k_max, k_max, n)
    return ts[:, None] * axis[None, :]


def _collinear_direction(k_grid: np.ndarray) -> Optional[np.ndarray]:
    deltas = k_grid - k_grid[0]
    norms = np.linalg.norm(deltas, axis=1)
    idx = np.argmax(norms)
    if norms[idx] == 0.0:
        return None
    d = deltas[idx] / norms[idx]
    if np.max(np.abs(deltas - (deltas @ d)[:, None] * d[None, :])) > 1e-12:
        return None
    return d


def gap_estimate(config: ModelConfig, energy_curve, k_grid: np.ndarray) -> GapReport:
    """Minimize E(p-k) + omega(k) over the search grid, with one local
    refinement pass along the grid line when the grid is collinear.

    Rejects search grids whose shifted momenta leave the interpolation
    domain of ``energy_curve``.
    """
    k_grid = np.atleast_2d(np.asarray(k_grid, dtype=float))
    if k_grid.shape[1] != 3:
        raise ValueError("k_grid must be an (n, 3) array")
    p = np.asarray(config.p, dtype=float)
    shifted = np.linalg.norm(p[None, :] - k_grid, axis=1)
    if np.any(shifted > getattr(energy_curve, "q_max", np.inf) + 1e-12):
        raise DomainError(
            "search grid leaves the energy interpolation domain: "
            f"max |p-k| = {shifted.max():.4g} > q_max = {energy_curve.q_max:.4g}"
        )

    def objective(kv: np.ndarray) -> np.ndarray:
        kv = np.atleast_2d(kv)
        return (np.asarray(energy_curve(np.linalg.norm(p[None, :] - kv, axis=1)))
                + np.asarray(config.dispersion.omega(np.linalg.norm(kv, axis=1))))

    vals = objective(k_grid)
    i_best = int(np.argmin(vals))
    best_k = k_grid[i_best]
    best_val = float(vals[i_best])
    resolution = 0.0
    direction = _collinear_direction(k_grid) if len(k_grid) > 2 else None
    if direction is not None:
        ts = (k_grid - k_grid[0]) @ direction
        order = np.argsort(ts)
        pos = int(np.where(order == i_best)[0][0])
        lo = ts[order[max(0, pos - 1)]]
        hi = ts[order[min(len(ts) - 1, pos + 1)]]
        resolution = float(hi - lo) / 40.0
        fine_t = np.linspace(lo, hi, 41)
        fine_k = k_grid[0][None, :] + fine_t[:, None] * direction[None, :]
        fine_vals = objective(fine_k)
        j = int(np.argmin(fine_vals))
        if fine_vals[j] < best_val:
            best_val = float(fine_vals[j])
            best_k = fine_k[j]
    E_p = float(energy_curve(np.linalg.norm(p)))
    return GapReport(
        E_p=E_p,
        E_c_p=best_val,
        delta_p=best_val - E_p,
        argmin_k=tuple(best_k),
        grid_resolution=resolution,
    )
