"""Truncated photon Fock space with an optional electron-spin factor.

A photon mode is a (k-point, polarization) pair carrying a quadrature
weight V_m.  Discrete ladder operators are normalized so that
[a_m, a_m+] = 1; field amplitudes recover the continuum normalization
through factors sqrt(V_m), so integrals over k become weighted sums over
modes, while counting operators (photon number, field energy, field
momentum) carry no weights.

The basis is graded by total photon number, lexicographic within a grade,
and spin-major: the full index is ``spin * boson_dimension + boson_index``
with spin 0 = up, 1 = down.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Optional, Sequence

import numpy as np
import scipy.sparse as sp

from .errors import BasisMismatchError, DimensionCapError, NotAxialError

DIMENSION_CAP = 500_000

PAULI = (
    np.eye(2, dtype=complex),
    np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex),
    np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex),
    np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex),
)

SPIN_UP = 0
SPIN_DOWN = 1


@dataclass(frozen=True)
class Mode:
    """One photon mode: wavevector, quadrature cell volume, polarization index (1 or 2)."""

    k: tuple[float, float, float]
    weight: float
    polarization_index: int

    def __post_init__(self):
        if not all(np.isfinite(self.k)):
            raise ValueError(f"mode wavevector must be finite, got {self.k}")
        if not (self.weight > 0.0):
            raise ValueError(f"mode weight must be positive, got {self.weight}")
        if self.polarization_index not in (1, 2):
            raise ValueError(f"polarization index must be 1 or 2, got {self.polarization_index}")

    @property
    def k_norm(self) -> float:
        return float(np.linalg.norm(self.k))


@dataclass(frozen=True)
class ModeSet:
    """Ordered collection of modes; both polarizations present at every k-point.

    ``axial`` means every k-point is parallel or antiparallel to ``axis``,
    which preserves the exact rotation symmetry about that axis at finite
    truncation.
    """

    modes: tuple[Mode, ...]
    axial: bool = False
    axis: Optional[tuple[float, float, float]] = None

    def __post_init__(self):
        if not self.modes:
            raise ValueError("mode set must be nonempty")
        seen = set()
        for m in self.modes:
            key = (m.k, m.polarization_index)
            if key in seen:
                raise ValueError(f"duplicate mode {key}")
            seen.add(key)
        by_point: dict[tuple, set[int]] = {}
        for m in self.modes:
            by_point.setdefault(m.k, set()).add(m.polarization_index)
        for k, pols in by_point.items():
            if pols != {1, 2}:
                raise ValueError(f"k-point {k} must carry both polarizations, has {sorted(pols)}")
        if self.axial:
            if self.axis is None:
                raise ValueError("axial mode set requires an axis")
            ax = np.asarray(self.axis, dtype=float)
            if not np.isclose(np.linalg.norm(ax), 1.0, atol=1e-12):
                raise ValueError("axis must be a unit vector")
            for m in self.modes:
                kv = np.asarray(m.k, dtype=float)
                if np.linalg.norm(kv - (kv @ ax) * ax) > 1e-12 * max(1.0, np.linalg.norm(kv)):
                    raise NotAxialError(f"mode k={m.k} is off the declared axis {self.axis}")

    def __len__(self) -> int:
        return len(self.modes)

    @property
    def k_points(self) -> tuple[tuple[float, float, float], ...]:
        """Distinct k-points in first-appearance order."""
        out, seen = [], set()
        for m in self.modes:
            if m.k not in seen:
                seen.add(m.k)
                out.append(m.k)
        return tuple(out)

    @property
    def k_point_index(self) -> np.ndarray:
        """Index of each mode's k-point into ``k_points``."""
        lut = {k: i for i, k in enumerate(self.k_points)}
        return np.array([lut[m.k] for m in self.modes], dtype=int)

    def k_array(self) -> np.ndarray:
        """(n_modes, 3) array of wavevectors."""
        return np.array([m.k for m in self.modes], dtype=float)

    def weights(self) -> np.ndarray:
        return np.array([m.weight for m in self.modes], dtype=float)

    def total_weight(self) -> float:
        """Sum of weights over distinct k-points (the covered k-space volume)."""
        pts = {}
        for m in self.modes:
            pts[m.k] = m.weight
        return float(sum(pts.values()))

    def is_reflection_symmetric(self, tol: float = 1e-12) -> bool:
        """True when the k-points map onto themselves under k -> -k with equal weights."""
        table = {}
        for k in self.k_points:
            w = next(m.weight for m in self.modes if m.k == k)
            table[k] = w
        for k, w in table.items():
            neg = tuple(-np.asarray(k))
            match = [kk for kk in table if np.allclose(kk, neg, atol=tol)]
            if not match or abs(table[match[0]] - w) > tol * max(1.0, w):
                return False
        return True


def axial_mode_set(
    shell_edges: Sequence[float],
    axis: Sequence[float] = (0.0, 0.0, 1.0),
) -> ModeSet:
    """Axial mode set from radial shell edges.

    Shell i spans [edges[i], edges[i+1]]; its two k-points sit at the shell
    midpoint radius on the +/- axis and split the full spherical-shell
    volume (4pi/3)(b^3 - a^3) equally.  The weights therefore make
    ``sum_m V_m f(|k_m|)`` a midpoint-rule quadrature of a rotation
    invariant integral over the ball of radius ``edges[-1]``.
    """
    edges = np.asarray(shell_edges, dtype=float)
    if edges.ndim != 1 or len(edges) < 2 or np.any(np.diff(edges) <= 0) or edges[0] < 0:
        raise ValueError("shell_edges must be an increasing sequence starting at >= 0")
    ax = np.asarray(axis, dtype=float)
    ax = ax / np.linalg.norm(ax)
    modes = []
    for a, b in zip(edges[:-1], edges[1:]):
        mid = 0.5 * (a + b)
        if mid == 0.0:
            raise ValueError("shell midpoint at k=0 is not allowed (polarization undefined)")
        vol = (4.0 * np.pi / 3.0) * (b**3 - a**3)
        for sign in (+1.0, -1.0):
            k = tuple(sign * mid * ax)
            for j in (1, 2):
                modes.append(Mode(k=k, weight=vol / 2.0, polarization_index=j))
    return ModeSet(modes=tuple(modes), axial=True, axis=tuple(ax))


def explicit_mode_set(points: Sequence[tuple[Sequence[float], float]]) -> ModeSet:
    """General mode set from (k, weight) pairs; both polarizations added per point."""
    modes = []
    for k, w in points:
        kt = tuple(float(x) for x in k)
        for j in (1, 2):
            modes.append(Mode(k=kt, weight=float(w), polarization_index=j))
    return ModeSet(modes=tuple(modes), axial=False, axis=None)


@dataclass(frozen=True)
class OccupationState:
    """Occupation numbers per mode plus the spin index (None in spinless bases)."""

    occupations: tuple[int, ...]
    spin: Optional[int] = None

    @property
    def total(self) -> int:
        return sum(self.occupations)


def _count_occupations(n_modes: int, n_total_max: int, n_mode_max: int) -> int:
    """Number of vectors of length n_modes, entries <= n_mode_max, sum <= n_total_max."""
    ways = np.zeros(n_total_max + 1, dtype=object)
    ways[0] = 1
    for _ in range(n_modes):
        new = np.zeros_like(ways)
        for t in range(n_total_max + 1):
            if ways[t]:
                for n in range(0, min(n_mode_max, n_total_max - t) + 1):
                    new[t + n] += ways[t]
        ways = new
    return int(ways.sum())


def _iter_occupations(n_modes: int, total: int, n_mode_max: int) -> Iterator[tuple[int, ...]]:
    """All fixed-sum occupation vectors in ascending lexicographic order."""
    if n_modes == 0:
        if total == 0:
            yield ()
        return
    lo = max(0, total - (n_modes - 1) * n_mode_max)
    for first in range(lo, min(total, n_mode_max) + 1):
        for rest in _iter_occupations(n_modes - 1, total - first, n_mode_max):
            yield (first,) + rest


class FockBasis:
    """Enumerated truncated Fock basis: (spin factor) x (boson occupation vectors).

    Enumeration is graded by total photon number, then ascending
    lexicographic; with spin, the spin index varies slowest.  rank/unrank
    are mutually inverse bijections over the enumeration.
    """

    def __init__(self, mode_set: ModeSet, N_max: int, n_max: int, with_spin: bool,
                 states: tuple[tuple[int, ...], ...]):
        self.mode_set = mode_set
        self.N_max = N_max
        self.n_max = n_max
        self.with_spin = with_spin
        self.boson_states = states
        self.boson_dimension = len(states)
        self.dimension = (2 if with_spin else 1) * self.boson_dimension
        self._boson_rank = {occ: i for i, occ in enumerate(states)}
        self._ladder_cache: dict[int, sp.csr_matrix] = {}

    # -- indexing ---------------------------------------------------------

    def rank(self, state: OccupationState) -> int:
        if (state.spin is not None) != self.with_spin:
            raise ValueError("spin index presence must match the basis")
        b = self._boson_rank.get(state.occupations)
        if b is None:
            raise ValueError(f"state {state.occupations} is not admissible in this basis")
        if not self.with_spin:
            return b
        if state.spin not in (SPIN_UP, SPIN_DOWN):
            raise ValueError(f"spin index must be 0 (up) or 1 (down), got {state.spin}")
        return state.spin * self.boson_dimension + b

    def unrank(self, index: int) -> OccupationState:
        if not (0 <= index < self.dimension):
            raise IndexError(f"index {index} out of range for dimension {self.dimension}")
        if self.with_spin:
            spin, b = divmod(index, self.boson_dimension)
            return OccupationState(self.boson_states[b], spin)
        return OccupationState(self.boson_states[index], None)

    def occupation_array(self) -> np.ndarray:
        """(boson_dimension, n_modes) integer array of occupation vectors."""
        return np.array(self.boson_states, dtype=np.int64)

    def vacuum_indices(self) -> tuple[int, ...]:
        """Full-basis indices of the (spin x) zero-photon states."""
        if self.with_spin:
            return (0, self.boson_dimension)
        return (0,)

    # -- boson-level ladder operators --------------------------------------

    def boson_annihilation(self, mode_index: int) -> sp.csr_matrix:
        """a_m on the boson factor; matrix element sqrt(n) to the lowered state."""
        if not (0 <= mode_index < len(self.mode_set)):
            raise IndexError(f"mode index {mode_index} out of range")
        cached = self._ladder_cache.get(mode_index)
        if cached is not None:
            return cached
        rows, cols, vals = [], [], []
        for i, occ in enumerate(self.boson_states):
            n = occ[mode_index]
            if n > 0:
                lowered = occ[:mode_index] + (n - 1,) + occ[mode_index + 1:]
                rows.append(self._boson_rank[lowered])
                cols.append(i)
                vals.append(np.sqrt(float(n)))
        a = sp.csr_matrix(
            (np.asarray(vals, dtype=complex), (rows, cols)),
            shape=(self.boson_dimension, self.boson_dimension),
        )
        a.sum_duplicates()
        a.sort_indices()
        self._ladder_cache[mode_index] = a
        return a


def enumerate_basis(mode_set: ModeSet, N_max: int, n_max: int, with_spin: bool,
                    dimension_cap: int = DIMENSION_CAP) -> FockBasis:
    """Enumerate the truncated basis; refuses when the dimension exceeds the cap.

    Pass a larger ``dimension_cap`` to override the guard deliberately.
    """
    if N_max < 0:
        raise ValueError("N_max must be >= 0")
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    n_modes = len(mode_set)
    count = _count_occupations(n_modes, N_max, n_max)
    dim = (2 if with_spin else 1) * count
    if dim > dimension_cap:
        raise DimensionCapError(
            f"basis dimension {dim} exceeds the cap {dimension_cap} "
            f"({n_modes} modes, N_max={N_max}, n_max={n_max}); "
            "reduce the cutoffs or pass a larger dimension_cap to override"
        )
    states = []
    for total in range(N_max + 1):
        states.extend(_iter_occupations(n_modes, total, n_max))
    basis = FockBasis(mode_set, N_max, n_max, with_spin, tuple(states))
    assert basis.dimension == dim
    return basis


# -- operator assembly -----------------------------------------------------


def _with_spin_identity(op: sp.spmatrix, basis: FockBasis) -> sp.csr_matrix:
    if basis.with_spin:
        return sp.kron(sp.identity(2, dtype=complex, format="csr"), op, format="csr")
    return op.tocsr()


def annihilation_matrix(mode_index: int, basis: FockBasis) -> sp.csr_matrix:
    """a_m on the full basis (tensored with the spin identity when present)."""
    return _with_spin_identity(basis.boson_annihilation(mode_index), basis)


def creation_matrix(mode_index: int, basis: FockBasis) -> sp.csr_matrix:
    """a_m+ on the full basis; exactly the conjugate transpose of ``annihilation_matrix``."""
    return adjoint(annihilation_matrix(mode_index, basis))


def number_operator(basis: FockBasis) -> sp.csr_matrix:
    """Total photon number (diagonal, no quadrature weights)."""
    diag = basis.occupation_array().sum(axis=1).astype(float)
    return _with_spin_identity(sp.diags(diag.astype(complex), format="csr"), basis)


def field_energy(basis: FockBasis, omega_by_kpoint: Sequence[float]) -> sp.csr_matrix:
    """Photon field energy sum_m omega(k_m) n_m with omega given per distinct k-point."""
    omega_by_kpoint = np.asarray(omega_by_kpoint, dtype=float)
    if omega_by_kpoint.shape != (len(basis.mode_set.k_points),):
        raise ValueError(
            f"need one omega per k-point ({len(basis.mode_set.k_points)}), "
            f"got shape {omega_by_kpoint.shape}"
        )
    omega_per_mode = omega_by_kpoint[basis.mode_set.k_point_index]
    diag = basis.occupation_array() @ omega_per_mode
    return _with_spin_identity(sp.diags(diag.astype(complex), format="csr"), basis)


def field_momentum(basis: FockBasis) -> tuple[sp.csr_matrix, sp.csr_matrix, sp.csr_matrix]:
    """The three components of sum_m k_m n_m (diagonal, no quadrature weights)."""
    occ = basis.occupation_array()
    karr = basis.mode_set.k_array()
    out = []
    for mu in range(3):
        diag = occ @ karr[:, mu]
        out.append(_with_spin_identity(sp.diags(diag.astype(complex), format="csr"), basis))
    return tuple(out)


def spin_tensor(pauli_index: int, fock_op: sp.spmatrix, basis: FockBasis) -> sp.csr_matrix:
    """Kronecker product sigma_i x (boson operator) in the spin-major ordering.

    pauli_index 0 is the identity.  ``fock_op`` must act on the boson factor.
    """
    if pauli_index not in (0, 1, 2, 3):
        raise ValueError(f"pauli index must be in 0..3, got {pauli_index}")
    if not sp.issparse(fock_op):
        fock_op = sp.csr_matrix(np.asarray(fock_op, dtype=complex))
    if fock_op.shape != (basis.boson_dimension, basis.boson_dimension):
        raise BasisMismatchError(
            f"operator shape {fock_op.shape} does not match the boson factor "
            f"dimension {basis.boson_dimension}"
        )
    if not basis.with_spin:
        if pauli_index != 0:
            raise ValueError("spin operators are unavailable on a spinless basis")
        return fock_op.tocsr()
    return sp.kron(sp.csr_matrix(PAULI[pauli_index]), fock_op, format="csr")


# -- Hermiticity helpers -----------------------------------------------------


def adjoint(op: sp.spmatrix) -> sp.csr_matrix:
    """Conjugate transpose as a canonical CSR matrix."""
    out = op.conjugate().transpose().tocsr()
    out.sum_duplicates()
    out.sort_indices()
    return out


def hermiticity_defect(op: sp.spmatrix) -> float:
    """max |A - A+| over entries; 0.0 for an exactly Hermitian matrix."""
    diff = (op.tocsr() - adjoint(op)).tocoo()
    if diff.nnz == 0:
        return 0.0
    return float(np.abs(diff.data).max())


def hermitize(op: sp.spmatrix) -> sp.csr_matrix:
    """(A + A+)/2; exact Hermitian closure, a no-op on already Hermitian input."""
    out = ((op.tocsr() + adjoint(op)) * 0.5).tocsr()
    out.sum_duplicates()
    out.sort_indices()
    return out
