"""Physical content: dispersion, form factor, polarization gauge, field
operators, and assembly of the fibered Hamiltonian at fixed total momentum.

Units: hbar = c = 1 and electron mass m = 1.  The Hamiltonian on the
spin (x) truncated-Fock space is

    H(p) = (1/2) (p - P_f - e A)^2 - (e/2) sigma . B + H_f

with A, B the transverse vector potential and magnetic field at the
electron position, built from the mode set with per-mode amplitude
phi_hat(k) / sqrt(2 omega(k)) * sqrt(V_m).  The free part is
H0(p) = (1/2)(p - P_f)^2 + H_f and the interaction part is assembled
termwise so that H(p) = H0(p) + H_int holds entrywise, not just to
rounding.  The cross term is symmetrized, (1/2){(p-P_f).A + A.(p-P_f)},
which agrees with the unsymmetrized ordering because k.e_j(k) = 0 for
every mode.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
import scipy.sparse as sp

from .errors import BasisMismatchError, ConfigError
from .fock import (
    FockBasis,
    ModeSet,
    adjoint,
    enumerate_basis,
    hermitize,
    spin_tensor,
    DIMENSION_CAP,
)
from .quadrature import QuadratureSpec, gauss_legendre

#: Normalization of the form factor at k = 0, fixed by int phi(x) dx = 1.
PHI_HAT_ZERO = (2.0 * math.pi) ** (-1.5)


@dataclass(frozen=True)
class Dispersion:
    """Photon dispersion omega(|k|).

    Kinds: ``massive`` (sqrt(k^2 + m_ph^2)), ``massless`` (|k|, which has no
    energy gap and must be explicitly allowed in a model), and ``custom``
    (linear interpolation of (|k|, omega) samples).
    """

    kind: str
    m_ph: Optional[float] = None
    samples: Optional[tuple[tuple[float, float], ...]] = None

    def __post_init__(self):
        if self.kind == "massive":
            if self.m_ph is None or not (self.m_ph > 0.0):
                raise ConfigError("massive dispersion requires m_ph > 0")
        elif self.kind == "massless":
            if self.m_ph is not None:
                raise ConfigError("massless dispersion takes no m_ph")
        elif self.kind == "custom":
            if not self.samples or len(self.samples) < 2:
                raise ConfigError("custom dispersion requires at least two (|k|, omega) samples")
            rs = [r for r, _ in self.samples]
            if any(b <= a for a, b in zip(rs, rs[1:])) or rs[0] < 0.0:
                raise ConfigError("custom dispersion samples must have increasing |k| >= 0")
        else:
            raise ConfigError(f"unknown dispersion kind {self.kind!r}")

    @property
    def has_gap(self) -> bool:
        """True when inf omega > 0 is guaranteed by construction."""
        if self.kind == "massive":
            return True
        if self.kind == "custom":
            return min(w for _, w in self.samples) > 0.0
        return False

    def omega(self, r):
        """omega as a function of |k|; accepts scalars or arrays."""
        r = np.asarray(r, dtype=float)
        if self.kind == "massive":
            out = np.sqrt(r * r + self.m_ph**2)
        elif self.kind == "massless":
            out = r.copy()
        else:
            rs = np.array([s[0] for s in self.samples])
            ws = np.array([s[1] for s in self.samples])
            if np.any(r < rs[0] - 1e-12) or np.any(r > rs[-1] + 1e-12):
                raise ConfigError(
                    f"custom dispersion queried outside its table [{rs[0]}, {rs[-1]}]"
                )
            out = np.interp(r, rs, ws)
        return out if out.ndim else float(out)


@dataclass(frozen=True)
class FormFactor:
    """Rotation-invariant ultraviolet cutoff function phi_hat(|k|).

    Kinds: ``gaussian`` amplitude * exp(-k^2 / (2 lambda^2)) and ``sharp``
    amplitude * 1{|k| <= lambda}.  ``amplitude`` defaults to the normalized
    value (2 pi)^(-3/2); other values violate the normalization and are
    surfaced by the model checks.
    """

    kind: str
    lam: float
    amplitude: float = PHI_HAT_ZERO

    def __post_init__(self):
        if self.kind not in ("gaussian", "sharp"):
            raise ConfigError(f"unknown form factor kind {self.kind!r}")
        if not (self.lam > 0.0):
            raise ConfigError("form factor cutoff lambda must be positive")
        if not (self.amplitude > 0.0):
            raise ConfigError("form factor amplitude must be positive")

    def phi_hat(self, r):
        r = np.asarray(r, dtype=float)
        if self.kind == "gaussian":
            out = self.amplitude * np.exp(-r * r / (2.0 * self.lam**2))
        else:
            out = self.amplitude * (r <= self.lam).astype(float)
        return out if out.ndim else float(out)

    @property
    def normalized(self) -> bool:
        return abs(self.amplitude - PHI_HAT_ZERO) <= 1e-12


def polarization_vectors(k) -> tuple[np.ndarray, np.ndarray]:
    """Transverse polarization pair (e1, e2) with e1 x e2 = k/|k|.

    Gauge: e1 = (z x k)/|z x k|, e2 = k_hat x e1; on the z axis e1 = x_hat
    and e2 = sign(k_z) y_hat.  k = 0 is rejected.
    """
    k = np.asarray(k, dtype=float)
    norm = np.linalg.norm(k)
    if norm == 0.0:
        raise ConfigError("polarization frame undefined at k = 0")
    khat = k / norm
    zhat = np.array([0.0, 0.0, 1.0])
    cross = np.cross(zhat, khat)
    cnorm = np.linalg.norm(cross)
    if cnorm < 1e-12:
        sign = 1.0 if khat[2] > 0 else -1.0
        e1 = np.array([1.0, 0.0, 0.0])
        e2 = np.array([0.0, sign, 0.0])
    else:
        e1 = cross / cnorm
        e2 = np.cross(khat, e1)
    return e1, e2


def polarization_frame(mode_set: ModeSet) -> np.ndarray:
    """(n_modes, 3) array: the polarization vector attached to each mode."""
    out = np.empty((len(mode_set), 3))
    for i, m in enumerate(mode_set.modes):
        e1, e2 = polarization_vectors(m.k)
        out[i] = e1 if m.polarization_index == 1 else e2
    return out


@dataclass(frozen=True)
class ModelConfig:
    """Full physical specification of one truncated model."""

    dispersion: Dispersion
    form_factor: FormFactor
    e: float
    p: tuple[float, float, float]
    with_spin: bool
    mode_set: ModeSet
    N_max: int
    n_max: int
    allow_massless: bool = False
    dimension_cap: int = DIMENSION_CAP
    quadrature: QuadratureSpec = field(default_factory=QuadratureSpec)

    def __post_init__(self):
        if len(self.p) != 3 or not all(np.isfinite(self.p)):
            raise ConfigError("total momentum p must be a finite 3-vector")
        if not np.isfinite(self.e):
            raise ConfigError("coupling e must be finite")
        if not self.dispersion.has_gap and not self.allow_massless:
            raise ConfigError(
                "dispersion has no energy gap (inf omega = 0); "
                "set allow_massless to build this model anyway"
            )

    @property
    def p_norm(self) -> float:
        return float(np.linalg.norm(self.p))

    def at(self, **overrides) -> "ModelConfig":
        """Copy with fields replaced (p and e given as plain values)."""
        if "p" in overrides:
            overrides["p"] = tuple(float(x) for x in overrides["p"])
        return replace(self, **overrides)


def build_basis(config: ModelConfig) -> FockBasis:
    return enumerate_basis(
        config.mode_set, config.N_max, config.n_max, config.with_spin,
        dimension_cap=config.dimension_cap,
    )


def _check_basis(config: ModelConfig, basis: Optional[FockBasis]) -> FockBasis:
    if basis is None:
        return build_basis(config)
    if (basis.mode_set != config.mode_set or basis.N_max != config.N_max
            or basis.n_max != config.n_max or basis.with_spin != config.with_spin):
        raise BasisMismatchError("basis was enumerated for a different configuration")
    return basis


def field_amplitudes(config: ModelConfig) -> tuple[np.ndarray, np.ndarray]:
    """Per-mode coupling vectors for the vector potential and magnetic field.

    Returns (g, h), each (n_modes, 3):
      g[m] = phi_hat(k)/sqrt(2 omega) * sqrt(V_m) * e_j(k)
      h[m] = phi_hat(k)/sqrt(2 omega) * sqrt(V_m) * (k x e_j(k))
    so that A^mu = sum_m g[m,mu] (a_m+ + a_m) and
    B^mu = sum_m i h[m,mu] (a_m+ - a_m).
    """
    ms = config.mode_set
    karr = ms.k_array()
    radii = np.linalg.norm(karr, axis=1)
    if np.any(radii == 0.0):
        raise ConfigError("mode set contains k = 0 (polarization frame undefined)")
    pol = polarization_frame(ms)
    omega = config.dispersion.omega(radii)
    if np.any(omega <= 0.0):
        raise ConfigError("omega must be positive at every mode for field amplitudes")
    pref = config.form_factor.phi_hat(radii) / np.sqrt(2.0 * omega) * np.sqrt(ms.weights())
    g = pref[:, None] * pol
    h = pref[:, None] * np.cross(karr, pol)
    return g, h


def _boson_field_operators(config: ModelConfig, basis: FockBasis):
    """(A_mu, B_mu) on the boson factor, each a 3-tuple of Hermitian CSR."""
    g, h = field_amplitudes(config)
    dim = basis.boson_dimension
    A = [sp.csr_matrix((dim, dim), dtype=complex) for _ in range(3)]
    B = [sp.csr_matrix((dim, dim), dtype=complex) for _ in range(3)]
    for m in range(len(config.mode_set)):
        a = basis.boson_annihilation(m)
        plus = (a + adjoint(a)).tocsr()
        minus = (1j * (adjoint(a) - a)).tocsr()
        for mu in range(3):
            if g[m, mu] != 0.0:
                A[mu] = A[mu] + g[m, mu] * plus
            if h[m, mu] != 0.0:
                B[mu] = B[mu] + h[m, mu] * minus
    return tuple(A), tuple(B)


def build_vector_potential(config: ModelConfig, basis: Optional[FockBasis] = None):
    """The three Cartesian components of the vector potential on the full basis."""
    basis = _check_basis(config, basis)
    A, _ = _boson_field_operators(config, basis)
    return tuple(spin_tensor(0, op, basis) for op in A)


def build_magnetic_field(config: ModelConfig, basis: Optional[FockBasis] = None):
    """The three Cartesian components of the magnetic field on the full basis."""
    basis = _check_basis(config, basis)
    _, B = _boson_field_operators(config, basis)
    return tuple(spin_tensor(0, op, basis) for op in B)


def _free_boson_diagonals(config: ModelConfig, basis: FockBasis):
    ms = config.mode_set
    occ = basis.occupation_array()
    kpts = np.array(ms.k_points)
    omega_pts = config.dispersion.omega(np.linalg.norm(kpts, axis=1))
    omega_modes = np.asarray(omega_pts, dtype=float)[ms.k_point_index]
    hf = occ @ omega_modes
    pf = occ @ ms.k_array()
    return hf, pf


def free_hamiltonian(config: ModelConfig, basis: Optional[FockBasis] = None) -> sp.csr_matrix:
    """Noninteracting Hamiltonian (1/2)(p - P_f)^2 + H_f (diagonal)."""
    basis = _check_basis(config, basis)
    hf, pf = _free_boson_diagonals(config, basis)
    x = np.asarray(config.p, dtype=float)[None, :] - pf
    diag = 0.5 * np.sum(x * x, axis=1) + hf
    return spin_tensor(0, sp.diags(diag.astype(complex), format="csr"), basis)


def _symmetric_product(diag: np.ndarray, A: sp.csr_matrix) -> sp.csr_matrix:
    """X A + A X for diagonal X, bitwise Hermitian for Hermitian A."""
    return (A.multiply(diag[:, None]) + A.multiply(diag[None, :])).tocsr()


def interaction_part(config: ModelConfig, basis: Optional[FockBasis] = None) -> sp.csr_matrix:
    """Interaction Hamiltonian -e (p-P_f).A + (e^2/2) A^2 - (e/2) sigma.B.

    Assembled termwise from the expanded square with the symmetrized cross
    term; each piece is Hermitian-closed exactly, so the identity
    H(p) = H0(p) + H_int holds entrywise on the truncated space.
    """
    basis = _check_basis(config, basis)
    e = config.e
    dim = basis.dimension
    if e == 0.0:
        return sp.csr_matrix((dim, dim), dtype=complex)
    A, B = _boson_field_operators(config, basis)
    _, pf = _free_boson_diagonals(config, basis)
    h_b = sp.csr_matrix((basis.boson_dimension, basis.boson_dimension), dtype=complex)
    for mu in range(3):
        if A[mu].nnz == 0:
            continue
        x = np.asarray(config.p[mu] - pf[:, mu], dtype=complex)
        h_b = h_b + (-0.5 * e) * _symmetric_product(x, A[mu])
        h_b = h_b + (0.5 * e * e) * hermitize(A[mu] @ A[mu])
    out = spin_tensor(0, h_b, basis)
    if config.with_spin:
        for mu in range(3):
            if B[mu].nnz:
                out = out + (-0.5 * e) * spin_tensor(mu + 1, B[mu], basis)
    return hermitize(out)


def assemble_hamiltonian(config: ModelConfig, basis: Optional[FockBasis] = None) -> sp.csr_matrix:
    """Full fibered Hamiltonian H(p) = H0(p) + H_int on the truncated basis.

    Exactly Hermitian after assembly (conjugate-transpose closure is
    enforced piecewise, with a final exact symmetrization).
    """
    basis = _check_basis(config, basis)
    H = free_hamiltonian(config, basis) + interaction_part(config, basis)
    return hermitize(H)


# -- scalar diagnostics ------------------------------------------------------


def coupling_bound(config: ModelConfig) -> float:
    """Relative-bound diagnostic c0(e) for the interaction against H0 + 1.

        c0(e) = |e| [I1]^(1/2) + e^2 I2,
        I1 = int (omega^-2 + omega) phi_hat^2 dk,
        I2 = int (omega^-2 + 1) phi_hat^2 dk,

    with the order-one prefactor set to 1.  This is a heuristic warning
    threshold (c0 < 1 suggests the interaction is relatively small), not a
    certified bound.  Returns +inf when the quadrature diverges (omega
    reaching 0 inside the grid).
    """
    q = config.quadrature
    r, w = gauss_legendre(0.0, q.r_max, q.n_radial)
    omega = np.asarray(config.dispersion.omega(r), dtype=float)
    if np.any(omega <= 0.0):
        return math.inf
    phi2 = np.asarray(config.form_factor.phi_hat(r), dtype=float) ** 2
    shell = 4.0 * np.pi * w * r * r
    i1 = float(np.sum(shell * (omega**-2 + omega) * phi2))
    i2 = float(np.sum(shell * (omega**-2 + 1.0) * phi2))
    e = abs(config.e)
    return e * math.sqrt(i1) + e * e * i2


def form_factor_decay_integrals(config: ModelConfig) -> dict[str, float]:
    """The four ultraviolet/infrared decay integrals int omega^s phi_hat^2 dk, s in {-2,-1,0,1}."""
    q = config.quadrature
    r, w = gauss_legendre(0.0, q.r_max, q.n_radial)
    omega = np.asarray(config.dispersion.omega(r), dtype=float)
    phi2 = np.asarray(config.form_factor.phi_hat(r), dtype=float) ** 2
    shell = 4.0 * np.pi * w * r * r
    out = {}
    for s, name in ((-2, "omega^-2"), (-1, "omega^-1"), (0, "1"), (1, "omega")):
        if np.any(omega <= 0.0) and s < 0:
            out[name] = math.inf
        else:
            out[name] = float(np.sum(shell * omega**s * phi2))
    return out


@dataclass(frozen=True)
class DispersionAxioms:
    """Sampled margins for the three dispersion requirements.

    ``omega_min``: sampled infimum of omega (gap requirement: > 0).
    ``subadditivity_margin``: min of omega(k1)+omega(k2)-omega(k1+k2) (>= 0).
    ``isotropy_deviation``: max |omega(k) - omega(Rk)| over random rotations (= 0).
    """

    omega_min: float
    subadditivity_margin: float
    isotropy_deviation: float

    @property
    def gap_holds(self) -> bool:
        return self.omega_min > 0.0

    @property
    def subadditive(self) -> bool:
        return self.subadditivity_margin >= -1e-12

    @property
    def isotropic(self) -> bool:
        return self.isotropy_deviation <= 1e-10


def _random_rotation(rng: np.random.Generator) -> np.ndarray:
    axis = rng.standard_normal(3)
    axis /= np.linalg.norm(axis)
    angle = rng.uniform(0.0, 2.0 * np.pi)
    return rotation_matrix(axis, angle)


def rotation_matrix(axis, angle: float) -> np.ndarray:
    """Rotation by ``angle`` about the unit vector ``axis`` (Rodrigues form)."""
    axis = np.asarray(axis, dtype=float)
    axis = axis / np.linalg.norm(axis)
    K = np.array([
        [0.0, -axis[2], axis[1]],
        [axis[2], 0.0, -axis[0]],
        [-axis[1], axis[0], 0.0],
    ])
    return np.eye(3) + math.sin(angle) * K + (1.0 - math.cos(angle)) * (K @ K)


def check_dispersion_axioms(dispersion: Dispersion, sample_count: int = 200,
                            rng_seed: int = 0, k_max: float = 6.0) -> DispersionAxioms:
    """Sample the gap, subadditivity, and isotropy requirements on random k.

    Violations are reported through the margins, never raised.  The custom
    dispersion is sampled inside its table only.
    """
    if sample_count < 1:
        raise ValueError("sample_count must be >= 1")
    rng = np.random.default_rng(rng_seed)
    if dispersion.kind == "custom":
        k_max = min(k_max, dispersion.samples[-1][0] / 2.0)
    ks = rng.uniform(-k_max / math.sqrt(3.0), k_max / math.sqrt(3.0), size=(sample_count, 3))
    radii = np.linalg.norm(ks, axis=1)
    # the infimum is usually approached at k -> 0; probe that limit explicitly
    r_floor = dispersion.samples[0][0] if dispersion.kind == "custom" else 0.0
    omega_min = float(min(np.min(dispersion.omega(radii)),
                          dispersion.omega(r_floor)))
    k1 = ks
    k2 = ks[rng.permutation(sample_count)]
    margin = (np.asarray(dispersion.omega(np.linalg.norm(k1, axis=1)))
              + np.asarray(dispersion.omega(np.linalg.norm(k2, axis=1)))
              - np.asarray(dispersion.omega(np.linalg.norm(k1 + k2, axis=1))))
    deviation = 0.0
    for _ in range(8):
        R = _random_rotation(rng)
        rot = np.asarray(dispersion.omega(np.linalg.norm(ks @ R.T, axis=1)))
        ref = np.asarray(dispersion.omega(radii))
        deviation = max(deviation, float(np.max(np.abs(rot - ref))))
    return DispersionAxioms(
        omega_min=omega_min,
        subadditivity_margin=float(np.min(margin)),
        isotropy_deviation=deviation,
    )
