import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from pflab.fock import ModeSet, Mode, axial_mode_set
from pflab.model import Dispersion, FormFactor, ModelConfig

CONFIG_DIR = Path(__file__).parent.parent / "configs"

DESK_EDGES = [0.0, 0.6, 1.2, 2.2, 3.4]


def make_config(mode_set, e=0.0, p=(0.0, 0.0, 0.0), with_spin=True,
                N_max=2, n_max=2, m_ph=1.0, lam=1.0, **kw):
    return ModelConfig(
        dispersion=Dispersion(kind="massive", m_ph=m_ph),
        form_factor=FormFactor(kind="gaussian", lam=lam),
        e=e, p=tuple(p), with_spin=with_spin,
        mode_set=mode_set, N_max=N_max, n_max=n_max, **kw,
    )


@pytest.fixture(scope="session")
def tiny_ms():
    """One k-point at +z (2 modes)."""
    modes = tuple(Mode(k=(0.0, 0.0, 1.0), weight=0.5, polarization_index=j)
                  for j in (1, 2))
    return ModeSet(modes=modes, axial=True, axis=(0.0, 0.0, 1.0))


@pytest.fixture(scope="session")
def pair_ms():
    """Two k-points at +/- z (4 modes), reflection symmetric."""
    modes = []
    for sign in (1.0, -1.0):
        for j in (1, 2):
            modes.append(Mode(k=(0.0, 0.0, sign), weight=0.5, polarization_index=j))
    return ModeSet(modes=tuple(modes), axial=True, axis=(0.0, 0.0, 1.0))


@pytest.fixture(scope="session")
def desk_ms():
    """The shipped 4-shell axial desk mode set."""
    return axial_mode_set(DESK_EDGES)


@pytest.fixture(scope="session")
def shipped_configs():
    from pflab.io import load_config

    return {path.name: load_config(path) for path in sorted(CONFIG_DIR.glob("*.json"))}
