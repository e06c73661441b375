"""Config file schema, canonical serialization and hashing, result writers.

The config document is strict JSON: unknown fields are rejected with their
path.  Serialization is canonicalized (sorted keys, shortest round-trip
float repr, modes in enumeration order) before hashing, so equal models
hash equally however their mode set was described.  Timestamps appear only
in the run manifest; every other output file is a pure function of
(config, command arguments, seed).
"""

from __future__ import annotations

import hashlib
import json
import struct
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import ConfigError
from .fock import DIMENSION_CAP, Mode, ModeSet, axial_mode_set
from .model import Dispersion, FormFactor, ModelConfig, PHI_HAT_ZERO
from .quadrature import QuadratureSpec

TOOL_VERSION = "0.1.0"


def _check_fields(obj: dict, path: str, required: dict, optional: dict) -> None:
    if not isinstance(obj, dict):
        raise ConfigError(f"{path}: expected an object")
    unknown = sorted(set(obj) - set(required) - set(optional))
    if unknown:
        raise ConfigError(f"{path}: unknown fields {unknown}")
    missing = sorted(set(required) - set(obj))
    if missing:
        raise ConfigError(f"{path}: missing required fields {missing}")


def _number(obj, path: str) -> float:
    if isinstance(obj, bool) or not isinstance(obj, (int, float)):
        raise ConfigError(f"{path}: expected a number")
    return float(obj)


def _integer(obj, path: str) -> int:
    if isinstance(obj, bool) or not isinstance(obj, int):
        raise ConfigError(f"{path}: expected an integer")
    return obj


def _boolean(obj, path: str) -> bool:
    if not isinstance(obj, bool):
        raise ConfigError(f"{path}: expected a boolean")
    return obj


def _vector3(obj, path: str) -> tuple[float, float, float]:
    if not isinstance(obj, (list, tuple)) or len(obj) != 3:
        raise ConfigError(f"{path}: expected a 3-vector")
    return tuple(_number(x, f"{path}[{i}]") for i, x in enumerate(obj))


def _dispersion_from_dict(obj: dict, path: str) -> Dispersion:
    _check_fields(obj, path, {"kind": None}, {"m_ph": None, "samples": None})
    kind = obj["kind"]
    if kind == "massive":
        _check_fields(obj, path, {"kind": None, "m_ph": None}, {})
        return Dispersion(kind="massive", m_ph=_number(obj["m_ph"], f"{path}.m_ph"))
    if kind == "massless":
        _check_fields(obj, path, {"kind": None}, {})
        return Dispersion(kind="massless")
    if kind == "custom":
        _check_fields(obj, path, {"kind": None, "samples": None}, {})
        samples = obj["samples"]
        if not isinstance(samples, list):
            raise ConfigError(f"{path}.samples: expected a list of [|k|, omega] pairs")
        pairs = []
        for i, s in enumerate(samples):
            if not isinstance(s, (list, tuple)) or len(s) != 2:
                raise ConfigError(f"{path}.samples[{i}]: expected a [|k|, omega] pair")
            pairs.append((_number(s[0], f"{path}.samples[{i}][0]"),
                          _number(s[1], f"{path}.samples[{i}][1]")))
        return Dispersion(kind="custom", samples=tuple(pairs))
    raise ConfigError(f"{path}.kind: unknown dispersion kind {kind!r}")


def _form_factor_from_dict(obj: dict, path: str) -> FormFactor:
    _check_fields(obj, path, {"kind": None, "lambda": None}, {"amplitude": None})
    amplitude = _number(obj["amplitude"], f"{path}.amplitude") if "amplitude" in obj \
        else PHI_HAT_ZERO
    return FormFactor(kind=obj["kind"], lam=_number(obj["lambda"], f"{path}.lambda"),
                      amplitude=amplitude)


def _mode_set_from_dict(obj: dict, path: str) -> ModeSet:
    _check_fields(obj, path, {"kind": None},
                  {"axis": None, "shell_edges": None, "points": None, "modes": None,
                   "axial": None})
    kind = obj["kind"]
    if kind == "axial":
        _check_fields(obj, path, {"kind": None, "shell_edges": None}, {"axis": None})
        axis = _vector3(obj.get("axis", [0.0, 0.0, 1.0]), f"{path}.axis")
        edges = obj["shell_edges"]
        if not isinstance(edges, list) or len(edges) < 2:
            raise ConfigError(f"{path}.shell_edges: expected a list of at least two radii")
        return axial_mode_set([_number(x, f"{path}.shell_edges[{i}]")
                               for i, x in enumerate(edges)], axis=axis)
    if kind == "explicit":
        _check_fields(obj, path, {"kind": None, "points": None}, {})
        points = obj["points"]
        if not isinstance(points, list) or not points:
            raise ConfigError(f"{path}.points: expected a nonempty list")
        modes = []
        for i, pt in enumerate(points):
            _check_fields(pt, f"{path}.points[{i}]", {"k": None, "weight": None}, {})
            k = _vector3(pt["k"], f"{path}.points[{i}].k")
            w = _number(pt["weight"], f"{path}.points[{i}].weight")
            for j in (1, 2):
                modes.append(Mode(k=k, weight=w, polarization_index=j))
        return ModeSet(modes=tuple(modes), axial=False, axis=None)
    if kind == "modes":
        # canonical re-serialized form: explicit mode list with axial metadata
        _check_fields(obj, path, {"kind": None, "modes": None, "axial": None},
                      {"axis": None})
        modes = []
        for i, m in enumerate(obj["modes"]):
            _check_fields(m, f"{path}.modes[{i}]",
                          {"k": None, "weight": None, "polarization": None}, {})
            modes.append(Mode(k=_vector3(m["k"], f"{path}.modes[{i}].k"),
                              weight=_number(m["weight"], f"{path}.modes[{i}].weight"),
                              polarization_index=_integer(m["polarization"],
                                                          f"{path}.modes[{i}].polarization")))
        axial = _boolean(obj["axial"], f"{path}.axial")
        axis = _vector3(obj["axis"], f"{path}.axis") if "axis" in obj else None
        return ModeSet(modes=tuple(modes), axial=axial, axis=axis)
    raise ConfigError(f"{path}.kind: unknown mode set kind {kind!r}")


def config_from_dict(obj: dict, force_allow_massless: bool = False) -> ModelConfig:
    """Strictly validated ModelConfig from a parsed JSON document."""
    _check_fields(
        obj, "config",
        {"dispersion": None, "form_factor": None, "e": None, "p": None,
         "with_spin": None, "mode_set": None, "N_max": None, "n_max": None},
        {"allow_massless": None, "dimension_cap": None, "quadrature": None},
    )
    quad = QuadratureSpec()
    if "quadrature" in obj:
        q = obj["quadrature"]
        _check_fields(q, "config.quadrature", {},
                      {"r_max": None, "n_radial": None, "n_angular": None,
                       "sweep_points": None})
        quad = QuadratureSpec(
            r_max=_number(q.get("r_max", quad.r_max), "config.quadrature.r_max"),
            n_radial=_integer(q.get("n_radial", quad.n_radial), "config.quadrature.n_radial"),
            n_angular=_integer(q.get("n_angular", quad.n_angular),
                               "config.quadrature.n_angular"),
            sweep_points=_integer(q.get("sweep_points", quad.sweep_points),
                                  "config.quadrature.sweep_points"),
        )
    allow_massless = _boolean(obj.get("allow_massless", False), "config.allow_massless")
    return ModelConfig(
        dispersion=_dispersion_from_dict(obj["dispersion"], "config.dispersion"),
        form_factor=_form_factor_from_dict(obj["form_factor"], "config.form_factor"),
        e=_number(obj["e"], "config.e"),
        p=_vector3(obj["p"], "config.p"),
        with_spin=_boolean(obj["with_spin"], "config.with_spin"),
        mode_set=_mode_set_from_dict(obj["mode_set"], "config.mode_set"),
        N_max=_integer(obj["N_max"], "config.N_max"),
        n_max=_integer(obj["n_max"], "config.n_max"),
        allow_massless=allow_massless or force_allow_massless,
        dimension_cap=_integer(obj.get("dimension_cap", DIMENSION_CAP),
                               "config.dimension_cap"),
        quadrature=quad,
    )


def load_config(path, force_allow_massless: bool = False) -> ModelConfig:
    try:
        with open(path) as fh:
            obj = json.load(fh)
    except json.JSONDecodeError as err:
        raise ConfigError(f"{path}: not valid JSON ({err})") from err
    return config_from_dict(obj, force_allow_massless=force_allow_massless)


def config_to_dict(config: ModelConfig) -> dict:
    """Canonical JSON-ready form; mode sets flatten to their mode list."""
    disp: dict = {"kind": config.dispersion.kind}
    if config.dispersion.kind == "massive":
        disp["m_ph"] = config.dispersion.m_ph
    elif config.dispersion.kind == "custom":
        disp["samples"] = [list(s) for s in config.dispersion.samples]
    ms: dict = {
        "kind": "modes",
        "axial": config.mode_set.axial,
        "modes": [
            {"k": list(m.k), "weight": m.weight, "polarization": m.polarization_index}
            for m in config.mode_set.modes
        ],
    }
    if config.mode_set.axis is not None:
        ms["axis"] = list(config.mode_set.axis)
    out = {
        "dispersion": disp,
        "form_factor": {"kind": config.form_factor.kind,
                        "lambda": config.form_factor.lam,
                        "amplitude": config.form_factor.amplitude},
        "e": config.e,
        "p": list(config.p),
        "with_spin": config.with_spin,
        "mode_set": ms,
        "N_max": config.N_max,
        "n_max": config.n_max,
        "allow_massless": config.allow_massless,
        "dimension_cap": config.dimension_cap,
        "quadrature": {
            "r_max": config.quadrature.r_max,
            "n_radial": config.quadrature.n_radial,
            "n_angular": config.quadrature.n_angular,
            "sweep_points": config.quadrature.sweep_points,
        },
    }
    return out


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False)


def config_hash(config: ModelConfig) -> str:
    return hashlib.sha256(canonical_json(config_to_dict(config)).encode()).hexdigest()


# -- result files -------------------------------------------------------------


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return repr(x)
    return str(x)


def write_sweep_csv(path, rows: list[dict]) -> None:
    """Sweep table: px,py,pz,E,degeneracy,cluster_width,gap_above[,delta,...]."""
    columns = ["px", "py", "pz", "E", "degeneracy", "cluster_width", "gap_above"]
    extra = [c for c in ("delta", "argmin_kx", "argmin_ky", "argmin_kz", "note")
             if any(c in r for r in rows)]
    columns += extra
    lines = [",".join(columns)]
    for r in rows:
        lines.append(",".join(_fmt(r.get(c)) for c in columns))
    Path(path).write_text("\n".join(lines) + "\n")


def write_json(path, obj) -> None:
    Path(path).write_text(json.dumps(obj, sort_keys=True, indent=2, allow_nan=False) + "\n")


def jsonable(obj):
    """Recursively convert numpy scalars/arrays and complex values for JSON."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    return obj


EIGENVECTOR_HEADER = struct.Struct("<QQ")


def write_eigenvectors(path, vectors: np.ndarray) -> None:
    """Binary dump: little-endian uint64 (dimension, count) header, then each
    vector as dimension interleaved (real, imag) float64 pairs."""
    vectors = np.asarray(vectors, dtype=complex)
    dim, count = vectors.shape
    with open(path, "wb") as fh:
        fh.write(EIGENVECTOR_HEADER.pack(dim, count))
        for i in range(count):
            interleaved = np.empty(2 * dim)
            interleaved[0::2] = vectors[:, i].real
            interleaved[1::2] = vectors[:, i].imag
            fh.write(interleaved.astype("<f8").tobytes())


def read_eigenvectors(path) -> np.ndarray:
    with open(path, "rb") as fh:
        dim, count = EIGENVECTOR_HEADER.unpack(fh.read(EIGENVECTOR_HEADER.size))
        data = np.frombuffer(fh.read(), dtype="<f8")
    if data.size != 2 * dim * count:
        raise ValueError(f"eigenvector file truncated: expected {2*dim*count} doubles, "
                         f"got {data.size}")
    out = np.empty((dim, count), dtype=complex)
    for i in range(count):
        chunk = data[2 * dim * i: 2 * dim * (i + 1)]
        out[:, i] = chunk[0::2] + 1j * chunk[1::2]
    return out


@dataclass
class RunManifest:
    """Provenance record; the only output carrying timestamps."""

    config_hash: str
    command: str
    tool_version: str
    created_utc: str
    outputs: list[str]
    seed: Optional[int]

    @classmethod
    def create(cls, config: ModelConfig, command: str, outputs: list[str],
               seed: Optional[int]) -> "RunManifest":
        return cls(
            config_hash=config_hash(config),
            command=command,
            tool_version=TOOL_VERSION,
            created_utc=datetime.now(timezone.utc).isoformat(),
            outputs=sorted(outputs),
            seed=seed,
        )

    def write(self, path) -> None:
        write_json(path, {
            "config_hash": self.config_hash,
            "command": self.command,
            "tool_version": self.tool_version,
            "created_utc": self.created_utc,
            "outputs": self.outputs,
            "seed": self.seed,
        })
