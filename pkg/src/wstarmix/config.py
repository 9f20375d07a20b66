"""Config ingestion and the deterministic random-system generator.

JSON is the single config/report format. Complex numbers are serialized as
[re, im] pairs everywhere; matrices as nested lists of such pairs. Parse and
validation failures carry a path into the document.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import algebras
from .errors import ConfigError, InputError
from .linalg import DEFAULT_TOL

SCHEMA_VERSION = 1

ALGEBRA_KINDS = ("full", "block_diagonal", "generated")
STATE_KINDS = ("normalized_trace", "density")
AUTOMORPHISM_KINDS = ("inner", "block_permutation", "compose")
SUBSYSTEM_KINDS = ("trivial", "full", "fixed_algebra", "generated")


def encode_complex(z):
    z = complex(z)
    return [z.real, z.imag]


def encode_matrix(m):
    m = np.asarray(m, dtype=complex)
    return [[encode_complex(z) for z in row] for row in m]


def decode_complex(obj, path):
    if (not isinstance(obj, (list, tuple)) or len(obj) != 2
            or not all(isinstance(v, (int, float)) for v in obj)):
        raise ConfigError(path, f"expected a [re, im] pair, got {obj!r}")
    return complex(obj[0], obj[1])


def decode_matrix(obj, path):
    if not isinstance(obj, list) or not obj:
        raise ConfigError(path, "expected a non-empty matrix (list of rows)")
    rows = []
    width = None
    for i, row in enumerate(obj):
        if not isinstance(row, list):
            raise ConfigError(f"{path}[{i}]", "expected a list of [re, im] pairs")
        if width is None:
            width = len(row)
        elif len(row) != width:
            raise ConfigError(f"{path}[{i}]", "ragged matrix rows")
        rows.append([decode_complex(z, f"{path}[{i}][{j}]") for j, z in enumerate(row)])
    return np.asarray(rows, dtype=complex)


def _require(obj, key, path, types=None):
    if not isinstance(obj, dict) or key not in obj:
        raise ConfigError(path, f"missing required field {key!r}")
    value = obj[key]
    if types is not None and not isinstance(value, types):
        raise ConfigError(f"{path}.{key}", f"unexpected type {type(value).__name__}")
    return value


@dataclass
class SystemConfig:
    """Declarative description of a system plus subsystem; see README for the schema."""

    ambient_dim: int
    algebra: dict
    state: dict
    automorphism: dict
    subsystem: dict
    label: str = ""
    schema_version: int = SCHEMA_VERSION

    def to_dict(self):
        return {
            "schema_version": self.schema_version,
            "label": self.label,
            "ambient_dim": self.ambient_dim,
            "algebra": self.algebra,
            "state": self.state,
            "automorphism": self.automorphism,
            "subsystem": self.subsystem,
        }

    @classmethod
    def from_dict(cls, obj, path="config"):
        version = _require(obj, "schema_version", path, int)
        if version != SCHEMA_VERSION:
            raise ConfigError(f"{path}.schema_version", f"unsupported version {version}")
        dim = _require(obj, "ambient_dim", path, int)
        if dim <= 0:
            raise ConfigError(f"{path}.ambient_dim", "must be positive")
        sections = {}
        for name, kinds in (("algebra", ALGEBRA_KINDS), ("state", STATE_KINDS),
                            ("automorphism", AUTOMORPHISM_KINDS),
                            ("subsystem", SUBSYSTEM_KINDS)):
            section = _require(obj, name, path, dict)
            kind = _require(section, "kind", f"{path}.{name}", str)
            if kind not in kinds:
                raise ConfigError(f"{path}.{name}.kind",
                                  f"unknown kind {kind!r}; expected one of {kinds}")
            sections[name] = section
        return cls(dim, sections["algebra"], sections["state"],
                   sections["automorphism"], sections["subsystem"],
                   label=str(obj.get("label", "")), schema_version=version)


def load_config(path) -> SystemConfig:
    """Read and structurally validate a JSON config file."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            obj = json.load(fh)
    except OSError as exc:
        raise ConfigError(str(path), f"cannot read config: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(str(path), f"malformed JSON: {exc}") from exc
    return SystemConfig.from_dict(obj)


def _build_algebra(config: SystemConfig, tol):
    d = config.ambient_dim
    spec = config.algebra
    kind = spec["kind"]
    if kind == "full":
        return algebras.full_matrix_algebra(d), [d]
    if kind == "block_diagonal":
        sizes = _require(spec, "sizes", "config.algebra", list)
        if sum(int(s) for s in sizes) != d:
            raise ConfigError("config.algebra.sizes", f"sizes {sizes} do not sum to {d}")
        return algebras.block_diagonal_algebra(sizes), [int(s) for s in sizes]
    mats = _require(spec, "matrices", "config.algebra", list)
    gens = [decode_matrix(m, f"config.algebra.matrices[{i}]") for i, m in enumerate(mats)]
    for i, g in enumerate(gens):
        if g.shape != (d, d):
            raise ConfigError(f"config.algebra.matrices[{i}]",
                              f"shape {g.shape} does not match ambient_dim {d}")
    return algebras.generate_algebra(gens, d, tol=tol), None


def _build_density(config: SystemConfig):
    d = config.ambient_dim
    spec = config.state
    if spec["kind"] == "normalized_trace":
        return np.eye(d, dtype=complex) / d
    rho = decode_matrix(_require(spec, "matrix", "config.state", list), "config.state.matrix")
    if rho.shape != (d, d):
        raise ConfigError("config.state.matrix", f"shape {rho.shape} does not match ambient_dim {d}")
    return rho


def _build_automorphism(spec, algebra, sizes, path, tol):
    kind = _require(spec, "kind", path, str)
    if kind == "inner":
        u = decode_matrix(_require(spec, "unitary", path, list), f"{path}.unitary")
        try:
            return algebras.inner_automorphism(algebra, u, tol=tol)
        except InputError as exc:
            raise ConfigError(f"{path}.unitary", str(exc)) from exc
    if kind == "block_permutation":
        if sizes is None:
            raise ConfigError(f"{path}.perm",
                              "block permutations need a full or block_diagonal algebra")
        perm = _require(spec, "perm", path, list)
        try:
            return algebras.block_permutation_automorphism(algebra, sizes, perm, tol=tol)
        except InputError as exc:
            raise ConfigError(f"{path}.perm", str(exc)) from exc
    if kind == "compose":
        items = _require(spec, "items", path, list)
        if not items:
            raise ConfigError(f"{path}.items", "empty composition")
        parts = [
            _build_automorphism(item, algebra, sizes, f"{path}.items[{i}]", tol)
            for i, item in enumerate(items)
        ]
        return algebras.compose_automorphisms(parts, tol=tol)
    raise ConfigError(f"{path}.kind", f"unknown kind {kind!r}")


def build_system(config: SystemConfig, tol=DEFAULT_TOL):
    """Construct and fully validate (system, subsystem) from a config.

    Validation failures surface as ConfigError with the offending path.
    """
    algebra, sizes = _build_algebra(config, tol)
    density = _build_density(config)
    dynamics = _build_automorphism(config.automorphism, algebra, sizes,
                                   "config.automorphism", tol)
    try:
        system = algebras.make_system(algebra, density, dynamics, tol=tol)
    except InputError as exc:
        raise ConfigError("config.state", str(exc)) from exc

    sub_spec = config.subsystem
    kind = sub_spec["kind"]
    d = config.ambient_dim
    if kind == "trivial":
        sub_alg = algebras.trivial_algebra(d)
    elif kind == "full":
        sub_alg = algebra
    elif kind == "fixed_algebra":
        sub_alg = algebras.fixed_algebra(algebra, dynamics, tol=tol)
    else:
        mats = _require(sub_spec, "matrices", "config.subsystem", list)
        gens = [decode_matrix(m, f"config.subsystem.matrices[{i}]")
                for i, m in enumerate(mats)]
        sub_alg = algebras.generate_algebra(gens, d, tol=tol)
    try:
        subsystem = algebras.validate_subsystem(system, sub_alg, tol=tol)
    except InputError as exc:
        raise ConfigError("config.subsystem", str(exc)) from exc
    return system, subsystem


def _haar_unitary(rng, n):
    g = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    q, r = np.linalg.qr(g)
    phases = np.diag(r).copy()
    phases /= np.abs(phases)
    return q * phases[None, :]


def _random_partition(rng, d):
    sizes = []
    left = d
    while left > 0:
        s = int(rng.integers(1, left + 1))
        sizes.append(s)
        left -= s
    return sizes


def random_system(seed, dims=(2, 3, 4)) -> SystemConfig:
    """Deterministic random tracial system config for the given seed.

    Block structure, a Haar-distributed block unitary, an optional swap of two
    equal-size blocks, and a subsystem drawn from the invariant recipes
    (trivial, full, fixed algebra, or the algebra generated by the orbit of a
    random Hermitian element). Reproducible bit-for-bit for a fixed seed.
    """
    rng = np.random.default_rng(seed)
    d = int(rng.choice(list(dims)))
    sizes = _random_partition(rng, d)
    algebra_spec = {"kind": "block_diagonal", "sizes": sizes}

    blocks = [_haar_unitary(rng, s) for s in sizes]
    u = np.zeros((d, d), dtype=complex)
    off = 0
    for b, s in zip(blocks, sizes):
        u[off:off + s, off:off + s] = b
        off += s
    parts = [{"kind": "inner", "unitary": encode_matrix(u)}]

    equal_pairs = [(i, j) for i in range(len(sizes)) for j in range(i + 1, len(sizes))
                   if sizes[i] == sizes[j]]
    if equal_pairs and rng.random() < 0.5:
        i, j = equal_pairs[int(rng.integers(0, len(equal_pairs)))]
        perm = list(range(len(sizes)))
        perm[i], perm[j] = j, i
        parts.append({"kind": "block_permutation", "perm": perm})
    automorphism_spec = parts[0] if len(parts) == 1 else {"kind": "compose", "items": parts}

    config = SystemConfig(
        ambient_dim=d,
        algebra=algebra_spec,
        state={"kind": "normalized_trace"},
        automorphism=automorphism_spec,
        subsystem={"kind": "full"},
        label=f"seed:{seed}",
    )

    choice = rng.random()
    if choice < 0.25:
        config.subsystem = {"kind": "trivial"}
    elif choice < 0.45:
        config.subsystem = {"kind": "full"}
    elif choice < 0.7:
        config.subsystem = {"kind": "fixed_algebra"}
    else:
        # Orbit of a random Hermitian element: invariant by construction.
        algebra, _ = _build_algebra(config, DEFAULT_TOL)
        dynamics = _build_automorphism(automorphism_spec, algebra, sizes,
                                       "config.automorphism", DEFAULT_TOL)
        h = algebra.random_element(rng, hermitian=True)
        orbit = [h]
        seen = algebras.generate_algebra(orbit, d)
        for _ in range(algebra.dim):
            nxt = dynamics.apply(orbit[-1])
            orbit.append(nxt)
            grown = algebras.generate_algebra(orbit, d)
            if grown.dim == seen.dim:
                break
            seen = grown
        config.subsystem = {"kind": "generated",
                            "matrices": [encode_matrix(m) for m in orbit]}
    return config
