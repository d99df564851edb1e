"""M-cluster system description: particles, one-body traps, couplings.

A scenario file is a JSON object::

    {
      "dimension": 1,
      "unit_system": "natural",            # or "SI"
      "description": "optional free text",
      "clusters": [
        {"masses": [1.0, 2.0], "omega": 1.0,
         "in_group": {"kind": "harmonic", "springs": [[0, 0.3], [0.3, 0]]}},
        {"masses": [1.0], "omega": 0.5, "in_group": {"kind": "none"}}
      ],
      "couplings": [
        {"alpha": 1, "beta": 0, "d_matrix": [[0.2, 0.4]],
         "r0": [0.0], "v_const": 0.0}
      ]
    }

Cluster indices are zero based. ``d_matrix`` has one row per particle of
cluster ``alpha`` and one column per particle of cluster ``beta`` and
``alpha > beta``. ``in_group`` kinds are ``none``, ``harmonic`` (symmetric
spring matrix with zero diagonal) and ``external`` (opaque ``label``).
``r0`` defaults to the zero vector and ``v_const`` to 0. Unknown keys are
rejected.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import ConfigError

IN_GROUP_KINDS = ("none", "harmonic", "external")
UNIT_SYSTEMS = ("natural", "SI")


def _tuplify(matrix):
    return tuple(tuple(float(x) for x in row) for row in matrix)


@dataclass(frozen=True)
class InGroup:
    """Tag for the pairwise interaction inside one cluster."""

    kind: str = "none"
    springs: tuple[tuple[float, ...], ...] | None = None
    label: str | None = None

    def __post_init__(self):
        if self.springs is not None:
            object.__setattr__(self, "springs", _tuplify(self.springs))

    @classmethod
    def none(cls):
        return cls("none")

    @classmethod
    def harmonic(cls, springs):
        return cls("harmonic", springs=springs)

    @classmethod
    def external(cls, label):
        return cls("external", label=label)

    @property
    def is_harmonic(self):
        return self.kind in ("none", "harmonic")


@dataclass(frozen=True)
class ClusterSpec:
    masses: tuple[float, ...]
    omega: float = 0.0
    in_group: InGroup = field(default_factory=InGroup)

    def __post_init__(self):
        object.__setattr__(self, "masses", tuple(float(m) for m in self.masses))
        object.__setattr__(self, "omega", float(self.omega))

    @property
    def size(self):
        return len(self.masses)

    def spring_matrix(self):
        """In-group spring constants as an array (zeros for ``none``)."""
        if self.in_group.kind == "harmonic":
            return np.array(self.in_group.springs, dtype=float)
        return np.zeros((self.size, self.size))


@dataclass(frozen=True)
class InterClusterCoupling:
    alpha: int
    beta: int
    d_matrix: tuple[tuple[float, ...], ...]
    r0: tuple[float, ...] | None = None
    v_const: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "alpha", int(self.alpha))
        object.__setattr__(self, "beta", int(self.beta))
        object.__setattr__(self, "d_matrix", _tuplify(self.d_matrix))
        if self.r0 is not None:
            object.__setattr__(self, "r0", tuple(float(x) for x in self.r0))
        object.__setattr__(self, "v_const", float(self.v_const))

    @property
    def pair(self):
        return (self.alpha, self.beta)

    def d_array(self):
        return np.array(self.d_matrix, dtype=float)

    def shift(self, dimension):
        if self.r0 is None:
            return np.zeros(dimension)
        return np.array(self.r0, dtype=float)


@dataclass(frozen=True)
class SystemSpec:
    clusters: tuple[ClusterSpec, ...]
    couplings: tuple[InterClusterCoupling, ...] = ()
    dimension: int = 1
    unit_system: str = "natural"
    description: str = ""

    def __post_init__(self):
        object.__setattr__(self, "clusters", tuple(self.clusters))
        object.__setattr__(self, "couplings", tuple(self.couplings))

    @property
    def n_clusters(self):
        return len(self.clusters)

    @property
    def n_particles(self):
        return sum(c.size for c in self.clusters)

    def coupling(self, alpha, beta):
        """Coupling between two clusters, or None when absent (uncoupled)."""
        a, b = max(alpha, beta), min(alpha, beta)
        for c in self.couplings:
            if c.pair == (a, b):
                return c
        return None

    def coupling_matrix(self, alpha, beta):
        """d_ik between particles of ``alpha`` (rows) and ``beta`` (columns)."""
        c = self.coupling(alpha, beta)
        if c is None:
            return np.zeros((self.clusters[alpha].size, self.clusters[beta].size))
        d = c.d_array()
        return d if c.alpha == alpha else d.T


@dataclass(frozen=True)
class Violation:
    code: str
    message: str

    def as_dict(self):
        return {"code": self.code, "message": self.message}


def _finite(values):
    return all(math.isfinite(v) for v in values)


def validate_system(spec: SystemSpec) -> list[Violation]:
    """Return every invariant violation of ``spec``; empty when valid."""
    out = []
    if not isinstance(spec.dimension, int) or spec.dimension < 1:
        out.append(Violation("bad-dimension", f"dimension must be a positive integer, got {spec.dimension!r}"))
    if spec.unit_system not in UNIT_SYSTEMS:
        out.append(Violation("bad-unit-system", f"unit_system must be one of {UNIT_SYSTEMS}, got {spec.unit_system!r}"))
    if not spec.clusters:
        out.append(Violation("no-clusters", "at least one cluster is required"))

    for a, cl in enumerate(spec.clusters):
        if cl.size == 0:
            out.append(Violation("empty-cluster", f"cluster {a} has no particles"))
        if not _finite(cl.masses + (cl.omega,)):
            out.append(Violation("nonfinite", f"cluster {a} has non-finite mass or frequency"))
        for i, m in enumerate(cl.masses):
            if not m > 0:
                out.append(Violation("nonpositive-mass", f"cluster {a} particle {i} has mass {m} <= 0"))
        if not cl.omega >= 0:
            out.append(Violation("negative-frequency", f"cluster {a} trap frequency {cl.omega} < 0"))
        g = cl.in_group
        if g.kind not in IN_GROUP_KINDS:
            out.append(Violation("bad-in-group", f"cluster {a} in_group kind {g.kind!r} unknown"))
        elif g.kind == "harmonic":
            k = np.array(g.springs, dtype=float) if g.springs else np.zeros((0, 0))
            if k.shape != (cl.size, cl.size):
                out.append(Violation("spring-shape", f"cluster {a} spring matrix shape {k.shape} != ({cl.size}, {cl.size})"))
            else:
                if not np.all(np.isfinite(k)):
                    out.append(Violation("nonfinite", f"cluster {a} spring matrix has non-finite entries"))
                if not np.array_equal(k, k.T):
                    out.append(Violation("spring-asymmetric", f"cluster {a} spring matrix is not symmetric"))
                if np.any(np.diag(k) != 0):
                    out.append(Violation("spring-diagonal", f"cluster {a} spring matrix has nonzero diagonal"))
                if np.any(k < 0):
                    out.append(Violation("negative-spring", f"cluster {a} has negative spring constants"))
        elif g.kind == "external" and not g.label:
            out.append(Violation("bad-in-group", f"cluster {a} external interaction needs a label"))

    seen = set()
    n = len(spec.clusters)
    for c in spec.couplings:
        where = f"coupling ({c.alpha},{c.beta})"
        if not (0 <= c.alpha < n and 0 <= c.beta < n):
            out.append(Violation("cluster-index", f"{where} references a missing cluster"))
            continue
        if c.alpha <= c.beta:
            out.append(Violation("pair-order", f"{where} must have alpha > beta"))
        if c.pair in seen:
            out.append(Violation("duplicate-pair", f"{where} appears more than once"))
        seen.add(c.pair)
        shape = (len(c.d_matrix), len(c.d_matrix[0]) if c.d_matrix else 0)
        rows_ok = all(len(row) == shape[1] for row in c.d_matrix)
        expect = (spec.clusters[c.alpha].size, spec.clusters[c.beta].size)
        if not rows_ok or shape != expect:
            out.append(Violation("dimension-mismatch", f"{where} d_matrix shape {shape} != {expect}"))
        elif not np.all(np.isfinite(c.d_array())):
            out.append(Violation("nonfinite", f"{where} d_matrix has non-finite entries"))
        if c.r0 is not None and len(c.r0) != spec.dimension:
            out.append(Violation("shift-dimension", f"{where} r0 has length {len(c.r0)}, dimension is {spec.dimension}"))
        if not math.isfinite(c.v_const):
            out.append(Violation("nonfinite", f"{where} v_const is not finite"))
    return out


def total_mass_and_com_weights(cluster: ClusterSpec):
    """Total mass and centre-of-mass weights m_i / M of one cluster."""
    m = np.asarray(cluster.masses, dtype=float)
    total = float(m.sum())
    return total, m / total


# -- serialization -----------------------------------------------------------

_TOP_KEYS = {"dimension", "unit_system", "clusters", "couplings", "description"}
_CLUSTER_KEYS = {"masses", "omega", "in_group"}
_IN_GROUP_KEYS = {"kind", "springs", "label"}
_COUPLING_KEYS = {"alpha", "beta", "d_matrix", "r0", "v_const"}


def _check_keys(obj, allowed, where):
    if not isinstance(obj, dict):
        raise ConfigError(f"{where}: expected an object, got {type(obj).__name__}")
    extra = set(obj) - allowed
    if extra:
        raise ConfigError(f"{where}: unknown keys {sorted(extra)}")


def _in_group_from_dict(obj, where):
    if isinstance(obj, str):
        obj = {"kind": obj}
    _check_keys(obj, _IN_GROUP_KEYS, where)
    kind = obj.get("kind", "none")
    if kind not in IN_GROUP_KINDS:
        raise ConfigError(f"{where}: unknown kind {kind!r}")
    return InGroup(kind, springs=obj.get("springs"), label=obj.get("label"))


def spec_from_dict(data) -> SystemSpec:
    _check_keys(data, _TOP_KEYS, "scenario")
    try:
        clusters = []
        for a, c in enumerate(data.get("clusters", [])):
            _check_keys(c, _CLUSTER_KEYS, f"clusters[{a}]")
            if "masses" not in c:
                raise ConfigError(f"clusters[{a}]: 'masses' is required")
            clusters.append(ClusterSpec(
                masses=c["masses"],
                omega=c.get("omega", 0.0),
                in_group=_in_group_from_dict(c.get("in_group", "none"), f"clusters[{a}].in_group"),
            ))
        couplings = []
        for j, c in enumerate(data.get("couplings", [])):
            _check_keys(c, _COUPLING_KEYS, f"couplings[{j}]")
            missing = {"alpha", "beta", "d_matrix"} - set(c)
            if missing:
                raise ConfigError(f"couplings[{j}]: missing {sorted(missing)}")
            couplings.append(InterClusterCoupling(
                alpha=c["alpha"], beta=c["beta"], d_matrix=c["d_matrix"],
                r0=c.get("r0"), v_const=c.get("v_const", 0.0),
            ))
        dimension = data.get("dimension", 1)
        if not isinstance(dimension, int) or isinstance(dimension, bool):
            raise ConfigError(f"dimension must be an integer, got {dimension!r}")
        return SystemSpec(
            clusters=clusters,
            couplings=couplings,
            dimension=dimension,
            unit_system=data.get("unit_system", "natural"),
            description=data.get("description", ""),
        )
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"malformed scenario: {exc}") from exc


def spec_to_dict(spec: SystemSpec) -> dict:
    def in_group(g):
        d = {"kind": g.kind}
        if g.springs is not None:
            d["springs"] = [list(r) for r in g.springs]
        if g.label is not None:
            d["label"] = g.label
        return d

    out = {
        "dimension": spec.dimension,
        "unit_system": spec.unit_system,
        "clusters": [
            {"masses": list(c.masses), "omega": c.omega, "in_group": in_group(c.in_group)}
            for c in spec.clusters
        ],
        "couplings": [],
    }
    if spec.description:
        out["description"] = spec.description
    for c in spec.couplings:
        d = {"alpha": c.alpha, "beta": c.beta, "d_matrix": [list(r) for r in c.d_matrix]}
        if c.r0 is not None:
            d["r0"] = list(c.r0)
        d["v_const"] = c.v_const
        out["couplings"].append(d)
    return out


def loads(text: str) -> SystemSpec:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc}") from exc
    return spec_from_dict(data)


def dumps(spec: SystemSpec) -> str:
    return json.dumps(spec_to_dict(spec), indent=2) + "\n"


def load(path) -> SystemSpec:
    return loads(Path(path).read_text(encoding="utf-8"))


# -- units -------------------------------------------------------------------

@dataclass(frozen=True)
class UnitScales:
    """Reference scales of the natural unit system (SI values)."""

    mass: float
    frequency: float
    hbar: float

    @property
    def length(self):
        return math.sqrt(self.hbar / (self.mass * self.frequency))

    @property
    def energy(self):
        return self.hbar * self.frequency

    @property
    def stiffness(self):
        return self.mass * self.frequency**2


def to_natural(spec: SystemSpec, mass_ref=None, omega_ref=None, hbar=None):
    """Convert an SI spec to natural units (hbar = mass_ref = omega_ref = 1).

    Defaults: ``mass_ref`` is the first particle mass, ``omega_ref`` the
    largest trap frequency. Returns ``(natural_spec, UnitScales)``.
    """
    if spec.unit_system == "natural":
        return spec, UnitScales(1.0, 1.0, 1.0)
    if hbar is None:
        from scipy.constants import hbar
    if mass_ref is None:
        mass_ref = spec.clusters[0].masses[0]
    if omega_ref is None:
        omega_ref = max(c.omega for c in spec.clusters)
        if omega_ref <= 0:
            raise ConfigError("cannot pick a reference frequency: all traps are zero")
    s = UnitScales(float(mass_ref), float(omega_ref), float(hbar))
    clusters = []
    for c in spec.clusters:
        g = c.in_group
        if g.kind == "harmonic":
            g = InGroup.harmonic(np.array(g.springs) / s.stiffness)
        clusters.append(ClusterSpec(
            masses=[m / s.mass for m in c.masses], omega=c.omega / s.frequency, in_group=g,
        ))
    couplings = [
        replace(
            c,
            d_matrix=c.d_array() / s.stiffness,
            r0=None if c.r0 is None else [x / s.length for x in c.r0],
            v_const=c.v_const / s.energy,
        )
        for c in spec.couplings
    ]
    return replace(spec, clusters=clusters, couplings=couplings, unit_system="natural"), s
