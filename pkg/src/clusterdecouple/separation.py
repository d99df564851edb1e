"""Separation of cluster centre-of-mass and relative motion.

The inter-cluster coupling only touches centres of mass when every coupling
matrix factorizes as ``d_ik = m_i m_k d0``. Here the condition is tested in two
independent ways: directly on the ratios ``d_ik / (m_i m_k)``, and by
transforming the coupling matrix into relative + centre-of-mass coordinates,
where all entries except the centre-of-mass corner must vanish.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ImaginaryEffectiveFrequency, NotDecoupled
from .model import ClusterSpec, InGroup, SystemSpec, total_mass_and_com_weights

DEFAULT_REL_TOL = 1e-9
RATIO_FLOOR = 1e-12


@dataclass(frozen=True, eq=False)
class TransformationMatrix:
    """``x = T y`` with ``y = (x_1 - X, ..., x_{N-1} - X, X)``."""

    alpha: int
    matrix: np.ndarray

    @property
    def size(self):
        return self.matrix.shape[0]


def build_transformation(cluster: ClusterSpec, alpha: int = 0) -> TransformationMatrix:
    m = np.asarray(cluster.masses, dtype=float)
    n = m.size
    t = np.eye(n)
    t[:, -1] = 1.0
    t[-1, :-1] = -m[:-1] / m[-1]
    return TransformationMatrix(alpha, t)


def transform_coupling(t_alpha, t_beta, d_matrix):
    """Coupling matrix in relative + centre-of-mass coordinates, T_a^T D T_b."""
    ta = getattr(t_alpha, "matrix", t_alpha)
    tb = getattr(t_beta, "matrix", t_beta)
    d = np.asarray(d_matrix, dtype=float)
    if d.shape != (ta.shape[0], tb.shape[0]):
        raise ValueError(
            f"coupling matrix shape {d.shape} does not match transforms "
            f"{ta.shape[0]}x{tb.shape[0]}"
        )
    return ta.T @ d @ tb


def off_corner_residual(d_t):
    """Largest off-corner |entry| of a transformed coupling, relative to max |entry|."""
    d_t = np.asarray(d_t)
    scale = np.max(np.abs(d_t)) if d_t.size else 0.0
    if scale == 0.0:
        return 0.0
    off = np.abs(d_t).copy()
    off[-1, -1] = 0.0
    return float(off.max() / scale)


@dataclass(frozen=True)
class DecouplingReport:
    pair: tuple[int, int]
    decoupled: bool
    d0: float | None
    max_residual: float
    offending: tuple[tuple[int, int, float], ...] = ()
    transformed_residual: float = 0.0
    rel_tol: float = DEFAULT_REL_TOL

    def as_dict(self):
        return {
            "pair": list(self.pair),
            "decoupled": self.decoupled,
            "d0": self.d0,
            "max_residual": self.max_residual,
            "transformed_residual": self.transformed_residual,
            "rel_tol": self.rel_tol,
            "offending": [{"i": i, "k": k, "residual": r} for i, k, r in self.offending],
        }


def check_decoupling(cluster_alpha: ClusterSpec, cluster_beta: ClusterSpec, d_matrix,
                     rel_tol=DEFAULT_REL_TOL, pair=(1, 0)) -> DecouplingReport:
    """Test whether ``d_matrix`` factorizes as ``m_i m_k d0``.

    ``max_residual`` is ``max |q_ik - mean(q)| / max(|mean(q)|, 1e-12)`` with
    ``q_ik = d_ik / (m_i m_k)``. The report also carries the off-corner
    residual of the transformed coupling matrix as an independent check.
    """
    ma = np.asarray(cluster_alpha.masses, dtype=float)
    mb = np.asarray(cluster_beta.masses, dtype=float)
    d = np.asarray(d_matrix, dtype=float)
    if d.shape != (ma.size, mb.size):
        raise ValueError(f"d_matrix shape {d.shape} != ({ma.size}, {mb.size})")
    q = d / np.outer(ma, mb)
    q_mean = float(q.mean())
    dev = np.abs(q - q_mean) / max(abs(q_mean), RATIO_FLOOR)
    max_res = float(dev.max())
    bad = np.argwhere(dev > rel_tol)
    offending = sorted(
        ((int(i), int(k), float(dev[i, k])) for i, k in bad), key=lambda e: -e[2]
    )
    d_t = transform_coupling(build_transformation(cluster_alpha).matrix,
                             build_transformation(cluster_beta).matrix, d)
    decoupled = max_res <= rel_tol
    return DecouplingReport(
        pair=tuple(pair),
        decoupled=decoupled,
        d0=q_mean if decoupled else None,
        max_residual=max_res,
        offending=tuple(offending),
        transformed_residual=off_corner_residual(d_t),
        rel_tol=rel_tol,
    )


def check_system(spec: SystemSpec, rel_tol=DEFAULT_REL_TOL) -> list[DecouplingReport]:
    """One report per declared coupling, in declaration order."""
    return [
        check_decoupling(spec.clusters[c.alpha], spec.clusters[c.beta], c.d_array(),
                         rel_tol=rel_tol, pair=c.pair)
        for c in spec.couplings
    ]


@dataclass(frozen=True, eq=False)
class CMHamiltonian:
    """Coupled oscillators of the cluster centres of mass.

    ``d0`` is a symmetric M x M matrix with zero diagonal, ``r0[a, b]`` the
    shift vector of the pair (antisymmetric in a, b).
    """

    masses: np.ndarray
    omegas: np.ndarray
    d0: np.ndarray
    r0: np.ndarray
    energy_offset: float = 0.0
    dimension: int = 1

    @property
    def n_clusters(self):
        return self.masses.size


@dataclass(frozen=True, eq=False)
class RelativeHamiltonianDescriptor:
    alpha: int
    masses: tuple[float, ...]
    in_group: InGroup = field(default_factory=InGroup)
    omega_bar: float = 0.0

    @property
    def cluster(self):
        return ClusterSpec(self.masses, self.omega_bar, self.in_group)


def effective_frequency(spec: SystemSpec, cm: CMHamiltonian, alpha: int) -> float:
    """In-group frequency from the trap plus the mean field of other clusters."""
    w2 = spec.clusters[alpha].omega ** 2
    others = np.arange(cm.n_clusters) != alpha
    w2 += float(np.sum(cm.masses[others] * cm.d0[alpha, others]))
    if w2 < 0:
        raise ImaginaryEffectiveFrequency(alpha, w2)
    return float(np.sqrt(w2))


def separate(spec: SystemSpec, rel_tol=DEFAULT_REL_TOL, strict=True):
    """Split ``spec`` into its centre-of-mass Hamiltonian and relative parts.

    With ``strict=False`` pairs that fail the factorization test still enter
    with their mean ratio as ``d0``; the result is then an approximation and
    only useful for comparisons against the exact spectrum.
    """
    reports = check_system(spec, rel_tol)
    failed = [r for r in reports if not r.decoupled]
    if failed and strict:
        raise NotDecoupled(failed)

    m_count = spec.n_clusters
    masses = np.array([total_mass_and_com_weights(c)[0] for c in spec.clusters])
    omegas = np.array([c.omega for c in spec.clusters])
    d0 = np.zeros((m_count, m_count))
    r0 = np.zeros((m_count, m_count, spec.dimension))
    offset = 0.0
    for c, rep in zip(spec.couplings, reports):
        a, b = c.pair
        value = rep.d0 if rep.decoupled else float(
            (c.d_array() / np.outer(spec.clusters[a].masses, spec.clusters[b].masses)).mean()
        )
        d0[a, b] = d0[b, a] = value
        shift = c.shift(spec.dimension)
        r0[a, b] = shift
        r0[b, a] = -shift
        offset += c.v_const

    cm = CMHamiltonian(masses, omegas, d0, r0, offset, spec.dimension)
    rel = [
        RelativeHamiltonianDescriptor(a, cl.masses, cl.in_group, effective_frequency(spec, cm, a))
        for a, cl in enumerate(spec.clusters)
    ]
    return cm, rel
