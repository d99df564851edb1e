"""Normal modes of the centre-of-mass problem and spectrum assembly.

Everything is done in mass-weighted coordinates ``s = sqrt(M) R`` so that the
eigenproblem stays symmetric. The Cartesian components decouple; one M x M
problem is solved and replicated over the spatial dimensions, while the
shift vectors only enter the linear term of each component.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import InconsistentShift, NonHarmonicInGroup, UnstableMode
from .model import SystemSpec
from .separation import CMHamiltonian, RelativeHamiltonianDescriptor, separate

ZERO_MODE_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class NormalModeDecomposition:
    """Normal modes of one Cartesian component, replicated ``dimension`` times.

    ``frequencies`` (ascending, zero modes included as 0.0) and ``vectors``
    (columns, orthonormal) describe one component. ``equilibrium`` has shape
    (M, D) in centre-of-mass coordinates R. ``zero_modes`` counts zero modes
    over all dimensions.
    """

    frequencies: np.ndarray
    eigenvalues: np.ndarray
    vectors: np.ndarray
    zero_mask: np.ndarray
    equilibrium: np.ndarray
    energy_offset: float
    dimension: int = 1

    @property
    def zero_modes(self):
        return int(self.zero_mask.sum()) * self.dimension

    @property
    def oscillator_frequencies(self):
        """Frequencies of the non-zero modes, one component."""
        return self.frequencies[~self.zero_mask]

    def frequencies_by_dimension(self):
        return np.tile(self.frequencies, (self.dimension, 1))

    def all_frequencies(self):
        """Sorted multiset over every dimension."""
        return np.sort(np.tile(self.frequencies, self.dimension))


def build_cm_stiffness(cm: CMHamiltonian):
    """Mass-weighted stiffness ``K``, linear term ``b`` (M x D) and constant ``c``.

    The centre-of-mass potential equals ``s.K.s/2 + b.s + c`` per component,
    summed over components, excluding the constant pair offsets ``v``.
    """
    mass = cm.masses
    sq = np.sqrt(mass)
    n = cm.n_clusters
    k = np.zeros((n, n))
    b = np.zeros((n, cm.dimension))
    c = 0.0
    k[np.diag_indices(n)] = cm.omegas**2
    for a in range(n):
        for bb in range(a):
            g = mass[a] * mass[bb] * cm.d0[a, bb]
            if g == 0.0:
                continue
            k[a, a] += g / mass[a]
            k[bb, bb] += g / mass[bb]
            k[a, bb] = k[bb, a] = -g / (sq[a] * sq[bb])
            shift = cm.r0[a, bb]
            b[a] -= g * shift / sq[a]
            b[bb] += g * shift / sq[bb]
            c += 0.5 * g * float(shift @ shift)
    return k, b, c


def _zero_tol(k):
    return ZERO_MODE_TOL * max(1.0, float(np.max(np.sum(np.abs(k), axis=1))) if k.size else 1.0)


def diagonalize(k, b=None, c=0.0, masses=None, offset=0.0) -> NormalModeDecomposition:
    """Eigen-decomposition of the mass-weighted stiffness plus the equilibrium.

    Raises UnstableMode for negative squared frequencies and
    InconsistentShift when a linear force acts along a zero mode.
    """
    k = np.asarray(k, dtype=float)
    n = k.shape[0]
    b = np.zeros((n, 1)) if b is None else np.asarray(b, dtype=float).reshape(n, -1)
    if not np.allclose(k, k.T, rtol=0, atol=1e-12 * max(1.0, np.abs(k).max())):
        raise ValueError("stiffness matrix is not symmetric")
    evals, vecs = scipy.linalg.eigh(k)
    tol = _zero_tol(k)
    if np.any(evals < -tol):
        raise UnstableMode(evals[evals < -tol])
    zero = np.abs(evals) < tol

    proj = vecs.T @ b
    if np.any(zero):
        b_scale = max(1.0, float(np.abs(b).max()))
        if np.any(np.abs(proj[zero]) > 1e-10 * b_scale):
            raise InconsistentShift("linear force along a zero mode: no equilibrium exists")
    inv = np.where(zero, 0.0, 1.0 / np.where(zero, 1.0, evals))
    s_eq = -vecs @ (inv[:, None] * proj)
    energy = float(c) + 0.5 * float(np.sum(s_eq * b)) + float(offset)

    freqs = np.sqrt(np.where(zero, 0.0, evals))
    if masses is None:
        eq = s_eq
    else:
        eq = s_eq / np.sqrt(np.asarray(masses, dtype=float))[:, None]
    return NormalModeDecomposition(
        frequencies=freqs,
        eigenvalues=evals,
        vectors=vecs,
        zero_mask=zero,
        equilibrium=eq,
        energy_offset=energy,
        dimension=b.shape[1],
    )


def decompose(cm: CMHamiltonian) -> NormalModeDecomposition:
    k, b, c = build_cm_stiffness(cm)
    return diagonalize(k, b, c, masses=cm.masses, offset=cm.energy_offset)


def cm_energy(decomp: NormalModeDecomposition, occupations=None) -> float:
    """Energy ``sum_k w_k (n_k + 1/2) + E_0`` over non-zero modes and dimensions.

    ``occupations`` has shape (D, n_modes) or is flat of length D * n_modes
    (dimension-major); ``None`` means the ground state.
    """
    w = decomp.oscillator_frequencies
    size = decomp.dimension * w.size
    if occupations is None:
        n = np.zeros((decomp.dimension, w.size))
    else:
        n = np.asarray(occupations)
        if n.size != size:
            raise ValueError(f"expected {size} occupation numbers, got {n.size}")
        if np.any(n < 0) or np.any(n != np.round(n)):
            raise ValueError("occupation numbers must be non-negative integers")
        n = n.reshape(decomp.dimension, w.size)
    return float(np.sum(w[None, :] * (n + 0.5))) + decomp.energy_offset


@dataclass(frozen=True)
class SpectrumQuery:
    occupations: tuple | None = None
    relative_energies: tuple[float, ...] = ()


def assemble_total_energy(query: SpectrumQuery, decomp: NormalModeDecomposition) -> float:
    return cm_energy(decomp, query.occupations) + float(sum(query.relative_energies))


# -- all-harmonic oracle -------------------------------------------------------

def _require_harmonic(spec):
    for a, cl in enumerate(spec.clusters):
        if not cl.in_group.is_harmonic:
            raise NonHarmonicInGroup(a, cl.in_group.kind)


def full_stiffness(spec: SystemSpec):
    """Mass-weighted Hessian of the complete potential, one Cartesian component."""
    _require_harmonic(spec)
    masses = np.concatenate([np.asarray(c.masses, dtype=float) for c in spec.clusters])
    offsets = np.cumsum([0] + [c.size for c in spec.clusters])
    h = np.zeros((masses.size, masses.size))

    def spring(i, j, kappa):
        h[i, i] += kappa
        h[j, j] += kappa
        h[i, j] -= kappa
        h[j, i] -= kappa

    for a, cl in enumerate(spec.clusters):
        o = offsets[a]
        for i, m in enumerate(cl.masses):
            h[o + i, o + i] += m * cl.omega**2
        springs = cl.spring_matrix()
        for i in range(cl.size):
            for j in range(i):
                if springs[i, j]:
                    spring(o + i, o + j, springs[i, j])
    for c in spec.couplings:
        d = c.d_array()
        oa, ob = offsets[c.alpha], offsets[c.beta]
        for i in range(d.shape[0]):
            for j in range(d.shape[1]):
                if d[i, j]:
                    spring(oa + i, ob + j, d[i, j])
    w = 1.0 / np.sqrt(masses)
    return h * np.outer(w, w)


def _frequencies(evals, k):
    tol = _zero_tol(k)
    if np.any(evals < -tol):
        raise UnstableMode(evals[evals < -tol])
    return np.sqrt(np.where(np.abs(evals) < tol, 0.0, evals))


def brute_force_full_harmonic(spec: SystemSpec) -> np.ndarray:
    """Every normal-mode frequency of the full system, sorted, all dimensions."""
    k = full_stiffness(spec)
    w = _frequencies(np.linalg.eigvalsh(k), k)
    return np.sort(np.tile(w, spec.dimension))


def relative_mode_frequencies(rel: RelativeHamiltonianDescriptor) -> np.ndarray:
    """Internal mode frequencies of one harmonic cluster at its effective frequency.

    The cluster's own stiffness at ``omega_bar`` is projected onto the
    complement of the centre-of-mass direction ``sqrt(m)``.
    """
    if not rel.in_group.is_harmonic:
        raise NonHarmonicInGroup(rel.alpha, rel.in_group.kind)
    m = np.asarray(rel.masses, dtype=float)
    if m.size == 1:
        return np.zeros(0)
    cl = rel.cluster
    sub = SystemSpec(clusters=[cl])
    k = full_stiffness(sub)
    com = np.sqrt(m / m.sum())
    basis = scipy.linalg.null_space(com[None, :])
    k_rel = basis.T @ k @ basis
    return np.sort(_frequencies(np.linalg.eigvalsh(k_rel), k_rel))


def relative_ground_energy(rel: RelativeHamiltonianDescriptor, dimension=1) -> float:
    return 0.5 * dimension * float(relative_mode_frequencies(rel).sum())


def separated_spectrum(spec: SystemSpec, rel_tol=None, strict=True):
    """Centre-of-mass modes together with every cluster's relative modes.

    Returns ``(sorted multiset over all dimensions, decomposition, descriptors)``.
    """
    kwargs = {} if rel_tol is None else {"rel_tol": rel_tol}
    cm, rels = separate(spec, strict=strict, **kwargs)
    dec = decompose(cm)
    parts = [dec.frequencies] + [relative_mode_frequencies(r) for r in rels]
    one = np.concatenate(parts)
    return np.sort(np.tile(one, spec.dimension)), dec, rels


def max_relative_deviation(a, b, floor=1e-12):
    """Element-wise relative deviation of two sorted frequency multisets."""
    a = np.sort(np.asarray(a, dtype=float))
    b = np.sort(np.asarray(b, dtype=float))
    if a.shape != b.shape:
        return float("inf")
    scale = np.maximum(np.maximum(np.abs(a), np.abs(b)), floor)
    return float(np.max(np.abs(a - b) / scale)) if a.size else 0.0
