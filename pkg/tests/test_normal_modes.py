import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from clusterdecouple.errors import InconsistentShift, NonHarmonicInGroup, UnstableMode
from clusterdecouple.model import ClusterSpec, InGroup, InterClusterCoupling, SystemSpec
from clusterdecouple.normal_modes import (
    SpectrumQuery,
    assemble_total_energy,
    brute_force_full_harmonic,
    build_cm_stiffness,
    cm_energy,
    decompose,
    diagonalize,
    max_relative_deviation,
    relative_ground_energy,
    separated_spectrum,
)
from clusterdecouple.separation import separate

from .systems import perturb_one_entry, random_decoupled_system

seeds = st.integers(0, 2**32 - 1)


def impurity_bath(n, m, d_z, omega, springs=None):
    """Impurity plus n-ion bath with trap frequencies chosen so both effective frequencies are ``omega``."""
    w_imp = math.sqrt(omega**2 + n * d_z / m)
    w_bath = math.sqrt(omega**2 + d_z / m)
    g = InGroup.harmonic(springs) if springs is not None else InGroup.none()
    return SystemSpec(
        [ClusterSpec([m], w_imp), ClusterSpec([m] * n, w_bath, g)],
        [InterClusterCoupling(1, 0, [[-d_z]] * n)],
    )


# -- stiffness -------------------------------------------------------------------------

def test_single_oscillator_stiffness():
    cm, _ = separate(SystemSpec([ClusterSpec([2.0], 1.3)]))
    k, b, c = build_cm_stiffness(cm)
    np.testing.assert_allclose(k, [[1.69]])
    assert not b.any() and c == 0.0


def test_impurity_bath_stiffness_eigenvalues():
    n, m, d_z, w = 10, 1.7, 0.05, 1.0
    cm, _ = separate(impurity_bath(n, m, d_z, w))
    k, _, _ = build_cm_stiffness(cm)
    expect = sorted([w**2 - d_z * math.sqrt(n) / m, w**2 + d_z * math.sqrt(n) / m])
    np.testing.assert_allclose(np.linalg.eigvalsh(k), expect, rtol=1e-13)


def symmetric_pair(r0=None):
    return SystemSpec(
        [ClusterSpec([1.0], 0.0), ClusterSpec([1.0], 0.0)],
        [InterClusterCoupling(1, 0, [[1.0]], r0=r0)],
    )


def test_symmetric_pair():
    cm, _ = separate(symmetric_pair())
    k, _, _ = build_cm_stiffness(cm)
    np.testing.assert_array_equal(k, [[1, -1], [-1, 1]])
    dec = diagonalize(k)
    np.testing.assert_allclose(dec.frequencies, [0.0, math.sqrt(2)], atol=1e-15)
    assert dec.zero_modes == 1


def test_shift_sets_equilibrium_separation():
    dec = decompose(separate(symmetric_pair(r0=[0.4]))[0])
    assert dec.equilibrium[1, 0] - dec.equilibrium[0, 0] == pytest.approx(0.4, rel=1e-14)
    assert dec.energy_offset == pytest.approx(0.0, abs=1e-15)


def test_trapped_shift_energy():
    # two unit masses, omega = 1, d0 = 1, r0 = a: E_0 = a^2 / 6 from the 2x2 linear solve
    spec = SystemSpec(
        [ClusterSpec([1.0], 1.0), ClusterSpec([1.0], 1.0)],
        [InterClusterCoupling(1, 0, [[1.0]], r0=[0.6], v_const=0.1)],
    )
    dec = decompose(separate(spec)[0])
    assert dec.energy_offset == pytest.approx(0.36 / 6 + 0.1, rel=1e-13)
    np.testing.assert_allclose(dec.equilibrium[:, 0], [-0.2, 0.2], rtol=1e-13)


# -- diagonalization -------------------------------------------------------------------

def test_single_mode():
    dec = diagonalize([[2.25]])
    assert dec.frequencies.tolist() == [1.5]
    assert dec.energy_offset == 0.0 and dec.zero_modes == 0


@settings(max_examples=30)
@given(seeds)
def test_eigenvalues_match_general_solver(seed):
    rng = np.random.default_rng(seed)
    spec = random_decoupled_system(rng, m_range=(4, 4))
    k, _, _ = build_cm_stiffness(separate(spec)[0])
    dec = diagonalize(k)
    oracle = np.sort(np.linalg.eigvals(k).real)
    np.testing.assert_allclose(dec.eigenvalues, oracle, rtol=1e-10, atol=1e-12)
    # orthonormal vectors and reconstruction
    np.testing.assert_allclose(dec.vectors.T @ dec.vectors, np.eye(4), atol=1e-10)
    rebuilt = dec.vectors @ np.diag(dec.frequencies**2) @ dec.vectors.T
    assert np.abs(rebuilt - k).max() <= 1e-10 * np.abs(k).max()


def test_unstable_mode():
    with pytest.raises(UnstableMode):
        diagonalize([[1.0, 2.0], [2.0, 1.0]])


def test_inconsistent_shift():
    with pytest.raises(InconsistentShift):
        diagonalize([[1.0, -1.0], [-1.0, 1.0]], b=[[1.0], [1.0]])


def test_asymmetric_stiffness_rejected():
    with pytest.raises(ValueError):
        diagonalize([[1.0, 0.5], [0.0, 1.0]])


# -- energies ---------------------------------------------------------------------------

def test_cm_energy_examples():
    assert cm_energy(diagonalize([[1.0]]), [0]) == 0.5
    assert cm_energy(diagonalize([[1.0, 0.0], [0.0, 4.0]]), [1, 0]) == 2.5


def test_cm_energy_impurity_ground_state():
    n, m, d_z = 10, 1.0, 0.05
    w = math.sqrt(2 * d_z * math.sqrt(n) / m)
    dec = decompose(separate(impurity_bath(n, m, d_z, w))[0])
    expect = 0.5 * (w * math.sqrt(0.5) + w * math.sqrt(1.5))
    assert cm_energy(dec) == pytest.approx(expect, rel=1e-13)


def test_cm_energy_occupation_errors():
    dec = diagonalize([[1.0]])
    with pytest.raises(ValueError):
        cm_energy(dec, [0, 1])
    with pytest.raises(ValueError):
        cm_energy(dec, [-1])
    with pytest.raises(ValueError):
        cm_energy(dec, [0.5])


def test_zero_modes_excluded_from_energy():
    dec = decompose(separate(symmetric_pair())[0])
    assert cm_energy(dec, [2]) == pytest.approx(2.5 * math.sqrt(2))


def test_assemble_total_energy_examples():
    assert assemble_total_energy(SpectrumQuery(), diagonalize([[1.0]])) == 0.5
    two = diagonalize([[1.0, 0.0], [0.0, 4.0]])
    assert assemble_total_energy(SpectrumQuery((1, 0), (0.5, 1.5)), two) == 4.5


def test_assembled_ground_state_matches_brute_force():
    spec = random_decoupled_system(np.random.default_rng(5), m_range=(3, 3), n_range=(2, 3))
    _, dec, rels = separated_spectrum(spec)
    rel = tuple(relative_ground_energy(r, spec.dimension) for r in rels)
    total = assemble_total_energy(SpectrumQuery(relative_energies=rel), dec)
    brute = 0.5 * brute_force_full_harmonic(spec).sum()
    # the shift terms only add the constant E_0
    assert total - dec.energy_offset == pytest.approx(brute, rel=1e-12)


# -- brute-force oracle -------------------------------------------------------------------

def test_brute_force_uncoupled():
    spec = SystemSpec([ClusterSpec([1.0], 1.0), ClusterSpec([1.0], 1.0)])
    np.testing.assert_allclose(brute_force_full_harmonic(spec), [1.0, 1.0])


def test_brute_force_impurity_bath():
    n, m, d_z, w = 3, 1.0, 0.05, 0.9
    spec = impurity_bath(n, m, d_z, w)
    wx = math.sqrt(w**2 - d_z * math.sqrt(n) / m)
    wy = math.sqrt(w**2 + d_z * math.sqrt(n) / m)
    np.testing.assert_allclose(brute_force_full_harmonic(spec), sorted([wx, wy, w, w]), rtol=1e-13)
    multiset, _, _ = separated_spectrum(spec)
    assert max_relative_deviation(multiset, brute_force_full_harmonic(spec)) <= 1e-12


def test_brute_force_rejects_non_harmonic():
    spec = SystemSpec([ClusterSpec([1.0, 1.0], 1.0, InGroup.external("coulomb"))])
    with pytest.raises(NonHarmonicInGroup):
        brute_force_full_harmonic(spec)


@settings(max_examples=60, deadline=None)
@given(seeds, st.integers(1, 3))
def test_separation_soundness(seed, dim):
    spec = random_decoupled_system(np.random.default_rng(seed), dimension=dim)
    multiset, _, _ = separated_spectrum(spec)
    assert max_relative_deviation(multiset, brute_force_full_harmonic(spec)) <= 1e-9


@settings(max_examples=60, deadline=None)
@given(seeds)
def test_separation_necessity(seed):
    rng = np.random.default_rng(seed)
    hit = None
    while hit is None:
        hit = perturb_one_entry(random_decoupled_system(rng), rng)
    bad = hit[0]
    multiset, _, _ = separated_spectrum(bad, strict=False)
    assert max_relative_deviation(multiset, brute_force_full_harmonic(bad)) > 1e-9


@settings(max_examples=40, deadline=None)
@given(seeds, st.floats(0.01, 100.0))
def test_mass_scale_invariance(seed, lam):
    spec = random_decoupled_system(np.random.default_rng(seed))
    scaled = SystemSpec(
        [ClusterSpec(np.multiply(c.masses, lam), c.omega,
                     InGroup.harmonic(lam * c.spring_matrix()) if c.size > 1 else c.in_group)
         for c in spec.clusters],
        [InterClusterCoupling(c.alpha, c.beta, lam * c.d_array(), c.r0, c.v_const) for c in spec.couplings],
        spec.dimension,
    )
    a, _, _ = separated_spectrum(spec)
    b, _, _ = separated_spectrum(scaled)
    assert max_relative_deviation(a, b) <= 1e-10


@pytest.mark.parametrize("dim", [1, 2, 3])
def test_untrapped_zero_mode_count(dim):
    rng = np.random.default_rng(dim)
    spec = random_decoupled_system(rng, m_range=(3, 4), dimension=dim, omega=0.0)
    dec = decompose(separate(spec)[0])
    assert dec.zero_modes == dim


@settings(max_examples=30, deadline=None)
@given(seeds)
def test_shifts_do_not_move_frequencies(seed):
    rng = np.random.default_rng(seed)
    spec = random_decoupled_system(rng, dimension=2)
    moved = SystemSpec(
        spec.clusters,
        [InterClusterCoupling(c.alpha, c.beta, c.d_matrix, rng.normal(size=2) * 3, c.v_const) for c in spec.couplings],
        2,
    )
    a = decompose(separate(spec)[0])
    b = decompose(separate(moved)[0])
    np.testing.assert_allclose(a.frequencies, b.frequencies, rtol=1e-12)
