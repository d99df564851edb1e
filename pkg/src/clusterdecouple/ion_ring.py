"""Charged impurity on the axis of a ring of trapped ions.

The impurity moves along the ring axis z; every bath ion sits at radius rho.
Expanding the Coulomb energy ``k_e Q Q_I / sqrt(rho^2 + (z_i - z_I)^2)`` to
second order gives, per bath ion, an inverted spring of stiffness
``d_z = k_e Q Q_I / rho^3`` between ``z_i`` and ``z_I``. In the cluster model
this is the coupling ``d_ik = -d_z`` (identical for every bath ion, hence
factorized), and the diagonal part softens the external traps:

    m omega_zI^2 = m omega_ext^2 - N d_z,    m Omega^2 = m Omega_ext^2 - d_z.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import constants as _c

from .errors import InvalidTrap
from .model import ClusterSpec, InGroup, InterClusterCoupling, SystemSpec, UnitScales
from .quench import QuenchScenario
from .separation import separate


@dataclass(frozen=True)
class PhysicalConstants:
    """CODATA 2022 values as shipped by ``scipy.constants``."""

    k_e: float = 1.0 / (4.0 * math.pi * _c.epsilon_0)
    hbar: float = _c.hbar
    e: float = _c.e
    atomic_mass: float = _c.atomic_mass
    electron_mass: float = _c.m_e


CONSTANTS = PhysicalConstants()

# AME2020 atomic mass of 40Ca in u; the singly charged ion lacks one electron
CA40_ATOMIC_MASS_U = 39.962590850
CA40_ION_MASS = CA40_ATOMIC_MASS_U * CONSTANTS.atomic_mass - CONSTANTS.electron_mass

PRESET_N = 10
PRESET_RHO = 45e-6
PRESET_INITIAL_RATIO = 20.0
PRESET_FINAL_RATIO = 2.0


@dataclass(frozen=True)
class IonRingScenario:
    """SI description of the ring; external trap frequencies in rad/s."""

    n_bath: int
    rho: float
    mass: float
    omega_ext: float
    Omega_ext: float
    charge: float = CONSTANTS.e
    impurity_charge: float = CONSTANTS.e

    @property
    def d_z(self):
        return CONSTANTS.k_e * self.charge * self.impurity_charge / self.rho**3

    @property
    def omega_zI_sq(self):
        return self.omega_ext**2 - self.n_bath * self.d_z / self.mass

    @property
    def Omega_sq(self):
        return self.Omega_ext**2 - self.d_z / self.mass

    @property
    def omega_zI(self):
        return math.sqrt(self.omega_zI_sq)

    @property
    def Omega(self):
        return math.sqrt(self.Omega_sq)

    @property
    def coupling(self):
        """``d_z sqrt(N) / m`` in s^-2."""
        return self.d_z * math.sqrt(self.n_bath) / self.mass

    @property
    def equal_frequencies(self):
        return math.isclose(self.omega_zI_sq, self.Omega_sq, rel_tol=1e-12)


@dataclass(frozen=True, eq=False)
class IonRingBuild:
    scenario: IonRingScenario
    units: UnitScales
    spec: SystemSpec
    cm: object
    quench: QuenchScenario | None
    final_ratio: float

    @property
    def omega0(self):
        return self.units.frequency

    def branches(self, gamma):
        if self.quench is None:
            return None
        return self.quench.branches(self.quench.protocol(gamma))

    def natural(self):
        return natural_quantities(self.scenario, self.units)

    def summary(self):
        s = self.scenario
        out = {
            "n_bath": s.n_bath,
            "rho_m": s.rho,
            "mass_kg": s.mass,
            "charge_C": s.charge,
            "impurity_charge_C": s.impurity_charge,
            "d_z_N_per_m": s.d_z,
            "omega_ext_rad_s": s.omega_ext,
            "Omega_ext_rad_s": s.Omega_ext,
            "omega_zI_rad_s": s.omega_zI,
            "Omega_rad_s": s.Omega,
            "omega0_rad_s": self.omega0,
            "length_unit_m": self.units.length,
            "natural": self.natural(),
        }
        if self.quench is not None:
            out["quench"] = {
                "coupling": self.quench.coupling,
                "initial_ratio": self.quench.omega2_init / self.quench.coupling,
                "final_ratio": self.final_ratio,
                "n_bath": self.quench.n_bath,
            }
        return out


def natural_quantities(scenario: IonRingScenario, units: UnitScales):
    return {
        "rho": scenario.rho / units.length,
        "mass": scenario.mass / units.mass,
        "d_z": scenario.d_z / units.stiffness,
        "omega_ext": scenario.omega_ext / units.frequency,
        "Omega_ext": scenario.Omega_ext / units.frequency,
    }


def scenario_from_natural(values, units: UnitScales, n_bath, charge=CONSTANTS.e,
                          impurity_charge=CONSTANTS.e) -> IonRingScenario:
    """Inverse of :func:`natural_quantities` (``d_z`` follows from rho and charges)."""
    return IonRingScenario(
        n_bath=n_bath,
        rho=values["rho"] * units.length,
        mass=values["mass"] * units.mass,
        omega_ext=values["omega_ext"] * units.frequency,
        Omega_ext=values["Omega_ext"] * units.frequency,
        charge=charge,
        impurity_charge=impurity_charge,
    )


def ring_system(scenario: IonRingScenario, units: UnitScales) -> SystemSpec:
    """Impurity (cluster 0) and bath (cluster 1) in natural units, 1D along z."""
    n = scenario.n_bath
    m = scenario.mass / units.mass
    d = -scenario.d_z / units.stiffness
    bath_group = InGroup.external("coulomb-ring") if n > 1 else InGroup.none()
    return SystemSpec(
        clusters=[
            ClusterSpec([m], scenario.omega_ext / units.frequency),
            ClusterSpec([m] * n, scenario.Omega_ext / units.frequency, bath_group),
        ],
        couplings=[InterClusterCoupling(1, 0, [[d]] * n, r0=[0.0], v_const=0.0)],
        dimension=1,
        unit_system="natural",
        description=f"impurity on the axis of a {n}-ion ring, natural units",
    )


def build_scenario(n_bath=PRESET_N, rho=PRESET_RHO, mass=CA40_ION_MASS, charge=CONSTANTS.e,
                   impurity_charge=None, omega_ext=None, Omega_ext=None,
                   initial_ratio=PRESET_INITIAL_RATIO, final_ratio=PRESET_FINAL_RATIO) -> IonRingBuild:
    """Build the ring scenario from SI inputs.

    Without ``omega_ext``/``Omega_ext`` the dimensionless preset is used: equal
    effective frequencies with ``m omega^2(0) = initial_ratio * d_z sqrt(N)``.
    The natural unit of frequency is ``omega(0) = omega_zI``.
    """
    if impurity_charge is None:
        impurity_charge = charge
    if not (n_bath >= 1 and rho > 0 and mass > 0):
        raise ValueError("n_bath, rho and mass must be positive")
    if (omega_ext is None) != (Omega_ext is None):
        raise ValueError("give both omega_ext and Omega_ext, or neither")
    d_z = CONSTANTS.k_e * charge * impurity_charge / rho**3
    if omega_ext is None:
        w2 = initial_ratio * d_z * math.sqrt(n_bath) / mass
        omega_ext = math.sqrt(w2 + n_bath * d_z / mass)
        Omega_ext = math.sqrt(w2 + d_z / mass)
    sc = IonRingScenario(n_bath, rho, mass, omega_ext, Omega_ext, charge, impurity_charge)
    if sc.omega_zI_sq <= 0:
        raise InvalidTrap(f"impurity: m omega_zI^2 = {sc.mass * sc.omega_zI_sq:.4g} N/m <= 0")
    if sc.Omega_sq <= 0:
        raise InvalidTrap(f"bath: m Omega^2 = {sc.mass * sc.Omega_sq:.4g} N/m <= 0")

    units = UnitScales(mass, sc.omega_zI, CONSTANTS.hbar)
    spec = ring_system(sc, units)
    cm, _ = separate(spec)
    quench = None
    if sc.equal_frequencies and sc.d_z != 0:
        coupling = sc.coupling / units.frequency**2
        quench = QuenchScenario(coupling, 1.0, final_ratio * coupling, n_bath)
    return IonRingBuild(sc, units, spec, cm, quench, final_ratio)


@dataclass(frozen=True)
class SmallDisplacementReport:
    max_ratio: float
    status: str
    rho: float
    max_width: float

    def as_dict(self):
        return {"max_ratio": self.max_ratio, "status": self.status,
                "rho_m": self.rho, "max_width_m": self.max_width}


WARN_RATIO = 0.05
ERROR_RATIO = 0.2


def validate_small_displacement(build: IonRingBuild, record) -> SmallDisplacementReport:
    """Compare the impurity width ``sqrt(<z_I^2>)`` with the ring radius."""
    widths = np.sqrt(np.asarray(record.variance)) * build.units.length
    ratios = widths / build.scenario.rho
    r = float(ratios.max())
    status = "error" if r > ERROR_RATIO else "warning" if r > WARN_RATIO else "ok"
    return SmallDisplacementReport(r, status, build.scenario.rho, float(widths.max()))


def coulomb_axial_energy(s, rho, charge=CONSTANTS.e, impurity_charge=CONSTANTS.e):
    """Exact Coulomb energy of one bath ion and the impurity at axial separation s."""
    return CONSTANTS.k_e * charge * impurity_charge / (rho * np.sqrt(1.0 + (s / rho) ** 2))
