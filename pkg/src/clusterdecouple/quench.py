"""Quench dynamics of the impurity and bath centre of mass.

With equal impurity and bath-centre frequencies the two-mode problem splits
into the normal coordinates ``x = (z_I - sqrt(N) Z)/sqrt(2)`` and
``y = (z_I + sqrt(N) Z)/sqrt(2)`` whose squared frequencies are
``omega^2(t) -/+ coupling`` with ``coupling = d_z sqrt(N) / m``. Each branch
starts in its ground state and stays Gaussian; the width follows the Ermakov
scaling factor

    lambda^2 = u^2 + omega_xi(0)^2 v^2,

where ``u`` and ``v`` solve ``q'' + omega_xi^2(t) q = 0`` with
``(u, u') = (1, 0)`` and ``(v, v') = (0, 1)``. Variances are reported in units
of ``hbar / (m omega(0))`` and times as ``omega(0) t``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from .errors import NegativeSquaredFrequency, UnsupportedOrder
from .ode import dopri5

DEFAULT_T_MAX = 40.0
DEFAULT_GRID = 2000
DEFAULT_RTOL = 1e-11
DEFAULT_ATOL = 1e-13


@dataclass(frozen=True)
class FrequencyProtocol:
    """Squared trap frequency as a function of time.

    kinds:
      * ``constant``: ``omega2_init`` for all t.
      * ``exp_ramp``: ``omega2_init * exp(-gamma * omega(0) * t)`` until it
        reaches ``omega2_final`` at ``t_switch``, constant afterwards.
      * ``sudden``: ground state of ``omega2_init`` at t = 0, ``omega2_final``
        for every t > 0.
    """

    kind: str
    omega2_init: float
    omega2_final: float | None = None
    gamma: float = 0.0

    def __post_init__(self):
        if self.kind not in ("constant", "exp_ramp", "sudden"):
            raise ValueError(f"unknown protocol kind {self.kind!r}")
        if self.kind == "constant":
            object.__setattr__(self, "omega2_final", self.omega2_init)
        if self.kind == "exp_ramp":
            if not self.gamma > 0:
                raise ValueError("exp_ramp needs gamma > 0")
            if not self.omega2_init >= self.omega2_final > 0:
                raise ValueError("exp_ramp needs omega2_init >= omega2_final > 0")
        if self.omega2_init <= 0:
            raise ValueError("initial squared frequency must be positive")

    @classmethod
    def constant(cls, omega2):
        return cls("constant", omega2)

    @classmethod
    def exp_ramp(cls, omega2_init, gamma, omega2_final):
        return cls("exp_ramp", omega2_init, omega2_final, gamma)

    @classmethod
    def sudden(cls, omega2_init, omega2_final):
        return cls("sudden", omega2_init, omega2_final)

    @property
    def omega0(self):
        return math.sqrt(self.omega2_init)

    @property
    def rate(self):
        return self.gamma * self.omega0

    @property
    def t_switch(self):
        if self.kind != "exp_ramp":
            return None
        return math.log(self.omega2_init / self.omega2_final) / self.rate

    def breakpoints(self, t_max):
        ts = self.t_switch
        return [ts] if ts is not None and 0 < ts < t_max else []

    def omega2_at(self, t):
        """Scalar version of :meth:`omega2` for the integrator."""
        if self.kind == "exp_ramp":
            if t < self.t_switch:
                return self.omega2_init * math.exp(-self.rate * t)
            return self.omega2_final
        if self.kind == "sudden":
            return self.omega2_final
        return self.omega2_init

    def omega2(self, t):
        t = np.asarray(t, dtype=float)
        if self.kind == "exp_ramp":
            return np.where(t < self.t_switch, self.omega2_init * np.exp(-self.rate * t), self.omega2_final)
        value = self.omega2_final if self.kind == "sudden" else self.omega2_init
        return np.full_like(t, value)

    def min_omega2(self, t_max):
        # every kind is non-increasing after t = 0
        return float(min(self.omega2_at(0.0), self.omega2_at(t_max)))


@dataclass(frozen=True)
class BranchSpec:
    """One normal coordinate: ``omega_xi^2(t) = omega^2(t) + offset``."""

    label: str
    offset: float
    protocol: FrequencyProtocol

    @property
    def omega0(self):
        w2 = self.protocol.omega2_init + self.offset
        if w2 <= 0:
            raise NegativeSquaredFrequency(self.label, 0.0, w2)
        return math.sqrt(w2)

    def omega2(self, t):
        return self.protocol.omega2(t) + self.offset

    def omega2_at(self, t):
        return self.protocol.omega2_at(t) + self.offset

    def check_positive(self, t_max):
        w2 = self.protocol.min_omega2(t_max) + self.offset
        w2_init = self.protocol.omega2_init + self.offset
        for t, value in ((0.0, w2_init), (t_max, w2)):
            if value <= 0:
                raise NegativeSquaredFrequency(self.label, t, value)


@dataclass(frozen=True, eq=False)
class ClassicalPair:
    t: np.ndarray
    u: np.ndarray
    du: np.ndarray
    v: np.ndarray
    dv: np.ndarray
    stats: dict = field(default_factory=dict)

    @property
    def wronskian(self):
        return self.u * self.dv - self.du * self.v


def time_grid(t_max=DEFAULT_T_MAX, grid=DEFAULT_GRID):
    return np.linspace(0.0, float(t_max), int(grid))


def integrate_classical_pair(branch: BranchSpec, t_max=DEFAULT_T_MAX, grid=DEFAULT_GRID,
                             rtol=DEFAULT_RTOL, atol=DEFAULT_ATOL, t_eval=None) -> ClassicalPair:
    """Cosine- and sine-like solutions of ``q'' + omega_xi^2(t) q = 0``.

    ``t_max`` is in the protocol's time unit. Ramp switch times are hit
    exactly by splitting the integration there.
    """
    t = time_grid(t_max, grid) if t_eval is None else np.asarray(t_eval, dtype=float)
    t_max = float(t[-1])
    branch.check_positive(t_max)
    label = branch.label

    def rhs(s, y):
        w2 = branch.omega2_at(s)
        if w2 <= 0:
            raise NegativeSquaredFrequency(label, s, w2)
        return np.array([y[1], -w2 * y[0], y[3], -w2 * y[2]])

    edges = [0.0] + branch.protocol.breakpoints(t_max) + [t_max]
    state = np.array([1.0, 0.0, 0.0, 1.0])
    out = np.empty((t.size, 4))
    stats = {"accepted": 0, "rejected": 0}
    for k, (a, b) in enumerate(zip(edges[:-1], edges[1:])):
        last = k == len(edges) - 2
        sel = (t >= a) & ((t <= b) if last else (t < b))
        samples, st = dopri5(rhs, (a, b), state, np.append(t[sel], b), rtol=rtol, atol=atol)
        out[sel] = samples[:-1]
        state = samples[-1]
        stats["accepted"] += st["accepted"]
        stats["rejected"] += st["rejected"]
    return ClassicalPair(t, out[:, 0], out[:, 1], out[:, 2], out[:, 3], stats)


def pinney_lambda(pair: ClassicalPair, omega0):
    """Scaling factor and its time derivative from the classical pair."""
    lam = np.sqrt(pair.u**2 + omega0**2 * pair.v**2)
    dlam = (pair.u * pair.du + omega0**2 * pair.v * pair.dv) / lam
    return lam, dlam


def ermakov_residual(pair: ClassicalPair, omega0, omega2_t):
    """Pointwise ``lambda^3 lambda'' + omega^2(t) lambda^4 - omega0^2``.

    ``lambda''`` is obtained by differentiating ``u^2 + omega0^2 v^2`` twice
    and eliminating ``u''``, ``v''`` through the equation of motion.
    """
    lam, dlam = pinney_lambda(pair, omega0)
    kinetic = pair.du**2 + omega0**2 * pair.dv**2
    ddlam = (kinetic - omega2_t * lam**2 - dlam**2) / lam
    return lam**3 * ddlam + omega2_t * lam**4 - omega0**2


@dataclass(frozen=True, eq=False)
class BranchResult:
    branch: BranchSpec
    pair: ClassicalPair
    lam: np.ndarray
    dlam: np.ndarray

    @property
    def omega0(self):
        return self.branch.omega0

    @property
    def wronskian_drift(self):
        return float(np.max(np.abs(self.pair.wronskian - 1.0)))

    @property
    def ermakov_residual(self):
        """Max |residual| relative to omega_xi(0)^2."""
        r = ermakov_residual(self.pair, self.omega0, self.branch.omega2(self.pair.t))
        return float(np.max(np.abs(r)) / self.omega0**2)


def solve_branch(branch, **kwargs) -> BranchResult:
    pair = integrate_classical_pair(branch, **kwargs)
    lam, dlam = pinney_lambda(pair, branch.omega0)
    return BranchResult(branch, pair, lam, dlam)


@dataclass(frozen=True, eq=False)
class EvolutionRecord:
    t: np.ndarray
    branches: dict
    omega_ref: float
    n_bath: int
    gamma: float | None = None

    @property
    def t_omega0(self):
        return self.t * self.omega_ref

    @property
    def variance(self):
        return variance_series(self)[0]

    def residuals(self):
        return {
            "max_wronskian_drift": max(b.wronskian_drift for b in self.branches.values()),
            "max_ermakov_residual": max(b.ermakov_residual for b in self.branches.values()),
        }


def variance_series(record: EvolutionRecord):
    """``(<z_I^2>, <Z^2>)`` in units of ``hbar / (m omega(0))``."""
    bx, by = record.branches["x"], record.branches["y"]
    if bx.pair.t.shape != by.pair.t.shape or not np.array_equal(bx.pair.t, by.pair.t):
        raise ValueError("branches were integrated on different time grids")
    w = record.omega_ref
    var_zi = 0.25 * (bx.lam**2 * w / bx.omega0 + by.lam**2 * w / by.omega0)
    return var_zi, var_zi / record.n_bath


@dataclass(frozen=True)
class QuenchScenario:
    """Impurity plus bath centre of mass with a common ramped trap.

    ``coupling`` is ``d_z sqrt(N) / m`` in the same units as the squared
    frequencies. The defaults are the ring-of-ions preset:
    ``omega^2(0) = 20 coupling`` and ``omega^2(t_f) = 2 coupling``.
    """

    coupling: float = 0.05
    omega2_init: float = 1.0
    omega2_final: float = 0.1
    n_bath: int = 10

    @classmethod
    def from_ratios(cls, initial_ratio=20.0, final_ratio=2.0, n_bath=10, omega0=1.0):
        coupling = omega0**2 / initial_ratio
        return cls(coupling, omega0**2, final_ratio * coupling, n_bath)

    @property
    def omega0(self):
        return math.sqrt(self.omega2_init)

    def protocol(self, gamma):
        if gamma is None or math.isinf(gamma):
            return FrequencyProtocol.sudden(self.omega2_init, self.omega2_final)
        return FrequencyProtocol.exp_ramp(self.omega2_init, gamma, self.omega2_final)

    def branches(self, protocol):
        return (BranchSpec("x", -self.coupling, protocol), BranchSpec("y", self.coupling, protocol))


def run_quench(scenario: QuenchScenario, gammas, t_max=DEFAULT_T_MAX, grid=DEFAULT_GRID,
               rtol=DEFAULT_RTOL, atol=DEFAULT_ATOL):
    """One EvolutionRecord per ramp speed; ``t_max`` is in units of 1/omega(0)."""
    out = {}
    t_phys = t_max / scenario.omega0
    for gamma in gammas:
        protocol = scenario.protocol(gamma)
        results = {
            b.label: solve_branch(b, t_max=t_phys, grid=grid, rtol=rtol, atol=atol)
            for b in scenario.branches(protocol)
        }
        t = results["x"].pair.t
        out[gamma] = EvolutionRecord(t, results, scenario.omega0, scenario.n_bath, gamma)
    return out


# -- closed forms ---------------------------------------------------------------

def sudden_variance(scenario: QuenchScenario, t, t_jump=0.0):
    """Impurity variance after an instantaneous jump at ``t_jump`` (frozen before)."""
    tt = np.clip(np.asarray(t, dtype=float) - t_jump, 0.0, None)
    total = 0.0
    for offset in (-scenario.coupling, scenario.coupling):
        w0 = math.sqrt(scenario.omega2_init + offset)
        wf = math.sqrt(scenario.omega2_final + offset)
        lam2 = np.cos(wf * tt) ** 2 + (w0 / wf) ** 2 * np.sin(wf * tt) ** 2
        total = total + 0.25 * lam2 * scenario.omega0 / w0
    return total


def sudden_envelope(scenario: QuenchScenario):
    """Upper bound of :func:`sudden_variance`: each branch at ``lambda^2 = w0^2/wf^2``."""
    total = 0.0
    for offset in (-scenario.coupling, scenario.coupling):
        w0 = math.sqrt(scenario.omega2_init + offset)
        wf = math.sqrt(scenario.omega2_final + offset)
        total += 0.25 * max(1.0, (w0 / wf) ** 2) * scenario.omega0 / w0
    return total


def adiabatic_variance(scenario: QuenchScenario, omega2=None):
    """Ground-state variance at squared frequency ``omega2`` (default: final)."""
    w2 = scenario.omega2_final if omega2 is None else omega2
    return 0.25 * scenario.omega0 * sum(
        1.0 / math.sqrt(w2 + off) for off in (-scenario.coupling, scenario.coupling)
    )


def bessel_closed_form_x(branch: BranchSpec, t):
    """Classical pair on the ramp segment through Bessel functions.

    On the ramp ``omega_xi^2 = A exp(-c t) - B``; with
    ``tau = (2 sqrt(A)/c) exp(-c t/2)`` the equation becomes Bessel's equation
    of real order ``nu = 2 sqrt(B)/c`` when ``B > 0``. Returns a ClassicalPair.
    """
    p = branch.protocol
    if p.kind != "exp_ramp":
        raise ValueError("closed form needs an exponential ramp")
    big_a, big_b, c = p.omega2_init, -branch.offset, p.rate
    if big_b <= 0:
        raise UnsupportedOrder(f"branch {branch.label}: B = {big_b:.6g} <= 0 gives imaginary order")
    t = np.asarray(t, dtype=float)
    if np.any(t > p.t_switch * (1 + 1e-12)) or np.any(t < 0):
        raise ValueError("closed form only holds on the ramp segment [0, t_switch]")
    nu = 2.0 * math.sqrt(big_b) / c
    tau0 = 2.0 * math.sqrt(big_a) / c
    tau = tau0 * np.exp(-0.5 * c * t)

    j0, y0 = special.jv(nu, tau0), special.yv(nu, tau0)
    dj0, dy0 = special.jvp(nu, tau0), special.yvp(nu, tau0)
    # d/dt = -(c/2) tau d/dtau; det of the initial-value system is -c/pi
    g0 = -0.5 * c * tau0
    det = -c / math.pi
    # (u, u') = (1, 0), (v, v') = (0, 1)
    a_u, b_u = g0 * dy0 / det, -g0 * dj0 / det
    a_v, b_v = -y0 / det, j0 / det

    j, y = special.jv(nu, tau), special.yv(nu, tau)
    g = -0.5 * c * tau
    dj, dy = g * special.jvp(nu, tau), g * special.yvp(nu, tau)
    return ClassicalPair(
        t,
        a_u * j + b_u * y, a_u * dj + b_u * dy,
        a_v * j + b_v * y, a_v * dj + b_v * dy,
        {"nu": nu, "tau0": tau0},
    )
