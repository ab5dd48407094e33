"""Polytropic ideal gas model and basic state types.

Pressure law p = R rho theta, internal energy e = R theta / (gamma - 1).
Viscosity and heat conduction are either constants or power laws in the
density. All thermodynamic helpers return the value together with the
partial derivatives the rest of the package needs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError

# hard positivity floor, below this the model is considered meaningless
_POSITIVITY_EPS = 0.0


@dataclass(frozen=True)
class PowerLaw:
    """Transport coefficient of the form coeff * rho**exponent.

    exponent 0 gives a constant coefficient with an exactly zero derivative.
    """

    coeff: float
    exponent: float = 0.0

    def __post_init__(self):
        if not (self.coeff > 0.0):
            raise DomainError(f"transport coefficient must be positive, got {self.coeff}")

    def __call__(self, rho: float) -> tuple[float, float]:
        """Return (value, d value / d rho) at the given density."""
        if self.exponent == 0.0:
            return self.coeff, 0.0
        val = self.coeff * rho ** self.exponent
        return val, self.exponent * val / rho


@dataclass(frozen=True)
class State:
    """Primitive state (density, velocity, temperature)."""

    rho: float
    v: float
    theta: float

    def __post_init__(self):
        if not (self.rho > _POSITIVITY_EPS) or not np.isfinite(self.rho):
            raise DomainError(f"density must be positive and finite, got {self.rho}")
        if not (self.theta > _POSITIVITY_EPS) or not np.isfinite(self.theta):
            raise DomainError(f"temperature must be positive and finite, got {self.theta}")
        if not np.isfinite(self.v):
            raise DomainError(f"velocity must be finite, got {self.v}")

    def to_array(self) -> np.ndarray:
        return np.array([self.rho, self.v, self.theta])


@dataclass(frozen=True)
class Gradient:
    """Spatial derivative (rho_x, v_x, theta_x) of a primitive state."""

    rho_x: float = 0.0
    v_x: float = 0.0
    theta_x: float = 0.0

    def to_array(self) -> np.ndarray:
        return np.array([self.rho_x, self.v_x, self.theta_x])


ZERO_GRADIENT = Gradient(0.0, 0.0, 0.0)


@dataclass(frozen=True)
class GasModel:
    """Polytropic ideal gas with power-law transport coefficients.

    R is the gas constant, gamma > 1 the adiabatic exponent. nu_law and
    k_law map density to (value, derivative). c_rho is the configured
    vacuum bound used by admissibility checks, states with rho < c_rho
    are treated as out of range by box checks.
    """

    R: float = 1.0
    gamma: float = 1.4
    nu_law: PowerLaw = field(default_factory=lambda: PowerLaw(1.0))
    k_law: PowerLaw = field(default_factory=lambda: PowerLaw(1.0))
    c_rho: float = 0.1

    def __post_init__(self):
        if not (self.R > 0.0):
            raise DomainError(f"gas constant must be positive, got {self.R}")
        if not (self.gamma > 1.0):
            raise DomainError(f"adiabatic exponent must exceed 1, got {self.gamma}")
        if not (self.c_rho > 0.0):
            raise DomainError(f"vacuum bound must be positive, got {self.c_rho}")


def pressure(gas: GasModel, rho: float, theta: float) -> tuple[float, float, float]:
    """Return (p, dp/drho, dp/dtheta) for the ideal gas law."""
    if not (rho > 0.0):
        raise DomainError(f"pressure needs rho > 0, got {rho}")
    if not (theta > 0.0):
        raise DomainError(f"pressure needs theta > 0, got {theta}")
    return gas.R * rho * theta, gas.R * theta, gas.R * rho


def internal_energy(gas: GasModel, theta: float) -> tuple[float, float]:
    """Return (e, de/dtheta); the polytropic energy is linear in theta."""
    if not (theta > 0.0):
        raise DomainError(f"internal energy needs theta > 0, got {theta}")
    e_theta = gas.R / (gas.gamma - 1.0)
    return e_theta * theta, e_theta


def sound_speed(gas: GasModel, state: State) -> float:
    """Adiabatic sound speed.

    Evaluated through the general expression
    c^2 = p_rho + theta * p_theta^2 / (rho^2 * e_theta), which collapses
    to sqrt(gamma R theta) for the ideal polytropic law.
    """
    p, p_rho, p_theta = pressure(gas, state.rho, state.theta)
    _, e_theta = internal_energy(gas, state.theta)
    c2 = p_rho + state.theta * p_theta ** 2 / (state.rho ** 2 * e_theta)
    return float(np.sqrt(c2))


def euler_fluxes(gas: GasModel, state: State) -> np.ndarray:
    """Inviscid fluxes (mass, momentum, total energy) of the state."""
    rho, v, theta = state.rho, state.v, state.theta
    p, _, _ = pressure(gas, rho, theta)
    e, _ = internal_energy(gas, theta)
    return np.array([
        rho * v,
        rho * v * v + p,
        v * (0.5 * rho * v * v + rho * e + p),
    ])


def conserved(gas: GasModel, state: State) -> np.ndarray:
    """Conserved densities (rho, rho v, rho e + rho v^2 / 2)."""
    rho, v, theta = state.rho, state.v, state.theta
    e, _ = internal_energy(gas, theta)
    return np.array([rho, rho * v, rho * e + 0.5 * rho * v * v])


@dataclass(frozen=True)
class Box:
    """Compact axis-aligned box of admissible states."""

    rho: tuple[float, float]
    v: tuple[float, float]
    theta: tuple[float, float]

    def validate(self, gas: GasModel) -> None:
        for name, (lo, hi) in (("rho", self.rho), ("v", self.v), ("theta", self.theta)):
            if not (lo <= hi):
                raise DomainError(f"box {name} range is empty: [{lo}, {hi}]")
        if self.rho[0] < gas.c_rho:
            raise DomainError(
                f"box density floor {self.rho[0]} is below the vacuum bound {gas.c_rho}"
            )
        if self.theta[0] <= 0.0:
            raise DomainError(f"box temperature floor must be positive, got {self.theta[0]}")

    def contains(self, state: State) -> bool:
        return (
            self.rho[0] <= state.rho <= self.rho[1]
            and self.v[0] <= state.v <= self.v[1]
            and self.theta[0] <= state.theta <= self.theta[1]
        )

    def midpoint(self) -> State:
        return State(
            0.5 * (self.rho[0] + self.rho[1]),
            0.5 * (self.v[0] + self.v[1]),
            0.5 * (self.theta[0] + self.theta[1]),
        )

    def sample(self, n: int, rng: np.random.Generator) -> list[State]:
        """Draw n states uniformly; deterministic for a seeded generator."""
        pts = rng.uniform(
            low=[self.rho[0], self.v[0], self.theta[0]],
            high=[self.rho[1], self.v[1], self.theta[1]],
            size=(n, 3),
        )
        return [State(*map(float, row)) for row in pts]
