"""Finite-range repulsive pair potential for the scaled chain.

The potential acts on the scaled separation xi = |q_j - q_k| / eps and
vanishes smoothly at the cutoff x_star:

    U(xi)  = c_r * (xi^(1-p) * x_star / (1-p) - xi * x_star^(1-p)
             + p/(p-1) * x_star^(2-p))          for 0 < xi <= x_star,
    U(xi)  = 0                                  for xi > x_star,
    U'(xi) = c_r * (x_star * xi^(-p) - x_star^(1-p)),  U'(x_star) = 0.

U' >= 0 inside the cutoff; the pair force sign(q_j - q_k) * U'(...) is
purely repulsive.  Note U itself is negative inside the cutoff; the chain
potential energy used for conservation bookkeeping is -eps * sum U (see
``chain.total_energy``), the unique choice under which the equations of
motion conserve energy.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import PotentialDomainError


@dataclass(frozen=True)
class PowerLawPotential:
    """Repulsive power-law potential with finite range.

    c_r: dimensionless stiffness (> 0)
    p: exponent (> 1)
    x_star: cutoff of the scaled argument, alpha * L with alpha ~ 1
    """

    c_r: float = 100.0
    p: float = 2.0
    x_star: float = 1.0

    def __post_init__(self):
        if self.c_r <= 0:
            raise ValueError(f"stiffness must be positive, got {self.c_r}")
        if self.p <= 1:
            raise ValueError(f"exponent must exceed 1, got {self.p}")
        if self.x_star <= 0:
            raise ValueError(f"cutoff must be positive, got {self.x_star}")

    def energy(self, xi):
        """U(xi); accepts scalars or arrays, zero beyond the cutoff."""
        xi_arr = np.asarray(xi, dtype=float)
        if np.any(xi_arr <= 0.0):
            raise PotentialDomainError("potential diverges at nonpositive separation")
        c, p, xs = self.c_r, self.p, self.x_star
        inside = xi_arr <= xs
        safe = np.where(inside, xi_arr, xs)
        val = c * (
            safe ** (1.0 - p) * xs / (1.0 - p)
            - safe * xs ** (1.0 - p)
            + p / (p - 1.0) * xs ** (2.0 - p)
        )
        out = np.where(inside, val, 0.0)
        return out if out.ndim else float(out)

    def gradient(self, xi):
        """U'(xi) = c_r (x_star xi^-p - x_star^(1-p)); >= 0, zero beyond cutoff."""
        xi_arr = np.asarray(xi, dtype=float)
        if np.any(xi_arr <= 0.0):
            raise PotentialDomainError("force diverges at nonpositive separation")
        c, p, xs = self.c_r, self.p, self.x_star
        inside = xi_arr <= xs
        safe = np.where(inside, xi_arr, xs)
        if p == 2.0:  # same expression as the compiled force kernel
            val = c * (xs / (safe * safe) - 1.0 / xs)
        else:
            val = c * (xs * safe ** (-p) - xs ** (1.0 - p))
        out = np.where(inside, np.maximum(val, 0.0), 0.0)
        return out if out.ndim else float(out)

    def curvature(self, xi):
        """U''(xi) = -p c_r x_star xi^-(p+1); <= 0, zero beyond cutoff."""
        xi_arr = np.asarray(xi, dtype=float)
        if np.any(xi_arr <= 0.0):
            raise PotentialDomainError("curvature undefined at nonpositive separation")
        c, p, xs = self.c_r, self.p, self.x_star
        inside = xi_arr <= xs
        safe = np.where(inside, xi_arr, xs)
        out = np.where(inside, -p * c * xs * safe ** (-(p + 1.0)), 0.0)
        return out if out.ndim else float(out)


def potential_energy_scalar(pot: PowerLawPotential, xi: float) -> float:
    """U(xi) for a single positive separation."""
    return pot.energy(float(xi))


def force_magnitude(pot: PowerLawPotential, xi: float) -> float:
    """U'(xi) for a single positive separation; always >= 0."""
    return pot.gradient(float(xi))
