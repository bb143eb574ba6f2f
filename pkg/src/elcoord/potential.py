"""Link-energy potential for connectivity maintenance.

Each communication link (i, j) carries the energy

    psi(d^2) = d^2 / (r^2 - d^2 + Q),    d = ||x_i - x_j||,

which is zero at coincidence, strictly increasing, and finite (= r^2/Q) at
the communication radius r. Q > 0 shapes the steepness: small Q makes the
potential stiff near the radius. All derivative bookkeeping is done in the
squared distance s = d^2, which keeps gradients free of square roots.

Distances beyond r are a domain error (`OutOfDomain`), not a clamp: a link
that long has broken, and that is an event for the caller to handle.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import OutOfDomain

__all__ = [
    "PotentialSpec",
    "psi",
    "psi_prime",
    "psi_dprime",
    "grad_i",
    "hessian",
    "sigma",
    "nu",
    "psi_at_r",
]


@dataclass(frozen=True)
class PotentialSpec:
    """Communication radius r (m) and shape constant Q (m^2)."""

    r: float
    Q: float

    def __post_init__(self):
        if not (self.r > 0.0):
            raise ValueError(f"radius must be positive, got r={self.r}")
        if not (self.Q > 0.0):
            raise ValueError(f"shape constant must be positive, got Q={self.Q}")


def _check_domain(d_sq, spec: PotentialSpec):
    r_sq = spec.r * spec.r
    if np.any(d_sq < 0.0):
        raise ValueError("squared distance cannot be negative")
    # Tiny slack for round-off when callers compute d_sq from positions that
    # sit exactly on the radius.
    if np.any(d_sq > r_sq * (1.0 + 1e-12)):
        raise OutOfDomain(
            f"squared distance {np.max(d_sq):.6g} exceeds r^2 = {r_sq:.6g}"
        )


def psi(d_sq, spec: PotentialSpec):
    """Link energy at squared distance d_sq. Scalar or array."""
    _check_domain(d_sq, spec)
    r_sq = spec.r * spec.r
    return d_sq / (r_sq - d_sq + spec.Q)


def psi_prime(d_sq, spec: PotentialSpec):
    """d psi / d (d^2). Positive and increasing on [0, r^2]."""
    _check_domain(d_sq, spec)
    a = spec.r * spec.r + spec.Q
    den = a - d_sq
    return a / (den * den)


def psi_dprime(d_sq, spec: PotentialSpec):
    """Second derivative of psi with respect to squared distance."""
    _check_domain(d_sq, spec)
    a = spec.r * spec.r + spec.Q
    den = a - d_sq
    return 2.0 * a / (den * den * den)


def grad_i(x_i, x_j, spec: PotentialSpec):
    """Gradient of the link energy with respect to x_i.

    Equals 2 psi'(d^2) (x_i - x_j); antisymmetric under swapping the
    endpoints, so grad_i(a, b) == -grad_i(b, a).
    """
    x_i = np.asarray(x_i, dtype=float)
    x_j = np.asarray(x_j, dtype=float)
    diff = x_i - x_j
    d_sq = float(diff @ diff)
    return 2.0 * psi_prime(d_sq, spec) * diff


def hessian(x_ij, spec: PotentialSpec):
    """Hessian of the link energy with respect to x_i, as a function of the
    separation vector x_ij = x_i - x_j.

    Closed form 2 psi' I + 4 psi'' x_ij x_ij^T; positive definite on the
    domain and bounded above by nu(spec) * I.
    """
    x_ij = np.asarray(x_ij, dtype=float)
    d_sq = float(x_ij @ x_ij)
    p1 = psi_prime(d_sq, spec)
    p2 = psi_dprime(d_sq, spec)
    return 2.0 * p1 * np.eye(2) + 4.0 * p2 * np.outer(x_ij, x_ij)


def sigma(spec: PotentialSpec) -> float:
    """Supremum of psi' over the domain, attained at d = r."""
    a = spec.r * spec.r + spec.Q
    return a / (spec.Q * spec.Q)


def nu(spec: PotentialSpec) -> float:
    """Upper bound on the Hessian eigenvalues over the domain.

    The largest eigenvalue 2 psi'(s) + 4 s psi''(s) is increasing in s, so
    the supremum sits at s = r^2.
    """
    r_sq = spec.r * spec.r
    a = r_sq + spec.Q
    q = spec.Q
    return 2.0 * a / (q * q) + 8.0 * r_sq * a / (q * q * q)


def psi_at_r(spec: PotentialSpec) -> float:
    """Energy level of a link stretched to the radius: psi(r^2) = r^2 / Q."""
    return spec.r * spec.r / spec.Q
