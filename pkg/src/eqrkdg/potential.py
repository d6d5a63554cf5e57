"""Nonlinear potentials, the quadratization kernel H, and manufactured solutions."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

DEFAULT_C0 = 1e3


@dataclass(frozen=True)
class Potential:
    """Bulk potential ``phi`` with derivative ``dphi`` and shift ``C0``.

    ``a`` is the physical parameter of the operator ``-(Laplacian + a)``.
    """

    name: str
    phi: Callable[[np.ndarray], np.ndarray]
    dphi: Callable[[np.ndarray], np.ndarray]
    C0: float = DEFAULT_C0
    a: float = 1.0
    params: dict = field(default_factory=dict)

    def radicand(self, w):
        r = self.phi(w) + self.C0
        ok = np.asarray(r > 0)
        if not ok.all():
            bad = np.broadcast_to(np.asarray(w), ok.shape)[~ok]
            raise ValueError(f"phi(w) + C0 <= 0 at w = {np.ravel(bad)[:3]} with C0 = {self.C0}")
        return r

    def H(self, w):
        """``phi'(w) / sqrt(phi(w) + C0)``."""
        return self.dphi(w) / np.sqrt(self.radicand(w))

    def sqrt_shifted(self, w):
        """``sqrt(phi(w) + C0)``, the pointwise auxiliary variable."""
        return np.sqrt(self.radicand(w))


def swift_hohenberg(eps: float, g: float = 0.0, C0: float = DEFAULT_C0) -> Potential:
    """``phi(u) = -eps/2 u^2 - g/3 u^3 + u^4/4`` with ``a = 1``."""
    eps, g = float(eps), float(g)
    def phi(u):
        u2 = u * u
        return u2 * (-0.5 * eps + u * (-g / 3.0 + 0.25 * u))

    def dphi(u):
        return u * (-eps + u * (u - g))

    return Potential(
        "swift-hohenberg", phi, dphi,
        C0=float(C0), a=1.0, params=dict(epsilon=eps, g=g),
    )


def sh_minima(eps: float, g: float) -> tuple[float, float, float]:
    """Stationary points ``u_-, u_+`` of the Swift-Hohenberg potential and
    ``b = -min(phi(u_-), phi(u_+))``."""
    if eps <= 0 or g < 0:
        raise ValueError("requires eps > 0 and g >= 0")
    root = np.sqrt(g * g + 4 * eps)
    um, up = (g - root) / 2, (g + root) / 2

    def low(v):
        return -(g * v * (g * g + 4 * eps) + eps * (g * g + 3 * eps)) / 12.0

    return float(um), float(up), float(-min(low(um), low(up)))


def potential_by_name(name: str, eps: float = 0.0, g: float = 0.0, C0: float = DEFAULT_C0) -> Potential:
    if name in ("swift-hohenberg", "sh"):
        return swift_hohenberg(eps, g, C0)
    raise ValueError(f"unknown potential {name!r}")


@dataclass(frozen=True)
class ManufacturedSolution:
    """``u = exp(-rate t) prod_d sin(kappa x_d)`` driven by the source ``phi'(u)``.

    The product of sines is an eigenfunction of ``-(Laplacian + a)`` with
    eigenvalue ``mu = dim kappa^2 - a``, so it solves the linear part with
    ``rate = mu^2``; adding ``phi'(u)`` as a source cancels the nonlinearity.
    """

    kappa: float
    potential: Potential
    dim: int = 2
    name: str = "custom"

    @property
    def rate(self) -> float:
        return (self.dim * self.kappa ** 2 - self.potential.a) ** 2

    def _space(self, x):
        out = np.sin(self.kappa * x[..., 0])
        for d in range(1, self.dim):
            out = out * np.sin(self.kappa * x[..., d])
        return out

    def exact(self, x: np.ndarray, t: float) -> np.ndarray:
        return np.exp(-self.rate * t) * self._space(x)

    def initial(self, x: np.ndarray) -> np.ndarray:
        return self._space(x)

    def source(self, x: np.ndarray, t: float) -> np.ndarray:
        return self.potential.dphi(self.exact(x, t))


#: named smooth solutions: (kappa, default domain half-width)
MANUFACTURED = {
    "sin-half": (0.5, 2 * np.pi),
    "sin-quarter": (0.25, 4 * np.pi),
}


def manufactured_source(eps: float, g: float, exact: str, dim: int = 2,
                        C0: float = DEFAULT_C0) -> ManufacturedSolution:
    """Manufactured Swift-Hohenberg problem by name.

    ``sin-half``: ``exp(-t/4) sin(x/2) sin(y/2)`` on ``[-2pi, 2pi]^2``;
    ``sin-quarter``: ``exp(-49t/64) sin(x/4) sin(y/4)`` on ``[-4pi, 4pi]^2``.
    """
    try:
        kappa, _ = MANUFACTURED[exact]
    except KeyError:
        raise ValueError(f"unknown manufactured solution {exact!r}; known: {sorted(MANUFACTURED)}") from None
    return ManufacturedSolution(kappa, swift_hohenberg(eps, g, C0), dim, exact)


def manufactured_domain(exact: str, dim: int = 2) -> list[tuple[float, float]]:
    half = MANUFACTURED[exact][1]
    return [(-half, half)] * dim
