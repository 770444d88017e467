"""Material constants and unit conversions (everything is stored in SI)."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

GPA = 1e9
MILLIDARCY = 9.869233e-16
CENTIPOISE = 1e-3


def lame_from_young_poisson(E: float, nu: float) -> tuple[float, float]:
    """Return (mu, lambda) in Pa for Young's modulus E [Pa] and Poisson ratio nu."""
    if E <= 0:
        raise ValueError(f"Young's modulus must be positive, got {E}")
    if not 0.0 <= nu < 0.5:
        raise ValueError(f"Poisson ratio must lie in [0, 0.5), got {nu}")
    mu = E / (2.0 * (1.0 + nu))
    lam = E * nu / ((1.0 + nu) * (1.0 - 2.0 * nu))
    return mu, lam


@dataclass(frozen=True)
class MaterialParams:
    mu: float  # Pa
    lam: float  # Pa
    alpha: float
    M: float  # Pa
    k: float  # m^2
    eta: float  # Pa s
    rho_f: float = 1000.0  # kg/m^3, inert while g = 0
    rho_b: float = 2000.0  # kg/m^3, inert while g = 0
    g: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self) -> None:
        checks = {
            "mu > 0": self.mu > 0,
            "lam >= 0": self.lam >= 0,
            "0 < alpha <= 1": 0 < self.alpha <= 1,
            "M > 0": self.M > 0,
            "k > 0": self.k > 0,
            "eta > 0": self.eta > 0,
        }
        failed = [name for name, ok in checks.items() if not ok]
        if failed:
            raise ValueError(f"invalid material parameters: {', '.join(failed)}")

    @classmethod
    def from_young_poisson(cls, E: float, nu: float, **kw) -> "MaterialParams":
        mu, lam = lame_from_young_poisson(E, nu)
        return cls(mu=mu, lam=lam, **kw)

    @property
    def gravity(self) -> np.ndarray:
        return np.asarray(self.g, dtype=float)
