"""Catalog of fixed-stress tuning parameters K_dr."""
from __future__ import annotations

import enum
from dataclasses import dataclass


class TuningVariant(enum.Enum):
    OneD = "1d"
    TwoD = "2d"
    ThreeD = "3d"
    TwoLambda = "2lambda"
    TwoTimesDD = "2xdd"
    Explicit = "explicit"


_DIM = {TuningVariant.OneD: 1, TuningVariant.TwoD: 2, TuningVariant.ThreeD: 3}


def bulk_modulus(mu: float, lam: float, d: int) -> float:
    """Drained bulk modulus of a d-dimensional material, 2 mu / d + lambda."""
    if d not in (1, 2, 3):
        raise ValueError(f"dimension must be 1, 2 or 3, got {d}")
    return 2.0 * mu / d + lam


@dataclass(frozen=True)
class TuningSpec:
    """K_dr = omega * base, where the base is picked from the catalog.

    ``dimension`` is only read by ``TwoTimesDD``; ``value`` only by ``Explicit``.
    """

    variant: TuningVariant
    omega: float = 1.0
    dimension: int = 2
    value: float | None = None

    def resolve(self, mu: float, lam: float) -> float:
        return resolve_kdr(self, mu, lam)


def resolve_kdr(spec: TuningSpec, mu: float, lam: float) -> float:
    v = spec.variant
    if v in _DIM:
        base = bulk_modulus(mu, lam, _DIM[v])
    elif v is TuningVariant.TwoLambda:
        base = 2.0 * lam
    elif v is TuningVariant.TwoTimesDD:
        base = 2.0 * bulk_modulus(mu, lam, spec.dimension)
    elif v is TuningVariant.Explicit:
        if spec.value is None:
            raise ValueError("explicit tuning needs a value")
        base = spec.value
    else:  # pragma: no cover
        raise ValueError(f"unknown tuning variant {v}")
    kdr = spec.omega * base
    if not kdr > 0:
        raise ValueError(f"K_dr must be positive, resolved {kdr} for {spec}")
    return kdr
