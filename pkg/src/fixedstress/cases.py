"""The four L-shape test cases: materials, loading and boundary conditions."""
from __future__ import annotations

import enum
from dataclasses import dataclass, replace

from .materials import CENTIPOISE, GPA, MILLIDARCY, MaterialParams
from .mesh import BoundaryTag
from .tuning import TuningVariant

DT = 0.01
T_END = 0.5
NU_VALUES = (0.01, 0.1, 0.2, 0.3, 0.4, 0.49)
K_VALUES_MD = (0.1, 1.0, 10.0, 100.0, 1000.0)


class CaseId(enum.Enum):
    T1a = "1a"
    T1b = "1b"
    T1c = "1c"
    T2 = "2"


class BCSet(enum.Enum):
    CutClamped = "cut_clamped"
    CutTraction = "cut_traction"


@dataclass(frozen=True)
class BoundaryCondition:
    """Mechanical and flow condition on one boundary segment.

    ``fixed`` lists the displacement components held at zero; all other
    components carry zero traction unless ``loaded`` marks the top load.
    ``flow`` is ``"pressure"`` (p = 0) or ``"no_flow"`` (q.n = 0).
    """

    fixed: tuple[int, ...]
    loaded: bool
    flow: str


@dataclass(frozen=True)
class CaseSpec:
    id: CaseId
    params: MaterialParams
    E: float
    nu: float
    h_max: float  # Pa
    bc_set: BCSet
    sweep_base: TuningVariant
    variation_axis: str  # "nu", or "k" in millidarcy
    variation: tuple[float, ...]
    variation_value: float

    def traction(self, t: float) -> float:
        """Vertical traction on the top boundary [Pa]; the load vanishes at t = 0 and 0.5."""
        return -self.h_max * 256.0 * t**2 * (t - 0.5) ** 2


_BASE = dict(alpha=0.9, M=100 * GPA, k=100 * MILLIDARCY, eta=1 * CENTIPOISE)

_TABLE = {
    CaseId.T1a: dict(E=100 * GPA, h_max=10 * GPA, bc=BCSet.CutClamped, base=TuningVariant.OneD,
                     axis="nu", values=NU_VALUES),
    CaseId.T1b: dict(E=1 * GPA, h_max=0.1 * GPA, bc=BCSet.CutClamped, base=TuningVariant.OneD,
                     axis="nu", values=NU_VALUES),
    CaseId.T1c: dict(E=1 * GPA, h_max=0.1 * GPA, bc=BCSet.CutClamped, base=TuningVariant.OneD,
                     axis="k", values=K_VALUES_MD, nu=0.01),
    CaseId.T2: dict(E=100 * GPA, h_max=10 * GPA, bc=BCSet.CutTraction, base=TuningVariant.TwoD,
                    axis="nu", values=NU_VALUES),
}


def parse_case_id(raw: str | CaseId) -> CaseId:
    if isinstance(raw, CaseId):
        return raw
    try:
        return CaseId(str(raw).strip().lower().removeprefix("t"))
    except ValueError:
        valid = ", ".join(c.value for c in CaseId)
        raise ValueError(f"unknown case id {raw!r}; valid ids: {valid}") from None


def make_case(case_id: str | CaseId, **overrides: float) -> CaseSpec:
    """Build a fully resolved case.

    The only accepted override is the case's variation axis: ``nu`` for
    1a/1b/2 and ``k`` (in millidarcy) for 1c.  Without an override the first
    value of the variation list is used.
    """
    cid = parse_case_id(case_id)
    row = _TABLE[cid]
    axis = row["axis"]
    unknown = set(overrides) - {axis}
    if unknown:
        raise ValueError(
            f"case {cid.value} varies only {axis!r}; cannot override {sorted(unknown)}"
        )
    value = float(overrides.get(axis, row["values"][0]))
    nu = value if axis == "nu" else row["nu"]
    material = dict(_BASE)
    if axis == "k":
        if value <= 0:
            raise ValueError(f"permeability must be positive, got {value} mD")
        material["k"] = value * MILLIDARCY
    params = MaterialParams.from_young_poisson(row["E"], nu, **material)
    return CaseSpec(
        id=cid,
        params=params,
        E=row["E"],
        nu=nu,
        h_max=row["h_max"],
        bc_set=row["bc"],
        sweep_base=row["base"],
        variation_axis=axis,
        variation=tuple(row["values"]),
        variation_value=value,
    )


def with_variation(case: CaseSpec, value: float) -> CaseSpec:
    return make_case(case.id, **{case.variation_axis: value})


def bc_table(case: CaseSpec) -> dict[BoundaryTag, BoundaryCondition]:
    cut_clamped = case.bc_set is BCSet.CutClamped
    return {
        BoundaryTag.Top: BoundaryCondition(fixed=(), loaded=True, flow="pressure"),
        BoundaryTag.Left: BoundaryCondition(fixed=(0,), loaded=False, flow="no_flow"),
        BoundaryTag.Bottom: BoundaryCondition(fixed=(1,), loaded=False, flow="no_flow"),
        BoundaryTag.LowerRight: BoundaryCondition(fixed=(), loaded=False, flow="no_flow"),
        BoundaryTag.CutVertical: BoundaryCondition(
            fixed=(0,) if cut_clamped else (), loaded=False, flow="no_flow"
        ),
        BoundaryTag.CutHorizontal: BoundaryCondition(
            fixed=(1,) if cut_clamped else (), loaded=False, flow="no_flow"
        ),
    }


def replace_params(case: CaseSpec, **changes: float) -> CaseSpec:
    """Copy of ``case`` with some material constants swapped (for experiments)."""
    return replace(case, params=replace(case.params, **changes))
