import pytest

from fixedstress.cases import (
    BCSet,
    CaseId,
    K_VALUES_MD,
    NU_VALUES,
    bc_table,
    make_case,
    parse_case_id,
    with_variation,
)
from fixedstress.materials import GPA, MILLIDARCY
from fixedstress.mesh import BoundaryTag
from fixedstress.tuning import TuningVariant


def test_case_1a_defaults():
    c = make_case("1a")
    assert c.E == 100 * GPA and c.h_max == 10 * GPA
    assert c.nu == 0.01
    assert c.bc_set is BCSet.CutClamped and c.sweep_base is TuningVariant.OneD
    assert c.variation == NU_VALUES
    assert c.params.alpha == 0.9 and c.params.M == 100 * GPA
    assert c.params.k == pytest.approx(100 * 9.869233e-16)
    assert c.params.eta == 1e-3


def test_case_1b_soft():
    c = make_case("1b", nu=0.49)
    assert c.E == 1 * GPA and c.h_max == 0.1 * GPA and c.nu == 0.49


def test_case_1c_permeability_in_si():
    c = make_case("1c", k=0.1)
    assert c.nu == 0.01 and c.variation == K_VALUES_MD
    assert c.params.k == pytest.approx(9.869233e-17, rel=1e-12)
    assert MILLIDARCY == 9.869233e-16


def test_case_2_uses_traction_on_cut_and_2d_base():
    c = make_case("2")
    assert c.bc_set is BCSet.CutTraction and c.sweep_base is TuningVariant.TwoD
    assert c.E == make_case("1a").E


@pytest.mark.parametrize("case_id, kw", [("1a", {"k": 1.0}), ("1c", {"nu": 0.3}), ("2", {"E": 1.0})])
def test_rejects_foreign_override(case_id, kw):
    with pytest.raises(ValueError, match="varies only"):
        make_case(case_id, **kw)


def test_rejects_invalid_values():
    with pytest.raises(ValueError):
        make_case("1a", nu=0.5)
    with pytest.raises(ValueError):
        make_case("1c", k=0.0)


@pytest.mark.parametrize("raw, cid", [("1a", CaseId.T1a), ("T1b", CaseId.T1b), (" 2 ", CaseId.T2), (CaseId.T1c, CaseId.T1c)])
def test_parse_case_id(raw, cid):
    assert parse_case_id(raw) is cid


def test_parse_case_id_lists_valid_ids():
    with pytest.raises(ValueError, match="1a, 1b, 1c, 2"):
        parse_case_id("9")


def test_traction_profile():
    c = make_case("1a")
    assert c.traction(0.0) == 0.0 and c.traction(0.5) == 0.0
    assert c.traction(0.25) == pytest.approx(-c.h_max)
    assert c.traction(0.1) == pytest.approx(c.traction(0.4), rel=1e-14)


def test_bc_table():
    clamped = bc_table(make_case("1a"))
    free = bc_table(make_case("2"))
    assert clamped[BoundaryTag.CutVertical].fixed == (0,)
    assert clamped[BoundaryTag.CutHorizontal].fixed == (1,)
    assert free[BoundaryTag.CutVertical].fixed == () and free[BoundaryTag.CutHorizontal].fixed == ()
    for table in (clamped, free):
        assert table[BoundaryTag.Top].loaded and table[BoundaryTag.Top].flow == "pressure"
        assert table[BoundaryTag.Left].fixed == (0,) and table[BoundaryTag.Bottom].fixed == (1,)
        assert sum(bc.flow == "no_flow" for bc in table.values()) == 5


def test_with_variation():
    c = with_variation(make_case("1c"), 1000.0)
    assert c.variation_value == 1000.0 and c.params.k == pytest.approx(1000 * MILLIDARCY)
