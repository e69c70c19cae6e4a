import pytest

from decision_table import LITERAL_CASES, all_cases, expected_condition
from mcclt.conditions import HOLDS, NOT_ESTABLISHED, DriftInfo, clt_condition_check


def test_reversible_geometric_example():
    v = clt_condition_check("geometric", detailed_balance=True, f_moments="2")
    assert v.condition == "5" and v.conclusion == HOLDS and v.holds


def test_polynomial_order_one_not_established():
    v = clt_condition_check("polynomial", order_m=1, E_pi_M_finite=True, f_moments="bounded")
    assert v.condition is None and v.conclusion == NOT_ESTABLISHED


def test_polynomial_order_three_example():
    v = clt_condition_check("polynomial", order_m=3, E_pi_M_finite=True, f_moments="2+delta", delta=2)
    assert v.condition == "2" and v.holds


def test_never_concludes_no_clt():
    for case in all_cases():
        assert clt_condition_check(*case).conclusion in (HOLDS, NOT_ESTABLISHED)


@pytest.mark.parametrize("case,expect", LITERAL_CASES)
def test_literal_rows(case, expect):
    assert clt_condition_check(*case).condition == expect
    assert expected_condition(*case) == expect


def test_exhaustive_table():
    cases = list(all_cases())
    assert len(cases) >= 200
    seen = set()
    for case in cases:
        got = clt_condition_check(*case).condition
        assert got == expected_condition(*case), case
        seen.add(got)
    assert seen == {"1", "2", "3", "4", "5", "6", "T1.1", "T1.2", None}


def test_input_validation():
    with pytest.raises(ValueError):
        clt_condition_check("geometric", f_moments="2+delta")
    with pytest.raises(ValueError):
        clt_condition_check("exotic")
    with pytest.raises(ValueError):
        DriftInfo("polynomial", tau=1.0)
    assert DriftInfo("polynomial", tau=0.25).eta == 0.75


def test_verdict_is_serializable():
    import json
    v = clt_condition_check("uniform", f_moments="2", drift_info=DriftInfo("geometric", True))
    assert json.loads(json.dumps(v.to_dict()))["condition"] == "6"
