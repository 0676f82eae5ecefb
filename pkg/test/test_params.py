import pytest

from rexdesign import params
from rexdesign.criteria import Criterion
from rexdesign.solvers import Algorithm


class MockParamEnum(params.ParamEnum):
    first = 1
    second = 2


def test_getting_good_param():
    """Test that a correct parameter is successfully retrieved"""
    param = "second"
    result = MockParamEnum.get_option(param)
    assert result == MockParamEnum.second


def test_getting_param_is_case_insensitive():
    """Test that parameters are matched regardless of case"""
    assert MockParamEnum.get_option("FIRST") == MockParamEnum.first
    assert Criterion.get_option("d") is Criterion.D
    assert Algorithm.get_option("REX") is Algorithm.REX


def test_getting_member_passes_through():
    """Test that an enum member is returned unchanged"""
    assert Criterion.get_option(Criterion.A) is Criterion.A


def test_getting_bad_param():
    """Test that an incorrect parameter throws an error listing the valid names"""
    param = "lobster"

    with pytest.raises(ValueError, match="first"):
        MockParamEnum.get_option(param)


def test_bad_param_suggests_closest():
    """Test that the error for a misspelled parameter suggests the closest option"""
    with pytest.raises(ValueError, match="Did you mean 'vem'"):
        Algorithm.get_option("vm")


def test_closest_param_with_close():
    """Test that the correct closest parameter is identified"""
    param = "seqonde"
    result = MockParamEnum._get_closest_option(param)
    assert result == "second"


def test_closest_param_without_close():
    """Test that nothing is returned when there is no close parameter"""
    param = "dfjalksjfalekjf"
    result = MockParamEnum._get_closest_option(param)
    assert result is None
