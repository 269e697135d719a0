import json
import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from nvps.levelmodel import (
    LEVEL_NAMES,
    LevelModel,
    ModelValidationError,
    check,
    default_nv_model,
    derived_rates,
    validate,
)


def test_default_lifetimes_are_exact():
    m = default_nv_model()
    assert m.t1_ms0 == pytest.approx(12.0e-9, rel=1e-12)
    assert m.t1_ms1 == pytest.approx(7.8e-9, rel=1e-12)


def test_default_rates_from_shelving_share():
    # k_isc0 is 2 % of the mS=0 decay rate; the rest is radiative
    m = default_nv_model()
    assert m.k_isc0 == pytest.approx(0.02 / 12e-9)
    assert m.k_radiative == pytest.approx(0.98 / 12e-9)
    assert m.k_isc1 == pytest.approx(1 / 7.8e-9 - 0.98 / 12e-9)
    assert m.k_singlet == pytest.approx(1 / 300e-9)


def test_isc_difference_matches_lifetimes():
    d = derived_rates(default_nv_model())
    assert d.delta_k_isc == pytest.approx(1 / 7.8e-9 - 1 / 12e-9, rel=1e-12)
    assert d.delta_k_isc == pytest.approx(4.487e7, rel=1e-3)


@pytest.mark.parametrize("t1", [5e-9, 12e-9, 29.7e-9])
def test_equal_lifetimes_give_equal_isc_rates(t1):
    m = check(default_nv_model(t1_ms0=t1, t1_ms1=t1, isc0_fraction=0.2968))
    assert m.k_isc1 == m.k_isc0
    assert derived_rates(m).delta_k_isc == 0.0


def test_photon_yield_ratio_is_lifetime_ratio():
    d = derived_rates(default_nv_model())
    assert d.branching_photons_ms0 / d.branching_photons_ms1 == pytest.approx(12 / 7.8)


def test_json_round_trip():
    m = default_nv_model(singlet_branching=(0.7, 0.2, 0.1))
    back = LevelModel.from_json(m.to_json())
    assert back == m
    assert json.loads(m.to_json())["levels"] == list(LEVEL_NAMES)


def test_from_dict_rejects_unknown_and_wrong_levels():
    d = default_nv_model().to_dict()
    with pytest.raises(ValueError, match="unknown"):
        LevelModel.from_dict({**d, "k_bogus": 1.0})
    with pytest.raises(ValueError, match="levels"):
        LevelModel.from_dict({**d, "levels": ["a"]})


@pytest.mark.parametrize(
    "override, field",
    [
        ({"k_radiative": 0.0}, "k_radiative"),
        ({"k_isc0": -1.0}, "k_isc0"),
        ({"singlet_branching": (0.5, 0.5, 0.5)}, "singlet_branching"),
        ({"k_isc1": 1.0}, "k_isc1"),
        ({"k_singlet": math.nan}, "k_singlet"),
    ],
)
def test_validation_names_the_field(override, field):
    m = default_nv_model().with_overrides(**override)
    fields = [f for f, _ in validate(m)]
    assert field in fields
    with pytest.raises(ModelValidationError) as exc:
        check(m)
    assert any(f == field for f, _ in exc.value.violations)


@given(
    t0=st.floats(5e-9, 30e-9),
    ratio=st.floats(0.3, 0.99),
    frac=st.floats(0.0, 0.2),
)
def test_builder_reproduces_requested_lifetimes(t0, ratio, frac):
    t1 = t0 * ratio
    m = default_nv_model(t1_ms0=t0, t1_ms1=t1, isc0_fraction=frac)
    assert m.t1_ms0 == pytest.approx(t0, rel=1e-12)
    assert m.t1_ms1 == pytest.approx(t1, rel=1e-12)
    assert validate(m) == []
