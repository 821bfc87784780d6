import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ttpcnet.protocols import (
    ASSISTED,
    GainPair,
    OpticalStep,
    ProtocolId,
    ProtocolSpec,
    Term,
    ab_snl_crossing,
    all_specs,
    closed_form_spectra,
    engine_spectra,
    minimize_gain,
    noise_ab_two_controllers,
    noise_ac_two_controllers,
    optimal_gains,
    optimal_gains_ab,
    optimal_gains_ac,
    protocol_spec,
    spectra_ab_one_controller,
    spectra_ab_two_controllers,
    spectra_ab_unassisted,
    spectra_ac_one_controller,
    spectra_ac_two_controllers,
    spectra_ac_unassisted,
)
from ttpcnet.source import build_ttpc

R_GRID = [0.0, 0.1, 0.3, 0.5, 1.0, 1.7, 2.0, 3.0]


def r_of_s(s):
    return -0.5 * math.log(s)


# ---------------------------------------------------------------- closed forms


def test_ab_unassisted():
    assert spectra_ab_unassisted(0.0).noise_plus == pytest.approx(1.0, abs=1e-15)
    # cosh 2r - sinh 2r / sqrt 2 at r = 1
    rep = spectra_ab_unassisted(1.0)
    assert rep.noise_plus == pytest.approx(1.197618102277997, abs=1e-12)
    assert rep.noise_minus == rep.noise_plus
    assert rep.signal_gain_plus == rep.signal_gain_minus == 0.5


def test_ab_unassisted_crossing():
    s = 3 - 2 * math.sqrt(2)
    assert spectra_ab_unassisted(r_of_s(s)).noise_plus == pytest.approx(1.0, abs=1e-12)
    assert ab_snl_crossing() == pytest.approx(s, abs=1e-12)


def test_ac_unassisted():
    assert spectra_ac_unassisted(0.0).noise_plus == 1.0
    assert spectra_ac_unassisted(1.0).noise_plus == pytest.approx(3.7621956910836314, abs=1e-12)


@given(st.floats(0, 5))
def test_ac_unassisted_never_below_snl(r):
    assert spectra_ac_unassisted(r).noise_plus >= 1.0


def test_ab_two_controllers_at_inverse_sqrt3():
    g = GainPair(1 / math.sqrt(3), 1 / math.sqrt(3))
    for r in (0.0, 0.5, 1.0, 2.0):
        rep = spectra_ab_two_controllers(r, g)
        assert rep.noise_plus == pytest.approx(4 / 3 * math.exp(-2 * r), abs=1e-12)
        assert rep.noise_minus == pytest.approx(4 / 3 * math.exp(-2 * r), abs=1e-12)
    assert rep.signal_gain_plus == pytest.approx(2 / 3)
    assert rep.signal_gain_minus == pytest.approx(1 / 3)


def test_ab_two_controllers_zero_gain_at_r0():
    assert spectra_ab_two_controllers(0.0, GainPair(0, 0)).noise_plus == pytest.approx(1.0)
    assert spectra_ab_two_controllers(0.0, GainPair(0, 0)).noise_minus == pytest.approx(1.0)


def test_ab_two_controllers_optimal_s01():
    r = r_of_s(0.1)
    rep = closed_form_spectra("AB_CD", r)
    assert rep.noise_plus == pytest.approx(0.13267326732673265, abs=1e-12)
    # the general-gain expression at the optimum gives the same value
    assert spectra_ab_two_controllers(r).noise_plus == pytest.approx(rep.noise_plus, abs=1e-12)
    assert spectra_ab_two_controllers(r).noise_minus == pytest.approx(rep.noise_minus, abs=1e-12)


def test_optimal_gains_ab():
    assert optimal_gains_ab(0.0).g_x == 0.0
    assert optimal_gains_ab(10.0).g_x == pytest.approx(1 / math.sqrt(3), abs=1e-12)
    assert optimal_gains_ab(r_of_s(0.1)).g_x == pytest.approx(0.5659175905918115, abs=1e-12)


def test_ac_two_controllers():
    assert closed_form_spectra("AC_BD", 0.0).noise_plus == pytest.approx(1.0)
    r = r_of_s(0.1)
    assert closed_form_spectra("AC_BD", r).noise_plus == pytest.approx(0.19801980198019803, abs=1e-12)
    assert optimal_gains_ac(r).g_x == pytest.approx(0.9801980198019803, abs=1e-12)
    assert spectra_ac_two_controllers(r).noise_plus == pytest.approx(0.19801980198019803, abs=1e-12)


def test_one_controller():
    assert spectra_ab_one_controller(0.0).noise_plus == 1.0
    assert spectra_ab_one_controller(1.0).noise_plus == pytest.approx(0.1353352832366127, abs=1e-15)
    assert spectra_ab_one_controller(1.0).signal_gain_plus == 0.5
    rep = spectra_ac_one_controller(1.0)
    assert rep.noise_plus == pytest.approx(0.1353352832366127, abs=1e-15)
    assert rep.signal_gain_plus == rep.signal_gain_minus == 0.25


def test_bad_inputs():
    with pytest.raises(ValueError):
        spectra_ab_unassisted(-1.0)
    with pytest.raises(ValueError):
        closed_form_spectra("XY", 1.0)
    with pytest.raises(ValueError):
        GainPair(float("nan"), 0.0)


# ------------------------------------------------------------ gain optimality


@pytest.mark.parametrize("r", [0.1, 0.5, 1.0, 2.0])
def test_gain_optimality_numeric(r):
    num_x = minimize_gain(lambda g: noise_ab_two_controllers(r, GainPair(g, 0))[0])
    num_y = minimize_gain(lambda g: noise_ab_two_controllers(r, GainPair(0, g))[1])
    assert num_x == pytest.approx(optimal_gains_ab(r).g_x, abs=1e-8)
    assert num_y == pytest.approx(optimal_gains_ab(r).g_y, abs=1e-8)
    num_ac = minimize_gain(lambda g: noise_ac_two_controllers(r, GainPair(g, g))[0])
    assert num_ac == pytest.approx(optimal_gains_ac(r).g_x, abs=1e-8)


@pytest.mark.parametrize("r", [0.1, 1.0])
def test_gain_optimality_against_golden_section(r):
    from scipy.optimize import minimize_scalar

    res = minimize_scalar(lambda g: noise_ab_two_controllers(r, GainPair(g, g))[0],
                          bracket=(-1, 0.3, 1), method="golden", tol=1e-12)
    # golden section on function values resolves the argmin to ~sqrt(eps)
    assert res.x == pytest.approx(optimal_gains_ab(r).g_x, abs=1e-6)


@given(r=st.floats(0.01, 3), dg=st.floats(-1, 1).filter(lambda v: abs(v) > 1e-6))
def test_optimal_gain_is_minimum(r, dg):
    g = optimal_gains_ab(r).g_x
    best = noise_ab_two_controllers(r, GainPair(g, g))
    other = noise_ab_two_controllers(r, GainPair(g + dg, g + dg))
    assert other[0] > best[0] and other[1] > best[1]
    g = optimal_gains_ac(r).g_x
    assert noise_ac_two_controllers(r, GainPair(g + dg, g))[0] > noise_ac_two_controllers(r, GainPair(g, g))[0]


# ------------------------------------------------------------------- engine


@pytest.mark.parametrize("pid", list(ProtocolId), ids=lambda p: p.value)
@pytest.mark.parametrize("r", R_GRID)
def test_engine_matches_closed_form(pid, r):
    closed = closed_form_spectra(pid, r)
    eng = engine_spectra(pid, r)
    assert eng.noise_plus == pytest.approx(closed.noise_plus, abs=1e-10)
    assert eng.noise_minus == pytest.approx(closed.noise_minus, abs=1e-10)
    assert eng.signal_gain_plus == pytest.approx(closed.signal_gain_plus, abs=1e-12)
    assert eng.signal_gain_minus == pytest.approx(closed.signal_gain_minus, abs=1e-12)


@given(r=st.floats(0, 2.5), gx=st.floats(-2, 2), gy=st.floats(-2, 2))
def test_engine_matches_general_gain_forms(r, gx, gy):
    g = GainPair(gx, gy)
    for pid, closed in (("AB_CD", spectra_ab_two_controllers), ("AC_BD", spectra_ac_two_controllers)):
        eng = engine_spectra(pid, r, g)
        ref = closed(r, g)
        assert eng.noise_plus == pytest.approx(ref.noise_plus, abs=1e-10, rel=1e-12)
        assert eng.noise_minus == pytest.approx(ref.noise_minus, abs=1e-10, rel=1e-12)


@pytest.mark.parametrize("spec", all_specs(), ids=lambda s: s.id.value)
def test_no_signal_crosstalk(spec):
    plus, minus = spec.measured_forms(optimal_gains(spec.id, 1.0))
    assert abs(plus.signal_coeffs[1]) < 1e-15
    assert abs(minus.signal_coeffs[0]) < 1e-15


@pytest.mark.parametrize("spec", all_specs(), ids=lambda s: s.id.value)
def test_networks_are_passive(spec):
    net = spec.network()
    assert net.is_symplectic()
    np.testing.assert_allclose(net.matrix @ net.matrix.T, np.eye(8), atol=1e-14)


@pytest.mark.parametrize("spec", all_specs(), ids=lambda s: s.id.value)
def test_measured_quadratures_commute(spec):
    # every pair of outcomes that ends up in i+ and i- must be jointly measurable
    from ttpcnet.engine import omega

    plus, minus = spec.measured_forms(GainPair(1.0, 1.0))
    assert abs(plus.coeffs @ omega(4) @ minus.coeffs) < 1e-14


def test_ab_bell_forms_match_printed_photocurrents():
    s2 = math.sqrt(2)
    spec = protocol_spec("AB")
    plus, minus = spec.measured_forms()
    # in terms of b1, b2: i+ = (X_b2 + X_b1')/sqrt2, i- = (Y_b2 - Y_b1')/sqrt2
    pulled_plus = plus.coeffs @ spec.network().matrix
    pulled_minus = minus.coeffs @ spec.network().matrix
    np.testing.assert_allclose(pulled_plus, [1 / s2, 0, 1 / s2, 0, 0, 0, 0, 0], atol=1e-15)
    np.testing.assert_allclose(pulled_minus, [0, -1 / s2, 0, 1 / s2, 0, 0, 0, 0], atol=1e-15)
    assert plus.signal_coeffs[0] == pytest.approx(1 / s2)
    assert minus.signal_coeffs[1] == pytest.approx(-1 / s2)


def test_ab_cd_forms_match_printed_photocurrents():
    s3 = math.sqrt(3)
    spec = protocol_spec("AB_CD")
    plus, minus = spec.measured_forms(GainPair(0.2, 0.3))
    net = spec.network().matrix
    np.testing.assert_allclose(plus.coeffs @ net, [math.sqrt(2) / s3, 0, 1 / s3, 0, 0, 0, 0.2, 0], atol=1e-15)
    np.testing.assert_allclose(minus.coeffs @ net, [0, -1 / s3, 0, math.sqrt(2) / s3, 0.3, 0, 0, 0], atol=1e-15)


def test_ac_d_forms_are_normalized_relations():
    spec = protocol_spec("AC_D")
    plus, minus = spec.measured_forms()
    net = spec.network().matrix
    s2 = math.sqrt(2)
    # relation VII / 2 and relation V / 2
    np.testing.assert_allclose(plus.coeffs @ net, [0.5, 0, 0, 0, 0, -0.5, s2 / 2, 0], atol=1e-15)
    np.testing.assert_allclose(minus.coeffs @ net, [0, 0.5, 0, 0, 0.5, 0, 0, -s2 / 2], atol=1e-15)


def test_ab_d_output_mode_is_a2():
    # (X_b2 + X_b4)/sqrt2 is exactly X_a2
    t = build_ttpc(1.0)
    k = 1 / math.sqrt(2)
    row = k * (t.network.matrix[2] + t.network.matrix[6])
    c, s = math.cosh(1.0), math.sinh(1.0)
    np.testing.assert_allclose(row, [-s, 0, c, 0, 0, 0, 0, 0], atol=1e-14)


# --------------------------------------------------------------- properties


@pytest.mark.parametrize("pid", list(ProtocolId), ids=lambda p: p.value)
def test_snl_anchor(pid):
    assert engine_spectra(pid, 0.0).noise_plus == pytest.approx(1.0, abs=1e-14)
    assert closed_form_spectra(pid, 0.0).noise_minus == pytest.approx(1.0, abs=1e-14)


@pytest.mark.parametrize("pid", ASSISTED, ids=lambda p: p.value)
def test_assisted_monotone_and_below_snl(pid):
    grid = np.linspace(0, 3, 301)
    noise = np.array([closed_form_spectra(pid, r).noise_plus for r in grid])
    assert np.all(np.diff(noise) < 0)
    assert np.all(noise[1:] < 1.0)


@given(st.floats(1e-6, 5))
def test_assisted_below_snl_property(r):
    for pid in ASSISTED:
        rep = closed_form_spectra(pid, r)
        assert rep.noise_plus < 1.0 and rep.noise_minus < 1.0


@pytest.mark.parametrize("pid", list(ProtocolId), ids=lambda p: p.value)
def test_xy_symmetry(pid):
    for r in R_GRID:
        rep = engine_spectra(pid, r)
        assert rep.noise_plus == pytest.approx(rep.noise_minus, abs=1e-12)


def test_fig4_curves():
    r = r_of_s(0.1)
    ab = closed_form_spectra("AB", r).noise_plus
    two = closed_form_spectra("AB_CD", r).noise_plus
    one = closed_form_spectra("AB_D", r).noise_plus
    # both assisted curves lie below the unassisted one and the SNL
    assert one < two < 1.0 < ab
    assert two == pytest.approx(0.13267326732673265, abs=1e-12)
    assert one == pytest.approx(0.1, abs=1e-12)


# ---------------------------------------------------------------- spec model


@pytest.mark.parametrize("spec", all_specs(), ids=lambda s: s.id.value)
def test_spec_json_roundtrip(spec):
    text = spec.to_json()
    doc = json.loads(text)
    assert set(doc) >= {"id", "sender", "receiver", "controllers", "optical_steps", "signal_mode"}
    again = ProtocolSpec.from_json(text)
    assert again == spec
    assert engine_spectra(again, 0.7) == engine_spectra(spec, 0.7)


def _base(**over):
    kw = dict(
        id="AB",
        sender="Alice",
        receiver="Bob",
        controllers=(),
        optical_steps=(OpticalStep(0.5, 0.0, 0, 1),),
        plus_terms=(Term("Bob", 0, "x"),),
        minus_terms=(Term("Bob", 1, "y"),),
    )
    kw.update(over)
    return ProtocolSpec(**kw)


@pytest.mark.parametrize(
    "over",
    [
        {"receiver": "Alice"},
        {"controllers": ("Bob",)},
        {"controllers": ("Eve",)},
        {"optical_steps": (OpticalStep(0.5, 0.0, 0, 4),)},
        {"optical_steps": (OpticalStep(0.5, 0.0, 1, 1),)},
        {"plus_terms": (Term("Bob", 9, "x"),)},
        {"plus_terms": (Term("Claire", 2, "x", gain="gx"),)},
        {"plus_terms": (Term("Bob", 0, "x", gain="gx"),)},
        {"plus_terms": (Term("Bob", 0, "p"),)},
        {"signal_mode": 5},
    ],
)
def test_malformed_specs_rejected(over):
    with pytest.raises(ValueError):
        _base(**over)


def test_gain_spec_requires_gains():
    with pytest.raises(ValueError):
        protocol_spec("AB_CD").measured_forms()
