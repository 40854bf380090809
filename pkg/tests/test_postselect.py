import json
import math

import numpy as np
import pytest
from scipy.integrate import trapezoid

from metashape.errors import PatternMismatch, ZeroNorm
from metashape.interference import PhotonInput, expand_output, find_component, with_probabilities
from metashape.metrics import fidelity, run_scheme
from metashape.network import balanced_splitter, compose, embed, identity
from metashape.postselect import (
    DetectionEvent,
    DetectionPattern,
    assign_slots,
    condition,
    density_csv,
    joint_density_map,
    smear_resolution,
    split_and_condition,
    splitter_factor,
)
from metashape.scheme import ShapingScheme
from metashape.shapes import eval_shape, exp_decay, gaussian, gram


def pattern(events, remaining, vacuum=()):
    return DetectionPattern(tuple(DetectionEvent(m, t) for m, t in events), remaining, vacuum)


def selected(scheme):
    return scheme.selected_component()


def test_fig2_condition(fig2):
    res = condition(selected(fig2), fig2.pattern, fig2.inputs, fig2.gram())
    assert fidelity(res.output_shape, fig2.target) == pytest.approx(0.997, abs=0.003)
    assert res.selection_probability == pytest.approx(0.0886, abs=0.003)
    assert res.joint_density > 0
    assert res.output_shape.norm2(fig2.gram()) == pytest.approx(1.0, abs=1e-10)


def test_identity_network_returns_remaining_input():
    inputs = [PhotonInput(m, exp_decay(1.0 + m, 0.0, m - 1.0)) for m in range(3)]
    g = gram([p.shape for p in inputs])
    comp = with_probabilities([find_component(expand_output(inputs, identity(4)), (1, 1, 1, 0))], inputs, g)[0]
    for remaining in range(3):
        detected = [m for m in range(3) if m != remaining]
        res = condition(comp, pattern([(detected[0], 0.7), (detected[1], 1.9)], remaining, (3,)), inputs, g)
        expect = np.zeros(3)
        expect[remaining] = 1
        assert np.allclose(np.abs(res.xi), expect, atol=1e-12)


def test_zero_norm_before_onset(fig2):
    with pytest.raises(ZeroNorm):
        condition(selected(fig2), fig2.pattern.with_times([-0.5, 1.0]), fig2.inputs, fig2.gram())


def test_pattern_mismatch():
    inputs = [PhotonInput(m, exp_decay(1.0)) for m in range(3)]
    g = gram([p.shape for p in inputs])
    comps = expand_output(inputs, identity(4))
    c2100 = find_component(comps, (2, 1, 0, 0))
    with pytest.raises(PatternMismatch):
        condition(c2100, pattern([(0, 1.0), (1, 1.0)], 0, (2, 3)), inputs, g)
    c1110 = find_component(comps, (1, 1, 1, 0))
    with pytest.raises(PatternMismatch):
        condition(c1110, pattern([(1, 1.0)], 0), inputs, g)
    with pytest.raises(PatternMismatch):
        condition(c1110, pattern([(1, 1.0), (3, 1.0)], 0), inputs, g)
    with pytest.raises(PatternMismatch):
        condition(c1110, pattern([(1, 1.0), (2, 1.0)], 0, (1,)), inputs, g)
    with pytest.raises(PatternMismatch):
        split_and_condition(c1110, 0, pattern([(1, 1.0), (2, 1.0)], 0), inputs, g)


def test_assign_slots():
    p = pattern([(0, 1.0), (1, 2.0)], 0)
    assert assign_slots((2, 1, 0, 0), p, splitter_mode=0) == ([1, 2], 0)
    p = pattern([(1, 1.0), (1, 2.0)], 0)
    assert assign_slots((1, 2, 0, 0), p, splitter_mode=1) == ([1, 2], 0)


def test_splitter_factor():
    assert abs(splitter_factor()) ** 2 == pytest.approx(0.5)


def _five_mode(scheme, events, remaining, vacuum):
    u5 = compose(embed(balanced_splitter(), [0, 4], 5), embed(scheme.network, [0, 1, 2, 3], 5))
    occ = [0] * 5
    for m in [m for m, _ in events] + [remaining]:
        occ[m] += 1
    return ShapingScheme(scheme.s_t, scheme.inputs, tuple(occ), pattern(events, remaining, vacuum),
                         scheme.target, unitary=u5)


def test_split_matches_composed_network(fig3_er):
    direct = run_scheme(fig3_er)
    t_e2, t_b2 = fig3_er.pattern.times
    composed = run_scheme(_five_mode(fig3_er, [(4, t_e2), (1, t_b2)], 0, (2, 3)))
    assert np.max(np.abs(direct.xi - composed.xi)) < 1e-9
    assert direct.selection_probability == pytest.approx(composed.selection_probability, abs=1e-12)
    half = selected(fig3_er).probability / 2
    assert direct.selection_probability == pytest.approx(half, abs=1e-15)


def test_split_identical_photons_symmetric_point():
    f = gaussian(1.0, 3.0)
    inputs = [PhotonInput(0, f), PhotonInput(1, gaussian(2.0, 3.5)), PhotonInput(2, f)]
    base = ShapingScheme(0.7, inputs, (2, 1, 0, 0), pattern([(0, 3.0), (1, 3.0)], 0, (2, 3)),
                         gaussian(1.0, 3.0), splitter_mode=0)
    direct = run_scheme(base)
    composed = run_scheme(_five_mode(base, [(4, 3.0), (1, 3.0)], 0, (2, 3)))
    assert np.max(np.abs(direct.xi - composed.xi)) < 1e-9


def test_split_both_photons_detected(fig3_er):
    # splitter on a doubly occupied mode whose two photons are both detected
    s = ShapingScheme(0.726, fig3_er.inputs, (1, 2, 0, 0), pattern([(1, 9.5), (1, 10.1)], 0, (2, 3)),
                      fig3_er.target, splitter_mode=1)
    direct = run_scheme(s)
    u5 = compose(embed(balanced_splitter(), [1, 4], 5), embed(s.network, [0, 1, 2, 3], 5))
    five = ShapingScheme(s.s_t, s.inputs, (1, 1, 0, 0, 1), pattern([(1, 9.5), (4, 10.1)], 0, (2, 3)),
                         s.target, unitary=u5)
    assert np.max(np.abs(direct.xi - run_scheme(five).xi)) < 1e-9
    assert direct.selection_probability == pytest.approx(run_scheme(five).selection_probability, abs=1e-12)


def test_detector_swap_consistency(fig2):
    comp = selected(fig2)
    (m1, t1), (m2, t2) = [(e.mode, e.time) for e in fig2.pattern.events]
    a = condition(comp, fig2.pattern, fig2.inputs, fig2.gram())
    b = condition(comp, pattern([(m2, t2), (m1, t1)], 0, (3,)), fig2.inputs, fig2.gram())
    assert np.max(np.abs(a.xi - b.xi)) < 1e-12
    assert a.joint_density == pytest.approx(b.joint_density, abs=1e-12)


def test_detection_order_matters_between_modes(fig2):
    # which detector fires when is physical: exchanging the times is a different event
    swapped = fig2.with_params({"events.0.time": 1.42, "events.1.time": 0.906})
    assert run_scheme(swapped).fidelity < 0.9


def test_output_in_span_of_inputs(fig2):
    res = run_scheme(fig2)
    tau = np.linspace(-1, 10, 301)
    basis = np.array([eval_shape(p.shape, tau) for p in fig2.inputs]).T
    coef, *_ = np.linalg.lstsq(basis, res.output_shape(tau), rcond=None)
    assert np.allclose(basis @ coef, res.output_shape(tau), atol=1e-12)
    assert np.allclose(coef, res.xi, atol=1e-9)


def test_density_map_integrates_to_selection_probability(fig2):
    axis = np.linspace(0.0, 16.0, 801)
    t1, t2 = np.meshgrid(axis, axis, indexing="ij")
    dens = joint_density_map(selected(fig2), fig2.pattern, fig2.inputs, fig2.gram(),
                             np.stack([t1.ravel(), t2.ravel()], axis=1)).reshape(t1.shape)
    total = trapezoid(trapezoid(dens, axis, axis=1), axis)
    assert np.all(dens >= 0)
    assert total == pytest.approx(0.0886, abs=0.003)
    assert total == pytest.approx(selected(fig2).probability, rel=2e-3)


def test_density_map_matches_conditioning(fig2):
    d = joint_density_map(selected(fig2), fig2.pattern, fig2.inputs, fig2.gram(), [fig2.pattern.times])
    assert d[0] == pytest.approx(run_scheme(fig2).joint_density, rel=1e-12)


def test_density_map_identity_factorizes():
    inputs = [PhotonInput(m, exp_decay(1.0 + 0.5 * m, 0.0, m)) for m in range(3)]
    g = gram([p.shape for p in inputs])
    comp = find_component(expand_output(inputs, identity(4)), (1, 1, 1, 0))
    rng = np.random.default_rng(4)
    times = rng.uniform(-0.5, 4.0, size=(50, 2))
    dens = joint_density_map(comp, pattern([(1, 0), (2, 0)], 0, (3,)), inputs, g, times)
    expect = np.abs(eval_shape(inputs[1].shape, times[:, 0])) ** 2 * np.abs(eval_shape(inputs[2].shape, times[:, 1])) ** 2
    assert np.allclose(dens, expect, atol=1e-14)


def test_density_csv():
    text = density_csv([(0.0, 1.0), (0.5, 1.5)], [0.25, 0.125])
    assert text.splitlines() == ["t1,t2,density", "0,1,0.25", "0.5,1.5,0.125"]


def test_result_serializes(fig2):
    doc = json.loads(json.dumps(run_scheme(fig2).to_dict()))
    assert len(doc["xi"]) == 3 and set(doc) >= {"fidelity", "selection_probability", "joint_density"}


def test_smear_zero_width_is_pure(fig2):
    assert smear_resolution(fig2, fig2.target, 0.0) == pytest.approx(run_scheme(fig2).fidelity, abs=1e-12)


def test_smear_matches_brute_force_midpoint(fig2):
    # independent route: average the pure conditioned states on a fine midpoint grid
    t_R, n = 0.5, 60
    edges = [np.linspace(t - t_R / 2, t + t_R / 2, n + 1) for t in fig2.pattern.times]
    mids = [(e[1:] + e[:-1]) / 2 for e in edges]
    g = fig2.gram()
    comp = selected(fig2)
    num = den = 0.0
    for a in mids[0]:
        for b in mids[1]:
            res = condition(comp, fig2.pattern.with_times([a, b]), fig2.inputs, g)
            num += res.joint_density * fidelity(res.output_shape, fig2.target) ** 2
            den += res.joint_density
    brute = math.sqrt(num / den)
    assert smear_resolution(fig2, fig2.target, t_R) == pytest.approx(brute, abs=2e-4)


def test_smear_average_method_close_to_mixed(fig2):
    mixed = smear_resolution(fig2, fig2.target, 0.3)
    avg = smear_resolution(fig2, fig2.target, 0.3, method="average")
    assert avg <= mixed + 1e-12
    assert avg == pytest.approx(mixed, abs=5e-3)
    with pytest.raises(ValueError):
        smear_resolution(fig2, fig2.target, 0.3, method="median")
    with pytest.raises(ValueError):
        smear_resolution(fig2, fig2.target, -0.1)


def test_smear_splitter_path(fig3_er):
    assert smear_resolution(fig3_er, fig3_er.target, 0.0) == pytest.approx(run_scheme(fig3_er).fidelity, abs=1e-12)
    assert smear_resolution(fig3_er, fig3_er.target, 0.05) <= run_scheme(fig3_er).fidelity + 1e-9
