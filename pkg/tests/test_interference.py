import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_unitary, shapes
from metashape.errors import DimMismatch, DuplicateInputMode, InconsistentInputs
from metashape.interference import (
    PhotonInput,
    component_probability,
    distinguishable_probability,
    expand_output,
    find_component,
    occupations,
    permanent,
    total_probability,
    with_probabilities,
)
from metashape.network import (
    ModeUnitary,
    balanced_splitter,
    compose,
    embed,
    identity,
    metasurface_unitary,
)
from metashape.shapes import exp_decay, gaussian, gram


def probs(inputs, u, g=None):
    g = gram([p.shape for p in inputs]) if g is None else g
    return {c.occupation: c.probability for c in with_probabilities(expand_output(inputs, u), inputs, g)}


def ryser(a):
    n = a.shape[0]
    total = 0
    for k in range(1, n + 1):
        for cols in itertools.combinations(range(n), k):
            total += (-1) ** k * np.prod(a[:, cols].sum(axis=1))
    return (-1) ** n * total


def test_component_count():
    inputs = [PhotonInput(m, exp_decay(1.0)) for m in range(3)]
    comps = expand_output(inputs, metasurface_unitary(0.8))
    assert len(comps) == 20 == math.comb(3 + 4 - 1, 3)
    assert len({c.occupation for c in comps}) == 20


def test_occupations_enumeration():
    assert occupations(2, 2) == [(2, 0), (1, 1), (0, 2)]
    assert all(sum(o) == 3 for o in occupations(3, 5))


def test_identity_network_single_term():
    inputs = [PhotonInput(m, gaussian(1.0, m)) for m in range(3)]
    comps = expand_output(inputs, identity(4))
    c = find_component(comps, (1, 1, 1, 0))
    nonzero = [t for t in c.terms if abs(t.coeff) > 0]
    assert len(nonzero) == 1 and nonzero[0].coeff == 1 and nonzero[0].slot_shapes == (0, 1, 2)
    for other in comps:
        if other.occupation != (1, 1, 1, 0):
            assert all(abs(t.coeff) == 0 for t in other.terms)
    p = probs(inputs, identity(4))
    assert p[(1, 1, 1, 0)] == pytest.approx(1.0, abs=1e-12)
    assert sum(v for k, v in p.items() if k != (1, 1, 1, 0)) == pytest.approx(0.0, abs=1e-12)


def test_hong_ou_mandel():
    f = exp_decay(1.0, 0.3, 0.2)
    inputs = [PhotonInput(0, f), PhotonInput(1, f)]
    p = probs(inputs, balanced_splitter())
    assert p[(1, 1)] < 1e-15
    assert p[(2, 0)] == pytest.approx(0.5, abs=1e-12)
    assert p[(0, 2)] == pytest.approx(0.5, abs=1e-12)


def test_hom_distinguishable_half():
    inputs = [PhotonInput(0, exp_decay(1.0, 0, -1000.0)), PhotonInput(1, exp_decay(1.0, 0, 1000.0))]
    assert probs(inputs, balanced_splitter())[(1, 1)] == pytest.approx(0.5, abs=1e-3)


def test_fig2_selection_probability(fig2):
    p = probs(fig2.inputs, fig2.network)
    assert p[(1, 1, 1, 0)] == pytest.approx(0.0886, abs=0.002)
    assert sum(p.values()) == pytest.approx(1.0, abs=1e-9)


def test_fig3_five_mode_total(fig3_er):
    u5 = compose(embed(balanced_splitter(), [0, 4], 5), embed(fig3_er.network, [0, 1, 2, 3], 5))
    p = probs(fig3_er.inputs, u5)
    assert len(p) == math.comb(7, 3)
    assert total_probability(
        with_probabilities(expand_output(fig3_er.inputs, u5), fig3_er.inputs, gram([q.shape for q in fig3_er.inputs]))
    ) == pytest.approx(1.0, abs=1e-9)


def test_distinguishable_total():
    rng = np.random.default_rng(3)
    u = ModeUnitary(random_unitary(rng, 4))
    inputs = [PhotonInput(m, gaussian(1.0, 0.0, 3000.0 * m)) for m in range(3)]
    assert sum(probs(inputs, u, np.eye(3)).values()) == pytest.approx(1.0, abs=1e-9)


def test_term_count_and_slot_consistency(fig2):
    for c in expand_output(fig2.inputs, fig2.network):
        n_routes = math.factorial(3) // math.prod(math.factorial(k) for k in c.occupation)
        mult = math.prod(math.factorial(k) for k in c.occupation)
        assert len(c.terms) == n_routes * mult
        for t in c.terms:
            assert sorted(t.slot_shapes) == [0, 1, 2]


def test_input_validation():
    f = gaussian(1.0)
    with pytest.raises(DuplicateInputMode):
        expand_output([PhotonInput(0, f), PhotonInput(0, f)], identity(4))
    with pytest.raises(DimMismatch):
        expand_output([PhotonInput(5, f)], identity(4))
    with pytest.raises(InconsistentInputs):
        expand_output([PhotonInput(m, f) for m in range(5)], identity(8))
    inputs = [PhotonInput(0, f), PhotonInput(1, f)]
    comp = expand_output(inputs, balanced_splitter())[0]
    with pytest.raises(InconsistentInputs):
        component_probability(comp, inputs, np.eye(3))


def test_total_probability_requires_filled():
    comps = expand_output([PhotonInput(0, gaussian(1.0))], identity(2))
    with pytest.raises(ValueError):
        total_probability(comps)


def test_permanent_against_ryser():
    rng = np.random.default_rng(0)
    for n in (1, 2, 3, 4):
        a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        assert permanent(a) == pytest.approx(ryser(a), abs=1e-10)


@st.composite
def configurations(draw):
    n_modes = draw(st.sampled_from([2, 3, 4, 5]))
    n = draw(st.integers(1, min(3, n_modes)))
    modes = draw(st.permutations(range(n_modes)))[:n]
    seed = draw(st.integers(0, 2**32 - 1))
    rng = np.random.default_rng(seed)
    if n_modes == 4 and draw(st.booleans()):
        u = metasurface_unitary(draw(st.floats(0.0, 1.0)))
    else:
        u = ModeUnitary(random_unitary(rng, n_modes))
    inputs = [PhotonInput(m, draw(shapes(gamma=(0.2, 5.0), center=(-3.0, 3.0), detuning=(-3.0, 3.0))))
              for m in modes]
    return inputs, u


@settings(max_examples=100)
@given(configurations())
def test_property_probability_conservation(config):
    inputs, u = config
    assert abs(sum(probs(inputs, u).values()) - 1) < 1e-9


@settings(max_examples=100)
@given(st.lists(shapes(gamma=(0.3, 4.0), center=(-2.0, 2.0), detuning=(-2.0, 2.0)), min_size=3, max_size=3),
       st.floats(0.0, 1.0))
def test_property_metasurface_conservation(fs, s_t):
    inputs = [PhotonInput(m, f) for m, f in enumerate(fs)]
    assert abs(sum(probs(inputs, metasurface_unitary(s_t)).values()) - 1) < 1e-9


@settings(max_examples=60)
@given(configurations(), st.randoms(use_true_random=False))
def test_property_relabeling_symmetry(config, rnd):
    inputs, u = config
    shuffled = list(inputs)
    rnd.shuffle(shuffled)
    a, b = probs(inputs, u), probs(shuffled, u)
    assert all(abs(a[k] - b[k]) < 1e-12 for k in a)


@settings(max_examples=60)
@given(configurations())
def test_property_distinguishable_permanent(config):
    inputs, u = config
    n = len(inputs)
    p = probs(inputs, u, np.eye(n))
    modes = [q.mode for q in inputs]
    for occ, value in p.items():
        assert abs(value - distinguishable_probability(u, modes, occ)) < 1e-12
