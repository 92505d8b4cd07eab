import numpy as np
import pytest

from opmult.grid import SampledFunction, make_grid
from opmult.multiplier import MultiplierOperator, hilbert_symbol, identity
from opmult.opnorm import (
    MixedNormSpec,
    NormError,
    Verdict,
    classify,
    divergence_probe,
    mixed_norm,
    operator_norm_estimate,
    per_doubling,
    rayleigh_quotient,
    refinement_ladder,
    weighted_lp_norm,
)
from opmult.weights import Weight
from tests.tools import random_function


def test_weighted_lp_norm(grid1, sqrt_weight):
    one = SampledFunction(grid1, np.ones(grid1.shape))
    assert weighted_lp_norm(one, 3) == pytest.approx(16 ** (1 / 3))
    assert weighted_lp_norm(one * 2, 2, Weight.constant(4.0)) == pytest.approx(2 * 2 * 4.0)
    assert weighted_lp_norm(one, 2, sqrt_weight) > 0
    with pytest.raises(NormError):
        weighted_lp_norm(one, 0.5)


def test_mixed_norm(grid2, rng):
    """Equal exponents and constant weights collapse to the plain L^p norm"""
    f = random_function(grid2, rng, 2)
    spec = MixedNormSpec((1, 1), (3.0, 3.0), (Weight.constant(), Weight.constant()))
    assert mixed_norm(f, spec) == pytest.approx(weighted_lp_norm(f, 3))
    assert mixed_norm(f, MixedNormSpec((1, 1), (2.0, 4.0), (Weight.power(0.5), Weight.constant()))) > 0
    with pytest.raises(NormError):
        MixedNormSpec((1,), (2.0, 2.0), (Weight.constant(),))
    with pytest.raises(NormError):
        MixedNormSpec((2,), (1.0,), (Weight.constant(),))
    with pytest.raises(NormError):
        mixed_norm(f, MixedNormSpec((1,), (2.0,), (Weight.constant(),)))


def test_power_iteration(grid1, rng):
    estimate = operator_norm_estimate(MultiplierOperator(identity(grid1)), 2, rng=rng)
    assert estimate.value == pytest.approx(1.0)
    assert estimate.strategy == "power-iteration"
    estimate = operator_norm_estimate(MultiplierOperator(hilbert_symbol(grid1)), 2, rng=rng)
    assert estimate.value == pytest.approx(np.pi)
    assert estimate.converged
    assert estimate.asdict()["witness"] is None


def test_estimate_is_attained(grid1, rng):
    """The reported value is the Rayleigh quotient of the witness"""
    T = MultiplierOperator(hilbert_symbol(grid1))
    omega = Weight.power(0.3)
    estimate = operator_norm_estimate(T, 3, omega, omega, budget=10, starts=2, rng=rng)
    assert estimate.strategy == "random-ascent"
    assert estimate.value == pytest.approx(rayleigh_quotient(T, estimate.witness, 3, omega, omega))


def test_random_ascent_identity(grid1, rng):
    """Every start already attains 1 for the identity"""
    estimate = operator_norm_estimate(MultiplierOperator(identity(grid1)), 3, budget=5, starts=2, rng=rng)
    assert estimate.value == pytest.approx(1.0)


def test_save_witness(grid1, rng, tmp_path):
    estimate = operator_norm_estimate(MultiplierOperator(identity(grid1)), 2, budget=3, rng=rng)
    path = tmp_path / "witness.npy"
    estimate.save_witness(path)
    assert np.load(path).shape == grid1.shape + (1,)


def test_estimate_errors(grid1):
    T = MultiplierOperator(identity(grid1))
    with pytest.raises(NormError):
        operator_norm_estimate(T, 1)
    with pytest.raises(NormError):
        operator_norm_estimate(T, 3, strategy="power-iteration")
    with pytest.raises(NormError):
        operator_norm_estimate(T, 2, strategy="annealing")
    with pytest.raises(NormError):
        rayleigh_quotient(T, SampledFunction(grid1, np.zeros(grid1.shape)), 2, Weight.constant(), Weight.constant())


def test_refinement_ladder():
    ladder = refinement_ladder(1, 64, 8, steps=3, factor=4)
    assert [g.N for g in ladder] == [64, 256, 1024]
    assert {g.L for g in ladder} == {8}


def test_classify():
    assert classify([1.0, 1.05]) == Verdict.bounded
    assert classify([1.5, 1.3]) == Verdict.diverging
    assert classify([1.0, 1.5]) == Verdict.indeterminate
    assert classify([1.15], bounded_ratio=1.2, diverging_ratio=1.3) == Verdict.bounded


def test_divergence_ladder():
    ladder = refinement_ladder(1, 64, 8, steps=2)
    report = divergence_probe(lambda g: MultiplierOperator(identity(g)), 2, Weight.constant(), ladder, budget=5)
    assert report.verdict == "BOUNDED"
    assert report.grids == [(64, 8.0), (256, 8.0)]
    assert report.ratios == [pytest.approx(1.0)]
    assert report.per_doubling == [pytest.approx(1.0)]
    assert report.asdict()["per_doubling"] == report.per_doubling
    with pytest.raises(NormError):
        divergence_probe(lambda g: MultiplierOperator(identity(g)), 2, Weight.constant(), ladder[:1])
    with pytest.raises(NormError):
        divergence_probe(lambda g: MultiplierOperator(identity(g)), 2, Weight.constant(), [make_grid(1, 8, 1)])


def test_per_doubling():
    """A fourfold refinement takes two doublings, an eightfold one three"""
    assert per_doubling([4.0, 9.0], [64, 256, 1024]) == [pytest.approx(2.0), pytest.approx(3.0)]
    assert per_doubling([8.0], [32, 256]) == [pytest.approx(2.0)]
    assert per_doubling([1.5], [64, 128]) == [1.5]
    with pytest.raises(NormError):
        per_doubling([1.0], [64, 64])
    with pytest.raises(NormError):
        per_doubling([1.0, 1.0], [64, 256])


def test_divergence_per_doubling():
    """Growth of the Hilbert transform on |x|^1.5, per step and per doubling"""
    ladder = refinement_ladder(1, 64, 8, steps=3)
    report = divergence_probe(lambda g: MultiplierOperator(hilbert_symbol(g)), 2, Weight.power(1.5), ladder, budget=5)
    assert len(report.per_doubling) == len(report.ratios) == 2
    for step, doubling in zip(report.ratios, report.per_doubling):
        assert doubling == pytest.approx(step ** 0.5)
