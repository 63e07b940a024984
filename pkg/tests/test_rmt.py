"""Tests for the random-matrix Monte Carlo."""

import numpy as np
import pytest
import scipy.stats

from projects.free_spectra.algorithms.rmt import (
    Ensemble,
    EnsembleSpec,
    empirical_moments,
    empirical_spectrum,
    ks_distance,
    parse_ensemble,
    sample_ensemble,
    sample_gue,
    sample_wishart,
)
from projects.free_spectra.errors import BudgetExceededError, MeasureSpecError, NotSelfAdjointError
from projects.free_spectra.models.measures import MarchenkoPastur, Semicircle
from projects.free_spectra.models.ncpoly import parse


class TestEnsembles:
    @pytest.mark.parametrize(
        "text, expected",
        [("gue", Ensemble("gue")), (" GUE ", Ensemble("gue")), ("wishart(0.5)", Ensemble("wishart", 0.5)), ("wishart( 2 )", Ensemble("wishart", 2.0))],
    )
    def test_parse(self, text, expected):
        assert parse_ensemble(text) == expected

    @pytest.mark.parametrize("text", ["goe", "wishart()", "wishart(-1)", "wishart(0)", ""])
    def test_parse_rejects(self, text):
        with pytest.raises(MeasureSpecError):
            parse_ensemble(text)

    def test_limit_measures(self):
        assert Ensemble("gue").limit_measure() == Semicircle(0.0, 1.0)
        assert Ensemble("wishart", 0.5).limit_measure() == MarchenkoPastur(0.5, 1.0)

    def test_spec_string_round_trip(self):
        for ensemble in (Ensemble("gue"), Ensemble("wishart", 0.25)):
            assert parse_ensemble(ensemble.spec_string()) == ensemble


class TestSampling:
    def test_gue_is_hermitian_with_unit_variance(self, rng):
        h = sample_gue(rng, 200)
        np.testing.assert_allclose(h, h.conj().T)
        assert np.mean(np.abs(h) ** 2) * 200 == pytest.approx(1.0, rel=0.05)

    def test_wishart_is_positive(self, rng):
        w = sample_wishart(rng, 50, 2.0)
        np.testing.assert_allclose(w, w.conj().T)
        assert np.linalg.eigvalsh(w).min() > 0

    def test_draws_are_deterministic(self):
        spec = EnsembleSpec((Ensemble("gue"), Ensemble("wishart", 1.0)), n=20, reps=3, seed=7)
        first = sample_ensemble(spec, 2)
        second = sample_ensemble(spec, 2)
        for a, b in zip(first, second):
            np.testing.assert_array_equal(a, b)
        assert not np.allclose(sample_ensemble(spec, 0)[0], first[0])

    def test_rep_out_of_range(self):
        spec = EnsembleSpec((Ensemble("gue"),), n=4, reps=2, seed=0)
        with pytest.raises(ValueError):
            sample_ensemble(spec, 2)

    @pytest.mark.parametrize("kwargs", [{"n": 1}, {"reps": 0}])
    def test_spec_validation(self, kwargs):
        with pytest.raises(ValueError):
            EnsembleSpec((Ensemble("gue"),), **{"n": 4, "reps": 1, "seed": 0, **kwargs})

    def test_matrix_budget(self, config_env):
        config_env(MAX_MATRIX_SIZE=100)
        with pytest.raises(BudgetExceededError):
            EnsembleSpec((Ensemble("wishart", 2.0),), n=60, reps=1, seed=0)


class TestSpectrum:
    def test_semicircle(self):
        p = parse("x1", 1)
        eigs = empirical_spectrum(p, EnsembleSpec((Ensemble("gue"),), n=400, reps=2, seed=3))
        assert eigs.size == 800
        assert np.all(np.diff(eigs) >= 0)
        assert ks_distance(eigs, scipy.stats.semicircular(scale=2.0).cdf) < 0.1

    def test_independent_of_worker_count(self, anticommutator):
        spec = EnsembleSpec((Ensemble("gue"), Ensemble("gue")), n=30, reps=4, seed=11)
        np.testing.assert_allclose(
            empirical_spectrum(anticommutator, spec, workers=1),
            empirical_spectrum(anticommutator, spec, workers=3),
        )

    def test_anticommutator_moments(self, anticommutator):
        spec = EnsembleSpec((Ensemble("gue"), Ensemble("gue")), n=300, reps=2, seed=5)
        moments = empirical_moments(empirical_spectrum(anticommutator, spec), 2)
        assert moments[0] == pytest.approx(0.0, abs=0.05)
        assert moments[1] == pytest.approx(2.0, abs=0.1)

    def test_rejects_non_selfadjoint(self):
        spec = EnsembleSpec((Ensemble("gue"), Ensemble("gue")), n=4, reps=1, seed=0)
        with pytest.raises(NotSelfAdjointError):
            empirical_spectrum(parse("x1*x2", 2), spec)

    def test_rejects_variable_mismatch(self, anticommutator):
        with pytest.raises(ValueError):
            empirical_spectrum(anticommutator, EnsembleSpec((Ensemble("gue"),), n=4, reps=1, seed=0))


class TestKolmogorovSmirnov:
    def test_single_sample(self):
        assert ks_distance([0.5], scipy.stats.uniform.cdf) == pytest.approx(0.5)

    def test_exact_quantiles(self):
        samples = (np.arange(1, 11) - 0.5) / 10
        assert ks_distance(samples, scipy.stats.uniform.cdf) == pytest.approx(0.05)

    def test_empty(self):
        with pytest.raises(ValueError):
            ks_distance([], scipy.stats.uniform.cdf)


def test_empirical_moments():
    assert empirical_moments([-1.0, 1.0], 3) == [0.0, 1.0, 0.0]
