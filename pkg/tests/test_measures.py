"""Tests for spectral measures and their text grammar."""

import numpy as np
import pytest

from projects.free_spectra.errors import MeasureSpecError
from projects.free_spectra.models.measures import (
    Atomic,
    MarchenkoPastur,
    Semicircle,
    Tabulated,
    measure_from_dict,
    parse_measure,
)


class TestMoments:
    def test_semicircle(self):
        np.testing.assert_allclose(Semicircle(0.0, 1.0).moments(4), [1, 0, 1, 0, 2], atol=1e-12)

    def test_shifted_semicircle(self):
        m = Semicircle(1.0, 0.25).moments(2)
        assert m[1] == pytest.approx(1.0)
        assert m[2] - m[1] ** 2 == pytest.approx(0.25)

    def test_free_poisson_moments_are_catalan(self):
        np.testing.assert_allclose(MarchenkoPastur(1.0, 1.0).moments(4), [1, 1, 2, 5, 14], rtol=1e-10)

    def test_free_poisson_with_atom(self):
        mu = MarchenkoPastur(0.5, 2.0)
        assert mu.atoms() == [(0.0, 0.5)]
        assert mu.support_bounds()[0] == 0.0
        m = mu.moments(2)
        assert m[0] == pytest.approx(1.0)
        assert m[1] == pytest.approx(0.5 * 2.0)

    def test_atomic(self):
        mu = Atomic((-1.0, 1.0), (0.5, 0.5))
        assert mu.moments(4) == [1.0, 0.0, 1.0, 0.0, 1.0]
        assert mu.norm_bound == 1.0

    def test_tabulated_is_renormalized(self):
        grid = np.linspace(0.0, 2.0, 201)
        mu = Tabulated(grid, 3.0 * np.ones_like(grid))
        assert mu.mass == pytest.approx(1.0)
        assert mu.moments(1)[1] == pytest.approx(1.0, rel=1e-6)


class TestClosedForms:
    @pytest.mark.parametrize(
        "mu", [Semicircle(0.5, 2.0), MarchenkoPastur(1.0, 1.0), MarchenkoPastur(0.3, 1.5), MarchenkoPastur(2.0, 0.5)]
    )
    @pytest.mark.parametrize("z", [0.3 + 0.7j, -2.0 + 0.1j, 5.0 + 3.0j])
    def test_closed_form_matches_integral(self, mu, z):
        quad = sum(w / (z - t) for t, w in mu.atoms())
        for part in mu.continuous_parts():
            nodes, weights = np.polynomial.legendre.leggauss(200)
            for s0, s1 in zip(part.breaks[:-1], part.breaks[1:]):
                half = 0.5 * (s1 - s0)
                s = s0 + half * (nodes + 1.0)
                quad += np.sum(weights * half * part.weight(s) / (z - part.to_t(s)))
        assert complex(mu.cauchy_closed_form(z)) == pytest.approx(quad, abs=1e-8)

    def test_semicircle_at_i(self):
        assert complex(Semicircle().cauchy_closed_form(1j)) == pytest.approx(-1j * (np.sqrt(5) - 1) / 2)

    def test_decays_like_one_over_z(self):
        z = 1e6j
        for mu in (Semicircle(), MarchenkoPastur(0.4, 1.0), Atomic.point_mass(2.0)):
            assert complex(mu.cauchy_closed_form(z)) * z == pytest.approx(1.0, abs=1e-5)

    def test_free_cumulants(self):
        assert Semicircle(1.0, 2.0).free_cumulants_closed_form(3) == [1.0, 2.0, 0.0]
        assert MarchenkoPastur(0.5, 2.0).free_cumulants_closed_form(3) == [1.0, 2.0, 4.0]


class TestValidation:
    @pytest.mark.parametrize(
        "build",
        [
            lambda: Semicircle(0.0, 0.0),
            lambda: MarchenkoPastur(-1.0, 1.0),
            lambda: Atomic((0.0,), (0.5,)),
            lambda: Atomic((0.0, 1.0), (1.0,)),
            lambda: Tabulated(np.array([0.0, 1.0]), np.array([-1.0, 1.0])),
            lambda: Tabulated(np.array([1.0, 0.0]), np.array([1.0, 1.0])),
        ],
    )
    def test_rejects(self, build):
        with pytest.raises(MeasureSpecError):
            build()


class TestGrammar:
    def test_semicircle(self):
        assert parse_measure("semicircle(0,1)") == Semicircle(0.0, 1.0)
        assert parse_measure(" semicircle( -1.5 , 2e-1 ) ") == Semicircle(-1.5, 0.2)

    def test_mp(self):
        assert parse_measure("mp(1,1)") == MarchenkoPastur(1.0, 1.0)

    def test_atoms(self):
        mu = parse_measure("atoms((-1,0.25),(1,0.75))")
        assert mu.atoms() == [(-1.0, 0.25), (1.0, 0.75)]

    def test_table(self, tmp_path):
        path = tmp_path / "rho.csv"
        path.write_text("t,density\n0,0\n1,2\n2,0\n")
        mu = parse_measure(f"table({path})")
        assert isinstance(mu, Tabulated)
        assert mu.mass == pytest.approx(1.0)
        assert mu.support_bounds() == (0.0, 2.0)

    def test_relative_table_path(self, tmp_path):
        (tmp_path / "rho.csv").write_text("t,density\n0,1\n1,1\n")
        assert parse_measure("table(rho.csv)", base_dir=tmp_path).support_bounds() == (0.0, 1.0)

    def test_missing_table_is_an_os_error(self, tmp_path):
        with pytest.raises(OSError):
            parse_measure(f"table({tmp_path / 'absent.csv'})")

    def test_malformed_table(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("t,density\n0,a\n1,b\n")
        with pytest.raises(MeasureSpecError):
            parse_measure(f"table({path})")

    @pytest.mark.parametrize("text", ["gaussian(0,1)", "semicircle(0)", "atoms()", "atoms((0,1)x)", "mp(1,1"])
    def test_unrecognised(self, text):
        with pytest.raises(MeasureSpecError):
            parse_measure(text)

    @pytest.mark.parametrize(
        "mu",
        [
            Semicircle(0.25, 3.0),
            MarchenkoPastur(0.5, 2.0),
            Atomic((-1.0, 2.0), (0.5, 0.5)),
            Tabulated(np.array([0.0, 0.5, 1.0]), np.array([0.0, 2.0, 0.0]), source="inline"),
        ],
    )
    def test_dict_and_spec_string_rebuild(self, mu):
        assert measure_from_dict(mu.to_dict()) == mu
        if not isinstance(mu, Tabulated):
            assert parse_measure(mu.spec_string()) == mu
