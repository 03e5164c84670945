"""Exact coefficient tables and the quadrature oracle."""

from __future__ import annotations

from fractions import Fraction

import pytest
from mpmath import mp, mpc, mpf

from smoothasym import GaussRat, Jet, SparsePoly, fourier_laplace_quad, maclaurin_table
from smoothasym.oracle import (
    OracleError,
    decimal_str,
    maclaurin_table_geometric,
    recurrence_residual,
)

from conftest import poly, smirnov_family


class TestMaclaurinTable:
    def test_delannoy_values(self, delannoy):
        G, H, _ = delannoy
        table = maclaurin_table(G, H, 1, (6, 4))
        assert table.coeff_at((0, 0)) == 1
        assert table.coeff_at((1, 1)) == 3
        assert table.coeff_at((3, 2)) == 25
        assert table.coeff_at((6, 4)) == 1289

    def test_central_binomial_diagonal(self, central_binomial):
        G, H, _ = central_binomial
        table = maclaurin_table(G, H, 1, (6, 6))
        assert table.coeff_at((2, 2)) == 6
        assert table.coeff_at((3, 3)) == 20

    def test_quantum_walk_cells(self, quantum_walk):
        G, H, _ = quantum_walk
        table = maclaurin_table(G, H, 1, (8, 2))
        assert table.coeff_at((4, 1)) == Fraction(3, 16)

    def test_smirnov_expectation_cell(self):
        H, fams = smirnov_family()
        G1, _, p1 = fams[0]
        G2, R, p2 = fams[1]
        words = maclaurin_table(G1, H, p1, (2, 2, 2))
        snaps = maclaurin_table(G2, H, p2, (2, 2, 2), G_den=R)
        assert words.coeff_at((2, 2, 2)) == 90
        assert snaps.coeff_at((2, 2, 2)) / words.coeff_at((2, 2, 2)) == 1

    def test_origin_cell(self):
        G = poly(2, {(0, 0): 3})
        H = poly(2, {(0, 0): 2, (1, 0): -1})
        table = maclaurin_table(G, H, 2, (2, 0))
        assert table.coeff_at((0, 0)) == Fraction(3, 4)

    def test_origin_on_variety_rejected(self):
        H = poly(1, {(1,): 1})
        with pytest.raises(OracleError):
            maclaurin_table(SparsePoly.constant(1, 1), H, 1, (2,))

    def test_out_of_bounds_rejected(self, delannoy):
        G, H, _ = delannoy
        table = maclaurin_table(G, H, 1, (2, 2))
        with pytest.raises(OracleError):
            table.coeff_at((3, 0))

    def test_gaussian_rational_coefficients(self):
        # 1/(1 - i x): coefficients are powers of i
        H = SparsePoly(1, {(0,): Fraction(1), (1,): GaussRat(0, -1)})
        table = maclaurin_table(SparsePoly.constant(1, 1), H, 1, (4,))
        assert table.coeff_at((1,)) == GaussRat(0, 1)
        assert table.coeff_at((2,)) == Fraction(-1)
        assert table.coeff_at((3,)) == GaussRat(0, -1)
        assert recurrence_residual(table, SparsePoly.constant(1, 1), H, 1) == 0

    def test_residual_exactly_zero(self, delannoy, quantum_walk):
        for G, H, _ in (delannoy, quantum_walk):
            table = maclaurin_table(G, H, 1, (8, 5))
            assert recurrence_residual(table, G, H, 1) == 0

    def test_two_methods_agree(self, delannoy):
        G, H, _ = delannoy
        direct = maclaurin_table(G, H, 1, (10, 10))
        geo = maclaurin_table_geometric(G, H, 1, 10)
        for e, c in geo.items():
            assert direct.values.get(e, Fraction(0)) == c
        for e, c in direct.values.items():
            if sum(e) <= 10:
                assert geo.get(e, Fraction(0)) == c

    def test_csv_rows(self, delannoy):
        G, H, _ = delannoy
        table = maclaurin_table(G, H, 1, (2, 1))
        rows = table.to_csv_rows(digits=6)
        assert [1, 1, "3", "3.0"] in rows

    def test_decimal_str(self):
        assert decimal_str(Fraction(1, 3), 5) == "0.33333"


class TestQuadrature:
    def test_gaussian(self):
        u = Jet.constant(1, 4, (mpc(0),), mpc(1))
        g = Jet(1, 4, (mpc(0),), {(2,): mpc(1) / 2})
        val, err = fourier_laplace_quad(u, g, 100, 3)
        expect = mp.sqrt(2 * mp.pi / 100)
        assert abs(val - expect) < mpf("1e-12") * expect
        assert err < mpf("1e-10")

    def test_gaussian_second_moment(self):
        u = Jet(1, 4, (mpc(0),), {(2,): mpc(1)})
        g = Jet(1, 4, (mpc(0),), {(2,): mpc(1) / 2})
        val, _ = fourier_laplace_quad(u, g, 100, 3)
        expect = mp.sqrt(2 * mp.pi) * mpf(100) ** mpf("-1.5")
        assert abs(val - expect) < mpf("1e-12") * expect

    def test_quartic_leading_term(self):
        import mpmath

        u = Jet.constant(1, 4, (mpc(0),), mpc(1))
        g = Jet(1, 4, (mpc(0),), {(4,): mpc(1)})
        omega = mpf(1000)
        val, _ = fourier_laplace_quad(u, g, omega, 1.0)
        lead = mpmath.gamma(mpf(1) / 4) / 2 * omega ** mpf("-0.25")
        assert abs(val - lead) < 5 * omega ** mpf("-0.5") * lead

    def test_two_dimensional_gaussian(self):
        u = Jet.constant(2, 4, (mpc(0), mpc(0)), mpc(1))
        g = Jet(2, 4, (mpc(0), mpc(0)), {(2, 0): mpc(1) / 2, (0, 2): mpc(1) / 2})
        with mp.workprec(80):
            val, _ = fourier_laplace_quad(u, g, 60, 2.5)
        expect = 2 * mp.pi / 60
        assert abs(val - expect) < mpf("1e-10") * expect

    def test_dimension_mismatch(self):
        u = Jet.constant(1, 2, (mpc(0),), mpc(1))
        g = Jet.constant(2, 2, (mpc(0), mpc(0)), mpc(1))
        with pytest.raises(OracleError):
            fourier_laplace_quad(u, g, 10, 1)
