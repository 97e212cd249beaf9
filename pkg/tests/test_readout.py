"""Dispersive readout: Hamiltonian structure, cavity shifts, parity admixture."""

import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from majobraid.readout import (
    DispersiveFormulaError,
    IdentificationError,
    ReadoutError,
    ReadoutParams,
    TruncationError,
    build_H_ro,
    check_truncation,
    dispersive_formula,
    dispersive_shift,
    fit_loglog_slope,
    measurement_error,
)

BASE = ReadoutParams()
BUS = BASE.replace(bus_delta=(0.7,), bus_eps=(0.05, 0.03))


class TestHamiltonian:
    def test_hermitian(self):
        h = build_H_ro(BUS.replace(eps11=0.01)).hamiltonian
        assert np.abs(h - h.conj().T).max() <= 1e-12

    def test_decoupled_spectrum(self):
        p = BASE.replace(g=0.0, delta=0.0)
        w = np.linalg.eigvalsh(build_H_ro(p).hamiltonian)
        levels = [
            p.omega0 * n + tz * (0.5 * p.Omega0 + p.delta_plus * par) + p.delta_minus * par
            for n, tz, par in itertools.product(range(p.n_max + 1), (1, -1), (1, -1))
        ]
        # each parity holds two states of the external pair
        assert np.allclose(w, np.sort(np.repeat(levels, 2)), atol=1e-12)

    @pytest.mark.parametrize("params", [BASE, BUS, BUS.replace(bus_delta=(0.7, 0.2, 1.1))])
    def test_parity_conserved(self, params):
        m = build_H_ro(params)
        assert np.abs(m.hamiltonian @ m.parity - m.parity @ m.hamiltonian).max() <= 1e-12

    def test_eps11_breaks_parity(self):
        m = build_H_ro(BASE.replace(eps11=0.01))
        assert np.abs(m.hamiltonian @ m.parity - m.parity @ m.hamiltonian).max() > 1e-3

    def test_vacuum_rabi_splitting(self):
        p = BASE.replace(Omega0=10.0, delta_plus=0.0, delta_minus=0.0)
        m = build_H_ro(p)
        maj = np.zeros(4, dtype=complex)
        maj[0] = 1
        states = np.stack([m.embed(1, 1, maj), m.embed(0, 0, maj)], axis=1)
        block = states.conj().T @ m.hamiltonian @ states
        w = np.linalg.eigvalsh(block)
        assert w[1] - w[0] == pytest.approx(2 * p.g, rel=1e-12)

    def test_invalid_params(self):
        with pytest.raises(TruncationError):
            ReadoutParams(n_max=3)
        with pytest.raises(ReadoutError):
            ReadoutParams(bus_delta=(0.1, 0.2))
        with pytest.raises(ReadoutError):
            ReadoutParams(g=float("nan"))


class TestDispersiveShift:
    def test_no_parity_coupling(self):
        p = BASE.replace(delta_plus=0.0)
        a, b = dispersive_shift(p, 1), dispersive_shift(p, -1)
        assert a.closed_form == b.closed_form == pytest.approx(p.omega0 - p.g**2 / p.detuning)
        assert a.numeric == pytest.approx(b.numeric, abs=1e-12)

    @pytest.mark.parametrize("parity", [1, -1])
    def test_matches_closed_form(self, parity):
        s = dispersive_shift(BASE, parity)
        assert s.dispersive_ok
        assert s.discrepancy <= 5 * BASE.g**4 / BASE.detuning**3

    def test_parity_discrimination(self):
        a, b = dispersive_shift(BASE, 1), dispersive_shift(BASE, -1)
        assert abs(a.numeric - b.numeric) > 1e-3
        diff_closed = a.closed_form - b.closed_form
        assert abs((a.numeric - b.numeric) - diff_closed) <= 5 * BASE.g**4 / BASE.detuning**3

    def test_sign_follows_tau(self):
        for par in (1, -1):
            up, down = dispersive_shift(BASE, par, 1), dispersive_shift(BASE, par, -1)
            assert np.sign(up.closed_form - BASE.omega0) == -np.sign(down.closed_form - BASE.omega0)
            assert np.sign(up.numeric - BASE.omega0) == -np.sign(down.numeric - BASE.omega0)

    def test_bus_chain_leaves_shift(self):
        for par in (1, -1):
            assert dispersive_shift(BUS, par).numeric == pytest.approx(dispersive_shift(BASE, par).numeric, abs=1e-10)

    def test_resonance_rejected(self):
        with pytest.raises(DispersiveFormulaError):
            dispersive_formula(BASE.replace(Omega0=11.0), -1)

    def test_needs_clean_branch(self):
        with pytest.raises(ReadoutError):
            dispersive_shift(BASE.replace(eps11=0.01), 1)


class TestMeasurementError:
    def test_zero_without_eps(self):
        assert measurement_error(BASE).amplitude == 0.0

    def test_perturbative_value(self):
        # the admixture is eps11 / (2 gap) in the perturbative regime
        p = BASE.replace(eps11=0.01 * BASE.parity_gap)
        me = measurement_error(p)
        assert me.amplitude == pytest.approx(me.estimate, rel=1e-3)
        assert me.estimate == pytest.approx(0.005)

    def test_doubling_gap_halves(self):
        p1 = BASE.replace(eps11=1e-3, delta_plus=0.6)
        p2 = p1.replace(delta_plus=p1.delta_minus + abs(p1.delta) + 2 * p1.parity_gap)
        ratio = measurement_error(p1).amplitude / measurement_error(p2).amplitude
        assert ratio == pytest.approx(2.0, rel=0.2)

    def test_slope(self):
        gaps = np.geomspace(0.05, 2.0, 8)
        ps = [BASE.replace(eps11=1e-3, delta_plus=BASE.delta_minus + abs(BASE.delta) + x) for x in gaps]
        amps = [measurement_error(p).amplitude for p in ps]
        assert fit_loglog_slope(gaps, amps) == pytest.approx(-1.0, abs=0.1)

    @settings(max_examples=10, deadline=None)
    @given(st.floats(0.05, 0.25))
    def test_sign_of_delta(self, d):
        p = BASE.replace(eps11=1e-3, delta=d)
        a, b = measurement_error(p).amplitude, measurement_error(p.replace(delta=-d)).amplitude
        assert a == pytest.approx(b, rel=0.05)

    def test_near_resonance(self):
        p = BASE.replace(eps11=0.01, delta_plus=BASE.delta_minus + abs(BASE.delta) + 0.005)
        me = measurement_error(p)
        assert me.near_resonance
        assert me.amplitude == pytest.approx(0.01 * p.t_m)

    def test_degenerate_pair(self):
        with pytest.raises(IdentificationError):
            measurement_error(BASE.replace(eps11=1e-3, delta=0.0))


class TestTruncation:
    def test_converged(self):
        assert check_truncation(BASE.replace(eps11=1e-3)) < 1e-6

    def test_dispersive_flag(self):
        assert BASE.dispersive()
        assert not BASE.replace(g=0.5).dispersive()
