"""Certified Newton iteration and the lilypad descent schedule."""

import math

import numpy as np
import pytest

from freespectra import (
    BasinCertificate,
    LayerSpec,
    NetworkSpec,
    Nonlinearity,
    SolverConfig,
    SolverError,
    SolveStats,
    eval_phi,
    is_in_basin,
    master_from_spec,
    newton_lilypads,
    newton_raphson,
)
from freespectra.oracles import all_roots
from freespectra.solver import DEFAULT_CONFIG


def mp_meq():
    return master_from_spec(NetworkSpec(layers=(LayerSpec(Nonlinearity.LINEAR, 1.0),)))


def mp_root(z):
    """Physical branch of m^2 + (2-z)m + 1 = 0 picked by decaying density."""
    roots = np.roots([1.0, 2.0 - z, 1.0])
    dens = [-((m + 1) / z).imag for m in roots]
    return complex(roots[int(np.argmax(dens))])


def test_config_validation():
    with pytest.raises(ValueError):
        SolverConfig(epsilon=1e-16)
    with pytest.raises(ValueError):
        SolverConfig(epsilon=1.5)
    with pytest.raises(ValueError):
        SolverConfig(max_newton_iters=0)
    with pytest.raises(ValueError):
        SolverConfig(min_step_fraction=1.5)
    assert DEFAULT_CONFIG.epsilon == 1e-12
    assert DEFAULT_CONFIG.max_newton_iters == 100


def test_is_in_basin_mp1_example():
    cert = is_in_basin(mp_meq(), 10j, 0j)
    assert isinstance(cert, BasinCertificate)
    assert cert.delta == pytest.approx(0.09806, abs=1e-5)
    assert cert.kappa == pytest.approx(0.98058, abs=1e-5)
    assert cert.lambda_bound == pytest.approx(0.2, rel=1e-12)
    assert cert.h == pytest.approx(0.01923, abs=1e-5)
    assert cert.h == pytest.approx(cert.delta * cert.kappa * cert.lambda_bound, rel=1e-12)
    assert cert.t_star == pytest.approx(2 * cert.delta / (1 + math.sqrt(1 - 2 * cert.h)), rel=1e-12)
    assert 0 < cert.t_star < 2 * cert.delta


def test_is_in_basin_near_edge_not_certified():
    assert is_in_basin(mp_meq(), 2 + 1e-12j, 0j) is None


def test_is_in_basin_double_root_not_certified():
    # phi'(m0) = 0 exactly at m0 = (z-2)/2 for the MP(1) equation
    z = 4j
    m0 = (z - 2) / 2
    assert eval_phi(mp_meq(), z, m0)[1] == 0
    assert is_in_basin(mp_meq(), z, m0) is None


def test_is_in_basin_rejects_real_z():
    with pytest.raises(ValueError):
        is_in_basin(mp_meq(), 2.0 + 0j, 0j)


def test_newton_mp1_from_origin():
    stats = SolveStats()
    m = newton_raphson(mp_meq(), 10j, 0j, stats=stats)
    assert abs(m - mp_root(10j)) < 1e-12
    assert abs(eval_phi(mp_meq(), 10j, m)[0]) < 1e-12
    assert stats.newton_iterations <= 8


def test_newton_exact_root_takes_zero_iterations():
    # (m+1)^2 = z*m holds exactly in floating point for this pair
    z = 0.5 + 0.5j
    m0 = -1 + 1j
    assert eval_phi(mp_meq(), z, m0)[0] == 0
    stats = SolveStats()
    m = newton_raphson(mp_meq(), z, m0, stats=stats)
    assert m == m0
    assert stats.newton_iterations == 0


def test_newton_golden_section_point():
    m = newton_raphson(mp_meq(), 2 + 1j, -0.5j)
    assert abs(m - 1j * (1 - math.sqrt(5)) / 2) < 1e-9


def test_newton_iteration_cap_raises():
    config = SolverConfig(max_newton_iters=2)
    with pytest.raises(SolverError):
        newton_raphson(mp_meq(), 2 + 1j, 50 + 50j, config=config)


def test_lilypads_cold_start():
    stats = SolveStats()
    m = newton_lilypads(mp_meq(), 2 + 1j, stats=stats)
    assert abs(m - 1j * (1 - math.sqrt(5)) / 2) < 1e-9
    assert stats.doublings >= 1 and stats.basins >= 1


def test_lilypads_far_field_leading_order():
    m = newton_lilypads(mp_meq(), 1e6j)
    assert abs(m - (-1e-6j)) < 1e-11


def test_lilypads_warm_proxy_skips_doubling():
    meq = mp_meq()
    proxy_z = 2 + 0.1j
    proxy_m = newton_lilypads(meq, proxy_z)
    stats = SolveStats()
    m = newton_lilypads(meq, 2 + 1e-9j, proxy=(proxy_z, proxy_m), stats=stats)
    assert stats.doublings == 0
    assert abs(m - mp_root(2 + 1e-9j)) < 1e-9


def test_lilypads_rejects_real_axis():
    with pytest.raises(ValueError):
        newton_lilypads(mp_meq(), 2.0 + 0j)


def test_lilypads_lower_half_plane_schwarz():
    meq = mp_meq()
    for z in (2 + 1e-3j, 3.5 + 0.2j, 0.5 + 1j):
        upper = newton_lilypads(meq, z)
        lower = newton_lilypads(meq, z.conjugate())
        assert abs(lower - upper.conjugate()) < 1e-14


def test_lilypads_is_deterministic():
    meq = mp_meq()
    s1, s2 = SolveStats(), SolveStats()
    m1 = newton_lilypads(meq, 1.7 + 1e-8j, stats=s1)
    m2 = newton_lilypads(meq, 1.7 + 1e-8j, stats=s2)
    assert m1 == m2
    assert s1 == s2


def test_lilypads_stall_falls_back_to_roots():
    # a coarse dichotomy floor forces a stall near the spectral edge; the
    # all-roots restart must rescue the solve and say so in the stats
    meq = mp_meq()
    z = 3.9999 + 1e-13j
    config = SolverConfig(min_step_fraction=0.5)
    stats = SolveStats()
    m = newton_lilypads(meq, z, config=config, stats=stats)
    assert stats.restarts == 1
    assert min(abs(m - r) for r in all_roots(meq, z).roots) < 1e-9
    assert -((m + 1) / z).imag >= -1e-12


def test_lilypads_stall_without_oracle_reports_last_certified(monkeypatch):
    def outage(meq, z):
        raise RuntimeError("forced oracle outage")

    monkeypatch.setattr("freespectra.oracles.all_roots", outage)
    config = SolverConfig(min_step_fraction=0.5)
    with pytest.raises(SolverError) as info:
        newton_lilypads(mp_meq(), 3.9999 + 1e-13j, config=config)
    err = info.value
    assert err.last_certified is not None
    z_last, m_last = err.last_certified
    assert z_last.imag > 0
    assert abs(eval_phi(mp_meq(), z_last, m_last)[0]) < 1e-9


def test_lilypads_survives_large_coefficients():
    # Horner noise exceeds epsilon here; the noise-floor stop must kick in
    spec = NetworkSpec(layers=tuple(LayerSpec(Nonlinearity.LINEAR, 4.0) for _ in range(5)))
    meq = master_from_spec(spec)
    z = 0.1 + 1e-6j
    m = newton_lilypads(meq, z)
    assert min(abs(m - r) for r in all_roots(meq, z).roots) < 1e-9
    assert -((m + 1) / z).imag >= -1e-10


def test_stats_merge_accumulates():
    a = SolveStats(newton_iterations=3, basins=1, doublings=2, restarts=0)
    b = SolveStats(newton_iterations=5, basins=2, doublings=0, restarts=1)
    a.merge(b)
    assert a == SolveStats(newton_iterations=8, basins=3, doublings=2, restarts=1)
