import csv
import math

import numpy as np
import pytest

from conftest import MHZ
from thincell.atomic_model import FieldConfig, RelaxationMode
from thincell.confinement import TAU_4D52, CellConfig, VelocityGrid, boltzmann_grid
from thincell.errors import InvalidGrid, NoSteadyState, PointFailure
from thincell.observables import (
    FilterMode, Spectrum, SweepConfig, drop_signal, fdrop_signal, fluorescence_signal,
    reconstruct_populations, sweep, velocity_resolved, write_populations_csv,
)
from thincell.solver import DensityMatrix

SMALL = dict(velocity_grid=(161, 4.0), delta_c_range=(-120 * MHZ, 40 * MHZ, 9))


@pytest.fixture
def config(scheme, fields, thin_cell):
    return SweepConfig(scheme, fields, thin_cell, **SMALL)


def test_config_validation(config):
    with pytest.raises(InvalidGrid):
        config.replace(delta_c_range=(0.0, 1.0, 1))
    with pytest.raises(InvalidGrid):
        config.replace(delta_c_range=(1.0, 0.0, 5))
    with pytest.raises(ValueError):
        config.replace(fdrop_levels=(0, 3))


def test_no_probe_no_drop_no_fdrop(config):
    c = config.replace(fields=config.fields.replace(omega_p=0.0))
    assert drop_signal(c, 0.0) == pytest.approx(0.0, abs=1e-20)
    assert fdrop_signal(c, 0.0) == pytest.approx(0.0, abs=1e-20)


def test_no_coupling_no_fluorescence(config):
    c = config.replace(fields=config.fields.replace(omega_c_base=0.0))
    assert fluorescence_signal(c, -30 * MHZ) == pytest.approx(0.0, abs=1e-20)


def test_signals_scale_with_thickness_factor(config):
    x = velocity_resolved(config, 0.0)
    w, states = x[1], x[2]
    from thincell.atomic_model import im_index
    im24 = float(np.sum(w * states[:, im_index(1, 3)]))
    assert drop_signal(config, 0.0) == pytest.approx(config.cell.thickness * im24, rel=1e-12)


def test_endpoint_sweep_matches_single_calls(config):
    c = config.replace(delta_c_range=(-50 * MHZ, 10 * MHZ, 2))
    sp = sweep(c, threads=1)
    assert len(sp.delta_c) == 2
    for i, dc in enumerate(sp.delta_c):
        assert sp.drop[i] == drop_signal(c, dc)
        assert sp.fdrop[i] == fdrop_signal(c, dc)
        assert sp.fluorescence[i] == fluorescence_signal(c, dc)


def test_sweep_nonnegative_and_metadata(config):
    sp = sweep(config, threads=1)
    assert np.all(sp.fdrop >= 0) and np.all(sp.fluorescence >= 0)
    assert sp.metadata["config"]["cell"]["thickness"] == config.cell.thickness
    assert sp.metadata["max_residual"] < 1e-10
    assert "version" in sp.metadata


def test_sweep_thread_count_does_not_change_bits(config):
    a = sweep(config, threads=1)
    b = sweep(config, threads=3)
    for name in ("drop", "fdrop", "fluorescence"):
        assert np.array_equal(getattr(a, name), getattr(b, name))


def test_csv_byte_identical(config, tmp_path):
    sweep(config, threads=2).write_csv(tmp_path / "a.csv")
    sweep(config, threads=1).write_csv(tmp_path / "b.csv")
    a, b = (tmp_path / "a.csv").read_bytes(), (tmp_path / "b.csv").read_bytes()
    assert a == b
    rows = list(csv.reader(a.decode().splitlines()))
    assert rows[0] == ["delta_c_mhz", "drop", "fdrop", "fluorescence"]
    assert len(rows) == 10
    assert float(rows[1][0]) == pytest.approx(-120.0)


def test_mirrored_grid_gives_same_signals(config):
    g = boltzmann_grid(config.cell, 161, 4.0)
    mirrored = VelocityGrid(-g.points.copy(), g.weights.copy())
    for dc in (-80 * MHZ, 0.0):
        _, w1, x1 = velocity_resolved(config, dc, grid=g)
        _, w2, x2 = velocity_resolved(config, dc, grid=mirrored)
        a = (w1[:, None] * x1).sum(0)
        b = (w2[:, None] * x2).sum(0)
        assert np.allclose(a, b, rtol=1e-10, atol=1e-15)


def test_normalized_peak(config):
    sp = sweep(config, threads=1)
    n = sp.normalized("peak")
    for name in ("drop", "fdrop", "fluorescence"):
        assert np.max(np.abs(getattr(n, name))) == pytest.approx(1.0)
    assert sp.normalized("none") is sp
    with pytest.raises(ValueError):
        sp.normalized("area")


def test_spectrum_length_check():
    with pytest.raises(ValueError):
        Spectrum(np.zeros(3), np.zeros(3), np.zeros(2), np.zeros(3))


def test_cutoff_filter_drops_fast_classes(config):
    c = config.replace(filter_mode=FilterMode.CUTOFF)
    v, w, x = velocity_resolved(c, 0.0)
    vmax = c.cell.thickness / TAU_4D52
    assert np.all(w[np.abs(v) > vmax] == 0)
    assert np.all(x[np.abs(v) > vmax] == 0)
    assert fluorescence_signal(c, 0.0) > 0


def test_degenerate_point_reports_location(scheme, thin_cell):
    s = scheme.replace(gamma12=0.0, gamma_self=0.0)
    c = SweepConfig(s, FieldConfig(3 * MHZ, 0), thin_cell, include_wall=False, **SMALL)
    with pytest.raises(PointFailure) as info:
        drop_signal(c, 0.0)
    assert info.value.delta_c == 0.0 and info.value.velocity is not None


def test_verbatim_mode_refused(config):
    with pytest.raises(NoSteadyState):
        drop_signal(config.replace(mode=RelaxationMode.PAPER_VERBATIM), 0.0)


def test_populations_fields_off(config):
    c = config.replace(fields=FieldConfig(0, 0))
    (rec,) = reconstruct_populations(c, [1e-6])
    assert rec.populations[:2] == pytest.approx([0.5, 0.5], abs=1e-12)
    assert np.abs(rec.populations[2:]).max() < 1e-12


def test_population_records(config, reference_cell, tmp_path):
    recs = reconstruct_populations(config, [0.5e-6, 30e-6, reference_cell])
    assert [r.thickness for r in recs] == [0.5e-6, 30e-6, 0.075]
    for r in recs:
        assert abs(r.total - 1) < 1e-9
        assert r.populations.min() >= -1e-10
        assert r.dominant_level in (3, 4, 5, 6, 7)
    write_populations_csv(recs, tmp_path / "p.csv")
    rows = list(csv.reader((tmp_path / "p.csv").read_text().splitlines()))
    assert rows[0] == ["thickness_um", "p1", "p2", "p3", "p4", "p5", "p6", "p7", "loss", "dominant"]
    assert [float(r[0]) for r in rows[1:]] == [0.5, 30.0, 75000.0]
