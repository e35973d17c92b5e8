import numpy as np
import pytest

from thincell.atomic_model import TWO_PI_MHZ, FieldConfig, LevelScheme
from thincell.confinement import CellConfig
from scipy import constants

MHZ = TWO_PI_MHZ
# 4D5/2 hyperfine spacings used throughout the tests (derived from the
# literature A and B constants; the model itself has no default for them)
DELTA2 = 67.5 * MHZ
DELTA3 = 81.5 * MHZ
MASS_85U = 85 * constants.atomic_mass


@pytest.fixture
def scheme():
    return LevelScheme(delta2=DELTA2, delta3=DELTA3)


@pytest.fixture
def fields():
    return FieldConfig(omega_p=4 * MHZ, omega_c_base=20 * MHZ)


@pytest.fixture
def thin_cell():
    return CellConfig(500e-9, 393.15)


@pytest.fixture
def reference_cell():
    return CellConfig(0.075, 298.15)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_density_matrix(rng, n=7):
    """Random positive unit-trace Hermitian matrix."""
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    rho = a @ a.conj().T
    return rho / np.trace(rho).real


def s1_params(scheme, fields, relax, v=0.0, unit=MHZ):
    """Parameter dictionary for the scalar equations, in units of ``unit``."""
    from thincell.atomic_model import doppler_detunings

    dp, dc = doppler_detunings(fields, v)
    g = relax.total_decay
    vals = dict(dp=dp, dc=dc, d1=scheme.delta1, d2=scheme.delta2, d3=scheme.delta3,
                whfs=scheme.omega_hfs, Op=fields.omega_p, O45=fields.omega_c_45,
                O46=fields.omega_c_46, O47=fields.omega_c_47, G12=scheme.gamma12,
                g3=g[2], g4=g[3], g5=g[4], g6=g[5], g7=g[6])
    return {k: float(x) / unit for k, x in vals.items()}


def random_configuration(rng):
    """Random physical parameters: (scheme, fields, v, gamma_L), rates in rad/s."""
    from thincell.atomic_model import FieldConfig, LevelScheme

    u = rng.uniform
    scheme = LevelScheme(
        delta2=u(20, 150) * MHZ, delta3=u(20, 150) * MHZ,
        gamma12=u(0.01, 1.0) * MHZ, gamma_self=u(0, 2) * MHZ,
        gamma=tuple(u(0.5, 10, size=5) * MHZ),
        a=u(0, 1), b=u(0, 1), c=u(0, 1),
    )
    fields = FieldConfig(
        omega_p=u(0.1, 20) * MHZ, omega_c_base=u(0, 40) * MHZ,
        delta_p=u(-200, 200) * MHZ, delta_c=u(-200, 200) * MHZ,
        counter_propagating=bool(rng.integers(2)),
    )
    return scheme, fields, u(-500, 500), u(0, 500) * MHZ


_VERDICTS = []


@pytest.fixture
def verdict():
    """Record and print one PASS/FAIL line for an acceptance criterion."""
    def record(number, title, ok, detail):
        line = f"{'PASS' if ok else 'FAIL'} [{number:>2}] {title}: {detail}"
        print(line)
        _VERDICTS.append(line)
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if _VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_VERDICTS, key=lambda s: int(s.split("[")[1].split("]")[0])):
            terminalreporter.write_line(line)
