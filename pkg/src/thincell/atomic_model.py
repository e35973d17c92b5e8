"""Seven-level 85Rb ladder: Hamiltonian, relaxation and Liouvillian.

Level indices used throughout the public API are 1-based, matching the
physics labelling:

    |1> 5S1/2 F=2 (uncoupled ground)   |2> 5S1/2 F=3
    |3> 5P3/2 F=3                      |4> 5P3/2 F=4
    |5> 4D5/2 F=3   |6> 4D5/2 F=4      |7> 4D5/2 F=5 (cycling)

Arrays are 0-based as usual, so ``rho[1, 3]`` is rho_24.

The density matrix is stored in a real parametrisation of length 50:
the seven populations, then (Re, Im) of every upper-triangle coherence in
row-major order, then the population of the loss state |L>. Liouvillian
matrices act on that vector and are expressed in units of ``RATE_UNIT``
(2 pi x 1 MHz) so that entries stay O(1e3) for the dense solves.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np

from .angular import transition_strength

N_LEVELS = 7
DIM = N_LEVELS + N_LEVELS * (N_LEVELS - 1) + 1  # 50
LOSS = DIM - 1
TWO_PI_MHZ = 2 * math.pi * 1e6
RATE_UNIT = TWO_PI_MHZ

PROBE_WAVELENGTH = 780.24e-9
COUPLING_WAVELENGTH = 1529.37e-9


class RelaxationMode(str, enum.Enum):
    """How decay products are routed.

    ``PAPER_VERBATIM`` reproduces the published equations of motion literally,
    including their trace imbalance. ``TRACE_CONSERVING`` splits every decay so
    that probability is conserved and a unique steady state exists.
    """

    PAPER_VERBATIM = "verbatim"
    TRACE_CONSERVING = "conserving"


@dataclass(frozen=True)
class LevelScheme:
    """Energy structure and decay rates, all angular frequencies in rad/s.

    ``delta2`` and ``delta3`` (4D5/2 hyperfine spacings) have no default.
    ``gamma`` lists the spontaneous rates of levels |3>..|7>.
    """

    delta2: float
    delta3: float
    omega_hfs: float = 3035.0 * TWO_PI_MHZ
    delta1: float = 120.7 * TWO_PI_MHZ
    gamma: tuple = (6.06 * TWO_PI_MHZ,) * 2 + (1.97 * TWO_PI_MHZ,) * 3
    gamma12: float = 0.01 * TWO_PI_MHZ
    gamma_self: float = 1.0 * TWO_PI_MHZ
    a: float = 0.5
    b: float = 0.5
    c: float = 0.5

    def __post_init__(self):
        object.__setattr__(self, "gamma", tuple(float(g) for g in self.gamma))
        if len(self.gamma) != 5:
            raise ValueError("gamma must hold 5 rates (levels 3..7)")
        for name in ("omega_hfs", "delta1", "delta2", "delta3"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0")
        if min(self.gamma) < 0 or self.gamma12 < 0 or self.gamma_self < 0:
            raise ValueError("decay rates must be >= 0")
        for name in ("a", "b", "c"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"branching factor {name}={getattr(self, name)} not in [0, 1]")

    def replace(self, **changes) -> "LevelScheme":
        return replace(self, **changes)


def coupling_rabi_split(omega_c_base, strengths):
    """Split one coupling Rabi frequency over the F=4 -> F'=3,4,5 lines.

    Each line scales with the square root of its strength relative to the
    strongest one, so the strongest line carries ``omega_c_base`` exactly.
    """
    values = [s.value if hasattr(s, "value") else float(s) for s in strengths]
    top = max(values)
    if top == 0:
        return tuple(0.0 for _ in values)
    return tuple(omega_c_base * math.sqrt(v / top) for v in values)


@lru_cache(maxsize=None)
def default_coupling_strengths():
    """Strengths for 5P3/2 F=4 -> 4D5/2 F'=3, 4, 5 of 85Rb."""
    return tuple(transition_strength(4, fp, 1.5, 2.5, 2.5) for fp in (3, 4, 5))


@dataclass(frozen=True)
class FieldConfig:
    """Probe and coupling fields (rad/s and rad/m).

    Rabi frequencies are the off-diagonal Hamiltonian elements. When
    ``omega_c`` is omitted, ``omega_c_base`` is split over the three coupling
    lines with ``coupling_rabi_split`` and the computed hyperfine strengths.
    """

    omega_p: float
    omega_c_base: float
    delta_p: float = 0.0
    delta_c: float = 0.0
    k_p: float = 2 * math.pi / PROBE_WAVELENGTH
    k_c: float = 2 * math.pi / COUPLING_WAVELENGTH
    counter_propagating: bool = True
    omega_c: tuple | None = None

    def __post_init__(self):
        if self.omega_c is None:
            split = coupling_rabi_split(self.omega_c_base, default_coupling_strengths())
            object.__setattr__(self, "omega_c", split)
        else:
            object.__setattr__(self, "omega_c", tuple(float(o) for o in self.omega_c))
        if len(self.omega_c) != 3:
            raise ValueError("omega_c must hold the three couplings 4-5, 4-6, 4-7")
        if self.omega_p < 0 or min(self.omega_c) < 0 or self.omega_c_base < 0:
            raise ValueError("Rabi frequencies must be >= 0")
        if not (self.k_p > 0 and self.k_c > 0):
            raise ValueError("wavevectors must be > 0")

    @property
    def omega_c_45(self):
        return self.omega_c[0]

    @property
    def omega_c_46(self):
        return self.omega_c[1]

    @property
    def omega_c_47(self):
        return self.omega_c[2]

    def replace(self, **changes) -> "FieldConfig":
        if "omega_c_base" in changes and "omega_c" not in changes:
            changes["omega_c"] = None
        return replace(self, **changes)


def doppler_detunings(fields: FieldConfig, v):
    """Effective (probe, coupling) detunings seen by atoms moving at ``v``.

    Probe along +z: delta_p - k_p v. A counter-propagating coupling beam sees
    delta_c + k_c v. Works elementwise on arrays.
    """
    dp = fields.delta_p - fields.k_p * v
    sign = 1.0 if fields.counter_propagating else -1.0
    dc = fields.delta_c + sign * fields.k_c * v
    return dp, dc


def _level_energies(scheme, dp, dc):
    return np.array([
        -scheme.omega_hfs,
        0.0,
        dp - scheme.delta1,
        dp,
        dp + dc + scheme.delta2 + scheme.delta3,
        dp + dc + scheme.delta3,
        dp + dc,
    ])


def _couplings(fields):
    V = np.zeros((N_LEVELS, N_LEVELS))
    V[1, 3] = V[3, 1] = fields.omega_p
    for j, om in zip((4, 5, 6), fields.omega_c):
        V[3, j] = V[j, 3] = om
    return V


def build_hamiltonian(scheme: LevelScheme, fields: FieldConfig, v: float = 0.0) -> np.ndarray:
    """Rotating-frame Hamiltonian (rad/s) for longitudinal velocity ``v``."""
    dp, dc = doppler_detunings(fields, v)
    H = np.diag(_level_energies(scheme, dp, dc)).astype(complex)
    H += _couplings(fields)
    return H


@dataclass(frozen=True)
class RelaxationStructure:
    """Decay and repopulation rates (rad/s).

    ``repopulation[t, s]`` is the rate at which population of source ``s``
    feeds target ``t``; index 7 is the loss state |L>. Coherence rho_ij decays
    at ``(total_decay[i] + total_decay[j]) / 2``.
    """

    total_decay: np.ndarray
    repopulation: np.ndarray
    mode: RelaxationMode

    @property
    def loss_fraction(self) -> np.ndarray:
        with np.errstate(invalid="ignore", divide="ignore"):
            frac = self.repopulation[LOSS_SLOT, :N_LEVELS] / self.total_decay
        return np.nan_to_num(frac)

    @property
    def loss_return_rate(self) -> float:
        return float(self.repopulation[:N_LEVELS, LOSS_SLOT].sum())

    def repopulation_map(self) -> dict:
        """``{source: [(target, fraction), ...]}`` with 1-based labels, 8 = |L>."""
        out = {}
        for s in range(N_LEVELS):
            g = self.total_decay[s]
            row = []
            for t in range(N_LEVELS + 1):
                r = self.repopulation[t, s]
                if r and g:
                    row.append((t + 1, r / g))
            out[s + 1] = row
        return out

    def __add__(self, other):
        return RelaxationStructure(
            self.total_decay + other.total_decay,
            self.repopulation + other.repopulation,
            self.mode,
        )


LOSS_SLOT = N_LEVELS  # index of |L> in RelaxationStructure.repopulation


def zero_relaxation(mode=RelaxationMode.TRACE_CONSERVING) -> RelaxationStructure:
    return RelaxationStructure(np.zeros(N_LEVELS), np.zeros((N_LEVELS + 1, N_LEVELS + 1)),
                               RelaxationMode(mode))


def build_relaxation(scheme: LevelScheme, gamma_L: float,
                     mode=RelaxationMode.TRACE_CONSERVING) -> RelaxationStructure:
    """Total decay rates and decay routing for wall-collision rate ``gamma_L``.

    Every rate enters linearly, so the structure for a given ``gamma_L`` is the
    sum of the ``gamma_L = 0`` structure and ``gamma_L`` times the structure of
    a scheme with all intrinsic rates zeroed.
    """
    if gamma_L < 0:
        raise ValueError("gamma_L must be >= 0")
    mode = RelaxationMode(mode)
    g = np.zeros(N_LEVELS)
    R = np.zeros((N_LEVELS + 1, N_LEVELS + 1))
    gam = dict(zip(range(2, 7), scheme.gamma))
    G12 = scheme.gamma12
    wall = {i: (scheme.b if i < 4 else scheme.c) * gamma_L for i in range(2, 7)}

    if mode is RelaxationMode.PAPER_VERBATIM:
        g[0] = g[1] = G12
        R[1, 0] = R[0, 1] = G12
        for i in range(2, 7):
            g[i] = gam[i] + scheme.gamma_self + wall[i]
        R[0, 2] = R[1, 2] = g[2]
        R[1, 3] = g[3]
        for i in (4, 5):
            R[2, i] = R[3, i] = g[i]
        return RelaxationStructure(g, R, mode)

    reset = scheme.a * gamma_L
    for s in (0, 1):
        g[s] = G12 + reset
        R[0, s] += reset / 2
        R[1, s] += reset / 2
    R[1, 0] += G12
    R[0, 1] += G12
    radiative = {2: ((0, 0.5), (1, 0.5)), 3: ((1, 1.0),),
                 4: ((2, 0.5), (3, 0.5)), 5: ((2, 0.5), (3, 0.5)), 6: ((3, 1.0),)}
    for i in range(2, 7):
        g[i] = gam[i] + scheme.gamma_self + wall[i]
        for t, frac in radiative[i]:
            R[t, i] += frac * gam[i]
        R[0, i] += scheme.gamma_self / 2
        R[1, i] += scheme.gamma_self / 2
        R[LOSS_SLOT, i] += wall[i]
    R[0, LOSS_SLOT] = R[1, LOSS_SLOT] = (gamma_L + G12) / 2
    return RelaxationStructure(g, R, mode)


# -- real parametrisation ---------------------------------------------------

PAIRS = [(i, j) for i in range(N_LEVELS) for j in range(i + 1, N_LEVELS)]
_PAIR_INDEX = {p: N_LEVELS + 2 * k for k, p in enumerate(PAIRS)}


def re_index(i: int, j: int) -> int:
    """Position of Re rho_ij (0-based, i < j) in the real vector."""
    return _PAIR_INDEX[(i, j)]


def im_index(i: int, j: int) -> int:
    return _PAIR_INDEX[(i, j)] + 1


TRACE_FUNCTIONAL = np.zeros(DIM)
TRACE_FUNCTIONAL[:N_LEVELS] = 1.0
TRACE_FUNCTIONAL[LOSS] = 1.0


@lru_cache(maxsize=1)
def _basis_maps():
    n2 = N_LEVELS * N_LEVELS
    m = DIM - 1
    T = np.zeros((n2, m), complex)   # real coords -> row-major vec(rho)
    S = np.zeros((m, n2), complex)   # vec(rho) -> real coords (Hermitian input)
    for i in range(N_LEVELS):
        T[i * N_LEVELS + i, i] = 1
        S[i, i * N_LEVELS + i] = 1
    for (i, j), r in _PAIR_INDEX.items():
        ij, ji = i * N_LEVELS + j, j * N_LEVELS + i
        T[ij, r], T[ij, r + 1] = 1, 1j
        T[ji, r], T[ji, r + 1] = 1, -1j
        S[r, ij], S[r, ji] = 0.5, 0.5
        S[r + 1, ij], S[r + 1, ji] = -0.5j, 0.5j
    return T, S


def to_real_vector(rho: np.ndarray, loss: float = 0.0) -> np.ndarray:
    _, S = _basis_maps()
    x = np.empty(DIM)
    x[:-1] = (S @ np.asarray(rho, complex).reshape(-1)).real
    x[LOSS] = loss
    return x


def from_real_vector(x: np.ndarray):
    """Return ``(rho, loss)`` from a real-parametrised state."""
    T, _ = _basis_maps()
    rho = (T @ np.asarray(x[:-1], float)).reshape(N_LEVELS, N_LEVELS)
    return rho, float(x[LOSS])


@dataclass(frozen=True)
class Liouvillian:
    """Generator of d x / dt = matrix @ x, in units of ``RATE_UNIT``."""

    matrix: np.ndarray
    mode: RelaxationMode = RelaxationMode.TRACE_CONSERVING
    rate_unit: float = field(default=RATE_UNIT)

    def __post_init__(self):
        self.matrix.setflags(write=False)

    def derivative(self, rho: np.ndarray, loss: float = 0.0):
        """Time derivative (rad/s) of a 7x7 ``rho`` and loss population."""
        dx = self.matrix @ to_real_vector(rho, loss) * self.rate_unit
        return from_real_vector(dx)

    def trace_leak(self) -> float:
        """Max-norm of trace_functional @ matrix (zero when trace conserving)."""
        return float(np.abs(TRACE_FUNCTIONAL @ self.matrix).max())

    def __add__(self, other):
        return Liouvillian(self.matrix + other.matrix, self.mode, self.rate_unit)

    def __mul__(self, scalar):
        return Liouvillian(self.matrix * scalar, self.mode, self.rate_unit)

    __rmul__ = __mul__


def build_liouvillian(H: np.ndarray, relax: RelaxationStructure) -> Liouvillian:
    """Master-equation generator -i[H, rho] + dissipator in real coordinates.

    ``H`` is in rad/s. The loss population is slot 49. The map is linear in
    the pair (H, relax), which the sweep machinery relies on.
    """
    n = N_LEVELS
    H = np.asarray(H, complex) / RATE_UNIT
    g = relax.total_decay / RATE_UNIT
    R = relax.repopulation / RATE_UNIT
    eye = np.eye(n)
    Lc = -1j * (np.kron(H, eye) - np.kron(eye, H.T))
    Lc -= np.diag(((g[:, None] + g[None, :]) / 2).reshape(-1))
    diag = np.arange(n) * (n + 1)
    Lc[np.ix_(diag, diag)] += R[:n, :n]

    T, S = _basis_maps()
    M = np.zeros((DIM, DIM))
    M[:-1, :-1] = (S @ Lc @ T).real
    M[:n, LOSS] = R[:n, LOSS_SLOT]
    M[LOSS, :n] = R[LOSS_SLOT, :n]
    M[LOSS, LOSS] = -R[:n, LOSS_SLOT].sum()
    return Liouvillian(M, relax.mode)


@dataclass(frozen=True)
class LiouvillianFamily:
    """Affine family L = base + dp * d_probe + dc * d_coupling + gL * d_wall.

    ``dp`` and ``dc`` are the Doppler-shifted detunings and ``gL`` the
    wall-collision rate, all in rad/s. ``parts`` stacks the four matrices in
    that order (units of ``RATE_UNIT``).
    """

    parts: np.ndarray
    mode: RelaxationMode

    def at(self, dp_eff: float, dc_eff: float, gamma_L: float) -> Liouvillian:
        coeff = self.coefficients(dp_eff, dc_eff, gamma_L)
        return Liouvillian(np.tensordot(coeff, self.parts, axes=1), self.mode)

    def coefficients(self, dp_eff, dc_eff, gamma_L) -> np.ndarray:
        dp_eff, dc_eff, gamma_L = np.broadcast_arrays(dp_eff, dc_eff, gamma_L)
        out = np.empty(dp_eff.shape + (4,))
        out[..., 0] = 1.0
        out[..., 1] = dp_eff / RATE_UNIT
        out[..., 2] = dc_eff / RATE_UNIT
        out[..., 3] = gamma_L / RATE_UNIT
        return out


def build_family(scheme: LevelScheme, fields: FieldConfig,
                 mode=RelaxationMode.TRACE_CONSERVING) -> LiouvillianFamily:
    mode = RelaxationMode(mode)
    still = fields.replace(delta_p=0.0, delta_c=0.0)
    H0 = build_hamiltonian(scheme, still, 0.0)
    Hp = np.diag([0, 0, 1, 1, 1, 1, 1]).astype(complex)
    Hc = np.diag([0, 0, 0, 0, 1, 1, 1]).astype(complex)
    zero = zero_relaxation(mode)
    bare = scheme.replace(gamma=(0.0,) * 5, gamma12=0.0, gamma_self=0.0)
    parts = np.stack([
        build_liouvillian(H0, build_relaxation(scheme, 0.0, mode)).matrix,
        build_liouvillian(Hp * RATE_UNIT, zero).matrix,
        build_liouvillian(Hc * RATE_UNIT, zero).matrix,
        build_liouvillian(np.zeros((7, 7)), build_relaxation(bare, RATE_UNIT, mode)).matrix,
    ])
    parts.setflags(write=False)
    return LiouvillianFamily(parts, mode)
