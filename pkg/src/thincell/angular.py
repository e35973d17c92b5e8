"""Angular-momentum algebra for hyperfine dipole transitions.

Wigner 6-j symbols are evaluated with the Racah single-sum formula in exact
integer/rational arithmetic and converted to float only at the end. A second,
independent evaluation through the Schulten-Gordon three-term recursion is
provided for cross-checking.

Dipole moments are returned in SI units (C m). Divide by ``E_A0`` for atomic
units (e a0).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from numbers import Real

import numpy as np
from scipy import constants

from .errors import InvalidCoupling, MismatchedQuantumNumbers, NonPositiveInput

E_A0 = constants.e * constants.physical_constants["Bohr radius"][0]


@dataclass(frozen=True, order=True)
class HalfInt:
    """Non-negative half-integer stored as twice its value."""

    twice: int

    def __post_init__(self):
        if not isinstance(self.twice, (int, np.integer)):
            raise TypeError(f"twice must be an integer, got {self.twice!r}")
        if self.twice < 0:
            raise ValueError("angular momentum must be non-negative")
        object.__setattr__(self, "twice", int(self.twice))

    @classmethod
    def coerce(cls, value) -> "HalfInt":
        if isinstance(value, HalfInt):
            return value
        if isinstance(value, (Fraction, Real)):
            twice = 2 * Fraction(value).limit_denominator(2)
            if twice.denominator != 1 or 2 * Fraction(value) != twice:
                raise ValueError(f"{value!r} is not a half-integer")
            return cls(int(twice))
        raise TypeError(f"cannot interpret {value!r} as a half-integer")

    @property
    def value(self) -> float:
        return self.twice / 2

    @property
    def degeneracy(self) -> int:
        return self.twice + 1

    def __float__(self):
        return self.value

    def __repr__(self):
        if self.twice % 2:
            return f"HalfInt({self.twice}/2)"
        return f"HalfInt({self.twice // 2})"


def _triad_ok(a: int, b: int, c: int) -> bool:
    # arguments are doubled values
    return (a + b + c) % 2 == 0 and abs(a - b) <= c <= a + b


def _delta_sq(a: int, b: int, c: int) -> Fraction:
    f = math.factorial
    return Fraction(
        f((a + b - c) // 2) * f((a - b + c) // 2) * f((-a + b + c) // 2),
        f((a + b + c) // 2 + 1),
    )


def wigner_6j(j1, j2, j3, j4, j5, j6) -> float:
    """Wigner 6-j symbol {j1 j2 j3; j4 j5 j6} via the Racah formula.

    Arguments may be ``HalfInt`` or plain numbers (0.5, 1, 1.5 ...). Returns
    exactly 0.0 when any triad violates the triangle or integer-perimeter rule.
    """
    t1, t2, t3, t4, t5, t6 = (HalfInt.coerce(j).twice for j in (j1, j2, j3, j4, j5, j6))
    triads = ((t1, t2, t3), (t1, t5, t6), (t4, t2, t6), (t4, t5, t3))
    if not all(_triad_ok(*tr) for tr in triads):
        return 0.0

    a = [sum(tr) // 2 for tr in triads]
    b = [(t1 + t2 + t4 + t5) // 2, (t2 + t3 + t5 + t6) // 2, (t3 + t1 + t6 + t4) // 2]
    f = math.factorial
    total = Fraction(0)
    for t in range(max(a), min(b) + 1):
        den = f(t - a[0]) * f(t - a[1]) * f(t - a[2]) * f(t - a[3])
        den *= f(b[0] - t) * f(b[1] - t) * f(b[2] - t)
        total += Fraction((-1) ** t * f(t + 1), den)
    if total == 0:
        return 0.0
    norm_sq = Fraction(1)
    for tr in triads:
        norm_sq *= _delta_sq(*tr)
    magnitude = math.sqrt(total * total * norm_sq)
    return math.copysign(magnitude, total)


def wigner_6j_recursion(j1, j2, j3, j4, j5, j6) -> float:
    """Independent 6-j evaluation by the Schulten-Gordon recursion in ``j1``.

    The whole family {x j2 j3; j4 j5 j6} is generated downward from the
    largest allowed ``x``, normalised with the orthogonality sum
    ``sum_x (2x+1)(2 j4+1) {...}^2 = 1`` and phased by
    ``sign{x_max ...} = (-1)^(j2+j3+j5+j6)``.
    """
    args = [HalfInt.coerce(j).value for j in (j1, j2, j3, j4, j5, j6)]
    x, b, c, l1, l2, l3 = args
    if not (
        _triad_ok(*(HalfInt.coerce(v).twice for v in (x, b, c)))
        and _triad_ok(*(HalfInt.coerce(v).twice for v in (x, l2, l3)))
        and _triad_ok(*(HalfInt.coerce(v).twice for v in (l1, b, l3)))
        and _triad_ok(*(HalfInt.coerce(v).twice for v in (l1, l2, c)))
    ):
        return 0.0

    lo = max(abs(b - c), abs(l2 - l3))
    hi = min(b + c, l2 + l3)
    n = int(round(hi - lo)) + 1
    xs = lo + np.arange(n)

    def E(j):
        return math.sqrt(
            max(0.0, (j * j - (b - c) ** 2) * ((b + c + 1) ** 2 - j * j)
                * (j * j - (l2 - l3) ** 2) * ((l2 + l3 + 1) ** 2 - j * j))
        )

    def F(j):
        jj, bb, cc = j * (j + 1), b * (b + 1), c * (c + 1)
        m1, m2, m3 = l1 * (l1 + 1), l2 * (l2 + 1), l3 * (l3 + 1)
        return (2 * j + 1) * (
            jj * (-jj + bb + cc) + m2 * (jj + bb - cc) + m3 * (jj - bb + cc) - 2 * jj * m1
        )

    f = np.zeros(n)
    f[-1] = 1.0
    for k in range(n - 1, 0, -1):
        j = xs[k]
        upper = j * E(j + 1) * f[k + 1] if k + 1 < n else 0.0
        f[k - 1] = -(upper + F(j) * f[k]) / ((j + 1) * E(j))

    f /= math.sqrt(np.sum((2 * xs + 1) * (2 * l1 + 1) * f * f))
    phase = (-1) ** int(round(b + c + l2 + l3))
    if math.copysign(1.0, f[-1]) != phase:
        f = -f
    k = int(round(x - lo))
    return float(f[k])


@dataclass(frozen=True)
class TransitionStrength:
    F: HalfInt
    F_prime: HalfInt
    value: float


def _check_coupling(F: HalfInt, J: HalfInt, I: HalfInt, label: str):
    if not _triad_ok(J.twice, I.twice, F.twice):
        raise InvalidCoupling(
            f"{label}={F.value:g} is not in [|J-I|, J+I] = "
            f"[{abs(J.value - I.value):g}, {J.value + I.value:g}]"
        )


def transition_strength(F, F_prime, J, J_prime, I) -> TransitionStrength:
    """Hyperfine line-strength factor ``(2F'+1)(2J+1) {J J' 1; F' F I}^2``."""
    F, F_prime, J, J_prime, I = (HalfInt.coerce(q) for q in (F, F_prime, J, J_prime, I))
    _check_coupling(F, J, I, "F")
    _check_coupling(F_prime, J_prime, I, "F'")
    sixj = wigner_6j(J, J_prime, 1, F_prime, F, I)
    value = F_prime.degeneracy * J.degeneracy * sixj * sixj
    return TransitionStrength(F, F_prime, value)


def strength_table(F, J, J_prime, I) -> list[TransitionStrength]:
    """All non-zero strengths out of ``F`` into the primed manifold."""
    F, J, J_prime, I = (HalfInt.coerce(q) for q in (F, J, J_prime, I))
    rows = []
    for twice in range(abs(J_prime.twice - I.twice), J_prime.twice + I.twice + 1, 2):
        s = transition_strength(F, HalfInt(twice), J, J_prime, I)
        if s.value > 0:
            rows.append(s)
    return rows


def reduced_dipole(omega0: float, tau: float, J_i, J_j) -> float:
    """Reduced dipole |<J_i||e r||J_j>| in C m from a transition lifetime.

    Square root of ``3 pi eps0 hbar c^3 / (omega0^3 tau) * (2 J_j + 1)/(2 J_i + 1)``.
    """
    if omega0 <= 0 or tau <= 0:
        raise NonPositiveInput(f"omega0 and tau must be positive (got {omega0}, {tau})")
    J_i, J_j = HalfInt.coerce(J_i), HalfInt.coerce(J_j)
    c = constants.c
    sq = 3 * math.pi * constants.epsilon_0 * constants.hbar * c**3 / (omega0**3 * tau)
    return math.sqrt(sq * J_j.degeneracy / J_i.degeneracy)


def hyperfine_dipole(reduced: float, F_i, F_j, J_i, I, strength: TransitionStrength):
    """Hyperfine dipole ``reduced * (-1)^(F_j + J_i + 1 + I) * sqrt(S)``.

    The phase is real for physical (integer-exponent) inputs; otherwise the
    result is complex.
    """
    F_i, F_j, J_i, I = (HalfInt.coerce(q) for q in (F_i, F_j, J_i, I))
    if strength.F != F_i or strength.F_prime != F_j:
        raise MismatchedQuantumNumbers(
            f"strength is for F={strength.F.value:g}->F'={strength.F_prime.value:g}, "
            f"dipole requested for F={F_i.value:g}->F'={F_j.value:g}"
        )
    twice_exp = F_j.twice + J_i.twice + 2 + I.twice
    if twice_exp % 2 == 0:
        phase = -1.0 if (twice_exp // 2) % 2 else 1.0
    else:
        phase = 1j**twice_exp
    return reduced * phase * math.sqrt(strength.value)
