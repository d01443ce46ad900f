"""Unit systems and physical constants.

Every downstream module takes an explicit UnitSystem; nothing reads global
state. The default is Hartree atomic units (hbar = m = e2k = 1, c = 1/alpha),
where the non-relativistic hydrogen levels are -1/(2 n^2) exactly and the
fine structure constant alpha is the only knob. An SI-flavoured system is
provided for dimension checks.
"""

from __future__ import annotations

from dataclasses import dataclass

__all__ = ["UnitSystem", "make_units", "HARTREE_ATOMIC", "SI_LIKE"]

HARTREE_ATOMIC = "hartree_atomic"
SI_LIKE = "si_like"

_SI_HBAR = 1.054571817e-34   # J s
_SI_MASS = 9.1093837015e-31  # kg, electron
_SI_C = 299792458.0          # m / s


@dataclass(frozen=True)
class UnitSystem:
    """Primary constants plus the derived quantities the solvers use.

    hbar, mass, c and e2k (Coulomb coupling e^2 k, energy times length) are
    primary. Derived once at construction: alpha = e2k / (hbar c), the rest
    energy m c^2, the Rydberg energy m e2k^2 / (2 hbar^2), and the
    momentum-dimension Coulomb coupling e2k / c that multiplies the control
    momentum in the radial generator. Instances are immutable and safe to
    share across threads.
    """

    hbar: float
    mass: float
    c: float
    e2k: float
    alpha: float
    rest_energy: float
    rydberg_energy: float
    coulomb_momentum: float
    system: str = "custom"

    @classmethod
    def create(cls, hbar: float, mass: float, c: float, e2k: float,
               system: str = "custom") -> "UnitSystem":
        if min(hbar, mass, c, e2k) <= 0.0:
            raise ValueError("hbar, mass, c and e2k must all be positive")
        alpha = e2k / (hbar * c)
        if not 0.0 < alpha < 1.0:
            raise ValueError(f"derived alpha = {alpha} lies outside (0, 1)")
        return cls(
            hbar=hbar,
            mass=mass,
            c=c,
            e2k=e2k,
            alpha=alpha,
            rest_energy=mass * c * c,
            rydberg_energy=mass * e2k * e2k / (2.0 * hbar * hbar),
            coulomb_momentum=e2k / c,
            system=system,
        )

    @property
    def mc(self) -> float:
        """Momentum scale m c; the stationary control sits near 2 m c."""
        return self.mass * self.c

    @property
    def bohr_radius(self) -> float:
        return self.hbar * self.hbar / (self.mass * self.e2k)


def make_units(alpha: float, system: str = HARTREE_ATOMIC) -> UnitSystem:
    """Build a self-consistent UnitSystem for a given fine structure constant.

    hartree_atomic: hbar = m = e2k = 1, c = 1/alpha. si_like: CODATA hbar,
    electron mass and c, with e2k = alpha * hbar * c. alpha must lie in (0, 1);
    the alpha -> 0 regime is reached by passing a tiny positive value.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    if system == HARTREE_ATOMIC:
        return UnitSystem.create(1.0, 1.0, 1.0 / alpha, 1.0, system=system)
    if system == SI_LIKE:
        return UnitSystem.create(_SI_HBAR, _SI_MASS, _SI_C,
                                 alpha * _SI_HBAR * _SI_C, system=system)
    raise ValueError(f"unknown unit system: {system!r}")
