"""Fixed conversion constants. Internal arithmetic uses atomic units (hbar = 1)."""

HARTREE_TO_INVCM = 219474.6313632
AMU_TO_ELECTRON_MASS = 1822.888486209
BOHR_TO_ANGSTROM = 0.529177210903
ANGSTROM_TO_BOHR = 1.0 / BOHR_TO_ANGSTROM

# Atomic masses in amu (AME2016).
ATOMIC_MASSES = {
    "6Li": 6.0151228874,
    "7Li": 7.0160034366,
    "85Rb": 84.9117897379,
    "87Rb": 86.9091805310,
    "23Na": 22.9897692820,
    "39K": 38.9637064864,
    "133Cs": 132.9054519610,
}


def invcm_to_hartree(x):
    return x / HARTREE_TO_INVCM


def hartree_to_invcm(x):
    return x * HARTREE_TO_INVCM


def reduced_mass_amu(m1: float | str, m2: float | str) -> float:
    """Reduced mass in amu from two masses given in amu or as isotope labels like ``"7Li"``."""
    a = ATOMIC_MASSES[m1] if isinstance(m1, str) else float(m1)
    b = ATOMIC_MASSES[m2] if isinstance(m2, str) else float(m2)
    return a * b / (a + b)


def amu_to_me(mass_amu: float) -> float:
    return mass_amu * AMU_TO_ELECTRON_MASS


LIRB_REDUCED_MASS_AMU = reduced_mass_amu("7Li", "85Rb")
