"""Hyperfine structure of non-Kramers f^2 ions in crystals.

Crystal-field and hyperfine Hamiltonians, spin-Hamiltonian extraction,
spectral hole burning, echo / line fitting and cavity enhancement estimates.
"""
from importlib.metadata import PackageNotFoundError, version

try:
    __version__ = version("artifact")
except PackageNotFoundError:  # running from a source tree
    __version__ = "0.1.0"

from .angular import HalfInt, TermLabel, wigner3j, wigner6j, wigner9j  # noqa: E402
from .electronic import (  # noqa: E402
    CrystalFieldParams,
    FreeIonParams,
    build_electronic_hamiltonian,
    diagonalize_electronic,
)
from .hyperfine import HyperfineParams, HyperfineSystem, MagneticField, NuclearParams  # noqa: E402

__all__ = [
    "__version__",
    "HalfInt",
    "TermLabel",
    "wigner3j",
    "wigner6j",
    "wigner9j",
    "CrystalFieldParams",
    "FreeIonParams",
    "build_electronic_hamiltonian",
    "diagonalize_electronic",
    "HyperfineParams",
    "HyperfineSystem",
    "MagneticField",
    "NuclearParams",
]
