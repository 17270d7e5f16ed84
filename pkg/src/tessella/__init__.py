"""Polyform tiling analysis: enumeration, Heesch numbers, isohedral numbers."""

from .certify import verify_patch, verify_periodic
from .classifier import Classification, batch_classify, classify
from .corona import heesch_number, n_patch_exists
from .errors import BudgetExceeded, FormatError, Inconclusive, ValidationError
from .isohedral import PeriodicCertificate, isohedral_number_upper, translation_criterion
from .lattice import GridKind, Isometry, get_lattice
from .polyform import Polyform, builtin, canonicalize, enumerate_polyforms, make_polyform

__version__ = "0.1.0"

__all__ = [
    "BudgetExceeded", "Classification", "FormatError", "GridKind", "Inconclusive", "Isometry",
    "PeriodicCertificate", "Polyform", "ValidationError", "batch_classify", "builtin", "canonicalize",
    "classify", "enumerate_polyforms", "get_lattice", "heesch_number", "isohedral_number_upper",
    "make_polyform", "n_patch_exists", "translation_criterion", "verify_patch", "verify_periodic",
]
