"""
Gibbs ensembles on coadjoint orbits: root and cone structure of Lie algebras,
partition functions of orbit families and numerical oracles that check them.
"""

from .config import Settings, get_settings
from .errors import OrbitThermoError
from .orbits import parse_family
from .repositories import CatalogRepository
from .services import (
    ClassificationService, DomainScanService, LegendreService, PartitionService, VerificationService,
)

__version__ = "1.0.0"

__all__ = [
    "CatalogRepository",
    "ClassificationService",
    "DomainScanService",
    "LegendreService",
    "OrbitThermoError",
    "PartitionService",
    "Settings",
    "VerificationService",
    "get_settings",
    "parse_family",
]
