"""
Repository pattern for algebra data.
Loads algebra files from the data directory, validates them and falls back
to the built-in catalog builders; lists the orbit families.
"""

import json
import logging
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Union

from pydantic import ValidationError

from .algebra import (
    DecompositionMeta, LieAlgebra, build_heis, build_hsp, build_mot2, build_osc, build_sl2, build_so12,
    build_su2, from_triples, to_triples, validate_algebra,
)
from .config import Settings, get_settings
from .errors import InvalidAlgebra
from .models import AlgebraFile, AlgebraMetaFile

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

CATALOG: Dict[str, Callable[[], LieAlgebra]] = {
    "sl2": build_sl2,
    "su2": build_su2,
    "so12": build_so12,
    "heis3": lambda: build_heis(1),
    "osc": build_osc,
    "hsp1": lambda: build_hsp(1),
    "mot2": build_mot2,
}

FAMILIES: Dict[str, str] = {
    "sl2-nilpotent": "upper nilpotent cone of so(1,2); Z(z, s) = 2 pi / sqrt(z^2 - s^2)",
    "sl2-hyperboloid:m": "upper sheet of alpha_0^2 - |alpha'|^2 = m^2; Z(t z0) = e^{-tm} / t",
    "su2:rho": "sphere of radius rho in su(2)*; Z(t z0) = 2 sinh(rho t) / t",
    "osc:lc,lz": "oscillator plane alpha(c) = lc; Z(s c + t z0) = 2 e^{-s lc - t lz} / t",
    "hsp:n,lc": "affine orbit R^{2n} in heis x| sp(2n); Gaussian Laplace transform",
    "point:a1,...": "fixed point of an abelian algebra; Z = e^{-lambda0(x)}",
    "product:A+B": "product of catalog families on the direct sum",
}


def _field_path(loc: Sequence[Union[str, int]]) -> str:
    path = ""
    for part in loc:
        path += f"[{part}]" if isinstance(part, int) else (f".{part}" if path else str(part))
    return path


def to_file(algebra: LieAlgebra) -> AlgebraFile:
    """Algebra file content for an algebra, structure constants as sparse triples."""
    meta = None
    if algebra.meta is not None:
        meta = AlgebraMetaFile(
            center=algebra.meta.center.tolist(), cartan=algebra.meta.cartan.tolist(),
            v_space=algebra.meta.v_space.tolist(), levi=algebra.meta.levi.tolist(),
        )
    return AlgebraFile(name=algebra.name, dim=algebra.dim, basis=list(algebra.basis_names),
                       structure=to_triples(algebra, tol=1e-15), meta=meta)


def from_file(data: AlgebraFile, settings: Optional[Settings] = None) -> LieAlgebra:
    """Build and validate an algebra from parsed file content."""
    meta = None
    if data.meta is not None:
        for field in ("center", "cartan", "v_space", "levi"):
            for pos, vector in enumerate(getattr(data.meta, field)):
                if len(vector) != data.dim:
                    raise InvalidAlgebra(f"vector has {len(vector)} entries, expected {data.dim}", f"meta.{field}[{pos}]")
        meta = DecompositionMeta.build(data.dim, data.meta.center, data.meta.cartan, data.meta.v_space, data.meta.levi)
    algebra = from_triples(data.name, data.basis, data.structure, meta)
    return validate_algebra(algebra, settings)


class AlgebraRepository:
    """Repository for algebra files in a data directory."""

    def __init__(self, data_dir: Optional[PathLike] = None, settings: Optional[Settings] = None):
        self.settings = settings or get_settings()
        self.data_dir = Path(data_dir or self.settings.data_dir)

    def load(self, path: PathLike) -> LieAlgebra:
        """Load an algebra file; every failure is an InvalidAlgebra with a field path."""
        path = Path(path)
        try:
            raw = json.loads(path.read_text())
        except OSError as e:
            raise InvalidAlgebra(f"cannot read {path}: {e.strerror}")
        except json.JSONDecodeError as e:
            raise InvalidAlgebra(f"malformed JSON in {path.name}: {e.msg}", f"line {e.lineno}")
        try:
            data = AlgebraFile.model_validate(raw)
        except ValidationError as e:
            first = e.errors()[0]
            raise InvalidAlgebra(first["msg"], _field_path(first["loc"]) or None)
        algebra = from_file(data, self.settings)
        logger.debug(f"Loaded algebra '{algebra.name}' (dim {algebra.dim}) from {path}")
        return algebra

    def get_by_name(self, name: str) -> LieAlgebra:
        """Algebra from <data_dir>/<name>.json, else from the built-in catalog."""
        path = self.data_dir / f"{name}.json"
        if path.exists():
            return self.load(path)
        if name in CATALOG:
            return validate_algebra(CATALOG[name](), self.settings)
        raise InvalidAlgebra(f"unknown algebra '{name}' (catalog: {', '.join(sorted(CATALOG))})")

    def resolve(self, ref: PathLike) -> LieAlgebra:
        """A file path when one exists, otherwise a catalog name."""
        path = Path(ref)
        if path.suffix == ".json" or path.exists():
            return self.load(path)
        return self.get_by_name(str(ref))

    def get_all_names(self) -> List[str]:
        stored = {p.stem for p in self.data_dir.glob("*.json")} if self.data_dir.is_dir() else set()
        return sorted(stored | set(CATALOG))

    def save(self, algebra: LieAlgebra, path: Optional[PathLike] = None) -> Path:
        path = Path(path) if path else self.data_dir / f"{algebra.name}.json"
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(to_file(algebra).model_dump_json(indent=2) + "\n")
        return path


class FamilyRepository:
    """Orbit families known to parse_family."""

    def get_all(self) -> Dict[str, str]:
        return dict(FAMILIES)


class CatalogRepository:
    """Unified access to algebras and orbit families."""

    def __init__(self, data_dir: Optional[PathLike] = None, settings: Optional[Settings] = None):
        self.algebras = AlgebraRepository(data_dir, settings)
        self.families = FamilyRepository()
