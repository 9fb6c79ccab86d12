#!/usr/bin/env python3
"""
Catalog initialization script.
Writes the built-in algebras to the data directory as algebra files.
"""

import sys
from pathlib import Path


def init_catalog(data_dir: Path) -> bool:
    """Regenerate data/algebras/*.json from the builders."""
    try:
        from orbit_thermo.algebra import validate_algebra
        from orbit_thermo.errors import OrbitThermoError
        from orbit_thermo.repositories import CATALOG, AlgebraRepository

        repo = AlgebraRepository(data_dir)
        print(f"Writing {len(CATALOG)} algebras to {data_dir}")
        for name, build in CATALOG.items():
            algebra = validate_algebra(build())
            path = repo.save(algebra, data_dir / f"{name}.json")
            reloaded = repo.load(path)
            print(f"  {name}: dim {reloaded.dim}, {len(reloaded.cartan)} Cartan vector(s) -> {path.name}")
        print("Catalog written")
        return True
    except OrbitThermoError as e:
        print(f"Catalog initialization failed: {e}")
        return False


if __name__ == "__main__":
    target = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(__file__).parent / "data" / "algebras"
    sys.exit(0 if init_catalog(target) else 1)
