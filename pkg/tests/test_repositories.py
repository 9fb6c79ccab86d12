import json
from pathlib import Path

import numpy as np
import pytest

from init_catalog import init_catalog
from orbit_thermo.errors import InvalidAlgebra
from orbit_thermo.repositories import CATALOG, AlgebraRepository, CatalogRepository

DATA_DIR = Path(__file__).resolve().parent.parent / "data" / "algebras"


@pytest.mark.parametrize("name", sorted(CATALOG))
def test_data_files_match_builders(name):
    stored = AlgebraRepository(DATA_DIR).load(DATA_DIR / f"{name}.json")
    built = CATALOG[name]()
    assert stored.basis_names == built.basis_names
    assert stored.structure == pytest.approx(built.structure, abs=1e-9)
    assert np.allclose(stored.cartan, built.cartan, atol=1e-9)


def test_save_and_reload(tmp_path, so12):
    repo = AlgebraRepository(tmp_path)
    path = repo.save(so12)
    assert path == tmp_path / "so12.json"
    again = repo.get_by_name("so12")
    assert again.structure == pytest.approx(so12.structure, abs=1e-12)
    assert "so12" in repo.get_all_names()


def test_catalog_fallback(tmp_path):
    repo = AlgebraRepository(tmp_path)
    assert repo.get_by_name("su2").dim == 3
    assert repo.resolve("osc").dim == 4
    with pytest.raises(InvalidAlgebra):
        repo.get_by_name("e8")


def _write(tmp_path, content):
    path = tmp_path / "broken.json"
    path.write_text(content if isinstance(content, str) else json.dumps(content))
    return path


def test_malformed_json_reports_line(tmp_path):
    path = _write(tmp_path, "{\n  \"name\": \"x\",\n  oops\n}")
    with pytest.raises(InvalidAlgebra) as err:
        AlgebraRepository(tmp_path).load(path)
    assert err.value.path == "line 3"


def test_schema_errors_report_field(tmp_path):
    path = _write(tmp_path, {"name": "x", "dim": 0, "basis": []})
    with pytest.raises(InvalidAlgebra) as err:
        AlgebraRepository(tmp_path).load(path)
    assert err.value.path == "dim"


def test_meta_vector_length_is_checked(tmp_path):
    content = {
        "name": "line", "dim": 1, "basis": ["a"], "structure": [],
        "meta": {"center": [[1.0]], "cartan": [[1.0, 0.0]], "v_space": [], "levi": []},
    }
    with pytest.raises(InvalidAlgebra) as err:
        AlgebraRepository(tmp_path).resolve(_write(tmp_path, content))
    assert err.value.path == "meta.cartan[0]"


def test_family_listing():
    families = CatalogRepository().families.get_all()
    assert "sl2-nilpotent" in families
    assert any(key.startswith("product") for key in families)


def test_init_catalog(tmp_path):
    assert init_catalog(tmp_path)
    assert sorted(p.stem for p in tmp_path.glob("*.json")) == sorted(CATALOG)
