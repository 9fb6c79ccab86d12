"""
Command-line front end.

Every command prints one report on stdout (JSON, or CSV where rows make
sense) and logs to stderr. Exit codes: 0 report computed, 1 invalid input
or numerical error, 2 report differs from the --expect file.
"""

import csv
import functools
import io
import json
import logging
import math
import sys
from typing import Any, Dict, List, Optional, Sequence

import click
from pydantic import BaseModel, ValidationError

from .config import Settings, get_settings
from .errors import InvalidParameter, OrbitThermoError
from .models import (
    DomainScanReport, OutputFormat, RunConfig, ThermoGridReport, ThermoReport, VerifyConfig, VerifyReport,
)
from .orbits import parse_family
from .repositories import CatalogRepository
from .services import (
    ClassificationService, DomainScanService, LegendreService, PartitionService, VerificationService,
)

logger = logging.getLogger(__name__)

VERIFY_COLUMNS = ["x", "closed_form", "oracle", "stderr", "rel_error", "passed"]
SCAN_COLUMNS = ["x", "cartan", "predicted", "observed", "z", "match"]
PARTITION_COLUMNS = ["x", "coordinates", "finite", "z", "log_z", "q", "entropy", "fisher_eigenvalues", "method"]

PARTITION_METHODS = ("dh", "catalog", "gaussian", "product", "quad", "mc")


class ExpectationMismatch(Exception):
    """Report differs from the --expect file."""


def _floats(text: str, what: str) -> List[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise InvalidParameter(f"{what} must be comma-separated numbers, got '{text}'")


def _grid(text: Optional[str]) -> Optional[List[List[float]]]:
    """Points separated by ';', coordinates by ','."""
    if not text:
        return None
    return [_floats(part, "grid point") for part in text.split(";") if part.strip()]


def _tolerances(items: Sequence[str]) -> Dict[str, float]:
    out = {}
    for item in items:
        key, sep, value = item.partition("=")
        if not sep:
            raise InvalidParameter(f"--tol expects key=value, got '{item}'")
        try:
            out[key.strip()] = float(value)
        except ValueError:
            raise InvalidParameter(f"--tol {key}: '{value}' is not a number")
    return out


def _settings(config: RunConfig) -> Settings:
    overrides: Dict[str, Any] = {**config.tolerances, "seed": config.seed}
    if config.radius_factor is not None:
        overrides["radius_factor"] = config.radius_factor
    try:
        return get_settings().with_overrides(overrides)
    except ValueError as e:
        raise InvalidParameter(str(e))


def _cell(value: Any) -> Any:
    if isinstance(value, list):
        return " ".join(f"{v:.12g}" if isinstance(v, float) else str(v) for v in value)
    if hasattr(value, "value"):
        return value.value
    return value


def _rows_csv(rows: List[BaseModel], columns: List[str]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_cell(getattr(row, c)) for c in columns])
    return buffer.getvalue()


def _render(report: BaseModel, output: OutputFormat) -> str:
    if output == OutputFormat.JSON:
        return report.model_dump_json(by_alias=True, indent=2)
    if isinstance(report, VerifyReport):
        return _rows_csv(report.rows, VERIFY_COLUMNS)
    if isinstance(report, DomainScanReport):
        return _rows_csv(report.rows, SCAN_COLUMNS)
    if isinstance(report, ThermoGridReport):
        return _rows_csv(report.points, PARTITION_COLUMNS)
    if isinstance(report, ThermoReport):
        return _rows_csv([report], PARTITION_COLUMNS)
    raise InvalidParameter("CSV output is available for partition, verify and scan")


def _matches(expected: Any, actual: Any) -> bool:
    if isinstance(expected, dict) and isinstance(actual, dict):
        return all(k in actual and _matches(v, actual[k]) for k, v in expected.items())
    if isinstance(expected, list) and isinstance(actual, list):
        return len(expected) == len(actual) and all(_matches(e, a) for e, a in zip(expected, actual))
    if isinstance(expected, (int, float)) and isinstance(actual, (int, float)) and not isinstance(expected, bool):
        return math.isclose(expected, actual, rel_tol=1e-6, abs_tol=1e-9)
    return expected == actual


def _emit(report: BaseModel, config: RunConfig) -> None:
    click.echo(_render(report, config.output))
    if config.expect:
        try:
            with open(config.expect) as f:
                expected = json.load(f)
        except (OSError, json.JSONDecodeError) as e:
            raise InvalidParameter(f"cannot read expectation file {config.expect}: {e}")
        actual = json.loads(report.model_dump_json(by_alias=True))
        wrong = sorted(k for k, v in expected.items() if k not in actual or not _matches(v, actual[k]))
        if wrong:
            raise ExpectationMismatch(f"report differs from {config.expect} in: {', '.join(wrong)}")


def handle_errors(command):
    """Translate domain errors into exit code 1 and expectation mismatches into 2."""
    @functools.wraps(command)
    def wrapper(*args, **kwargs):
        try:
            return command(*args, **kwargs)
        except ExpectationMismatch as e:
            click.echo(f"Mismatch: {e}", err=True)
            sys.exit(2)
        except ValidationError as e:
            click.echo(f"Error: invalid options: {e}", err=True)
            sys.exit(1)
        except OrbitThermoError as e:
            click.echo(f"Error: {e}", err=True)
            sys.exit(1)
        except Exception as e:
            logger.exception("Unexpected failure")
            click.echo(f"Error: {e}", err=True)
            sys.exit(1)
    return wrapper


def run_options(command):
    """Options shared by every computing command."""
    options = [
        click.option("--seed", type=int, default=None, help="Master seed (default 42 or ORBIT_THERMO_SEED)."),
        click.option("--tol", "tol", multiple=True, help="Settings override key=value, repeatable."),
        click.option("--radius-factor", type=float, default=None, help="Quadrature truncation factor."),
        click.option("--output", type=click.Choice([f.value for f in OutputFormat]), default="json"),
        click.option("--expect", type=click.Path(), default=None, help="JSON file of expected report fields."),
    ]
    for option in reversed(options):
        command = option(command)
    return command


def _config(cls, seed, tol, radius_factor, output, expect, **extra) -> RunConfig:
    values = dict(tolerances=_tolerances(tol), radius_factor=radius_factor, output=output, expect=expect,
                  seed=get_settings().seed if seed is None else seed, **extra)
    return cls(**{k: v for k, v in values.items() if v is not None})


@click.group()
@click.option("--verbose", is_flag=True, help="Log at DEBUG level on stderr.")
def cli(verbose: bool):
    """Gibbs ensembles on coadjoint orbits: classification, partition functions and checks."""
    logging.basicConfig(level=logging.DEBUG if verbose else logging.WARNING, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s", force=True)


@cli.command()
@click.argument("algebra")
@run_options
@handle_errors
def check(algebra, seed, tol, radius_factor, output, expect):
    """Validate ALGEBRA (file or catalog name) and print roots, Weyl group, systems and cones."""
    config = _config(RunConfig, seed, tol, radius_factor, output, expect)
    settings = _settings(config)
    lie = CatalogRepository(settings=settings).algebras.resolve(algebra)
    _emit(ClassificationService(settings).check(lie), config)


@cli.command()
@click.argument("algebra")
@click.option("--functional", required=True, help="Coefficients of lambda in the dual basis, comma-separated.")
@click.option("--samples", type=int, default=None, help="Falsifier samples when lambda is outside t*.")
@run_options
@handle_errors
def classify(algebra, functional, samples, seed, tol, radius_factor, output, expect):
    """Decide whether the coadjoint orbit of lambda carries Gibbs ensembles."""
    config = _config(RunConfig, seed, tol, radius_factor, output, expect)
    settings = _settings(config)
    lie = CatalogRepository(settings=settings).algebras.resolve(algebra)
    report = ClassificationService(settings).classify(lie, _floats(functional, "--functional"), samples, config.seed)
    _emit(report, config)


@cli.command()
@click.option("--family", required=True, help="Orbit family, see 'families'.")
@click.option("--at", "at", default=None, help="Point x, comma-separated algebra coordinates.")
@click.option("--grid", default=None, help="Points 'x1,x2,..;y1,y2,..' instead of --at.")
@click.option("--method", default="catalog", help=f"One of {', '.join(PARTITION_METHODS)}.")
@click.option("--samples", type=int, default=100_000)
@click.option("--quad-level", type=int, default=0)
@run_options
@handle_errors
def partition(family, at, grid, method, samples, quad_level, seed, tol, radius_factor, output, expect):
    """Z, Q, entropy and Fisher-Rao metric of a family at x, or at every grid point.

    CSV columns: x, coordinates, finite, z, log_z, q, entropy, fisher_eigenvalues, method.
    """
    if method not in PARTITION_METHODS:
        raise InvalidParameter(f"--method must be one of {', '.join(PARTITION_METHODS)}")
    if (at is None) == (grid is None):
        raise InvalidParameter("give exactly one of --at and --grid")
    config = _config(RunConfig, seed, tol, radius_factor, output, expect, samples=samples, quad_level=quad_level)
    service = PartitionService(_settings(config))
    model = parse_family(family)
    if grid is not None:
        report = service.partition_grid(model, _grid(grid), method, config.samples, config.seed, config.quad_level)
    else:
        report = service.partition(model, _floats(at, "--at"), method, config.samples, config.seed,
                                   config.quad_level)
    _emit(report, config)


@cli.command()
@click.option("--family", required=True)
@click.option("--grid", default=None, help="Points 'x1,x2,..;y1,y2,..'; a family default when omitted.")
@click.option("--method", default="quad", help="quad or mc.")
@click.option("--samples", type=int, default=100_000, help="MC samples, at least 10000.")
@click.option("--quad-level", type=int, default=0)
@click.option("--tolerance", type=float, default=1e-6, help="Relative tolerance of quadrature rows.")
@run_options
@handle_errors
def verify(family, grid, method, samples, quad_level, tolerance, seed, tol, radius_factor, output, expect):
    """Closed form against the oracle on a grid; exit 1 when a row fails.

    CSV columns: x, closed_form, oracle, stderr, rel_error, passed.
    """
    config = _config(VerifyConfig, seed, tol, radius_factor, output, expect, samples=samples, quad_level=quad_level)
    settings = _settings(config)
    report = VerificationService(settings).verify(parse_family(family), _grid(grid), method, config.samples,
                                                  config.seed, config.quad_level, tolerance)
    _emit(report, config)
    if not report.passed:
        sys.exit(1)


@cli.command()
@click.option("--family", required=True)
@click.option("--nx", type=int, default=50, help="Sampled points of the temperature domain.")
@click.option("--norbit", type=int, default=200, help="Sampled orbit points per hull test.")
@click.option("--mc/--no-mc", default=False, help="Also compare Q against Monte Carlo moments.")
@click.option("--samples", type=int, default=100_000)
@run_options
@handle_errors
def legendre(family, nx, norbit, mc, samples, seed, tol, radius_factor, output, expect):
    """Containment, injectivity and central invariance of the heat map Q."""
    config = _config(VerifyConfig, seed, tol, radius_factor, output, expect, samples=samples)
    settings = _settings(config)
    report = LegendreService(settings).check(parse_family(family), nx, norbit, config.seed,
                                             config.samples if mc else None)
    _emit(report, config)


@cli.command()
@click.option("--family", required=True)
@click.option("--grid", default=None, help="Explicit points; conjugated Cartan grid when omitted.")
@click.option("--values", default="-1,-0.1,0.1,1", help="Cartan grid values per axis.")
@click.option("--conjugations", type=int, default=5)
@run_options
@handle_errors
def scan(family, grid, values, conjugations, seed, tol, radius_factor, output, expect):
    """Predicted temperature membership against the divergence probe.

    CSV columns: x, cartan, predicted, observed, z, match.
    """
    config = _config(RunConfig, seed, tol, radius_factor, output, expect)
    settings = _settings(config)
    report = DomainScanService(settings).scan(parse_family(family), _grid(grid), _floats(values, "--values"),
                                              conjugations, config.seed)
    _emit(report, config)


@cli.command()
@handle_errors
def families():
    """List the orbit families and catalog algebras."""
    catalog = CatalogRepository()
    for name, description in catalog.families.get_all().items():
        click.echo(f"{name:22s} {description}")
    click.echo("")
    click.echo("algebras: " + ", ".join(catalog.algebras.get_all_names()))


def main() -> None:
    cli()
