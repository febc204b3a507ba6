"""CLI commands for polcoh using cyclopts."""

import logging
import math
import sys
from pathlib import Path
from typing import Annotated, Optional, Sequence

import cyclopts
import numpy as np
from rich.console import Console
from rich.logging import RichHandler
from rich.markup import escape
from rich.table import Table

from . import documents as docs
from .config import Config
from .errors import InputError, NumericalError
from .expansion import predicted_moment
from .fock import coherence_tensor, fock_state, noon_state, random_mixed_state, random_pure_state
from .gadget import MeasurementSetting, TableRow, euler_from_setting, plate_angles_from_euler, table1
from .recipe import MeasurementRecord, condition_report, reconstruct, settings_plan
from .sampler import RNG_ALGORITHM, exact_records, run_campaign
from .tomography import density_from_coherences, stokes_means, stokes_variances

EXIT_INPUT = 2
EXIT_NUMERICAL = 3

app = cyclopts.App(name="polcoh", help="Measure all Nth-order polarization coherences")
console = Console()
err_console = Console(stderr=True)

OutOption = Annotated[
    Optional[Path], cyclopts.Parameter(help="Write the document here instead of stdout")
]
ConfigOption = Annotated[
    Optional[Path], cyclopts.Parameter(help="Path to config file")
]
VerboseOption = Annotated[bool, cyclopts.Parameter(help="Log debug output to stderr")]


def setup(config_path: Optional[Path] = None, verbose: bool = False) -> Config:
    """Configure logging and load the configuration for one command."""
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.WARNING,
        format="%(message)s",
        handlers=[RichHandler(console=err_console, show_time=False, show_path=False)],
        force=True,
    )
    return Config.load(config_path)


def parse_setting(text: str, degrees: bool = False) -> MeasurementSetting:
    """Parse ``theta,phi`` into a setting."""
    parts = text.split(",")
    try:
        theta, phi = (float(p) for p in parts)
    except ValueError:
        raise InputError(f"setting must look like THETA,PHI, got {text!r}") from None
    if degrees:
        return MeasurementSetting.from_degrees(theta, phi)
    return MeasurementSetting(theta, phi)


def _records_document(
    records: list[MeasurementRecord], N: int, rng: Optional[dict] = None
) -> docs.Document:
    return docs.Document("records", docs.records_to_payload(records, N, rng))


def _read_records(path: Path, order: Optional[int] = None) -> tuple[int, list[MeasurementRecord]]:
    N, records = docs.records_from_payload(docs.read_document(path).expect("records"))
    if order is not None and order != N:
        raise InputError(f"{path} holds order-{N} records, not order {order}")
    return N, records


@app.command
def state(
    photons: Annotated[int, cyclopts.Parameter(help="Total photon number N")],
    noon: Annotated[bool, cyclopts.Parameter(help="(|N,0> + |0,N>)/sqrt(2)")] = False,
    fock: Annotated[
        Optional[int], cyclopts.Parameter(help="Number state with this many photons in mode 1")
    ] = None,
    random_state: Annotated[
        bool, cyclopts.Parameter(name="--random", help="Random state drawn from --seed")
    ] = False,
    mixed: Annotated[bool, cyclopts.Parameter(help="Draw a full-rank mixed state")] = False,
    seed: Annotated[Optional[int], cyclopts.Parameter(help="Seed for --random")] = None,
    out: OutOption = None,
    config: ConfigOption = None,
    verbose: VerboseOption = False,
) -> None:
    """Write a state document."""
    cfg = setup(config, verbose)
    chosen = [noon, fock is not None, random_state]
    if sum(chosen) != 1:
        raise InputError("choose exactly one of --noon, --fock or --random")
    if noon:
        result = noon_state(photons)
    elif fock is not None:
        result = fock_state(photons, fock)
    else:
        rng = np.random.default_rng(cfg.seed if seed is None else seed)
        result = random_mixed_state(photons, rng) if mixed else random_pure_state(photons, rng)
    docs.write_document(docs.Document("state", docs.state_to_payload(result)), out, cfg.indent)


@app.command
def plan(
    order: Annotated[int, cyclopts.Parameter(help="Coherence order N")],
    table: Annotated[bool, cyclopts.Parameter(help="Print a table instead of a document")] = False,
    out: OutOption = None,
    config: ConfigOption = None,
    verbose: VerboseOption = False,
) -> None:
    """Emit the (N+1)^2 settings that determine every order-N coherence."""
    cfg = setup(config, verbose)
    result = settings_plan(order)
    if not table:
        docs.write_document(docs.Document("plan", docs.plan_to_payload(result)), out, cfg.indent)
        return

    grid = Table(title=f"Order {result.N} plan ({len(result.settings)} settings)")
    grid.add_column("#", justify="right")
    grid.add_column("theta / pi", style="cyan")
    grid.add_column("phi / pi", style="cyan")
    grid.add_column("theta", style="green")
    grid.add_column("phi", style="green")
    fractions = [(t, p) for t in result.theta_fractions for p in result.phi_fractions]
    if result.extra is not None:
        fractions.append((0, 0))
    for pos, (setting, (tf, pf)) in enumerate(zip(result.settings, fractions), start=1):
        grid.add_row(str(pos), str(tf), str(pf), f"{setting.theta:.6f}", f"{setting.phi:.6f}")
    console.print(grid)


@app.command
def predict(
    state: Annotated[Path, cyclopts.Parameter(help="State document ('-' for stdin)")],
    setting: Annotated[
        Optional[str], cyclopts.Parameter(help="Single setting THETA,PHI")
    ] = None,
    order: Annotated[
        Optional[int], cyclopts.Parameter(help="Predict every setting of this order's plan")
    ] = None,
    degrees: Annotated[bool, cyclopts.Parameter(help="Setting angles are in degrees")] = False,
    out: OutOption = None,
    config: ConfigOption = None,
    verbose: VerboseOption = False,
) -> None:
    """Exact (infinite-shot) intensity moments of a state."""
    cfg = setup(config, verbose)
    if (setting is None) == (order is None):
        raise InputError("pass exactly one of --setting or --order")
    source = docs.state_from_payload(docs.read_document(state).expect("state"))
    if setting is not None:
        chosen = parse_setting(setting, degrees)
        value = predicted_moment(coherence_tensor(source), chosen)
        doc = _records_document([MeasurementRecord(chosen, value)], source.N)
    else:
        doc = _records_document(exact_records(source, settings_plan(order)), order)
    docs.write_document(doc, out, cfg.indent)


@app.command
def campaign(
    state: Annotated[Path, cyclopts.Parameter(help="State document ('-' for stdin)")],
    order: Annotated[int, cyclopts.Parameter(help="Coherence order N of the plan")],
    shots: Annotated[Optional[int], cyclopts.Parameter(help="Shots per setting")] = None,
    seed: Annotated[Optional[int], cyclopts.Parameter(help="Campaign seed")] = None,
    workers: Annotated[Optional[int], cyclopts.Parameter(help="Simulation threads")] = None,
    out: OutOption = None,
    config: ConfigOption = None,
    verbose: VerboseOption = False,
) -> None:
    """Simulate finite-shot measurements for every plan setting."""
    cfg = setup(config, verbose)
    shots = cfg.shots if shots is None else shots
    seed = cfg.seed if seed is None else seed
    workers = cfg.workers if workers is None else workers
    source = docs.state_from_payload(docs.read_document(state).expect("state"))
    records = run_campaign(source, settings_plan(order), shots, seed, workers=workers)
    rng = {"algorithm": RNG_ALGORITHM, "seed": seed, "shots_per_setting": shots}
    docs.write_document(_records_document(records, order, rng), out, cfg.indent)


@app.command(name="reconstruct")
def reconstruct_cmd(
    records: Annotated[Path, cyclopts.Parameter(help="Records document ('-' for stdin)")],
    order: Annotated[Optional[int], cyclopts.Parameter(help="Expected coherence order")] = None,
    out: OutOption = None,
    config: ConfigOption = None,
    verbose: VerboseOption = False,
) -> None:
    """Recover the coherence tensor from plan records."""
    cfg = setup(config, verbose)
    N, found = _read_records(records, order)
    tensor = reconstruct(found, N)
    payload = docs.tensor_to_payload(tensor, condition_report(settings_plan(N)))
    docs.write_document(docs.Document("tensor", payload), out, cfg.indent)


@app.command
def tomography(
    records: Annotated[Path, cyclopts.Parameter(help="Records document ('-' for stdin)")],
    order: Annotated[Optional[int], cyclopts.Parameter(help="Expected photon number")] = None,
    project_psd: Annotated[
        Optional[bool], cyclopts.Parameter(help="Clip negative eigenvalues and renormalize")
    ] = None,
    out: OutOption = None,
    config: ConfigOption = None,
    verbose: VerboseOption = False,
) -> None:
    """Full state tomography of an N-photon state."""
    cfg = setup(config, verbose)
    project = cfg.project_psd if project_psd is None else project_psd
    N, found = _read_records(records, order)
    estimate = density_from_coherences(reconstruct(found, N), project_psd=project)
    err_console.print(
        f"trace {estimate.trace:.6f}, lowest eigenvalue {estimate.min_eigenvalue:.3e}, "
        f"{len(estimate.warnings)} warning(s)"
    )
    payload = docs.density_to_payload(estimate, project_psd=project)
    docs.write_document(docs.Document("density", payload), out, cfg.indent)


def _row_cells(row: TableRow) -> list[str]:
    def fmt(values) -> str:
        return "(" + ", ".join(f"{v:.3f}" for v in values) + ")"

    cells = [f"{row.setting.theta / math.pi:.4f}", f"{row.setting.phi / math.pi:.4f}"]
    cells += [fmt(row.euler.as_tuple()), fmt(row.plates.as_tuple())]
    if row.printed_euler is not None:
        match = "yes" if row.euler_match and row.plates_match else "no"
        cells += [fmt(row.printed_euler), fmt(row.printed_plates), match, escape(row.note or "")]
    return cells


@app.command
def plates(
    theta: Annotated[float, cyclopts.Parameter(help="Gadget angle theta")],
    phi: Annotated[float, cyclopts.Parameter(help="Gadget angle phi")],
    degrees: Annotated[bool, cyclopts.Parameter(help="Angles are in degrees")] = False,
    json_output: Annotated[
        bool, cyclopts.Parameter(name="--json", help="Emit a table document")
    ] = False,
    out: OutOption = None,
    config: ConfigOption = None,
    verbose: VerboseOption = False,
) -> None:
    """Euler angles and wave-plate orientations for one setting."""
    cfg = setup(config, verbose)
    setting = (
        MeasurementSetting.from_degrees(theta, phi) if degrees else MeasurementSetting(theta, phi)
    )
    euler = euler_from_setting(setting)
    row = TableRow(setting=setting, euler=euler, plates=plate_angles_from_euler(euler))
    if json_output:
        docs.write_document(docs.Document("table", docs.table_to_payload([row])), out, cfg.indent)
        return

    grid = Table(title="Wave plates (radians)")
    for name in ("theta / pi", "phi / pi", "Euler (xi, eta, zeta)", "Plates (QP1, QP2, HP)"):
        grid.add_column(name, style="cyan")
    grid.add_row(*_row_cells(row))
    console.print(grid)


@app.command(name="table1")
def table1_cmd(
    json_output: Annotated[
        bool, cyclopts.Parameter(name="--json", help="Emit a table document")
    ] = False,
    out: OutOption = None,
    config: ConfigOption = None,
    verbose: VerboseOption = False,
) -> None:
    """Recompute the nine second-order plate settings and compare with the printed table."""
    cfg = setup(config, verbose)
    rows = table1()
    if json_output:
        docs.write_document(docs.Document("table", docs.table_to_payload(rows)), out, cfg.indent)
        return

    grid = Table(title="Second-order settings")
    for name in ("theta / pi", "phi / pi", "Euler", "Plates", "Printed Euler", "Printed plates"):
        grid.add_column(name, style="cyan")
    grid.add_column("Match", style="green")
    grid.add_column("Note", style="yellow")
    for row in rows:
        grid.add_row(*_row_cells(row))
    console.print(grid)


@app.command
def stokes(
    records1: Annotated[Path, cyclopts.Parameter(help="Order-1 records document")],
    records2: Annotated[Path, cyclopts.Parameter(help="Order-2 records document")],
    out: OutOption = None,
    config: ConfigOption = None,
    verbose: VerboseOption = False,
) -> None:
    """Stokes means and covariance matrix from first- and second-order campaigns."""
    cfg = setup(config, verbose)
    _, first = _read_records(records1, 1)
    _, second = _read_records(records2, 2)
    first_tensor, second_tensor = reconstruct(first, 1), reconstruct(second, 2)
    payload = docs.stokes_to_payload(
        stokes_means(first_tensor), stokes_variances(first_tensor, second_tensor)
    )
    docs.write_document(docs.Document("stokes", payload), out, cfg.indent)


def run(argv: Optional[Sequence[str]] = None) -> int:
    """Run the CLI and return the process exit code."""
    tokens = list(sys.argv[1:] if argv is None else argv)
    try:
        app(tokens)
    except InputError as exc:
        err_console.print(f"[red]Error: {escape(str(exc))}[/red]")
        return EXIT_INPUT
    except NumericalError as exc:
        err_console.print(f"[red]Error: {escape(str(exc))}[/red]")
        return EXIT_NUMERICAL
    except OSError as exc:
        err_console.print(f"[red]Error: {escape(str(exc))}[/red]")
        return EXIT_INPUT
    except SystemExit as exc:
        if exc.code is None:
            return 0
        return exc.code if isinstance(exc.code, int) else 1
    return 0
