"""
Command-line interface of the padyn toolkit.
Commands classify, regions, orbit, verify and ergodicity share one set of experiment options.
"""

import logging
import time
from typing import Any, Dict, List

import click
from pydantic import ValidationError

from app.core.config import settings
from app.core.errors import PadicError
from app.models.dynamics import (
    CaseTag,
    FixedPoint,
    GammaCondition,
    MapParams,
    RegionReport,
    Stability,
)
from app.models.ergodicity import SphereInstance
from app.models.schemas import CheckRecord, ExperimentConfig, SuiteName, SuiteReport, render
from app.services.dynamics_service import get_dynamics_service
from app.services.instance_service import get_instance_service
from app.services.report_service import get_report_service
from app.services.verification_service import get_verification_service

logger = logging.getLogger(__name__)

DEFAULT_ORBIT_STEPS = 20


class ConfigurationError(click.ClickException):
    """Invalid parameters or configuration; exits with status 2."""
    exit_code = 2


def experiment_options(func):
    """Attach the options shared by every command."""
    options = [
        click.option("-p", "p", type=int, default=None, help="Prime p"),
        click.option("-a", "a", default=None, help="Parameter a (n, n/d or p^v*u)"),
        click.option("-b", "b", default=None, help="Parameter b (n, n/d or p^v*u)"),
        click.option("--precision", type=int, default=None, help="Working precision N in digits"),
        click.option("--seed", type=int, default=None, help="Base seed (fallback: PADYN_SEED)"),
        click.option("--samples", type=int, default=None, help="Samples per check"),
        click.option("--iters", "iterations", type=int, default=None, help="Iteration cap"),
        click.option("--sphere-exp", "-m", "sphere_exponent", type=int, default=None, help="Sphere exponent m"),
        click.option("--residue-exp", "-k", "residue_exponent", type=int, default=None, help="Residue exponent k"),
        click.option("--out", "output_dir", type=click.Path(file_okay=False), default=None,
                     help="Directory for the machine report"),
        click.option("--format", "report_format", type=click.Choice(["csv", "records"]), default=None,
                     help="Machine report format"),
        click.option("--config", "config_file", type=click.Path(exists=True, dir_okay=False), default=None,
                     help="JSON file with experiment settings; flags override it"),
    ]
    for option in reversed(options):
        func = option(func)
    return func


def _resolve_config(options: Dict[str, Any]) -> ExperimentConfig:
    config_file = options.pop("config_file", None)
    try:
        return ExperimentConfig.from_sources(config_file, options)
    except (ValidationError, ValueError, OSError) as e:
        raise ConfigurationError(f"invalid configuration: {e}") from e


def _map_from(config: ExperimentConfig) -> MapParams:
    if config.p is None or config.a is None or config.b is None:
        raise ConfigurationError("this command needs -p, -a and -b")
    return MapParams.of(config.p, config.a, config.b, config.precision)


def _label(m: MapParams) -> str:
    return f"p={m.p},a={m.a},b={m.b}"


def _finish(config: ExperimentConfig, records: List[CheckRecord], started: float) -> None:
    """Print the summary, write the machine report when --out is given, exit 1 on failures."""
    reports = get_report_service()
    report = SuiteReport(config=config, records=records)
    click.echo(reports.summary_table(records))
    click.echo(f"elapsed: {time.perf_counter() - started:.2f}s")
    if config.output_dir:
        path = reports.write(report, config.output_dir)
        click.echo(f"report: {path}")
    if not report.passed:
        raise click.exceptions.Exit(1)


def _echo_regions(report: RegionReport) -> None:
    click.echo(f"A(x1) contains:   {report.attractor_x1}")
    if report.x2_region is None:
        click.echo(f"x2:               {report.x2_role.value}")
    else:
        click.echo(f"x2 {report.x2_role.value}: {report.x2_region}")
    if report.exceptional_spheres is not None:
        spheres = report.exceptional_spheres
        click.echo(f"r_n exponents:    {', '.join(str(e) for e in spheres.r_exponents)}")
        click.echo(f"l_n exponents:    {', '.join(str(e) for e in spheres.l_exponents)}")
    if report.note:
        click.echo(report.note)


def _region_outputs(report: RegionReport) -> Dict[str, Any]:
    return {
        "x1_ball": report.attractor_x1,
        "x2_role": report.x2_role.value,
        "x2_region": report.x2_region or "none",
    }


@click.group(invoke_without_command=True)
@click.option("--list-instances", is_flag=True, default=False, help="List the built-in demonstration instances")
@click.version_option(settings.APP_VERSION, prog_name=settings.APP_NAME)
@click.pass_context
def cli(ctx: click.Context, list_instances: bool):
    """Exact p-adic dynamics of f(x) = a x^2 / (b x + 1)."""
    if list_instances:
        for info in get_instance_service().list_instances():
            status = "" if info.realizable else " [not realizable over Q_p]"
            click.echo(
                f"{info.name:<26} p={info.p:<3} a={info.a:<3} b={info.b:<3} "
                f"{info.case:<16} {info.provenance}{status}"
            )
        ctx.exit(0)
    if ctx.invoked_subcommand is None:
        click.echo(ctx.get_help())


@cli.command()
@experiment_options
def classify(**options):
    """Classify x2 and print the prescribed regions."""
    started = time.perf_counter()
    config = _resolve_config(options)
    dynamics = get_dynamics_service()
    try:
        m = _map_from(config)
        classification = dynamics.classify(m)
        multiplier = dynamics.multiplier(m, FixedPoint.X2)
        report = dynamics.region_report(m)
    except PadicError as e:
        raise ConfigurationError(str(e)) from e

    click.echo(str(m))
    click.echo(f"case:             {classification.tag.value} ({classification.stability.value})")
    click.echo(f"multiplier:       {render(multiplier)}, |f'(x2)| = {render(multiplier.norm)}")
    click.echo(f"|a|, |b|, |2a-b|: {render(m.a.norm)}, {render(m.b.norm)}, {render((2 * m.a - m.b).norm)}")
    _echo_regions(report)

    records = [CheckRecord.of(
        "classify", "case_tag", _label(m), True,
        inputs={"p": m.p, "a": m.a, "b": m.b},
        outputs={
            "tag": classification.tag.value,
            "multiplier": multiplier,
            "v_a": m.val_a,
            "v_b": m.val_b,
            "v_2a_minus_b": m.val_2a_minus_b,
            **_region_outputs(report),
        },
    )]
    _finish(config, records, started)


@cli.command()
@experiment_options
def regions(**options):
    """Print the region report and the symbolic radii with their brute-force cross-check."""
    started = time.perf_counter()
    config = _resolve_config(options)
    dynamics = get_dynamics_service()
    try:
        m = _map_from(config)
        report = dynamics.region_report(m)
        conditions = [GammaCondition.GAMMA1]
        if report.classification.stability is Stability.INDIFFERENT:
            conditions.append(GammaCondition.GAMMA2)
        elif report.classification.stability is Stability.ATTRACTING:
            conditions.append(GammaCondition.GAMMA3)
        radii = [dynamics.gamma_radius(m, condition) for condition in conditions]
    except PadicError as e:
        raise ConfigurationError(str(e)) from e

    click.echo(f"{m}: {report.classification.tag.value}")
    _echo_regions(report)
    records = []
    for radius in radii:
        state = "attained" if radius.attained else "not attained"
        click.echo(f"{radius.condition.value}: {radius.region} (critical {render(radius.critical)}, {state})")
        records.append(CheckRecord.of(
            "regions", f"radius_{radius.condition.value}", _label(m), radius.agrees,
            inputs={"p": m.p, "a": m.a, "b": m.b},
            outputs={
                "critical": radius.critical,
                "attained": radius.attained,
                "exponent": radius.exponent,
                "brute_exponent": radius.brute_exponent,
                "brute_attained": radius.brute_attained,
                **_region_outputs(report),
            },
        ))
    _finish(config, records, started)


@cli.command()
@experiment_options
@click.option("--start", default=None, help="Starting point x(0)")
def orbit(start, **options):
    """Iterate f from --start and print the trajectory."""
    started = time.perf_counter()
    options["start"] = start
    config = _resolve_config(options)
    if config.start is None:
        raise ConfigurationError("orbit needs --start")
    dynamics = get_dynamics_service()
    try:
        m = _map_from(config)
        tag = dynamics.classify(m).tag
        x0 = m.context(config.start)
        trajectory = dynamics.iterate(m, x0, config.iterations or DEFAULT_ORBIT_STEPS)
        spheres = [
            dynamics.on_exceptional_sphere(m, point) if tag is CaseTag.REPELLING_1A else None
            for point in trajectory.points
        ]
    except PadicError as e:
        raise ConfigurationError(str(e)) from e

    click.echo(f"{'STEP':>4}  {'v(x-x1)':>8}  {'v(x-x2)':>8}  {'SPHERE':>6}  VALUE")
    records = []
    for step, (point, sphere) in enumerate(zip(trajectory.points, spheres)):
        to_x1 = (point - m.x1).valuation
        to_x2 = (point - m.x2).valuation
        sphere_label = str(sphere) if sphere is not None else "-"
        click.echo(f"{step:>4}  {str(to_x1):>8}  {str(to_x2):>8}  {sphere_label:>6}  {render(point)}")
        records.append(CheckRecord.of(
            "orbit", f"step_{step}", _label(m), True,
            inputs={"start": x0},
            outputs={"value": point, "v_to_x1": to_x1, "v_to_x2": to_x2, "sphere": sphere_label},
        ))
    click.echo(f"terminal: {trajectory.terminal_event}")
    records.append(CheckRecord.of(
        "orbit", "terminal", _label(m), True,
        inputs={"start": x0},
        outputs={"event": str(trajectory.terminal_event), "exact": trajectory.exact},
    ))
    _finish(config, records, started)


@cli.command()
@experiment_options
@click.option("--suite", type=click.Choice([suite.value for suite in SuiteName]), default=SuiteName.ALL.value,
              show_default=True, help="Suite to run")
def verify(suite, **options):
    """Run verification suites; exit 0 iff every check passes."""
    started = time.perf_counter()
    options["suite"] = suite
    config = _resolve_config(options)
    try:
        records = get_verification_service().run(config)
    except PadicError as e:
        raise ConfigurationError(str(e)) from e
    _finish(config, records, started)


@cli.command()
@experiment_options
def ergodicity(**options):
    """Build the invariant-set witness on S(x2) for x^2 / (b x + 1)."""
    started = time.perf_counter()
    config = _resolve_config(options)
    if config.p is None or config.b is None:
        raise ConfigurationError("ergodicity needs -p and -b")
    try:
        inst = SphereInstance.of(config.p, config.b, config.resolved_sphere_exponent, config.precision)
        records = get_verification_service().ergodicity_records(inst, config)
    except PadicError as e:
        raise ConfigurationError(str(e)) from e

    click.echo(str(inst))
    verdict = next(record for record in records if record.check == "verdict")
    click.echo(f"verdict: {verdict.outputs['verdict']} ({verdict.outputs['witness_variant']} balls)")
    distance = next(record for record in records if record.check == "return_distance")
    click.echo(
        f"v(f^2(y) - y) = {distance.outputs['valuation']} at y = {distance.inputs['y']}, "
        f"r0 exponent {distance.outputs['r0_exponent']}"
    )
    for record in records:
        if record.check.startswith("invariant_set_"):
            outputs = record.outputs
            click.echo(
                f"{record.check}: mu(A) = {outputs['measure']}, mu(S) = {outputs['sphere_measure']}, "
                f"forward closed = {outputs['forward_closed']}"
            )
    _finish(config, records, started)
