"""
Command-line interface.

Exit codes: 0 success, 1 errors in the model or a failed check, 2 parse
failure, 3 diagram not encodable, 4 deadlock (with --fail-on-deadlock),
5 an enumeration or execution bound was hit.
"""

import functools
import json
import logging
from typing import Dict, Optional

import click

from Bipforge.Toolchain import config
from Bipforge.Toolchain.behavior import check_behavior
from Bipforge.Toolchain.diagrams import check_encodable, conforms, enumerate_configurations, expand_unique
from Bipforge.Toolchain.dsl import (
    PATTERNS,
    EventSchedule,
    instantiate_template,
    load_configuration,
    load_scenario,
    parse_model,
    pattern_source,
    render_configuration,
    render_connector,
)
from Bipforge.Toolchain.engine import GLUE_SOURCES, POLICIES, glue_interactions, run, trace_to_json
from Bipforge.Toolchain.errors import (
    BipforgeError,
    InternalLivelock,
    LimitExceeded,
    NotEncodable,
    ParseError,
    UniverseTooLarge,
)
from Bipforge.Toolchain.interactions import formula_of_interactions, render_interactions
from Bipforge.Toolchain.macros import (
    MODES,
    check_equivalence,
    emit_glue,
    encode_macros,
    interaction_list,
    render_macros,
)
from Bipforge.Toolchain.models import (
    Architecture,
    Model,
    has_errors,
    port_instances,
    resolve_cardinalities,
    validate_references,
)
from Bipforge.Toolchain.reports import interaction_counts, load_trace, summarize_trace

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_ERRORS = 1
EXIT_PARSE = 2
EXIT_NOT_ENCODABLE = 3
EXIT_DEADLOCK = 4
EXIT_LIMIT = 5


# ============================================================================
# HELPERS
# ============================================================================

def _assignments(ctx, param, values) -> Dict[str, int]:
    """Turn repeated NAME=INT options into a mapping"""
    result = {}
    for raw in values:
        name, sep, value = raw.partition('=')
        if not sep or not name:
            raise click.BadParameter(f"expected NAME=INT, got {raw!r}", ctx=ctx, param=param)
        try:
            result[name.strip()] = int(value)
        except ValueError:
            raise click.BadParameter(f"{value!r} is not an integer in {raw!r}", ctx=ctx, param=param) from None
    return result


card_option = click.option('--card', 'cards', multiple=True, callback=_assignments, metavar='TYPE=N',
                           help='Cardinality of a component type (repeatable)')
param_option = click.option('--param', 'params', multiple=True, callback=_assignments, metavar='NAME=K',
                            help='Value of a $NAME template parameter (repeatable)')
format_option = click.option('--format', 'fmt', type=click.Choice(['text', 'json']), default='text',
                             show_default=True, help='Output format')
model_argument = click.argument('file', type=click.Path(exists=True, dir_okay=False))


def _echo_json(document):
    click.echo(json.dumps(document, indent=2, ensure_ascii=False))


def _exit_code(exc: BipforgeError) -> int:
    if isinstance(exc, ParseError):
        return EXIT_PARSE
    if isinstance(exc, NotEncodable):
        return EXIT_NOT_ENCODABLE
    if isinstance(exc, (LimitExceeded, UniverseTooLarge, InternalLivelock)):
        return EXIT_LIMIT
    return EXIT_ERRORS


def reports_errors(command):
    """Map toolchain errors to messages on stderr and their exit codes"""
    @functools.wraps(command)
    def wrapper(*args, **kwargs):
        try:
            return command(*args, **kwargs)
        except BipforgeError as exc:
            if isinstance(exc, NotEncodable) and exc.report is not None:
                for diagnostic in exc.report.diagnostics:
                    click.echo(diagnostic.render(), err=True)
            diagnostics = getattr(exc, 'diagnostics', ())
            for diagnostic in diagnostics:
                click.echo(diagnostic.render(), err=True)
            click.echo(f"error: {exc}", err=True)
            raise SystemExit(_exit_code(exc))
    return wrapper


def _read(path: str) -> str:
    with open(path, 'r', encoding='utf-8') as f:
        return f.read()


def _load(path: str, params: Dict[str, int]) -> Model:
    return parse_model(instantiate_template(_read(path), params), file=path)


def _require_clean(model: Model):
    """Print reference and behavior diagnostics to stderr; stop on errors"""
    diagnostics = validate_references(model) + check_behavior(model)
    for diagnostic in diagnostics:
        click.echo(diagnostic.render(), err=True)
    if has_errors(diagnostics):
        raise SystemExit(EXIT_ERRORS)


def _load_checked(path: str, cards: Dict[str, int], params: Dict[str, int]):
    """Parse a model, stop on model errors and resolve its cardinalities"""
    model = _load(path, params)
    _require_clean(model)
    return model, resolve_cardinalities(model, cards, params)


def _universe(model: Model, cards: Dict[str, int]):
    refs = sorted({end.port for motif in model.motifs for end in motif.ends})
    return [p for ref in refs for p in port_instances(ref, cards)]


def _macros_document(macros):
    document = []
    for ref in macros.port_types():
        accept = macros.accept.get(ref)
        document.append({
            'port': str(ref),
            'require': [
                {'motif': o.motif, 'mode': o.mode.value if o.mode else None,
                 'counts': {str(t): c for t, c in o.counts}}
                for o in macros.require.get(ref, ())
            ],
            'accept': {str(t): bound for t, bound in accept.parts} if accept else {},
            'acceptsNone': bool(accept and accept.none),
        })
    return document


# ============================================================================
# COMMANDS
# ============================================================================

@click.group()
@click.option('--log-level', default=None, help='Logging level (default from BIPFORGE_LOG_LEVEL)')
def main(log_level: Optional[str]):
    """Check, expand, encode and run component architecture models."""
    logging.basicConfig(level=(log_level or config['LOG_LEVEL']).upper(), format=config['LOG_FORMAT'])


@main.command()
@model_argument
@card_option
@param_option
@format_option
@reports_errors
def check(file, cards, params, fmt):
    """Check references, behavior and encodability of a model."""
    model = _load(file, params)
    diagnostics = validate_references(model) + check_behavior(model)
    report = None
    skipped = None
    if not has_errors(diagnostics):
        try:
            resolved = resolve_cardinalities(model, cards, params)
        except BipforgeError as exc:
            skipped = str(exc)
        else:
            report = check_encodable(model.diagram, resolved)

    if fmt == 'json':
        _echo_json({
            'diagnostics': [d.as_dict() for d in diagnostics],
            'encodability': None if report is None else {
                'verdict': report.verdict,
                'ends': [
                    {'motif': e.motif, 'port': str(e.port), 'matchingFactor': str(e.matching_factor),
                     'maxConnectors': e.max_connectors, 'cond1': e.cond1, 'cond2': e.cond2}
                    for e in report.ends
                ],
                'diagnostics': [d.as_dict() for d in report.diagnostics],
            },
            'skipped': skipped,
        })
    else:
        for diagnostic in diagnostics:
            click.echo(diagnostic.render())
        if skipped:
            click.echo(f"NOTE encodability not checked: {skipped}")
        if report is not None:
            for diagnostic in report.diagnostics:
                click.echo(diagnostic.render())
            click.echo('encodable' if report.verdict else 'not encodable')

    if has_errors(diagnostics):
        raise SystemExit(EXIT_ERRORS)
    if report is not None and not report.verdict:
        raise SystemExit(EXIT_NOT_ENCODABLE)


@main.command()
@model_argument
@card_option
@param_option
@format_option
@reports_errors
def expand(file, cards, params, fmt):
    """Print the unique configuration of an encodable diagram."""
    model, resolved = _load_checked(file, cards, params)
    configuration = expand_unique(model.diagram, resolved)
    if fmt == 'json':
        _echo_json([render_connector(c) for c in configuration])
    else:
        click.echo(render_configuration(configuration))


@main.command('enumerate')
@model_argument
@card_option
@param_option
@format_option
@click.option('--limit', type=click.IntRange(min=1), default=None,
              help='Visited-node bound (default from BIPFORGE_LIMIT)')
@click.option('--max-results', type=click.IntRange(min=1), default=None, help='Stop after this many configurations')
@reports_errors
def enumerate_command(file, cards, params, fmt, limit, max_results):
    """Print every configuration conforming to the diagram."""
    model, resolved = _load_checked(file, cards, params)
    configurations = enumerate_configurations(model.diagram, resolved, limit, max_results)
    if fmt == 'json':
        _echo_json([[render_connector(c) for c in configuration] for configuration in configurations])
        return
    click.echo(f"{len(configurations)} configuration(s)")
    for number, configuration in enumerate(configurations, start=1):
        click.echo(f"# configuration {number}")
        click.echo(render_configuration(configuration))


@main.command()
@model_argument
@card_option
@param_option
@format_option
@click.option('--glue', type=click.Choice(GLUE_SOURCES), default='diagram', show_default=True)
@click.option('--macro-mode', type=click.Choice(MODES), default='motif', show_default=True)
@click.option('--universe-bound', type=click.IntRange(min=1), default=None)
@reports_errors
def interactions(file, cards, params, fmt, glue, macro_mode, universe_bound):
    """Print the interactions allowed by the diagram or by its macros."""
    model, resolved = _load_checked(file, cards, params)
    result = glue_interactions(model, resolved, glue, macro_mode, universe_bound)
    if fmt == 'json':
        _echo_json(interaction_list(result))
    else:
        click.echo(render_interactions(result))


@main.command()
@model_argument
@param_option
@format_option
@click.option('-o', '--output', type=click.Path(dir_okay=False), default=None, help='Write the glue XML here')
@reports_errors
def encode(file, params, fmt, output):
    """Encode the diagram into Require/Accept macros."""
    model = _load(file, params)
    _require_clean(model)
    macros = encode_macros(model.diagram)
    if output:
        with open(output, 'w', encoding='utf-8') as f:
            f.write(emit_glue(macros))
        logger.info("Glue written to %s", output)
    if fmt == 'json':
        _echo_json(_macros_document(macros))
    else:
        click.echo(render_macros(macros))


@main.command()
@model_argument
@card_option
@param_option
@format_option
@click.option('--macro-mode', type=click.Choice(MODES), default='motif', show_default=True)
@click.option('--universe-bound', type=click.IntRange(min=1), default=None)
@reports_errors
def equiv(file, cards, params, fmt, macro_mode, universe_bound):
    """Compare the diagram's interactions with those of its macros."""
    model, resolved = _load_checked(file, cards, params)
    report = check_equivalence(model.diagram, resolved, macro_mode, universe_bound)
    if fmt == 'json':
        _echo_json({
            'equal': report.equal,
            'onlyInDiagram': interaction_list(report.only_in_diagram),
            'onlyInMacros': interaction_list(report.only_in_macros),
        })
    else:
        click.echo('equal' if report.equal else 'not equal')
        if report.only_in_diagram:
            click.echo('only in diagram:')
            click.echo(render_interactions(report.only_in_diagram))
        if report.only_in_macros:
            click.echo('only in macros:')
            click.echo(render_interactions(report.only_in_macros))
    if not report.equal:
        raise SystemExit(EXIT_ERRORS)


@main.command()
@model_argument
@card_option
@param_option
@format_option
@click.option('--glue', type=click.Choice(GLUE_SOURCES), default='diagram', show_default=True)
@reports_errors
def formula(file, cards, params, fmt, glue):
    """Print the interaction formula in full-monomial normal form."""
    model, resolved = _load_checked(file, cards, params)
    phi = formula_of_interactions(glue_interactions(model, resolved, glue), _universe(model, resolved))
    if fmt == 'json':
        _echo_json({'formula': str(phi)})
    else:
        click.echo(str(phi))


@main.command('run')
@model_argument
@card_option
@param_option
@click.option('--seed', type=int, default=0, show_default=True)
@click.option('--cycles', type=click.IntRange(min=0), default=100, show_default=True)
@click.option('--scenario', type=click.Path(exists=True, dir_okay=False), default=None,
              help='Scheduled spontaneous events')
@click.option('--policy', type=click.Choice(POLICIES), default='uniform', show_default=True)
@click.option('--glue', type=click.Choice(GLUE_SOURCES), default='diagram', show_default=True)
@click.option('--macro-mode', type=click.Choice(MODES), default='motif', show_default=True)
@click.option('--trace', 'trace_path', type=click.Path(dir_okay=False), default=None,
              help='Write the trace here instead of stdout')
@click.option('--fail-on-deadlock', is_flag=True, help='Exit with 4 when the run deadlocks')
@reports_errors
def run_command(file, cards, params, seed, cycles, scenario, policy, glue, macro_mode, trace_path, fail_on_deadlock):
    """Execute the composed system and emit a JSON trace."""
    model, resolved = _load_checked(file, cards, params)
    schedule = load_scenario(_read(scenario), file=scenario) if scenario else EventSchedule()
    trace = run(model, resolved, seed=seed, max_cycles=cycles, schedule=schedule,
                policy=policy, glue=glue, mode=macro_mode)
    document = trace_to_json(trace)
    if trace_path:
        with open(trace_path, 'w', encoding='utf-8') as f:
            f.write(document)
        logger.info("Trace written to %s", trace_path)
        click.echo(f"{trace.terminal} after {len(trace.records)} cycle(s)")
    else:
        click.echo(document, nl=False)
    if fail_on_deadlock and trace.terminal == 'deadlock':
        raise SystemExit(EXIT_DEADLOCK)


@main.command()
@click.argument('name', type=click.Choice(PATTERNS))
@param_option
@click.option('-o', '--output', type=click.Path(dir_okay=False), default=None)
@reports_errors
def pattern(name, params, output):
    """Instantiate a bundled coordination pattern."""
    text = instantiate_template(pattern_source(name), params)
    parse_model(text, file=f'<pattern:{name}>')
    if output:
        with open(output, 'w', encoding='utf-8') as f:
            f.write(text)
        logger.info("Pattern %s written to %s", name, output)
    else:
        click.echo(text, nl=False)


@main.command('conforms')
@model_argument
@click.argument('configuration', type=click.Path(exists=True, dir_okay=False))
@card_option
@param_option
@format_option
@reports_errors
def conforms_command(file, configuration, cards, params, fmt):
    """Check a configuration file against the diagram."""
    model, resolved = _load_checked(file, cards, params)
    components = tuple((name, i) for name, n in sorted(resolved.items()) for i in range(1, n + 1))
    architecture = Architecture(components, load_configuration(_read(configuration), file=configuration))
    verdict = conforms(architecture, model.diagram, resolved)
    if fmt == 'json':
        _echo_json({'conforms': verdict})
    else:
        click.echo('conforms' if verdict else 'does not conform')
    if not verdict:
        raise SystemExit(EXIT_ERRORS)


@main.command()
@click.argument('trace_file', type=click.Path(exists=True, dir_okay=False))
@click.option('--csv', 'csv_path', type=click.Path(dir_okay=False), default=None,
              help='Write the per-cycle table as CSV')
@format_option
@reports_errors
def stats(trace_file, csv_path, fmt):
    """Count how often each interaction fired in a trace."""
    trace = load_trace(_read(trace_file), file=trace_file)
    counts = interaction_counts(trace)
    if csv_path:
        summarize_trace(trace).to_csv(csv_path, index=False)
        logger.info("Cycle table written to %s", csv_path)
    if fmt == 'json':
        _echo_json({
            'terminal': trace['terminal'],
            'cycles': len(trace['records']),
            'interactions': [
                {'interaction': interaction, 'count': int(count)}
                for interaction, count in counts.itertuples(index=False)
            ],
        })
        return
    click.echo(f"{trace['terminal']} after {len(trace['records'])} cycle(s)")
    for interaction, count in counts.itertuples(index=False):
        click.echo(f"{count:6d}  {interaction}")


if __name__ == '__main__':
    main()
