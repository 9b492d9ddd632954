"""``missedrecall`` command line: staged runs over JSON-lines files.

Stages read and write files in the output directory::

    ingest    -> catalog.json, ingest_report.json
    generate  -> groups.jsonl
    validate  -> validated.jsonl, drops.jsonl, verdicts.jsonl
    run       -> outcomes.jsonl, findings.jsonl, audit.jsonl, report.json, report.txt
    report    -> final_report.json, final_report.txt, final_report.csv

Exit codes: 0 success, 1 fatal config/IO error, 2 partial failures above
the configured threshold.
"""

from __future__ import annotations

import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

import click

from .catalog import Catalog, CatalogParseError, emit_catalog, load_catalog
from .config import ConfigError, load_config
from .generation import QueryGroup, read_groups, write_groups
from .metrics import RunLedger, compute_metrics, emit_report, ingest_confirmations
from .pipeline import (
    AuditLog,
    GroupOutcome,
    build_backend,
    build_generator,
    build_judge,
    evaluate_outcomes,
    execute_groups,
    execution_settings,
    generate_groups,
    read_jsonl,
    run_id_for,
    validate_groups,
    write_jsonl,
)

EXIT_FATAL = 1
EXIT_PARTIAL = 2

log = logging.getLogger("missedrecall")


class Fatal(click.ClickException):
    exit_code = EXIT_FATAL


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, ensure_ascii=False, indent=2, sort_keys=True) + "\n",
                    encoding="utf-8", newline="\n")


@click.group()
@click.option("--config", "config_path", required=True, type=click.Path(dir_okay=False),
              help="YAML run configuration.")
@click.option("--seed", type=int, default=None, help="Override the configured seed.")
@click.option("--out", type=click.Path(file_okay=False), default=None,
              help="Override the output directory.")
@click.option("-v", "--verbose", is_flag=True)
@click.pass_context
def main(ctx: click.Context, config_path: str, seed: int | None, out: str | None, verbose: bool):
    """Detect missed recalls in a shop search engine by consistency testing."""
    logging.basicConfig(level=logging.INFO if verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        config = load_config(config_path)
    except (ConfigError, ValueError) as exc:
        raise Fatal(str(exc)) from exc
    if seed is not None:
        config = replace(config, seed=seed)
    if out is not None:
        config = replace(config, output_dir=str(Path(out).resolve()))
    ctx.obj = config


def _out(config) -> Path:
    out = config.out
    out.mkdir(parents=True, exist_ok=True)
    return out


def _catalog(config) -> Catalog:
    path = config.out / "catalog.json"
    if not path.exists():
        raise Fatal(f"{path} not found; run the ingest stage first")
    return load_catalog(path, "json")


def _partial(failed: int, total: int, threshold: float, what: str) -> None:
    if total and failed / total > threshold:
        click.echo(f"{failed}/{total} {what} failed (threshold {threshold:.0%})", err=True)
        sys.exit(EXIT_PARTIAL)


@main.command()
@click.pass_obj
def ingest(config):
    """Parse and validate the shop catalog."""
    try:
        config.check_files()
        catalog = load_catalog(config.path(config.catalog), config.catalog_format)
    except (ConfigError, CatalogParseError, OSError) as exc:
        raise Fatal(str(exc)) from exc
    out = _out(config)
    (out / "catalog.json").write_bytes(emit_catalog(catalog, "json"))
    report = {
        "source": catalog.source,
        "rows_in": len(catalog) + len(catalog.rejected),
        "shops": len(catalog),
        "rejected": [{"row": r.row, "reasons": list(r.reasons)} for r in catalog.rejected],
    }
    _write_json(out / "ingest_report.json", report)
    if catalog.rejected:
        lines = [f"row {r.row}: {'; '.join(r.reasons)}" for r in catalog.rejected]
        (out / "ingest_warnings.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")
        click.echo(f"{len(catalog.rejected)} rows rejected, see ingest_warnings.txt", err=True)
    click.echo(f"ingested {len(catalog)} shops")


@main.command()
@click.pass_obj
def generate(config):
    """Generate one query group per shop."""
    catalog = _catalog(config)
    try:
        config.check_files()
        result = generate_groups(catalog, build_generator(config), config.workers)
    except (ConfigError, OSError, ValueError) as exc:
        raise Fatal(str(exc)) from exc
    out = _out(config)
    write_groups(out / "groups.jsonl", result.groups)
    _write_json(out / "generate_errors.json", result.errors)
    click.echo(f"generated {len(result.groups)} groups, {len(result.errors)} failures")
    if not result.groups and result.errors:
        sys.exit(EXIT_PARTIAL)
    _partial(len(result.errors), len(catalog), config.partial_failure_threshold, "shops")


@main.command()
@click.pass_obj
def validate(config):
    """Re-judge generated queries and drop unreasonable ones."""
    catalog = _catalog(config)
    out = _out(config)
    groups = read_groups(out / "groups.jsonl")
    cap = config.group_cap if config.generator == "llm" else None
    result = validate_groups(catalog, groups, build_judge(config), cap)
    write_groups(out / "validated.jsonl", result.groups)
    write_jsonl(out / "verdicts.jsonl", (
        {"target_shop_id": v.query.target_shop_id, **v.to_dict()} for v in result.verdicts))
    write_jsonl(out / "drops.jsonl", (
        {"target_shop_id": g.target_shop_id, **d.to_dict()}
        for g in result.groups for d in g.dropped))
    dropped = sum(len(g.dropped) for g in result.groups)
    click.echo(f"validated {len(groups)} groups, dropped {dropped} queries")


def _report_files(out: Path, stem: str, evaluation, metrics, run_id: str, digest: str,
                  warnings=(), labels=None, formats=("json", "text")) -> None:
    suffix = {"json": "json", "text": "txt", "csv": "csv"}
    for fmt in formats:
        emit_report(evaluation.verdicts, evaluation.findings, metrics, fmt,
                    out / f"{stem}.{suffix[fmt]}", run_id=run_id, config_digest=digest,
                    warnings=list(warnings), labels=labels)


@main.command()
@click.pass_obj
def run(config):
    """Execute validated groups and flag inconsistent recalls."""
    catalog = _catalog(config)
    out = _out(config)
    source = out / "validated.jsonl"
    if not source.exists():
        raise Fatal(f"{source} not found; run the validate stage first")
    groups = read_groups(source)
    try:
        config.check_files()
        backend = build_backend(config, catalog)
    except (ConfigError, OSError, ValueError) as exc:
        raise Fatal(str(exc)) from exc
    run_id = run_id_for(config)
    audit = AuditLog(out / "audit.jsonl")
    outcomes = execute_groups(catalog, groups, backend, execution_settings(config), audit,
                              config.workers)
    evaluation = evaluate_outcomes(outcomes, run_id)
    n_total = sum(o.executed for o in outcomes)
    generated = out / "groups.jsonl"
    n_generated = sum(len(g) for g in read_groups(generated)) if generated.exists() else None
    metrics = compute_metrics(RunLedger(n_total, evaluation.findings, {}, n_generated))
    write_jsonl(out / "outcomes.jsonl", (o.to_dict() for o in outcomes))
    write_jsonl(out / "findings.jsonl", (f.to_dict() for f in evaluation.findings))
    _write_json(out / "run_state.json", {"run_id": run_id, "config_digest": config.digest(),
                                          "n_total": n_total, "n_generated": n_generated})
    _report_files(out, "report", evaluation, metrics, run_id, config.digest(), evaluation.errors)
    counts = evaluation.counts
    click.echo(f"{len(evaluation.findings)} findings over {len(outcomes)} groups "
               f"({counts['violation']} violating, {counts['incomplete']} incomplete)")
    planned = sum(len(o.outcomes) for o in outcomes)
    _partial(planned - n_total, planned, config.partial_failure_threshold, "queries")


@main.command()
@click.option("--confirmations", type=click.Path(dir_okay=False), default=None,
              help="CSV with finding_id,label,annotator,notes.")
@click.pass_obj
def report(config, confirmations):
    """Final metrics, merging human confirmation labels."""
    out = _out(config)
    try:
        state = json.loads((out / "run_state.json").read_text(encoding="utf-8"))
        outcomes = [GroupOutcome.from_dict(d) for d in read_jsonl(out / "outcomes.jsonl")]
    except OSError as exc:
        raise Fatal(f"{exc}; run the run stage first") from exc
    evaluation = evaluate_outcomes(outcomes, state["run_id"])
    labels, warnings = {}, list(evaluation.errors)
    if confirmations:
        try:
            conf = ingest_confirmations(Path(confirmations).read_bytes(),
                                        [f.id for f in evaluation.findings])
        except OSError as exc:
            raise Fatal(str(exc)) from exc
        labels = conf.labels
        warnings += conf.warnings + conf.errors
        for w in conf.warnings + conf.errors:
            click.echo(f"warning: {w}", err=True)
    metrics = compute_metrics(RunLedger(state["n_total"], evaluation.findings, labels,
                                        state.get("n_generated")))
    _report_files(out, "final_report", evaluation, metrics, state["run_id"], state["config_digest"],
                  warnings, labels, ("json", "text", "csv"))
    click.echo((out / "final_report.txt").read_text(encoding="utf-8"), nl=False)


@main.command("sim-serve")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8765, show_default=True)
@click.pass_obj
def sim_serve(config, host, port):
    """Serve the reference simulator over HTTP until SIGTERM."""
    from .sim import serve

    try:
        config.check_files()
        catalog = load_catalog(config.path(config.catalog), config.catalog_format)
        backend = build_backend(replace(config, backend=replace(config.backend, kind="sim")), catalog)
    except (ConfigError, CatalogParseError, OSError, ValueError) as exc:
        raise Fatal(str(exc)) from exc

    def ready(address):
        click.echo(f"serving {len(catalog)} shops on http://{address[0]}:{address[1]}", err=True)

    try:
        serve(backend, host, port, ready)
    except (OSError, OverflowError) as exc:
        raise Fatal(f"cannot serve on {host}:{port}: {exc}") from exc


if __name__ == "__main__":
    main()
