"""Command-line interface.

Subcommands: generate, score, classify (Task 1), mine (Task 2),
tune-lambda, serve-check. Options can come from a flat key=value
config file; command-line flags (and the TM_MASKED_URL/TM_CAUSAL_URL
environment variables) override it.

Exit codes: 0 success, 1 data error, 2 backend/transport error,
3 configuration error.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass

import click

from .backends import BackendDescriptor, RemoteBackend, ScoreCache, build_backend
from .core import CANDIDATE_TSV, CKBC_TSV, LabeledTriple, read_triple_file
from .errors import BackendError, ConfigError, DataError, TripleMineError
from .mixture import tune_lambda_grid
from .pipeline import (
    RunConfig,
    export_report,
    render_json,
    render_tsv,
    run_score,
    run_task1,
    run_task2,
    sentence_for,
    stratified_sample,
)
from .sentences import GENERATION_MODES, MODE_COHERENCY

_CONFIG_KEYS = {
    "masked_endpoint": str,
    "causal_endpoint": str,
    "mode": str,
    "lambda": float,
    "seed": int,
    "cache_dir": str,
    "skip_bad_records": bool,
    "concurrency": int,
    "grid_lo": float,
    "grid_hi": float,
    "grid_points": int,
}


def load_config_file(path) -> dict:
    """Parse a flat `key = value` run manifest."""
    values = {}
    with open(path, encoding="utf-8") as fh:
        for line_number, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            key, sep, value = line.partition("=")
            key, value = key.strip(), value.strip()
            if not sep or key not in _CONFIG_KEYS:
                raise ConfigError(f"{path}:{line_number}: bad config line {raw.rstrip()!r}")
            caster = _CONFIG_KEYS[key]
            try:
                if caster is bool:
                    if value.lower() not in ("true", "false", "0", "1"):
                        raise ValueError(value)
                    values[key] = value.lower() in ("true", "1")
                else:
                    values[key] = caster(value)
            except ValueError as exc:
                raise ConfigError(f"{path}:{line_number}: bad value for {key}: {value!r}") from exc
    return values


@dataclass
class Settings:
    masked_endpoint: str | None = None
    causal_endpoint: str | None = None
    mode: str = MODE_COHERENCY
    lam: float | None = None
    seed: int = 0
    cache_dir: str | None = None
    skip_bad_records: bool = False
    concurrency: int = 1
    grid_lo: float = 0.5
    grid_hi: float = 5.0
    grid_points: int = 90

    def merged_with_flags(self, **flags) -> "Settings":
        updates = {key: value for key, value in flags.items() if value is not None}
        return Settings(**{**self.__dict__, **updates})

    def _backend(self, endpoint: str | None, role: str, cache_name: str):
        if endpoint is None:
            raise ConfigError(
                f"no {role} endpoint configured (flag --{role}-endpoint, config file, or env)"
            )
        descriptor = BackendDescriptor(kind="remote", model_tag=f"{role}@{endpoint}", endpoint=endpoint)
        cache = ScoreCache(f"{self.cache_dir}/{cache_name}.jsonl") if self.cache_dir else None
        return build_backend(descriptor, cache)

    def run_config(self, need_masked: bool = True) -> RunConfig:
        masked = self._backend(self.masked_endpoint, "masked", "masked") if need_masked else None
        causal = None
        if self.mode == MODE_COHERENCY:
            causal = self._backend(self.causal_endpoint, "causal", "causal")
        return RunConfig(
            mode=self.mode,
            masked_backend=masked,
            causal_backend=causal,
            lam=self.lam,
            grid_lo=self.grid_lo,
            grid_hi=self.grid_hi,
            grid_points=self.grid_points,
            seed=self.seed,
            concurrency=self.concurrency,
        )


def _read_records(path, fmt, settings) -> list:
    records = list(
        read_triple_file(
            path,
            fmt,
            skip_bad_records=settings.skip_bad_records,
            on_skip=lambda exc: click.echo(f"warning: skipped {exc}", err=True),
        )
    )
    if not records:
        raise DataError(f"no usable records in {path}")
    return records


@click.group()
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--masked-endpoint", envvar="TM_MASKED_URL", default=None)
@click.option("--causal-endpoint", envvar="TM_CAUSAL_URL", default=None)
@click.option("--mode", type=click.Choice(GENERATION_MODES), default=None)
@click.option("--lambda", "lam", type=float, default=None, help="Fixed PMI weight; omit to grid-search in classify.")
@click.option("--seed", type=int, default=None)
@click.option("--cache-dir", type=click.Path(file_okay=False), default=None)
@click.option("--skip-bad-records", is_flag=True, default=None)
@click.option("--concurrency", type=int, default=None)
@click.pass_context
def cli(ctx, config_path, **flags):
    file_values = load_config_file(config_path) if config_path else {}
    if "lambda" in file_values:
        file_values["lam"] = file_values.pop("lambda")
    ctx.obj = Settings(**file_values).merged_with_flags(**flags)


@cli.command()
@click.argument("input_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--format", "fmt", type=click.Choice([CANDIDATE_TSV, CKBC_TSV]), default=CANDIDATE_TSV)
@click.option("--output", type=click.Path(dir_okay=False), default=None)
@click.pass_obj
def generate(settings: Settings, input_path, fmt, output):
    """Render one sentence per triple under the configured mode."""
    records = _read_records(input_path, fmt, settings)
    config = settings.run_config(need_masked=False)
    config.validate_for_generation()
    lines = ["relation\thead\ttail\tsentence"]
    for record in records:
        triple = record.triple if isinstance(record, LabeledTriple) else record
        sentence = sentence_for(triple, config)
        lines.append(f"{triple.relation}\t{triple.head_text}\t{triple.tail_text}\t{sentence.text}")
    _emit("\n".join(lines) + "\n", output)


@cli.command()
@click.argument("input_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--format", "fmt", type=click.Choice(["tsv", "json"]), default="tsv")
@click.option("--output", type=click.Path(dir_okay=False), default=None)
@click.pass_obj
def score(settings: Settings, input_path, fmt, output):
    """Score candidate triples; exports PMI components per triple."""
    triples = _read_records(input_path, CANDIDATE_TSV, settings)
    report = run_score(settings.run_config(), triples)
    _emit_report(report, fmt, output)


@cli.command()
@click.argument("input_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--format", "fmt", type=click.Choice(["tsv", "json"]), default="tsv")
@click.option("--output", type=click.Path(dir_okay=False), default=None)
@click.pass_obj
def classify(settings: Settings, input_path, fmt, output):
    """Task 1: cluster PMI scores and label triples valid/invalid."""
    records = _read_records(input_path, CKBC_TSV, settings)
    report = run_task1(settings.run_config(), records)
    click.echo(f"f1={report.f1:.4f} lambda={report.lam:.4f} n={len(report.rows)}")
    if output:
        export_report(report, output, fmt)


@cli.command()
@click.argument("input_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--top-k", type=int, default=100, show_default=True)
@click.option("--per-relation", type=int, default=None, help="Stratified pre-sample size per relation.")
@click.option("--format", "fmt", type=click.Choice(["tsv", "json"]), default="tsv")
@click.option("--output", type=click.Path(dir_okay=False), default=None)
@click.pass_obj
def mine(settings: Settings, input_path, top_k, per_relation, fmt, output):
    """Task 2: rank candidate triples and export the best."""
    triples = _read_records(input_path, CANDIDATE_TSV, settings)
    if per_relation is not None:
        triples = stratified_sample(triples, per_relation, settings.seed)
    if settings.lam is None:
        settings = settings.merged_with_flags(lam=4.0)
    report = run_task2(settings.run_config(), triples, top_k=top_k)
    click.echo(f"ranked={len(report.rows)} skipped={report.skipped} lambda={report.lam:.4f}")
    if output:
        export_report(report, output, fmt)


@cli.command("tune-lambda")
@click.argument("input_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--lo", type=float, default=0.5, show_default=True)
@click.option("--hi", type=float, default=5.0, show_default=True)
@click.option("--points", type=int, default=90, show_default=True)
@click.option("--output", type=click.Path(dir_okay=False), default=None)
@click.pass_obj
def tune_lambda(settings: Settings, input_path, lo, hi, points, output):
    """Grid-search lambda over a previously exported score TSV.

    Pure recombination of the exported components; no model calls.
    """
    components = _read_components(input_path)
    result = tune_lambda_grid(components, lo, hi, points, settings.seed)
    click.echo(f"best_lambda={result.best_lambda:.6f} points={len(result.grid)}")
    if output:
        import json

        grid = [[f"{lam:.6f}", f"{value:.6f}" if value != float("inf") else "inf"] for lam, value in result.grid]
        payload = {"best_lambda": f"{result.best_lambda:.6f}", "grid": grid}
        with open(output, "w", encoding="utf-8") as fh:
            fh.write(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _read_components(path) -> list[tuple[float, float, float, float]]:
    wanted = ("cond_tail", "marg_tail", "cond_head", "marg_head")
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n").split("\t")
        try:
            indices = [header.index(column) for column in wanted]
        except ValueError:
            raise DataError(f"{path} lacks component columns {wanted}") from None
        components = []
        for line_number, line in enumerate(fh, start=2):
            if not line.strip():
                continue
            fields = line.rstrip("\n").split("\t")
            try:
                components.append(tuple(float(fields[i]) for i in indices))
            except (ValueError, IndexError) as exc:
                raise DataError(f"bad component row: {line!r}", line_number) from exc
    if not components:
        raise DataError(f"no score rows in {path}")
    return components


@cli.command("serve-check")
@click.pass_obj
def serve_check(settings: Settings):
    """Probe the configured backend endpoints' /info."""
    checked = False
    for role, endpoint in (("masked", settings.masked_endpoint), ("causal", settings.causal_endpoint)):
        if endpoint is None:
            continue
        checked = True
        info = RemoteBackend(endpoint, max_retries=1).info()
        click.echo(f"{role}: ok model_tag={info['model_tag']} max_tokens={info.get('max_tokens')}")
    if not checked:
        raise ConfigError("no endpoints configured to check")


def _emit(text: str, output):
    if output:
        with open(output, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        click.echo(text, nl=False)


def _emit_report(report, fmt, output):
    text = render_tsv(report) if fmt == "tsv" else render_json(report)
    _emit(text, output)


def run(argv=None) -> int:
    """Invoke the CLI and map exceptions onto the documented exit codes."""
    try:
        cli.main(args=argv, standalone_mode=False)
    except click.ClickException as exc:
        exc.show()
        return 3
    except click.Abort:
        return 3
    except ConfigError as exc:
        click.echo(f"config error: {exc}", err=True)
        return 3
    except BackendError as exc:
        click.echo(f"backend error: {exc}", err=True)
        return 2
    except DataError as exc:
        click.echo(f"data error: {exc}", err=True)
        return 1
    except TripleMineError as exc:
        click.echo(f"error: {exc}", err=True)
        return 1
    return 0


def main(argv=None):
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
