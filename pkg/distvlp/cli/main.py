import functools
import sys
from typing import Callable, Optional, Tuple

import click

from config import config as app_config
from distvlp.data import generate_corpus
from distvlp.exceptions import ConfigError, DistVlpError
from distvlp.handlers import export_corpus_jsonl, export_ellipses_csv, export_json, export_rows_to_csv
from distvlp.harness import (
    HSD_COLUMNS,
    NonFiniteLossError,
    ellipse_records,
    evaluate_retrieval,
    export_ellipses_svg,
    hsd_from_frame,
    train_run,
    train_viz_head,
)
from distvlp.logging import cli_logger, get_logger, setup_root_logging

from .helpers import (
    load_eval_corpus,
    load_hsd_scores,
    load_model,
    load_run_config,
    new_run_id,
    output_dir,
    resolve_run_config,
)

EXIT_FAILURE = 1
EXIT_CONFIG = 2
EXIT_NON_FINITE = 3


def run_options(fn: Callable) -> Callable:
    fn = click.option('--out', '-o', default=None, help='Artifact directory (default from config.yaml)')(fn)
    fn = click.option('--seed', '-s', default=None, type=click.IntRange(0, 2 ** 64 - 1), help='Overrides the seed in the config file')(fn)
    fn = click.option('--config', '-c', 'config_path', default=None, type=click.Path(dir_okay=False), help='Run config (JSON or YAML)')(fn)
    return fn


def handle_errors(action: str) -> Callable:
    """Exit codes: 2 invalid config, 3 non-finite loss, 1 any other workbench error."""

    def decorate(fn: Callable) -> Callable:
        @functools.wraps(fn)
        def wrapper(*args, **kwargs):
            setup_root_logging()
            cli_logger.debug(f"{action} environment", extra={"action": action, "status": "env", **app_config.get_env_info()})
            cli_logger.info(f"{action} started", extra={"action": action, "status": "started"})
            try:
                result = fn(*args, **kwargs)
            except ConfigError as e:
                cli_logger.error(f"Invalid config: {e.message}", extra={"action": action, "status": "fail"})
                click.echo(f"Error: invalid config: {e.message}", err=True)
                sys.exit(EXIT_CONFIG)
            except NonFiniteLossError as e:
                cli_logger.error(
                    e.message,
                    extra={"action": action, "status": "fail", "step": e.step, "last_valid_step": e.last_valid_step},
                )
                click.echo(f"Error: {e.message}", err=True)
                sys.exit(EXIT_NON_FINITE)
            except DistVlpError as e:
                cli_logger.error(f"{e.error_type}: {e.message}", extra={"action": action, "status": "fail"})
                click.echo(f"Error: {e.message}", err=True)
                sys.exit(EXIT_FAILURE)
            cli_logger.info(f"{action} completed", extra={"action": action, "status": "success"})
            return result

        return wrapper

    return decorate


@click.group()
def main():
    """Distribution-based vision-language pre-training workbench"""
    pass


@main.command("gen-corpus")
@run_options
@handle_errors("gen_corpus")
def gen_corpus(config_path: Optional[str], seed: Optional[int], out: Optional[str]) -> None:
    """Write the synthetic train/test splits as JSONL."""
    cfg = load_run_config(config_path, seed, out)
    out_dir = output_dir(cfg)
    for split in ("train", "test"):
        count = export_corpus_jsonl(generate_corpus(cfg.corpus, cfg.corpus_seed, split), out_dir / f"{split}.jsonl")
        click.echo(f"{split}: {count} examples -> {out_dir / f'{split}.jsonl'}")


@main.command("train")
@run_options
@handle_errors("train")
def train(config_path: Optional[str], seed: Optional[int], out: Optional[str]) -> None:
    """Pre-train for the configured number of steps."""
    cfg = load_run_config(config_path, seed, out)
    run_id = new_run_id()
    get_logger("train", {"run_id": run_id}).info(
        f"Training preset={cfg.preset} steps={cfg.steps} batch={cfg.batch_size} seed={cfg.seed} use_pde={cfg.model.use_pde}",
        extra={"action": "train", "status": "started"},
    )
    result = train_run(cfg, output_dir(cfg), run_id=run_id)
    last = result.records[-1]
    click.echo("\n=== Summary ===")
    click.echo(f"Steps: {last.step}")
    click.echo(f"Final loss: {last.loss_total:.6f} (mlm {last.loss_dmlm:.4f}, itm {last.loss_ditm:.4f}, vlc {last.loss_dvlc:.4f})")
    click.echo(f"Mean entropy: {last.mean_entropy:.4f}  tau: {last.tau:.5f}")
    click.echo(f"Metrics: {result.metrics_path}")
    click.echo(f"Checkpoint: {result.checkpoint_path}")


@main.command("eval-retrieval")
@run_options
@click.option('--checkpoint', required=True, type=click.Path(dir_okay=False), help='Checkpoint written by train')
@click.option('--corpus', default=None, type=click.Path(dir_okay=False), help='Test corpus JSONL (default: generated test split)')
@click.option('--k', 'ks', multiple=True, type=click.IntRange(1), help='Recall cut-off; repeatable')
@handle_errors("eval_retrieval")
def eval_retrieval(
    config_path: Optional[str], seed: Optional[int], out: Optional[str], checkpoint: str, corpus: Optional[str], ks: Tuple[int, ...]
) -> None:
    """Recall@K in both directions using the unimodal [CLS] distributions."""
    cfg = resolve_run_config(config_path, seed, out, checkpoint)
    model = load_model(cfg, checkpoint)
    examples = load_eval_corpus(cfg, corpus)
    cutoffs = sorted(set(ks)) or list(app_config.evaluation_settings.get("recall_ks", [1, 5, 10]))
    report = evaluate_retrieval(model, examples, cfg.loss, cutoffs)
    out_dir = output_dir(cfg)
    export_json(report.to_dict(), out_dir / "recall.json")
    export_rows_to_csv(report.per_query.to_dict("records"), list(report.per_query.columns), out_dir / "retrieval_per_query.csv")
    click.echo(f"Candidates: {report.candidates}")
    for direction, table in (("i2t", report.i2t), ("t2i", report.t2i)):
        click.echo(f"  {direction}: " + "  ".join(f"{k}={v:.4f}" for k, v in table.items()))


@main.command("export-ellipses")
@run_options
@click.option('--checkpoint', required=True, type=click.Path(dir_okay=False), help='Checkpoint written by train')
@click.option('--corpus', default=None, type=click.Path(dir_okay=False), help='Corpus JSONL to draw items from')
@click.option('--items', default=None, type=click.IntRange(2), help='Number of items to export (default from config.yaml)')
@click.option('--viz-steps', default=None, type=click.IntRange(0), help='Fitting steps for the 2-D head')
@click.option('--svg/--no-svg', default=False, help='Also render ellipses.svg')
@handle_errors("export_ellipses")
def export_ellipses(
    config_path: Optional[str],
    seed: Optional[int],
    out: Optional[str],
    checkpoint: str,
    corpus: Optional[str],
    items: Optional[int],
    viz_steps: Optional[int],
    svg: bool,
) -> None:
    """95% confidence ellipses of the first N items, both modalities."""
    cfg = resolve_run_config(config_path, seed, out, checkpoint)
    settings = app_config.evaluation_settings
    model = load_model(cfg, checkpoint)
    subset = load_eval_corpus(cfg, corpus)[: items or int(settings.get("ellipse_items", 16))]
    steps = viz_steps if viz_steps is not None else int(settings.get("viz_steps", 200))
    train_viz_head(model, subset, cfg, steps)
    records = ellipse_records(model, subset)
    out_dir = output_dir(cfg)
    export_ellipses_csv(records, out_dir / "ellipses.csv")
    if svg:
        export_ellipses_svg(records, out_dir / "ellipses.svg")
    click.echo(f"Ellipses: {len(records)} rows -> {out_dir / 'ellipses.csv'}")


@main.command("hsd")
@run_options
@click.option('--input', '-i', 'inputs', required=True, multiple=True, type=click.Path(exists=True, dir_okay=False),
              help='Scores CSV (id column + one column per system), or several per-query CSVs')
@click.option('--metric', default='i2t_rr', help='Column taken from each per-query CSV when several inputs are given')
@click.option('--trials', default=None, type=click.IntRange(1), help='Randomizations (default from config.yaml)')
@click.option('--exhaustive/--randomized', default=False, help='Enumerate every relabelling instead of sampling')
@handle_errors("hsd")
def hsd(
    config_path: Optional[str],
    seed: Optional[int],
    out: Optional[str],
    inputs: Tuple[str, ...],
    metric: str,
    trials: Optional[int],
    exhaustive: bool,
) -> None:
    """Randomized Tukey HSD over paired per-item scores."""
    cfg = load_run_config(config_path, seed, out)
    settings = app_config.statistics_settings
    frame = load_hsd_scores(inputs, metric)
    table = hsd_from_frame(
        frame,
        trials or int(settings.get("trials", 1000)),
        cfg.seed,
        chunk_size=int(settings.get("chunk_size", 250)),
        workers=int(settings.get("workers", 1)),
        exhaustive=exhaustive,
    )
    out_dir = output_dir(cfg)
    export_rows_to_csv(table.to_dict("records"), HSD_COLUMNS, out_dir / "hsd.csv")
    for row in table.itertuples(index=False):
        click.echo(f"{row.sysA} vs {row.sysB}: p={row.p:.4f} effect={row.effect}")


if __name__ == '__main__':
    main()
