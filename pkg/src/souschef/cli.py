"""Command-line entry point.

Thin orchestration over the library modules: prepare a corpus bundle,
inspect its statistics, build/evaluate/sweep models, ask for ad-hoc
recommendations, and serve the HTTP API.

Exit codes: 0 success, 1 usage error, 2 IO/schema error, 3 runtime or
service error. Every subcommand accepts ``--config <path>`` (JSON) whose
values are overridden by explicit flags.
"""

from __future__ import annotations

import hashlib
import json
import sys
import time
from pathlib import Path

import click

from .bundle import build_model, load_bundle, save_bundle
from .corpus import (
    ParseError,
    PipelineConfig,
    PipelineError,
    SchemaError,
    corpus_bundle_sha256,
    corpus_stats,
    load_corpus_bundle,
    run_pipeline,
    save_corpus_bundle,
    stats_to_files,
)
from .evaluation import EvalConfig, evaluate_fold, sweep as run_sweep
from .jsonio import dump_json, load_json
from .recommender import PartialRecipe, UnknownIngredientError, recommend
from .similarity import Measure, SourceRef


class ServiceError(RuntimeError):
    """Server could not start (e.g. port already in use)."""


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        doc = load_json(path)
    except json.JSONDecodeError as e:
        raise ParseError(f"config file {path}: {e}") from e
    if not isinstance(doc, dict):
        raise SchemaError(f"config file {path} must hold a JSON object")
    return doc


def _pick(flag, cfg: dict, key: str, default):
    """Flag beats config file beats default."""
    if flag is not None:
        return flag
    if key in cfg:
        return cfg[key]
    return default


def _source_ref(use_pca: bool, d: int | None, center: bool) -> SourceRef:
    if use_pca:
        return SourceRef("pca", d=d, center=center)
    return SourceRef("raw")


def _parse_bind(bind: str) -> tuple[str, int]:
    host, sep, port = bind.rpartition(":")
    if not sep or not port.isdigit():
        raise click.UsageError(f"--bind must look like HOST:PORT, got {bind!r}")
    return host, int(port)


@click.group()
def cli():
    """Ingredient recommendations for partial recipes."""


@cli.command()
@click.argument("input_path", type=click.Path())
@click.option("-o", "--out", "out_dir", required=True, type=click.Path(),
              help="Corpus bundle output directory.")
@click.option("--config", "config_path", type=click.Path(), default=None)
@click.option("--min-raw-count", type=int, default=None)
@click.option("--substring-ingredient-threshold", type=int, default=None)
@click.option("--substring-recipe-threshold", type=int, default=None)
@click.option("--min-final-count", type=int, default=None)
@click.option("--stop-ingredients", default=None,
              help="Comma-separated names excluded from the vocabulary.")
@click.option("--min-recipe-size", type=int, default=None)
def prepare(input_path, out_dir, config_path, min_raw_count,
            substring_ingredient_threshold, substring_recipe_threshold,
            min_final_count, stop_ingredients, min_recipe_size):
    """Clean a raw recipe JSON dump into a corpus bundle."""
    cfg = _load_config(config_path)
    stop = stop_ingredients.split(",") if stop_ingredients is not None else None
    pipeline_config = PipelineConfig(
        min_raw_count=_pick(min_raw_count, cfg, "min_raw_count", 4),
        substring_ingredient_threshold=_pick(
            substring_ingredient_threshold, cfg, "substring_ingredient_threshold", 30),
        substring_recipe_threshold=_pick(
            substring_recipe_threshold, cfg, "substring_recipe_threshold", 1000),
        min_final_count=_pick(min_final_count, cfg, "min_final_count", 251),
        stop_ingredients=tuple(_pick(stop, cfg, "stop_ingredients", ["salt", "water"])),
        min_recipe_size=_pick(min_recipe_size, cfg, "min_recipe_size", 3),
    )
    data = Path(input_path).read_bytes()
    started = time.perf_counter()
    corpus, stages = run_pipeline(data, pipeline_config)
    for stage in stages:
        click.echo(f"{stage.stage:<14} {stage.recipes:>7} recipes  "
                   f"{stage.ingredients:>6} ingredients")
    save_corpus_bundle(corpus, out_dir, pipeline_config, stages,
                       input_sha256=hashlib.sha256(data).hexdigest())
    click.echo(f"wrote corpus bundle to {out_dir} "
               f"({time.perf_counter() - started:.1f}s)")


@cli.command()
@click.argument("corpus_dir", type=click.Path())
@click.option("--config", "config_path", type=click.Path(), default=None)
@click.option("--top", type=int, default=None, help="How many top ingredients to list.")
@click.option("-o", "--out", "out_dir", type=click.Path(), default=None,
              help="Also write stats.json and stats.txt here.")
def stats(corpus_dir, config_path, top, out_dir):
    """Print descriptive statistics of a corpus bundle."""
    cfg = _load_config(config_path)
    corpus, _ = load_corpus_bundle(corpus_dir)
    report = corpus_stats(corpus, top_n=_pick(top, cfg, "top", 10))
    click.echo(report.to_text(), nl=False)
    if out_dir:
        stats_to_files(report, out_dir)


def _measure_from(cfg: dict, measure: str | None, alpha: float | None) -> Measure:
    name = _pick(measure, cfg, "measure", "pmi")
    alpha_value = _pick(alpha, cfg, "alpha", 0.05)
    parsed = Measure.parse(name, alpha_value)
    if alpha is not None and parsed.kind != "asymmetric_cosine":
        click.echo(f"warning: --alpha has no effect for measure {parsed.kind}; ignored",
                   err=True)
    return parsed


@cli.command()
@click.argument("corpus_dir", type=click.Path())
@click.option("-o", "--out", "out_dir", required=True, type=click.Path())
@click.option("--config", "config_path", type=click.Path(), default=None)
@click.option("--measure", default=None,
              help="cosine|acs|jaccard|pmi (default pmi).")
@click.option("--alpha", type=float, default=None,
              help="Asymmetry parameter for acs (default 0.05).")
@click.option("--k", type=int, default=None, help="Neighbourhood size (default 50).")
@click.option("--pca/--raw", "use_pca", default=None,
              help="Similarity source space (default --pca).")
@click.option("--d", "d", type=int, default=None,
              help="PCA component count (default: full rank).")
@click.option("--center/--no-center", "center", default=None,
              help="Center features before PCA (default on).")
def build(corpus_dir, out_dir, config_path, measure, alpha, k, use_pca, d, center):
    """Build a model bundle from a corpus bundle."""
    cfg = _load_config(config_path)
    k = _pick(k, cfg, "k", 50)
    if k < 1:
        raise click.BadParameter("k must be >= 1", param_hint="--k")
    parsed = _measure_from(cfg, measure, alpha)
    use_pca = _pick(use_pca, cfg, "pca", True)
    source = _source_ref(use_pca, _pick(d, cfg, "d", None),
                         _pick(center, cfg, "center", True))
    corpus, pipeline = load_corpus_bundle(corpus_dir)
    started = time.perf_counter()
    model, embedding = build_model(corpus, parsed, k, source)
    save_bundle(out_dir, corpus.vocabulary, model, embedding,
                corpus_sha256=corpus_bundle_sha256(corpus_dir),
                pipeline=pipeline)
    click.echo(f"built {parsed.label()} k={k} on {model.source.label()} "
               f"({time.perf_counter() - started:.1f}s) -> {out_dir}")


@cli.command()
@click.argument("corpus_dir", type=click.Path())
@click.option("--config", "config_path", type=click.Path(), default=None)
@click.option("--measure", default=None)
@click.option("--alpha", type=float, default=None)
@click.option("--k", type=int, default=None)
@click.option("--pca/--raw", "use_pca", default=None)
@click.option("--d", "d", type=int, default=None)
@click.option("--center/--no-center", "center", default=None)
@click.option("--fold", type=click.Choice(["tuning", "test"]), default=None)
@click.option("--tuning-fraction", type=float, default=None)
@click.option("--seed", type=int, default=None, help="RNG seed (default 42).")
@click.option("--mode", type=click.Choice(["fold-complement", "exact-downdate"]),
              default=None)
@click.option("-o", "--out", "out_dir", type=click.Path(), default=None,
              help="Write report.json, trace.csv and summary.txt here.")
def evaluate(corpus_dir, config_path, measure, alpha, k, use_pca, d, center,
             fold, tuning_fraction, seed, mode, out_dir):
    """Leave-one-out evaluation of one configuration."""
    cfg = _load_config(config_path)
    k = _pick(k, cfg, "k", 50)
    if k < 1:
        raise click.BadParameter("k must be >= 1", param_hint="--k")
    parsed = _measure_from(cfg, measure, alpha)
    use_pca = _pick(use_pca, cfg, "pca", True)
    source = _source_ref(use_pca, _pick(d, cfg, "d", None),
                         _pick(center, cfg, "center", True))
    mode_value = _pick(mode, cfg, "mode", "fold-complement").replace("-", "_")
    try:
        config = EvalConfig(
            measure=parsed, k=k, source=source,
            fold=_pick(fold, cfg, "fold", "test"),
            tuning_fraction=_pick(tuning_fraction, cfg, "tuning_fraction", 0.10),
            seed=_pick(seed, cfg, "seed", 42),
            mode=mode_value,
        )
    except ValueError as e:
        raise click.UsageError(str(e)) from e
    corpus, _ = load_corpus_bundle(corpus_dir)
    report = evaluate_fold(corpus, config)
    click.echo(report.to_text(), nl=False)
    click.echo(f"wall time          {report.wall_time_s:.2f}s")
    if out_dir:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        dump_json(report.to_json_dict(), out / "report.json")
        (out / "trace.csv").write_text(report.trace_csv(), encoding="utf-8")
        (out / "summary.txt").write_text(report.to_text(), encoding="utf-8")


@cli.command()
@click.argument("corpus_dir", type=click.Path())
@click.option("--config", "config_path", type=click.Path(), default=None)
@click.option("--measures", default=None,
              help="Comma-separated (default cosine,acs,jaccard,pmi).")
@click.option("--alphas", default=None,
              help="Comma-separated acs alphas (default 0,0.05,...,0.5).")
@click.option("--ks", default=None,
              help="Comma-separated neighbourhood sizes (default 10,20,50,100,150,200).")
@click.option("--sources", default=None, help="Comma-separated raw,pca (default both).")
@click.option("--d", "d", type=int, default=None)
@click.option("--center/--no-center", "center", default=None)
@click.option("--tuning-fraction", type=float, default=None)
@click.option("--seed", type=int, default=None)
@click.option("-o", "--out", "out_dir", type=click.Path(), default=None,
              help="Write sweep.json and sweep.txt here.")
def sweep(corpus_dir, config_path, measures, alphas, ks, sources, d, center,
          tuning_fraction, seed, out_dir):
    """Grid-sweep measures, alphas and k on the tuning fold."""
    cfg = _load_config(config_path)
    measures_list = _pick(
        measures.split(",") if measures else None, cfg, "measures",
        ["cosine", "acs", "jaccard", "pmi"])
    alphas_list = _pick(
        [float(a) for a in alphas.split(",")] if alphas else None, cfg, "alphas",
        [round(0.05 * i, 2) for i in range(11)])
    ks_list = _pick(
        [int(x) for x in ks.split(",")] if ks else None, cfg, "ks",
        [10, 20, 50, 100, 150, 200])
    if any(k < 1 for k in ks_list):
        raise click.BadParameter("all k values must be >= 1", param_hint="--ks")
    source_names = _pick(
        sources.split(",") if sources else None, cfg, "sources", ["raw", "pca"])
    refs = []
    for name in source_names:
        name = name.strip().lower()
        if name == "raw":
            refs.append(SourceRef("raw"))
        elif name == "pca":
            refs.append(SourceRef("pca", d=_pick(d, cfg, "d", None),
                                  center=_pick(center, cfg, "center", True)))
        else:
            raise click.BadParameter(f"unknown source {name!r}", param_hint="--sources")
    corpus, _ = load_corpus_bundle(corpus_dir)
    report = run_sweep(corpus, measures_list, alphas_list, ks_list, refs,
                       seed=_pick(seed, cfg, "seed", 42),
                       tuning_fraction=_pick(tuning_fraction, cfg, "tuning_fraction", 0.10))
    click.echo(report.to_text(), nl=False)
    if out_dir:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        dump_json(report.to_json_dict(), out / "sweep.json")
        (out / "sweep.txt").write_text(report.to_text(), encoding="utf-8")


@cli.command("recommend")
@click.argument("bundle_dir", type=click.Path())
@click.argument("ingredients", nargs=-1, required=True)
@click.option("--config", "config_path", type=click.Path(), default=None)
@click.option("-n", "count", type=int, default=None, help="Number of suggestions.")
@click.option("--ignore-unknown", is_flag=True, default=False,
              help="Drop unresolvable names instead of failing.")
@click.option("--json", "as_json", is_flag=True, default=False)
def recommend_cmd(bundle_dir, ingredients, config_path, count, ignore_unknown, as_json):
    """Recommend ingredients to extend the given partial recipe."""
    cfg = _load_config(config_path)
    n = _pick(count, cfg, "n", 10)
    if n < 1:
        raise click.BadParameter("n must be >= 1", param_hint="-n")
    bundle = load_bundle(bundle_dir)
    recipe = PartialRecipe.from_names(bundle.vocabulary, ingredients,
                                      ignore_unknown=ignore_unknown)
    recs = recommend(bundle.model, bundle.vocabulary, recipe, n)
    if as_json:
        click.echo(json.dumps(
            [{"rank": r.rank, "name": r.name, "fit": r.fit} for r in recs],
            indent=2))
    else:
        click.echo(f"{'rank':>4}  {'ingredient':<32} {'fit':>8}")
        for r in recs:
            click.echo(f"{r.rank:>4}  {r.name:<32} {r.fit:>8.4f}")


@cli.command()
@click.argument("bundle_dir", type=click.Path())
@click.option("--config", "config_path", type=click.Path(), default=None)
@click.option("--bind", default=None, help="HOST:PORT (default 127.0.0.1:8080).")
@click.option("--static", "static_dir", type=click.Path(), default=None,
              help="Directory of built UI assets served at / "
                   "(default: frontend/dist when present).")
@click.option("--allow-origin", "allow_origins", multiple=True,
              help="Extra CORS origin, repeatable (e.g. a dev UI server).")
def serve(bundle_dir, config_path, bind, static_dir, allow_origins):
    """Serve the recommendation API over HTTP until interrupted."""
    import uvicorn

    from .service import create_app

    cfg = _load_config(config_path)
    host, port = _parse_bind(_pick(bind, cfg, "bind", "127.0.0.1:8080"))
    bundle = load_bundle(bundle_dir)
    if static_dir is None and Path("frontend/dist").is_dir():
        static_dir = "frontend/dist"
    app = create_app(bundle, static_dir=static_dir,
                     allow_origins=tuple(allow_origins))
    try:
        uvicorn.run(app, host=host, port=port, log_level="info")
    except (OSError, SystemExit) as e:
        raise ServiceError(f"could not serve on {host}:{port}: {e}") from e


def main(argv=None) -> None:
    try:
        cli.main(args=argv, standalone_mode=False)
    except click.exceptions.Exit as e:
        sys.exit(e.exit_code)
    except click.ClickException as e:
        e.show()
        sys.exit(1)
    except click.Abort:
        sys.exit(1)
    except UnknownIngredientError as e:
        click.echo(f"error: {e}", err=True)
        sys.exit(1)
    except (ParseError, SchemaError, PipelineError, FileNotFoundError,
            NotADirectoryError, IsADirectoryError, PermissionError,
            json.JSONDecodeError) as e:
        click.echo(f"error: {e}", err=True)
        sys.exit(2)
    except ValueError as e:
        click.echo(f"error: {e}", err=True)
        sys.exit(1)
    except ServiceError as e:
        click.echo(f"error: {e}", err=True)
        sys.exit(3)


if __name__ == "__main__":
    main()
