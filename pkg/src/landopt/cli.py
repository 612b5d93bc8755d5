"""Command-line pipeline: synthesize data, train/evaluate predictors, probe
heatmaps, evolve prescriptors, sweep heuristics, and serve the what-if API."""

from __future__ import annotations

import csv
import json
import os
from pathlib import Path

import click
import numpy as np

from .data import (
    Dataset,
    SynthConfig,
    load_csv,
    sample_fraction,
    save_csv,
    split_by_year,
    synth_generate,
)
from .evolution import EvalContexts, EvolutionConfig, evolve, write_run_outputs
from .features import FeatureSchema
from .heuristics import DEFAULT_THRESHOLDS, heuristic_sweep, write_sweep_csv
from .land import MOD_IDX
from .predictors import (
    conversion_heatmap,
    evaluate_mae,
    fit_forest,
    fit_linreg,
    fit_mlp,
    load_model,
)
from .predictors.mlp import MlpTrainParams
from .prescriptor import encode, train_seed_maxsecdf, train_seed_nochange


def _parse_years(text: str) -> tuple[int, int]:
    try:
        a, b = text.split(":")
        return int(a), int(b)
    except ValueError:
        raise click.ClickException(f"expected a year range like 2000:2010, got {text!r}") from None


def _parse_schema(text: str | None, default: FeatureSchema) -> FeatureSchema:
    if text is None:
        return default
    tokens = {t.strip() for t in text.split(",") if t.strip()}
    known = {"usage", "deltas", "area", "latlon", "year"}
    unknown = tokens - known
    if unknown:
        raise click.ClickException(f"unknown schema flag(s) {sorted(unknown)}; choose from {sorted(known)}")
    return FeatureSchema(
        include_usage="usage" in tokens,
        include_deltas=True,
        include_area="area" in tokens,
        include_latlon="latlon" in tokens,
        include_year="year" in tokens,
    )


def _load_data(path: str, region: str) -> Dataset:
    try:
        ds = load_csv(path)
    except (OSError, ValueError) as exc:
        raise click.ClickException(str(exc)) from exc
    if region != "global":
        ds = ds.filter_region(region)
        if len(ds) == 0:
            raise click.ClickException(f"no rows in region {region!r}")
    return ds


@click.group()
def main():
    """Land-use change optimization pipeline."""


@main.command()
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--cells", "n_cells", type=int, default=1000, show_default=True)
@click.option("--years", default="2000:2009", show_default=True, help="inclusive range A:B")
@click.option("--noise-std", type=float, default=None, help="override generator noise")
@click.option("--interaction", type=float, default=None, help="override interaction coefficient")
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
def synth(seed, n_cells, years, noise_std, interaction, out_path):
    """Generate a synthetic dataset CSV."""
    kwargs = {}
    if noise_std is not None:
        kwargs["noise_std"] = noise_std
    if interaction is not None:
        kwargs["interaction_coeff"] = interaction
    cfg = SynthConfig(seed=seed, n_cells=n_cells, years=_parse_years(years), **kwargs)
    ds = synth_generate(cfg)
    save_csv(ds, out_path)
    click.echo(f"wrote {len(ds)} rows to {out_path}")


_MODEL_DEFAULT_SCHEMAS = {
    "linreg": FeatureSchema.deltas_only(),
    "mlp": FeatureSchema.full(),
    "forest": FeatureSchema.full(),
}


@main.command()
@click.option("--model", "family", type=click.Choice(["linreg", "mlp", "forest"]), required=True)
@click.option("--data", "data_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--region", default="global", show_default=True)
@click.option("--schema", "schema_text", default=None, help="comma list of usage,deltas,area,latlon,year")
@click.option("--train-years", default=None, help="inclusive range A:B")
@click.option("--test-years", default=None, help="inclusive range A:B")
@click.option("--hidden", type=int, default=64, show_default=True)
@click.option("--epochs", type=int, default=100, show_default=True)
@click.option("--trees", type=int, default=100, show_default=True)
@click.option("--max-depth", type=int, default=None)
@click.option("--min-leaf", type=int, default=1, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
def train(family, data_path, region, schema_text, train_years, test_years,
          hidden, epochs, trees, max_depth, min_leaf, seed, out_path):
    """Fit a predictor and report train/test MAE."""
    ds = _load_data(data_path, region)
    schema = _parse_schema(schema_text, _MODEL_DEFAULT_SCHEMAS[family])
    test_ds = None
    if test_years is not None:
        if train_years is None:
            raise click.ClickException("--test-years requires --train-years")
        train_ds, test_ds = split_by_year(ds, _parse_years(train_years), _parse_years(test_years))
        if len(train_ds) == 0:
            raise click.ClickException("train split is empty")
        ds = train_ds

    try:
        if family == "linreg":
            model = fit_linreg(ds, schema, region_tag=region)
        elif family == "mlp":
            model = fit_mlp(ds, schema, hidden=hidden,
                            training=MlpTrainParams(epochs=epochs, seed=seed), region_tag=region)
        else:
            model = fit_forest(ds, schema, n_trees=trees, max_depth=max_depth,
                               min_leaf=min_leaf, seed=seed, region_tag=region)
    except (ValueError, RuntimeError) as exc:
        raise click.ClickException(str(exc)) from exc

    model.metadata["train_years"] = list(ds.year_range())
    model.save(out_path)
    click.echo(f"train MAE: {evaluate_mae(model, ds):.6g} tC/ha ({len(ds)} rows)")
    if test_ds is not None and len(test_ds) > 0:
        click.echo(f"test MAE: {evaluate_mae(model, test_ds):.6g} tC/ha ({len(test_ds)} rows)")


@main.command("eval")
@click.option("--model", "model_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--data", "data_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--region", default="global", show_default=True)
def eval_cmd(model_path, data_path, region):
    """Report a saved model's MAE on a dataset."""
    ds = _load_data(data_path, region)
    model = load_model(model_path)
    click.echo(f"MAE: {evaluate_mae(model, ds):.6g} tC/ha ({len(ds)} rows)")


@main.command()
@click.option("--model", "model_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
def heatmap(model_path, out_path):
    """Write the full-conversion probe matrix as CSV."""
    model = load_model(model_path)
    hm = conversion_heatmap(model)
    with open(out_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["source"] + list(hm["targets"]))
        for i, src in enumerate(hm["sources"]):
            writer.writerow([src] + [repr(float(v)) for v in hm["values"][i]])
    click.echo(f"wrote heatmap to {out_path}")


@main.command("evolve")
@click.option("--predictor", "predictor_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--data", "data_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--config", "config_path", default=None, type=click.Path(exists=True, dir_okay=False))
@click.option("--seed", type=int, default=None, help="override config seed")
@click.option("--generations", type=int, default=None, help="override config generations")
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
def evolve_cmd(predictor_path, data_path, config_path, seed, generations, out_dir):
    """Run the full evolution and write the run directory."""
    predictor = load_model(predictor_path)
    ds = _load_data(data_path, "global")
    overrides = {}
    if config_path is not None:
        with open(config_path, encoding="utf-8") as fh:
            doc = json.load(fh)
        overrides = {k: doc[k] for k in (
            "population_size", "generations", "nb_elites", "mutation_probability",
            "mutation_factor", "remove_population_pct", "initialization_range",
            "eval_fraction", "seed",
        ) if k in doc}
    if seed is not None:
        overrides["seed"] = seed
    if generations is not None:
        overrides["generations"] = generations
    cfg = EvolutionConfig(**overrides)

    eval_ds = sample_fraction(ds, cfg.eval_fraction, cfg.seed)
    budgets = eval_ds.usage[:, MOD_IDX].sum(axis=1)
    seed_ds = eval_ds.subset(np.flatnonzero(budgets > 0))
    if len(seed_ds) == 0:
        raise click.ClickException("evaluation sample has no cells with modifiable land")
    try:
        seeds = [
            encode(train_seed_nochange(seed_ds.usage, seed_ds.area, seed=cfg.seed)),
            encode(train_seed_maxsecdf(seed_ds.usage, seed_ds.area, seed=cfg.seed)),
        ]
    except (ValueError, RuntimeError) as exc:
        raise click.ClickException(f"seed training failed: {exc}") from exc

    ctxs = EvalContexts.from_dataset(eval_ds)
    result = evolve(cfg, ctxs, predictor, seeds)
    write_run_outputs(result, out_dir, extra_config={
        "predictor": str(predictor_path),
        "data": str(data_path),
        "eval_rows": len(eval_ds),
    })
    last = result.stats[-1]
    click.echo(
        f"archive size {last['archive_size']}, hypervolume {last['archive_hypervolume']:.6g}; "
        f"outputs in {out_dir}"
    )


@main.command()
@click.option("--kind", type=click.Choice(["even", "linear"]), required=True)
@click.option("--predictor", "predictor_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--linreg", "linreg_path", default=None, type=click.Path(exists=True, dir_okay=False),
              help="LinReg model for the linear heuristic's weight ordering")
@click.option("--data", "data_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--thresholds", default=None, help="comma list; default 10..100")
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
def sweep(kind, predictor_path, linreg_path, data_path, thresholds, out_path):
    """Evaluate a heuristic baseline over change thresholds."""
    predictor = load_model(predictor_path)
    linreg = load_model(linreg_path) if linreg_path else None
    if kind == "linear" and linreg is None:
        raise click.ClickException("--kind linear requires --linreg")
    ds = _load_data(data_path, "global")
    if thresholds is None:
        thr = DEFAULT_THRESHOLDS
    else:
        try:
            thr = tuple(float(t) for t in thresholds.split(","))
        except ValueError:
            raise click.ClickException(f"bad thresholds: {thresholds!r}") from None
    rows = heuristic_sweep(kind, EvalContexts.from_dataset(ds), predictor,
                           thresholds=thr, linreg=linreg)
    write_sweep_csv(rows, out_path)
    click.echo(f"wrote {len(rows)} sweep points to {out_path}")


@main.command()
@click.option("--store", "store_dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--predictor", "predictor_path", default=None, type=click.Path(exists=True, dir_okay=False))
@click.option("--data", "data_path", default=None, type=click.Path(exists=True, dir_okay=False))
@click.option("--ui-dir", default=None, type=click.Path(exists=True, file_okay=False))
@click.option("--port", type=int, default=8080, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
def serve(store_dir, predictor_path, data_path, ui_dir, port, host):
    """Serve the what-if HTTP API (and the UI, if built)."""
    import uvicorn

    from .server import create_app
    from .store import load_store

    try:
        store = load_store(store_dir, predictor_path=predictor_path, data_path=data_path)
    except (OSError, ValueError, KeyError) as exc:
        raise click.ClickException(f"failed to load store: {exc}") from exc
    if ui_dir is None:
        candidate = Path(store_dir) / "ui"
        ui_dir = candidate if candidate.is_dir() else None
    port = int(os.environ.get("LANDOPT_PORT", port))
    app = create_app(store, ui_dir=ui_dir)
    click.echo(f"serving on http://{host}:{port} ({len(store.cells)} cells, "
               f"{len(store.prescriptors)} prescriptors)")
    uvicorn.run(app, host=host, port=port)


if __name__ == "__main__":
    main()
