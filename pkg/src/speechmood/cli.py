"""Command-line surface for the whole pipeline.

Every stage reads and writes the documented file formats, accepts --seed
wherever randomness exists, and exits nonzero with a path in the message
when an input file is missing.
"""

from __future__ import annotations

import json
from pathlib import Path

import click
import numpy as np

from . import __version__
from .audio import read_wav
from .corpus import MAX_CALL_S, Manifest, Segment, load_manifest
from .featio import read_feature_cache, write_feature_cache
from .features import FUNCTIONALS_REGISTRY, functionals, log_mfb
from .labels import SegmentLabel, load_labels, save_labels
from .mood import DIMENSIONS, build_mood_report, ensemble_predict
from .nn import TrainConfig
from .nn.train import default_max_epochs
from .evaluation import build_fold_plans, load_fold_plans, iter_splits, run_experiment, save_fold_plans
from .pipeline import (
    assemble_dataset,
    default_grid,
    grid_from_dicts,
    load_model_dir,
    make_trainer,
    save_model_dir,
)
from .sad import SadConfig, form_segments, sad
from .sampling import SamplingPlan, build_selection, load_selection, save_selection
from .synth import SynthConfig, generate_corpus

_in_path = click.Path(exists=True, dir_okay=False, path_type=Path)
_in_dir = click.Path(exists=True, file_okay=False, path_type=Path)


@click.group()
@click.version_option(version=__version__, prog_name="speechmood")
def main():
    """Speech emotion regression and mood-state analytics pipeline."""


@main.command("synth")
@click.option("--out", "out_dir", type=click.Path(path_type=Path), required=True)
@click.option("--subjects", default=12, show_default=True)
@click.option("--weeks", default=9, show_default=True)
@click.option("--personal-calls-per-week", default=1, show_default=True)
@click.option("--segments-per-call", default=3, show_default=True)
@click.option("--manic-shift", default=1.0, show_default=True)
@click.option("--depressed-shift", default=1.0, show_default=True)
@click.option("--coupling", default=0.46, show_default=True)
@click.option("--seed", default=0, show_default=True)
def synth_cmd(out_dir, subjects, weeks, personal_calls_per_week, segments_per_call,
              manic_shift, depressed_shift, coupling, seed):
    """Generate a synthetic corpus (WAVs + manifest + ground-truth labels)."""
    cfg = SynthConfig(n_subjects=subjects, weeks=weeks,
                      personal_calls_per_week=personal_calls_per_week,
                      segments_per_call=segments_per_call,
                      manic_shift=manic_shift, depressed_shift=depressed_shift,
                      activation_valence_coupling=coupling, seed=seed)
    manifest, labels = generate_corpus(cfg, out_dir)
    click.echo(f"wrote {len(manifest.calls)} calls, {len(manifest.segments)} segments, "
               f"{len(labels)} labels to {out_dir}")


@main.command("segment")
@click.option("--manifest", "manifest_path", type=_in_path, required=True)
@click.option("--out", "out_path", type=click.Path(path_type=Path), required=True)
@click.option("--raw", is_flag=True, help="keep runs outside the 3-30 s eligibility window")
@click.option("--merge-gap", default=0.3, show_default=True)
@click.option("--smoothing-frames", default=11, show_default=True)
def segment_cmd(manifest_path, out_path, raw, merge_gap, smoothing_frames):
    """Run speech activity detection over every call and form segments."""
    manifest = load_manifest(manifest_path)
    root = manifest_path.parent
    cfg = SadConfig(smoothing_frames=smoothing_frames, merge_gap_s=merge_gap)
    by_call: dict[str, list[dict]] = {}
    skipped = []
    for call in manifest.calls:
        if call.duration_s > MAX_CALL_S:
            skipped.append(call.call_id)
            continue
        audio = read_wav(root / call.audio_path)
        mask = sad(audio, cfg)
        segs = form_segments(mask, cfg, call_id=call.call_id, eligibility=not raw)
        by_call[call.call_id] = [
            {"segment_id": s.segment_id, "call_id": s.call_id,
             "start_s": s.start_s, "end_s": s.end_s} for s in segs]
    doc = {"config": {"merge_gap_s": merge_gap, "smoothing_frames": smoothing_frames,
                      "eligibility": not raw},
           "skipped_calls_over_1h": skipped, "segments": by_call}
    out_path.write_text(json.dumps(doc, sort_keys=True, indent=2) + "\n", encoding="utf-8")
    total = sum(len(v) for v in by_call.values())
    click.echo(f"wrote {total} segments over {len(by_call)} calls to {out_path}")


def _segments_from_source(manifest: Manifest, source: str):
    if source == "manifest":
        return list(manifest.segments)
    path = Path(source)
    if not path.exists():
        raise click.ClickException(f"segments file not found: {path}")
    doc = json.loads(path.read_text(encoding="utf-8"))
    if "segments" in doc and isinstance(doc["segments"], dict):
        recs = [r for v in doc["segments"].values() for r in v]
    else:
        recs = doc["segments"]
    return [Segment(segment_id=r["segment_id"], call_id=r["call_id"],
                    start_s=r["start_s"], end_s=r["end_s"]) for r in recs]


@main.command("select")
@click.option("--manifest", "manifest_path", type=_in_path, required=True)
@click.option("--segments", "segments_source", default="manifest", show_default=True,
              help="segments JSON from `segment`, or 'manifest' for manifest segments")
@click.option("--plan", "plan_path", type=_in_path, default=None,
              help="sampling plan JSON; defaults are used when omitted")
@click.option("--out", "out_path", type=click.Path(path_type=Path), required=True)
@click.option("--seed", default=None, type=int, help="override the plan's seed")
def select_cmd(manifest_path, segments_source, plan_path, out_path, seed):
    """Select annotation candidates (capped uniform + proximity-weighted)."""
    manifest = load_manifest(manifest_path)
    if plan_path is not None:
        plan = SamplingPlan.from_dict(json.loads(plan_path.read_text(encoding="utf-8")))
    else:
        plan = SamplingPlan()
    if seed is not None:
        plan = SamplingPlan(assessment_cap=plan.assessment_cap,
                            personal_budget=plan.personal_budget, seed=seed,
                            weight_function=plan.weight_function)
    segments = _segments_from_source(manifest, segments_source)
    selected = build_selection(manifest, segments, plan)
    save_selection(selected, plan, out_path)
    click.echo(f"selected {len(selected)} segments to {out_path}")


@main.command("annotate-serve")
@click.option("--port", default=8000, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--selection", "selection_path", type=_in_path, required=True)
@click.option("--log", "log_path", type=click.Path(path_type=Path), required=True)
@click.option("--audio-root", type=_in_dir, default=None,
              help="directory audio paths resolve against (default: selection file's dir)")
@click.option("--annotators", default=None, help="comma-separated roster; unset allows any id")
@click.option("--ui-dist", type=_in_dir, default=None,
              help="serve a built annotation UI from this directory at /")
def annotate_serve_cmd(port, host, selection_path, log_path, audio_root, annotators, ui_dist):
    """Serve the annotation HTTP API (and optionally the browser UI)."""
    import uvicorn

    from .annotation import AnnotationService, RatingLog, create_app

    _, selected = load_selection(selection_path)
    service = AnnotationService(
        selection=selected, log=RatingLog(log_path),
        audio_root=audio_root or selection_path.parent,
        annotator_roster=annotators.split(",") if annotators else None)
    app = create_app(service)
    if ui_dist is not None:
        from fastapi.staticfiles import StaticFiles
        app.mount("/", StaticFiles(directory=str(ui_dist), html=True), name="ui")
    uvicorn.run(app, host=host, port=port)


@main.command("aggregate")
@click.option("--log", "log_path", type=_in_path, required=True)
@click.option("--out", "out_path", type=click.Path(path_type=Path), required=True)
def aggregate_cmd(log_path, out_path):
    """Fold the rating log into aggregated normalized labels."""
    from .annotation import RatingLog, aggregate_records

    log = RatingLog(log_path)
    records = log.records()
    labels = []
    for seg_id in sorted({r.segment_id for r in records}):
        a = aggregate_records(seg_id, records)
        labels.append(SegmentLabel(
            segment_id=a.segment_id,
            activation=a.activation if a.activation is not None else 0.0,
            valence=a.valence if a.valence is not None else 0.0,
            n_ratings=a.n_ratings, excluded=a.excluded, reason=a.reason))
    save_labels(labels, out_path)
    usable = sum(1 for l in labels if not l.excluded)
    click.echo(f"aggregated {len(labels)} segments ({usable} usable) to {out_path}")


@main.command("features")
@click.option("--manifest", "manifest_path", type=_in_path, required=True)
@click.option("--segments", "segments_source", default="manifest", show_default=True)
@click.option("--kind", type=click.Choice(["logmfb", "functionals"]), default="logmfb",
              show_default=True)
@click.option("--out", "out_dir", type=click.Path(path_type=Path), required=True)
def features_cmd(manifest_path, segments_source, kind, out_dir):
    """Extract per-segment acoustic features into a cache directory."""
    manifest = load_manifest(manifest_path)
    root = manifest_path.parent
    segments = _segments_from_source(manifest, segments_source)
    calls = {c.call_id: c for c in manifest.calls}
    audio_cache: dict[str, object] = {}
    feats = {}
    for seg in segments:
        call = calls[seg.call_id]
        if call.audio_path not in audio_cache:
            audio_cache[call.audio_path] = read_wav(root / call.audio_path)
        clip = audio_cache[call.audio_path].slice_seconds(seg.start_s, seg.end_s)
        if kind == "logmfb":
            feats[seg.segment_id] = log_mfb(clip).frames
        else:
            feats[seg.segment_id] = functionals(clip).values
    names = list(FUNCTIONALS_REGISTRY) if kind == "functionals" else None
    write_feature_cache(out_dir, feats, kind=kind, feature_names=names, norm_provenance="raw")
    click.echo(f"cached {kind} features for {len(feats)} segments in {out_dir}")


def _train_config(lr, batch_size, epochs, dtype, arch, seed=0) -> TrainConfig:
    return TrainConfig(learning_rate=lr, batch_size=batch_size,
                       max_epochs=epochs if epochs is not None else default_max_epochs(arch),
                       seed=seed, dtype=dtype)


@main.command("train")
@click.option("--features", "cache_dir", type=_in_dir, required=True)
@click.option("--labels", "labels_path", type=_in_path, required=True)
@click.option("--manifest", "manifest_path", type=_in_path, required=True)
@click.option("--target", type=click.Choice(list(DIMENSIONS)), required=True)
@click.option("--arch", type=click.Choice(["ffnn", "convpool"]), required=True)
@click.option("--fold-spec", "fold_spec_path", type=_in_path, required=True)
@click.option("--run", "run_index", default=1, show_default=True)
@click.option("--fold", "fold_index", default=0, show_default=True)
@click.option("--config-json", default=None, help="model config overrides as JSON")
@click.option("--lr", default=1e-4, show_default=True)
@click.option("--batch-size", default=64, show_default=True)
@click.option("--epochs", default=None, type=int, help="default: 100 ffnn / 15 convpool")
@click.option("--dtype", default="float64", show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--out", "out_dir", type=click.Path(path_type=Path), required=True)
def train_cmd(cache_dir, labels_path, manifest_path, target, arch, fold_spec_path,
              run_index, fold_index, config_json, lr, batch_size, epochs, dtype, seed, out_dir):
    """Train one model on one (run, fold) split of the fold spec."""
    manifest = load_manifest(manifest_path)
    _, features = read_feature_cache(cache_dir)
    labels = load_labels(labels_path)
    data = assemble_dataset(manifest, features, labels, target)
    plans = load_fold_plans(fold_spec_path)
    plan = next((p for p in plans if p.run_index == run_index), None)
    if plan is None:
        raise click.ClickException(f"run {run_index} not in {fold_spec_path}")
    split = iter_splits(plan)[fold_index]

    overrides = json.loads(config_json) if config_json else {}
    config = grid_from_dicts(arch, [overrides])[0]
    trainer = make_trainer(_train_config(lr, batch_size, epochs, dtype, arch))

    def gather(subjects):
        xs, ys = [], []
        for s in subjects:
            x, y = data[s]
            xs.extend(x)
            ys.extend(y.tolist())
        return xs, np.asarray(ys)

    x_train, y_train = gather(split.train_subjects)
    x_val, y_val = gather(split.val_subjects)
    model = trainer(config, x_train, y_train, x_val, y_val, seed)
    save_model_dir(model, out_dir)
    click.echo(f"trained {arch}/{target} run {run_index} fold {fold_index}: "
               f"best epoch {model.artifact.best_epoch}, "
               f"val CCC {model.best_val_ccc}")


@main.command("evaluate")
@click.option("--features", "cache_dir", type=_in_dir, required=True)
@click.option("--labels", "labels_path", type=_in_path, required=True)
@click.option("--manifest", "manifest_path", type=_in_path, required=True)
@click.option("--arch", type=click.Choice(["ffnn", "convpool"]), default="convpool",
              show_default=True)
@click.option("--grid", "grid_path", type=_in_path, default=None,
              help="grid JSON {configs: [...]}; omit for the full default grid")
@click.option("--runs", default=5, show_default=True)
@click.option("--lr", default=1e-4, show_default=True)
@click.option("--batch-size", default=64, show_default=True)
@click.option("--epochs", default=None, type=int)
@click.option("--dtype", default="float64", show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--save-models/--no-save-models", default=True, show_default=True)
@click.option("--out", "out_dir", type=click.Path(path_type=Path), required=True)
def evaluate_cmd(cache_dir, labels_path, manifest_path, arch, grid_path, runs, lr,
                 batch_size, epochs, dtype, seed, save_models, out_dir):
    """Run the repeated cross-validation protocol for both targets."""
    manifest = load_manifest(manifest_path)
    _, features = read_feature_cache(cache_dir)
    labels = load_labels(labels_path)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    subjects = sorted({c.subject_id for c in manifest.calls})
    plans = build_fold_plans(subjects, seed=seed, n_runs=runs)
    save_fold_plans(plans, out / "folds.json")
    if grid_path is not None:
        grid_doc = json.loads(grid_path.read_text(encoding="utf-8"))
        grid = grid_from_dicts(arch, grid_doc["configs"])
    else:
        grid = default_grid(arch)
    trainer = make_trainer(_train_config(lr, batch_size, epochs, dtype, arch))

    results = {}
    for target in DIMENSIONS:
        data = assemble_dataset(manifest, features, labels, target)
        result = run_experiment(plans, grid, data, trainer, base_seed=seed)
        results[target] = result
        if save_models:
            for (run, fold), model in result.artifacts.items():
                save_model_dir(model, out / "models" / target / f"run{run}_fold{fold}")
        click.echo(f"{target}: " + ", ".join(
            f"{m} {s['mean']:.3f}+/-{s['spread']:.3f}" for m, s in result.summary().items()))

    (out / "results.json").write_text(
        json.dumps({t: r.to_dict() for t, r in results.items()}, sort_keys=True, indent=2) + "\n",
        encoding="utf-8")
    (out / "results.txt").write_text(_results_table(results), encoding="utf-8")
    click.echo(f"wrote results to {out}")


def _results_table(results: dict) -> str:
    lines = [f"{'Measure':24s}{'mean':>10s}{'spread':>10s}",
             "-" * 44]
    for target, result in results.items():
        for metric, s in result.summary().items():
            lines.append(f"{target + ' ' + metric.upper():24s}{s['mean']:>10.3f}{s['spread']:>10.3f}")
    return "\n".join(lines) + "\n"


@main.command("predict")
@click.option("--features", "cache_dir", type=_in_dir, required=True)
@click.option("--models", "models_dir", type=_in_dir, required=True,
              help="directory with models/<target>/run*_fold* subdirectories")
@click.option("--expected-members", default=30, show_default=True)
@click.option("--out", "out_path", type=click.Path(path_type=Path), required=True)
def predict_cmd(cache_dir, models_dir, expected_members, out_path):
    """Ensemble-predict emotion for every cached segment."""
    _, features = read_feature_cache(cache_dir)
    members = {}
    for target in DIMENSIONS:
        tdir = Path(models_dir) / target
        if not tdir.exists():
            raise click.ClickException(f"missing models directory: {tdir}")
        members[target] = [load_model_dir(d) for d in sorted(tdir.iterdir()) if d.is_dir()]
    preds = ensemble_predict(features, members, expected_members=expected_members)
    doc = {"expected_members": expected_members,
           "predictions": [{
               "segment_id": p.segment_id, "activation": p.activation, "valence": p.valence,
               "member_activation": list(p.member_activation),
               "member_valence": list(p.member_valence)} for p in preds]}
    Path(out_path).write_text(json.dumps(doc, sort_keys=True, indent=2) + "\n", encoding="utf-8")
    click.echo(f"wrote {len(preds)} ensemble predictions to {out_path}")


@main.command("mood-analyze")
@click.option("--predictions", "pred_path", type=_in_path, required=True)
@click.option("--manifest", "manifest_path", type=_in_path, required=True)
@click.option("--out", "out_dir", type=click.Path(path_type=Path), required=True)
def mood_analyze_cmd(pred_path, manifest_path, out_dir):
    """Produce the mood report (contrasts, correlations, ANOVA, variance check)."""
    manifest = load_manifest(manifest_path)
    doc = json.loads(pred_path.read_text(encoding="utf-8"))
    predictions = {p["segment_id"]: {"activation": p["activation"], "valence": p["valence"]}
                   for p in doc["predictions"]}
    report = build_mood_report(manifest, predictions)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(
        json.dumps(report.to_dict(), sort_keys=True, indent=2) + "\n", encoding="utf-8")
    (out / "report.txt").write_text(report.render_text(), encoding="utf-8")
    click.echo(f"wrote mood report to {out}")


if __name__ == "__main__":
    main()
