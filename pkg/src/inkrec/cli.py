"""Command-line entrypoint covering every pipeline stage.

Subcommands mirror the library modules: synth, preprocess, features, train,
classify, eval, rules build/expand, recognize, serve.  Every stochastic step
takes a --seed, so a scripted run reproduces bit-identically.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click
import numpy as np

from .classifier import (
    ClassifierConfig,
    evaluate,
    load_bundle,
    merge_classes,
    save_bundle,
    train_all,
)
from .features import FeatureConfig, extract
from .hmm import TrainConfig
from .ink import (
    AksharaSample,
    Dataset,
    InkTrace,
    SchemaError,
    StrokeSample,
    _parse_stroke_array,
    load_dataset,
    parse_record,
    sample_to_record,
    save_dataset,
)
from .preprocess import PreprocessConfig, preprocess_pipeline
from .recognizer import recognize, result_to_json
from .report import ConfusionMatrix, render_json, render_text
from .rules import (
    RuleSet,
    alternatives_from_confusion,
    build_rules,
    expand_rules,
    load_rules,
    save_rules,
)
from .synth import default_specs, generate


def _fail(e: Exception) -> "click.ClickException":
    return click.ClickException(str(e))


def _read_records(fh, ctx_name: str):
    for lineno, line in enumerate(fh, start=1):
        line = line.strip()
        if not line:
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as e:
            raise _fail(SchemaError(f"{ctx_name}:{lineno}: invalid JSON ({e.msg})"))
        try:
            yield parse_record(obj, f"{ctx_name}:{lineno}")
        except SchemaError as e:
            raise _fail(e)


def _preprocess_options(fn):
    fn = click.option("--resample-count", default=64, show_default=True,
                      help="Points per trace after arc-length resampling.")(fn)
    fn = click.option("--smooth-window", default=3, show_default=True,
                      help="Moving-average window (odd).")(fn)
    fn = click.option("--gap-threshold", default=3.0, show_default=True,
                      help="Gap/median ratio above which points are interpolated.")(fn)
    return fn


def _feature_options(fn):
    fn = click.option("--derivative", type=click.Choice(["regression", "central"]),
                      default="regression", show_default=True,
                      help="Derivative estimator for the delta features.")(fn)
    fn = click.option("--window", default=2, show_default=True,
                      help="Regression window half-width.")(fn)
    return fn


def _build_configs(resample_count, smooth_window, gap_threshold,
                   derivative="regression", window=2):
    try:
        return (PreprocessConfig(resample_count, smooth_window, gap_threshold),
                FeatureConfig(derivative, window))
    except ValueError as e:
        raise _fail(e)


def _filter_sessions(ds: Dataset, sessions: str | None) -> Dataset:
    if not sessions:
        return ds
    try:
        wanted = {int(s) for s in sessions.split(",") if s.strip()}
    except ValueError:
        raise click.BadParameter("sessions must be a comma-separated list of integers")
    kept = [s for s in ds.samples if s.session in wanted]
    if not kept:
        raise _fail(ValueError(f"no samples in sessions {sorted(wanted)}"))
    return Dataset(kept)


@click.group()
@click.version_option(package_name="inkrec")
def main():
    """Online handwriting recognition toolkit."""


@main.command()
@click.option("--families", default=10, show_default=True,
              help="Number of shape families (1-12).")
@click.option("--per-class", default=300, show_default=True,
              help="Samples per class per session; must be divisible by --writers.")
@click.option("--writers", default=20, show_default=True)
@click.option("--sessions", default=2, show_default=True)
@click.option("--noise", default=0.02, show_default=True)
@click.option("--seed", default=42, show_default=True)
@click.option("--out", type=click.Path(file_okay=False, path_type=Path), required=True)
def synth(families, per_class, writers, sessions, noise, seed, out):
    """Generate a labeled synthetic stroke corpus, one file per family."""
    if per_class % writers != 0:
        raise click.BadParameter("--per-class must be divisible by --writers")
    try:
        specs = default_specs(families, noise)
        out.mkdir(parents=True, exist_ok=True)
        for spec in specs:
            ds = generate(spec, per_class // writers, writers, sessions, seed)
            save_dataset(ds, out / f"{spec.label}.jsonl")
    except ValueError as e:
        raise _fail(e)
    click.echo(f"wrote {families} families x {per_class * sessions} samples to {out}")


@main.command()
@click.option("--in", "src", type=click.File("r"), default="-",
              help="Ink records (JSONL); default stdin.")
@click.option("--out", "dst", type=click.File("w"), default="-",
              help="Preprocessed records; default stdout.")
@_preprocess_options
def preprocess(src, dst, resample_count, smooth_window, gap_threshold):
    """Normalize, smooth, and resample every trace in the input records."""
    cfg, _ = _build_configs(resample_count, smooth_window, gap_threshold)
    for sample in _read_records(src, src.name):
        try:
            if isinstance(sample, StrokeSample):
                out = StrokeSample(preprocess_pipeline(sample.trace, cfg),
                                   sample.label, sample.writer, sample.session)
            else:
                out = AksharaSample(
                    tuple(preprocess_pipeline(t, cfg) for t in sample.traces),
                    sample.label, sample.unicode, sample.writer, sample.session)
        except ValueError as e:
            raise _fail(e)
        dst.write(json.dumps(sample_to_record(out), ensure_ascii=False) + "\n")


@main.command()
@click.option("--in", "src", type=click.File("r"), default="-")
@click.option("--out", "dst", type=click.File("w"), default="-")
@_preprocess_options
@_feature_options
def features(src, dst, resample_count, smooth_window, gap_threshold, derivative, window):
    """Emit 6-D feature frames (x, y, dx, dy, ddx, ddy) per trace."""
    pre_cfg, feat_cfg = _build_configs(resample_count, smooth_window, gap_threshold,
                                       derivative, window)
    for sample in _read_records(src, src.name):
        traces = [sample.trace] if isinstance(sample, StrokeSample) else sample.traces
        try:
            frames = [extract(preprocess_pipeline(t, pre_cfg), feat_cfg).frames
                      for t in traces]
        except ValueError as e:
            raise _fail(e)
        dst.write(json.dumps({
            "label": sample.label,
            "writer": sample.writer,
            "session": sample.session,
            "frames": [f.tolist() for f in frames],
        }, ensure_ascii=False) + "\n")


@main.command()
@click.option("--data", type=click.Path(exists=True, path_type=Path), required=True,
              help="Ink file or directory of ink files.")
@click.option("--out", type=click.Path(file_okay=False, path_type=Path), required=True,
              help="Bundle directory to write.")
@click.option("--states", default=7, show_default=True,
              help="Emitting states per model.")
@click.option("--mixtures", default=20, show_default=True,
              help="Target Gaussians per state.")
@click.option("--max-iterations", default=40, show_default=True)
@click.option("--convergence", default=1e-4, show_default=True,
              help="Per-frame log-likelihood gain that stops refinement.")
@click.option("--variance-floor", default=1e-4, show_default=True)
@_preprocess_options
@_feature_options
@click.option("--sessions", default=None,
              help="Comma-separated sessions to train on (default: all).")
@click.option("--jobs", default=1, show_default=True, envvar="INKREC_JOBS",
              help="Parallel training processes (env: INKREC_JOBS).")
def train(data, out, states, mixtures, max_iterations, convergence, variance_floor,
          resample_count, smooth_window, gap_threshold, derivative, window,
          sessions, jobs):
    """Train one left-to-right mixture model per stroke label."""
    pre_cfg, feat_cfg = _build_configs(resample_count, smooth_window, gap_threshold,
                                       derivative, window)
    try:
        cfg = ClassifierConfig(
            n_states=states,
            preprocess=pre_cfg,
            features=feat_cfg,
            train=TrainConfig(max_iterations, convergence, variance_floor, mixtures),
        )
        ds = _filter_sessions(load_dataset(data), sessions)
        c = train_all(ds, cfg, jobs=jobs)
        save_bundle(c, out)
    except (ValueError, SchemaError) as e:
        raise _fail(e)
    click.echo(f"trained {len(c.labels)} classes -> {out}")


@main.command()
@click.option("--bundle", type=click.Path(exists=True, file_okay=False, path_type=Path),
              required=True)
@click.option("--in", "src", type=click.File("r"), default="-")
@click.option("--out", "dst", type=click.File("w"), default="-")
@click.option("--top", default=3, show_default=True, help="Ranked labels to keep.")
def classify(bundle, src, dst, top):
    """Rank stroke classes for every trace in the input records."""
    if top < 1:
        raise click.BadParameter("--top must be >= 1")
    try:
        c = load_bundle(bundle)
    except ValueError as e:
        raise _fail(e)
    for sample in _read_records(src, src.name):
        traces = [sample.trace] if isinstance(sample, StrokeSample) else sample.traces
        try:
            ranked = [c.classify(t)[:top] for t in traces]
        except ValueError as e:
            raise _fail(e)
        dst.write(json.dumps({
            "label": sample.label,
            "ranked": [[{"label": lbl, "loglik": ll} for lbl, ll in r] for r in ranked],
        }, ensure_ascii=False) + "\n")


@main.command(name="eval")
@click.option("--bundle", type=click.Path(exists=True, file_okay=False, path_type=Path),
              required=True)
@click.option("--data", type=click.Path(exists=True, path_type=Path), required=True)
@click.option("--out", type=click.Path(file_okay=False, path_type=Path), default=None,
              help="Directory for confusion.txt / confusion.json.")
@click.option("--sessions", default=None,
              help="Comma-separated sessions to evaluate (default: all).")
@click.option("--merge-threshold", type=float, default=None,
              help="Merge classes whose symmetric confusion reaches this percentage "
                   "and report post-merge accuracy too.")
@click.option("--apply-merge", is_flag=True,
              help="With --merge-threshold: write the merged map back to the bundle.")
def eval_cmd(bundle, data, out, sessions, merge_threshold, apply_merge):
    """Evaluate a bundle on labeled strokes and write the confusion report."""
    if apply_merge and merge_threshold is None:
        raise click.BadParameter("--apply-merge requires --merge-threshold")
    try:
        c = load_bundle(bundle)
        ds = _filter_sessions(load_dataset(data), sessions)
        cm, acc = evaluate(c, ds)
    except (ValueError, SchemaError) as e:
        raise _fail(e)
    click.echo(f"accuracy: {acc:.2f}% ({int(cm.counts.sum())} samples)")
    if merge_threshold is not None:
        try:
            new_merges = merge_classes(cm, merge_threshold)
        except ValueError as e:
            raise _fail(e)
        if new_merges:
            combined = {}
            for lbl in c.labels:
                target = new_merges.get(c.canonical(lbl), c.canonical(lbl))
                if target != lbl:
                    combined[lbl] = target
            merged = c.with_merge(combined)
            cm_after, acc_after = evaluate(merged, ds)
            pairs = ", ".join(f"{a}->{b}" for a, b in sorted(new_merges.items()))
            click.echo(f"merged {len(new_merges)} classes at {merge_threshold:g}%: {pairs}")
            click.echo(f"post-merge accuracy: {acc_after:.2f}% "
                       f"({int(cm_after.counts.sum())} samples)")
            if apply_merge:
                save_bundle(merged, bundle)
                click.echo(f"bundle {bundle} updated with merge map")
            cm = cm_after
        else:
            click.echo(f"no classes reach the {merge_threshold:g}% merge threshold")
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        (out / "confusion.txt").write_text(render_text(cm), encoding="utf-8")
        (out / "confusion.json").write_text(render_json(cm), encoding="utf-8")
        click.echo(f"report written to {out}")


@main.group()
def rules():
    """Build and expand stroke-combination rules."""


@rules.command("build")
@click.option("--data", type=click.Path(exists=True, path_type=Path), required=True,
              help="Ink records with akshara samples.")
@click.option("--bundle", type=click.Path(exists=True, file_okay=False, path_type=Path),
              required=True, help="Classifier whose top-1 labels annotate the strokes.")
@click.option("--writer-threshold", default=5.0, show_default=True,
              help="Keep combinations used by strictly more than this percent of writers.")
@click.option("--out", type=click.Path(dir_okay=False, path_type=Path), required=True)
def rules_build(data, bundle, writer_threshold, out):
    """Derive base rules from akshara samples."""
    try:
        c = load_bundle(bundle)
        aksharas = load_dataset(data).aksharas
        if not aksharas:
            raise ValueError("no akshara samples in the data")
        labels_per = [tuple(c.classify(t)[0][0] for t in s.traces) for s in aksharas]
        rs = build_rules(aksharas, labels_per, writer_threshold)
        save_rules(rs, out)
    except (ValueError, SchemaError) as e:
        raise _fail(e)
    click.echo(f"{len(rs)} base rules -> {out}")


@rules.command("expand")
@click.option("--rules", "rules_path", type=click.Path(exists=True, dir_okay=False,
              path_type=Path), required=True)
@click.option("--confusion", type=click.Path(exists=True, dir_okay=False, path_type=Path),
              required=True, help="confusion.json written by `inkrec eval`.")
@click.option("--rate-threshold", default=5.0, show_default=True,
              help="Confusion percentage that makes a label an alternative.")
@click.option("--out", type=click.Path(dir_okay=False, path_type=Path), required=True)
def rules_expand(rules_path, confusion, rate_threshold, out):
    """Add confusion-substituted variants to a base rule set."""
    try:
        base = load_rules(rules_path)
        cm = ConfusionMatrix.from_dict(
            json.loads(confusion.read_text(encoding="utf-8")))
        alts = alternatives_from_confusion(cm, rate_threshold)
        refined = expand_rules(base, alts, rate_threshold)
        save_rules(refined, out)
    except (ValueError, KeyError) as e:
        raise _fail(e)
    click.echo(f"{len(base)} base -> {len(refined)} refined rules -> {out}")


@main.command(name="recognize")
@click.option("--bundle", type=click.Path(exists=True, file_okay=False, path_type=Path),
              required=True)
@click.option("--rules", "rules_path", type=click.Path(exists=True, dir_okay=False,
              path_type=Path), default=None)
@click.option("--k", default=1, show_default=True,
              help="Ranked labels per stroke for the lattice search.")
@click.option("--in", "src", type=click.File("r"), default="-",
              help="One JSON payload or ink record per line; default stdin.")
@click.option("--out", "dst", type=click.File("w"), default="-")
def recognize_cmd(bundle, rules_path, k, src, dst):
    """Recognize akshara payloads; prints one result document per line."""
    try:
        c = load_bundle(bundle)
        rs = load_rules(rules_path) if rules_path else RuleSet([])
    except ValueError as e:
        raise _fail(e)
    for lineno, line in enumerate(src, start=1):
        line = line.strip()
        if not line:
            continue
        ctx = f"{src.name}:{lineno}"
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as e:
            raise _fail(SchemaError(f"{ctx}: invalid JSON ({e.msg})"))
        try:
            if isinstance(obj, dict) and "kind" in obj:
                sample = parse_record(obj, ctx)
                traces = ([sample.trace] if isinstance(sample, StrokeSample)
                          else list(sample.traces))
                payload_k = k
            elif isinstance(obj, dict) and "strokes" in obj:
                raw = obj["strokes"]
                if not isinstance(raw, list) or not raw:
                    raise SchemaError(f"{ctx}: payload needs a non-empty 'strokes' array")
                traces = [_parse_stroke_array(s, f"{ctx}: stroke {i}")
                          for i, s in enumerate(raw)]
                payload_k = obj.get("k", k)
            else:
                raise SchemaError(f"{ctx}: expected an ink record or a strokes payload")
            result = recognize(c, rs, traces, payload_k)
        except (SchemaError, ValueError) as e:
            raise _fail(e)
        dst.write(result_to_json(result) + "\n")


@main.command()
@click.option("--bundle", type=click.Path(exists=True, file_okay=False, path_type=Path),
              required=True)
@click.option("--rules", "rules_path", type=click.Path(exists=True, dir_okay=False,
              path_type=Path), default=None)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True)
def serve(bundle, rules_path, host, port):
    """Run the HTTP recognition service."""
    import uvicorn

    from .service import create_app

    try:
        app = create_app(bundle, rules_path)
    except ValueError as e:
        raise _fail(e)
    uvicorn.run(app, host=host, port=port)


if __name__ == "__main__":
    main()
