"""Per-class stroke models: training, scoring, merging, and bundle I/O.

A StrokeClassifier holds one left-to-right mixture model per stroke label
plus the preprocessing/feature configuration it was trained under.  Classes
whose models systematically confuse each other can be merged: a merge map
sends original labels to a canonical representative, and classification
reports canonical labels only.

Bundles are directories: one model file per class, a config snapshot, the
merge map, and a manifest with SHA-256 hashes of every other file so a
loaded bundle is known to be exactly what was saved.
"""

from __future__ import annotations

import hashlib
import json
import logging
import urllib.parse
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .features import FeatureConfig, FeatureSequence, extract
from .hmm import Hmm, TrainConfig, baum_welch, flat_start, load_model, log_forward, save_model, split_mixtures
from .ink import Dataset, InkTrace
from .preprocess import PreprocessConfig, preprocess_pipeline
from .report import ConfusionMatrix, confusion_matrix

logger = logging.getLogger(__name__)

BUNDLE_FORMAT = "inkrec-bundle"
BUNDLE_VERSION = 1
_MANIFEST = "manifest.json"


@dataclass(frozen=True)
class ClassifierConfig:
    """Everything that determines how a trace is scored."""

    n_states: int = 7
    preprocess: PreprocessConfig = field(default_factory=PreprocessConfig)
    features: FeatureConfig = field(default_factory=FeatureConfig)
    train: TrainConfig = field(default_factory=TrainConfig)

    def __post_init__(self):
        if self.n_states < 1:
            raise ValueError("n_states must be >= 1")

    def to_dict(self) -> dict:
        return {
            "n_states": self.n_states,
            "preprocess": asdict(self.preprocess),
            "features": asdict(self.features),
            "train": asdict(self.train),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "ClassifierConfig":
        return cls(
            n_states=doc["n_states"],
            preprocess=PreprocessConfig(**doc["preprocess"]),
            features=FeatureConfig(**doc["features"]),
            train=TrainConfig(**doc["train"]),
        )

    @property
    def hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()


class StrokeClassifier:
    def __init__(self, models: dict[str, Hmm], config: ClassifierConfig,
                 merge_map: dict[str, str] | None = None):
        if not models:
            raise ValueError("classifier needs at least one class model")
        self.models = dict(sorted(models.items()))
        self.config = config
        self.merge_map = dict(merge_map or {})
        for src, dst in self.merge_map.items():
            if src not in self.models or dst not in self.models:
                raise ValueError(f"merge map entry {src!r} -> {dst!r} names an unknown class")

    @property
    def labels(self) -> list[str]:
        """All trained class labels, sorted."""
        return list(self.models)

    @property
    def canonical_labels(self) -> list[str]:
        return sorted({self.canonical(lbl) for lbl in self.models})

    def canonical(self, label: str) -> str:
        return self.merge_map.get(label, label)

    @property
    def config_hash(self) -> str:
        return self.config.hash

    def with_merge(self, merge_map: dict[str, str]) -> "StrokeClassifier":
        return StrokeClassifier(self.models, self.config, merge_map)

    def features_for(self, trace: InkTrace) -> FeatureSequence:
        return extract(preprocess_pipeline(trace, self.config.preprocess), self.config.features)

    def score_features(self, fs: FeatureSequence, config_hash: str) -> list[tuple[str, float]]:
        """Rank canonical labels for features extracted elsewhere.

        The caller states which configuration produced the features; a
        mismatch with this classifier's own configuration is an error, not
        a silent garbage score.
        """
        if config_hash != self.config_hash:
            raise ValueError(
                "feature config hash mismatch: features were extracted under a "
                "different preprocessing/feature configuration than this classifier"
            )
        best: dict[str, float] = {}
        for label, model in self.models.items():
            ll = log_forward(model, fs.frames)
            canon = self.canonical(label)
            if canon not in best or ll > best[canon]:
                best[canon] = ll
        return sorted(best.items(), key=lambda kv: (-kv[1], kv[0]))

    def classify(self, trace: InkTrace) -> list[tuple[str, float]]:
        """All canonical labels ranked by log-likelihood (ties: lexicographic)."""
        return self.score_features(self.features_for(trace), self.config_hash)


def _prepare_class(label: str, traces: list[InkTrace], cfg: ClassifierConfig) -> list[np.ndarray]:
    frames = [extract(preprocess_pipeline(t, cfg.preprocess), cfg.features).frames
              for t in traces]
    usable = [f for f in frames if len(f) >= cfg.n_states]
    if not usable:
        raise ValueError(
            f"class {label!r}: every sample is shorter than {cfg.n_states} states"
        )
    if len(usable) < len(frames):
        logger.warning("class %s: dropped %d samples shorter than %d frames",
                       label, len(frames) - len(usable), cfg.n_states)
    return usable


def _mixture_schedule(target: int) -> list[int]:
    steps, m = [], 1
    while m < target:
        m = min(2 * m, target)
        steps.append(m)
    return steps


def _train_class(args) -> tuple[str, Hmm]:
    label, frames, cfg = args
    h = flat_start(frames, cfg.n_states, variance_floor=cfg.train.variance_floor)
    h, _ = baum_welch(h, frames, cfg.train)
    for step in _mixture_schedule(cfg.train.target_mixtures):
        h = split_mixtures(h, step)
        h, _ = baum_welch(h, frames, cfg.train)
    return label, h


def train_all(train: Dataset, cfg: ClassifierConfig | None = None, *,
              jobs: int = 1) -> StrokeClassifier:
    """Fit one model per stroke label in `train`.

    Each class follows the same schedule: single-component flat start,
    fit, then double the mixture size (capped at the target) and refit
    until the target is reached.  With jobs > 1 classes train in parallel
    processes; results are identical to a serial run.
    """
    cfg = cfg or ClassifierConfig()
    if jobs < 1:
        raise ValueError("jobs must be >= 1")
    strokes = train.strokes
    if not strokes:
        raise ValueError("training data contains no stroke samples")
    by_label: dict[str, list[InkTrace]] = {}
    for s in strokes:
        by_label.setdefault(s.label, []).append(s.trace)
    tasks = [(label, _prepare_class(label, traces, cfg), cfg)
             for label, traces in sorted(by_label.items())]
    models: dict[str, Hmm] = {}
    if jobs == 1 or len(tasks) == 1:
        for task in tasks:
            label, model = _train_class(task)
            models[label] = model
            logger.info("trained class %s (%d samples)", label, len(task[1]))
    else:
        with ProcessPoolExecutor(max_workers=min(jobs, len(tasks))) as pool:
            for label, model in pool.map(_train_class, tasks):
                models[label] = model
                logger.info("trained class %s", label)
    return StrokeClassifier(models, cfg)


def merge_classes(cm: ConfusionMatrix, threshold: float = 15.0) -> dict[str, str]:
    """Merge map from symmetric confusion mass.

    Two classes belong together when cm[i][j] + cm[j][i] reaches the
    threshold (percentage points).  Groups are transitive closures; the
    lexicographically smallest member is canonical.  Only non-identity
    entries appear in the map.
    """
    if threshold <= 0:
        raise ValueError("threshold must be positive")
    labels = cm.labels
    parent = {lbl: lbl for lbl in labels}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for i, a in enumerate(labels):
        for b in labels[i + 1:]:
            if cm.rate(a, b) + cm.rate(b, a) >= threshold:
                ra, rb = find(a), find(b)
                if ra != rb:
                    parent[max(ra, rb)] = min(ra, rb)
    return {lbl: find(lbl) for lbl in labels if find(lbl) != lbl}


def evaluate(c: StrokeClassifier, test: Dataset) -> tuple[ConfusionMatrix, float]:
    """Confusion matrix and accuracy of top-1 classification on `test`.

    Test labels are taken through the classifier's merge map, so after a
    merge the truth side uses canonical labels too.
    """
    strokes = test.strokes
    if not strokes:
        raise ValueError("test data contains no stroke samples")
    known = set(c.canonical_labels)
    truths, preds = [], []
    for s in strokes:
        truth = c.canonical(s.label)
        if truth not in known:
            raise ValueError(f"test label {s.label!r} is not a trained class")
        truths.append(truth)
        preds.append(c.classify(s.trace)[0][0])
    cm = confusion_matrix(truths, preds)
    return cm, cm.accuracy()


# --- bundle I/O -----------------------------------------------------------

def _model_filename(label: str) -> str:
    return urllib.parse.quote(label, safe="") + ".json"


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def save_bundle(c: StrokeClassifier, bundle_dir: str | Path) -> None:
    bundle = Path(bundle_dir)
    (bundle / "models").mkdir(parents=True, exist_ok=True)
    files: dict[str, str] = {}
    for label, model in c.models.items():
        rel = f"models/{_model_filename(label)}"
        save_model(model, bundle / rel)
        files[rel] = _sha256(bundle / rel)
    for rel, doc in (("config.json", c.config.to_dict()),
                     ("merge_map.json", c.merge_map)):
        (bundle / rel).write_text(
            json.dumps(doc, ensure_ascii=False, sort_keys=True, indent=2) + "\n",
            encoding="utf-8",
        )
        files[rel] = _sha256(bundle / rel)
    manifest = {
        "format": BUNDLE_FORMAT,
        "version": BUNDLE_VERSION,
        "labels": c.labels,
        "config_hash": c.config_hash,
        "files": files,
    }
    (bundle / _MANIFEST).write_text(
        json.dumps(manifest, ensure_ascii=False, sort_keys=True, indent=2) + "\n",
        encoding="utf-8",
    )


def bundle_manifest_hash(bundle_dir: str | Path) -> str:
    """SHA-256 of the manifest file itself; identifies a bundle as a whole."""
    return _sha256(Path(bundle_dir) / _MANIFEST)


def load_bundle(bundle_dir: str | Path) -> StrokeClassifier:
    bundle = Path(bundle_dir)
    manifest_path = bundle / _MANIFEST
    if not manifest_path.is_file():
        raise ValueError(f"{bundle}: not a model bundle (no {_MANIFEST})")
    manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    if manifest.get("format") != BUNDLE_FORMAT or manifest.get("version") != BUNDLE_VERSION:
        raise ValueError(f"{bundle}: unsupported bundle format/version")
    for rel, expected in manifest["files"].items():
        target = bundle / rel
        if not target.is_file():
            raise ValueError(f"{bundle}: missing bundle file {rel}")
        actual = _sha256(target)
        if actual != expected:
            raise ValueError(f"{bundle}: hash mismatch for {rel} (bundle corrupted?)")
    config = ClassifierConfig.from_dict(
        json.loads((bundle / "config.json").read_text(encoding="utf-8"))
    )
    if config.hash != manifest["config_hash"]:
        raise ValueError(f"{bundle}: config hash mismatch between config.json and manifest")
    merge_map = json.loads((bundle / "merge_map.json").read_text(encoding="utf-8"))
    models = {label: load_model(bundle / "models" / _model_filename(label))
              for label in manifest["labels"]}
    return StrokeClassifier(models, config, merge_map)
