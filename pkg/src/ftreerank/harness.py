"""Experiment orchestration: data loading, evaluation protocols, reports.

An :class:`ExperimentConfig` names the data (a synthetic mixture or CSV
files), the learner and the protocol. All randomness flows from
``config.seed`` through :class:`numpy.random.SeedSequence` (PCG64
generators), so a config fully determines every artifact.
"""
import csv
import dataclasses
import hashlib
import json
import math
import os
import time
import warnings
from dataclasses import dataclass

import numpy as np

from . import synth
from .errors import (
    ConfigError,
    ConfigMismatch,
    DataError,
    FormatError,
    FTreeRankError,
    InvalidProtocol,
    IoError,
    ParseError,
)
from .metrics import as_labels, empirical_auc, roc_curve
from .treerank import LabeledCurveSet, SELECTION_MODES, grow_filtered, grow_functional, prune
from .wavelet import family_taps, log2_length

__all__ = [
    "ExperimentConfig",
    "EvaluationReport",
    "ComparisonReport",
    "load_data",
    "run_bootstrap",
    "run_vfold",
    "run_holdout",
    "evaluate",
    "compare_local_vs_global",
    "ingest_csv",
    "write_csv",
    "fit_learner",
    "index_hash",
]

LEARNERS = ("functional_treerank", "filtered_treerank")
PROTOCOLS = ("bootstrap", "v_fold", "holdout")
CASES = {"a": 0.94, "b": 0.71}
ENVELOPE_GRID = 101


@dataclass
class ExperimentConfig:
    """Declarative description of one experiment.

    ``N`` is a coefficient count or a percentage string such as ``"1%"``
    of the ``2**j`` coefficients per sensor. ``case`` picks a preset
    optimal AUC for synthetic data (``"a"``: 0.94, ``"b"``: 0.71).
    ``center`` subtracts the training mean curve from all curves; ``None``
    means on for CSV data and off for synthetic data.
    """

    source: str = "synth"
    train_path: str = None
    test_path: str = None
    sensors: int = 1
    center: bool = None
    case: str = "a"
    target_auc: float = None
    K: int = 50
    rate: float = 2.0
    sigma: float = 1.0
    decay: float = 0.0
    length: int = 2048
    spec_seed: int = None
    family: str = "Beylkin"
    j: int = 11
    j0: int = 1
    N: object = "1%"
    selection: str = "top_variance"
    r: float = 1.0
    learner: str = "functional_treerank"
    depth: int = 4
    max_leaves: int = 8
    min_node: int = 5
    min_split: int = 20
    criterion: str = "gini"
    prune: bool = False
    prune_folds: int = 4
    protocol: str = "bootstrap"
    B: int = 10
    resample_size: int = None
    V: int = 4
    holdout: float = 0.25
    n_train: int = 600
    n_test: int = 600
    seed: int = 0

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.source not in ("synth", "csv"):
            raise ConfigError(f"source must be 'synth' or 'csv', got {self.source!r}")
        if self.source == "csv" and not self.train_path:
            raise ConfigError("csv source needs train_path")
        if self.source == "synth" and self.target_auc is None and self.case not in CASES:
            raise ConfigError(f"unknown case {self.case!r}; use one of {sorted(CASES)} or set target_auc")
        if self.learner not in LEARNERS:
            raise ConfigError(f"learner must be one of {LEARNERS}, got {self.learner!r}")
        if self.protocol not in PROTOCOLS:
            raise ConfigError(f"protocol must be one of {PROTOCOLS}, got {self.protocol!r}")
        if self.selection not in SELECTION_MODES:
            raise ConfigError(f"selection must be one of {SELECTION_MODES}, got {self.selection!r}")
        try:
            family_taps(self.family)
        except KeyError as exc:
            raise ConfigError(str(exc)) from None
        for name in ("B", "V", "n_train", "n_test", "depth", "max_leaves", "K", "sensors"):
            if int(getattr(self, name)) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if not 0.0 < self.holdout < 1.0:
            raise ConfigError("holdout must lie in (0, 1)")
        if isinstance(self.N, str) and not self.N.strip().endswith("%"):
            try:
                self.N = int(self.N)
            except ValueError:
                raise ConfigError(f"N must be an integer or a percentage, got {self.N!r}") from None

    # construction ---------------------------------------------------------
    @classmethod
    def from_dict(cls, d):
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)

    @classmethod
    def from_json(cls, text):
        try:
            d = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from None
        if not isinstance(d, dict):
            raise ConfigError("config must be a JSON object")
        return cls.from_dict(d)

    @classmethod
    def load(cls, path):
        try:
            with open(path) as fh:
                return cls.from_json(fh.read())
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None

    def to_dict(self):
        return dataclasses.asdict(self)

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    def replace(self, **kw):
        d = self.to_dict()
        d.update(kw)
        return ExperimentConfig.from_dict(d)

    def paper_scale(self):
        """Sizes of the reference protocol: 50 resamples of 2000 from 5000, 2000 test curves."""
        return self.replace(n_train=5000, resample_size=2000, n_test=2000, B=50)

    # derived values -------------------------------------------------------
    def resolve_N(self, length=None, sensors=None):
        """Coefficient count: percentages resolve to floor(percent * 2**j * sensors)."""
        length = length or self.length
        sensors = sensors or self.sensors
        j = log2_length(length) if self.j is None else int(self.j)
        total = (1 << j) * sensors
        if isinstance(self.N, str):
            pct = float(self.N.strip()[:-1]) / 100.0
            N = int(math.floor(pct * total + 1e-9))
        else:
            N = int(self.N)
        if not 1 <= N <= total:
            raise ConfigError(f"N={self.N} resolves to {N}, outside [1, {total}]")
        return N

    @property
    def optimal_target(self):
        return self.target_auc if self.target_auc is not None else CASES[self.case]

    def seeds(self):
        """Integer seeds for (spec, train sample, test sample, runs)."""
        ss = np.random.SeedSequence(int(self.seed))
        kids = ss.spawn(4)
        spec_seed = self.spec_seed if self.spec_seed is not None else int(kids[0].generate_state(1)[0])
        return spec_seed, int(kids[1].generate_state(1)[0]), int(kids[2].generate_state(1)[0]), kids[3]


def index_hash(idx):
    return hashlib.sha256(np.asarray(idx, dtype="<i8").tobytes()).hexdigest()[:16]


def _std(values):
    v = np.asarray(values, dtype=float)
    return float(v.std(ddof=1)) if v.size > 1 else 0.0


# data --------------------------------------------------------------------

def _read_rows(path):
    try:
        with open(path, newline="") as fh:
            return [row for row in csv.reader(fh) if row]
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from None


def ingest_csv(path, layout=None):
    """Read labelled curves: one row per observation, label first.

    ``layout`` may give ``{"sensors": S}`` to split each row into ``S``
    equal blocks. Per-sensor lengths that are not powers of two are
    zero-padded at the end; the pad is recorded in ``meta["pad"]``.
    """
    layout = dict(layout or {})
    S = int(layout.get("sensors", 1))
    rows = _read_rows(path)
    if not rows:
        raise FormatError(f"{path} is empty")
    if not _is_number(rows[0][0]):
        rows = rows[1:]  # header line
    width = len(rows[0])
    for i, row in enumerate(rows):
        if len(row) != width:
            raise FormatError(f"row {i} of {path} has {len(row)} fields, expected {width}")
    try:
        arr = np.array([[float(v) for v in row] for row in rows])
    except ValueError as exc:
        raise ParseError(f"non-numeric value in {path}: {exc}") from None
    if arr.shape[1] < 2:
        raise FormatError("rows need a label and at least one sample")
    try:
        labels = as_labels(arr[:, 0])
    except ValueError as exc:
        raise ParseError(str(exc)) from None
    body = arr[:, 1:]
    if body.shape[1] % S:
        raise FormatError(f"{body.shape[1]} samples do not split into {S} sensors")
    per = body.shape[1] // S
    target = 1 << max(1, math.ceil(math.log2(per)))
    pad = target - per
    curves = body.reshape(len(rows), S, per)
    if pad:
        curves = np.concatenate([curves, np.zeros((len(rows), S, pad))], axis=2)
    if S == 1:
        curves = curves[:, 0, :]
    if np.all(labels == 1) or np.all(labels == -1):
        warnings.warn(f"{path} contains a single class", stacklevel=2)
    return LabeledCurveSet(curves, labels, meta={"source": os.path.basename(path), "pad": int(pad),
                                                 "sensors": S, "sensor_length": per})


def _is_number(text):
    try:
        float(text)
        return True
    except ValueError:
        return False


def write_csv(data, path):
    """Write labels and (sensor-concatenated) samples; floats use ``repr``."""
    curves = data.curves.reshape(len(data), -1)
    try:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            for y, row in zip(data.labels.tolist(), curves.tolist()):
                w.writerow([str(y)] + [repr(v) for v in row])
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from None


def _shifted(data, mean):
    return LabeledCurveSet(data.curves - mean, data.labels, data.components, data.oracle_scores,
                           dict(data.meta, centered=True))


def build_case_spec(config):
    spec_seed, _, _, _ = config.seeds()
    return synth.build_spec(config.K, config.optimal_target, spec_seed, family=config.family,
                            length=config.length, j0=config.j0, j=config.j, rate=config.rate,
                            sigma=config.sigma, decay=config.decay)


def load_data(config):
    """``(train, test, spec)``; ``test`` and ``spec`` may be ``None`` for CSV input."""
    if config.source == "csv":
        layout = {"sensors": config.sensors}
        train = ingest_csv(config.train_path, layout)
        test = ingest_csv(config.test_path, layout) if config.test_path else None
        if config.center is None or config.center:
            mean = train.curves.mean(axis=0)
            train = _shifted(train, mean)
            test = None if test is None else _shifted(test, mean)
        return train, test, None
    spec = build_case_spec(config)
    _, s_train, s_test, _ = config.seeds()
    train, test = synth.sample(spec, config.n_train, s_train), synth.sample(spec, config.n_test, s_test)
    if config.center:
        mean = train.curves.mean(axis=0)
        train, test = _shifted(train, mean), _shifted(test, mean)
    return train, test, spec


# learners ----------------------------------------------------------------

def _grow_kw(config):
    return {"depth": config.depth, "family": config.family, "j0": config.j0, "j": config.j,
            "selection": config.selection, "r": config.r, "max_leaves": config.max_leaves,
            "min_node": config.min_node, "min_split": config.min_split, "criterion": config.criterion}


def fit_learner(config, data, seed=0):
    """Grow (and optionally prune) the configured ranking tree on ``data``."""
    N = config.resolve_N(data.length, data.n_sensors)
    grow = grow_functional if config.learner == "functional_treerank" else grow_filtered
    tree = grow(data, N, **_grow_kw(config))
    if config.prune:
        tree = prune(tree, data, folds=config.prune_folds, seed=seed)
    return tree


class OracleScorer:
    """Stand-in learner returning the known optimal scores of synthetic data."""

    def score(self, data):
        if data.oracle_scores is None:
            raise DataError("oracle scores are only known for synthetic data")
        return data.oracle_scores


def oracle_learner(config, data, seed=0):
    return OracleScorer()


# reports -----------------------------------------------------------------

def _envelope(rocs):
    alpha = np.linspace(0.0, 1.0, ENVELOPE_GRID)
    t = np.vstack([c(alpha) for c in rocs])
    return {"fpr": alpha.tolist(), "lower": t.min(0).tolist(), "upper": t.max(0).tolist(),
            "mean": t.mean(0).tolist()}


@dataclass
class EvaluationReport:
    """Per-run test AUCs with summary statistics and ROC data.

    ``runtime`` is measured but kept out of the serialized form so that
    reports of identical runs are byte-identical.
    """

    config: dict
    protocol: str
    runs: list
    failures: list
    mean_auc: float
    std_auc: float
    envelope: dict
    optimal_auc: float = None
    optimal_roc: list = None
    test_oracle_auc: float = None
    runtime: float = 0.0

    @property
    def aucs(self):
        return [r["auc"] for r in self.runs]

    def to_dict(self):
        d = dataclasses.asdict(self)
        d.pop("runtime")
        return d

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True, indent=1)

    @classmethod
    def from_dict(cls, d):
        return cls(**d)


def _summarize(config, protocol, runs, failures, rocs, spec, oracle_auc, t0):
    if not runs:
        raise FTreeRankError(f"every run failed: {failures}")
    aucs = [r["auc"] for r in runs]
    return EvaluationReport(
        config=config.to_dict(),
        protocol=protocol,
        runs=runs,
        failures=failures,
        mean_auc=float(np.mean(aucs)),
        std_auc=_std(aucs),
        envelope=_envelope(rocs),
        optimal_auc=None if spec is None else synth.optimal_auc(spec),
        optimal_roc=None if spec is None else synth.optimal_roc(spec).points,
        test_oracle_auc=oracle_auc,
        runtime=time.perf_counter() - t0,
    )


def _run_one(learner, config, train, test, idx, seed, run_id):
    model = learner(config, train.subset(idx), seed)
    scores = model.score(test)
    roc = roc_curve(scores, test.labels)
    rec = {"run": run_id, "seed": int(seed), "index_hash": index_hash(idx), "n_train": int(len(idx)),
           "auc": empirical_auc(scores, test.labels), "roc": roc.points}
    if hasattr(model, "n_leaves"):
        rec["n_leaves"] = model.n_leaves
    return rec, roc


def _oracle_auc(test):
    if test.oracle_scores is None:
        return None
    return empirical_auc(test.oracle_scores, test.labels)


def bootstrap_indices(config, pool_size):
    """Resample index arrays and per-run seeds, derived from ``config.seed``."""
    _, _, _, runs = config.seeds()
    size = config.resample_size or pool_size
    out = []
    for child in runs.spawn(config.B):
        rng = np.random.default_rng(child)
        out.append((np.sort(rng.integers(0, pool_size, size)), int(child.generate_state(1)[0])))
    return out


def run_bootstrap(config, learner=None, data=None):
    """Fit one model per bootstrap resample of the training pool; score the test set.

    ``learner(config, train, seed)`` must return an object with
    ``score(data)``; the configured ranking tree is used by default.
    Learner errors are recorded in ``failures`` and the run is dropped.
    """
    if config.protocol != "bootstrap":
        raise InvalidProtocol("config does not use the bootstrap protocol")
    t0 = time.perf_counter()
    learner = learner or fit_learner
    train, test, spec = data or load_data(config)
    if test is None:
        raise InvalidProtocol("bootstrap evaluation needs a test set")
    runs, rocs, failures = [], [], []
    for b, (idx, seed) in enumerate(bootstrap_indices(config, len(train))):
        try:
            rec, roc = _run_one(learner, config, train, test, idx, seed, b)
        except ConfigError:
            raise
        except FTreeRankError as exc:
            failures.append({"run": b, "error": f"{type(exc).__name__}: {exc}"})
            continue
        runs.append(rec)
        rocs.append(roc)
    return _summarize(config, "bootstrap", runs, failures, rocs, spec, _oracle_auc(test), t0)


def vfold_indices(config, labels):
    from .treerank import stratified_folds

    y = as_labels(labels)
    V = int(config.V)
    if V < 2:
        raise InvalidProtocol("V-fold needs V >= 2")
    if y.size < 2 * V:
        raise InvalidProtocol(f"n={y.size} is too small for {V} folds")
    if min(np.sum(y == 1), np.sum(y == -1)) < V:
        raise InvalidProtocol("some fold would lack a class")
    _, _, _, runs = config.seeds()
    rng = np.random.default_rng(runs)
    fold = stratified_folds(y, V, rng)
    seeds = [int(c.generate_state(1)[0]) for c in runs.spawn(V)]
    return [(np.flatnonzero(fold != f), np.flatnonzero(fold == f), seeds[f]) for f in range(V)]


def run_vfold(config, learner=None, data=None):
    """Stratified V-fold evaluation on the training pool."""
    if config.protocol != "v_fold":
        raise InvalidProtocol("config does not use the v_fold protocol")
    t0 = time.perf_counter()
    learner = learner or fit_learner
    pool, _, spec = data or load_data(config)
    runs, rocs, failures = [], [], []
    for f, (tr_idx, te_idx, seed) in enumerate(vfold_indices(config, pool.labels)):
        try:
            rec, roc = _run_one(learner, config, pool, pool.subset(te_idx), tr_idx, seed, f)
        except ConfigError:
            raise
        except FTreeRankError as exc:
            failures.append({"run": f, "error": f"{type(exc).__name__}: {exc}"})
            continue
        runs.append(rec)
        rocs.append(roc)
    return _summarize(config, "v_fold", runs, failures, rocs, spec, _oracle_auc(pool), t0)


def run_holdout(config, learner=None, data=None):
    """Single stratified split of the training pool (``holdout`` fraction for testing)."""
    if config.protocol != "holdout":
        raise InvalidProtocol("config does not use the holdout protocol")
    from .treerank import stratified_folds

    t0 = time.perf_counter()
    learner = learner or fit_learner
    pool, _, spec = data or load_data(config)
    _, _, _, runs = config.seeds()
    n_parts = max(2, int(round(1.0 / config.holdout)))
    fold = stratified_folds(pool.labels, n_parts, np.random.default_rng(runs))
    tr_idx, te_idx = np.flatnonzero(fold != 0), np.flatnonzero(fold == 0)
    test = pool.subset(te_idx)
    if np.all(test.labels == 1) or np.all(test.labels == -1):
        raise InvalidProtocol("holdout part lacks a class")
    seed = int(runs.spawn(1)[0].generate_state(1)[0])
    rec, roc = _run_one(learner, config, pool, test, tr_idx, seed, 0)
    return _summarize(config, "holdout", [rec], [], [roc], spec, _oracle_auc(test), t0)


def evaluate(config, learner=None, data=None):
    run = {"bootstrap": run_bootstrap, "v_fold": run_vfold, "holdout": run_holdout}[config.protocol]
    return run(config, learner, data)


@dataclass
class ComparisonReport:
    """Paired evaluation of two learners on identical resamples."""

    first: EvaluationReport
    second: EvaluationReport
    deltas: list
    mean_delta: float

    def to_dict(self):
        return {"first": self.first.to_dict(), "second": self.second.to_dict(), "deltas": self.deltas,
                "mean_delta": self.mean_delta}

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True, indent=1)


def compare_local_vs_global(first, second=None, learners=None):
    """Run two configs that differ only in ``learner`` on shared data and resamples.

    With ``second=None`` the pair is (functional, filtered) built from
    ``first``. Paired deltas are ``first - second`` per run; the index
    hashes of both reports are checked to be identical.
    """
    if second is None:
        first = first.replace(learner="functional_treerank")
        second = first.replace(learner="filtered_treerank")
    a, b = first.to_dict(), second.to_dict()
    a.pop("learner")
    b.pop("learner")
    if a != b:
        diff = sorted(k for k in a if a[k] != b[k])
        raise ConfigMismatch(f"configs differ beyond the learner: {diff}")
    data = load_data(first)
    la, lb = learners or (None, None)
    ra = evaluate(first, la, data)
    rb = evaluate(second, lb, data)
    ha = {r["run"]: r["index_hash"] for r in ra.runs}
    hb = {r["run"]: r["index_hash"] for r in rb.runs}
    common = sorted(set(ha) & set(hb))
    if any(ha[i] != hb[i] for i in common):
        raise ConfigMismatch("paired runs did not share their resamples")
    auc_a = {r["run"]: r["auc"] for r in ra.runs}
    auc_b = {r["run"]: r["auc"] for r in rb.runs}
    deltas = [{"run": i, "delta": auc_a[i] - auc_b[i]} for i in common]
    mean_delta = float(np.mean([d["delta"] for d in deltas])) if deltas else float("nan")
    return ComparisonReport(ra, rb, deltas, mean_delta)


def export_dataset(data, spec, path_prefix, seeds=None):
    """Write ``<prefix>.csv`` plus a JSON sidecar with spec, seeds and hidden components."""
    write_csv(data, path_prefix + ".csv")
    side = {
        "spec": None if spec is None else spec.to_dict(),
        "seeds": seeds or {},
        "components": None if data.components is None else data.components.tolist(),
        "oracle_scores": None if data.oracle_scores is None else data.oracle_scores.tolist(),
        "meta": data.meta,
    }
    try:
        with open(path_prefix + ".json", "w") as fh:
            json.dump(side, fh, sort_keys=True, indent=1)
    except OSError as exc:
        raise IoError(f"cannot write {path_prefix}.json: {exc}") from None


def import_dataset(path_prefix, layout=None):
    """Inverse of :func:`export_dataset`; restores hidden components if present."""
    data = ingest_csv(path_prefix + ".csv", layout)
    side_path = path_prefix + ".json"
    if os.path.exists(side_path):
        with open(side_path) as fh:
            side = json.load(fh)
        if side.get("components") is not None:
            data.components = np.asarray(side["components"], dtype=int)
        if side.get("oracle_scores") is not None:
            data.oracle_scores = np.asarray(side["oracle_scores"], dtype=float)
    return data
