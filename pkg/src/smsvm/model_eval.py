"""Models, prediction, nested cross-validation and model files."""

from __future__ import annotations

import csv
import io
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

from .baselines import SgdConfig, sgd_train
from .dataset import Dataset, Standardizer, augment_bias, standardize_apply, standardize_fit
from .objective import Hyperparams
from .rng import Xoshiro256, derive_seed
from .solver import solve

SCHEMA_VERSION = 1
DEFAULT_LAMBDA_GRID = (1e-4, 1e-3, 1e-2, 1e-1, 1.0)
DEFAULT_MU_GRID = (0.0, 1e-4, 1e-3, 1e-2, 1e-1)
VALIDATION_ALPHA_MIN = 1e-5


class ModelFormatError(ValueError):
    pass


@dataclass
class Model:
    w: np.ndarray
    standardizer: Standardizer
    bias_augmented: bool
    hyperparams: Hyperparams
    solver_tag: str = "smsvm"

    def __post_init__(self):
        self.w = np.asarray(self.w, dtype=np.float64)
        expected = self.standardizer.m + (1 if self.bias_augmented else 0)
        if self.w.shape != (expected,):
            raise ValueError(f"w has {self.w.size} entries, expected {expected}")

    @property
    def n_raw_features(self) -> int:
        return self.standardizer.m

    def decision_function(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if X.shape[1] != self.n_raw_features:
            raise ValueError(f"expected {self.n_raw_features} features, got {X.shape[1]}")
        Z = self.standardizer.transform(X)
        if self.bias_augmented:
            return Z @ self.w[:-1] + self.w[-1]
        return Z @ self.w

    def predict_many(self, X: np.ndarray) -> np.ndarray:
        return np.where(self.decision_function(X) >= 0, 1.0, -1.0)


def predict(model: Model, x) -> int:
    """Label for one raw feature vector; a zero score maps to +1."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError("x must be a single feature vector")
    return int(model.predict_many(x[None, :])[0])


def accuracy(model: Model, d: Dataset) -> float:
    return float(np.mean(model.predict_many(d.X) == d.y))


def format_accuracy(acc: float) -> str:
    """Percentage with two decimals, as in result tables (``0.8667 -> '86.67'``)."""
    return f"{100.0 * acc:.2f}"


# -- training ---------------------------------------------------------------


def fit_model(d: Dataset, h: Hyperparams, bias: bool = True, sgd: Optional[SgdConfig] = None,
              w0=None, trace=None) -> Model:
    """Standardize ``d`` on itself, optionally append the bias column, and train."""
    st = standardize_fit(d)
    train = standardize_apply(st, d)
    if bias:
        train = augment_bias(train)
    if sgd is None:
        w = solve(train, h, w0=w0, trace=trace).w
        tag = "smsvm"
    else:
        w = sgd_train(train, h, sgd, w0=w0)
        tag = f"sgd-{sgd.optimizer}"
    return Model(w=w, standardizer=st, bias_augmented=bias, hyperparams=h, solver_tag=tag)


@dataclass(frozen=True)
class Trainer:
    """Picklable training callable for :func:`nested_cv`.

    ``validation`` selects the smoothing floor: inner-loop runs stop at
    ``validation_alpha_min`` while the refit on the outer training set uses
    ``base.alpha_min``.
    """

    base: Hyperparams = Hyperparams()
    sgd: Optional[SgdConfig] = None
    bias: bool = True
    validation_alpha_min: Optional[float] = VALIDATION_ALPHA_MIN

    def __call__(self, d: Dataset, lam: float, mu: float, validation: bool = False) -> Model:
        h = replace(self.base, lam=lam, mu=mu)
        if validation and self.validation_alpha_min is not None:
            alpha_min = max(self.validation_alpha_min, h.alpha_min)
            h = replace(h, alpha_min=min(alpha_min, h.alpha0))
        return fit_model(d, h, bias=self.bias, sgd=self.sgd)


# -- folds ------------------------------------------------------------------


def fold_assignment(y: np.ndarray, k: int, seed: int, stratify: bool = True) -> np.ndarray:
    """Fold index (0..k-1) per row; a pure function of the labels, ``k`` and ``seed``.

    Rows are shuffled by the seed and cut into ``k`` contiguous, nearly equal
    chunks, separately per class when stratifying.
    """
    y = np.asarray(y)
    n = y.size
    if k < 2:
        raise ValueError("need at least 2 folds")
    if n < k:
        raise ValueError(f"cannot split {n} rows into {k} nonempty folds")
    perm = Xoshiro256(seed & (2**64 - 1)).permutation(n)
    folds = np.empty(n, dtype=np.int64)
    groups = [perm[y[perm] == c] for c in (1.0, -1.0)] if stratify else [perm]
    # chunks of the second class are laid out in reverse so that small folds
    # from one class are topped up by the other
    for gi, rows in enumerate(groups):
        for f, chunk in enumerate(np.array_split(rows, k)):
            folds[chunk] = f if gi % 2 == 0 else k - 1 - f
    if np.unique(folds).size != k:
        raise ValueError("a fold ended up empty")
    return folds


# -- nested cross-validation -------------------------------------------------


@dataclass
class FoldResult:
    fold: int
    lambda_star: float
    mu_star: float
    val_acc: float
    test_acc: float
    seconds: float
    val_grid: np.ndarray  # mean validation accuracy, shape (len(lambda_grid), len(mu_grid))
    nnz: int = 0


@dataclass
class CVReport:
    outer_k: int
    inner_l: int
    lambda_grid: tuple
    mu_grid: tuple
    folds: list[FoldResult] = field(default_factory=list)
    label: str = ""

    @property
    def mean_test_accuracy(self) -> float:
        return float(np.mean([f.test_acc for f in self.folds]))

    @property
    def total_seconds(self) -> float:
        return float(sum(f.seconds for f in self.folds))

    def to_csv(self, timings: bool = True) -> str:
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(["fold", "lambda_star", "mu_star", "val_acc", "test_acc", "seconds"])
        for f in self.folds:
            wr.writerow([f.fold, repr(f.lambda_star), repr(f.mu_star), repr(f.val_acc),
                         repr(f.test_acc), f"{f.seconds:.6f}" if timings else ""])
        return buf.getvalue()

    def table(self) -> str:
        lines = [f"{'fold':>4}  {'lambda*':>9}  {'mu*':>9}  {'val acc':>8}  {'test acc':>8}  {'time (s)':>9}"]
        for f in self.folds:
            lines.append(f"{f.fold:>4}  {f.lambda_star:>9.3g}  {f.mu_star:>9.3g}  "
                         f"{format_accuracy(f.val_acc):>8}  {format_accuracy(f.test_acc):>8}  {f.seconds:>9.4f}")
        lines.append(self.summary_line())
        return "\n".join(lines)

    def summary_line(self) -> str:
        name = self.label or "model"
        return f"{name}: mean test accuracy {format_accuracy(self.mean_test_accuracy)}"


def select_hyperparams(grid_acc: np.ndarray, lambda_grid: Sequence[float], mu_grid: Sequence[float]):
    """Best mean validation accuracy; ties go to larger mu, then larger lambda."""
    best = None
    for i, lam in enumerate(lambda_grid):
        for j, mu in enumerate(mu_grid):
            key = (grid_acc[i, j], mu, lam)
            if best is None or key > best[0]:
                best = (key, i, j)
    _, i, j = best
    return lambda_grid[i], mu_grid[j], float(grid_acc[i, j])


def _outer_fold(d: Dataset, train_idx, test_idx, lambda_grid, mu_grid, l: int, trainer,
                inner_seed: int, stratify: bool, fold: int) -> FoldResult:
    t0 = time.perf_counter()
    d_train = d.subset(train_idx)
    d_test = d.subset(test_idx)
    inner = fold_assignment(d_train.y, l, inner_seed, stratify)
    acc = np.zeros((len(lambda_grid), len(mu_grid)))
    for j in range(l):
        d_inner = d_train.subset(np.flatnonzero(inner != j))
        d_val = d_train.subset(np.flatnonzero(inner == j))
        for a, lam in enumerate(lambda_grid):
            for b, mu in enumerate(mu_grid):
                model = trainer(d_inner, lam, mu, validation=True)
                acc[a, b] += accuracy(model, d_val)
    acc /= l
    lam_star, mu_star, val_acc = select_hyperparams(acc, lambda_grid, mu_grid)
    model = trainer(d_train, lam_star, mu_star, validation=False)
    test_acc = accuracy(model, d_test)
    return FoldResult(fold=fold, lambda_star=lam_star, mu_star=mu_star, val_acc=val_acc,
                      test_acc=test_acc, seconds=time.perf_counter() - t0, val_grid=acc,
                      nnz=int(np.count_nonzero(model.w)))


def nested_cv(d: Dataset, lambda_grid: Sequence[float] = DEFAULT_LAMBDA_GRID,
              mu_grid: Sequence[float] = DEFAULT_MU_GRID, k: int = 10, l: int = 6,
              trainer=None, seed: int = 0, stratify: bool = True, jobs: int = 1,
              label: str = "") -> CVReport:
    """Nested cross-validation: ``k`` outer folds for scoring, ``l`` inner folds for tuning.

    Each training call standardizes on its own training rows, so validation
    and test rows are always scaled with training statistics. Outer folds may
    run in ``jobs`` worker processes; results are merged in fold order.
    """
    if k < 2 or l < 2:
        raise ValueError("k and l must both be >= 2")
    if not len(lambda_grid) or not len(mu_grid):
        raise ValueError("hyperparameter grids must be nonempty")
    trainer = trainer or Trainer()
    lambda_grid = tuple(float(v) for v in lambda_grid)
    mu_grid = tuple(float(v) for v in mu_grid)
    outer = fold_assignment(d.y, k, seed, stratify)
    tasks = []
    for i in range(k):
        tasks.append((d, np.flatnonzero(outer != i), np.flatnonzero(outer == i), lambda_grid,
                      mu_grid, l, trainer, derive_seed(seed, i + 1), stratify, i))
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            results = list(ex.map(_outer_fold, *zip(*tasks)))
    else:
        results = [_outer_fold(*t) for t in tasks]
    return CVReport(outer_k=k, inner_l=l, lambda_grid=lambda_grid, mu_grid=mu_grid,
                    folds=results, label=label)


# -- persistence ------------------------------------------------------------


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def model_to_dict(model: Model) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "solver_tag": model.solver_tag,
        "hyperparams": {k: v if isinstance(v, bool) else _fmt(v)
                        for k, v in model.hyperparams.to_dict().items()},
        "bias_augmented": model.bias_augmented,
        "means": [_fmt(v) for v in model.standardizer.means],
        "stds": [_fmt(v) for v in model.standardizer.stds],
        "w": [_fmt(v) for v in model.w],
    }


def save_model(model: Model, path: Union[str, Path]) -> None:
    text = json.dumps(model_to_dict(model), indent=1)
    Path(path).write_text(text + "\n", encoding="utf-8")


def load_model(path: Union[str, Path]) -> Model:
    raw = Path(path).read_bytes()
    try:
        doc = json.loads(raw.decode("utf-8"))
    except UnicodeDecodeError as exc:
        raise ModelFormatError(f"{path}: not UTF-8 (byte offset {exc.start})") from None
    except json.JSONDecodeError as exc:
        offset = len(exc.doc[:exc.pos].encode("utf-8"))
        raise ModelFormatError(f"{path}: parse error at byte offset {offset}: {exc.msg}") from None
    if not isinstance(doc, dict):
        raise ModelFormatError(f"{path}: top level must be an object")
    version = doc.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ModelFormatError(
            f"{path}: unsupported schema_version {version!r} (expected {SCHEMA_VERSION})")
    try:
        hp = Hyperparams(**{k: v if isinstance(v, bool) else float(v)
                            for k, v in doc["hyperparams"].items()})
        st = Standardizer(np.array([float(v) for v in doc["means"]]),
                          np.array([float(v) for v in doc["stds"]]))
        return Model(w=np.array([float(v) for v in doc["w"]]), standardizer=st,
                     bias_augmented=bool(doc["bias_augmented"]), hyperparams=hp,
                     solver_tag=str(doc["solver_tag"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFormatError(f"{path}: invalid model document: {exc}") from None
