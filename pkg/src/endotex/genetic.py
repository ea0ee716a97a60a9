"""Genetic searches: decision thresholds and feature subsets.

Threshold search evolves one threshold per class over a small value alphabet
(tenths of a unit by default).  Crossover adds parent vectors element-wise
modulo 1 — e.g. 0.6 and 0.7 cross to 0.3 — and children are snapped back onto
the alphabet; mutation resamples genes from the alphabet.  Survivor selection
is elitist, so the best-ever vector is never lost.  Fitness is the weighted F1
of the thresholded decisions.

Feature-subset search evolves boolean masks with fitness-proportional parent
selection, single-point crossover, and bit flips; fitness is the weighted F1
of a model trained on the masked columns and scored on an internal validation
split.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .core import derive_seed
from .errors import (
    EmptyInput,
    InvalidParameters,
    IoFailure,
    LengthMismatch,
    SchemaMismatch,
    TooFewFeatures,
    UnreadableFile,
)
from .evaluation import weighted_f1

DEFAULT_ALPHABET = tuple(round(0.1 * i, 1) for i in range(10))  # 0.0 .. 0.9


def apply_thresholds(probs: np.ndarray, thresholds: np.ndarray) -> np.ndarray:
    """Decide a class per row from per-class scores and thresholds.

    Classes whose score clears their threshold are candidates; the winner is
    the candidate with the largest margin (score - threshold).  With no
    candidate the plain argmax decides.  Ties break to the lowest class index.
    """
    probs = np.asarray(probs, dtype=np.float64)
    thresholds = np.asarray(thresholds, dtype=np.float64)
    if probs.ndim != 2 or probs.shape[0] == 0:
        raise EmptyInput(f"score matrix shape {probs.shape}")
    if thresholds.shape != (probs.shape[1],):
        raise LengthMismatch(
            f"{thresholds.shape} thresholds vs {probs.shape[1]} classes"
        )
    margins = probs - thresholds
    eligible = probs >= thresholds
    masked = np.where(eligible, margins, -np.inf)
    out = np.argmax(masked, axis=1)
    none = ~eligible.any(axis=1)
    if none.any():
        out[none] = np.argmax(probs[none], axis=1)
    return out


def crossover_mod1(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Element-wise (a + b) mod 1; closed over [0, 1)."""
    return np.mod(np.asarray(a, dtype=np.float64) + np.asarray(b, dtype=np.float64), 1.0)


def snap_to_alphabet(values: np.ndarray, alphabet: np.ndarray) -> np.ndarray:
    """Each value replaced by its nearest alphabet element (ties -> lower)."""
    values = np.atleast_1d(np.asarray(values, dtype=np.float64))
    alphabet = np.asarray(alphabet, dtype=np.float64)
    dist = np.abs(values[:, None] - alphabet[None, :])
    return alphabet[np.argmin(dist, axis=1)]


@dataclass
class ThresholdSearchParams:
    population: int = 10
    iterations: int = 20
    mutation_rate: float = 0.2
    alphabet: tuple[float, ...] = DEFAULT_ALPHABET


@dataclass
class ThresholdResult:
    thresholds: np.ndarray
    fitness: float
    history: list[float] = field(default_factory=list)


def optimize_thresholds(
    probs: np.ndarray,
    labels: np.ndarray,
    params: ThresholdSearchParams | None = None,
    seed: int = 0,
) -> ThresholdResult:
    """Evolve per-class thresholds maximising weighted F1 on (probs, labels)."""
    params = params or ThresholdSearchParams()
    probs = np.asarray(probs, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    if probs.ndim != 2 or probs.size == 0:
        raise EmptyInput(f"score matrix shape {probs.shape}")
    if labels.shape != (probs.shape[0],):
        raise LengthMismatch(f"{labels.shape} labels vs {probs.shape[0]} rows")
    if params.population < 2 or params.iterations < 0:
        raise InvalidParameters("population must be >= 2 and iterations >= 0")
    if not 0.0 <= params.mutation_rate <= 1.0:
        raise InvalidParameters(f"mutation rate {params.mutation_rate} outside [0, 1]")
    alphabet = np.asarray(sorted(params.alphabet), dtype=np.float64)
    if alphabet.size < 2 or alphabet.min() < 0 or alphabet.max() >= 1.0:
        raise InvalidParameters("alphabet must hold >= 2 values inside [0, 1)")
    k = probs.shape[1]
    n_classes = int(max(labels.max() + 1, k))

    def fitness(vec: np.ndarray) -> float:
        return weighted_f1(labels, apply_thresholds(probs, vec), n_classes)

    rng = np.random.default_rng(seed)
    pop = rng.choice(alphabet, size=(params.population, k))
    # seed the lowest-threshold vector: with 0.0 in the alphabet it reproduces
    # plain argmax, so the search result can never fall below that baseline
    pop[0] = alphabet[0]
    scores = np.array([fitness(v) for v in pop])
    best_i = int(np.argmax(scores))
    best_vec = pop[best_i].copy()
    best_fit = float(scores[best_i])
    history = [best_fit]

    for _ in range(params.iterations):
        # fitness-proportional parent choice (uniform when all scores are 0)
        total = scores.sum()
        p = scores / total if total > 0 else np.full(scores.size, 1.0 / scores.size)
        children = [best_vec.copy()]  # elitism
        while len(children) < params.population:
            pa, pb = rng.choice(params.population, size=2, p=p)
            child = snap_to_alphabet(crossover_mod1(pop[pa], pop[pb]), alphabet)
            flip = rng.random(k) < params.mutation_rate
            if flip.any():
                child = child.copy()
                child[flip] = rng.choice(alphabet, size=int(flip.sum()))
            children.append(child)
        pop = np.vstack(children)
        scores = np.array([fitness(v) for v in pop])
        gen_best = int(np.argmax(scores))
        if scores[gen_best] > best_fit:
            best_fit = float(scores[gen_best])
            best_vec = pop[gen_best].copy()
        history.append(best_fit)

    return ThresholdResult(thresholds=best_vec, fitness=best_fit, history=history)


def save_thresholds(
    thresholds: np.ndarray, class_names: list[str], path: str | Path
) -> None:
    """Persist as a class-name -> threshold JSON map."""
    if len(class_names) != len(thresholds):
        raise LengthMismatch(
            f"{len(class_names)} names vs {len(thresholds)} thresholds"
        )
    doc = {name: float(t) for name, t in zip(class_names, thresholds)}
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def load_thresholds(path: str | Path, class_names: list[str]) -> np.ndarray:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except OSError as exc:
        raise UnreadableFile(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise SchemaMismatch(f"{path}: invalid JSON: {exc}") from exc
    missing = [n for n in class_names if n not in doc]
    if missing:
        raise SchemaMismatch(f"{path}: missing thresholds for {missing}")
    return np.array([float(doc[n]) for n in class_names])


# --- feature-subset search ------------------------------------------------------


@dataclass
class SubsetSearchParams:
    population: int = 20
    generations: int = 30
    mutation_rate: float = 0.02
    validation_fraction: float = 0.3


@dataclass
class SubsetResult:
    mask: np.ndarray
    fitness: float
    history: list[float] = field(default_factory=list)


def _repair_mask(mask: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    if not mask.any():
        mask = mask.copy()
        mask[int(rng.integers(0, mask.size))] = True
    return mask


def select_features(
    X,
    y,
    trainer,
    params: SubsetSearchParams | None = None,
    seed: int = 0,
) -> SubsetResult:
    """Evolve a boolean column mask maximising validation weighted F1.

    ``trainer`` is a callable (X, y, seed) -> model with ``predict``.  The
    validation split is stratified off the input once, so every mask is scored
    on the same rows.
    """
    params = params or SubsetSearchParams()
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    d = X.shape[1] if X.ndim == 2 else 0
    if d < 2:
        raise TooFewFeatures(f"need >= 2 candidate features, got {d}")
    if params.population < 2 or params.generations < 0:
        raise InvalidParameters("population must be >= 2 and generations >= 0")
    rng = np.random.default_rng(seed)

    # one stratified validation split reused across all evaluations
    val_rows = []
    for c in np.unique(y):
        rows = np.nonzero(y == c)[0]
        take = max(1, int(round(params.validation_fraction * rows.size)))
        take = min(take, rows.size - 1) if rows.size > 1 else rows.size
        srng = np.random.default_rng(derive_seed(seed, "val", int(c)))
        val_rows.append(srng.choice(rows, size=take, replace=False))
    val_idx = np.sort(np.concatenate(val_rows))
    train_mask = np.ones(X.shape[0], dtype=bool)
    train_mask[val_idx] = False
    n_classes = int(y.max()) + 1

    cache: dict[bytes, float] = {}
    trainer_seed = derive_seed(seed, "trainer")  # same seed for every mask

    def fitness(mask: np.ndarray) -> float:
        key = np.packbits(mask).tobytes()
        if key not in cache:
            model = trainer(X[train_mask][:, mask], y[train_mask], trainer_seed)
            pred = model.predict(X[val_idx][:, mask])
            cache[key] = weighted_f1(y[val_idx], pred, n_classes)
        return cache[key]

    pop = [
        _repair_mask(rng.random(d) < 0.5, rng) for _ in range(params.population)
    ]
    scores = np.array([fitness(m) for m in pop])
    best_i = int(np.argmax(scores))
    best_mask = pop[best_i].copy()
    best_fit = float(scores[best_i])
    history = [best_fit]

    for _ in range(params.generations):
        total = scores.sum()
        p = scores / total if total > 0 else np.full(scores.size, 1.0 / scores.size)
        children = [best_mask.copy()]
        while len(children) < params.population:
            pa, pb = rng.choice(params.population, size=2, p=p)
            point = int(rng.integers(1, d))
            child = np.concatenate([pop[pa][:point], pop[pb][point:]])
            flip = rng.random(d) < params.mutation_rate
            child = np.logical_xor(child, flip)
            children.append(_repair_mask(child, rng))
        pop = children
        scores = np.array([fitness(m) for m in pop])
        gen_best = int(np.argmax(scores))
        if scores[gen_best] > best_fit:
            best_fit = float(scores[gen_best])
            best_mask = pop[gen_best].copy()
        history.append(best_fit)

    return SubsetResult(mask=best_mask, fitness=best_fit, history=history)
