"""Distortion metric, dataset loading, benchmark rows and result files.

RMSE between two images is the L2 norm of their difference divided by
sqrt(H*W*C); success rates are fractions of samples whose final RMSE is at
or below a threshold within the budget.
"""

import csv
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import DimensionError, ParameterError
from .taf import read_taf1

DEFAULT_THRESHOLDS = (0.1, 0.05, 0.01)
CHECKPOINT_STRIDE = 50

TERM_BUDGET = "budget"
TERM_EARLY_STOP = "early_stop"
TERM_INIT_FAILURE = "init_failure"


def rmse(x: np.ndarray, xadv: np.ndarray) -> float:
    """Root mean squared pixel error between two same-shape images."""
    x = np.asarray(x, dtype=np.float64)
    xadv = np.asarray(xadv, dtype=np.float64)
    if x.shape != xadv.shape:
        raise DimensionError(f"shape mismatch: {x.shape} vs {xadv.shape}")
    return kernels.l2dist(x, xadv) / math.sqrt(x.size)


@dataclass
class BenchRow:
    """Per-sample benchmark record."""

    sample_id: str
    termination: str
    queries_used: int
    final_rmse: float
    success: dict = field(default_factory=dict)  # threshold -> bool
    rmse_at_query: dict = field(default_factory=dict)  # checkpoint -> best rmse so far


def row_from_result(sample_id, result, max_queries: int, thresholds=DEFAULT_THRESHOLDS) -> BenchRow:
    """Reduce an AttackResult to a BenchRow with best-so-far checkpoints
    every CHECKPOINT_STRIDE queries."""
    checkpoints = {}
    best = math.inf
    records = iter(result.trace)
    record = next(records, None)
    for q in range(CHECKPOINT_STRIDE, max_queries + 1, CHECKPOINT_STRIDE):
        while record is not None and record.query_index <= q:
            best = record.best_rmse
            record = next(records, None)
        checkpoints[q] = best
    success = {
        thr: bool(result.final_rmse <= thr and result.termination != TERM_INIT_FAILURE)
        for thr in thresholds
    }
    return BenchRow(
        sample_id=str(sample_id),
        termination=result.termination,
        queries_used=result.queries_used,
        final_rmse=float(result.final_rmse),
        success=success,
        rmse_at_query=checkpoints,
    )


def asr(rows, threshold: float) -> float:
    """Attack success rate: fraction of rows at or below the threshold.
    Initialization failures count against the denominator."""
    rows = list(rows)
    if not rows:
        raise ParameterError("asr needs at least one row")
    hits = sum(
        1
        for r in rows
        if r.termination != TERM_INIT_FAILURE and r.final_rmse <= threshold
    )
    return hits / len(rows)


def queries_to_success(rows, threshold: float, target_asr: float):
    """Smallest checkpoint at which the fraction of rows already at or below
    the threshold reaches target_asr; None if never."""
    rows = list(rows)
    if not rows:
        raise ParameterError("queries_to_success needs at least one row")
    checkpoints = sorted(rows[0].rmse_at_query)
    for q in checkpoints:
        frac = sum(1 for r in rows if r.rmse_at_query.get(q, math.inf) <= threshold) / len(rows)
        if frac >= target_asr:
            return q
    return None


def _fmt(x: float) -> str:
    return repr(float(x))


def write_results(rows, out_dir, thresholds=DEFAULT_THRESHOLDS, config=None):
    """Persist rows as results.csv plus summary.json (ASR per threshold and
    a config echo). Returns (csv_path, json_path)."""
    rows = list(rows)
    os.makedirs(out_dir, exist_ok=True)
    checkpoints = sorted(rows[0].rmse_at_query) if rows else []
    header = (
        ["sample_id", "termination", "queries_used", "final_rmse"]
        + [f"success_{thr:g}" for thr in thresholds]
        + [f"rmse_q{q}" for q in checkpoints]
    )
    csv_path = os.path.join(out_dir, "results.csv")
    try:
        with open(csv_path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            for row in rows:
                writer.writerow(
                    [row.sample_id, row.termination, row.queries_used, _fmt(row.final_rmse)]
                    + [int(row.success[thr]) for thr in thresholds]
                    + [_fmt(row.rmse_at_query[q]) for q in checkpoints]
                )
    except OSError as exc:
        raise OSError(f"cannot write results CSV at {csv_path}: {exc}") from exc
    summary = {
        "sample_count": len(rows),
        "asr": {f"{thr:g}": (asr(rows, thr) if rows else None) for thr in thresholds},
        "config": config,
    }
    json_path = os.path.join(out_dir, "summary.json")
    try:
        with open(json_path, "w") as fh:
            json.dump(summary, fh, indent=2, sort_keys=True)
            fh.write("\n")
    except OSError as exc:
        raise OSError(f"cannot write summary JSON at {json_path}: {exc}") from exc
    return csv_path, json_path


def read_results(csv_path):
    """Inverse of the CSV half of write_results."""
    rows = []
    with open(csv_path, newline="") as fh:
        reader = csv.DictReader(fh)
        for rec in reader:
            success = {}
            checkpoints = {}
            for key, value in rec.items():
                if key.startswith("success_"):
                    success[float(key[len("success_"):])] = value == "1"
                elif key.startswith("rmse_q"):
                    checkpoints[int(key[len("rmse_q"):])] = float(value)
            rows.append(
                BenchRow(
                    sample_id=rec["sample_id"],
                    termination=rec["termination"],
                    queries_used=int(rec["queries_used"]),
                    final_rmse=float(rec["final_rmse"]),
                    success=success,
                    rmse_at_query=checkpoints,
                )
            )
    return rows


def load_image(path) -> np.ndarray:
    """Load a PNG or taf1 file as a float64 H x W x C image in [0, 1]."""
    path = str(path)
    if path.endswith(".taf1"):
        image = read_taf1(path)
    else:
        from PIL import Image

        with Image.open(path) as pil:
            if pil.mode not in ("L", "RGB"):
                pil = pil.convert("RGB")
            arr = np.asarray(pil, dtype=np.float64) / 255.0
        image = arr[:, :, None] if arr.ndim == 2 else arr
    if image.ndim != 3:
        raise DimensionError(f"{path}: expected H x W x C image, got shape {image.shape}")
    if np.min(image) < 0.0 or np.max(image) > 1.0:
        raise ParameterError(f"{path}: pixel values outside [0, 1]")
    return image


def save_png(path, image: np.ndarray) -> None:
    """Write an image as 8-bit PNG (grayscale for C=1, RGB for C=3)."""
    from PIL import Image

    u8 = np.round(np.clip(image, 0.0, 1.0) * 255.0).astype(np.uint8)
    if u8.shape[2] == 1:
        Image.fromarray(u8[:, :, 0], mode="L").save(path, format="PNG")
    elif u8.shape[2] == 3:
        Image.fromarray(u8, mode="RGB").save(path, format="PNG")
    else:
        raise ParameterError(f"PNG supports 1 or 3 channels, got {u8.shape[2]}")


def load_dataset(root, labels_csv):
    """Read a labels.csv ("filename,label") and return [(sample_id, image,
    label)] with images loaded from the dataset root."""
    samples = []
    with open(labels_csv, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != ["filename", "label"]:
            raise ParameterError(
                f'{labels_csv}: expected header "filename,label", got {reader.fieldnames}'
            )
        for rec in reader:
            label = int(rec["label"])
            if label < 0:
                raise ParameterError(f'{labels_csv}: negative label for {rec["filename"]}')
            path = os.path.join(root, rec["filename"])
            samples.append((rec["filename"], load_image(path), label))
    return samples


def run_bench(samples, oracle_factory, cfg, seed=0, workers=1, thresholds=DEFAULT_THRESHOLDS):
    """Attack every (sample_id, image, label) sample and return BenchRows in
    dataset order. Each sample gets its own oracle connection and an RNG
    seeded by (seed, index), so results do not depend on worker scheduling."""
    from .attack import run

    def one(index_sample):
        index, (sample_id, image, label) = index_sample
        rng = np.random.default_rng([seed, index])
        result = run(image, label, oracle_factory(), cfg, rng)
        return row_from_result(sample_id, result, cfg.max_queries, thresholds)

    tasks = list(enumerate(samples))
    if workers <= 1:
        return [one(t) for t in tasks]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(one, tasks))
