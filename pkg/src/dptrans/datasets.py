"""Dataset I/O and the synthetic count generator.

File format: a single header line ``trials=J`` followed by one success
count per line.  Row order is preserved end to end because the sequential
importance sampler's weights depend on it.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .errors import DatasetError
from .model import ModelSpec
from .priors import polya_urn_sample

TOY_COUNTS = (1, 1, 0)
TOY_TRIALS = 1


def load_dataset(path) -> tuple[np.ndarray, int]:
    """Parse (counts, trials) from a dataset file."""
    path = Path(path)
    if not path.exists():
        raise DatasetError(f"dataset file not found: {path}")
    lines = [ln.strip() for ln in path.read_text().splitlines()]
    lines = [ln for ln in lines if ln and not ln.startswith("#")]
    if not lines:
        raise DatasetError(f"dataset file is empty: {path}")
    header = lines[0]
    if not header.startswith("trials="):
        raise DatasetError("first line must declare the trial count, e.g. trials=9")
    try:
        trials = int(header.split("=", 1)[1])
    except ValueError:
        raise DatasetError(f"malformed trials header: {header!r}") from None
    if trials < 1:
        raise DatasetError("trials must be >= 1")
    counts = []
    for lineno, ln in enumerate(lines[1:], start=2):
        try:
            value = int(ln)
        except ValueError:
            raise DatasetError(f"malformed count on line {lineno}: {ln!r}") from None
        if not 0 <= value <= trials:
            raise DatasetError(
                f"count {value} on line {lineno} outside [0, {trials}]")
        counts.append(value)
    if not counts:
        raise DatasetError(f"dataset has a header but no rows: {path}")
    return np.asarray(counts, dtype=np.int64), trials


def write_dataset(path, counts, trials: int) -> None:
    path = Path(path)
    rows = "\n".join(str(int(c)) for c in counts)
    path.write_text(f"trials={trials}\n{rows}\n")


def synthetic_counts(n: int, model: ModelSpec,
                     rng: np.random.Generator) -> np.ndarray:
    """Counts simulated from the mixture itself: urn partition, conjugate
    atoms, binomial draws.  Stands in for external data so every experiment
    can run self-contained."""
    s = polya_urn_sample(n, model.alpha, rng)
    k = int(s.max())
    atoms = rng.beta(model.base_a, model.base_b, size=k)
    return rng.binomial(model.trials, atoms[s - 1]).astype(np.int64)
