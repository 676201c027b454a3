"""Dataset ingestion, synthetic data generation and report persistence.

CSV is the single ingestion format: a rectangular numeric table, one row
per object, with the response in a designated column.  The synthetic
generator produces the benchmark layout used throughout the tests: a few
groups of strongly correlated channels, of which only the first channel of
each group drives the response, plus a large block of channels that are
pure noise.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from .dataset import Dataset
from .exceptions import CsvFormatError, DataValidationError

__all__ = [
    "load_dataset_csv", "write_dataset_csv", "ArtifConfig", "ArtifTruth",
    "generate_artif", "autoscale_weights", "write_report", "read_report",
]


def load_dataset_csv(path, delimiter: str = ",",
                     response_column: Union[int, str] = -1,
                     header: bool = True) -> Dataset:
    """Read a numeric table; one column is the response, the rest predictors.

    Parameters
    ----------
    path : str or Path
    delimiter : str
    response_column : int or str
        Position among all columns (0-based, negatives allowed) or, when
        ``header`` is true, a column name.
    header : bool
        Whether the first non-blank line holds column labels.

    Blank lines are ignored.  Ragged rows and non-numeric cells raise
    :class:`CsvFormatError` naming the offending data row and column
    (1-based, header excluded).
    """
    with open(path, "r", encoding="utf-8", newline="") as fh:
        rows = [row for row in csv.reader(fh, delimiter=delimiter)
                if any(cell.strip() for cell in row)]
    if not rows:
        raise CsvFormatError(f"{path}: no data rows")
    labels: Optional[List[str]] = None
    if header:
        labels = [cell.strip() for cell in rows[0]]
        rows = rows[1:]
        if not rows:
            raise CsvFormatError(f"{path}: header but no data rows")
    width = len(rows[0])
    if width < 2:
        raise CsvFormatError(f"{path}: need at least 2 columns, got {width}")
    if labels is not None and len(labels) != width:
        raise CsvFormatError(
            f"{path}: header has {len(labels)} cells, data rows have {width}"
        )

    if isinstance(response_column, str):
        if labels is None:
            raise CsvFormatError(
                f"{path}: response column given by name {response_column!r}"
                " but the file has no header"
            )
        try:
            resp_idx = labels.index(response_column)
        except ValueError:
            raise CsvFormatError(
                f"{path}: no column named {response_column!r}"
            ) from None
    else:
        resp_idx = int(response_column)
        if resp_idx < 0:
            resp_idx += width
        if not 0 <= resp_idx < width:
            raise CsvFormatError(
                f"{path}: response column {response_column} out of range"
                f" for {width} columns"
            )

    values = np.empty((len(rows), width))
    for i, row in enumerate(rows, start=1):
        if len(row) != width:
            raise CsvFormatError(
                f"{path}: row {i} has {len(row)} cells, expected {width}"
            )
        for j, cell in enumerate(row, start=1):
            try:
                values[i - 1, j - 1] = float(cell)
            except ValueError:
                raise CsvFormatError(
                    f"{path}: non-numeric cell at row {i}, column {j}:"
                    f" {cell.strip()!r}"
                ) from None

    predictor_cols = [j for j in range(width) if j != resp_idx]
    channel_labels = None
    if labels is not None:
        channel_labels = [labels[j] for j in predictor_cols]
    return Dataset(X=values[:, predictor_cols], y=values[:, resp_idx],
                   channel_labels=channel_labels)


def write_dataset_csv(data: Dataset, path, response_label: str = "response") -> None:
    """Write predictors plus a trailing response column, with a header."""
    labels = data.channel_labels
    if labels is None:
        labels = [f"ch{j}" for j in range(data.n_channels)]
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(list(labels) + [response_label])
        for i in range(data.n_objects):
            writer.writerow([repr(v) for v in data.X[i]] + [repr(float(data.y[i]))])


@dataclass
class ArtifConfig:
    """Synthetic-data layout: correlated relevant groups plus noise channels.

    The group correlation strength and the response noise level are
    reconstruction choices, not published values; the defaults are
    calibrated so that the weakest relevant channel has signal-to-noise
    below one.
    """

    n_objects: int = 400
    n_channels: int = 300
    group_size: int = 10
    n_relevant_groups: int = 5
    within_group_correlation: float = 0.9
    coefficients: Tuple[float, ...] = (5.0, 4.0, 3.0, 2.0, 1.0)
    noise_sd: float = 1.5
    train_fraction: float = 0.25
    seed: int = 0

    def __post_init__(self):
        if self.n_relevant_groups * self.group_size > self.n_channels:
            raise DataValidationError(
                "relevant groups do not fit: "
                f"{self.n_relevant_groups} x {self.group_size} > {self.n_channels}"
            )
        if len(self.coefficients) != self.n_relevant_groups:
            raise DataValidationError(
                f"need {self.n_relevant_groups} coefficients,"
                f" got {len(self.coefficients)}"
            )
        if not 0.0 < self.within_group_correlation < 1.0:
            raise DataValidationError("within_group_correlation must be in (0, 1)")
        if self.noise_sd < 0.0:
            raise DataValidationError("noise_sd must be nonnegative")
        if not 0.0 < self.train_fraction < 1.0:
            raise DataValidationError("train_fraction must be in (0, 1)")


@dataclass
class ArtifTruth:
    """Ground truth of a generated dataset."""

    relevant_channels: np.ndarray
    coefficients: np.ndarray


def generate_artif(cfg: ArtifConfig):
    """Generate (train, external, truth) datasets.

    Channels of relevant group g share a latent factor:
    ``x = sqrt(rho) * latent_g + sqrt(1 - rho) * independent noise`` with
    ``rho`` the within-group correlation, so each channel has unit variance
    and within-group correlation ``rho``.  The response is a linear
    combination of the first channel of each relevant group plus Gaussian
    noise.  Deterministic per seed.
    """
    rng = np.random.default_rng(cfg.seed)
    m, n = cfg.n_objects, cfg.n_channels
    gs, ng = cfg.group_size, cfg.n_relevant_groups
    rho = cfg.within_group_correlation

    X = np.empty((m, n))
    for g in range(ng):
        latent = rng.normal(size=m)
        noise = rng.normal(size=(m, gs))
        X[:, g * gs:(g + 1) * gs] = (
            math.sqrt(rho) * latent[:, None] + math.sqrt(1.0 - rho) * noise
        )
    X[:, ng * gs:] = rng.normal(size=(m, n - ng * gs))

    relevant = np.arange(ng) * gs
    coeffs = np.asarray(cfg.coefficients, dtype=float)
    y = X[:, relevant] @ coeffs + cfg.noise_sd * rng.normal(size=m)

    m_train = int(round(m * cfg.train_fraction))
    if not 2 <= m_train <= m - 1:
        raise DataValidationError(
            f"train fraction {cfg.train_fraction} leaves an unusable split"
        )
    train = Dataset(X=X[:m_train], y=y[:m_train])
    external = Dataset(X=X[m_train:], y=y[m_train:])
    truth = ArtifTruth(relevant_channels=relevant, coefficients=coeffs)
    return train, external, truth


def autoscale_weights(data: Dataset) -> np.ndarray:
    """Starting weights: reciprocal sample standard deviation per channel.

    Channels with zero spread get the median of the other channels' weights
    (or 1.0 if every channel is constant), keeping the overall scale without
    dividing by zero.
    """
    if data.n_objects < 2:
        raise DataValidationError("need at least 2 objects to autoscale")
    sd = data.X.std(axis=0, ddof=1)
    lam = np.empty(data.n_channels)
    good = sd > 0.0
    lam[good] = 1.0 / sd[good]
    if not good.all():
        lam[~good] = float(np.median(lam[good])) if good.any() else 1.0
    return lam


def write_report(report, path) -> None:
    """Serialize a selection report to a JSON file.

    The schema is documented in the README; two runs with identical inputs
    produce byte-identical files.
    """
    text = json.dumps(report.to_dict(), indent=2, sort_keys=True)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text + "\n")


def read_report(path):
    """Read a report written by :func:`write_report`."""
    from .selection import SelectionReport

    with open(path, "r", encoding="utf-8") as fh:
        return SelectionReport.from_dict(json.load(fh))
