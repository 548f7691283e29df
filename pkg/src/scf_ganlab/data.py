"""Indicator schema, firm records, CSV I/O, and the synthetic reference world.

Datasets are stored column-wise as read-only numpy arrays; ``Dataset.records``
materializes ``FirmRecord`` objects on demand.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import brentq

from .errors import (ConfigError, DataError, ParseError, SchemaError, StateError,
                     StratificationError)
from .nn import sigmoid
from .rng import Prng

INDUSTRIES = ("Steel", "PharmaDistribution", "ECommerce")

# "net_profit_growth_rate" appears under two categories in the source table; kept once.
CATEGORIES = {
    "profitability": ("total_profit", "operating_margin", "capital_cost_profit_margin",
                      "return_on_assets", "net_profit_growth_rate"),
    "assets_and_growth": ("total_assets", "development_capability",
                          "operating_revenue_growth_rate", "total_asset_growth_rate"),
    "liquidity": ("current_ratio", "quick_ratio"),
    "operational_efficiency": ("inventory_turnover_rate", "accounts_receivable_turnover_rate",
                               "total_asset_turnover_rate"),
    "contract_status": ("contract_status",),
}
NUMERIC_FEATURES = tuple(n for cat, names in CATEGORIES.items()
                         if cat != "contract_status" for n in names)


@dataclass(frozen=True)
class IndicatorSchema:
    numeric: tuple = NUMERIC_FEATURES
    ordinal: str = "contract_status"
    ordinal_levels: tuple = (0, 1)
    version: str = "1"

    def __post_init__(self):
        names = self.feature_names
        if len(set(names)) != len(names):
            raise SchemaError("indicator names must be unique")

    @property
    def feature_names(self):
        return tuple(self.numeric) + (self.ordinal,)

    @property
    def n_numeric(self):
        return len(self.numeric)

    @property
    def n_features(self):
        return len(self.numeric) + 1

    @property
    def csv_columns(self):
        return ("firm_id", "industry") + self.feature_names + ("label",)


SCHEMA = IndicatorSchema()


@dataclass(frozen=True)
class FirmRecord:
    firm_id: str
    industry: str
    indicators: tuple
    contract_status: int
    label: int
    synthetic: bool = False

    def __post_init__(self):
        if self.industry not in INDUSTRIES:
            raise DataError(f"unknown industry {self.industry!r}")
        if not all(math.isfinite(v) for v in self.indicators):
            raise DataError(f"record {self.firm_id}: non-finite indicator")
        if self.contract_status not in (0, 1):
            raise DataError(f"record {self.firm_id}: contract_status must be 0 or 1")
        if self.label not in (0, 1):
            raise DataError(f"record {self.firm_id}: label must be 0 or 1")


@dataclass(frozen=True)
class NormStats:
    mean: np.ndarray
    std: np.ndarray
    zero_variance: np.ndarray

    def to_dict(self):
        return {"mean": self.mean.tolist(), "std": self.std.tolist(),
                "zero_variance": self.zero_variance.tolist()}

    @classmethod
    def from_dict(cls, d):
        return cls(np.array(d["mean"], dtype=float), np.array(d["std"], dtype=float),
                   np.array(d["zero_variance"], dtype=bool))


def _frozen(a, dtype=None):
    a = np.array(a, dtype=dtype)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Dataset:
    """Ordered firm records. ``numeric`` holds the 14 indicators per row."""

    firm_ids: np.ndarray
    industries: np.ndarray
    numeric: np.ndarray
    contract_status: np.ndarray
    labels: np.ndarray
    synthetic: np.ndarray = None
    norm_stats: Optional[NormStats] = None
    ground_truth_p: Optional[np.ndarray] = None
    schema: IndicatorSchema = field(default=SCHEMA)

    def __post_init__(self):
        n = len(self.firm_ids)
        put = lambda k, v: object.__setattr__(self, k, v)
        put("firm_ids", _frozen(self.firm_ids, object))
        put("industries", _frozen(self.industries, object))
        put("numeric", _frozen(np.asarray(self.numeric, float).reshape(n, self.schema.n_numeric)))
        put("contract_status", _frozen(self.contract_status, float))
        put("labels", _frozen(self.labels, np.int64))
        put("synthetic", _frozen(np.zeros(n, bool) if self.synthetic is None else self.synthetic, bool))
        if self.ground_truth_p is not None:
            put("ground_truth_p", _frozen(self.ground_truth_p, float))
        if not np.isfinite(self.numeric).all():
            raise DataError("dataset contains non-finite indicators")

    def __len__(self):
        return len(self.firm_ids)

    @property
    def normalized(self):
        return self.norm_stats is not None

    def matrix(self):
        """(n, 15) feature matrix: numeric indicators then contract_status."""
        return np.column_stack([self.numeric, self.contract_status]) if len(self) else \
            np.zeros((0, self.schema.n_features))

    def class_counts(self):
        return {0: int((self.labels == 0).sum()), 1: int((self.labels == 1).sum())}

    @property
    def records(self):
        return [FirmRecord(str(f), str(ind), tuple(float(v) for v in row), int(c), int(y), bool(s))
                for f, ind, row, c, y, s in zip(self.firm_ids, self.industries, self.numeric,
                                                self.contract_status, self.labels, self.synthetic)]

    @classmethod
    def from_records(cls, records: Sequence[FirmRecord], schema=SCHEMA, **kw):
        records = list(records)
        return cls(
            firm_ids=[r.firm_id for r in records],
            industries=[r.industry for r in records],
            numeric=np.array([r.indicators for r in records], float).reshape(len(records), schema.n_numeric),
            contract_status=[r.contract_status for r in records],
            labels=[r.label for r in records],
            synthetic=[r.synthetic for r in records],
            schema=schema, **kw)

    def subset(self, idx):
        idx = np.asarray(idx, dtype=np.int64)
        gt = None if self.ground_truth_p is None else self.ground_truth_p[idx]
        return replace(self, firm_ids=self.firm_ids[idx], industries=self.industries[idx],
                       numeric=self.numeric[idx], contract_status=self.contract_status[idx],
                       labels=self.labels[idx], synthetic=self.synthetic[idx], ground_truth_p=gt)

    def concat(self, other: "Dataset"):
        gt = None
        if self.ground_truth_p is not None and other.ground_truth_p is not None:
            gt = np.concatenate([self.ground_truth_p, other.ground_truth_p])
        return replace(self,
                       firm_ids=np.concatenate([self.firm_ids, other.firm_ids]),
                       industries=np.concatenate([self.industries, other.industries]),
                       numeric=np.vstack([self.numeric, other.numeric]),
                       contract_status=np.concatenate([self.contract_status, other.contract_status]),
                       labels=np.concatenate([self.labels, other.labels]),
                       synthetic=np.concatenate([self.synthetic, other.synthetic]),
                       ground_truth_p=gt)


# ---------------------------------------------------------------- CSV

def load_csv(path, schema: IndicatorSchema = SCHEMA) -> Dataset:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        for col in schema.csv_columns:
            if col not in header:
                raise SchemaError(f"missing required column {col!r}")
        has_p = "ground_truth_p" in header
        ids, inds, nums, contract, labels, gt = [], [], [], [], [], []
        for row_no, row in enumerate(reader, start=1):
            def num(col):
                try:
                    v = float(row[col])
                except (TypeError, ValueError):
                    raise ParseError(f"row {row_no}, column {col!r}: cannot parse {row[col]!r} as a number")
                if not math.isfinite(v):
                    raise ParseError(f"row {row_no}, column {col!r}: non-finite value {row[col]!r}")
                return v

            def level(col):
                v = num(col)
                if v not in (0.0, 1.0):
                    raise ParseError(f"row {row_no}, column {col!r}: expected 0 or 1, got {row[col]!r}")
                return int(v)

            if row["industry"] not in INDUSTRIES:
                raise DataError(f"row {row_no}: unknown industry {row['industry']!r}")
            ids.append(row["firm_id"])
            inds.append(row["industry"])
            nums.append([num(c) for c in schema.numeric])
            contract.append(level(schema.ordinal))
            labels.append(level("label"))
            if has_p:
                gt.append(num("ground_truth_p"))
    return Dataset(ids, inds, np.array(nums, float).reshape(len(ids), schema.n_numeric), contract,
                   labels, ground_truth_p=gt if has_p else None, schema=schema)


def write_csv(dataset: Dataset, path, ground_truth=False):
    """Write raw (un-normalized) records; ``ground_truth`` adds ``ground_truth_p``."""
    if dataset.normalized:
        dataset = denormalize(dataset)
    cols = list(dataset.schema.csv_columns)
    if ground_truth:
        if dataset.ground_truth_p is None:
            raise DataError("dataset carries no ground-truth probabilities")
        cols.append("ground_truth_p")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for i in range(len(dataset)):
            row = [dataset.firm_ids[i], dataset.industries[i]]
            row += [repr(float(v)) for v in dataset.numeric[i]]
            row += [int(dataset.contract_status[i]), int(dataset.labels[i])]
            if ground_truth:
                row.append(repr(float(dataset.ground_truth_p[i])))
            w.writerow(row)


# ---------------------------------------------------------------- normalization

def fit_norm_stats(numeric) -> NormStats:
    numeric = np.asarray(numeric, float)
    mean = numeric.mean(axis=0)
    std = numeric.std(axis=0)
    flat = std <= 1e-12 * np.maximum(1.0, np.abs(mean))
    return NormStats(mean, np.where(flat, 1.0, std), flat)


def normalize(dataset: Dataset, stats: Optional[NormStats] = None) -> Dataset:
    """Z-score the numeric indicators (population std).

    Without ``stats`` they are fitted on ``dataset``; zero-variance columns map
    to 0 and are flagged. contract_status and labels are left alone.
    """
    if dataset.normalized:
        raise StateError("dataset is already normalized")
    if stats is None:
        if len(dataset) < 2:
            raise DataError("normalize needs at least 2 records")
        stats = fit_norm_stats(dataset.numeric)
    z = (dataset.numeric - stats.mean) / stats.std
    z[:, stats.zero_variance] = 0.0
    return replace(dataset, numeric=z, norm_stats=stats)


def denormalize(dataset: Dataset) -> Dataset:
    if not dataset.normalized:
        raise StateError("dataset is not normalized")
    s = dataset.norm_stats
    return replace(dataset, numeric=dataset.numeric * s.std + s.mean, norm_stats=None)


# ---------------------------------------------------------------- splitting

def stratified_split(dataset: Dataset, train_fraction: float, seed: int):
    """Per class, floor(fraction * count) records go to train, the rest to test.

    Both parts keep the original record order.
    """
    if not 0.0 < train_fraction < 1.0:
        raise ConfigError(f"train_fraction must be in (0, 1), got {train_fraction}")
    rng = Prng(seed)
    train_idx = []
    for cls in (0, 1):
        members = np.flatnonzero(dataset.labels == cls)
        if len(members) < 2:
            raise StratificationError(f"class {cls} has {len(members)} records; need at least 2")
        order = members[rng.child(cls).permutation(len(members))]
        train_idx.append(order[: int(math.floor(train_fraction * len(members)))])
    train_idx = np.sort(np.concatenate(train_idx))
    test_idx = np.setdiff1d(np.arange(len(dataset)), train_idx)
    return dataset.subset(train_idx), dataset.subset(test_idx)


# ---------------------------------------------------------------- reference world

# (mean, std) per indicator, in NUMERIC_FEATURES order; currency in millions
_PROFILES = {
    "Steel": [(50, 40), (0.06, 0.04), (0.08, 0.05), (0.04, 0.03), (0.05, 0.20), (2000, 800),
              (0.5, 0.2), (0.06, 0.15), (0.05, 0.10), (1.2, 0.3), (0.8, 0.25), (6, 2), (8, 3),
              (0.7, 0.2)],
    "PharmaDistribution": [(30, 25), (0.09, 0.05), (0.10, 0.06), (0.06, 0.03), (0.08, 0.20),
                           (800, 300), (0.6, 0.2), (0.10, 0.15), (0.08, 0.10), (1.5, 0.35),
                           (1.1, 0.3), (9, 3), (5, 2), (1.2, 0.3)],
    "ECommerce": [(20, 30), (0.04, 0.06), (0.07, 0.07), (0.03, 0.04), (0.15, 0.30), (500, 250),
                  (0.7, 0.2), (0.20, 0.25), (0.15, 0.15), (1.3, 0.4), (1.0, 0.35), (12, 4),
                  (20, 8), (1.8, 0.5)],
}

# log-odds change per pooled standard deviation; healthier firms default less
DEFAULT_COEF = np.array([-0.5, -0.6, -0.3, -0.8, -0.3, -0.2, -0.3, -0.3, -0.2,
                         -0.6, -0.5, -0.2, -0.2, -0.3])


def _block_correlation(within=0.4, across=0.1):
    groups = [cat for cat, names in CATEGORIES.items() if cat != "contract_status" for _ in names]
    g = np.array(groups, dtype=object)
    corr = np.where(g[:, None] == g[None, :], within, across)
    np.fill_diagonal(corr, 1.0)
    return corr


@dataclass
class WorldConfig:
    """Parameters of the seeded synthetic population.

    ``intercept=None`` calibrates the intercept so that the population-average
    default probability equals ``base_default_rate``.
    """

    n: int = 2000
    mix: tuple = (1 / 3, 1 / 3, 1 / 3)
    base_default_rate: float = 0.05
    means: dict = None
    covs: dict = None
    coef: np.ndarray = None
    intercept: Optional[float] = None
    breach_prob_default: float = 0.35
    breach_prob_clean: float = 0.05
    seed: int = 0

    def __post_init__(self):
        if self.means is None:
            self.means = {k: np.array([m for m, _ in v], float) for k, v in _PROFILES.items()}
        if self.covs is None:
            corr = _block_correlation()
            self.covs = {}
            for k, v in _PROFILES.items():
                sd = np.array([s for _, s in v], float)
                self.covs[k] = corr * np.outer(sd, sd)
        if self.coef is None:
            self.coef = DEFAULT_COEF.copy()
        self.coef = np.asarray(self.coef, float)
        self.mix = tuple(float(w) for w in self.mix)

    @classmethod
    def strong_signal(cls, **kw):
        kw.setdefault("base_default_rate", 0.2)
        scale = kw.pop("signal_scale", 3.0)
        return cls(coef=DEFAULT_COEF * scale, **kw)

    def validate(self):
        if self.n < 0:
            raise ConfigError("world n must be >= 0")
        if len(self.mix) != 3 or min(self.mix) < 0 or abs(sum(self.mix) - 1.0) > 1e-12:
            raise ConfigError(f"industry mix must be three nonnegative weights summing to 1, got {self.mix}")
        if not 0.0 < self.base_default_rate < 1.0:
            raise ConfigError("base_default_rate must be in (0, 1)")
        d = len(NUMERIC_FEATURES)
        for ind in INDUSTRIES:
            cov = np.asarray(self.covs[ind], float)
            if cov.shape != (d, d) or np.asarray(self.means[ind]).shape != (d,):
                raise ConfigError(f"{ind}: mean/covariance shape mismatch")
            if not np.allclose(cov, cov.T, rtol=0, atol=1e-12 * max(1.0, np.abs(cov).max())):
                raise ConfigError(f"{ind}: covariance is not symmetric")
            if np.linalg.eigvalsh(cov).min() < -1e-10 * max(1.0, np.abs(cov).max()):
                raise ConfigError(f"{ind}: covariance is not positive semi-definite")
        if self.coef.shape != (d,):
            raise ConfigError(f"coef must have {d} entries")

    def pooled_scale(self):
        """Mix-weighted population mean and std of each indicator."""
        pi = np.array(self.mix)
        mus = np.array([self.means[k] for k in INDUSTRIES])
        second = sum(p * (np.diag(self.covs[k]) + self.means[k] ** 2) for p, k in zip(pi, INDUSTRIES))
        mean = pi @ mus
        return mean, np.sqrt(np.maximum(second - mean**2, 1e-300))

    def resolved_intercept(self):
        if self.intercept is not None:
            return float(self.intercept)
        mean, sd = self.pooled_scale()
        w = self.coef / sd
        locs = [w @ (self.means[k] - mean) for k in INDUSTRIES]
        scales = [math.sqrt(max(w @ self.covs[k] @ w, 0.0)) for k in INDUSTRIES]
        nodes, weights = np.polynomial.hermite_e.hermegauss(64)
        weights = weights / weights.sum()

        def avg_p(b):
            return sum(p * (weights @ sigmoid(b + m + s * nodes))
                       for p, m, s in zip(self.mix, locs, scales)) - self.base_default_rate

        return float(brentq(avg_p, -50.0, 50.0, xtol=1e-14))


def _factor(cov):
    try:
        return np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        vals, vecs = np.linalg.eigh(cov)
        return vecs * np.sqrt(np.maximum(vals, 0.0))


def make_reference_world(config: WorldConfig) -> Dataset:
    """Sample a labelled population with known default probabilities.

    Draw order from ``Prng(config.seed)``: n uniforms (industry, by cumulative
    mix), n*14 normals row-major (features ``mean + L z`` with ``L`` the
    Cholesky factor), n uniforms (label ``u < p``), n uniforms (contract breach
    ``u < q`` where ``q`` depends on the label; breach means contract_status 0).
    ``p = sigmoid(coef . (x - pooled_mean) / pooled_std + intercept)``.
    """
    config.validate()
    n, d = config.n, len(NUMERIC_FEATURES)
    rng = Prng(config.seed)
    cum = np.cumsum(config.mix)
    ind_idx = np.minimum(np.searchsorted(cum, rng.uniform(n), side="right"), 2)
    z = rng.normal(n * d).reshape(n, d)
    x = np.empty((n, d))
    for k, name in enumerate(INDUSTRIES):
        rows = ind_idx == k
        x[rows] = config.means[name] + z[rows] @ _factor(np.asarray(config.covs[name], float)).T
    mean, sd = config.pooled_scale()
    p = sigmoid((x - mean) / sd @ config.coef + config.resolved_intercept())
    labels = (rng.uniform(n) < p).astype(np.int64)
    q = np.where(labels == 1, config.breach_prob_default, config.breach_prob_clean)
    contract = np.where(rng.uniform(n) < q, 0, 1)
    return Dataset(firm_ids=[f"F{i:06d}" for i in range(n)],
                   industries=[INDUSTRIES[k] for k in ind_idx],
                   numeric=x, contract_status=contract, labels=labels, ground_truth_p=p)


# ---------------------------------------------------------------- augmentation

class AugmentationShortfall(UserWarning):
    def __init__(self, shortfall):
        super().__init__(f"synthetic pool too small: {shortfall} minority records short of target")
        self.shortfall = shortfall


def augmentation_deficit(train: Dataset, target_ratio: float) -> int:
    counts = train.class_counts()
    want = math.ceil(target_ratio * counts[0] - 1e-9)
    return max(0, want - counts[1])


def augment(train: Dataset, synthetic: Sequence[FirmRecord], target_ratio: float) -> Dataset:
    """Append just enough synthetic default records to reach minority/majority = target_ratio.

    Appended rows are flagged synthetic; if ``train`` is normalized they are
    standardized with its statistics. Emits ``AugmentationShortfall`` when the
    pool runs out.
    """
    if not 0.0 < target_ratio <= 1.0:
        raise ConfigError(f"target_ratio must be in (0, 1], got {target_ratio}")
    synthetic = list(synthetic)
    if any(r.label != 1 for r in synthetic):
        raise DataError("contract violation: synthetic records must all carry label=1 (default)")
    need = augmentation_deficit(train, target_ratio)
    if need == 0:
        return train
    take = synthetic[:need]
    if len(take) < need:
        warnings.warn(AugmentationShortfall(need - len(take)), stacklevel=2)
    if not take:
        return train
    extra = Dataset.from_records([replace(r, synthetic=True) for r in take], train.schema)
    if train.normalized:
        extra = normalize(extra, train.norm_stats)
    if train.ground_truth_p is not None:
        extra = replace(extra, ground_truth_p=np.full(len(extra), np.nan))
    return train.concat(extra)
