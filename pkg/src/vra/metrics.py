"""Competition scoring: PLCC, SRCC, RMSE and the final score."""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import rankdata

from .errors import DegenerateInput, DimensionMismatchError


def _pair(x, y, min_len):
    x = np.asarray(x, dtype=np.float64).ravel()
    y = np.asarray(y, dtype=np.float64).ravel()
    if x.shape != y.shape:
        raise DimensionMismatchError(f"length mismatch: {x.size} vs {y.size}")
    if x.size < min_len:
        raise DegenerateInput(f"need at least {min_len} samples, got {x.size}")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise DegenerateInput("non-finite input")
    return x, y


def plcc(x, y) -> float:
    """Pearson correlation, clamped to [-1, 1].

    Raises :class:`DegenerateInput` if either vector has zero variance.
    """
    x, y = _pair(x, y, 2)
    dx = x - x.mean()
    dy = y - y.mean()
    sxx = np.dot(dx, dx)
    syy = np.dot(dy, dy)
    if sxx == 0.0 or syy == 0.0:
        raise DegenerateInput("zero variance: correlation undefined")
    r = np.dot(dx, dy) / np.sqrt(sxx * syy)
    return float(min(1.0, max(-1.0, r)))


def srcc(x, y) -> float:
    """Spearman correlation: Pearson on average ranks (ties share the mean rank)."""
    x, y = _pair(x, y, 2)
    try:
        return plcc(rankdata(x, method="average"), rankdata(y, method="average"))
    except DegenerateInput:
        raise DegenerateInput("all values tied: rank correlation undefined") from None


def rmse_metric(x, y) -> float:
    x, y = _pair(x, y, 1)
    d = x - y
    return float(np.sqrt(np.mean(d * d)))


@dataclass(frozen=True)
class SetMetrics:
    plcc: float
    srcc: float
    rmse: float = float("nan")
    n: int = 0
    name: str = ""

    @classmethod
    def compute(cls, preds, labels, name="") -> "SetMetrics":
        return cls(plcc(preds, labels), srcc(preds, labels), rmse_metric(preds, labels),
                   int(np.size(preds)), name)

    def to_dict(self) -> dict:
        return {"name": self.name, "n": self.n, "plcc": self.plcc, "srcc": self.srcc, "rmse": self.rmse}


def final_score(per_set) -> float:
    """Unweighted mean over test sets of ``(plcc + srcc) / 2``."""
    per_set = list(per_set)
    if not per_set:
        raise ValueError("final score needs at least one test set")
    return float(np.mean([(m.plcc + m.srcc) / 2.0 for m in per_set]))


@dataclass
class MetricsReport:
    sets: list = field(default_factory=list)

    @property
    def final_score(self) -> float:
        return final_score(self.sets)

    def to_dict(self) -> dict:
        return {"sets": [m.to_dict() for m in self.sets], "final_score": self.final_score}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    def to_text(self) -> str:
        lines = [f"{'set':<12}{'n':>6}{'plcc':>10}{'srcc':>10}{'rmse':>10}"]
        for i, m in enumerate(self.sets, 1):
            lines.append(f"{m.name or str(i):<12}{m.n:>6}{m.plcc:>10.4f}{m.srcc:>10.4f}{m.rmse:>10.4f}")
        lines.append(f"final_score {self.final_score:.4f}")
        return "\n".join(lines) + "\n"
