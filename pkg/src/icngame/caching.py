"""Cost of ISP caching as a function of the caching factor.

Content items are grouped by popularity class ``j`` (the number of the
``N`` users interested in them) with item share ``pi(j)``, nonincreasing
in ``j``.  The ISP caches the ``f`` most popular classes.  The hit share it
obtains, normalized to [0, 1], is the caching factor::

    kappa(f) = sum_{top f classes} j pi(j) / sum_j j pi(j)

and the cost is proportional to the share of items stored, normalized so
``c(0) = 0`` and ``c(1) = 1`` and then multiplied by ``cost_scale``.
Fractional ``f`` interpolates linearly between class boundaries.  The
uniform distribution is treated as a continuous density on ``[0, N]``,
for which ``kappa = 1 - (1 - f/N)^2`` and ``c = f/N``.
"""

from __future__ import annotations

import csv
import enum
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DomainError, PopularityError
from .numerics import Bracket, Tolerance, find_root

INVERT_TOL = Tolerance(abs_tol=1e-14, rel_tol=0.0, max_iter=400)


class PopularityKind(str, enum.Enum):
    UNIFORM = "uniform"
    TRUNCATED_ZIPF = "zipf"
    CUSTOM = "custom"


class PopularityDistribution:
    """Popularity mass over classes ``j = 0..N``; immutable once built."""

    def __init__(self, mass, kind: PopularityKind = PopularityKind.CUSTOM, zipf_s: float | None = None):
        arr = np.asarray(mass, dtype=float)
        if arr.ndim != 1 or arr.size < 2:
            raise PopularityError("need masses for at least j = 0 and j = 1")
        if not np.all(np.isfinite(arr)):
            raise PopularityError("masses must be finite")
        neg = np.flatnonzero(arr < 0)
        if neg.size:
            raise PopularityError(f"negative mass {arr[neg[0]]!r} for j={neg[0]}", row=int(neg[0]) + 1)
        rises = np.flatnonzero(np.diff(arr) > 1e-12 * arr.max())
        if rises.size:
            j = int(rises[0]) + 1
            raise PopularityError(
                f"popularity must be nonincreasing in j: pi({j})={arr[j]!r} > pi({j - 1})={arr[j - 1]!r}",
                row=j + 1,
            )
        total = arr.sum()
        if not total > 0:
            raise PopularityError("total mass must be positive")
        if not np.any(arr[1:] > 0):
            raise PopularityError("no content with j >= 1 interested users")
        self._mass = arr / total
        self._mass.setflags(write=False)
        self.kind = PopularityKind(kind)
        self.zipf_s = zipf_s
        # cumulative shares over the top classes, index m = classes cached
        j = np.arange(self.n_users + 1, dtype=float)
        self._classes = j
        top = self._mass[::-1][:-1]
        weighted = (j * self._mass)[::-1][:-1]
        self._hits = np.concatenate(([0.0], np.cumsum(weighted)))
        self._items = np.concatenate(([0.0], np.cumsum(top)))
        self._hits /= self._hits[-1]
        self._items /= self._items[-1]

    @classmethod
    def uniform(cls, n_users: int) -> PopularityDistribution:
        if n_users < 1:
            raise PopularityError(f"n_users must be >= 1, got {n_users}")
        return cls(np.full(n_users + 1, 1.0), PopularityKind.UNIFORM)

    @classmethod
    def truncated_zipf(cls, n_users: int, s: float) -> PopularityDistribution:
        """``pi(j)`` proportional to ``(j + 1)^-s``: most items interest few users."""
        if n_users < 1:
            raise PopularityError(f"n_users must be >= 1, got {n_users}")
        if not s > 0:
            raise PopularityError(f"Zipf exponent must be > 0, got {s}")
        j = np.arange(n_users + 1, dtype=float)
        return cls((j + 1.0) ** (-s), PopularityKind.TRUNCATED_ZIPF, zipf_s=s)

    @classmethod
    def from_csv(cls, path) -> PopularityDistribution:
        """Read a ``j,pi`` table with rows ``j = 0..N`` in ascending order."""
        path = Path(path)
        with path.open(newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None or [h.strip() for h in header] != ["j", "pi"]:
                raise PopularityError(f"{path}: header must be 'j,pi', got {header!r}", row=1)
            mass = []
            for row_no, row in enumerate(reader, start=2):
                if not row or all(not c.strip() for c in row):
                    continue
                if len(row) != 2:
                    raise PopularityError(f"{path}: expected 2 columns", row=row_no)
                try:
                    j = int(row[0])
                    pi = float(row[1])
                except ValueError as exc:
                    raise PopularityError(f"{path}: {exc}", row=row_no) from None
                if j != len(mass):
                    raise PopularityError(
                        f"{path}: expected j={len(mass)} (rows ascending from 0), got {j}", row=row_no
                    )
                if mass and pi > mass[-1] * (1 + 1e-12):
                    raise PopularityError(
                        f"{path}: popularity must be nonincreasing, pi({j})={pi!r} > pi({j - 1})={mass[-1]!r}",
                        row=row_no,
                    )
                mass.append(pi)
        return cls(mass, PopularityKind.CUSTOM)

    @property
    def n_users(self) -> int:
        return self._mass.size - 1

    @property
    def mass(self) -> np.ndarray:
        return self._mass

    @property
    def continuous(self) -> bool:
        return self.kind is PopularityKind.UNIFORM

    def hit_share(self, f: float) -> float:
        n = self.n_users
        if not 0.0 <= f <= n:
            raise DomainError(f"f={f!r} outside [0, {n}]")
        if self.continuous:
            u = 1.0 - f / n
            return 1.0 - u * u
        return float(np.interp(f, self._classes, self._hits))

    def item_share(self, f: float) -> float:
        n = self.n_users
        if not 0.0 <= f <= n:
            raise DomainError(f"f={f!r} outside [0, {n}]")
        if self.continuous:
            return f / n
        return float(np.interp(f, self._classes, self._items))

    def __repr__(self) -> str:
        extra = f", s={self.zipf_s}" if self.zipf_s is not None else ""
        return f"PopularityDistribution({self.kind.value}, N={self.n_users}{extra})"


@dataclass(frozen=True)
class CachingCostModel:
    distribution: PopularityDistribution
    cost_scale: float = 1.0

    def __post_init__(self):
        if not self.cost_scale >= 0:
            raise DomainError(f"cost_scale must be >= 0, got {self.cost_scale}")

    def __call__(self, kappa: float) -> float:
        return cost_of_kappa(kappa, self)


def kappa_of_f(f: float, dist: PopularityDistribution) -> float:
    return dist.hit_share(f)


def f_of_kappa(kappa: float, dist: PopularityDistribution) -> float:
    """Number of cached popularity classes giving hit share ``kappa``."""
    if not 0.0 <= kappa <= 1.0:
        raise DomainError(f"kappa={kappa!r} outside [0, 1]")
    n = dist.n_users
    if kappa == 0.0:
        return 0.0
    if kappa == 1.0:
        return float(n)
    u = find_root(lambda x: dist.hit_share(x * n) - kappa, Bracket(0.0, 1.0), INVERT_TOL)
    return u * n


def cost_of_kappa(kappa: float, model: CachingCostModel) -> float:
    f = f_of_kappa(kappa, model.distribution)
    return model.cost_scale * model.distribution.item_share(f)


@dataclass(frozen=True)
class ConvexityReport:
    passed: bool
    n_grid: int
    min_first_diff: float
    min_second_diff: float
    kappas: tuple[float, ...]
    costs: tuple[float, ...]


def check_convexity(
    model: CachingCostModel,
    n_grid: int = 100,
    first_tol: float = 1e-10,
    second_tol: float = 1e-8,
) -> ConvexityReport:
    """Grid check that ``c(kappa)`` is nondecreasing and convex."""
    if n_grid < 5:
        raise ValueError(f"n_grid must be >= 5, got {n_grid}")
    kappas = np.linspace(0.0, 1.0, n_grid)
    costs = np.array([cost_of_kappa(float(k), model) for k in kappas])
    d1 = np.diff(costs)
    d2 = np.diff(costs, 2)
    passed = bool(d1.min() > -first_tol and d2.min() > -second_tol)
    return ConvexityReport(
        passed, n_grid, float(d1.min()), float(d2.min()), tuple(kappas.tolist()), tuple(costs.tolist())
    )
