"""Dataset container and validation shared by all model families."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = ["Dataset", "DataError"]


class DataError(ValueError):
    """Raised when a dataset violates a structural requirement."""


@dataclass(frozen=True)
class Dataset:
    """Design matrix plus response for one of the three supported families.

    For logistic and Poisson models ``y`` holds the response and
    ``time``/``status`` are None.  For Cox models ``y`` is None and the
    response is the pair (``time``, ``status``).

    Standardization metadata (``column_means``, ``column_sds``) is recorded
    when :meth:`standardize` has been applied so coefficients can be mapped
    back to the original scale.
    """

    X: np.ndarray
    y: np.ndarray | None = None
    time: np.ndarray | None = None
    status: np.ndarray | None = None
    standardized: bool = False
    column_means: np.ndarray | None = None
    column_sds: np.ndarray | None = None
    names: tuple[str, ...] | None = field(default=None, compare=False)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]

    @property
    def is_survival(self) -> bool:
        return self.time is not None

    def column_names(self) -> tuple[str, ...]:
        if self.names is not None:
            return self.names
        return tuple(f"V{j + 1}" for j in range(self.p))

    def standardize(self) -> "Dataset":
        """Return a copy with columns centered and scaled to unit sd.

        The response is untouched.  Uses the population (1/n) standard
        deviation so that lasso penalties scale like the mean loss.
        """
        if self.standardized:
            return self
        means = self.X.mean(axis=0)
        sds = self.X.std(axis=0)
        return Dataset(
            X=(self.X - means) / sds,
            y=self.y,
            time=self.time,
            status=self.status,
            standardized=True,
            column_means=means,
            column_sds=sds,
            names=self.names,
        )

    def subset_columns(self, idx) -> np.ndarray:
        return self.X[:, np.asarray(idx, dtype=int)]


def make_dataset(
    X,
    y=None,
    time=None,
    status=None,
    names=None,
) -> Dataset:
    """Validate raw arrays and build an immutable :class:`Dataset`.

    Raises :class:`DataError` on missing values, fewer than two rows,
    constant columns, or (for survival data) the absence of any event.
    """
    X = np.ascontiguousarray(np.asarray(X, dtype=float))
    if X.ndim != 2:
        raise DataError("X must be a 2-d matrix")
    n, p = X.shape
    if n < 2:
        raise DataError(f"need at least 2 observations, got {n}")
    if not np.isfinite(X).all():
        raise DataError("X contains missing or non-finite entries")
    sds = X.std(axis=0)
    if np.any(sds <= 0):
        bad = [int(j) for j in np.where(sds <= 0)[0]]
        raise DataError(f"constant columns not allowed: {bad}")

    if time is not None:
        time = np.asarray(time, dtype=float)
        status = np.asarray(status, dtype=float)
        if time.shape != (n,) or status.shape != (n,):
            raise DataError("time/status length must match X rows")
        if not np.isfinite(time).all() or np.any(time <= 0):
            raise DataError("event times must be positive and finite")
        if not np.isin(status, (0.0, 1.0)).all():
            raise DataError("status must be 0/1")
        if status.sum() < 1:
            raise DataError("survival data needs at least one event")
        return Dataset(X=X, time=time, status=status, names=_as_names(names, p))

    y = np.asarray(y, dtype=float)
    if y.shape != (n,):
        raise DataError("y length must match X rows")
    if not np.isfinite(y).all():
        raise DataError("y contains missing or non-finite entries")
    return Dataset(X=X, y=y, names=_as_names(names, p))


def _as_names(names, p):
    if names is None:
        return None
    names = tuple(str(v) for v in names)
    if len(names) != p:
        raise DataError("names length must match number of columns")
    return names
