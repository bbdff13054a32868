"""Column-oriented sample table shared by the classifier and the simulator."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class Dataset:
    """Named float columns of equal length, with optional categorical flags.

    Categorical columns hold level codes; they skip normalization and are
    one-hot encoded before entering kernels or regressions.
    """

    names: tuple[str, ...]
    values: np.ndarray  # shape (n, len(names)), column i is names[i]
    categorical: frozenset[str] = field(default_factory=frozenset)

    def __post_init__(self) -> None:
        if self.values.ndim != 2 or self.values.shape[1] != len(self.names):
            raise ValueError(
                f"values must be n x {len(self.names)}, got shape {self.values.shape}"
            )
        if len(set(self.names)) != len(self.names):
            raise ValueError("duplicate column names")
        unknown = self.categorical - set(self.names)
        if unknown:
            raise ValueError(f"categorical flags for unknown columns: {sorted(unknown)}")
        self.values.setflags(write=False)

    @classmethod
    def from_columns(
        cls, columns: dict[str, np.ndarray], categorical: tuple[str, ...] = ()
    ) -> "Dataset":
        names = tuple(columns)
        arrays = [np.asarray(columns[name], dtype=float).ravel() for name in names]
        lengths = {len(a) for a in arrays}
        if len(lengths) > 1:
            raise ValueError(f"columns have unequal lengths: {sorted(lengths)}")
        values = np.column_stack(arrays) if arrays else np.empty((0, 0))
        return cls(names=names, values=values, categorical=frozenset(categorical))

    @property
    def n(self) -> int:
        return self.values.shape[0]

    def column(self, name: str) -> np.ndarray:
        return self.values[:, self._index(name)]

    def matrix(self, names: tuple[str, ...]) -> np.ndarray:
        """Raw column stack (no encoding)."""
        if not names:
            return np.empty((self.n, 0))
        return self.values[:, [self._index(name) for name in names]]

    def encoded_matrix(
        self, names: tuple[str, ...], levels: dict[str, tuple[float, ...]] | None = None
    ) -> np.ndarray:
        """Column stack with categorical columns expanded to one-hot indicators.

        ``levels`` fixes the level order per categorical column; defaults to
        the sorted distinct values found in this dataset.
        """
        parts = []
        for name in names:
            col = self.column(name)
            if name in self.categorical:
                lvls = (levels or {}).get(name)
                if lvls is None:
                    lvls = tuple(float(v) for v in np.unique(col))
                parts.append(np.column_stack([(col == lv).astype(float) for lv in lvls]))
            else:
                parts.append(col[:, None])
        return np.hstack(parts) if parts else np.empty((self.n, 0))

    def take(self, indices: np.ndarray) -> "Dataset":
        return Dataset(
            names=self.names, values=self.values[indices].copy(), categorical=self.categorical
        )

    def _index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise KeyError(f"no column named {name!r}") from None
