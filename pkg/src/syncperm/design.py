"""2x2 layouts, cell summaries and the equal-weight contrasts.

Cells are always ordered (11, 12, 21, 22): the first index is the level of
factor A, the second the level of factor B.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import InvalidInputError
from .numerics import SymMatrix, pseudo_inverse

CELLS = ((1, 1), (1, 2), (2, 1), (2, 2))


class Effect(str, Enum):
    A = "A"
    B = "B"
    AxB = "AxB"

    @classmethod
    def parse(cls, value) -> Effect:
        if isinstance(value, cls):
            return value
        key = str(value).strip().replace("×", "x").replace("*", "x").replace(":", "x")
        for e in cls:
            if e.value.lower() == key.lower():
                return e
        raise InvalidInputError(f"unknown effect {value!r}; expected A, B or AxB")


_CONTRASTS = {
    Effect.A: (1.0, 1.0, -1.0, -1.0),
    Effect.B: (1.0, -1.0, 1.0, -1.0),
    Effect.AxB: (1.0, -1.0, -1.0, 1.0),
}


class Dataset:
    """Observations of a 2x2 layout, one 1-d array per cell.

    ``Dataset([x11, x12, x21, x22])`` or ``Dataset([[x11, x12], [x21, x22]])``.
    """

    __slots__ = ("cells",)

    def __init__(self, cells):
        cells = list(cells)
        if len(cells) == 2 and all(
            isinstance(row, (list, tuple)) and len(row) == 2 for row in cells
        ):
            cells = [cells[0][0], cells[0][1], cells[1][0], cells[1][1]]
        if len(cells) != 4:
            raise InvalidInputError(f"a 2x2 layout needs 4 cells, got {len(cells)}")
        arrays = []
        for (i, j), c in zip(CELLS, cells):
            a = np.array(c, dtype=float).reshape(-1)
            if a.size == 0:
                raise InvalidInputError(f"cell ({i},{j}) is empty")
            if not np.all(np.isfinite(a)):
                raise InvalidInputError(f"cell ({i},{j}) contains NaN or infinite values")
            a.setflags(write=False)
            arrays.append(a)
        self.cells = tuple(arrays)

    @property
    def n(self) -> np.ndarray:
        return np.array([c.size for c in self.cells], dtype=np.int64)

    @property
    def N(self) -> int:
        return int(sum(c.size for c in self.cells))

    def cell(self, i: int, j: int) -> np.ndarray:
        return self.cells[CELLS.index((i, j))]

    def pooled(self) -> np.ndarray:
        return np.concatenate(self.cells)

    def with_cells(self, cells) -> Dataset:
        return Dataset(cells)

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        return all(
            a.shape == b.shape and np.array_equal(a, b)
            for a, b in zip(self.cells, other.cells)
        )

    def __repr__(self):
        return f"Dataset(n={self.n.tolist()})"


@dataclass(frozen=True)
class EffectSpec:
    """Hypothesis under test, its contrast and its synchronization blocks.

    ``blocking`` names the factor whose levels form the blocks: "B" for the
    effects A and AxB, "A" for effect B.
    """

    effect: Effect
    contrast: tuple
    blocking: str

    @classmethod
    def of(cls, effect) -> EffectSpec:
        effect = Effect.parse(effect)
        return cls(effect, contrast_vector(effect), "A" if effect is Effect.B else "B")

    @property
    def c(self) -> np.ndarray:
        return np.asarray(self.contrast, dtype=float)

    def blocks(self):
        """Pairs of cell indices exchanged within each block."""
        if self.blocking == "B":
            return ((0, 2), (1, 3))  # (11,21), (12,22)
        return ((0, 1), (2, 3))      # (11,12), (21,22)


@dataclass(frozen=True)
class CellSummary:
    means: np.ndarray
    variances: np.ndarray
    counts: np.ndarray


def summarize(d: Dataset) -> CellSummary:
    """Cell means and unbiased variances.

    A cell with one observation gets variance NaN (undefined).
    """
    means = np.array([c.sum() / c.size for c in d.cells])
    var = np.empty(4)
    for k, c in enumerate(d.cells):
        if c.size < 2:
            var[k] = np.nan
        else:
            r = c - means[k]
            var[k] = float(np.dot(r, r)) / (c.size - 1)
    return CellSummary(means=means, variances=var, counts=d.n)


def contrast_vector(effect) -> tuple:
    """Equal-cell-weight contrast for ``effect`` in cell order (11,12,21,22)."""
    return _CONTRASTS[Effect.parse(effect)]


def projection_matrix(effect) -> SymMatrix:
    """T = c c' / (c'c), the orthogonal projector onto the contrast."""
    c = effect.c if isinstance(effect, EffectSpec) else np.asarray(contrast_vector(effect))
    return projection_from_contrast(c)


def projection_from_contrast(c) -> SymMatrix:
    c = np.asarray(c, dtype=float)
    if c.ndim == 1:
        c = c[None, :]
    inner = pseudo_inverse(SymMatrix(c @ c.T)).array
    return SymMatrix(c.T @ inner @ c)
