"""Design matrices built from named basis families.

A dictionary is evaluated at design points ``t_1 < ... < t_n`` in [0, 1] and
stored as an ``n x M`` matrix ``G`` with ``G[j, m] = g_m(t_j)``.  Wavelet
families are realized as the orthonormal periodized synthesis matrix on the
grid ``t = (i + 1) / M``; designs with fewer points select rows of it.

All indices (grid rows, dictionary columns) are 0-based.
"""

from dataclasses import dataclass, field

import numpy as np

from . import wavelets
from .errors import ValidationError

WAVELET_KINDS = ("haar", "symmlet8")
KINDS = WAVELET_KINDS + ("fourier", "mixed", "custom")


@dataclass(frozen=True)
class BasisSpec:
    """Description of a basis family.

    ``size`` is the number of basis functions M.  ``mixed`` concatenates its
    ``children``; ``custom`` carries an explicit matrix whose rows are the
    full grid (or the design itself when no grid indices are given).
    """

    kind: str
    size: int | None = None
    children: tuple = ()
    matrix: np.ndarray | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValidationError(f"unknown basis kind {self.kind!r}")
        if self.kind == "mixed":
            if len(self.children) < 2:
                raise ValidationError("mixed basis needs at least two children")
            object.__setattr__(self, "children", tuple(self.children))
            object.__setattr__(self, "size", sum(c.size for c in self.children))
        elif self.kind == "custom":
            if self.matrix is None:
                raise ValidationError("custom basis needs a matrix")
            mat = np.array(self.matrix, dtype=float)
            if mat.ndim != 2 or mat.size == 0:
                raise ValidationError("custom basis matrix must be a non-empty 2-D array")
            if not np.all(np.isfinite(mat)):
                raise ValidationError("custom basis matrix has non-finite entries")
            mat.flags.writeable = False
            object.__setattr__(self, "matrix", mat)
            object.__setattr__(self, "size", mat.shape[1])
        else:
            if self.size is None or int(self.size) != self.size or self.size < 1:
                raise ValidationError(f"basis size must be a positive integer, got {self.size!r}")
            object.__setattr__(self, "size", int(self.size))
            if self.kind in WAVELET_KINDS and not wavelets.is_power_of_two(self.size):
                raise ValidationError(
                    f"{self.kind} basis size must be a power of two, got {self.size}"
                )


@dataclass(frozen=True)
class DesignPoints:
    """Strictly increasing design points in [0, 1].

    ``grid_indices`` optionally records which rows of an ``M``-point grid
    ``t = (i + 1) / M`` the points are.
    """

    points: np.ndarray
    grid_indices: np.ndarray | None = None
    grid_size: int | None = None

    def __post_init__(self):
        pts = np.atleast_1d(np.asarray(self.points, dtype=float))
        if pts.ndim != 1 or pts.size < 1:
            raise ValidationError("design needs at least one point")
        if np.any(pts < 0) or np.any(pts > 1) or not np.all(np.isfinite(pts)):
            raise ValidationError("design points must lie in [0, 1]")
        if np.any(np.diff(pts) <= 0):
            raise ValidationError("design points must be strictly increasing")
        pts.flags.writeable = False
        object.__setattr__(self, "points", pts)
        if self.grid_indices is not None:
            idx = np.asarray(self.grid_indices)
            if idx.shape != pts.shape or not np.issubdtype(idx.dtype, np.integer):
                raise ValidationError("grid indices must be integers, one per point")
            if np.unique(idx).size != idx.size:
                raise ValidationError("duplicate grid indices")
            if self.grid_size is not None and (idx.min() < 0 or idx.max() >= self.grid_size):
                raise ValidationError("grid index out of range")
            idx = idx.astype(np.int64)
            idx.flags.writeable = False
            object.__setattr__(self, "grid_indices", idx)

    @property
    def n(self):
        return self.points.size

    @classmethod
    def equispaced(cls, n):
        """The grid ``t_j = j / n`` for ``j = 1..n``."""
        return cls.from_grid(n, np.arange(n))

    @classmethod
    def from_grid(cls, grid_size, indices):
        idx = np.asarray(indices)
        if idx.size and (idx.min() < 0 or idx.max() >= grid_size):
            raise ValidationError("grid index out of range")
        if np.unique(idx).size != idx.size:
            raise ValidationError("duplicate grid indices")
        idx = np.sort(idx)
        return cls((idx + 1) / grid_size, idx, grid_size)

    @classmethod
    def permuted_subset(cls, grid_size, n, seed):
        """First ``n`` points of a seeded random permutation of the grid."""
        if not 1 <= n <= grid_size:
            raise ValidationError(f"subset size must lie in [1, {grid_size}], got {n}")
        rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
        return cls.from_grid(grid_size, rng.permutation(grid_size)[:n])


def _largest_eigenvalue(A):
    return float(np.linalg.eigvalsh(A)[-1])


class DesignMatrix:
    """An ``n x M`` dictionary evaluation with cached norms and weights.

    The matrix is read-only after construction.
    """

    def __init__(self, G):
        G = np.array(G, dtype=float)
        if G.ndim != 2 or G.size == 0:
            raise ValidationError("design matrix must be a non-empty 2-D array")
        if not np.all(np.isfinite(G)):
            raise ValidationError("design matrix has non-finite entries")
        G.flags.writeable = False
        self.G = G
        self.col_norms = np.linalg.norm(G, axis=0)
        self.col_norms.flags.writeable = False
        self.G_max = float(self.col_norms.max())
        self.rho_max_gram = _largest_eigenvalue(G.T @ G)
        self.rho_max_outer = _largest_eigenvalue(G @ G.T)
        # weights stay undefined when a column vanishes; compute_weights raises
        self._weights = None
        if np.all(self.col_norms > 0):
            gamma = 2.0 * self.col_norms * np.sqrt(self.rho_max_outer)
            delta = self.col_norms / self.G_max
            gamma.flags.writeable = False
            delta.flags.writeable = False
            self._weights = (gamma, delta)

    @property
    def shape(self):
        return self.G.shape

    @property
    def n(self):
        return self.G.shape[0]

    @property
    def M(self):
        return self.G.shape[1]

    @property
    def gamma(self):
        return compute_weights(self)[0]

    @property
    def delta(self):
        return compute_weights(self)[1]

    def gram(self):
        return self.G.T @ self.G

    def __array__(self, dtype=None, copy=None):
        return self.G if dtype is None else self.G.astype(dtype)

    def __repr__(self):
        return f"DesignMatrix(n={self.n}, M={self.M}, G_max={self.G_max:.4g})"


def compute_weights(G):
    """Penalty weights ``gamma`` and support-rule weights ``delta``.

    ``gamma_k = 2 ||G_k|| sqrt(rho_max(G G^T))`` and ``delta_k = ||G_k|| / G_max``.
    """
    if G._weights is None:
        bad = np.flatnonzero(G.col_norms == 0)
        raise ValidationError(f"zero dictionary column(s) {bad.tolist()}: weights undefined")
    return G._weights


def fourier_matrix(points, size):
    """Real trigonometric basis of ``size`` functions evaluated at ``points``.

    Columns: constant, then ``cos(2 pi k t), sin(2 pi k t)`` pairs for
    ``k = 1..(size - 1) // 2``, then ``cos(pi size t)`` when size is even.
    Orthonormal on the grid ``t = j / size``.
    """
    t = np.asarray(points, dtype=float)
    cols = [np.full(t.size, 1.0 / np.sqrt(size))]
    scale = np.sqrt(2.0 / size)
    for k in range(1, (size - 1) // 2 + 1):
        cols.append(scale * np.cos(2 * np.pi * k * t))
        cols.append(scale * np.sin(2 * np.pi * k * t))
    if size % 2 == 0 and size > 1:
        cols.append(np.cos(np.pi * size * t) / np.sqrt(size))
    return np.column_stack(cols)


def _grid_rows(M, pts, label):
    """Row indices into the ``M``-point grid for the design ``pts``."""
    if pts.grid_indices is not None and (pts.grid_size in (None, M)):
        idx = pts.grid_indices
    else:
        idx = np.rint(pts.points * M).astype(np.int64) - 1
        if np.any(np.abs((idx + 1) / M - pts.points) > 1e-12) or np.any(idx < 0):
            raise ValidationError(
                f"{label} dictionary needs points on the grid (i + 1) / {M}"
            )
    if np.any(idx >= M) or np.any(idx < 0):
        raise ValidationError("grid index out of range")
    return idx


def _evaluate(spec, pts):
    if spec.kind in WAVELET_KINDS:
        rows = _grid_rows(spec.size, pts, spec.kind)
        return wavelets.synthesis_matrix(spec.kind, spec.size)[rows]
    if spec.kind == "fourier":
        return fourier_matrix(pts.points, spec.size)
    if spec.kind == "custom":
        mat = spec.matrix
        if pts is None or pts.n == mat.shape[0]:
            return np.array(mat)
        return np.array(mat[_grid_rows(mat.shape[0], pts, "custom")])
    blocks = [_evaluate(child, pts) for child in spec.children]
    if len({b.shape[0] for b in blocks}) != 1:
        raise ValidationError("mixed basis children disagree on row dimension")
    return np.hstack(blocks)


def build_dictionary(spec, pts=None):
    """Evaluate ``spec`` at the design ``pts`` and wrap it as a DesignMatrix.

    ``pts`` defaults to the equispaced grid of ``spec.size`` points.
    """
    if pts is None:
        if spec.kind == "mixed":
            pts = DesignPoints.equispaced(spec.children[0].size)
        elif spec.kind == "custom":
            pts = None
        else:
            pts = DesignPoints.equispaced(spec.size)
    return DesignMatrix(_evaluate(spec, pts))


def subset_columns(G, J):
    """Keep only the columns of ``G`` listed in the sorted index set ``J``."""
    J = np.asarray(J, dtype=np.int64).ravel()
    if J.size == 0:
        raise ValidationError("column subset must be non-empty")
    if J.min() < 0 or J.max() >= G.M:
        raise ValidationError(f"column index out of range [0, {G.M})")
    if np.unique(J).size != J.size or np.any(np.diff(J) < 0):
        raise ValidationError("column subset must be sorted and distinct")
    return DesignMatrix(G.G[:, J])
