"""Lattice window grids and shift-and-add kernels used by the DP modules.

A window is an axis-aligned integer box intersected with an open cone.
Arrays live on the full box; a boolean mask selects the cone points.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sparse


@dataclass
class WindowGrid:
    """Integer box ``lo + [0..shape)`` with a cone-membership mask."""

    lo: np.ndarray          # (d,) lower corner
    shape: tuple            # box shape
    mask: np.ndarray        # bool array over the box, True on cone points
    coords: np.ndarray      # (*shape, d) integer coordinates

    @property
    def dim(self):
        return len(self.shape)

    @property
    def n_states(self):
        return int(self.mask.sum())

    def points(self):
        """Masked lattice points as an (N, d) array in C order."""
        return self.coords[self.mask]

    def index_of(self, x):
        """Flat state index of lattice point x, or -1 if outside the window."""
        x = np.asarray(x, dtype=int)
        off = x - self.lo
        if np.any(off < 0) or np.any(off >= np.asarray(self.shape)):
            return -1
        if not self.mask[tuple(off)]:
            return -1
        return int(self._state_index()[tuple(off)])

    def value_at(self, arr, x):
        """Value of a box array at lattice point x (0.0 outside the box)."""
        x = np.asarray(x, dtype=int)
        off = x - self.lo
        if np.any(off < 0) or np.any(off >= np.asarray(self.shape)):
            return 0.0
        return float(arr[tuple(off)])

    def _state_index(self):
        if not hasattr(self, "_sidx"):
            sidx = -np.ones(self.shape, dtype=np.int64)
            sidx[self.mask] = np.arange(self.n_states)
            self._sidx = sidx
        return self._sidx


def make_grid(cone, L, M=None, pad=0):
    """Window grid for ``{y in cone : max-norm of (M y or y) <= L}``.

    ``pad`` extends the bounding box (still masked to the window) so the same
    box can hold one-step neighbours.
    """
    from .model import cone_contains  # local import, avoids cycle

    if M is None:
        reach = int(np.ceil(L))
    else:
        Minv = np.linalg.inv(M)
        reach = int(np.ceil(L * np.max(np.abs(Minv).sum(axis=1))))
    d = cone.dim
    if cone.kind == "orthant":
        # pad also extends below 1 so one-step exit positions stay in the box
        lo = (1 - pad) * np.ones(d, dtype=int)
        hi = reach + pad
        shape = tuple([hi - (1 - pad) + 1] * d)
    else:
        lo = -(reach + pad) * np.ones(d, dtype=int)
        shape = tuple([2 * (reach + pad) + 1] * d)
    coords = np.moveaxis(np.indices(shape), 0, -1) + lo
    pts = coords.reshape(-1, d)
    inside = cone_contains(cone, pts)
    if M is None:
        in_window = np.max(np.abs(pts), axis=1) <= L
    else:
        in_window = np.max(np.abs(pts @ M.T), axis=1) <= L
    mask = (inside & in_window).reshape(shape)
    return WindowGrid(lo=lo, shape=shape, mask=mask, coords=coords)


def shift_add(out, arr, z, w):
    """out[x] += w * arr[x - z] wherever both indices stay inside the box."""
    src = []
    dst = []
    for zi, n in zip(z, arr.shape):
        zi = int(zi)
        if zi >= 0:
            dst.append(slice(zi, n))
            src.append(slice(0, n - zi))
        else:
            dst.append(slice(0, n + zi))
            src.append(slice(-zi, n))
        if zi >= n or -zi >= n:
            return
    out[tuple(dst)] += w * arr[tuple(src)]


def evolve_measure(arr, support, probs, mask, out=None):
    """One forward step of the killed walk: sum_z p_z arr(y - z), zeroed off-mask."""
    if out is None:
        out = np.zeros_like(arr)
    else:
        out[...] = 0.0
    for z, p in zip(support, probs):
        shift_add(out, arr, z, p)
    out[~mask] = 0.0
    return out


def evolve_survival(arr, support, probs, mask, out=None):
    """One backward step: s'(x) = sum_z p_z s(x + z), zeroed off-mask."""
    if out is None:
        out = np.zeros_like(arr)
    else:
        out[...] = 0.0
    for z, p in zip(support, probs):
        shift_add(out, arr, -np.asarray(z), p)
    out[~mask] = 0.0
    return out


def kernel_matrix(grid, support, probs):
    """Sparse substochastic kernel P(x -> x+z) on the masked states (CSR)."""
    sidx = grid._state_index()
    rows, cols, vals = [], [], []
    for z, p in zip(support, probs):
        dst = np.full(grid.shape, -1, dtype=np.int64)
        shift_fill(dst, sidx, np.asarray(z))
        ok = grid.mask & (dst >= 0)
        rows.append(sidx[ok])
        cols.append(dst[ok])
        vals.append(np.full(int(ok.sum()), p))
    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    vals = np.concatenate(vals)
    n = grid.n_states
    return sparse.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()


def shift_fill(out, arr, z):
    """out[x] = arr[x + z] where defined (used to look up shifted state indices)."""
    src = []
    dst = []
    for zi, n in zip(z, arr.shape):
        zi = int(zi)
        if zi >= 0:
            dst.append(slice(0, n - zi))
            src.append(slice(zi, n))
        else:
            dst.append(slice(-zi, n))
            src.append(slice(0, n + zi))
        if zi >= n or -zi >= n:
            return
    out[tuple(dst)] = arr[tuple(src)]


def leak_weights(grid, cone, support, probs):
    """Per-cell probability of stepping out of the window while staying in the cone.

    Mass landing on such cells is truncated by the window, not killed by the
    cone; the DP monitors it to certify the window is large enough.
    """
    from .model import cone_contains

    leak = np.zeros(grid.shape)
    flat = grid.coords.reshape(-1, grid.dim)
    for z, p in zip(support, probs):
        in_mask_shifted = np.zeros(grid.shape, dtype=bool)
        shift_fill(in_mask_shifted, grid.mask, np.asarray(z))
        in_cone_shifted = cone_contains(cone, flat + np.asarray(z)).reshape(grid.shape)
        leak += p * (in_cone_shifted & ~in_mask_shifted)
    leak[~grid.mask] = 0.0
    return leak
