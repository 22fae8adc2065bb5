"""Continuous and discrete harmonic functions of the killed walk.

The continuous function u solves the Dirichlet problem on the whitened image
cone and is homogeneous of degree p.  Its discrete counterpart V satisfies
the one-step mean-value equation of the killed driftless walk; V' is the same
object for the reversed walk.  Drift-adjusted versions U(x) = e^(h.x) V(Mx)
and U'(y) = e^(-h.y) V'(My) and the normalizer kappa feed every limit check
downstream, always through scale-free ratios.

V is the unique solution of the killed-kernel fixed-point equation on a
truncated window with u as far-field data on the one-step exterior ring.
The truncated kernel has spectral radius below one, so the equation is
solved directly (sparse); iterating against a zero-padded exterior instead
would decay geometrically to zero and never stabilize.  When u is itself
discretely harmonic (the four-step reference walk on the quadrant), V
equals u on the window to machine precision.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sparse
import scipy.sparse.linalg as spla

from ._lattice import WindowGrid, kernel_matrix, leak_weights, make_grid, shift_add
from .errors import ConfigError, NumericsError, WindowTooSmallError
from .model import check_acute_cone_condition, cone_contains

DEFAULT_WINDOW = 60.0
DEFAULT_N_ITER = 5000
CONVERGE_TOL = 1e-6
TAIL_FRACTION = 1e-8     # certified tail of the normalizer sum, relative


@dataclass
class ContinuousHarmonic:
    """Closed-form positive harmonic function of a cone, zero on the boundary."""

    kind: str            # "wedge2d" | "orthant_product" | "halfline"
    p: float
    theta1: float = 0.0  # wedge orientation (wedge2d only)


def continuous_harmonic_for(cone_image, p):
    if cone_image.kind == "wedge2d":
        return ContinuousHarmonic(kind="wedge2d", p=float(p), theta1=cone_image.theta0)
    if cone_image.kind == "orthant":
        return ContinuousHarmonic(kind="orthant_product", p=float(cone_image.dim))
    if cone_image.kind == "halfspace":
        return ContinuousHarmonic(kind="halfline", p=1.0)
    raise ConfigError(f"no closed-form harmonic function for cone {cone_image.kind!r}")


def u_eval(ch, x):
    """Evaluate u at a single point of the closed image cone."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    return float(u_eval_many(ch, x[None, :])[0])


def u_eval_many(ch, pts, tol=1e-9):
    """Vectorized u over an (N, d) array; raises on points outside the closed cone."""
    pts = np.asarray(pts, dtype=float)
    if ch.kind == "orthant_product":
        if np.any(pts < -tol * (1.0 + np.abs(pts))):
            raise ConfigError("point outside the closed orthant")
        return np.prod(np.maximum(pts, 0.0), axis=1)
    if ch.kind == "halfline":
        vals = pts[:, 0]
        if np.any(vals < -tol * (1.0 + np.abs(vals))):
            raise ConfigError("point outside the closed half-line")
        return np.maximum(vals, 0.0)
    if ch.kind == "wedge2d":
        r = np.hypot(pts[:, 0], pts[:, 1])
        opening = np.pi / ch.p
        rel = np.mod(np.arctan2(pts[:, 1], pts[:, 0]) - ch.theta1, 2.0 * np.pi)
        rel = np.where(rel > np.pi + opening / 2.0, rel - 2.0 * np.pi, rel)
        if np.any((rel < -tol) | (rel > opening + tol)):
            raise ConfigError("point outside the closed wedge")
        rel = np.clip(rel, 0.0, opening)
        out = r ** ch.p * np.sin(ch.p * rel)
        return np.where(r == 0.0, 0.0, np.maximum(out, 0.0))
    raise ConfigError(f"unknown harmonic kind {ch.kind!r}")


@dataclass
class HarmonicTables:
    """Window tables for V, V', U, U' and the normalizer kappa."""

    grid: WindowGrid
    L: float
    cone: object
    M: np.ndarray
    ch: ContinuousHarmonic
    V: np.ndarray
    Vprime: np.ndarray
    convergence_residual: float
    h: np.ndarray = None
    U: np.ndarray = None
    Uprime: np.ndarray = None
    kappa: float = None
    tail_bound: float = None
    growth_constant: float = None

    def value(self, table, x):
        return self.grid.value_at(table, np.asarray(x, dtype=int))

    def U_at(self, x):
        return self.value(self.U, x)

    def Uprime_at(self, x):
        return self.value(self.Uprime, x)


def build_V_tables(tilted, cone, ch, M, L=DEFAULT_WINDOW, n_iter=DEFAULT_N_ITER,
                   method="solve"):
    """Discrete harmonic functions V (tilted walk) and V' (reversed walk).

    The window holds lattice points y with max-norm of M y at most L; the
    one-step ring outside it carries the far-field data u(M y).  ``method``
    selects the direct sparse solve (default) or the equivalent fixed-point
    iteration capped at ``n_iter`` sweeps (small windows only; it converges
    geometrically at the truncated kernel's spectral gap).
    """
    drift = tilted.mean()
    if np.linalg.norm(drift) > 1e-10:
        raise ConfigError("V construction needs the driftless tilted law")
    M = np.asarray(M, dtype=float)
    pad = int(np.max(np.abs(tilted.support)))
    grid = make_grid(cone, L, M=M, pad=pad)
    if grid.n_states == 0:
        raise ConfigError("window contains no cone points; increase L")
    V, res_v = _solve_killed_harmonic(grid, cone, ch, M, tilted.support, tilted.probs,
                                      method, n_iter, L)
    rev = tilted.reversed()
    Vp, res_vp = _solve_killed_harmonic(grid, cone, ch, M, rev.support, rev.probs,
                                        method, n_iter, L)
    return HarmonicTables(
        grid=grid, L=float(L), cone=cone, M=M, ch=ch,
        V=V, Vprime=Vp, convergence_residual=float(max(res_v, res_vp)),
    )


def _solve_killed_harmonic(grid, cone, ch, M, support, probs, method, n_iter, L):
    ring_u = _ring_payoff(grid, cone, ch, M)
    b_box = np.zeros(grid.shape)
    for z, p in zip(support, probs):
        # b(x) += p * u(M(x+z)) for ring neighbours
        shift_add(b_box, ring_u, -np.asarray(z), p)
    b_box[~grid.mask] = 0.0
    T = kernel_matrix(grid, support, probs)
    b = b_box[grid.mask]
    n = grid.n_states
    if method == "solve":
        A = sparse.eye(n, format="csr") - T
        v = spla.spsolve(A.tocsc(), b)
    elif method == "iterate":
        v0 = u_eval_many(ch, grid.coords[grid.mask] @ M.T)
        v = _fixed_point_iterate(T, b, v0, grid, M, L, n_iter)
    else:
        raise ConfigError(f"unknown V construction method {method!r}")
    if np.any(v <= 0.0):
        raise NumericsError("killed harmonic solve produced nonpositive values")
    V = np.zeros(grid.shape)
    V[grid.mask] = v
    # residual of the mean-value equation at points whose neighbours stay inside
    interior = grid.mask & (leak_weights(grid, cone, support, probs) == 0.0)
    resid = np.abs(T @ v + b - v)
    rel = np.zeros(grid.shape)
    rel[grid.mask] = resid / np.maximum(v, 1e-300)
    residual = float(rel[interior].max()) if interior.any() else float(rel[grid.mask].max())
    return V, residual


def _fixed_point_iterate(T, b, v0, grid, M, L, n_iter):
    inner = (np.max(np.abs(grid.coords.reshape(-1, grid.dim) @ M.T), axis=1)
             .reshape(grid.shape) <= L / 2.0)[grid.mask]
    v = v0.copy()
    for _ in range(n_iter):
        v_new = T @ v + b
        denom = np.maximum(np.abs(v_new[inner]), 1e-300)
        change = np.max(np.abs(v_new[inner] - v[inner]) / denom) if inner.any() else 0.0
        v = v_new
        if change < CONVERGE_TOL:
            break
    return v


def _ring_payoff(grid, cone, ch, M):
    """u(M y) on cone points inside the box but outside the window."""
    flat = grid.coords.reshape(-1, grid.dim)
    in_cone = cone_contains(cone, flat)
    ring = in_cone.reshape(grid.shape) & ~grid.mask
    vals = np.zeros(grid.shape)
    if ring.any():
        vals[ring] = u_eval_many(ch, grid.coords[ring] @ M.T)
    return vals


def build_U_tables(tables, h):
    """Attach U, U', kappa and certify the truncated normalizer tail.

    kappa is 1 over the window sum of U'; the mass beyond the window is
    bounded through the acute-angle estimate h . y >= cos(worst) |h| |y| and
    the fitted polynomial growth of V', and must stay below a 1e-8 fraction
    of the window sum.
    """
    h = np.asarray(h, dtype=float)
    grid = tables.grid
    pts = grid.coords.reshape(-1, grid.dim)
    dots = (pts @ h).reshape(grid.shape)
    U = np.zeros(grid.shape)
    Up = np.zeros(grid.shape)
    U[grid.mask] = np.exp(dots[grid.mask]) * tables.V[grid.mask]
    Up[grid.mask] = np.exp(-dots[grid.mask]) * tables.Vprime[grid.mask]
    total = float(Up[grid.mask].sum())
    if not np.isfinite(total) or total <= 0.0:
        raise NumericsError("normalizer sum is not finite and positive")
    growth_C, tail, suggested = _tail_certificate(tables, h, total)
    if tail >= TAIL_FRACTION * total:
        raise WindowTooSmallError(
            f"normalizer tail bound {tail:.3e} exceeds {TAIL_FRACTION:.0e} of the "
            f"window sum {total:.6e}; increase the window to about L = {suggested}",
            suggested_L=suggested,
        )
    tables.h = h
    tables.U = U
    tables.Uprime = Up
    tables.kappa = 1.0 / total
    tables.tail_bound = float(tail)
    tables.growth_constant = float(growth_C)
    return tables


def _tail_certificate(tables, h, total, r_extend=150):
    grid, M, cone, ch = tables.grid, tables.M, tables.cone, tables.ch
    ok, worst = check_acute_cone_condition(cone, h)
    if not ok:
        raise NumericsError(
            "acute-angle condition fails: the normalizer sum over the cone diverges"
        )
    p = ch.p
    hat = grid.coords[grid.mask] @ M.T
    growth_C = float(np.max(tables.Vprime[grid.mask] /
                            (1.0 + np.linalg.norm(hat, axis=1) ** p)))
    row_norm = float(np.max(np.abs(M).sum(axis=1)))
    r_in = int(np.floor(tables.L / row_norm))
    d = grid.dim
    r_ext = r_in + r_extend
    # explicit sum over cone points between the inscribed box and r_ext
    if cone.kind == "orthant":
        axes = [np.arange(1, r_ext + 1)] * d
    else:
        axes = [np.arange(-r_ext, r_ext + 1)] * d
    mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, d)
    sup = np.max(np.abs(mesh), axis=1)
    sel = sup > r_in
    mesh = mesh[sel]
    sup = sup[sel]
    keep = cone_contains(cone, mesh)
    mesh = mesh[keep]
    sup = sup[keep]
    if mesh.shape[0]:
        weights = np.exp(-(mesh @ h)) * (1.0 + np.linalg.norm(mesh @ M.T, axis=1) ** p)
    else:
        weights = np.zeros(0)
    explicit = growth_C * float(weights.sum())
    remainder = growth_C * _shell_remainder(h, M, worst, p, d, r_ext)
    tail = explicit + remainder
    # suggested radius: smallest box whose outside-sum certificate passes
    suggested = None
    if tail >= TAIL_FRACTION * total and mesh.shape[0]:
        order = np.argsort(sup, kind="stable")
        csum = np.cumsum((growth_C * weights)[order][::-1])[::-1]
        for r_try in range(r_in + 1, r_ext):
            idx = np.searchsorted(sup[order], r_try + 1, side="left")
            rest = (csum[idx] if idx < csum.size else 0.0) + remainder
            if rest < TAIL_FRACTION * total:
                suggested = int(np.ceil((r_try + 1) * row_norm))
                break
    return growth_C, tail, suggested


def _shell_remainder(h, M, worst, p, d, r_ext):
    beta = float(np.linalg.norm(h) * np.cos(worst))
    sigma = float(np.linalg.norm(M, 2))
    k = r_ext + 1
    term = ((2 * k + 1) ** d - (2 * k - 1) ** d) * (1.0 + (sigma * np.sqrt(d) * k) ** p) \
        * np.exp(-beta * k)
    q = np.exp(-beta) * ((k + 1) / k) ** (d - 1 + p)
    if q >= 1.0:
        raise NumericsError("tail remainder does not contract; window far too small")
    return float(term / (1.0 - q))


def c_harmonicity_residual(tables, law, c):
    """Max relative defect of c U(x) = sum_z P(X=z) U(x+z) over interior points."""
    grid = tables.grid
    interior = grid.mask & (leak_weights(grid, tables.cone, law.support, law.probs) == 0.0)
    rhs = np.zeros(grid.shape)
    for z, p in zip(law.support, law.probs):
        shift_add(rhs, tables.U, -np.asarray(z), p)
    lhs = c * tables.U
    return float(np.max(np.abs(rhs[interior] - lhs[interior]) / lhs[interior]))


def qsd_fixed_point_residual(tables, law, c):
    """Max relative defect of sum_x U'(x) P(x + X = y) = c U'(y) over interior y."""
    grid = tables.grid
    rev = law.reversed()
    interior = grid.mask & (leak_weights(grid, tables.cone, rev.support, rev.probs) == 0.0)
    rhs = np.zeros(grid.shape)
    for z, p in zip(law.support, law.probs):
        # contribution U'(y - z) * P(X = z)
        shift_add(rhs, tables.Uprime, np.asarray(z), p)
    lhs = c * tables.Uprime
    return float(np.max(np.abs(rhs[interior] - lhs[interior]) / lhs[interior]))


def tables_rows(tables):
    """Rows (x1..xd, V, V', U, U') sorted lexicographically, ready for CSV."""
    pts = tables.grid.points()
    order = np.lexsort(pts.T[::-1])
    rows = []
    for i in order:
        x = pts[i]
        idx = tuple(x - tables.grid.lo)
        rows.append(list(x) + [tables.V[idx], tables.Vprime[idx],
                               tables.U[idx] if tables.U is not None else float("nan"),
                               tables.Uprime[idx] if tables.Uprime is not None else float("nan")])
    return rows
