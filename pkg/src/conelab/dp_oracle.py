"""Exact dynamic-programming evolution of the killed walk.

Evolves the sub-probability measure q_n(y) = P(x0 + S(n) = y, alive at n) on
a truncated lattice window, rescaling by the survival rate each step so the
series stays O(1) deep into the tail.  This is the floating-point oracle for
every limit law: survival tails, hazard ratios, conditional laws, exit
distributions, and bridges.
"""

from dataclasses import dataclass, field

import numpy as np

from ._lattice import evolve_measure, evolve_survival, leak_weights, make_grid, shift_add
from .cramer import log_mgf, solve_cramer_point
from .errors import ConfigError, WindowTooSmallError
from .model import ConeSpec, StepLaw, cone_contains

LEAK_TOL = 1e-12


@dataclass
class DpSeries:
    """Killed-walk evolution from one start, rescaled by ``rescale_by`` per step.

    ``survival[n]`` is P(tau > n) / rescale_by^n; ``tables[n]`` holds the full
    rescaled measure at the retained times.
    """

    x0: np.ndarray
    n_max: int
    rescaled: bool
    rescale_by: float
    survival: np.ndarray
    grid: object
    law: StepLaw
    cone: ConeSpec
    tables: dict = field(default_factory=dict)
    leak_max: float = 0.0

    def raw_survival_log(self, n):
        """log P(tau > n), reconstructed from the rescaled series."""
        return n * np.log(self.rescale_by) + np.log(self.survival[n])


def dp_evolve(law, cone, x0, n_max, rescale_by=1.0, L=60, retain=()):
    """Evolve the killed measure for ``n_max`` steps on the window max|y| <= L.

    Truncation is monitored: any step whose about-to-be-truncated mass (points
    leaving the window while staying in the cone) exceeds 1e-12 of the current
    rescaled survival aborts with a suggested larger window.
    """
    x0 = np.asarray(x0, dtype=int)
    if not cone_contains(cone, x0[None, :])[0]:
        raise ConfigError(f"start {x0.tolist()} is not inside the open cone")
    pad = int(np.max(np.abs(law.support)))
    grid = make_grid(cone, L, pad=pad)
    start_idx = tuple(x0 - grid.lo)
    if np.any(x0 - grid.lo < 0) or np.any(x0 - grid.lo >= np.asarray(grid.shape)) \
            or not grid.mask[start_idx]:
        raise ConfigError(f"start {x0.tolist()} is outside the window (L = {L})")
    leak = leak_weights(grid, cone, law.support, law.probs)
    retain = set(int(n) for n in retain)
    q = np.zeros(grid.shape)
    q[start_idx] = 1.0
    out = np.empty_like(q)
    survival = np.empty(n_max + 1)
    survival[0] = 1.0
    tables = {}
    if 0 in retain:
        tables[0] = q.copy()
    leak_max = 0.0
    for n in range(1, n_max + 1):
        leaked = float((q * leak).sum()) / rescale_by
        out = evolve_measure(q, law.support, law.probs, grid.mask, out=out)
        out /= rescale_by
        q, out = out, q
        b_n = float(q.sum())
        survival[n] = b_n
        if b_n > 0.0:
            leak_rel = leaked / b_n
            leak_max = max(leak_max, leak_rel)
            if leak_rel >= LEAK_TOL:
                raise WindowTooSmallError(
                    f"window L = {L} truncates {leak_rel:.2e} of the surviving mass "
                    f"at step {n}; retry with L >= {int(np.ceil(1.4 * L)) + pad}",
                    suggested_L=int(np.ceil(1.4 * L)) + pad,
                )
        if n in retain:
            tables[n] = q.copy()
    return DpSeries(
        x0=x0, n_max=n_max, rescaled=(rescale_by != 1.0), rescale_by=float(rescale_by),
        survival=survival, grid=grid, law=law, cone=cone, tables=tables,
        leak_max=float(leak_max),
    )


# ---------------------------------------------------------------------------
# statistics on a finished series

def exit_time_pmf_rescaled(series, n):
    """P(tau = n) / rescale_by^n."""
    if n < 1 or n > series.n_max:
        raise ConfigError(f"exit time {n} outside the computed horizon")
    return series.survival[n - 1] / series.rescale_by - series.survival[n]


def hazard_ratio(series, n):
    """P(tau = n) / P(tau > n); the rescaling cancels."""
    return exit_time_pmf_rescaled(series, n) / series.survival[n]


def conditional_law(series, n):
    """Normalized law of the surviving walk at time n (needs a retained table)."""
    if n not in series.tables:
        raise ConfigError(f"no table retained at n = {n}")
    q = series.tables[n]
    return q / q.sum()


def exit_position_law(series, n):
    """Normalized law of the exit position at tau = n (needs the table at n - 1).

    One more step is applied to the retained measure at n - 1 and the mass
    landing outside the open cone is collected, per landing point.
    """
    if n - 1 not in series.tables:
        raise ConfigError(f"exit law at {n} needs the table retained at {n - 1}")
    q = series.tables[n - 1]
    grid = series.grid
    full = np.zeros(grid.shape)
    for z, p in zip(series.law.support, series.law.probs):
        shift_add(full, q, z, p)
    outside = ~cone_contains(series.cone, grid.coords.reshape(-1, grid.dim)) \
        .reshape(grid.shape)
    exit_mass = np.where(outside, full, 0.0)
    total = exit_mass.sum()
    if total <= 0.0:
        raise ConfigError(f"no exit mass at n = {n}")
    return exit_mass / total, outside


def bridge_value(series, n, t, A, z, aux=None):
    """Conditioned bridge mass P(walk at [t n] in A | alive at n, endpoint z).

    Uses the Markov factorization through the retained tables; ``aux`` maps a
    midpoint y to a DpSeries started at y (defaults to the main series when
    y equals its start).
    """
    m = int(np.floor(t * n))
    z = np.asarray(z, dtype=int)
    aux = aux or {}
    q_m = series.tables.get(m)
    q_n = series.tables.get(n)
    if q_m is None or q_n is None:
        raise ConfigError(f"bridge needs tables at {m} and {n}")
    denom = series.grid.value_at(q_n, z)
    if denom <= 0.0:
        raise ConfigError(f"endpoint {z.tolist()} has no mass at n = {n}")
    total = 0.0
    for y in A:
        y = np.asarray(y, dtype=int)
        first = series.grid.value_at(q_m, y)
        y_series = aux.get(tuple(y))
        if y_series is None:
            if np.array_equal(y, series.x0):
                y_series = series
            else:
                raise ConfigError(f"no auxiliary series for midpoint {y.tolist()}")
        q_rest = y_series.tables.get(n - m)
        if q_rest is None:
            raise ConfigError(f"midpoint series lacks the table at {n - m}")
        total += first * y_series.grid.value_at(q_rest, z)
    return total / denom


def dp_statistics(series, queries, aux=None):
    """Evaluate a list of query dicts against a finished series.

    Supported kinds: ``survival``, ``exit_time_pmf``, ``hazard``,
    ``conditional``, ``exit_position``, ``bridge``.
    """
    results = []
    for query in queries:
        kind = query["kind"]
        if kind == "survival":
            n = query["n"]
            results.append({"kind": kind, "n": n,
                            "rescaled": series.survival[n],
                            "raw_log": series.raw_survival_log(n)})
        elif kind == "exit_time_pmf":
            results.append({"kind": kind, "n": query["n"],
                            "rescaled": exit_time_pmf_rescaled(series, query["n"])})
        elif kind == "hazard":
            results.append({"kind": kind, "n": query["n"],
                            "value": hazard_ratio(series, query["n"])})
        elif kind == "conditional":
            results.append({"kind": kind, "n": query["n"],
                            "law": conditional_law(series, query["n"])})
        elif kind == "exit_position":
            law, outside = exit_position_law(series, query["n"])
            results.append({"kind": kind, "n": query["n"], "law": law,
                            "outside_mask": outside})
        elif kind == "bridge":
            results.append({"kind": kind, "n": query["n"], "t": query["t"],
                            "value": bridge_value(series, query["n"], query["t"],
                                                  query["A"], query["z"], aux=aux)})
        else:
            raise ConfigError(f"unknown statistics query kind {kind!r}")
    return results


def check_tilt_identity(law, cramer, cone, x0, n_max=20):
    """Max absolute defect of q_n(x0, y) = c^n e^(h.(x0-y)) d_n(x0, y), n <= n_max.

    The drifted walk evolved under the original law and the driftless walk
    evolved under the tilted law are compared cell by cell; the identity is
    algebraic, so the defect is pure floating-point noise.  The window is
    sized to hold every reachable point, removing truncation entirely.
    """
    if n_max > 40:
        raise ConfigError("identity check is meant for short horizons (n_max <= 40)")
    x0 = np.asarray(x0, dtype=int)
    pad = int(np.max(np.abs(law.support)))
    L = int(np.max(np.abs(x0))) + n_max * pad + 1
    grid = make_grid(cone, L, pad=pad)
    start = tuple(x0 - grid.lo)
    q = np.zeros(grid.shape)
    q[start] = 1.0
    dmat = q.copy()
    weight = np.exp((x0 @ cramer.h) - grid.coords.reshape(-1, grid.dim) @ cramer.h) \
        .reshape(grid.shape)
    worst = 0.0
    q_out = np.empty_like(q)
    d_out = np.empty_like(q)
    for _ in range(1, n_max + 1):
        q_out = evolve_measure(q, law.support, law.probs, grid.mask, out=q_out)
        q_out /= cramer.c
        q, q_out = q_out, q
        d_out = evolve_measure(dmat, cramer.tilted.support, cramer.tilted.probs,
                               grid.mask, out=d_out)
        dmat, d_out = d_out, dmat
        worst = max(worst, float(np.max(np.abs(q - weight * dmat))))
    return worst


def survival_scan(law, cone, starts, n_max, L=None, sigmas=8.0):
    """P(tau_x > n) for every start simultaneously, by backward recursion.

    Returns an array of shape (len(starts), n_max + 1).  The window is sized
    so that the truncation outside it is a ``sigmas``-sigma event for the
    diffusive spread, far below the oracle's resolution.
    """
    starts = [np.asarray(x, dtype=int) for x in starts]
    R, _, hess = log_mgf(law, np.zeros(law.dim))
    sigma_max = float(np.sqrt(np.linalg.eigvalsh(hess)[-1]))
    if L is None:
        L = int(max(np.max(np.abs(s)) for s in starts)
                + np.ceil(sigmas * sigma_max * np.sqrt(n_max))
                + np.ceil(abs(float(np.linalg.norm(law.mean()))) * n_max))
    grid = make_grid(cone, L)
    s = np.where(grid.mask, 1.0, 0.0)
    out = np.empty_like(s)
    idx = []
    for x in starts:
        off = x - grid.lo
        if np.any(off < 0) or np.any(off >= np.asarray(grid.shape)) or not grid.mask[tuple(off)]:
            raise ConfigError(f"start {x.tolist()} outside the scan window")
        idx.append(tuple(off))
    result = np.empty((len(starts), n_max + 1))
    for j, ix in enumerate(idx):
        result[j, 0] = 1.0
    for n in range(1, n_max + 1):
        out = evolve_survival(s, law.support, law.probs, grid.mask, out=out)
        s, out = out, s
        for j, ix in enumerate(idx):
            result[j, n] = s[ix]
    return result


def halfspace_1d(law, a, x0_height, n_max, L=None):
    """Project the walk onto a . X and run the killed half-line oracle.

    The projected one-dimensional law must be integer valued with negative
    drift.  The returned series is rescaled by the projected survival rate
    c1 = min_t E[exp(t a . X)] (available as ``series.rescale_by``), so the
    remaining decay is the pure polynomial factor.
    """
    a = np.asarray(a, dtype=float)
    proj = law.support @ a
    rounded = np.rint(proj)
    if np.max(np.abs(proj - rounded)) > 1e-9:
        raise ConfigError("projection a . X is not integer valued on the support")
    drift = float(law.probs @ proj)
    if drift >= 0.0:
        raise ConfigError(f"projected drift {drift} is not negative")
    values = {}
    for v, p in zip(rounded.astype(int), law.probs):
        values[v] = values.get(v, 0.0) + p
    support_1d = np.array(sorted(values), dtype=int)[:, None]
    probs_1d = np.array([values[int(v)] for v in support_1d[:, 0]])
    law_1d = StepLaw(support=support_1d, probs=probs_1d)
    cd = solve_cramer_point(law_1d)
    if L is None:
        L = int(max(80, x0_height + 8 * np.sqrt(n_max)))
    cone_1d = ConeSpec.halfspace(np.array([1.0]))
    return dp_evolve(law_1d, cone_1d, np.array([x0_height]), n_max,
                     rescale_by=cd.c, L=L)
