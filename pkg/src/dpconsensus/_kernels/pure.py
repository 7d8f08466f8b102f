"""Pure-numpy simulation kernel, vectorized across Monte Carlo runs."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..noise import _laplace_from_uniform, _uniforms

BACKEND_NAME = "pure"


@dataclass
class KernelResult:
    v: np.ndarray  # (M, R) disagreement at record points
    gmean: np.ndarray  # (M, R) gauge mean at record points
    x_final: np.ndarray  # (M, n)
    diverged_at: np.ndarray  # (M,) step index, -1 if finite throughout
    max_tail_delta: np.ndarray  # (M,) max inf-norm step change for k >= tail_start
    x_rec: np.ndarray | None = None  # (M, R, n)
    y_rec: np.ndarray | None = None  # (M, R, n); NaN where y(k) is undefined


def simulate(
    weights: np.ndarray,
    laplacian: np.ndarray,
    gauge: np.ndarray,
    x0: np.ndarray,
    alpha: np.ndarray,
    bscale: np.ndarray,
    seed: int,
    run_ids: np.ndarray,
    record_idx: np.ndarray,
    collect_states: bool = False,
    collect_y: bool = False,
    tail_start: int | None = None,
    limit: float = 1e12,
) -> KernelResult:
    """Iterate x(k+1) = (I - alpha(k) L) x(k) + alpha(k) A w(k) for all runs.

    ``record_idx`` must be sorted, start at 0 and end at T = len(alpha).
    Diverged runs are frozen at zero and their later records become NaN.
    """
    n = weights.shape[0]
    m = len(run_ids)
    t_total = len(alpha)
    runs_col = np.asarray(run_ids, dtype=np.uint64)[:, None]
    agents_row = np.arange(n, dtype=np.uint64)[None, :]
    rec = np.asarray(record_idx)
    n_rec = len(rec)
    tail_from = t_total if tail_start is None else tail_start

    x = np.tile(np.asarray(x0, dtype=float), (m, 1))
    v = np.full((m, n_rec), np.nan)
    gmean = np.full((m, n_rec), np.nan)
    x_rec = np.full((m, n_rec, n), np.nan) if collect_states else None
    y_rec = np.full((m, n_rec, n), np.nan) if collect_y else None
    diverged_at = np.full(m, -1, dtype=np.int64)
    max_tail_delta = np.zeros(m)
    alive = np.ones(m, dtype=bool)

    lt = laplacian.T.copy()
    at = weights.T.copy()
    rec_pos = 0

    def record(pos, omega=None, with_y=False):
        z = x * gauge
        mu = z.mean(axis=1)
        dev = z - mu[:, None]
        v[alive, pos] = (dev[alive] ** 2).sum(axis=1)
        gmean[alive, pos] = mu[alive]
        if x_rec is not None:
            x_rec[alive, pos] = x[alive]
        if y_rec is not None and with_y:
            y = x if omega is None else x + omega
            y_rec[alive, pos] = y[alive]

    for k in range(t_total):
        b = bscale[k]
        if b > 0.0:
            u = _uniforms(seed, runs_col, agents_row, k)
            omega = _laplace_from_uniform(u, b)
        else:
            omega = None
        if rec_pos < n_rec and rec[rec_pos] == k:
            record(rec_pos, omega, with_y=True)
            rec_pos += 1
        a = alpha[k]
        if omega is None:
            x_new = x - a * (x @ lt)
        else:
            x_new = x - a * (x @ lt) + a * (omega @ at)
        if k >= tail_from:
            delta = np.abs(x_new - x).max(axis=1)
            np.maximum(max_tail_delta, delta, where=alive, out=max_tail_delta)
        x = x_new
        peak = np.abs(x).max(axis=1)
        bad = alive & (~np.isfinite(peak) | (peak > limit))
        if bad.any():
            diverged_at[bad] = k + 1
            alive &= ~bad
            x[bad] = 0.0
    if rec_pos < n_rec and rec[rec_pos] == t_total:
        record(rec_pos)

    return KernelResult(
        v=v,
        gmean=gmean,
        x_final=np.where(alive[:, None], x, np.nan),
        diverged_at=diverged_at,
        max_tail_delta=max_tail_delta,
        x_rec=x_rec,
        y_rec=y_rec,
    )
