"""Small shared utilities: quasi-random sequences, seed derivation, log-log fits."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor

import numpy as np

_PRIMES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29)

MASK64 = (1 << 64) - 1


def splitmix64(state: int) -> int:
    """One step of the splitmix64 generator; used to derive per-stage sub-seeds."""
    z = (state + 0x9E3779B97F4A7C15) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return (z ^ (z >> 31)) & MASK64


def derive_seed(seed: int, label: str) -> int:
    """Deterministic sub-seed for a named stage.

    Folds the label bytes into the master seed with splitmix64 steps so stages
    can be re-run in isolation with the same stream.
    """
    s = seed & MASK64
    for b in label.encode("utf-8"):
        s = splitmix64(s ^ b)
    return splitmix64(s)


def halton(n: int, dim: int, seed: int = 0, skip: int = 0) -> np.ndarray:
    """First n points of a (optionally rotated) Halton sequence in [0,1)^dim.

    A Cranley-Patterson rotation derived from `seed` decorrelates repeated
    uses while keeping the prefix property: halton(n) is a prefix of
    halton(m) for n < m and equal seeds.
    """
    if dim > len(_PRIMES):
        raise ValueError(f"halton supports at most {len(_PRIMES)} dimensions")
    out = np.empty((n, dim))
    idx = np.arange(skip + 1, skip + n + 1, dtype=np.int64)
    for d in range(dim):
        b = _PRIMES[d]
        v = np.zeros(n)
        denom = 1.0
        i = idx.copy()
        while i.max() > 0:
            denom *= b
            v += (i % b) / denom
            i //= b
        out[:, d] = v
    if seed:
        rot = np.empty(dim)
        s = seed & MASK64
        for d in range(dim):
            s = splitmix64(s)
            rot[d] = s / 2.0**64
        out = (out + rot) % 1.0
    return out


def loglog_fit(x: np.ndarray, y: np.ndarray) -> tuple[float, float, float]:
    """Least-squares fit of log y against log x.

    Returns (slope, intercept, r_squared). All y must be positive.
    """
    lx = np.log(np.asarray(x, dtype=float))
    ly = np.log(np.asarray(y, dtype=float))
    slope, intercept = np.polyfit(lx, ly, 1)
    pred = slope * lx + intercept
    ss_res = float(np.sum((ly - pred) ** 2))
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    return float(slope), float(intercept), r2


def parallel_map(fn, items, threads: int = 1) -> list:
    """Map fn over items, optionally with a thread pool.

    Results are collected in input order so reductions downstream are
    bitwise reproducible regardless of scheduling.
    """
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))
