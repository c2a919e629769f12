"""Unit-ball volumes and the Euler characteristic ``chi``.

Closed forms are used whenever the norm kind has one; otherwise a Monte
Carlo hit-ratio estimate inside the bounding ellipsoid is returned with a 95%
confidence half-width.  Samples are drawn in fixed-size blocks whose seeds
are spawned from the master seed, so the estimate does not depend on how
blocks are distributed over workers.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np
from scipy.special import gammaln

from .norms import NormedZModule, NormSpec

DEFAULT_SEED = 20240501
DEFAULT_SAMPLES = 1_000_000
DEFAULT_REL_CI = 0.01
BLOCK = 50_000
Z95 = 1.959963984540054


class VolumeError(RuntimeError):
    pass


@dataclass(frozen=True)
class VolumeResult:
    value: float
    method: str  # "exact" or "monte_carlo"
    half_width: float = 0.0
    samples: int = 0
    log_value: float | None = None

    def __post_init__(self):
        if self.method == "exact" and self.half_width != 0:
            raise ValueError("exact volumes carry no confidence interval")
        if self.log_value is None:
            object.__setattr__(self, "log_value", math.log(self.value))

    @property
    def log_half_width(self) -> float:
        """Half-width of the induced interval for ``log(value)`` (first order)."""
        return self.half_width / self.value if self.value > 0 else math.inf

    def to_json(self) -> dict:
        return asdict(self)


def unit_ball_volume(n: int) -> float:
    """Volume of the Euclidean unit ball in ``R^n``."""
    return math.exp(n / 2 * math.log(math.pi) - gammaln(n / 2 + 1))


def _sample_ellipsoid(rng: np.random.Generator, chol_inv_t: np.ndarray, r: float, size: int) -> np.ndarray:
    n = chol_inv_t.shape[0]
    g = rng.standard_normal((size, n))
    g /= np.linalg.norm(g, axis=1)[:, None]
    rad = rng.random(size) ** (1.0 / n)
    return (g * rad[:, None] * r) @ chol_inv_t.T


def wilson_half_width(hits: int, drawn: int) -> float:
    """Half-width of the 95% Wilson interval for ``hits / drawn``, measured from the point estimate.

    Unlike the normal approximation it stays positive when every sample hits.
    """
    p = hits / drawn
    z2n = Z95 * Z95 / drawn
    centre = (p + z2n / 2) / (1 + z2n)
    spread = Z95 * math.sqrt(p * (1 - p) / drawn + z2n / (4 * drawn)) / (1 + z2n)
    return max(p - (centre - spread), centre + spread - p)


def monte_carlo_volume(
    norm: NormSpec,
    *,
    seed: int = DEFAULT_SEED,
    samples: int = DEFAULT_SAMPLES,
    rel_ci: float | None = DEFAULT_REL_CI,
    min_samples: int = 4 * BLOCK,
    workers: int = 1,
) -> VolumeResult:
    """Hit-ratio estimate of ``vol{||x|| <= 1}`` inside the bounding ellipsoid.

    Sampling stops at the first block boundary past ``min_samples`` where the
    relative 95% half-width is below ``rel_ci``; if that never happens within
    ``samples`` a :class:`VolumeError` is raised (``rel_ci=None`` disables the
    target and always uses the full budget).
    """
    q, c = norm.bounding_form()
    n = norm.dim
    lchol = np.linalg.cholesky(q)
    # x = L^{-T} z maps the ball |z| <= sqrt(c) onto x^T Q x <= c
    linv_t = np.linalg.inv(lchol).T
    r = math.sqrt(c) * (1 + 1e-12)
    ell_log = math.log(unit_ball_volume(n)) + n * math.log(r) - 0.5 * float(np.linalg.slogdet(q)[1])
    ell_vol = math.exp(ell_log)
    n_blocks = max(1, math.ceil(samples / BLOCK))
    seeds = np.random.SeedSequence(seed).spawn(n_blocks)

    def block_hits(b: int) -> int:
        x = _sample_ellipsoid(np.random.default_rng(seeds[b]), linv_t, r, BLOCK)
        return int((norm.evaluate_many(x) <= 1.0).sum())

    workers = max(1, int(workers))
    hits = 0
    drawn = 0
    done = False
    with ThreadPoolExecutor(max_workers=workers) as pool:
        for start in range(0, n_blocks, workers):
            # blocks are evaluated in waves but consumed in order, so the
            # stopping point does not depend on the number of workers
            wave = list(pool.map(block_hits, range(start, min(start + workers, n_blocks))))
            for h in wave:
                hits += h
                drawn += BLOCK
                p = hits / drawn
                half = wilson_half_width(hits, drawn) * ell_vol
                if rel_ci is not None and drawn >= min_samples and hits and half <= rel_ci * p * ell_vol:
                    done = True
                    break
            if done:
                break
    if hits == 0:
        raise VolumeError("no Monte Carlo sample hit the unit ball")
    p = hits / drawn
    half = wilson_half_width(hits, drawn) * ell_vol
    if rel_ci is not None and half > rel_ci * p * ell_vol:
        raise VolumeError(f"relative CI {half / (p * ell_vol):.4f} above target {rel_ci} after {drawn} samples")
    return VolumeResult(p * ell_vol, "monte_carlo", half, drawn, math.log(p) + ell_log)


def ball_volume(
    norm: NormSpec,
    *,
    seed: int = DEFAULT_SEED,
    samples: int = DEFAULT_SAMPLES,
    rel_ci: float | None = DEFAULT_REL_CI,
    force_monte_carlo: bool = False,
    workers: int = 1,
) -> VolumeResult:
    if not force_monte_carlo:
        ex = norm.exact_volume()
        if ex is not None:
            return VolumeResult(ex[0], "exact", 0.0, 0, ex[1])
    return monte_carlo_volume(norm, seed=seed, samples=samples, rel_ci=rel_ci, workers=workers)


@dataclass(frozen=True)
class ChiResult:
    value: float
    half_width: float
    method: str

    def to_json(self) -> dict:
        return asdict(self)


def chi(module: NormedZModule, **kw) -> ChiResult:
    """``log vol(B) + log #M_tor`` with the chosen basis of covolume one."""
    tors = module.torsion.log_order
    if module.rank == 0:
        return ChiResult(tors, 0.0, "exact")
    vol = ball_volume(module.norm, **kw)
    return ChiResult(vol.log_value + tors, vol.log_half_width, vol.method)
