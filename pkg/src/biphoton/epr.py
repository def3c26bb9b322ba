"""Monte Carlo pair statistics for the classical and EPR inequalities (hbar = 1).

Draws come from Philox streams keyed by the seed and the block index, so any
block of pairs can be regenerated independently of the others.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from typing import Union

import numpy as np
from numpy.typing import NDArray

from .errors import InsufficientSamples, InvalidModel

LARGE_FACTOR = 1e3
BLOCK = 4096


@dataclass(frozen=True)
class StateOne:
    """Momenta fixed per pair (p2 = -p1); positions independent and broad."""

    sigma_p: float = 1.0
    sigma_x: float | None = None

    def __post_init__(self):
        if self.sigma_x is None:
            object.__setattr__(self, "sigma_x", LARGE_FACTOR * self.sigma_p)
        _check_positive(self, ("sigma_p", "sigma_x"))
        if self.sigma_x * self.sigma_p < 1:
            raise InvalidModel("StateOne violates dx * dp >= 1 per particle")


@dataclass(frozen=True)
class StateTwo:
    """Positions fixed per pair (x1 - x2 = x0); momenta independent and broad."""

    x0: float = 0.0
    sigma_x: float = 1.0
    sigma_p: float | None = None

    def __post_init__(self):
        if self.sigma_p is None:
            object.__setattr__(self, "sigma_p", LARGE_FACTOR * self.sigma_x)
        _check_positive(self, ("sigma_x", "sigma_p"))
        if self.sigma_x * self.sigma_p < 1:
            raise InvalidModel("StateTwo violates dx * dp >= 1 per particle")


@dataclass(frozen=True)
class StateThree:
    """Exact alternation: even-indexed pairs in state one, odd-indexed in state two."""

    one: StateOne = dc_field(default_factory=StateOne)
    two: StateTwo = dc_field(default_factory=StateTwo)


@dataclass(frozen=True)
class EntangledGaussian:
    sigma_sum: float
    sigma_diff: float
    sigma_single: float = 1.0
    x0: float = 0.0

    def __post_init__(self):
        _check_positive(self, ("sigma_sum", "sigma_diff", "sigma_single"))
        if not (self.sigma_sum < self.sigma_single and self.sigma_diff < self.sigma_single):
            raise InvalidModel("EntangledGaussian needs sigma_sum, sigma_diff < sigma_single")
        if self.sigma_single**2 < 1:
            raise InvalidModel("EntangledGaussian violates dx * dp >= 1 per particle")

    def complementary_products(self) -> tuple[float, float]:
        """Analytic d(x1+x2)*d(p1+p2) and d(x1-x2)*d(p1-p2)."""
        x_sum = np.sqrt(4 * self.sigma_single**2 - self.sigma_diff**2)
        p_diff = np.sqrt(4 * self.sigma_single**2 - self.sigma_sum**2)
        return float(x_sum * self.sigma_sum), float(self.sigma_diff * p_diff)

    def respects_complementarity(self) -> bool:
        return min(self.complementary_products()) >= 1.0


ClassicalPairModel = Union[StateOne, StateTwo, StateThree, EntangledGaussian]


def _check_positive(obj, names):
    for name in names:
        value = getattr(obj, name)
        if not (np.isfinite(value) and value > 0):
            raise InvalidModel(f"{name} must be positive and finite, got {value}")


@dataclass(frozen=True, eq=False)
class PairSample:
    x1: NDArray
    x2: NDArray
    p1: NDArray
    p2: NDArray

    def __len__(self) -> int:
        return self.x1.size


def _block_rng(seed: int, block: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(block,))))


def _draw(model, rng: np.random.Generator, n: int, offset: int):
    if isinstance(model, StateOne):
        p1 = rng.normal(0.0, model.sigma_p, n)
        x = rng.normal(0.0, model.sigma_x, (2, n))
        return x[0], x[1], p1, -p1
    if isinstance(model, StateTwo):
        x1 = rng.normal(0.0, model.sigma_x, n)
        p = rng.normal(0.0, model.sigma_p, (2, n))
        return x1, x1 - model.x0, p[0], p[1]
    if isinstance(model, StateThree):
        a = _draw(model.one, rng, n, offset)
        b = _draw(model.two, rng, n, offset)
        even = (np.arange(offset, offset + n) % 2) == 0
        return tuple(np.where(even, u, v) for u, v in zip(a, b))
    if isinstance(model, EntangledGaussian):
        s = 4 * model.sigma_single**2
        p_sum = rng.normal(0.0, model.sigma_sum, n)
        p_dif = rng.normal(0.0, np.sqrt(s - model.sigma_sum**2), n)
        x_dif = rng.normal(model.x0, model.sigma_diff, n)
        x_sum = rng.normal(0.0, np.sqrt(s - model.sigma_diff**2), n)
        return ((x_sum + x_dif) / 2, (x_sum - x_dif) / 2,
                (p_sum + p_dif) / 2, (p_sum - p_dif) / 2)
    raise InvalidModel(f"unknown pair model {model!r}")


def sample_pairs(model: ClassicalPairModel, n: int, seed: int) -> PairSample:
    """Draw ``n`` pairs; identical (model, n, seed) gives identical arrays."""
    if int(n) != n or n < 1:
        raise InsufficientSamples("need at least one pair")
    n = int(n)
    parts = []
    for block, start in enumerate(range(0, n, BLOCK)):
        m = min(BLOCK, n - start)
        parts.append(_draw(model, _block_rng(int(seed), block), m, start))
    x1, x2, p1, p2 = (np.concatenate(col) for col in zip(*parts))
    return PairSample(x1, x2, p1, p2)


@dataclass(frozen=True)
class SpreadReport:
    dp1: float
    dp2: float
    dx1: float
    dx2: float
    d_psum: float
    d_xdiff: float
    n: int
    seed: int | None = None

    @property
    def classical_p(self) -> bool:
        return self.d_psum > max(self.dp1, self.dp2)

    @property
    def classical_x(self) -> bool:
        return self.d_xdiff > max(self.dx1, self.dx2)

    @property
    def epr_p(self) -> bool:
        return self.d_psum < min(self.dp1, self.dp2)

    @property
    def epr_x(self) -> bool:
        return self.d_xdiff < min(self.dx1, self.dx2)

    @property
    def classical(self) -> bool:
        return self.classical_p and self.classical_x

    @property
    def epr(self) -> bool:
        return self.epr_p and self.epr_x

    def as_dict(self) -> dict:
        out = {k: getattr(self, k) for k in
               ("dp1", "dp2", "dx1", "dx2", "d_psum", "d_xdiff", "n", "seed")}
        for k in ("classical_p", "classical_x", "classical", "epr_p", "epr_x", "epr"):
            out[k] = getattr(self, k)
        return out


def evaluate_inequalities(samples: PairSample, seed: int | None = None) -> SpreadReport:
    n = len(samples)
    if n < 2:
        raise InsufficientSamples("spreads need at least two pairs")

    def sd(a):
        return float(np.std(a, ddof=1))

    return SpreadReport(
        dp1=sd(samples.p1), dp2=sd(samples.p2), dx1=sd(samples.x1), dx2=sd(samples.x2),
        d_psum=sd(samples.p1 + samples.p2), d_xdiff=sd(samples.x1 - samples.x2),
        n=n, seed=seed,
    )
