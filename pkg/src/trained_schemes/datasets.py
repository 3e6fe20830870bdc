"""Seeded random initial-data families and train/test dataset assembly.

Sampling uses the Philox 4x64 counter-based generator keyed by
(seed, stream index), so each sample owns an independent stream: record i of
the train split draws from stream i, record i of the test split from stream
2**32 + i. Datasets are therefore reproducible per sample and safe to
generate in parallel.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import InvalidSampleError

_TEST_STREAM_OFFSET = 2 ** 32

KL_LAMBDAS = np.array([1.0, 0.5, 0.25])   # lambda_l = 2**(1-l), l = 1..3
ROUGH_EPS = 0.2
SOD_EPS = 0.1
SOD_LEFT = (1.0, 1.0)    # (rho_l, p_l)
SOD_RIGHT = (0.4, 0.4)   # (rho_r, p_r)

#: family name -> (record length, default (low, high) draw range)
FAMILIES = {
    "kl": (3, (0.0, 1.0)),
    "rough": (3, (-1.0, 1.0)),
    "sod": (5, (-1.0, 1.0)),
    "scalar_u0": (1, (0.0, 1.0)),
}


def stream(seed: int, index: int) -> np.random.Generator:
    """Independent generator for (seed, stream index)."""
    key = (int(seed) & (2 ** 64 - 1)) * 2 ** 64 + int(index)
    return np.random.Generator(np.random.Philox(key=key))


@dataclass(frozen=True)
class KLData:
    """Three-term sine expansion with dyadic coefficient decay."""

    Y: np.ndarray

    def __post_init__(self):
        y = np.asarray(self.Y, dtype=float)
        if y.shape != (3,):
            raise InvalidSampleError(f"expected 3 coefficients, got shape {y.shape}")
        object.__setattr__(self, "Y", y)


@dataclass(frozen=True)
class RoughData:
    """Step function with random amplitude and random jump locations."""

    Y: np.ndarray
    eps: float = ROUGH_EPS

    def __post_init__(self):
        y = np.asarray(self.Y, dtype=float)
        if y.shape != (3,):
            raise InvalidSampleError(f"expected 3 coefficients, got shape {y.shape}")
        left = 1.0 / 3.0 + self.eps * y[1]
        right = 2.0 / 3.0 + self.eps * y[2]
        if not left < right:
            raise InvalidSampleError(f"degenerate support: left edge {left} >= right edge {right}")
        object.__setattr__(self, "Y", y)

    @property
    def edges(self) -> tuple[float, float]:
        return (1.0 / 3.0 + self.eps * self.Y[1], 2.0 / 3.0 + self.eps * self.Y[2])


@dataclass(frozen=True)
class SodData:
    """Randomly perturbed Sod shock-tube states with a random interface."""

    Y: np.ndarray
    eps: float = SOD_EPS

    def __post_init__(self):
        y = np.asarray(self.Y, dtype=float)
        if y.shape != (5,):
            raise InvalidSampleError(f"expected 5 coefficients, got shape {y.shape}")
        rho_l = SOD_LEFT[0] + self.eps * y[0]
        rho_r = SOD_RIGHT[0] + self.eps * y[2]
        p_l = SOD_LEFT[1] + self.eps * y[3]
        p_r = SOD_RIGHT[1] + self.eps * y[4]
        if min(rho_l, rho_r, p_l, p_r) <= 0:
            raise InvalidSampleError("perturbed density/pressure must stay positive")
        iface = 0.5 + self.eps * y[1]
        if not 0.0 < iface < 1.0:
            raise InvalidSampleError(f"interface {iface} outside (0, 1)")
        object.__setattr__(self, "Y", y)

    @property
    def interface(self) -> float:
        return 0.5 + self.eps * self.Y[1]


def eval_kl(d: KLData, x) -> np.ndarray:
    """Sum_{l=1..3} lambda_l Y_l sin(l pi x)."""
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    for l in range(3):
        out = out + KL_LAMBDAS[l] * d.Y[l] * np.sin((l + 1) * np.pi * x)
    return out


def eval_rough(d: RoughData, x) -> np.ndarray:
    """1 + eps*Y1 strictly between the two random edges, 0 outside."""
    x = np.asarray(x, dtype=float)
    left, right = d.edges
    return np.where((x > left) & (x < right), 1.0 + d.eps * d.Y[0], 0.0)


def eval_sod(d: SodData, x) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Piecewise-constant (rho, v, p) with v = 0 and the interface at 0.5 + eps*Y2."""
    x = np.asarray(x, dtype=float)
    iface = d.interface
    rho = np.where(x < iface, SOD_LEFT[0] + d.eps * d.Y[0], SOD_RIGHT[0] + d.eps * d.Y[2])
    p = np.where(x < iface, SOD_LEFT[1] + d.eps * d.Y[3], SOD_RIGHT[1] + d.eps * d.Y[4])
    return rho, np.zeros_like(x), p


def _record_valid(family: str, rec: np.ndarray) -> bool:
    try:
        if family == "rough":
            RoughData(rec)
        elif family == "sod":
            SodData(rec)
        return True
    except InvalidSampleError:
        return False


def _draw_record(family: str, k: int, lo: float, hi: float,
                 gen: np.random.Generator) -> np.ndarray:
    """Draw one record, re-drawing within the stream while invariants fail."""
    for _ in range(1000):
        rec = gen.uniform(lo, hi, k)
        if _record_valid(family, rec):
            return rec
    raise InvalidSampleError(f"could not draw a valid '{family}' record")


@dataclass(frozen=True)
class Dataset:
    family: str
    seed: int
    train: np.ndarray   # (train_size, k)
    test: np.ndarray    # (test_size, k)

    def to_json(self) -> str:
        return json.dumps({
            "family": self.family,
            "seed": self.seed,
            "train": self.train.tolist(),
            "test": self.test.tolist(),
        }, sort_keys=True)

    @staticmethod
    def from_json(text: str) -> "Dataset":
        d = json.loads(text)
        return Dataset(d["family"], int(d["seed"]),
                       np.array(d["train"], dtype=float),
                       np.array(d["test"], dtype=float))


def sample_dataset(family: str, train_size: int, test_size: int, seed: int,
                   train_range: tuple[float, float] | None = None,
                   test_range: tuple[float, float] | None = None) -> Dataset:
    """Draw disjoint train/test parameter records for one data family.

    Ranges default to the family's stated interval; a test record exactly
    equal to any train record is re-drawn from its own stream.
    """
    if family not in FAMILIES:
        raise ValueError(f"unknown family '{family}' (one of {sorted(FAMILIES)})")
    if train_size < 1 or test_size < 0:
        raise ValueError("train_size must be >= 1 and test_size >= 0")
    k, default_range = FAMILIES[family]
    tr_lo, tr_hi = train_range if train_range is not None else default_range
    te_lo, te_hi = test_range if test_range is not None else default_range

    train = np.stack([_draw_record(family, k, tr_lo, tr_hi, stream(seed, i))
                      for i in range(train_size)])
    test_rows = []
    for i in range(test_size):
        gen = stream(seed, _TEST_STREAM_OFFSET + i)
        rec = _draw_record(family, k, te_lo, te_hi, gen)
        while any(np.array_equal(rec, row) for row in train):
            rec = _draw_record(family, k, te_lo, te_hi, gen)
        test_rows.append(rec)
    test = np.stack(test_rows) if test_rows else np.empty((0, k))
    return Dataset(family, int(seed), train, test)
