"""d-dimensional Hilbert curve indexing.

The discrete Hilbert curve gives a total order on the cells of the
integer lattice [0, 2**bits)**dim in which consecutive cells are always
nearest neighbours (they differ by one step along exactly one axis).
Grid points of anisotropic tensor grids are ordered by embedding them
into the isotropic lattice of the finest axis resolution and encoding
the embedded coordinates.

Keys may need up to 128 bits (e.g. dim=6 at fine levels), so they are
plain Python integers throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

MAX_KEY_BITS = 128


@dataclass(frozen=True)
class CurveConfig:
    """Discrete Hilbert curve on the lattice [0, 2**bits)**dim."""

    dim: int
    bits: int

    def __post_init__(self) -> None:
        if self.dim < 1:
            raise ValueError(f"dimension must be positive, got {self.dim}")
        if self.bits < 1:
            raise ValueError(f"refinement must be positive, got {self.bits}")
        if self.dim * self.bits > MAX_KEY_BITS:
            raise ValueError(
                f"key width {self.dim * self.bits} exceeds {MAX_KEY_BITS} bits"
            )

    @property
    def key_bits(self) -> int:
        return self.dim * self.bits

    @property
    def side(self) -> int:
        return 1 << self.bits


# The encode/decode pair below works on the "transpose" form of the key:
# the nd key bits, read from the most significant one downwards, are dealt
# out cyclically over the d axis words.  Both directions first fix up the
# per-level rotations/reflections of the recursive construction and then
# apply (or undo) a Gray code.

def _axes_to_transpose(x: list[int], bits: int) -> None:
    n = len(x)
    m = 1 << (bits - 1)
    q = m
    while q > 1:
        p = q - 1
        for i in range(n):
            if x[i] & q:
                x[0] ^= p
            else:
                t = (x[0] ^ x[i]) & p
                x[0] ^= t
                x[i] ^= t
        q >>= 1
    for i in range(1, n):
        x[i] ^= x[i - 1]
    t = 0
    q = m
    while q > 1:
        if x[n - 1] & q:
            t ^= q - 1
        q >>= 1
    for i in range(n):
        x[i] ^= t


def _transpose_to_axes(x: list[int], bits: int) -> None:
    n = len(x)
    t = x[n - 1] >> 1
    for i in range(n - 1, 0, -1):
        x[i] ^= x[i - 1]
    x[0] ^= t
    q = 2
    top = 1 << bits
    while q != top:
        p = q - 1
        for i in range(n - 1, -1, -1):
            if x[i] & q:
                x[0] ^= p
            else:
                t = (x[0] ^ x[i]) & p
                x[0] ^= t
                x[i] ^= t
        q <<= 1


def _pack_transpose(x: list[int], bits: int) -> int:
    key = 0
    for level in range(bits - 1, -1, -1):
        for w in x:
            key = (key << 1) | ((w >> level) & 1)
    return key


def _unpack_transpose(key: int, dim: int, bits: int) -> list[int]:
    x = [0] * dim
    for level in range(bits):
        base = level * dim + dim - 1
        for i in range(dim):
            if (key >> (base - i)) & 1:
                x[i] |= 1 << level
    return x


def encode(coords, cfg: CurveConfig) -> int:
    """Map lattice coordinates to their Hilbert key.

    Bijective from [0, 2**bits)**dim onto [0, 2**(bits*dim)); consecutive
    keys correspond to cells one lattice step apart.
    """
    x = list(coords)
    if len(x) != cfg.dim:
        raise ValueError(f"expected {cfg.dim} coordinates, got {len(x)}")
    side = cfg.side
    for c in x:
        if not 0 <= c < side:
            raise ValueError(f"coordinate {c} outside [0, {side})")
    if cfg.dim == 1:
        return x[0]
    _axes_to_transpose(x, cfg.bits)
    return _pack_transpose(x, cfg.bits)


def decode(key: int, cfg: CurveConfig) -> tuple[int, ...]:
    """Inverse of :func:`encode`."""
    if not 0 <= key < (1 << cfg.key_bits):
        raise ValueError(f"key {key} outside [0, 2**{cfg.key_bits})")
    if cfg.dim == 1:
        return (key,)
    x = _unpack_transpose(key, cfg.dim, cfg.bits)
    _transpose_to_axes(x, cfg.bits)
    return tuple(x)


def grid_point_key(multi_index, levels) -> int:
    """Hilbert key of an interior grid point of an anisotropic grid.

    Axis ``j`` of the grid has ``2**levels[j] - 1`` interior points with
    1-based indices.  Coarser axes are embedded into the lattice of the
    finest axis by scaling with ``2**(max(levels) - levels[j])``, which
    keeps the per-axis order and makes distinct points map to distinct
    keys.
    """
    ell = tuple(int(v) for v in levels)
    idx = tuple(int(v) for v in multi_index)
    if len(idx) != len(ell):
        raise ValueError("multi-index and level vector have different lengths")
    for k, lj in zip(idx, ell):
        if not 1 <= k <= (1 << lj) - 1:
            raise ValueError(f"index {k} outside interior range of level {lj}")
    n = max(ell)
    cfg = CurveConfig(len(ell), n)
    coords = tuple((k - 1) << (n - lj) for k, lj in zip(idx, ell))
    return encode(coords, cfg)


def holder_bound(dim: int) -> float:
    """Upper bound 2*sqrt(dim+3) on the Holder quotient of the curve."""
    return 2.0 * math.sqrt(dim + 3)


def holder_estimate(cfg: CurveConfig, samples: int, seed: int = 0) -> float:
    """Empirical Holder quotient of the discrete curve.

    Samples pairs of curve parameters x, y in [0, 1] and returns the
    largest observed |s(x) - s(y)|_2 / |x - y|**(1/dim), with s the
    discrete curve mapped into the unit cube.  Stays below
    :func:`holder_bound` for the Hilbert curve.
    """
    if samples < 2:
        raise ValueError("need at least 2 samples")
    rng = np.random.default_rng(seed)
    key_bits = cfg.key_bits
    mask = (1 << key_bits) - 1
    nbytes = (key_bits + 7) // 8
    inv_side = 1.0 / cfg.side
    inv_total = math.ldexp(1.0, -key_bits)
    exponent = 1.0 / cfg.dim
    worst = 0.0
    for _ in range(samples):
        k1 = int.from_bytes(rng.bytes(nbytes), "little") & mask
        k2 = int.from_bytes(rng.bytes(nbytes), "little") & mask
        if k1 == k2:
            continue
        p1 = decode(k1, cfg)
        p2 = decode(k2, cfg)
        dist = math.sqrt(
            sum((a - b) * (a - b) for a, b in zip(p1, p2))
        ) * inv_side
        param = abs(k1 - k2) * inv_total
        worst = max(worst, dist / param**exponent)
    return worst


def curve_diagnostics(cfg: CurveConfig) -> dict:
    """Exhaustive bijectivity and unit-step adjacency check.

    Walks every key of the lattice in order; intended for small
    ``key_bits`` (the walk visits 2**key_bits cells).
    """
    total = 1 << cfg.key_bits
    bijective = True
    adjacent = True
    prev = None
    for key in range(total):
        coords = decode(key, cfg)
        if encode(coords, cfg) != key:
            bijective = False
        if prev is not None:
            step = sum(abs(a - b) for a, b in zip(coords, prev))
            if step != 1:
                adjacent = False
        prev = coords
    return {"bijective": bijective, "adjacent": adjacent}
