"""Deterministic random streams for Monte Carlo work.

Built on numpy's Philox counter-based generator: a master seed keys the
family, and substream ``i`` starts at counter offset ``i * 2**128``.  Streams
are therefore reproducible and order-independent: drawing from substream 5
before substream 3 yields the same numbers as the reverse order.

Normal variates come from the inverse CDF applied to midpoint-shifted 53-bit
uniforms, so a normal stream is a deterministic function of (seed, substream,
position) alone.
"""

import numpy as np
from numpy.random import Generator, Philox
from scipy.special import ndtri

# half of the 53-bit uniform lattice spacing; keeps uniforms strictly in (0,1)
_HALF_ULP = 2.0 ** -54


def substream(seed, index):
    """Generator for substream ``index`` of the family keyed by ``seed``."""
    if index < 0:
        raise ValueError("substream index must be nonnegative")
    return Generator(Philox(key=int(seed), counter=int(index) << 128))


def uniforms(seed, index, n):
    """n uniforms in (0,1) from the given substream, midpoint-shifted."""
    g = substream(seed, index)
    return g.random(int(n)) + _HALF_ULP


def normals(seed, index, shape):
    """Standard normal draws of the given shape via the inverse CDF."""
    shape = tuple(np.atleast_1d(shape).astype(int)) if not np.isscalar(shape) else (int(shape),)
    n = int(np.prod(shape)) if shape else 1
    z = ndtri(uniforms(seed, index, n))
    return z.reshape(shape)
