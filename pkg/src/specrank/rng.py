"""Seedable, platform-stable random streams.

Every random quantity in this package is drawn from a Philox-4x64-10
counter-based generator keyed by ``(seed, stream_id)``.  Philox is a pure
integer-arithmetic PRF with a fixed published algorithm, so the bit stream
is identical on every platform and numpy version.  Uniform doubles use
numpy's fixed conversion ``(word >> 11) * 2**-53``.

Normal variates are produced by an explicit Box-Muller transform (rather
than the library ziggurat) so the uniform-to-normal convention is pinned
in this file:

    z0 = sqrt(-2 ln(1 - u1)) * cos(2 pi u2)
    z1 = sqrt(-2 ln(1 - u1)) * sin(2 pi u2)

with ``u1, u2`` consecutive uniforms in [0, 1).  ``1 - u1`` keeps the log
argument in (0, 1].  Draws of odd length discard the trailing ``z1``.

Derived streams: Monte-Carlo trial ``t`` of a run seeded with ``s`` uses
``s XOR t`` as its seed (distinct Philox keys give independent streams),
and independent roles within one trial (data generation vs. start vectors)
use distinct ``stream_id`` values.
"""

import numpy as np

_MASK64 = (1 << 64) - 1

# stream_id conventions used across the package
STREAM_DATA = 0
STREAM_KRYLOV = 1


def stream(seed, stream_id=0):
    """Return a ``numpy.random.Generator`` over Philox keyed by (seed, stream_id)."""
    key = np.array([int(seed) & _MASK64, int(stream_id) & _MASK64], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def derive_seed(seed, index):
    """Seed for the ``index``-th derived stream (trial seeds: seed XOR index)."""
    return (int(seed) ^ int(index)) & _MASK64


def standard_normal(gen, size):
    """Box-Muller standard normals; see module docstring for the convention."""
    count = int(np.prod(size)) if not np.isscalar(size) else int(size)
    pairs = (count + 1) // 2
    u = gen.random(2 * pairs)
    r = np.sqrt(-2.0 * np.log1p(-u[:pairs]))
    ang = (2.0 * np.pi) * u[pairs:]
    z = np.empty(2 * pairs)
    z[0::2] = r * np.cos(ang)
    z[1::2] = r * np.sin(ang)
    z = z[:count]
    return z.reshape(size) if not np.isscalar(size) else z


def unit_vector(gen, dim):
    """Random direction: Box-Muller normals normalized to unit 2-norm."""
    for _ in range(16):
        v = standard_normal(gen, dim)
        nrm = np.linalg.norm(v)
        if nrm > 0.0:
            return v / nrm
    raise RuntimeError("could not draw a nonzero direction")
