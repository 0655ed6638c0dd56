"""Pure NumPy implementations of the hot kernels.

Kept in lockstep with the compiled twin in ``_core.pyx``: same signatures,
same update order, same skip-zero rules. Reductions here go through
``np.einsum``/``np.dot`` while the compiled side uses naive C loops, so the
two backends agree to rounding (~1e-15 relative), not bitwise.
"""

import numpy as np

BACKEND = "pure"


def score_rows(w, keys, x, interaction):
    """Clipped scorer predictions of ``x`` against every row of ``keys``."""
    if interaction:
        z = keys * x
    else:
        z = np.abs(keys - x)
    s = np.einsum("ij,j->i", z, w)
    return np.maximum(s, 0.0, out=s)


def project(router, key):
    """Scalar projection used for routing decisions."""
    return float(np.dot(router, key))


def project_rows(router, keys):
    """Per-row projections, bit-identical to ``project`` on each row."""
    n = keys.shape[0]
    out = np.empty(n)
    for i in range(n):
        out[i] = np.dot(router, keys[i])
    return out


def oja_pass(xc, v0):
    """One streaming top-eigenvector pass over the centered rows of ``xc``.

    Each row n (1-based) applies v <- normalize(v + (1/n) * x (x.v)).
    """
    v = v0.copy()
    for n in range(xc.shape[0]):
        x = xc[n]
        v += (np.dot(x, v) / (n + 1.0)) * x
        norm = np.sqrt(np.dot(v, v))
        if norm > 0.0:
            v /= norm
    return v


def hashed_dot(w, slots, phi):
    """Dot product of ``phi`` with the hashed weight slots."""
    return float(np.dot(w[slots], phi))


def hashed_adagrad_update(w, acc, slots, phi, err_scale, lr):
    """Two-pass adaptive SGD step on the hashed slots.

    Squared gradients are accumulated for every active slot first, then all
    steps are applied against the updated accumulators, so duplicate slots
    see identical effective learning rates. Zero-gradient slots are skipped.
    """
    g = err_scale * phi
    nz = g != 0.0
    if not nz.all():
        slots = slots[nz]
        g = g[nz]
    if slots.size == 0:
        return
    np.add.at(acc, slots, g * g)
    np.subtract.at(w, slots, lr * g / np.sqrt(acc[slots]))
