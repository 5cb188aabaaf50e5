"""Pure-Python SMO kernel: the import-time fallback for emgds._smo.

The compiled extension and this module perform the same floating-point
operations in the same order (and share the SplitMix64 stream), so both
backends produce bit-identical (alpha, bias) for the same inputs. Keep any
change here in lockstep with _smo.pyx.
"""

import numpy as np

_MASK64 = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB


class SplitMix64:
    """Tiny deterministic PRNG, identical in both backends."""

    def __init__(self, seed: int):
        self.state = seed & _MASK64

    def next_u64(self) -> int:
        self.state = (self.state + _GAMMA) & _MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * _MIX1) & _MASK64
        z = ((z ^ (z >> 27)) * _MIX2) & _MASK64
        return z ^ (z >> 31)

    def below(self, n: int) -> int:
        return self.next_u64() % n


def dual_objective(K, y, alpha) -> float:
    u = alpha * y
    return float(alpha.sum() - 0.5 * (u @ K @ u))


def optimize(K, y, c, tol, max_passes, seed, record_objective=False):
    """Run SMO passes over the Gram matrix until a pass makes no update.

    Returns (alpha, working_bias, passes, objective_trace). The first index of
    each working pair is the first KKT violator in scan order; the second
    maximizes |E_i - E_j| with ties and the retry scan randomized under seed.
    """
    K = np.ascontiguousarray(K, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    n = len(y)
    alpha = np.zeros(n, dtype=np.float64)
    E = -y  # decision function starts at 0, so E_k = f(x_k) - y_k = -y_k
    b = 0.0
    rng = SplitMix64(seed)
    trace = [] if record_objective else None

    def attempt(i: int, j: int) -> bool:
        nonlocal b, E
        ai = alpha[i]
        aj = alpha[j]
        yi = y[i]
        yj = y[j]
        if yi != yj:
            lo = aj - ai
            if lo < 0.0:
                lo = 0.0
            hi = c + aj - ai
            if hi > c:
                hi = c
        else:
            lo = ai + aj - c
            if lo < 0.0:
                lo = 0.0
            hi = ai + aj
            if hi > c:
                hi = c
        if lo == hi:
            return False
        eta = K[i, i] + K[j, j] - 2.0 * K[i, j]
        if eta <= 0.0:
            return False
        aj_new = aj + yj * (E[i] - E[j]) / eta
        if aj_new < lo:
            aj_new = lo
        elif aj_new > hi:
            aj_new = hi
        if abs(aj_new - aj) < 1e-5 * (aj_new + aj + 1e-5):
            return False
        ai_new = ai + yi * yj * (aj - aj_new)
        di = yi * (ai_new - ai)
        dj = yj * (aj_new - aj)
        b1 = b - E[i] - di * K[i, i] - dj * K[i, j]
        b2 = b - E[j] - di * K[i, j] - dj * K[j, j]
        if 0.0 < ai_new < c:
            b_new = b1
        elif 0.0 < aj_new < c:
            b_new = b2
        else:
            b_new = 0.5 * (b1 + b2)
        db = b_new - b
        alpha[i] = ai_new
        alpha[j] = aj_new
        E += di * K[i]
        E += dj * K[j]
        E += db
        b = b_new
        if trace is not None:
            trace.append(dual_objective(K, y, alpha))
        return True

    passes = 0
    while passes < max_passes:
        changed = 0
        for i in range(n):
            r = y[i] * E[i]
            if not ((r < -tol and alpha[i] < c) or (r > tol and alpha[i] > 0.0)):
                continue
            diff = np.abs(E[i] - E)
            diff[i] = -1.0
            m = diff.max()
            ties = np.flatnonzero(diff == m)
            if len(ties) == 1:
                j = int(ties[0])
            else:
                j = int(ties[rng.below(len(ties))])
            if attempt(i, j):
                changed += 1
                continue
            start = rng.below(n)
            for off in range(n):
                jj = (start + off) % n
                if jj == i:
                    continue
                if attempt(i, jj):
                    changed += 1
                    break
        passes += 1
        if changed == 0:
            break
    return alpha, b, passes, trace
