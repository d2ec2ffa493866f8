"""Optional numba kernel for the batched damped-Newton solve.

The numpy implementation in ``barrier.argmax_batch`` is the reference; this
kernel reproduces it row by row with scalar loops, which is much faster for
the small reduced dimensions the learners use.  Import failures (no numba)
leave ``newton_batch`` as None and callers fall back to numpy.
"""

from __future__ import annotations

import os

newton_batch = None

if not os.environ.get("SWAPDYN_NO_NUMBA"):
    try:
        import numpy as np
        from numba import njit

        @njit(cache=True, fastmath=False)
        def _newton_batch_impl(ew, x, tol, factor, max_iter):
            nrows, k = ew.shape
            worst = 0.0
            status = 0
            g = np.empty(k)
            xsq = np.empty(k)
            hg = np.empty(k)
            for i in range(nrows):
                converged = False
                lam = 0.0
                for _ in range(max_iter):
                    s = 0.0
                    for r in range(k):
                        s += x[i, r]
                    xd = 1.0 - s
                    inv_xd = 1.0 / xd
                    big = xd * xd
                    xg = 0.0
                    for r in range(k):
                        gr = inv_xd - 1.0 / x[i, r] - ew[i, r]
                        g[r] = gr
                        x2 = x[i, r] * x[i, r]
                        xsq[r] = x2
                        big += x2
                        xg += x2 * gr
                    lam2 = 0.0
                    for r in range(k):
                        h = xsq[r] * g[r] - xsq[r] * (xg / big)
                        hg[r] = h
                        lam2 += g[r] * h
                    if lam2 < 0.0:
                        lam2 = 0.0
                    lam = np.sqrt(lam2)
                    if lam <= tol:
                        converged = True
                        break
                    scale = -1.0 / (1.0 + lam)
                    t = 1.0
                    while True:
                        ok = True
                        ssum = 0.0
                        for r in range(k):
                            xn = x[i, r] + t * scale * hg[r]
                            if xn <= 0.0:
                                ok = False
                                break
                            ssum += xn
                        if ok and ssum < 1.0:
                            for r in range(k):
                                x[i, r] = x[i, r] + t * scale * hg[r]
                            break
                        t *= factor
                        if t == 0.0:
                            return 2, lam
                if not converged:
                    status = 1
                    if lam > worst:
                        worst = lam
            return status, worst

        newton_batch = _newton_batch_impl
    except Exception:  # pragma: no cover - numba genuinely unavailable
        newton_batch = None
