"""NumPy fallback for the hot stepping kernels.

Same call signatures as the compiled module ``_stencil``; selected at import
time by :mod:`facade2d._kernels` when the extension is unavailable (or when
``FACADE2D_KERNELS=python``).
"""

import numpy as np


def stencil_step(u_curr, u_prev, gw, ge, gs, gn, c_e, c_w, c_n, c_s, c_c, c_p, out):
    """Apply one explicit 5-point update with ghost-frame boundary closure.

    ``out[i, j] = c_e*E + c_w*W + c_n*N + c_s*S + c_c*u_curr[i, j] + c_p*u_prev[i, j]``
    where E/W/N/S are the four neighbours of ``u_curr``, replaced on the domain
    edge by the ghost vectors ``ge``/``gw`` (length ny) and ``gn``/``gs``
    (length nx).  Returns the sum of ``out`` so the caller can detect
    non-finite blow-up in one pass.
    """
    ny, nx = u_curr.shape
    pad = np.empty((ny + 2, nx + 2))
    pad[1:-1, 1:-1] = u_curr
    pad[1:-1, 0] = gw
    pad[1:-1, -1] = ge
    pad[0, 1:-1] = gs
    pad[-1, 1:-1] = gn
    np.multiply(c_e, pad[1:-1, 2:], out=out)
    out += c_w * pad[1:-1, :-2]
    out += c_n * pad[2:, 1:-1]
    out += c_s * pad[:-2, 1:-1]
    out += c_c * u_curr
    out += c_p * u_prev
    return float(out.sum())


def thomas_many(dl, d, du, b, out):
    """Solve ``m`` independent tridiagonal systems of size ``n``.

    All arguments are ``(m, n)`` arrays; system ``k`` has lower diagonal
    ``dl[k, 1:]``, main diagonal ``d[k, :]`` and upper diagonal
    ``du[k, :-1]`` (``dl[:, 0]`` and ``du[:, -1]`` are ignored).  The
    recurrence runs along ``n`` and is vectorised across systems.  Returns 1
    on a zero pivot (solution invalid), else 0.
    """
    m, n = d.shape
    cp = np.empty((m, n))
    xp = out
    piv = d[:, 0].copy()
    if np.any(piv == 0.0):
        return 1
    cp[:, 0] = du[:, 0] / piv
    xp[:, 0] = b[:, 0] / piv
    for k in range(1, n):
        piv = d[:, k] - dl[:, k] * cp[:, k - 1]
        if np.any(piv == 0.0):
            return 1
        if k < n - 1:
            cp[:, k] = du[:, k] / piv
        xp[:, k] = (b[:, k] - dl[:, k] * xp[:, k - 1]) / piv
    for k in range(n - 2, -1, -1):
        xp[:, k] -= cp[:, k] * xp[:, k + 1]
    return 0
