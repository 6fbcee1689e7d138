"""Dense eigenvalues of real nonsymmetric matrices.

Balancing, Householder reduction to upper Hessenberg form, then Francis
implicit double-shift QR with deflation.  Only eigenvalues are computed;
that is all the spectral classification needs.
"""

import numpy as np

from .errors import NoConvergence

_RADIX = 2.0


def balance(a):
    """Diagonal similarity scaling that equalises row and column norms.

    Scaling factors are powers of two so no rounding is introduced.
    """
    a = np.array(a, dtype=float)
    n = a.shape[0]
    sqrdx = _RADIX * _RADIX
    done = False
    while not done:
        done = True
        for i in range(n):
            r = np.abs(a[i]).sum() - abs(a[i, i])
            c = np.abs(a[:, i]).sum() - abs(a[i, i])
            if c == 0.0 or r == 0.0:
                continue
            g = r / _RADIX
            f = 1.0
            s = c + r
            while c < g:
                f *= _RADIX
                c *= sqrdx
            g = r * _RADIX
            while c > g:
                f /= _RADIX
                c /= sqrdx
            if (c + r) / f < 0.95 * s:
                done = False
                a[i, :] /= f
                a[:, i] *= f
    return a


def hessenberg(a):
    """Upper Hessenberg matrix orthogonally similar to ``a``."""
    h = np.array(a, dtype=float)
    n = h.shape[0]
    for k in range(n - 2):
        x = h[k + 1 :, k].copy()
        alpha = np.linalg.norm(x)
        if alpha == 0.0:
            continue
        if x[0] > 0:
            alpha = -alpha
        v = x
        v[0] -= alpha
        vnorm = np.linalg.norm(v)
        if vnorm == 0.0:
            continue
        v /= vnorm
        h[k + 1 :, k:] -= 2.0 * np.outer(v, v @ h[k + 1 :, k:])
        h[:, k + 1 :] -= 2.0 * np.outer(h[:, k + 1 :] @ v, v)
        h[k + 2 :, k] = 0.0
    return h


def _hqr(h, max_sweeps):
    """Eigenvalues of an upper Hessenberg matrix (modified in place)."""
    n = h.shape[0]
    wr = np.zeros(n)
    wi = np.zeros(n)
    anorm = np.abs(h).sum()
    nn = n - 1
    t = 0.0
    while nn >= 0:
        its = 0
        while True:
            # look for a negligible subdiagonal element
            l = nn
            while l >= 1:
                s = abs(h[l - 1, l - 1]) + abs(h[l, l])
                if s == 0.0:
                    s = anorm
                if abs(h[l, l - 1]) + s == s:
                    h[l, l - 1] = 0.0
                    break
                l -= 1
            x = h[nn, nn]
            if l == nn:
                wr[nn] = x + t
                nn -= 1
                break
            y = h[nn - 1, nn - 1]
            w = h[nn, nn - 1] * h[nn - 1, nn]
            if l == nn - 1:
                p = 0.5 * (y - x)
                q = p * p + w
                z = np.sqrt(abs(q))
                x += t
                if q >= 0.0:
                    z = p + np.copysign(z, p)
                    wr[nn - 1] = wr[nn] = x + z
                    if z != 0.0:
                        wr[nn] = x - w / z
                else:
                    wr[nn - 1] = wr[nn] = x + p
                    wi[nn - 1] = -z
                    wi[nn] = z
                nn -= 2
                break
            if its == max_sweeps:
                raise NoConvergence(
                    f"QR iteration did not converge within {max_sweeps} sweeps "
                    f"at index {nn}"
                )
            if its in (10, 20):
                # exceptional shift
                t += x
                for i in range(nn + 1):
                    h[i, i] -= x
                s = abs(h[nn, nn - 1]) + abs(h[nn - 1, nn - 2])
                x = y = 0.75 * s
                w = -0.4375 * s * s
            its += 1
            m = nn - 2
            while m >= l:
                z = h[m, m]
                r = x - z
                s = y - z
                p = (r * s - w) / h[m + 1, m] + h[m, m + 1]
                q = h[m + 1, m + 1] - z - r - s
                r = h[m + 2, m + 1]
                s = abs(p) + abs(q) + abs(r)
                p /= s
                q /= s
                r /= s
                if m == l:
                    break
                u = abs(h[m, m - 1]) * (abs(q) + abs(r))
                v = abs(p) * (abs(h[m - 1, m - 1]) + abs(z) + abs(h[m + 1, m + 1]))
                if u + v == v:
                    break
                m -= 1
            for i in range(m + 2, nn + 1):
                h[i, i - 2] = 0.0
                if i != m + 2:
                    h[i, i - 3] = 0.0
            k = m
            while k <= nn - 1:
                if k != m:
                    p = h[k, k - 1]
                    q = h[k + 1, k - 1]
                    r = h[k + 2, k - 1] if k != nn - 1 else 0.0
                    x = abs(p) + abs(q) + abs(r)
                    if x != 0.0:
                        p /= x
                        q /= x
                        r /= x
                s = np.copysign(np.sqrt(p * p + q * q + r * r), p)
                if s != 0.0:
                    if k == m:
                        if l != m:
                            h[k, k - 1] = -h[k, k - 1]
                    else:
                        h[k, k - 1] = -s * x
                    p += s
                    x = p / s
                    y = q / s
                    z = r / s
                    q /= p
                    r /= p
                    # row modification
                    row = h[k, k : nn + 1] + q * h[k + 1, k : nn + 1]
                    if k != nn - 1:
                        row = row + r * h[k + 2, k : nn + 1]
                        h[k + 2, k : nn + 1] -= row * z
                    h[k + 1, k : nn + 1] -= row * y
                    h[k, k : nn + 1] -= row * x
                    # column modification
                    top = min(nn, k + 3)
                    col = x * h[l : top + 1, k] + y * h[l : top + 1, k + 1]
                    if k != nn - 1:
                        col = col + z * h[l : top + 1, k + 2]
                        h[l : top + 1, k + 2] -= col * r
                    h[l : top + 1, k + 1] -= col * q
                    h[l : top + 1, k] -= col
                k += 1
    return wr + 1j * wi


def eigvals_francis(a, max_sweeps=60):
    """All eigenvalues of a real square matrix by Francis double-shift QR.

    Parameters
    ----------
    a : array_like, shape (n, n)
    max_sweeps : int
        Iteration cap per eigenvalue (or pair) before giving up.

    Returns
    -------
    ndarray of complex, shape (n,)
        Unordered eigenvalues; complex ones come in conjugate pairs.

    Raises
    ------
    NoConvergence
        When an eigenvalue fails to deflate within ``max_sweeps`` sweeps.
    """
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("matrix must be square")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix entries must be finite")
    if a.shape[0] == 0:
        return np.zeros(0, dtype=complex)
    return _hqr(hessenberg(balance(a)), max_sweeps)


#: Above this size ``method="auto"`` hands off to LAPACK.
FRANCIS_MAX_N = 400


def eigvals(a, method="auto"):
    """Eigenvalues of a real square matrix.

    ``method`` is ``"francis"`` (the routine above), ``"lapack"`` (numpy) or
    ``"auto"``, which uses the Python routine for small matrices and LAPACK
    beyond :data:`FRANCIS_MAX_N`, where interpreted sweeps get slow.
    """
    a = np.asarray(a, dtype=float)
    if method == "auto":
        method = "francis" if a.shape[0] <= FRANCIS_MAX_N else "lapack"
    if method == "francis":
        return eigvals_francis(a)
    if method == "lapack":
        return np.linalg.eigvals(a).astype(complex)
    raise ValueError(f"unknown eigensolver method {method!r}")
