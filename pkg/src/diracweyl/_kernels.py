"""Hot numeric loops.

Everything here is nopython-compatible numpy so the same source runs under
numba or as plain Python (see ``_accel``). Inputs must already be
contiguous ``complex128`` / ``float64`` arrays; the public wrappers in the
other modules take care of that.
"""

import numpy as np

from ._accel import njit

# Higham (2005) Pade backward-error thresholds for the 1-norm.
_THETA3 = 1.495585217958292e-2
_THETA5 = 2.539398330063230e-1
_THETA7 = 9.504178996162932e-1
_THETA9 = 2.097847961257068e0
_THETA13 = 5.371920351148152e0


@njit
def _norm1(A):
    n = A.shape[1]
    best = 0.0
    for c in range(n):
        s = 0.0
        for r in range(A.shape[0]):
            s += abs(A[r, c])
        if s > best:
            best = s
    return best


@njit
def _pade_low(A, m):
    n = A.shape[0]
    ident = np.eye(n, dtype=np.complex128)
    A2 = A @ A
    if m == 3:
        U = A @ (A2 + 60.0 * ident)
        V = 12.0 * A2 + 120.0 * ident
    elif m == 5:
        A4 = A2 @ A2
        U = A @ (A4 + 420.0 * A2 + 15120.0 * ident)
        V = 30.0 * A4 + 3360.0 * A2 + 30240.0 * ident
    elif m == 7:
        A4 = A2 @ A2
        A6 = A4 @ A2
        U = A @ (A6 + 1512.0 * A4 + 277200.0 * A2 + 8648640.0 * ident)
        V = 56.0 * A6 + 25200.0 * A4 + 1995840.0 * A2 + 17297280.0 * ident
    else:
        A4 = A2 @ A2
        A6 = A4 @ A2
        A8 = A6 @ A2
        U = A @ (A8 + 3960.0 * A6 + 2162160.0 * A4 + 302702400.0 * A2
                 + 8821612800.0 * ident)
        V = (90.0 * A8 + 110880.0 * A6 + 30270240.0 * A4
             + 2075673600.0 * A2 + 17643225600.0 * ident)
    return np.ascontiguousarray(np.linalg.solve(V - U, V + U))


@njit
def _pade13(A):
    n = A.shape[0]
    ident = np.eye(n, dtype=np.complex128)
    A2 = A @ A
    A4 = A2 @ A2
    A6 = A4 @ A2
    W1 = 1.0 * A6 + 16380.0 * A4 + 40840800.0 * A2
    W2 = (33522128640.0 * A6 + 10559470521600.0 * A4
          + 1187353796428800.0 * A2 + 32382376266240000.0 * ident)
    U = A @ (A6 @ W1 + W2)
    Z1 = 182.0 * A6 + 960960.0 * A4 + 1323241920.0 * A2
    Z2 = (670442572800.0 * A6 + 129060195264000.0 * A4
          + 7771770303897600.0 * A2 + 64764752532480000.0 * ident)
    V = A6 @ Z1 + Z2
    return np.ascontiguousarray(np.linalg.solve(V - U, V + U))


@njit
def expm_kernel(A):
    """Scaling-and-squaring Pade exponential of a square complex matrix."""
    n = A.shape[0]
    if n == 0:
        return np.zeros((0, 0), dtype=np.complex128)
    nrm = _norm1(A)
    if nrm <= _THETA3:
        return _pade_low(A, 3)
    if nrm <= _THETA5:
        return _pade_low(A, 5)
    if nrm <= _THETA7:
        return _pade_low(A, 7)
    if nrm <= _THETA9:
        return _pade_low(A, 9)
    s = 0
    if nrm > _THETA13:
        s = int(np.ceil(np.log2(nrm / _THETA13)))
    R = _pade13(A / 2.0 ** s)
    for _ in range(s):
        R = R @ R
    return R


@njit
def vanloan_kernel(A1, B, A2, x):
    """int_0^x exp(A1 t) B exp(A2 t) dt via one block exponential."""
    n1 = A1.shape[0]
    n2 = A2.shape[0]
    M = np.zeros((n1 + n2, n1 + n2), dtype=np.complex128)
    M[:n1, :n1] = -x * A1
    M[:n1, n1:] = x * B
    M[n1:, n1:] = x * A2
    F = expm_kernel(M)
    top_right = np.ascontiguousarray(F[:n1, n1:])
    return np.ascontiguousarray(expm_kernel(x * A1)) @ top_right


@njit
def propagate_kernel(xs, vs, z, m1, m2):
    """Exponential-midpoint stepping of u' = i (z j + j V) u, u(0) = I.

    Returns the fundamental matrices and their inverses at every node. The
    inverse is advanced with the exact inverse step exp(-H) so it stays
    accurate when u itself is badly conditioned.
    """
    K = xs.shape[0]
    m = m1 + m2
    us = np.empty((K, m, m), dtype=np.complex128)
    uis = np.empty((K, m, m), dtype=np.complex128)
    u = np.eye(m, dtype=np.complex128)
    ui = np.eye(m, dtype=np.complex128)
    us[0] = u
    uis[0] = ui
    H = np.zeros((m, m), dtype=np.complex128)
    for k in range(K - 1):
        h = xs[k + 1] - xs[k]
        H[:, :] = 0.0
        for a in range(m1):
            H[a, a] = 1j * h * z
        for a in range(m1, m):
            H[a, a] = -1j * h * z
        for a in range(m1):
            for b in range(m2):
                vm = 0.5 * (vs[k, a, b] + vs[k + 1, a, b])
                H[a, m1 + b] = 1j * h * vm
                H[m1 + b, a] = -1j * h * np.conj(vm)
        u = expm_kernel(H) @ u
        ui = ui @ expm_kernel(-H)
        us[k + 1] = u
        uis[k + 1] = ui
    return us, uis


@njit
def _rebalanced_lambda(x, a_hat, n_minus, th1, th2):
    """D(x) Lambda(x) in the split frame, D = diag(e^{-ix a_-}, e^{ix a_+})."""
    n = a_hat.shape[0]
    L1 = th1.copy()
    L2 = th2.copy()
    if n_minus > 0:
        am = np.ascontiguousarray(a_hat[:n_minus, :n_minus])
        L1[:n_minus] = expm_kernel(-2j * x * am) @ np.ascontiguousarray(th1[:n_minus])
    if n_minus < n:
        ap = np.ascontiguousarray(a_hat[n_minus:, n_minus:])
        L2[n_minus:] = expm_kernel(2j * x * ap) @ np.ascontiguousarray(th2[n_minus:])
    return L1, L2


@njit
def gbdt_potential_kernel(xs, a_hat, n_minus, th1, th2, sig0, h_max):
    """v(x) = -2i L1(x)^* Sigma(x)^{-1} L2(x) on a nondecreasing grid.

    Works in a frame where alpha is block diagonal, diag(a_-, a_+) with the
    eigenvalues of a_- in Im < 0 and those of a_+ in Im >= 0, and rescales
    by D(x) above. Then
    Sigma~ = D Sigma D^* obeys Sigma~' = K Sigma~ + Sigma~ K^* + L~ L~^*
    with K = diag(-i a_-, i a_+) stable, so every quantity stays bounded
    and Sigma~ is advanced exactly over substeps of length <= ``h_max``.
    ``th1``, ``th2``, ``sig0`` are already expressed in the split frame.
    """
    K = xs.shape[0]
    n = a_hat.shape[0]
    m1 = th1.shape[1]
    m2 = th2.shape[1]
    out = np.zeros((K, m1, m2), dtype=np.complex128)
    if n == 0:
        return out
    Km = np.zeros((n, n), dtype=np.complex128)
    Km[:n_minus, :n_minus] = -1j * a_hat[:n_minus, :n_minus]
    Km[n_minus:, n_minus:] = 1j * a_hat[n_minus:, n_minus:]
    aH = np.ascontiguousarray(a_hat.conj().T)
    S = sig0.copy()
    cur = 0.0
    last_h = -1.0
    E = np.eye(n, dtype=np.complex128)
    EH = E
    for k in range(K):
        target = xs[k]
        while cur < target:
            h = min(h_max, target - cur)
            if h != last_h:
                E = expm_kernel(h * Km)
                EH = np.ascontiguousarray(E.conj().T)
                last_h = h
            L1, L2 = _rebalanced_lambda(cur, a_hat, n_minus, th1, th2)
            G1 = L1 @ np.ascontiguousarray(L1.conj().T)
            G2 = L2 @ np.ascontiguousarray(L2.conj().T)
            inc = (vanloan_kernel(-1j * a_hat, G1, 1j * aH, h)
                   + vanloan_kernel(1j * a_hat, G2, -1j * aH, h))
            S = E @ (S + inc) @ EH
            S = 0.5 * (S + S.conj().T)
            cur = cur + h
        L1, L2 = _rebalanced_lambda(target, a_hat, n_minus, th1, th2)
        out[k] = -2j * (np.ascontiguousarray(L1.conj().T) @ np.linalg.solve(S, L2))
    return out


@njit
def closed_columns_kernel(xs, alpha, sigma0, theta1, theta2, z, res, w11_inv, w0_inv, tail):
    """u(x, z) [I; phi] on a grid from the closed form.

    ``res`` is (zI - alpha)^{-1}; the result is
    e^{ixz} w(x)[:, :m1] W11^{-1} + w(x) e^{ixzj} w(0)^{-1} tail
    (the second term is skipped when ``tail`` is zero).
    """
    K = xs.shape[0]
    n = alpha.shape[0]
    m1 = theta1.shape[1]
    m = m1 + theta2.shape[1]
    out = np.zeros((K, m, m1), dtype=np.complex128)
    use_tail = np.any(tail != 0)
    sgn = np.ones(m, dtype=np.complex128)
    sgn[m1:] = -1.0
    G1 = theta1 @ np.ascontiguousarray(theta1.conj().T)
    G2 = theta2 @ np.ascontiguousarray(theta2.conj().T)
    aH = np.ascontiguousarray(alpha.conj().T)
    for k in range(K):
        x = xs[k]
        w = np.eye(m, dtype=np.complex128)
        if n > 0:
            Lam = np.empty((n, m), dtype=np.complex128)
            Lam[:, :m1] = expm_kernel(-1j * x * alpha) @ theta1
            Lam[:, m1:] = expm_kernel(1j * x * alpha) @ theta2
            S = (sigma0 + vanloan_kernel(-1j * alpha, G1, 1j * aH, x)
                 + vanloan_kernel(1j * alpha, G2, -1j * aH, x))
            S = 0.5 * (S + S.conj().T)
            M = np.ascontiguousarray(Lam.conj().T) @ np.linalg.solve(S, res @ Lam)
            for r in range(m):
                w[r, :] += 1j * sgn[r] * M[r, :]
        e = np.exp(1j * x * z)
        Y = e * (np.ascontiguousarray(w[:, :m1]) @ w11_inv)
        if use_tail:
            E = np.empty(m, dtype=np.complex128)
            E[:m1] = e
            E[m1:] = 1.0 / e
            WE = w * E.reshape(1, m)
            Y = Y + WE @ (w0_inv @ tail)
        out[k] = Y
    return out
