"""Independent reference computations used by the tests."""

import math

import numpy as np


def fourier_d2_matrix(n: int, length: float = 2 * np.pi) -> np.ndarray:
    """Closed-form periodic spectral second-derivative matrix (n even)."""
    h = 2 * np.pi / n
    D = np.empty((n, n))
    for i in range(n):
        for j in range(n):
            m = i - j
            if m == 0:
                D[i, j] = -np.pi ** 2 / (3 * h ** 2) - 1.0 / 6.0
            else:
                D[i, j] = -((-1) ** m) / (2 * np.sin(m * h / 2) ** 2)
    return D * (2 * np.pi / length) ** 2


def dense_bulk_surface(grid, a_bulk, a_surf, gamma, H, h, closure, bulk_tangential=0.0):
    """Assemble and solve the bulk-surface system as one dense physical-space matrix."""
    M = grid.n_wall
    dz = grid.dz
    sizes = list(grid.n_periodic)
    Ns = int(np.prod(sizes))
    # tangential Laplacian on the flattened surface index
    Lt = np.zeros((Ns, Ns))
    for d, n in enumerate(sizes):
        mats = [np.eye(s) for s in sizes]
        mats[d] = fourier_d2_matrix(n, grid.period_lengths[d])
        K = mats[0]
        for m in mats[1:]:
            K = np.kron(K, m)
        Lt += K
    Iz = np.eye(M)
    D2z = np.zeros((M, M))
    for j in range(1, M - 1):
        D2z[j, j - 1:j + 2] = np.array([1.0, -2.0, 1.0]) / dz ** 2
    A = a_bulk * np.eye(Ns * M) - (1 + bulk_tangential) * np.kron(Lt, Iz) \
        - np.kron(np.eye(Ns), D2z)
    b = np.asarray(H, dtype=float).reshape(-1).copy()
    hb = np.asarray(h[0], dtype=float).reshape(-1)
    ht = np.asarray(h[1], dtype=float).reshape(-1)
    w0 = 0.5 * dz
    for s in range(Ns):
        for j, jn, jnn, hv in ((0, 1, 2, hb[s]), (M - 1, M - 2, M - 3, ht[s])):
            r = s * M + j
            row = np.zeros(Ns * M)
            if closure == "dirichlet":
                row[r] = 1.0
                b[r] = hv
            else:
                surf = a_surf * np.eye(Ns)[s] - gamma * Lt[s]
                row[j::M] += surf
                if closure == "one_sided":
                    row[r] += 3 / (2 * dz)
                    row[s * M + jn] += -4 / (2 * dz)
                    row[s * M + jnn] += 1 / (2 * dz)
                    b[r] = hv
                else:
                    row[r] += 1 / dz
                    row[s * M + jn] += -1 / dz
                    bulk = a_bulk * np.eye(Ns)[s] - (1 + bulk_tangential) * Lt[s]
                    row[j::M] += w0 * bulk
                    b[r] = w0 * b[r] + hv
            A[r] = row
    return np.linalg.solve(A, b).reshape(grid.shape)


def bisect(f, lo, hi, tol=1e-13):
    flo = f(lo)
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if (fm < 0) == (flo < 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def slip_root(eta, beta):
    return bisect(lambda lam: math.tan(lam) - beta / (eta * lam), 1e-9, 0.5 * math.pi - 1e-12)


def observed_order(h, err):
    h, err = np.asarray(h), np.asarray(err)
    return np.log(err[:-1] / err[1:]) / np.log(h[:-1] / h[1:])
