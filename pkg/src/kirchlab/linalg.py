"""Sparse symmetric linear algebra for the five-point operators.

Three pieces: CSR assembly of weighted Dirichlet Laplacians, a Jacobi
preconditioned conjugate gradient, and a dense generalized eigensolver for
pencils A x = lambda diag(B) x with A positive definite and B possibly
indefinite (reduce with the Cholesky factor of A and invert the spectrum,
which keeps the indefinite weight on the harmless side).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import Grid, ScalarField, face_average


class NonPositiveWeight(Exception):
    pass


class NoConvergence(Exception):
    """Iteration budget exhausted; carries the last iterate when available."""

    def __init__(self, message: str, iterate=None, residual=None):
        super().__init__(message)
        self.iterate = iterate
        self.residual = residual


class NotPositiveDefinite(Exception):
    pass


class DimensionMismatch(Exception):
    pass


@dataclass
class SparseMatrix:
    """Square CSR matrix: row offsets indptr (n+1), column indices, values.

    Assembled matrices never have empty rows (the diagonal is always present),
    which the reduceat-based matvec relies on.
    """

    n: int
    indptr: np.ndarray
    indices: np.ndarray
    data: np.ndarray

    def __post_init__(self):
        self._diag = None
        self._rows = None

    def matvec(self, x: np.ndarray) -> np.ndarray:
        return np.add.reduceat(self.data * x[self.indices], self.indptr[:-1])

    def _row_of_entry(self) -> np.ndarray:
        if self._rows is None:
            self._rows = np.repeat(np.arange(self.n), np.diff(self.indptr))
        return self._rows

    def diagonal(self) -> np.ndarray:
        if self._diag is None:
            rows = self._row_of_entry()
            on_diag = self.indices == rows
            d = np.zeros(self.n)
            d[rows[on_diag]] = self.data[on_diag]
            self._diag = d
        return self._diag

    def to_dense(self) -> np.ndarray:
        A = np.zeros((self.n, self.n))
        A[self._row_of_entry(), self.indices] = self.data
        return A

    def scaled(self, factor: float) -> "SparseMatrix":
        return SparseMatrix(self.n, self.indptr, self.indices, self.data * factor)


@dataclass
class Pencil:
    """Pair (A, B) for A x = lambda diag(B) x; A SPD, B any sign pattern."""

    A: SparseMatrix
    B: np.ndarray

    def __post_init__(self):
        self.B = np.asarray(self.B, dtype=float).reshape(-1)
        if self.B.size != self.A.n:
            raise DimensionMismatch(
                f"weight length {self.B.size} != matrix dimension {self.A.n}")


def _coo_to_csr(n: int, rows: np.ndarray, cols: np.ndarray, vals: np.ndarray) -> SparseMatrix:
    order = np.lexsort((cols, rows))
    rows, cols, vals = rows[order], cols[order], vals[order]
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.add.at(indptr, rows + 1, 1)
    indptr = np.cumsum(indptr)
    return SparseMatrix(n, indptr, cols.astype(np.int64), vals)


def assemble_weighted_laplacian(w: ScalarField, grid: Grid | None = None) -> SparseMatrix:
    """Matrix of u -> -divergence(w_face * gradient(u)) on the interior nodes.

    Face weights are arithmetic means of the two adjacent node values of w;
    boundary faces take the bare interior node value.  The result is exactly
    symmetric and, for w > 0, positive definite.
    """
    g = grid if grid is not None else w.grid
    if g != w.grid:
        raise DimensionMismatch("weight field lives on a different grid")
    if float(w.values.min()) <= 0.0:
        raise NonPositiveWeight(f"min weight {w.values.min():.6g} <= 0")

    nx, ny = g.nx, g.ny
    wf = face_average(w)
    wE = wf.xfaces[:, 1:]   # (ny, nx) weight on the face right of each node
    wW = wf.xfaces[:, :-1]
    wN = wf.yfaces[1:, :]
    wS = wf.yfaces[:-1, :]

    idx = np.arange(nx * ny).reshape(ny, nx)
    hx2, hy2 = g.hx ** 2, g.hy ** 2

    rows = [idx.reshape(-1)]
    cols = [idx.reshape(-1)]
    vals = [((wE + wW) / hx2 + (wN + wS) / hy2).reshape(-1)]

    rows.append(idx[:, :-1].reshape(-1))   # east neighbour
    cols.append(idx[:, 1:].reshape(-1))
    vals.append((-wE[:, :-1] / hx2).reshape(-1))

    rows.append(idx[:, 1:].reshape(-1))    # west neighbour
    cols.append(idx[:, :-1].reshape(-1))
    vals.append((-wW[:, 1:] / hx2).reshape(-1))

    rows.append(idx[:-1, :].reshape(-1))   # north neighbour
    cols.append(idx[1:, :].reshape(-1))
    vals.append((-wN[:-1, :] / hy2).reshape(-1))

    rows.append(idx[1:, :].reshape(-1))    # south neighbour
    cols.append(idx[:-1, :].reshape(-1))
    vals.append((-wS[1:, :] / hy2).reshape(-1))

    return _coo_to_csr(nx * ny, np.concatenate(rows), np.concatenate(cols),
                       np.concatenate(vals))


def cg_solve(A: SparseMatrix, rhs: np.ndarray, tol: float = 1e-12,
             x0: np.ndarray | None = None) -> np.ndarray:
    """Jacobi-preconditioned CG to relative residual |A x - rhs| <= tol |rhs|.

    A zero right-hand side returns the zero vector immediately.  The optional
    x0 is only a starting guess; it changes the answer by at most the
    tolerance.  Raises NoConvergence after 10*n iterations.
    """
    rhs = np.asarray(rhs, dtype=float).reshape(-1)
    if rhs.size != A.n:
        raise DimensionMismatch(f"rhs length {rhs.size} != matrix dimension {A.n}")
    norm_b = float(np.linalg.norm(rhs))
    if norm_b == 0.0:
        return np.zeros(A.n)

    dinv = 1.0 / A.diagonal()
    x = np.zeros(A.n) if x0 is None else np.array(x0, dtype=float)
    r = rhs - A.matvec(x)
    z = dinv * r
    p = z.copy()
    rz = float(r @ z)
    target = tol * norm_b
    max_iter = 10 * A.n

    for _ in range(max_iter):
        if np.sqrt(float(r @ r)) <= target:
            # recurrence can drift: confirm with the true residual
            r = rhs - A.matvec(x)
            if np.sqrt(float(r @ r)) <= target:
                return x
            z = dinv * r
            p = z.copy()
            rz = float(r @ z)
        Ap = A.matvec(p)
        pAp = float(p @ Ap)
        if pAp <= 0.0:
            raise NoConvergence("matrix is not positive definite along a search direction")
        alpha = rz / pAp
        x += alpha * p
        r -= alpha * Ap
        z = dinv * r
        rz_next = float(r @ z)
        p = z + (rz_next / rz) * p
        rz = rz_next
    if np.sqrt(float((rhs - A.matvec(x)) @ (rhs - A.matvec(x)))) <= target:
        return x
    raise NoConvergence(f"CG did not reach tol {tol:g} in {max_iter} iterations",
                        iterate=x, residual=float(np.linalg.norm(rhs - A.matvec(x))) / norm_b)


def pencil_eigensolve(P: Pencil) -> list[tuple[float, np.ndarray]]:
    """Full real spectrum of A x = lambda diag(B) x, sorted by eigenvalue.

    Dense desk-scale path: with A = L L^T the substitution y = L^T x turns the
    pencil into the symmetric problem (L^-1 diag(B) L^-T) y = (1/lambda) y, so
    the indefinite weight never has to be factored.  Eigenvalues mu of that
    matrix below the roundoff floor correspond to lambda = infinity and are
    dropped.  Eigenvectors come back in original coordinates, normalized to
    |x^T diag(B) x| = 1 where that quadratic form is nonzero.
    """
    n = P.A.n
    if n > 10_000:
        raise DimensionMismatch(f"dense eigensolve limited to n <= 10000, got {n}")
    A = P.A.to_dense()
    try:
        L = np.linalg.cholesky(A)
    except np.linalg.LinAlgError as err:
        raise NotPositiveDefinite(f"Cholesky failed: {err}") from None

    Z = np.linalg.solve(L, np.diag(P.B))
    C = np.linalg.solve(L, Z.T)
    C = 0.5 * (C + C.T)
    mu, Y = np.linalg.eigh(C)
    X = np.linalg.solve(L.T, Y)

    floor = n * np.finfo(float).eps * max(float(np.abs(mu).max()), 1e-300)
    pairs = []
    for k in range(n):
        if abs(mu[k]) <= floor:
            continue
        lam = 1.0 / mu[k]
        v = X[:, k]
        q = float(v @ (P.B * v))
        if abs(q) > 0.0:
            v = v / np.sqrt(abs(q))
        pairs.append((float(lam), v))
    pairs.sort(key=lambda t: t[0])
    return pairs


def smallest_positive(P: Pencil) -> tuple[float, np.ndarray] | None:
    """Least positive eigenvalue of the pencil with its eigenvector.

    None when the weight is nowhere positive (no positive eigenvalue can
    exist).  The eigenvector is flipped so its maximum entry is positive.
    """
    if float(P.B.max()) <= 0.0:
        return None
    positives = [(lam, v) for lam, v in pencil_eigensolve(P) if lam > 0.0]
    if not positives:
        return None
    lam, v = positives[0]
    if float(v.max()) <= 0.0:
        v = -v
    return lam, v
