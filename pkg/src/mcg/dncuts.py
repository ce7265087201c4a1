"""Normalized-cuts eigenvectors, exact and downsampled.

The downsampled solver squares-and-decimates the affinity (keeping pixels at
even rows and columns), solves the small problem, upsamples the eigenvectors
through the row-normalized restriction matrices, and whitens the result.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import ArpackNoConvergence, eigsh

from .errors import ParameterError, SolverError

DENSE_FALLBACK_N = 400
ZERO_EIGENVALUE_TOL = 1e-10


@dataclass
class EigenBasis:
    vectors: np.ndarray      # (n, k), column j is eigenvector j
    eigenvalues: np.ndarray  # (k,), ascending


@dataclass
class DecimationStep:
    kept: np.ndarray              # indices retained from the previous grid
    b: sparse.csr_matrix          # previous-affinity columns at kept indices
    c: sparse.csr_matrix          # row-normalized b (zero rows divided by 1)
    a_next: sparse.csr_matrix     # symmetrized decimated square
    dims_next: tuple[int, int]


def pixel_decimate(height: int, width: int) -> np.ndarray:
    """Row-major indices of the pixels at even row and even column."""
    if height < 1 or width < 1:
        raise ParameterError("grid dims must be >= 1")
    ys = np.arange(0, height, 2, dtype=np.int64)
    xs = np.arange(0, width, 2, dtype=np.int64)
    return (ys[:, None] * width + xs[None, :]).ravel()


def decimate_square_step(a: sparse.spmatrix, dims: tuple[int, int]) -> DecimationStep:
    """One squaring-and-decimation step of the affinity cascade."""
    h, w = dims
    kept = pixel_decimate(h, w)
    a = a.tocsr()
    b = a[:, kept].tocsr()
    row_sums = np.asarray(b.sum(axis=1)).ravel()
    row_sums[row_sums == 0] = 1.0  # isolated pixels must not poison the cascade
    c = sparse.diags(1.0 / row_sums) @ b
    a_next = (c.T @ b).tocsr()
    a_next = ((a_next + a_next.T) * 0.5).tocsr()
    dims_next = ((h + 1) // 2, (w + 1) // 2)
    return DecimationStep(kept, b, c.tocsr(), a_next, dims_next)


def _canonical_signs(vectors: np.ndarray) -> np.ndarray:
    """Flip each column so its largest-magnitude entry (first on ties) is >= 0."""
    out = np.array(vectors, copy=True)
    for j in range(out.shape[1]):
        col = out[:, j]
        idx = int(np.argmax(np.abs(col)))
        if col[idx] < 0:
            out[:, j] = -col
    return out


def _split_trivial(eigenvalues: np.ndarray, vectors: np.ndarray,
                   d_sqrt: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Rotate a degenerate zero eigenspace so its first basis vector is the
    trivial one; for disconnected graphs the kept vectors then contrast the
    components instead of mixing arbitrarily with the constant vector."""
    zero = np.flatnonzero(eigenvalues < ZERO_EIGENVALUE_TOL)
    if len(zero) < 2:
        return eigenvalues, vectors
    trivial = d_sqrt / np.linalg.norm(d_sqrt)
    block = vectors[:, zero]
    coeffs = trivial @ block
    residual = block - np.outer(trivial, coeffs)
    q, _ = np.linalg.qr(residual)
    rotated = np.column_stack([trivial, q[:, : len(zero) - 1]])
    vectors = vectors.copy()
    vectors[:, zero] = rotated
    return eigenvalues, vectors


def ncuts(a: sparse.spmatrix, k: int, seed: int = 0,
          maxiter: int | None = None) -> EigenBasis:
    """Eigenvectors 2..k+1 of the normalized Laplacian of `a`.

    Solves the symmetric form D^(-1/2)(D-A)D^(-1/2) and maps the vectors back
    by D^(-1/2); the trivial constant eigenvector is skipped. Deterministic
    for a fixed seed (the sparse path uses a seeded start vector). Running out
    of iterations raises SolverError with the residual of the best pair.
    """
    a = sparse.csr_matrix(a)
    n = a.shape[0]
    if n == 0:
        raise ParameterError("affinity is empty")
    if k < 1:
        raise ParameterError(f"k must be >= 1, got {k}")
    if k + 1 > n:
        raise ParameterError(f"need k+1 <= n, got k={k}, n={n}")

    degrees = np.asarray(a.sum(axis=1)).ravel()
    degrees_safe = np.where(degrees > 0, degrees, 1.0)
    inv_sqrt = 1.0 / np.sqrt(degrees_safe)
    d_sqrt = np.sqrt(degrees_safe)

    scaling = sparse.diags(inv_sqrt)
    sym = (scaling @ a @ scaling).tocsr()

    if n < DENSE_FALLBACK_N:
        lap = np.eye(n) - sym.toarray()
        lap = (lap + lap.T) * 0.5
        eigenvalues, vectors = np.linalg.eigh(lap)
        eigenvalues, vectors = _split_trivial(eigenvalues, vectors, d_sqrt)
        eigenvalues = eigenvalues[: k + 1]
        vectors = vectors[:, : k + 1]
    else:
        # largest of I + D^(-1/2) A D^(-1/2) == smallest of L_sym; avoids shift-invert
        shifted = (sparse.identity(n, format="csr") + sym).tocsr()
        rng = np.random.default_rng(seed)
        v0 = rng.standard_normal(n)
        try:
            mu, vectors = eigsh(shifted, k=k + 1, which="LA", v0=v0,
                                maxiter=maxiter)
        except ArpackNoConvergence as exc:
            residual = None
            if len(exc.eigenvalues):
                residual = float(
                    np.linalg.norm(shifted @ exc.eigenvectors[:, -1]
                                   - exc.eigenvalues[-1] * exc.eigenvectors[:, -1])
                )
            raise SolverError(
                f"eigensolver converged {len(exc.eigenvalues)}/{k + 1} pairs",
                residual=residual,
            ) from exc
        order = np.argsort(-mu)
        eigenvalues = 2.0 - mu[order]
        vectors = vectors[:, order]
        eigenvalues, vectors = _split_trivial(eigenvalues, vectors, d_sqrt)
    kept_values = np.maximum(eigenvalues[1: k + 1], 0.0)
    kept_vectors = vectors[:, 1: k + 1] * inv_sqrt[:, None]
    return EigenBasis(_canonical_signs(kept_vectors), kept_values)


def whiten(basis: EigenBasis) -> EigenBasis:
    """Standardize each column to zero mean, unit (population) variance.

    Zero-variance columns become all-zero.
    """
    x = np.asarray(basis.vectors, dtype=np.float64)
    if x.shape[0] < 2:
        raise ParameterError("whitening needs at least 2 rows")
    centered = x - x.mean(axis=0, keepdims=True)
    sd = centered.std(axis=0, ddof=0)
    out = np.zeros_like(centered)
    nonzero = sd > 0
    out[:, nonzero] = centered[:, nonzero] / sd[nonzero]
    return EigenBasis(out, np.array(basis.eigenvalues, copy=True))


def dncuts(a: sparse.spmatrix, d: int, k: int, dims: tuple[int, int],
           seed: int = 0) -> EigenBasis:
    """Downsampled normalized cuts: decimate d times, solve, upsample, whiten."""
    if d < 0:
        raise ParameterError(f"decimation count must be >= 0, got {d}")
    h, w = dims
    check_h, check_w = h, w
    for _ in range(d):
        check_h, check_w = (check_h + 1) // 2, (check_w + 1) // 2
    if check_h * check_w < k + 1:
        raise ParameterError(
            f"{d} decimations of {dims} leave {check_h * check_w} pixels, need >= {k + 1}"
        )

    steps: list[DecimationStep] = []
    current = sparse.csr_matrix(a)
    cur_dims = (h, w)
    for _ in range(d):
        step = decimate_square_step(current, cur_dims)
        steps.append(step)
        current = step.a_next
        cur_dims = step.dims_next

    basis = ncuts(current, k, seed=seed)
    vectors = basis.vectors
    for step in reversed(steps):
        vectors = step.c @ vectors
    return whiten(EigenBasis(vectors, basis.eigenvalues))


def spectral_gradients(basis: EigenBasis, dims: tuple[int, int],
                       weights: np.ndarray) -> np.ndarray:
    """Contour map from weighted eigenvector gradients.

    Each eigenvector is reshaped to the grid; the strength of an inter-pixel
    edge is the weighted sum of |eigenvector difference| across it, scaled by
    1/sqrt(eigenvalue) (near-zero eigenvalues are skipped), then rescaled so
    the maximum strength is 1 (a zero map stays zero).
    """
    from . import grids

    h, w = dims
    vectors = np.asarray(basis.vectors)
    weights = np.asarray(weights, dtype=np.float64)
    if vectors.shape[0] != h * w:
        raise ParameterError(
            f"basis has {vectors.shape[0]} rows, grid {dims} needs {h * w}"
        )
    if weights.shape != (vectors.shape[1],):
        raise ParameterError(
            f"need one weight per eigenvector, got {weights.shape} for k={vectors.shape[1]}"
        )
    if np.any(weights < 0):
        raise ParameterError("eigenvector weights must be non-negative")

    cm = grids.zero_contour(h, w)
    h_edges = grids.horizontal_edges(cm)
    v_edges = grids.vertical_edges(cm)
    for j in range(vectors.shape[1]):
        lam = float(basis.eigenvalues[j])
        if lam <= 1e-12 or weights[j] == 0:
            continue
        plane = vectors[:, j].reshape(h, w)
        scale = weights[j] / np.sqrt(lam)
        h_edges += scale * np.abs(plane[:, 1:] - plane[:, :-1])
        v_edges += scale * np.abs(plane[1:, :] - plane[:-1, :])
    peak = cm.max()
    if peak > 0:
        cm /= peak
    np.clip(cm, 0.0, 1.0, out=cm)
    return cm
