"""Dense Hermitian linear algebra and the complex-to-real embedding.

Complex vectors and Hermitian matrices are plain numpy arrays. The helpers
here validate and symmetrize them once, so downstream code can assume exact
Hermitian structure.
"""

from dataclasses import dataclass

import numpy as np

from .errors import NotPSDError, ValidationError

HERMITIAN_RTOL = 1e-12
PSD_CLAMP = 1e-10


def as_vector(a, name="vector"):
    v = np.asarray(a, dtype=complex)
    if v.ndim != 1 or v.size < 1:
        raise ValidationError(f"{name} must be a nonempty 1-D array, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValidationError(f"{name} has non-finite entries")
    return v


def as_hermitian(M, name="matrix", rtol=HERMITIAN_RTOL):
    """Validate a square Hermitian matrix and return its symmetrized copy.

    Parameters
    ----------
    M : array_like
        Square complex (or real) matrix.
    rtol : float
        Allowed ``||M - M^H||_F / ||M||_F`` before rejecting.
    """
    A = np.array(M, dtype=complex)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] < 1:
        raise ValidationError(f"{name} must be square, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValidationError(f"{name} has non-finite entries")
    scale = np.linalg.norm(A)
    if np.linalg.norm(A - A.conj().T) > rtol * max(scale, np.finfo(float).tiny):
        raise ValidationError(f"{name} is not Hermitian")
    return 0.5 * (A + A.conj().T)


def eig_hermitian(M):
    """Eigen-decomposition with eigenvalues sorted in descending order.

    Returns
    -------
    w : ndarray, shape (N,)
        Real eigenvalues, largest first.
    V : ndarray, shape (N, N)
        Unitary matrix whose columns are the matching eigenvectors.
    """
    A = as_hermitian(M)
    w, V = np.linalg.eigh(A)
    return w[::-1].copy(), V[:, ::-1].copy()


def psd_sqrt(M):
    """Hermitian PSD square root S with S @ S == M."""
    w, V = eig_hermitian(M)
    lam_max = max(w[0], 0.0)
    if w[-1] < -PSD_CLAMP * lam_max or (lam_max == 0.0 and w[-1] < 0.0):
        raise NotPSDError(f"smallest eigenvalue {w[-1]:.3e} below clamp threshold")
    root = np.sqrt(np.clip(w, 0.0, None))
    S = (V * root) @ V.conj().T
    return 0.5 * (S + S.conj().T)


def embed_vector(a):
    """[Re a; Im a]."""
    a = np.asarray(a, dtype=complex)
    return np.concatenate([a.real, a.imag])


def unembed_vector(x):
    x = np.asarray(x, dtype=float)
    n = x.size // 2
    return x[:n] + 1j * x[n:]


def embed_matrix(B):
    """[[Re B, -Im B], [Im B, Re B]], valid for rectangular B."""
    B = np.asarray(B, dtype=complex)
    return np.block([[B.real, -B.imag], [B.imag, B.real]])


@dataclass(frozen=True)
class RealEmbedding:
    """Real-arithmetic images of a Hermitian B, a factor Q and a vector a.

    With ``x = embed_vector(w)``: ``x @ B @ x == w^H B w``,
    ``||Q @ x|| == ||Q w||`` and ``a @ x == Re(a^H w)``.
    """

    B: np.ndarray
    Q: np.ndarray
    a: np.ndarray


def real_embed(B, Q, a):
    B = as_hermitian(B, "B")
    Q = np.asarray(Q, dtype=complex)
    a = as_vector(a, "a")
    n = B.shape[0]
    if Q.ndim != 2 or Q.shape[1] != n or a.size != n:
        raise ValidationError(
            f"dimension mismatch: B {B.shape}, Q {Q.shape}, a {a.shape}"
        )
    Bt = embed_matrix(B)
    return RealEmbedding(B=0.5 * (Bt + Bt.T), Q=embed_matrix(Q), a=embed_vector(a))
