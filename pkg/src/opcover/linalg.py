"""Spectral calculus for Hermitian matrices.

Everything here works on plain complex ndarrays.  Matrix functions go
through a full eigendecomposition (no Pade/Krylov shortcuts): dimensions
in this package are tiny and the eigenbasis is reused by callers.

Conventions: entropies and divergences are reported in bits, `herm_log`
defaults to base 2.  Logarithms of singular PSD matrices are taken on
the support (kernel eigenvalues contribute zero).
"""

from __future__ import annotations

import math

import numpy as np

# Tolerances used across the package.  PSD checks are relative to the
# spectral norm; never compare eigenvalues to exact zero.
PSD_TOL = 1e-9
HERM_TOL = 1e-10
LN2 = math.log(2.0)


class BoundViolation(RuntimeError):
    """A proven inequality failed numerically; indicates a bug upstream."""


def as_matrix(a) -> np.ndarray:
    m = np.asarray(a, dtype=np.complex128)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    return m


def hermitize(a) -> np.ndarray:
    """Average away the anti-Hermitian part (numerical hygiene only)."""
    m = as_matrix(a)
    return (m + m.conj().T) / 2


def is_hermitian(a, tol: float = HERM_TOL) -> bool:
    m = as_matrix(a)
    scale = max(1.0, float(np.abs(m).max(initial=0.0)))
    return bool(np.abs(m - m.conj().T).max(initial=0.0) <= tol * scale)


def require_hermitian(a, tol: float = HERM_TOL, name: str = "matrix") -> np.ndarray:
    m = as_matrix(a)
    if not is_hermitian(m, tol):
        raise ValueError(f"{name} is not Hermitian within {tol}")
    return hermitize(m)


def eigh(a) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (ascending) and eigenvectors of a Hermitian matrix."""
    w, u = np.linalg.eigh(hermitize(a))
    return w, u


def spectral_norm(a) -> float:
    w = np.linalg.eigvalsh(hermitize(a))
    return float(np.abs(w).max(initial=0.0))


def min_eigenvalue(a) -> float:
    return float(np.linalg.eigvalsh(hermitize(a))[0])


def psd_tolerance(a) -> float:
    return PSD_TOL * max(1.0, spectral_norm(a))


def is_psd(a, tol: float | None = None) -> bool:
    m = hermitize(a)
    if tol is None:
        tol = psd_tolerance(m)
    return min_eigenvalue(m) >= -tol


def psd_leq(a, b) -> bool:
    """Loewner order a <= b, up to the package PSD tolerance."""
    diff = hermitize(b) - hermitize(a)
    return min_eigenvalue(diff) >= -psd_tolerance(diff)


def not_dominated(x, a) -> bool:
    """Decide the tail event "x is NOT <= a" (strict order violation)."""
    return not psd_leq(x, a)


def in_operator_interval(x, lower, upper) -> bool:
    return psd_leq(lower, x) and psd_leq(x, upper)


def require_density(rho, tol: float = 1e-9, name: str = "rho") -> np.ndarray:
    m = require_hermitian(rho, name=name)
    tr = float(np.trace(m).real)
    if abs(tr - 1.0) > tol:
        raise ValueError(f"{name} has trace {tr}, expected 1")
    if not is_psd(m):
        raise ValueError(f"{name} has a negative eigenvalue beyond tolerance")
    return m


def _clamped_eigs(a, name: str) -> tuple[np.ndarray, np.ndarray]:
    # Eigenvalues in (-tol, 0) are clamped to zero; anything more negative
    # is a hard error for sqrt/log/inverse-type functions.
    m = hermitize(a)
    w, u = np.linalg.eigh(m)
    tol = psd_tolerance(m)
    if w[0] < -tol:
        raise ValueError(f"{name}: negative eigenvalue {w[0]} below tolerance")
    return np.clip(w, 0.0, None), u


def herm_fn(a, fn) -> np.ndarray:
    """Apply a scalar function to a Hermitian matrix eigenvalue-wise."""
    w, u = eigh(a)
    return hermitize((u * fn(w)) @ u.conj().T)


def herm_exp(a) -> np.ndarray:
    """Natural matrix exponential of a Hermitian matrix."""
    return herm_fn(a, np.exp)


def herm_sqrt(a) -> np.ndarray:
    w, u = _clamped_eigs(a, "sqrt")
    return hermitize((u * np.sqrt(w)) @ u.conj().T)


def herm_log(a, base: float = 2.0) -> np.ndarray:
    """Matrix logarithm on the support; kernel eigenvalues map to 0.

    Defaults to base 2 (the reporting convention for rates).  Pass
    ``base=math.e`` for the natural log.
    """
    w, u = _clamped_eigs(a, "log")
    out = np.zeros_like(w)
    pos = w > 0
    out[pos] = np.log(w[pos]) / math.log(base)
    return hermitize((u * out) @ u.conj().T)


def herm_power(a, s: float) -> np.ndarray:
    w, u = _clamped_eigs(a, "power")
    out = np.zeros_like(w)
    pos = w > 0
    out[pos] = w[pos] ** s
    if s >= 0:
        # 0**s is fine for s >= 0 except s == 0, where we use the support
        # convention (kernel stays kernel, matching pinv-style usage).
        out[~pos] = 0.0 if s != 0 else 0.0
    return hermitize((u * out) @ u.conj().T)


def support_inverse(a) -> np.ndarray:
    """Moore-Penrose inverse of a PSD matrix via its eigenbasis."""
    return herm_power(a, -1.0)


def support_projector(a, tol: float | None = None) -> np.ndarray:
    m = hermitize(a)
    if tol is None:
        tol = psd_tolerance(m)
    w, u = np.linalg.eigh(m)
    ind = (np.abs(w) > tol).astype(float)
    return hermitize((u * ind) @ u.conj().T)


def supports_contained(a, b, tol: float | None = None) -> bool:
    """True when supp(a) is contained in supp(b), both PSD."""
    pb = support_projector(b, tol)
    m = hermitize(a)
    resid = m - pb @ m @ pb
    return spectral_norm(resid) <= psd_tolerance(m)


def abs_herm(a) -> np.ndarray:
    """Spectral absolute value |A| = sqrt(A^2)."""
    return herm_fn(a, np.abs)


def trace_norm(a) -> float:
    w = np.linalg.eigvalsh(hermitize(a))
    return float(np.abs(w).sum())


def _canonical_difference(rho, sigma) -> np.ndarray:
    # IEEE subtraction is sign-symmetric, so flipping the sign of the
    # difference by its first nonzero entry makes trace_distance(r, s)
    # and trace_distance(s, r) operate on the identical float matrix.
    diff = as_matrix(rho) - as_matrix(sigma)
    for z in diff.ravel():
        if z.real != 0.0:
            return diff if z.real > 0 else -diff
        if z.imag != 0.0:
            return diff if z.imag > 0 else -diff
    return diff


def trace_distance(rho, sigma) -> float:
    """Full 1-norm distance sum |eig(rho - sigma)| (no 1/2 factor)."""
    return trace_norm(hermitize(_canonical_difference(rho, sigma)))


def von_neumann_entropy(rho) -> float:
    """Entropy of a density matrix in bits."""
    w = np.linalg.eigvalsh(require_density(rho))
    w = np.clip(w, 0.0, 1.0)
    pos = w > 1e-15
    return float(-(w[pos] * np.log2(w[pos])).sum())


def shannon_entropy(p) -> float:
    p = np.asarray(p, dtype=float)
    pos = p > 1e-15
    return float(-(p[pos] * np.log2(p[pos])).sum())


def check_distribution(p, size: int) -> np.ndarray:
    p = np.asarray(p, dtype=float).reshape(-1)
    if p.shape != (size,):
        raise ValueError(f"distribution has length {p.size}, expected {size}")
    if p.min(initial=0.0) < -1e-12:
        raise ValueError("distribution has negative entries")
    total = float(p.sum())
    if abs(total - 1.0) > 1e-9:
        raise ValueError(f"distribution sums to {total}, expected 1")
    # clip stray negatives and renormalize so numpy's multinomial never
    # rejects the vector
    return np.maximum(p, 0.0) / float(np.maximum(p, 0.0).sum())


def binary_divergence(a: float, m: float) -> float:
    """D(a || m) between Bernoulli parameters, in bits.

    Infinite divergences (m at 0 or 1 with a != m, or a outside the
    support of m) come back as math.inf rather than raising.
    """
    if not 0.0 <= a <= 1.0 or not 0.0 <= m <= 1.0:
        raise ValueError("binary divergence needs parameters in [0, 1]")
    if m in (0.0, 1.0):
        return 0.0 if a == m else math.inf
    out = 0.0
    if a > 0.0:
        out += a * math.log2(a / m)
    if a < 1.0:
        out += (1.0 - a) * math.log2((1.0 - a) / (1.0 - m))
    return out


def divergence_quadratic_bound(x: float, mu: float) -> float:
    """Lower bound x^2 * mu / (2 ln 2) on D((1+x)mu || mu), in bits.

    Valid for -1/2 <= x <= 1/2; callers outside that window get the
    formula anyway but the inequality is only guaranteed inside it.
    """
    return x * x * mu / (2.0 * LN2)


def operator_divergence(a, m) -> np.ndarray:
    """Two-sided operator divergence between effects, in bits.

    sqrt(A)(log A - log M)sqrt(A) + sqrt(1-A)(log(1-A) - log(1-M))sqrt(1-A)
    with base-2 logs; A may touch 0 or 1 (support convention), M may not.
    """
    a = require_hermitian(a, name="A")
    m = require_hermitian(m, name="M")
    if a.shape != m.shape:
        raise ValueError("A and M must have equal dimensions")
    eye = np.eye(a.shape[0])
    if not (is_psd(a) and is_psd(eye - a)):
        raise ValueError("A must satisfy 0 <= A <= 1")
    wm = np.linalg.eigvalsh(m)
    if wm[0] <= PSD_TOL or wm[-1] >= 1.0 - PSD_TOL:
        raise ValueError("M must have eigenvalues strictly inside (0, 1)")

    def half(x, y):
        # sqrt(x) annihilates ker(x), so the support convention in
        # herm_log(x) yields the correct limit of x_eps -> x.
        r = herm_sqrt(x)
        return r @ (herm_log(x) - herm_log(y)) @ r

    return hermitize(half(a, m) + half(eye - a, eye - m))


def is_projector(p, tol: float = 1e-9) -> bool:
    m = as_matrix(p)
    if not is_hermitian(m, tol):
        return False
    scale = max(1.0, spectral_norm(m))
    return spectral_norm(m @ m - m) <= tol * scale


def gentle_projection(rho, pi) -> tuple[np.ndarray, float]:
    """Clip a (sub)normalized state to a projector's range.

    Returns (pi @ rho @ pi, sqrt(8 * lam)) where lam = 1 - Tr(rho pi).
    The guaranteed 1-norm bound is re-checked on the way out.
    """
    r = require_hermitian(rho, name="rho")
    p = as_matrix(pi)
    if not is_projector(p):
        raise ValueError("pi is not an orthogonal projector within 1e-9")
    if not is_psd(r):
        raise ValueError("rho must be PSD")
    lam = 1.0 - float(np.trace(r @ p).real)
    lam = min(1.0, max(0.0, lam))
    clipped = hermitize(p @ r @ p)
    bound = math.sqrt(8.0 * lam)
    actual = trace_norm(r - clipped)
    if actual > bound + 1e-9:
        raise BoundViolation(
            f"gentle projection: 1-norm {actual} exceeds sqrt(8 lam) = {bound}"
        )
    return clipped, bound


def kron_all(mats) -> np.ndarray:
    out = np.array([[1.0 + 0.0j]])
    for m in mats:
        out = np.kron(out, as_matrix(m))
    return out


def frobenius(a) -> float:
    return float(np.linalg.norm(np.asarray(a)))


def commutator_norm(a, b) -> float:
    a = as_matrix(a)
    b = as_matrix(b)
    return frobenius(a @ b - b @ a)


# ---------------------------------------------------------------------------
# JSON wire format for matrices: {"dim": d, "re": [[...]], "im": [[...]]}


def matrix_to_json(a) -> dict:
    m = as_matrix(a)
    return {
        "dim": int(m.shape[0]),
        "re": m.real.tolist(),
        "im": m.imag.tolist(),
    }


def matrix_from_json(obj: dict) -> np.ndarray:
    dim = int(obj["dim"])
    re = np.asarray(obj["re"], dtype=float)
    # "im" may be omitted for real matrices.
    im = np.asarray(obj.get("im", np.zeros((dim, dim))), dtype=float)
    if re.shape != (dim, dim) or im.shape != (dim, dim):
        raise ValueError(f"matrix payload shape mismatch for dim {dim}")
    return re + 1j * im
