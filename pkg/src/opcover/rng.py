"""Seeded randomness.

All stochastic entry points in this package take an explicit integer
seed and build a Philox counter-based generator from it.  Sub-streams
(per retry, per sweep run, per type class) are derived by SeedSequence
spawning, so results never depend on execution order or worker count.
"""

from __future__ import annotations

import numpy as np

from . import linalg


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(int(seed))))


def spawn_seeds(seed: int, n: int) -> list[int]:
    """Derive n child seeds from a root seed, reportable as plain ints."""
    children = np.random.SeedSequence(int(seed)).spawn(n)
    return [int(c.generate_state(1, np.uint64)[0]) for c in children]


def haar_unitary(rng: np.random.Generator, dim: int) -> np.ndarray:
    z = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    q, r = np.linalg.qr(z)
    # fix phases so the distribution is exactly Haar
    d = np.diagonal(r)
    return q * (d / np.abs(d))


def random_hermitian(rng: np.random.Generator, dim: int, scale: float = 1.0) -> np.ndarray:
    z = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    return linalg.hermitize(z) * scale


def random_psd(rng: np.random.Generator, dim: int) -> np.ndarray:
    z = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    return linalg.hermitize(z @ z.conj().T)


def random_effect(rng: np.random.Generator, dim: int) -> np.ndarray:
    """Random operator with spectrum drawn uniformly from [0, 1]."""
    u = haar_unitary(rng, dim)
    w = rng.uniform(0.0, 1.0, size=dim)
    return linalg.hermitize((u * w) @ u.conj().T)


def random_density(rng: np.random.Generator, dim: int) -> np.ndarray:
    m = random_psd(rng, dim)
    return m / np.trace(m).real


def random_state(rng: np.random.Generator, dim: int) -> np.ndarray:
    v = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    v /= np.linalg.norm(v)
    return np.outer(v, v.conj())


def random_projector(rng: np.random.Generator, dim: int, rank: int) -> np.ndarray:
    u = haar_unitary(rng, dim)[:, :rank]
    return linalg.hermitize(u @ u.conj().T)


def random_distribution(rng: np.random.Generator, k: int) -> np.ndarray:
    return rng.dirichlet(np.ones(k))
