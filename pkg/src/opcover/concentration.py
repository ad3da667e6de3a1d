"""Tail bounds for sums of i.i.d. operator-valued random variables.

An OperatorRV is a finitely supported distribution over Hermitian
matrices.  Exact tail probabilities enumerate multisets of draws (an
i.i.d. sum only depends on how often each atom occurs), Monte Carlo
paths use a single Philox stream per call and vectorized eigensolves.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import linalg
from .linalg import LN2, BoundViolation
from .rng import make_rng, random_effect, random_hermitian, spawn_seeds

# Exact enumeration is allowed while the number of distinct multisets of
# draws stays below this; beyond it callers must pass trials > 0.
MAX_ENUMERATION = 2_000_000


@dataclass(frozen=True)
class TailReport:
    """Outcome of one tail-probability computation.

    trials == 0 means `probability` is exact (multiset enumeration);
    otherwise it is an empirical frequency and stderr its standard
    error estimate sqrt(p(1-p)/trials).
    """

    probability: float
    bound: float
    n: int
    trials: int
    seed: int
    method: str
    stderr: float = 0.0

    def to_json(self) -> dict:
        return {
            "exact_or_empirical": self.probability,
            "bound": self.bound,
            "n": self.n,
            "trials": self.trials,
            "seed": self.seed,
            "method": self.method,
            "stderr": self.stderr,
        }


class OperatorRV:
    """Finitely supported random Hermitian matrix."""

    def __init__(self, probs, values):
        p = np.asarray(probs, dtype=float)
        if p.ndim != 1 or p.size == 0:
            raise ValueError("probs must be a nonempty vector")
        if p.min() < -1e-12:
            raise ValueError("probs must be nonnegative")
        if abs(p.sum() - 1.0) > 1e-9:
            raise ValueError(f"probs sum to {p.sum()}, expected 1")
        vals = [linalg.require_hermitian(v, name=f"values[{i}]") for i, v in enumerate(values)]
        if len(vals) != p.size:
            raise ValueError("probs and values must have equal length")
        dims = {v.shape[0] for v in vals}
        if len(dims) != 1:
            raise ValueError(f"values have mixed dimensions {sorted(dims)}")
        self.probs = np.clip(p, 0.0, None)
        self.probs /= self.probs.sum()
        self.values = np.stack(vals)

    @classmethod
    def scalar(cls, probs, values) -> "OperatorRV":
        return cls(probs, [np.array([[v]], dtype=complex) for v in values])

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    @property
    def size(self) -> int:
        return self.probs.size

    def mean(self) -> np.ndarray:
        return linalg.hermitize(np.tensordot(self.probs, self.values, axes=1))

    def variance(self) -> np.ndarray:
        m = self.mean()
        sq = np.tensordot(self.probs, self.values @ self.values, axes=1)
        return linalg.hermitize(sq - m @ m)

    def convolve(self, other: "OperatorRV") -> "OperatorRV":
        """Distribution of X + Y for independent X, Y."""
        if self.dim != other.dim:
            raise ValueError("dimension mismatch in convolution")
        probs = np.outer(self.probs, other.probs).ravel()
        values = (self.values[:, None] + other.values[None, :]).reshape(-1, self.dim, self.dim)
        return OperatorRV(probs, list(values))

    def in_unit_interval(self) -> bool:
        eye = np.eye(self.dim)
        return all(
            linalg.is_psd(v) and linalg.psd_leq(v, eye) for v in self.values
        )

    def to_json(self) -> dict:
        return {
            "probs": self.probs.tolist(),
            "values": [linalg.matrix_to_json(v) for v in self.values],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "OperatorRV":
        return cls(obj["probs"], [linalg.matrix_from_json(v) for v in obj["values"]])


# ---------------------------------------------------------------------------
# exact enumeration / Monte Carlo engines


def _compositions(n: int, k: int):
    if k == 1:
        yield (n,)
        return
    for head in range(n + 1):
        for rest in _compositions(n - head, k - 1):
            yield (head,) + rest


def _num_multisets(n: int, k: int) -> int:
    return math.comb(n + k - 1, k - 1)


def _multiset_prob(probs: np.ndarray, counts) -> float:
    coeff = math.factorial(sum(counts))
    for c in counts:
        coeff //= math.factorial(c)
    out = float(coeff)
    for p, c in zip(probs, counts):
        if c:
            out *= p ** c
    return out


def exact_tail(rv: OperatorRV, n: int, event) -> float:
    """Exact Pr{event(X_1 + ... + X_n)} by multiset enumeration."""
    if _num_multisets(n, rv.size) > MAX_ENUMERATION:
        raise ValueError(
            "enumeration size overflow: i.i.d. sum has too many distinct "
            "multisets; pass trials > 0 for Monte Carlo"
        )
    total = 0.0
    counts_f = np.zeros(rv.size)
    for counts in _compositions(n, rv.size):
        counts_f[:] = counts
        s = linalg.hermitize(np.tensordot(counts_f, rv.values, axes=1))
        if event(s):
            total += _multiset_prob(rv.probs, counts)
    return min(1.0, total)


def mc_tail(rv: OperatorRV, n: int, trials: int, seed: int, event_batch) -> tuple[float, float]:
    """Empirical Pr{event} over `trials` i.i.d. sums; returns (p, stderr)."""
    if trials <= 0:
        raise ValueError("trials must be positive for Monte Carlo")
    rng = make_rng(seed)
    idx = rng.choice(rv.size, size=(trials, n), p=rv.probs)
    counts = np.zeros((trials, rv.size))
    for j in range(rv.size):
        counts[:, j] = (idx == j).sum(axis=1)
    sums = np.einsum("tk,kij->tij", counts, rv.values)
    sums = (sums + sums.conj().transpose(0, 2, 1)) / 2
    hits = event_batch(sums)
    p = float(np.mean(hits))
    stderr = math.sqrt(max(p * (1.0 - p), 0.0) / trials)
    return p, stderr


def _batch_min_eig(mats: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    w = np.linalg.eigvalsh(mats)
    scale = np.maximum(1.0, np.abs(w).max(axis=-1))
    return w[..., 0], scale


def _batch_not_leq(x: np.ndarray, a: np.ndarray) -> np.ndarray:
    diff = a[None, :, :] - x
    mn, scale = _batch_min_eig(diff)
    return mn < -linalg.PSD_TOL * scale


def _batch_not_geq(x: np.ndarray, a: np.ndarray) -> np.ndarray:
    diff = x - a[None, :, :]
    mn, scale = _batch_min_eig(diff)
    return mn < -linalg.PSD_TOL * scale


def _batch_outside_interval(x: np.ndarray, lower: np.ndarray, upper: np.ndarray) -> np.ndarray:
    return _batch_not_geq(x, lower) | _batch_not_leq(x, upper)


def _dispatch(rv, n, trials, seed, event, event_batch, bound, method,
              check_bound: bool) -> TailReport:
    if trials == 0:
        p = exact_tail(rv, n, event)
        if check_bound and bound < 1.0 and p > bound + 1e-9:
            raise BoundViolation(
                f"{method}: exact tail {p} exceeds proven bound {bound}"
            )
        return TailReport(p, bound, n, 0, seed, method)
    p, stderr = mc_tail(rv, n, trials, seed, event_batch)
    return TailReport(p, bound, n, trials, seed, method + "-mc", stderr)


# ---------------------------------------------------------------------------
# the bounds themselves


def markov_tail(rv: OperatorRV, a) -> TailReport:
    """Operator Markov: Pr{X not <= A} <= Tr(mean * pinv(A)).

    If supp(A) does not contain supp(mean) the bound is vacuous and the
    report is flagged trivial (bound = inf) rather than failing.
    """
    a = linalg.require_hermitian(a, name="A")
    if not linalg.is_psd(a):
        raise ValueError("A must be PSD")
    m = rv.mean()
    if not linalg.is_psd(m):
        raise ValueError("markov_tail needs a PSD-valued random variable")
    exact = 0.0
    for p, x in zip(rv.probs, rv.values):
        if linalg.not_dominated(x, a):
            exact += float(p)
    exact = min(1.0, exact)
    if not linalg.supports_contained(m, a):
        return TailReport(exact, math.inf, 1, 0, 0, "markov-trivial")
    bound = float(np.trace(m @ linalg.support_inverse(a)).real)
    if bound < 1.0 and exact > bound + 1e-9:
        raise BoundViolation(f"markov: exact {exact} exceeds bound {bound}")
    return TailReport(exact, bound, 1, 0, 0, "markov")


def chebyshev_tail(rv: OperatorRV, delta) -> TailReport:
    """Operator Chebyshev: Pr{|X - M| not <= Delta} <= Tr(S^2 Delta^-2)."""
    delta = linalg.require_hermitian(delta, name="Delta")
    if linalg.min_eigenvalue(delta) <= linalg.PSD_TOL:
        raise ValueError("Delta must be positive definite")
    m = rv.mean()
    exact = 0.0
    for p, x in zip(rv.probs, rv.values):
        if linalg.not_dominated(linalg.abs_herm(x - m), delta):
            exact += float(p)
    exact = min(1.0, exact)
    s2 = rv.variance()
    bound = float(np.trace(s2 @ linalg.herm_power(delta, -2.0)).real)
    if exact > min(1.0, bound) + 1e-9:
        raise BoundViolation(f"chebyshev: exact {exact} exceeds bound {bound}")
    return TailReport(exact, bound, 1, 0, 0, "chebyshev")


def weak_law_tail(rv: OperatorRV, n: int, delta, trials: int = 0, seed: int = 0) -> TailReport:
    """Pr{(1/n) sum X_i outside [M - Delta, M + Delta]} <= Tr(S^2 Delta^-2)/n."""
    if n < 1:
        raise ValueError("n must be >= 1")
    delta = linalg.require_hermitian(delta, name="Delta")
    if linalg.min_eigenvalue(delta) <= linalg.PSD_TOL:
        raise ValueError("Delta must be positive definite")
    m = rv.mean()
    lower, upper = m - delta, m + delta
    bound = float(np.trace(rv.variance() @ linalg.herm_power(delta, -2.0)).real) / n

    def event(s):
        return not linalg.in_operator_interval(s / n, lower, upper)

    def event_batch(sums):
        return _batch_outside_interval(sums / n, lower, upper)

    return _dispatch(rv, n, trials, seed, event, event_batch, bound,
                     "weak-law", check_bound=True)


def bernstein_bound(rv: OperatorRV, a, t, n: int) -> float:
    """Exponential-moment bound d * || E exp(T(X - A)T) ||^n on the upper tail.

    T must be Hermitian and invertible (T*T > 0); the polar reduction to
    this case is the caller's business.
    """
    a = linalg.require_hermitian(a, name="A")
    t = linalg.require_hermitian(t, name="T")
    if min(abs(w) for w in np.linalg.eigvalsh(t)) <= linalg.PSD_TOL:
        raise ValueError("T must be invertible")
    acc = np.zeros((rv.dim, rv.dim), dtype=complex)
    for p, x in zip(rv.probs, rv.values):
        acc += p * linalg.herm_exp(t @ (x - a) @ t)
    return rv.dim * linalg.spectral_norm(acc) ** n


def chernoff_tail(rv: OperatorRV, n: int, a: float, m: float, side: str = "upper",
                  trials: int = 0, seed: int = 0) -> TailReport:
    """Operator Chernoff bound d * 2^(-n D(a||m)) for [0,1]-valued atoms.

    side="upper": needs mean <= m*1 and 1 >= a >= m >= 0; the event is
    {sum X_i not <= n a 1}.  side="lower" mirrors both (event {sum not
    >= n a 1}, mean >= m*1, a <= m); the exponent is unchanged because
    D(1-a || 1-m) = D(a || m).
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if not rv.in_unit_interval():
        raise ValueError("chernoff_tail needs atoms in [0, 1]")
    if not (0.0 <= a <= 1.0 and 0.0 <= m <= 1.0):
        raise ValueError("a and m must lie in [0, 1]")
    eye = np.eye(rv.dim)
    mean = rv.mean()
    if side == "upper":
        if a < m:
            raise ValueError("upper tail needs a >= m")
        if not linalg.psd_leq(mean, m * eye):
            raise ValueError("upper tail needs mean <= m * identity")
    elif side == "lower":
        if a > m:
            raise ValueError("lower tail needs a <= m")
        if not linalg.psd_leq(m * eye, mean):
            raise ValueError("lower tail needs mean >= m * identity")
    else:
        raise ValueError(f"unknown side {side!r}")

    div = linalg.binary_divergence(a, m)
    bound = 0.0 if math.isinf(div) else rv.dim * 2.0 ** (-n * div)
    target = n * a * eye

    if side == "upper":
        def event(s):
            return linalg.not_dominated(s, target)

        def event_batch(sums):
            return _batch_not_leq(sums, target)
    else:
        def event(s):
            return not linalg.psd_leq(target, s)

        def event_batch(sums):
            return _batch_not_geq(sums, target)

    return _dispatch(rv, n, trials, seed, event, event_batch, bound,
                     f"chernoff-{side}", check_bound=True)


def two_sided_chernoff(rv: OperatorRV, n: int, eps: float,
                       trials: int = 0, seed: int = 0) -> TailReport:
    """Two-sided bound 2d * 2^(-n eps^2 mu / (2 ln 2)), mu = min eig of the mean."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if not 0.0 <= eps <= 0.5:
        raise ValueError("eps must lie in [0, 1/2]")
    if not rv.in_unit_interval():
        raise ValueError("two_sided_chernoff needs atoms in [0, 1]")
    m = rv.mean()
    mu = linalg.min_eigenvalue(m)
    if mu <= linalg.PSD_TOL:
        raise ValueError("mean must be positive definite (mu > 0)")
    bound = 2.0 * rv.dim * 2.0 ** (-n * eps * eps * mu / (2.0 * LN2))
    lower, upper = (1.0 - eps) * m, (1.0 + eps) * m

    def event(s):
        return not linalg.in_operator_interval(s / n, lower, upper)

    def event_batch(sums):
        return _batch_outside_interval(sums / n, lower, upper)

    # check_bound=False: the quadratic simplification of the exponent is
    # not a lower bound on D((1+eps)mu || mu) when mu < ~0.117, so the
    # displayed constant can undershoot the true tail in that corner.
    # The report carries both numbers; callers compare where it applies.
    return _dispatch(rv, n, trials, seed, event, event_batch, bound,
                     "two-sided", check_bound=False)


# ---------------------------------------------------------------------------
# numeric probes for the open conjectures (reported, never asserted)


@dataclass
class ConjectureReport:
    which: int
    dim: int
    instances: int
    min_slack: float
    violations: int
    slacks: list = field(default_factory=list)
    details: list = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "which": self.which,
            "dim": self.dim,
            "instances": self.instances,
            "min_slack": self.min_slack,
            "violations": self.violations,
            "slacks": self.slacks,
            "details": self.details,
        }


def _probe_product_trace(rng, dim: int) -> tuple[float, dict]:
    # Tr E exp(Z1 + Z2) vs Tr((E exp Z)^2); slack >= 0 is a theorem at
    # n = 2 (term-by-term Golden-Thompson), probed numerically anyway.
    k = int(rng.integers(2, 4))
    probs = rng.dirichlet(np.ones(k))
    atoms = [random_hermitian(rng, dim) for _ in range(k)]
    lhs = 0.0
    for pi, zi in zip(probs, atoms):
        for pj, zj in zip(probs, atoms):
            lhs += pi * pj * float(np.trace(linalg.herm_exp(zi + zj)).real)
    avg = sum(p * linalg.herm_exp(z) for p, z in zip(probs, atoms))
    rhs = float(np.trace(avg @ avg).real)
    return rhs - lhs, {"lhs": lhs, "rhs": rhs, "support": k}


def _probe_log_sum_exp(rng, dim: int) -> tuple[float, dict]:
    # min eig of log(sum exp A) + log(sum exp B) - log(sum exp(A_i + B_j)).
    na, nb = (int(rng.integers(2, 4)) for _ in range(2))
    fam_a = [random_hermitian(rng, dim) for _ in range(na)]
    fam_b = [random_hermitian(rng, dim) for _ in range(nb)]
    cross = sum(linalg.herm_exp(ai + bj) for ai in fam_a for bj in fam_b)
    lhs = linalg.herm_log(cross, base=math.e)
    rhs = (linalg.herm_log(sum(linalg.herm_exp(a) for a in fam_a), base=math.e)
           + linalg.herm_log(sum(linalg.herm_exp(b) for b in fam_b), base=math.e))
    slack = linalg.min_eigenvalue(rhs - lhs)
    return slack, {"family_sizes": [na, nb]}


def _probe_divergence_tail(rng, dim: int) -> tuple[float, dict]:
    # Conjectured Tr exp(-n * Dop(A || M)) against the exact tail of a
    # small i.i.d. sum; Dop evaluated in nats to pair with natural exp.
    k = int(rng.integers(2, 4))
    probs = rng.dirichlet(np.ones(k))
    atoms = [random_effect(rng, dim) for _ in range(k)]
    rv = OperatorRV(probs, atoms)
    mean = rv.mean()
    w = np.linalg.eigvalsh(mean)
    if w[0] < 1e-3 or w[-1] > 1.0 - 1e-3:  # keep M strictly inside (0, 1)
        mean = 0.9 * mean + 0.05 * np.eye(dim)
        atoms = [0.9 * x + 0.05 * np.eye(dim) for x in atoms]
        rv = OperatorRV(probs, atoms)
        mean = rv.mean()
    theta = float(rng.uniform(0.2, 0.8))
    a_op = (1.0 - theta) * mean + theta * np.eye(dim)
    n = int(rng.integers(2, 6))
    div_nats = LN2 * linalg.operator_divergence(a_op, mean)
    conj_bound = float(np.trace(linalg.herm_exp(-n * div_nats)).real)
    target = n * a_op
    exact = exact_tail(rv, n, lambda s: linalg.not_dominated(s, target))
    aux = {"n": n, "theta": theta, "conjectured": conj_bound, "exact": exact}
    a_scalar = linalg.min_eigenvalue(a_op)
    m_scalar = linalg.spectral_norm(mean)
    if a_scalar >= m_scalar:
        aux["chernoff"] = dim * 2.0 ** (-n * linalg.binary_divergence(a_scalar, m_scalar))
    return conj_bound - exact, aux


_PROBES = {1: _probe_product_trace, 2: _probe_log_sum_exp, 3: _probe_divergence_tail}


def conjecture_probe(which: int, dim: int, count: int, seed: int) -> ConjectureReport:
    """Sample random instances of one of the open matrix inequalities.

    Returns per-instance slacks (negative slack = observed violation).
    This is a probe: nothing here asserts that a conjecture is true.
    """
    if which not in _PROBES:
        raise ValueError(f"unknown conjecture {which}; expected 1, 2 or 3")
    if not 1 <= dim <= 6:
        raise ValueError("dim must lie in 1..6")
    probe = _PROBES[which]
    slacks: list[float] = []
    details: list[dict] = []
    violations = 0
    for sub in spawn_seeds(seed, count):
        rng = make_rng(sub)
        slack, aux = probe(rng, dim)
        slacks.append(float(slack))
        details.append(aux)
        if slack < -1e-9:
            violations += 1
    return ConjectureReport(
        which=which,
        dim=dim,
        instances=count,
        min_slack=min(slacks) if slacks else math.nan,
        violations=violations,
        slacks=slacks,
        details=details,
    )
