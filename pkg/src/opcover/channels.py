"""Classical-quantum channels, Holevo capacity, and frequency typicality.

A channel here is a finite family of density operators indexed by input
symbols; classical channels embed as commuting diagonal families.  The
module computes output statistics, Holevo information and its maximum,
and the type-class machinery (typical sequences, typical projectors,
conditional typical projectors) whose quantitative guarantees drive the
covering constructions downstream.

Typical projectors are built frequency-style: diagonalize each letter
state, merge degenerate eigenvalues into eigenspace classes, and keep
the product eigenvectors whose class occupation counts stay within
alpha standard deviations of their means.  All trace guarantees are
Chebyshev bounds, so they hold on every instance, not just on average.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from . import linalg
from .linalg import BoundViolation, check_distribution

# Largest product dimension d^n a projector builder will materialize.
MAX_TENSOR_DIM = 4096
# Sequence spaces larger than this are refused by typical_set.
MAX_SEQUENCE_SPACE = 1_000_000
MAX_TYPES = 5_000_000
# Eigenvalues closer than this merge into one eigenspace class before
# any typicality test; keeps the construction basis-independent.
DEGENERACY_ATOL = 1e-9

# O(dim^3) projector invariant checks are skipped above this size; the
# construction is diagonal in a single product eigenbasis either way.
_VALIDATE_DIM = 1024


class CQChannel:
    """Map from a finite input alphabet into density operators.

    States are stored as a stack of shape (alphabet_size, dim, dim);
    every one is validated as a density operator on construction.
    """

    def __init__(self, states):
        arr = np.asarray(states, dtype=np.complex128)
        if arr.ndim != 3 or arr.shape[1] != arr.shape[2]:
            raise ValueError("states must be a stack of square matrices")
        if arr.shape[0] < 1:
            raise ValueError("channel needs at least one input symbol")
        for x in range(arr.shape[0]):
            arr[x] = linalg.require_density(arr[x], name=f"state {x}")
        self.states = arr

    @property
    def alphabet_size(self) -> int:
        return int(self.states.shape[0])

    @property
    def dim(self) -> int:
        return int(self.states.shape[1])

    def state(self, x: int) -> np.ndarray:
        return self.states[int(x)]

    def is_commuting(self, tol: float = 1e-10) -> bool:
        for a, b in itertools.combinations(self.states, 2):
            if linalg.commutator_norm(a, b) > tol * self.dim:
                return False
        return True

    def to_json(self) -> dict:
        return {
            "alphabet_size": self.alphabet_size,
            "dim": self.dim,
            "states": [linalg.matrix_to_json(w) for w in self.states],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "CQChannel":
        states = [linalg.matrix_from_json(s) for s in obj["states"]]
        ch = cls(states)
        if ch.alphabet_size != int(obj["alphabet_size"]) or ch.dim != int(obj["dim"]):
            raise ValueError("channel payload dimensions do not match states")
        return ch


def embed_classical(w) -> CQChannel:
    """Lift a row-stochastic matrix to a channel of diagonal states.

    Row x becomes diag(w[x]) in the standard basis, so all outputs
    commute and the channel carries exactly the classical statistics.
    """
    w = np.asarray(w, dtype=float)
    if w.ndim != 2 or w.shape[0] < 1 or w.shape[1] < 1:
        raise ValueError("stochastic matrix must be 2-d and nonempty")
    if w.min() < -1e-12:
        raise ValueError("stochastic matrix has negative entries")
    sums = w.sum(axis=1)
    if np.abs(sums - 1.0).max() > 1e-12:
        raise ValueError(f"rows must sum to 1 within 1e-12, got {sums.tolist()}")
    states = np.stack([np.diag(np.maximum(row, 0.0)).astype(np.complex128) for row in w])
    return CQChannel(states)


def output_state(p, channel: CQChannel) -> np.ndarray:
    """Average output sum_x p(x) W_x."""
    p = check_distribution(p, channel.alphabet_size)
    return linalg.hermitize(np.tensordot(p, channel.states, axes=1))


def tensor_output(xn, channel: CQChannel) -> np.ndarray:
    """Product output W_{x_1} (x) ... (x) W_{x_n} for a symbol sequence."""
    xn = _check_sequence(xn, channel.alphabet_size)
    if channel.dim ** len(xn) > MAX_TENSOR_DIM:
        raise ValueError(
            f"tensor output dimension {channel.dim}^{len(xn)} exceeds {MAX_TENSOR_DIM}"
        )
    return linalg.kron_all(channel.states[x] for x in xn)


def _check_sequence(xn, alphabet_size: int) -> tuple[int, ...]:
    xn = tuple(int(x) for x in xn)
    if not xn:
        raise ValueError("symbol sequence must be nonempty")
    if any(x < 0 or x >= alphabet_size for x in xn):
        raise ValueError(f"symbols must lie in 0..{alphabet_size - 1}")
    return xn


def holevo_information(p, channel: CQChannel) -> float:
    """H(output mixture) - sum_x p(x) H(W_x), in bits.

    Concavity of entropy makes this nonnegative; float dust below zero
    is clamped.
    """
    p = check_distribution(p, channel.alphabet_size)
    mixed = linalg.von_neumann_entropy(output_state(p, channel))
    conditional = sum(
        float(px) * linalg.von_neumann_entropy(w)
        for px, w in zip(p, channel.states)
        if px > 0.0
    )
    return max(0.0, mixed - conditional)


@dataclass(frozen=True)
class CapacitySolution:
    """Certified maximum of the Holevo information over input laws.

    `bits` is the information of the returned distribution; `gap` is
    the duality slack max_x D(W_x || PW) - I(P), a rigorous upper bound
    on how far `bits` can sit below the true capacity.
    """

    bits: float
    input_distribution: np.ndarray
    gap: float
    iterations: int

    def to_json(self) -> dict:
        return {
            "bits": self.bits,
            "input_distribution": self.input_distribution.tolist(),
            "gap": self.gap,
            "iterations": self.iterations,
        }


def _divergences_from_output(channel: CQChannel, letter_entropies, sigma) -> np.ndarray:
    """D(W_x || sigma) in bits for all x at once.

    Kernel directions of sigma are skipped; the callers keep every
    letter inside sigma's support, so the skipped weight is float dust.
    """
    s, v = linalg.eigh(sigma)
    s = np.clip(s, 0.0, None)
    pos = s > 1e-15
    # weights[x, j] = <v_j| W_x |v_j>
    weights = np.einsum("ji,xjk,ki->xi", v.conj(), channel.states, v).real
    weights = np.clip(weights, 0.0, None)
    cross = weights[:, pos] @ np.log2(s[pos])
    return -np.asarray(letter_entropies) - cross


def capacity(channel: CQChannel, tol: float = 1e-9, max_iter: int = 200_000) -> CapacitySolution:
    """Maximize Holevo information by multiplicative ascent from uniform.

    Each round scales p(x) by 2^{D(W_x || PW)} and renormalizes; the
    iteration stops once the duality gap max_x D(W_x || PW) - I(P)
    drops to tol, which certifies the answer to that absolute accuracy.
    """
    if tol <= 0.0 or max_iter < 1:
        raise ValueError("tol must be positive and max_iter at least 1")
    a = channel.alphabet_size
    letter_entropies = [linalg.von_neumann_entropy(w) for w in channel.states]
    p = np.full(a, 1.0 / a)
    for it in range(1, max_iter + 1):
        sigma = linalg.hermitize(np.tensordot(p, channel.states, axes=1))
        div = _divergences_from_output(channel, letter_entropies, sigma)
        info = float(p @ div)
        gap = float(div.max() - info)
        if gap <= tol:
            return CapacitySolution(
                bits=max(0.0, info),
                input_distribution=p.copy(),
                gap=gap,
                iterations=it,
            )
        p = p * np.exp2(div - div.max())
        p = p / p.sum()
    raise RuntimeError(
        f"capacity iteration still has gap {gap} after {max_iter} rounds"
    )


# ---------------------------------------------------------------------------
# Types (empirical distributions) and typical sequences


@dataclass(frozen=True)
class EmpiricalDistribution:
    """Occupation counts of a length-n sequence over a finite alphabet."""

    n: int
    counts: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "counts", tuple(int(c) for c in self.counts))
        if self.n < 1:
            raise ValueError("n must be a positive integer")
        if not self.counts:
            raise ValueError("counts must be nonempty")
        if any(c < 0 for c in self.counts):
            raise ValueError("counts must be nonnegative")
        if sum(self.counts) != self.n:
            raise ValueError(f"counts sum to {sum(self.counts)}, expected {self.n}")

    @classmethod
    def from_sequence(cls, xn, alphabet_size: int) -> "EmpiricalDistribution":
        xn = _check_sequence(xn, alphabet_size)
        counts = [0] * alphabet_size
        for x in xn:
            counts[x] += 1
        return cls(n=len(xn), counts=tuple(counts))

    @property
    def alphabet_size(self) -> int:
        return len(self.counts)

    def probabilities(self) -> np.ndarray:
        return np.asarray(self.counts, dtype=float) / self.n


def type_enumerate(n: int, a: int) -> list[EmpiricalDistribution]:
    """All empirical distributions of length-n sequences over a symbols."""
    if n < 1 or a < 1:
        raise ValueError("need n >= 1 and a >= 1")
    total = math.comb(n + a - 1, a - 1)
    if total > MAX_TYPES:
        raise ValueError(f"{total} types exceed the enumeration cap {MAX_TYPES}")
    out = []
    for bars in itertools.combinations(range(n + a - 1), a - 1):
        counts = []
        prev = -1
        for b in bars:
            counts.append(b - prev - 1)
            prev = b
        counts.append(n + a - 1 - prev - 1)
        out.append(EmpiricalDistribution(n=n, counts=tuple(counts)))
    assert len(out) == total <= (n + 1) ** a
    return out


def type_class_size(t: EmpiricalDistribution) -> int:
    """Number of sequences with the given counts (exact integer)."""
    size = 1
    remaining = t.n
    for c in t.counts:
        size *= math.comb(remaining, c)
        remaining -= c
    return size


def typical_set(p, n: int, alpha: float) -> set:
    """Sequences whose per-symbol counts sit within alpha deviations.

    Membership: |N(x|seq) - n p(x)| <= alpha * sqrt(n p(x) (1 - p(x)))
    for every symbol.  The total probability of the set is summed
    exactly over the enumeration and checked against the Chebyshev
    guarantee 1 - a/alpha^2.
    """
    p = np.asarray(p, dtype=float).reshape(-1)
    a = p.size
    p = check_distribution(p, a)
    if n < 1:
        raise ValueError("n must be a positive integer")
    if alpha < 0.0:
        raise ValueError("alpha must be nonnegative")
    if a ** n > MAX_SEQUENCE_SPACE:
        raise ValueError(f"sequence space {a}^{n} exceeds {MAX_SEQUENCE_SPACE}")
    targets = n * p
    widths = alpha * np.sqrt(n * np.clip(p * (1.0 - p), 0.0, None))
    members = set()
    member_probs = []
    for seq in itertools.product(range(a), repeat=n):
        counts = [0] * a
        for x in seq:
            counts[x] += 1
        if all(abs(counts[x] - targets[x]) <= widths[x] for x in range(a)):
            members.add(seq)
            member_probs.append(math.prod(p[x] ** c for x, c in enumerate(counts)))
    mass = math.fsum(member_probs)
    bound = 1.0 - a / alpha**2 if alpha > 0.0 else -math.inf
    # float slack only: the Chebyshev argument already covers sequences
    # dropped by rounding at the window boundary
    assert mass + 1e-12 >= bound
    return members


# ---------------------------------------------------------------------------
# Typical projectors


def _merge_close(values) -> tuple[np.ndarray, np.ndarray]:
    """Eigenspace classes of a spectrum: near-equal values merge.

    Returns (class id per input position, mass per class) with classes
    numbered in ascending value order and masses clipped into [0, 1].
    Adjacent gaps <= DEGENERACY_ATOL merge transitively.
    """
    values = np.asarray(values, dtype=float)
    order = np.argsort(values, kind="stable")
    ids = np.empty(values.size, dtype=int)
    masses: list[float] = []
    prev = None
    for idx in order:
        if prev is None or values[idx] - prev > DEGENERACY_ATOL:
            masses.append(0.0)
        ids[idx] = len(masses) - 1
        masses[-1] += float(values[idx])
        prev = values[idx]
    return ids, np.clip(np.asarray(masses), 0.0, 1.0)


def _factor_system(state) -> tuple[np.ndarray, np.ndarray | None, np.ndarray, np.ndarray]:
    """(eigenvalues, eigenbasis or None, class ids, class masses).

    A None basis marks a diagonal state whose eigenbasis is the
    standard basis as-is; downstream builders then stay exactly
    diagonal instead of round-tripping through eigh.
    """
    m = linalg.as_matrix(state)
    diag = np.diagonal(m)
    off = m - np.diag(diag)
    if np.abs(off).max(initial=0.0) <= 1e-12 and np.abs(diag.imag).max(initial=0.0) <= 1e-12:
        values, basis = diag.real.copy(), None
    else:
        values, basis = linalg.eigh(m)
    ids, masses = _merge_close(values)
    return values, basis, ids, masses


@dataclass(frozen=True)
class TypicalProjector:
    """Frequency-typical subspace projector for a product state.

    `range_basis` holds an orthonormal basis of the range as columns,
    which is what downstream range-compression consumes.  `trace_mass`
    is the exact overlap of the reference product state with the range,
    guaranteed to reach `mass_bound` by Chebyshev counting.
    """

    projector: np.ndarray
    range_basis: np.ndarray
    n: int
    alpha: float
    kind: str  # "unconditional" | "conditional"
    letter_states: tuple
    sequence: tuple[int, ...] | None
    trace_mass: float
    mass_bound: float
    rank: int
    details: dict = field(default_factory=dict)

    def __post_init__(self):
        pi = self.projector
        dim = pi.shape[0]
        if pi.shape != (dim, dim):
            raise ValueError("projector must be square")
        if self.range_basis.shape != (dim, self.rank):
            raise ValueError("range basis shape must be dim x rank")
        if not self.trace_mass + 1e-12 >= self.mass_bound:
            raise BoundViolation(
                f"typical mass {self.trace_mass} below guarantee {self.mass_bound}"
            )
        if dim <= _VALIDATE_DIM:
            if np.abs(pi - pi.conj().T).max() > 1e-10:
                raise ValueError("projector is not Hermitian")
            if linalg.frobenius(pi @ pi - pi) > 1e-9:
                raise ValueError("projector is not idempotent within 1e-9")
            if linalg.commutator_norm(pi, self.reference_state()) > 1e-9 * dim:
                raise ValueError("projector does not commute with its reference state")

    @property
    def dim(self) -> int:
        return int(self.projector.shape[0])

    def reference_state(self) -> np.ndarray:
        """The product state the projector was built for."""
        return linalg.kron_all(self.letter_states)


def _product_mask(factor_values, blocks) -> tuple[list[int], list[float], float, float]:
    """Admissible product eigenvectors and their reference eigenvalues.

    blocks: list of (factor positions, class targets, class windows,
    class ids array of that block's factor).  Returns (flat indices,
    eigenvalue products, min product, max product).
    """
    n = len(factor_values)
    dims = [len(v) for v in factor_values]
    mask: list[int] = []
    probs: list[float] = []
    lo, hi = math.inf, 0.0
    for flat, combo in enumerate(itertools.product(*(range(d) for d in dims))):
        ok = True
        for positions, targets, widths, ids in blocks:
            occ = [0] * len(targets)
            for i in positions:
                occ[ids[combo[i]]] += 1
            if any(abs(occ[c] - targets[c]) > widths[c] for c in range(len(targets))):
                ok = False
                break
        if not ok:
            continue
        mask.append(flat)
        prob = math.prod(max(0.0, float(factor_values[i][combo[i]])) for i in range(n))
        probs.append(prob)
        lo, hi = min(lo, prob), max(hi, prob)
    return mask, probs, lo, hi


def _assemble_projector(factor_bases, dims, mask) -> tuple[np.ndarray, np.ndarray]:
    """(projector, orthonormal range basis) from a product-index mask."""
    total = math.prod(dims)
    if all(b is None for b in factor_bases):
        basis = np.zeros((total, len(mask)), dtype=np.complex128)
        for col, flat in enumerate(mask):
            basis[flat, col] = 1.0
        pi = np.zeros((total, total), dtype=np.complex128)
        pi[mask, mask] = 1.0
        return pi, basis
    full = linalg.kron_all(
        np.eye(d) if b is None else b for b, d in zip(factor_bases, dims)
    )
    basis = full[:, mask]
    return linalg.hermitize(basis @ basis.conj().T), basis


def _window(masses, n_block: int, alpha: float) -> tuple[np.ndarray, np.ndarray]:
    targets = n_block * masses
    widths = alpha * np.sqrt(n_block * np.clip(masses * (1.0 - masses), 0.0, None))
    return targets, widths


def _exponent_report(rank, n, entropy_bits, denom, lo, hi) -> dict:
    """Measured exponent constants for the rank and sandwich bounds.

    The guaranteed versions carry a universal constant inherited from
    cited work, so these are diagnostics, never assertions.
    """
    out = {
        "rank": int(rank),
        "entropy_bits": float(entropy_bits),
        "rank_exponent_constant": None,
        "lower_sandwich_constant": None,
        "upper_sandwich_constant": None,
        "min_restricted_eigenvalue": None if rank == 0 else float(lo),
        "max_restricted_eigenvalue": None if rank == 0 else float(hi),
    }
    if rank > 0 and denom > 0.0:
        out["rank_exponent_constant"] = (math.log2(rank) - n * entropy_bits) / denom
        if lo > 0.0:
            out["lower_sandwich_constant"] = (-math.log2(lo) - n * entropy_bits) / denom
        if hi > 0.0:
            out["upper_sandwich_constant"] = (math.log2(hi) + n * entropy_bits) / denom
    return out


def typical_projector(rho, n: int, alpha: float) -> TypicalProjector:
    """Projector onto typical product eigenvectors of rho^(x n).

    Eigenvalues of rho merge into eigenspace classes; a product
    eigenvector survives when its class occupation counts are all
    within alpha deviations.  The retained reference mass is at least
    1 - d/alpha^2.
    """
    rho = linalg.require_density(rho)
    d = rho.shape[0]
    _check_build_size(d, n, alpha)
    values, basis, ids, masses = _factor_system(rho)
    targets, widths = _window(masses, n, alpha)
    blocks = [(range(n), targets, widths, ids)]
    mask, probs, lo, hi = _product_mask([values] * n, blocks)
    pi, range_basis = _assemble_projector([basis] * n, [d] * n, mask)
    trace_mass = math.fsum(probs)
    bound = 1.0 - d / alpha**2 if alpha > 0.0 else -math.inf
    entropy = linalg.shannon_entropy(np.clip(values, 0.0, 1.0))
    details = _exponent_report(len(mask), n, entropy, d * alpha * math.sqrt(n), lo, hi)
    details["class_masses"] = masses.tolist()
    return TypicalProjector(
        projector=pi,
        range_basis=range_basis,
        n=n,
        alpha=float(alpha),
        kind="unconditional",
        letter_states=(rho,) * n,
        sequence=None,
        trace_mass=trace_mass,
        mass_bound=bound,
        rank=len(mask),
        details=details,
    )


def conditional_typical_projector(channel: CQChannel, xn, alpha: float) -> TypicalProjector:
    """Projector onto jointly typical eigenvectors of a product output.

    Tensor factors group into blocks by input symbol; each block gets
    the unconditional construction for its letter state at deviation
    alpha, and the blocks tensor together.  The retained mass is at
    least 1 - a*d/alpha^2 by a union bound over blocks.
    """
    xn = _check_sequence(xn, channel.alphabet_size)
    n = len(xn)
    d = channel.dim
    _check_build_size(d, n, alpha)
    systems = {x: _factor_system(channel.states[x]) for x in set(xn)}
    blocks = []
    block_details = []
    entropy = 0.0
    for x in sorted(set(xn)):
        values, _, ids, masses = systems[x]
        positions = [i for i, s in enumerate(xn) if s == x]
        targets, widths = _window(masses, len(positions), alpha)
        blocks.append((positions, targets, widths, ids))
        entropy += len(positions) / n * linalg.shannon_entropy(np.clip(values, 0.0, 1.0))
        # the admissible set factorizes across blocks, so the block
        # masses multiply to trace_mass; kept per block for diagnosis
        _, bprobs, _, _ = _product_mask(
            [values] * len(positions),
            [(range(len(positions)), targets, widths, ids)],
        )
        block_details.append(
            {
                "symbol": x,
                "length": len(positions),
                "class_masses": masses.tolist(),
                "block_mass": math.fsum(bprobs),
            }
        )
    factor_values = [systems[x][0] for x in xn]
    mask, probs, lo, hi = _product_mask(factor_values, blocks)
    pi, range_basis = _assemble_projector(
        [systems[x][1] for x in xn], [d] * n, mask
    )
    trace_mass = math.fsum(probs)
    a = channel.alphabet_size
    bound = 1.0 - a * d / alpha**2 if alpha > 0.0 else -math.inf
    details = _exponent_report(len(mask), n, entropy, d * a * alpha * math.sqrt(n), lo, hi)
    details["blocks"] = block_details
    return TypicalProjector(
        projector=pi,
        range_basis=range_basis,
        n=n,
        alpha=float(alpha),
        kind="conditional",
        letter_states=tuple(channel.states[x] for x in xn),
        sequence=xn,
        trace_mass=trace_mass,
        mass_bound=bound,
        rank=len(mask),
        details=details,
    )


def _check_build_size(d: int, n: int, alpha: float) -> None:
    if n < 1:
        raise ValueError("n must be a positive integer")
    if alpha < 0.0:
        raise ValueError("alpha must be nonnegative")
    if d ** n > MAX_TENSOR_DIM:
        raise ValueError(f"product dimension {d}^{n} exceeds {MAX_TENSOR_DIM}")


def cross_typical_mass(channel: CQChannel, xn, alpha: float) -> tuple[float, TypicalProjector]:
    """Overlap of a product output with its type-average's projector.

    Builds the unconditional projector of the single-letter mixture
    under the sequence's empirical distribution, at widened deviation
    alpha*sqrt(a), and traces the product output W^n_{xn} against it.
    The same Chebyshev count keeps this above 1 - a*d/alpha^2.
    """
    xn = _check_sequence(xn, channel.alphabet_size)
    if alpha <= 0.0:
        raise ValueError("alpha must be positive")
    a = channel.alphabet_size
    t = EmpiricalDistribution.from_sequence(xn, a)
    mix = output_state(t.probabilities(), channel)
    proj = typical_projector(mix, len(xn), alpha * math.sqrt(a))
    wn = tensor_output(xn, channel)
    mass = float(np.einsum("ij,ji->", wn, proj.projector).real)
    bound = 1.0 - a * channel.dim / alpha**2
    if mass + 1e-9 < bound:
        raise BoundViolation(f"cross typical mass {mass} below guarantee {bound}")
    return mass, proj
