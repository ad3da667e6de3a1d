"""Identification codes for cq channels and sparse input resolvability.

An identification (QID) code is a family of input distributions on
length-n sequences paired with test effects on the n-fold output
space; the figures of merit are the worst-case errors of first and
second kind.  The resolvability pipeline replaces each input
distribution by one of small support whose channel output is close in
trace norm: condition on empirical types, approximate every
conditional output by a sampled multiset average of sandwiched edge
operators, and quantize the type weights to multiples of 1/K.  The
sparse distributions that come out carry weights that are exact
multiples of 1/(K*L), so counting them bounds the number of messages;
those bounds are double exponential and live here strictly in
log2 log2 space.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction

import mpmath
import numpy as np

from . import linalg
from .channels import (
    MAX_SEQUENCE_SPACE,
    MAX_TENSOR_DIM,
    CQChannel,
    EmpiricalDistribution,
    conditional_typical_projector,
    output_state,
    tensor_output,
    type_enumerate,
    typical_projector,
)
from .covering import QuantumHypergraph, quantum_covering_sample
from .linalg import LN2, BoundViolation
from .rng import make_rng, random_distribution, spawn_seeds

DEFAULT_PROBE_LAMBDAS = (0.9, 0.75, 0.6, 0.45, 0.3)


def check_sequence_distribution(entries, n: int | None = None, alphabet_size: int | None = None) -> dict:
    """Validate a sparse distribution on length-n symbol sequences.

    Keys become tuples of ints, zero-weight atoms are dropped, and the
    total weight must be 1 within 1e-12.  Fraction weights pass
    through untouched so exact distributions stay exact; float weights
    are kept as floats.
    """
    out = {}
    for key, w in dict(entries).items():
        xn = tuple(int(s) for s in key)
        if n is None:
            n = len(xn)
        if len(xn) != n:
            raise ValueError(f"sequence {xn} has length {len(xn)}, expected {n}")
        if not xn and n == 0:
            raise ValueError("sequences must be nonempty")
        for s in xn:
            if s < 0:
                raise ValueError("sequence symbols must be nonnegative")
            if alphabet_size is not None and s >= alphabet_size:
                raise ValueError(f"symbol {s} outside the alphabet of size {alphabet_size}")
        if not isinstance(w, Fraction):
            w = float(w)
            if w < -1e-12:
                raise ValueError("sequence weights must be nonnegative")
            w = max(0.0, w)
        elif w < 0:
            raise ValueError("sequence weights must be nonnegative")
        if w != 0:
            out[xn] = w
    if not out:
        raise ValueError("distribution has no support")
    total = sum(Fraction(w) for w in out.values())
    if abs(total - 1) > Fraction(1, 10**12):
        raise ValueError(f"sequence weights sum to {float(total)}, expected 1")
    return out


def uniform_distribution(alphabet_size: int, n: int) -> dict:
    """Exact uniform distribution on the full sequence space."""
    space = alphabet_size**n
    if space > MAX_SEQUENCE_SPACE:
        raise ValueError(f"sequence space {alphabet_size}^{n} exceeds {MAX_SEQUENCE_SPACE}")
    w = Fraction(1, space)
    return {xn: w for xn in itertools.product(range(alphabet_size), repeat=n)}


def random_sparse_distribution(seed: int, alphabet_size: int, n: int, support: int) -> dict:
    """Seeded random distribution on `support` distinct sequences."""
    space = alphabet_size**n
    if space > MAX_SEQUENCE_SPACE:
        raise ValueError(f"sequence space {alphabet_size}^{n} exceeds {MAX_SEQUENCE_SPACE}")
    if not 1 <= support <= space:
        raise ValueError("support must lie between 1 and the sequence space size")
    rng = make_rng(seed)
    picks = sorted(int(i) for i in rng.choice(space, size=support, replace=False))
    weights = random_distribution(rng, support)
    out = {}
    for idx, w in zip(picks, weights):
        digits = []
        for _ in range(n):
            digits.append(idx % alphabet_size)
            idx //= alphabet_size
        out[tuple(reversed(digits))] = float(w)
    return out


class QIDCode:
    """Identification code: input distributions paired with test effects.

    Entry i is (P_i, D_i) where P_i is a sparse distribution on
    length-n sequences and D_i is an effect (0 <= D_i <= identity) on
    the n-fold output space.  No structure ties the D_i to a common
    measurement; arbitrary effect families are in scope.
    """

    def __init__(self, n: int, entries):
        self.n = int(n)
        if self.n < 1:
            raise ValueError("n must be positive")
        checked = []
        dim = None
        for dist, effect in entries:
            dist = check_sequence_distribution(dist, n=self.n)
            m = linalg.require_hermitian(effect, name="test effect")
            if dim is None:
                dim = m.shape[0]
            if m.shape != (dim, dim):
                raise ValueError("test effects must share one dimension")
            if not linalg.in_operator_interval(m, np.zeros((dim, dim)), np.eye(dim)):
                raise ValueError("test effect falls outside the operator interval [0, identity]")
            checked.append((dist, m))
        if not checked:
            raise ValueError("at least one code entry required")
        self.entries = tuple(checked)
        self.test_dim = dim

    @property
    def num_messages(self) -> int:
        return len(self.entries)

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "entries": [
                {
                    "P": [[list(xn), float(w)] for xn, w in sorted(dist.items())],
                    "D": linalg.matrix_to_json(effect),
                }
                for dist, effect in self.entries
            ],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "QIDCode":
        entries = [
            ({tuple(xn): w for xn, w in e["P"]}, linalg.matrix_from_json(e["D"]))
            for e in obj["entries"]
        ]
        return cls(obj["n"], entries)


def evaluate_qid_code(code: QIDCode, channel: CQChannel) -> tuple[float, float, np.ndarray]:
    """Worst-case errors of an identification code over a channel.

    Returns (lambda1, lambda2, acceptance) where acceptance[i, j] is
    the probability that the test for message i accepts when message j
    was sent, lambda1 = max_i (1 - acceptance[i, i]) and
    lambda2 = max over i != j of acceptance[i, j] (0 when there is a
    single message).
    """
    dn = channel.dim**code.n
    if dn > MAX_TENSOR_DIM:
        raise ValueError(f"output dimension {channel.dim}^{code.n} exceeds {MAX_TENSOR_DIM}")
    if code.test_dim != dn:
        raise ValueError(f"test effects act on dimension {code.test_dim}, channel needs {dn}")
    cache: dict[tuple, np.ndarray] = {}

    def block_output(xn):
        if xn not in cache:
            cache[xn] = tensor_output(xn, channel)
        return cache[xn]

    outputs = []
    for dist, _ in code.entries:
        rho = np.zeros((dn, dn), dtype=complex)
        for xn, w in sorted(dist.items()):
            rho = rho + float(w) * block_output(xn)
        outputs.append(linalg.hermitize(rho))
    size = code.num_messages
    acceptance = np.zeros((size, size))
    for i in range(size):
        effect = code.entries[i][1]
        for j in range(size):
            acceptance[i, j] = float(np.einsum("ij,ji->", effect, outputs[j]).real)
    lambda1 = max(max(0.0, 1.0 - float(acceptance[i, i])) for i in range(size))
    lambda2 = 0.0
    if size > 1:
        lambda2 = max(
            max(0.0, float(acceptance[i, j])) for i in range(size) for j in range(size) if i != j
        )
    return lambda1, lambda2, acceptance


def per_type_conditional(P, t: EmpiricalDistribution) -> dict:
    """Conditional of a sequence distribution on one type class.

    Weights come back as exact Fractions so that remixing the
    conditionals with the type-class masses reproduces the input
    distribution exactly, not merely to rounding.
    """
    P = check_sequence_distribution(P, n=t.n)
    members = {}
    for xn, w in P.items():
        counts = [0] * t.alphabet_size
        member = True
        for s in xn:
            if s >= t.alphabet_size:
                member = False
                break
            counts[s] += 1
        if member and tuple(counts) == t.counts:
            members[xn] = Fraction(w)
    mass = sum(members.values())
    if mass <= 0:
        raise ValueError(f"type class {t.counts} carries zero probability mass")
    return {xn: w / mass for xn, w in members.items()}


def quantize_distribution(weights, K: int) -> list:
    """Round a distribution to exact multiples of 1/K, preserving the total.

    Floor the scaled weights, then hand the leftover quanta to the
    largest fractional parts (ties by lowest index).  Every output
    weight sits within 1/K of its input, so the total variation moved
    is at most len(weights)/K.
    """
    K = int(K)
    if K < 1:
        raise ValueError("K must be a positive integer")
    exact = [Fraction(w) for w in weights]
    if any(w < 0 for w in exact):
        raise ValueError("weights must be nonnegative")
    total = sum(exact)
    if total <= 0:
        raise ValueError("weights must carry positive total mass")
    scaled = [w / total * K for w in exact]
    floors = [math.floor(s) for s in scaled]
    fractional = [s - f for s, f in zip(scaled, floors)]
    leftover = K - sum(floors)
    order = sorted(range(len(exact)), key=lambda i: (-fractional[i], i))
    assert 0 <= leftover <= sum(1 for f in fractional if f > 0)
    for i in order[:leftover]:
        floors[i] += 1
    return [Fraction(f, K) for f in floors]


def quantization_resolution(n: int, a: int, lam) -> int:
    """Quanta count K = ceil(3 (n+1)^a / lambda) for the type weights.

    Computed over exact rationals with lambda read as a decimal, so K
    never depends on float rounding luck; the float path is genuinely
    off by one in reach (3*(20+1)**2 / 0.35 rounds just above the
    exact 3780).
    """
    if int(n) != n or n < 1 or int(a) != a or a < 1:
        raise ValueError("n and a must be positive integers")
    lam_exact = Fraction(str(lam))
    if not 0 < lam_exact < 1:
        raise ValueError("lambda must lie strictly between 0 and 1")
    return math.ceil(Fraction(3 * (int(n) + 1) ** int(a)) / lam_exact)


def distributions_identical(p, q) -> bool:
    """Exact equality of two sparse sequence distributions, no tolerance.

    Weights are compared as exact rationals (floats convert exactly),
    so pipeline outputs with denominators dividing K*L are decidably
    distinct the moment any weight differs.
    """

    def canon(dist):
        return {
            tuple(int(s) for s in xn): Fraction(w) for xn, w in dict(dist).items() if w != 0
        }

    return canon(p) == canon(q)


@dataclass(frozen=True)
class RegularizationResult:
    """Sparse replacement for an input distribution, with its audit trail.

    sparse_distribution maps sequences to exact Fraction weights whose
    denominators divide K*L; measured_distance is half the trace-norm
    distance between the channel outputs of the input and the
    replacement; certified means that distance met the lambda/3 budget
    and every covering subcall certified.
    """

    sparse_distribution: dict
    measured_distance: float
    K: int
    L: int
    per_type_details: tuple
    certified: bool
    details: dict = field(default_factory=dict)

    def __post_init__(self):
        budget = self.K * self.L
        if self.support_size > budget:
            raise BoundViolation(f"support size {self.support_size} exceeds the K*L budget {budget}")
        total = sum(Fraction(w) for w in self.sparse_distribution.values())
        if any(Fraction(w) < 0 for w in self.sparse_distribution.values()):
            raise BoundViolation("sparse weights must be nonnegative")
        if abs(float(total - 1)) > 1e-10:
            raise BoundViolation(f"sparse weights sum to {float(total)}, expected 1")

    @property
    def support_size(self) -> int:
        return sum(1 for w in self.sparse_distribution.values() if w != 0)

    def to_json(self) -> dict:
        return {
            "measured_distance": self.measured_distance,
            "K": self.K,
            "L": self.L,
            "certified": self.certified,
            "sparse_distribution": [
                [list(xn), str(Fraction(w))] for xn, w in sorted(self.sparse_distribution.items())
            ],
            "per_type_details": [dict(row) for row in self.per_type_details],
            "details": dict(self.details),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "RegularizationResult":
        sparse = {tuple(xn): Fraction(w) for xn, w in obj["sparse_distribution"]}
        return cls(
            sparse_distribution=sparse,
            measured_distance=obj["measured_distance"],
            K=obj["K"],
            L=obj["L"],
            per_type_details=tuple(obj["per_type_details"]),
            certified=obj["certified"],
            details=dict(obj.get("details", {})),
        )


def resolvability_regularize(
    P,
    channel: CQChannel,
    lam: float,
    seed: int,
    *,
    alpha: float | None = None,
    eps: float | None = None,
    tau: float | None = None,
    draws: int | None = None,
    max_stages: int = 4,
) -> RegularizationResult:
    """Replace an input distribution by one of support at most K*L.

    Stages: condition P on each empirical type; project the per-letter
    outputs onto their typical supports, sandwiching the block output
    between the conditional and the mixture typical projectors;
    approximate each conditional edge mixture by a sampled multiset
    average on the mixture projector's range; quantize the type masses
    to multiples of 1/K; remix.  With no overrides the constants are
    alpha = sqrt(600 a d)/lambda, eps = tau = lambda^2/1200 and the
    per-type draw count L comes from the sampler's formula (its
    maximum over types, so all types share one L and the remixed
    weights are exact multiples of 1/(K*L)).  Those constants are
    asymptotic: at small n certification may legitimately fail, and
    the measured distance is the honest deliverable either way.

    Overrides (alpha, eps, tau, draws) switch the result's recorded
    constants_mode from "paper-constants" to "override".  Prescribing
    draws fixes L, skipping the formula and the escalation ladder.
    """
    lam = float(lam)
    if not 0.0 < lam < 1.0:
        raise ValueError("lambda must lie strictly between 0 and 1")
    if max_stages < 1:
        raise ValueError("max_stages must be positive")
    a = channel.alphabet_size
    d = channel.dim
    P = check_sequence_distribution(P, alphabet_size=a)
    n = len(next(iter(P)))
    if d**n > MAX_TENSOR_DIM:
        raise ValueError(f"output dimension {d}^{n} exceeds {MAX_TENSOR_DIM}")
    mode = "paper-constants"
    if alpha is not None or eps is not None or tau is not None or draws is not None:
        mode = "override"
    if alpha is None:
        alpha = math.sqrt(600.0 * a * d) / lam
    if eps is None:
        eps = lam * lam / 1200.0
    if tau is None:
        tau = lam * lam / 1200.0
    if alpha <= 0:
        raise ValueError("alpha must be positive")

    lam_exact = Fraction(str(lam))
    K = quantization_resolution(n, a, lam)

    types = type_enumerate(n, a)
    index = {t.counts: i for i, t in enumerate(types)}
    masses = [Fraction(0)] * len(types)
    for xn, w in P.items():
        counts = [0] * a
        for s in xn:
            counts[s] += 1
        masses[index[tuple(counts)]] += Fraction(w)
    total = sum(masses)
    quantized = quantize_distribution(masses, K)
    quantization_tv = sum(abs(m / total - r) for m, r in zip(masses, quantized))
    if quantization_tv > lam_exact / 3:
        raise BoundViolation(
            f"type quantization moved {float(quantization_tv)} mass, over the budget {lam / 3.0}"
        )

    wn_cache: dict[tuple, np.ndarray] = {}

    def block_output(xn):
        if xn not in wn_cache:
            wn_cache[xn] = tensor_output(xn, channel)
        return wn_cache[xn]

    sqrt_a = math.sqrt(a)
    active = []
    for i, t in enumerate(types):
        if quantized[i] == 0:
            continue
        cond = per_type_conditional(P, t)
        seqs = sorted(cond)
        mixture = output_state(t.probabilities(), channel)
        mix_proj = typical_projector(mixture, n, alpha * sqrt_a)
        if mix_proj.rank == 0:
            raise ValueError("mixture typical projector has empty range; alpha too small")
        basis = mix_proj.range_basis
        edges = []
        for xn in seqs:
            cond_proj = conditional_typical_projector(channel, xn, alpha).projector
            sandwiched = cond_proj @ block_output(xn) @ cond_proj
            edges.append(linalg.hermitize(basis.conj().T @ sandwiched @ basis))
        eta = max(linalg.spectral_norm(e) for e in edges)
        if eta <= 0.0:
            raise ValueError("typical projection annihilated every edge; alpha too small")
        graph = QuantumHypergraph(mix_proj.rank, edges, min(1.0, float(eta)))
        formula = 1.0 + graph.eta * graph.dim * (
            2.0 * LN2 * math.log2(2.0 * graph.dim)
        ) / (eps * eps * tau)
        active.append(
            {
                "index": i,
                "seqs": seqs,
                "graph": graph,
                "p": np.array([float(cond[xn]) for xn in seqs]),
                "formula": formula,
                "weight": quantized[i],
            }
        )

    if draws is not None:
        if draws < 1:
            raise ValueError("draws must be positive")
        base, stages = int(draws), 1
    else:
        base = max(1, max(math.floor(rec["formula"]) for rec in active))
        stages = int(max_stages)
    seeds = spawn_seeds(seed, stages * len(active))
    results, L, stages_used, last_failure = None, base, 0, None
    for s in range(stages):
        L = base * 2**s
        stages_used = s + 1
        try:
            results = [
                quantum_covering_sample(
                    rec["graph"], rec["p"], eps, tau, seeds[s * len(active) + k], draws=L
                )
                for k, rec in enumerate(active)
            ]
            break
        except RuntimeError as exc:
            results, last_failure = None, exc
    if results is None:
        raise RuntimeError(
            f"per-type covering failed at every draw count up to {L}"
        ) from last_failure

    sparse: dict[tuple, Fraction] = {}
    for rec, res in zip(active, results):
        for e_idx, count in sorted(res.edge_multiplicities.items()):
            xn = rec["seqs"][e_idx]
            sparse[xn] = sparse.get(xn, Fraction(0)) + rec["weight"] * Fraction(count, L)

    dn = d**n
    sigma = np.zeros((dn, dn), dtype=complex)
    for xn, w in sorted(P.items()):
        sigma = sigma + float(w) * block_output(xn)
    sigma_bar = np.zeros((dn, dn), dtype=complex)
    for xn, w in sorted(sparse.items()):
        sigma_bar = sigma_bar + float(w) * block_output(xn)
    measured = 0.5 * linalg.trace_distance(linalg.hermitize(sigma), linalg.hermitize(sigma_bar))
    certified = measured <= lam / 3.0 and all(res.certified for res in results)

    by_index = {rec["index"]: (rec, res) for rec, res in zip(active, results)}
    rows = []
    for i, t in enumerate(types):
        row = {
            "type": list(t.counts),
            "probability_mass": float(masses[i]),
            "quantized_weight": str(quantized[i]),
            "active": quantized[i] != 0,
        }
        if i in by_index:
            rec, res = by_index[i]
            row.update(
                class_support=len(rec["seqs"]),
                range_dim=rec["graph"].dim,
                eta=rec["graph"].eta,
                formula_draws=rec["formula"],
                draws=L,
                edges_drawn=len(res.edge_multiplicities),
                attempts=res.attempts,
                covering_certified=res.certified,
                beyond_bound=res.beyond_bound,
            )
        rows.append(row)

    return RegularizationResult(
        sparse_distribution=sparse,
        measured_distance=float(measured),
        K=int(K),
        L=int(L),
        per_type_details=tuple(rows),
        certified=bool(certified),
        details={
            "seed": int(seed),
            "lambda": lam,
            "alpha": float(alpha),
            "eps": float(eps),
            "tau": float(tau),
            "constants_mode": mode,
            "n": n,
            "alphabet_size": a,
            "dim": d,
            "base_draws": int(base),
            "stages_used": stages_used,
            "distance_budget": lam / 3.0,
            "quantization_tv": float(quantization_tv),
        },
    )


def approximation_preserves_id(
    code: QIDCode, channel: CQChannel, regularized
) -> tuple[float, float]:
    """Evaluate a code after swapping in its sparse input replacements.

    Both error figures can grow by at most the largest measured output
    distance (an effect never separates two states by more than half
    their trace-norm distance), so the check here is a theorem given
    the measured distances; a violation means an implementation bug.
    """
    regularized = list(regularized)
    if len(regularized) != code.num_messages:
        raise ValueError("one regularization per code entry required")
    lambda1, lambda2, _ = evaluate_qid_code(code, channel)
    swapped = QIDCode(
        code.n,
        [
            ({xn: float(w) for xn, w in reg.sparse_distribution.items()}, effect)
            for reg, (_, effect) in zip(regularized, code.entries)
        ],
    )
    lambda1_bar, lambda2_bar, _ = evaluate_qid_code(swapped, channel)
    slack = max(reg.measured_distance for reg in regularized)
    if lambda1_bar > lambda1 + slack + 1e-9 or lambda2_bar > lambda2 + slack + 1e-9:
        raise BoundViolation(
            f"sparse replacement degraded the code beyond its distance budget: "
            f"({lambda1_bar}, {lambda2_bar}) vs ({lambda1}, {lambda2}) + {slack}"
        )
    return lambda1_bar, lambda2_bar


def code_count_bound(K: int, L: int, a: int, n: int):
    """log2 of how many messages K*L-sparse quantized inputs can index.

    Each message is determined by a distribution placing multiples of
    1/(K*L) on length-n sequences, so there are at most (a^n)^(K*L)
    of them: log2 N_max = n * log2(a) * K * L.  Exact integer when a
    is a power of two, otherwise an mpmath value carrying 40 digits
    beyond the integer part; N itself is never materialized.
    """
    for name, v in (("K", K), ("L", L), ("a", a), ("n", n)):
        if int(v) != v or v < 1:
            raise ValueError(f"{name} must be a positive integer")
    K, L, a, n = int(K), int(L), int(a), int(n)
    if a & (a - 1) == 0:
        return n * (a.bit_length() - 1) * K * L
    scale = n * K * L
    with mpmath.workdps(len(str(scale)) + 40):
        return scale * mpmath.log(a) / mpmath.log(2)


def strong_converse_bound(n: int, c_bits, delta) -> Fraction:
    """log2 log2 of the double-exponential message ceiling: n*(C + delta).

    Inputs are read as exact decimals (string round trip to Fraction),
    so n=100, C=0.6, delta=0.01 lands on 61 exactly where float
    arithmetic settles just below it.
    """
    if int(n) != n or n < 1:
        raise ValueError("n must be a positive integer")
    capacity_bits = Fraction(str(c_bits))
    slack = Fraction(str(delta))
    if capacity_bits < 0:
        raise ValueError("capacity must be nonnegative")
    if slack <= 0:
        raise ValueError("delta must be positive")
    return int(n) * (capacity_bits + slack)


def resolution_probe(
    channel: CQChannel,
    n: int,
    eps: float,
    candidate_Ps,
    seed: int,
    lambdas=DEFAULT_PROBE_LAMBDAS,
) -> list:
    """Desk-scale scan for small-support output approximations.

    For each candidate input distribution: measure the best
    single-atom approximation by enumerating the sequence space, then
    run the regularizer across a lambda grid, and report the smallest
    support among certified runs whose full trace-norm output distance
    lands within eps.  This probes achievable resolutions for the
    given candidates only; it is not an infimum over all inputs.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    n = int(n)
    a = channel.alphabet_size
    if a**n > 4096:
        raise ValueError(f"probe enumerates the sequence space; {a}^{n} is too large")
    lambdas = tuple(float(v) for v in lambdas)
    candidates = [check_sequence_distribution(P, n=n, alphabet_size=a) for P in candidate_Ps]
    seeds = spawn_seeds(seed, max(1, len(candidates) * len(lambdas)))
    atoms = list(itertools.product(range(a), repeat=n))
    outputs = {xn: tensor_output(xn, channel) for xn in atoms}
    report = []
    for ci, P in enumerate(candidates):
        dn = channel.dim**n
        sigma = np.zeros((dn, dn), dtype=complex)
        for xn, w in sorted(P.items()):
            sigma = sigma + float(w) * outputs[xn]
        sigma = linalg.hermitize(sigma)
        atom_distances = [linalg.trace_distance(sigma, outputs[xn]) for xn in atoms]
        best = int(np.argmin(atom_distances))
        atom_distance = float(atom_distances[best])
        rows = []
        feasible = [1] if atom_distance <= eps else []
        for li, lam in enumerate(lambdas):
            sub = seeds[ci * len(lambdas) + li]
            try:
                reg = resolvability_regularize(P, channel, lam, sub)
            except RuntimeError as exc:
                rows.append({"lambda": lam, "error": str(exc)})
                continue
            distance = 2.0 * reg.measured_distance
            qualifies = reg.certified and distance <= eps
            rows.append(
                {
                    "lambda": lam,
                    "support": reg.support_size,
                    "distance": distance,
                    "certified": reg.certified,
                    "qualifies": qualifies,
                }
            )
            if qualifies:
                feasible.append(reg.support_size)
        report.append(
            {
                "candidate": ci,
                "atom_sequence": list(atoms[best]),
                "atom_distance": atom_distance,
                "rows": rows,
                "minimal_support": min(feasible) if feasible else None,
            }
        )
    return report
