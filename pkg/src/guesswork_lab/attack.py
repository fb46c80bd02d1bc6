"""Attacker strategies and guess-counting simulations.

Attacks scan candidate passwords in strategy order, never evaluating an
index twice, and count 1-based guesses to the first success.  Failed
attacks report zero guesses: failures contribute zero to every mean.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Iterator, Optional, Union

import numpy as np

from . import rng
from .allocation import AllocationPlan
from .hashmodel import BinLabel, HashFunction, KeyedHashModel
from .infotheory import check_probability

#: Indices per vectorized scan step; grows geometrically up to the cap.
_CHUNK0 = 2048
_CHUNK_CAP = 1 << 16

#: Permutations over at most this many candidates are materialized whole.
_PERM_MATERIALIZE_CAP = 1 << 14

#: Bool seen-mask cap for the lazy permutation prefix; beyond this a set
#: is used (slower, but such scans are already enormous).
_PERM_MASK_CAP = 1 << 26

ARM_HASH = "hash"
ARM_PASSWORD = "password"


@dataclass(frozen=True)
class GuessStrategy:
    """Password guessing order.

    ascending-index scans 0, 1, 2, ...; seeded-permutation scans a
    uniformly random order; probability-descending scans by decreasing
    i.i.d. Bernoulli(theta) likelihood, ties broken ascending.
    """

    kind: str
    seed: Optional[int] = None
    theta: Optional[float] = None

    def __post_init__(self):
        if self.kind not in ("ascending-index", "seeded-permutation", "probability-descending"):
            raise ValueError(f"unknown strategy kind: {self.kind}")
        if self.kind == "seeded-permutation" and self.seed is None:
            raise ValueError("seeded-permutation requires a seed")
        if self.kind == "probability-descending":
            if self.theta is None:
                raise ValueError("probability-descending requires theta")
            check_probability(self.theta, "theta")


def ascending() -> GuessStrategy:
    return GuessStrategy("ascending-index")


def permutation(seed: int) -> GuessStrategy:
    return GuessStrategy("seeded-permutation", seed=seed)


def descending_probability(theta: float) -> GuessStrategy:
    return GuessStrategy("probability-descending", theta=theta)


@dataclass(frozen=True)
class AttackResult:
    """Guess count to first success; zero when the budget was exhausted."""

    guesses: int
    success: bool
    target: object
    arm: Optional[str] = None

    def __post_init__(self):
        if not self.success and self.guesses != 0:
            raise ValueError("failed attacks must report zero guesses")


def _ascending_chunks(n_candidates: int, budget: int) -> Iterator[np.ndarray]:
    chunk = _CHUNK0
    start = 0
    while start < budget:
        stop = min(start + chunk, budget)
        yield np.arange(start, stop, dtype=np.uint64)
        start = stop
        chunk = min(chunk * 4, _CHUNK_CAP)


def _permutation_chunks(n_candidates: int, budget: int, seed: int) -> Iterator[np.ndarray]:
    gen = rng.generator(seed, 0x9E12)
    if n_candidates <= _PERM_MATERIALIZE_CAP:
        perm = gen.permutation(n_candidates)[:budget].astype(np.uint64)
        chunk = _CHUNK0
        start = 0
        while start < perm.size:
            stop = min(start + chunk, perm.size)
            yield perm[start:stop]
            start = stop
            chunk = min(chunk * 4, _CHUNK_CAP)
        return
    # Lazy prefix of a uniform permutation: i.i.d. uniform draws filtered
    # to first occurrences are exactly such a prefix.  Duplicates are
    # dropped with a seen mask plus an order-preserving intra-chunk dedup.
    use_mask = n_candidates <= _PERM_MASK_CAP
    seen_mask = np.zeros(n_candidates, dtype=bool) if use_mask else None
    seen_set: set[int] = set()
    served = 0
    chunk = _CHUNK0
    while served < budget:
        if use_mask and served > 0.9 * n_candidates:
            # Near exhaustion rejection stalls; finish with a shuffle of
            # the leftovers, which is the same conditional distribution.
            rest = np.flatnonzero(~seen_mask).astype(np.uint64)
            rest = rest[gen.permutation(rest.size)][: budget - served]
            if rest.size:
                yield rest
            return
        overdraw = int(chunk / max(1e-9, 1.0 - served / n_candidates) * 1.1) + 8
        raw = gen.integers(0, n_candidates, size=min(overdraw, 4 * chunk + 8))
        if use_mask:
            raw = raw[~seen_mask[raw]]
            _, first_idx = np.unique(raw, return_index=True)
            raw = raw[np.sort(first_idx)]
            seen_mask[raw] = True
        else:
            fresh = []
            for v in raw.tolist():
                if v not in seen_set:
                    seen_set.add(v)
                    fresh.append(v)
            raw = np.array(fresh, dtype=np.int64)
        if raw.size:
            take = raw[: budget - served].astype(np.uint64)
            yield take
            served += take.size
        chunk = min(chunk * 4, _CHUNK_CAP)


def _weight_layer_chunks(n: int, theta: float, budget: int) -> Iterator[np.ndarray]:
    """Descending-probability order for i.i.d. Bernoulli(theta) passwords.

    For theta < 1/2 probability strictly decreases with weight, so the
    order is weight layers 0..n, ascending numeric inside each layer
    (Gosper's hack).  theta = 1/2 degenerates to ascending index.
    """
    if theta == 0.5:
        yield from _ascending_chunks(1 << n, budget)
        return
    weights = range(n + 1) if theta < 0.5 else range(n, -1, -1)
    limit = 1 << n
    served = 0
    buf: list[int] = []
    for w in weights:
        if w == 0:
            members: Iterable[int] = (0,)
        else:
            def gosper(w=w):
                v = (1 << w) - 1
                while v < limit:
                    yield v
                    low = v & -v
                    ripple = v + low
                    v = ripple | (((v ^ ripple) >> 2) // low)
            members = gosper()
        for v in members:
            buf.append(v)
            served += 1
            if len(buf) >= _CHUNK0:
                yield np.array(buf, dtype=np.uint64)
                buf = []
            if served >= budget:
                break
        if served >= budget:
            break
    if buf:
        yield np.array(buf, dtype=np.uint64)


def strategy_chunks(strat: GuessStrategy, n: int, budget: int) -> Iterator[np.ndarray]:
    """Candidate index chunks in strategy order; indices never repeat."""
    n_candidates = 1 << n
    budget = min(budget, n_candidates)
    if strat.kind == "ascending-index":
        yield from _ascending_chunks(n_candidates, budget)
    elif strat.kind == "seeded-permutation":
        yield from _permutation_chunks(n_candidates, budget, strat.seed)
    else:
        yield from _weight_layer_chunks(n, strat.theta, budget)


def _target_mask(m: int, bins: Iterable[int]) -> np.ndarray:
    mask = np.zeros(1 << m, dtype=bool)
    for b in bins:
        mask[b] = True
    return mask


def _bits_of(b: Union[BinLabel, int]) -> int:
    return b.bits if isinstance(b, BinLabel) else int(b)


def _scan(
    h: HashFunction,
    mask: np.ndarray,
    strat: GuessStrategy,
    budget: int,
    target: object,
) -> AttackResult:
    consumed = 0
    for idx in strategy_chunks(strat, h.n, budget):
        hits = mask[h.eval_many(idx)]
        if hits.any():
            return AttackResult(consumed + int(hits.argmax()) + 1, True, target)
        consumed += idx.size
    return AttackResult(0, False, target)


def online_attack(
    h: HashFunction,
    b: Union[BinLabel, int],
    strat: GuessStrategy,
    budget: Optional[int] = None,
) -> AttackResult:
    """Guess count to the first password hashing to bin b."""
    bits = _bits_of(b)
    if not 0 <= bits < (1 << h.m):
        raise ValueError(f"bin {bits} out of range for m={h.m}")
    budget = (1 << h.n) if budget is None else min(budget, 1 << h.n)
    return _scan(h, _target_mask(h.m, [bits]), strat, budget, BinLabel(bits, h.m))


def offline_attack_any(
    h: HashFunction,
    bins: Iterable[Union[BinLabel, int]],
    strat: GuessStrategy,
    budget: Optional[int] = None,
) -> AttackResult:
    """Guess count to the first password hashing into the stored bin set."""
    bit_set = sorted({_bits_of(b) for b in bins})
    if not bit_set:
        raise ValueError("bin set must be nonempty")
    if bit_set[-1] >= (1 << h.m):
        raise ValueError("bin out of range for m")
    budget = (1 << h.n) if budget is None else min(budget, 1 << h.n)
    return _scan(h, _target_mask(h.m, bit_set), strat, budget, frozenset(bit_set))


def fast_budget(m: int, q_b: float, p: float) -> int:
    """Guess budget for fast-mode scans: 2^{ceil(m (H+D)) + 6}.

    64x the mean of the target bin's geometric, so the truncated tail
    contributes less than 2^-50 of the mean; failures beyond it are
    counted by the zero-on-failure convention.
    """
    from .infotheory import cross_entropy_identity

    return 1 << (math.ceil(m * cross_entropy_identity(q_b, p)) + 6)


def permutation_average_exact(total: int, preimages: int) -> float:
    """Mean first-success index over uniformly random guess orders.

    With L of N candidates succeeding, the average is (N+1)/(L+1); with
    L = 0 the attack always fails and the zero-on-failure convention
    applies.
    """
    if total < 1:
        raise ValueError(f"total must be positive, got {total}")
    if not 0 <= preimages <= total:
        raise ValueError(f"preimages must lie in [0, {total}], got {preimages}")
    if preimages == 0:
        return 0.0
    return (total + 1) / (preimages + 1)


def broken_hash_moment(dist, rho: float) -> float:
    """Exact rho-th guesswork moment against a fully known hash.

    The attacker holds one preimage per bin and guesses bins by
    descending effective probability (ties ascending): sum of
    rank^rho * P(rank).
    """
    if rho < 0:
        raise ValueError(f"rho must be >= 0, got {rho}")
    fractions = np.asarray(dist.fractions, dtype=np.float64)
    order = np.argsort(-fractions, kind="stable")
    ranks = np.arange(1, fractions.size + 1, dtype=np.float64)
    return float((ranks ** rho) @ fractions[order])


def draw_biased_password(seed: int, n: int, theta: float) -> int:
    """An n-bit password with bits i.i.d. Bernoulli(theta)."""
    check_probability(theta, "theta")
    gen = rng.generator(seed, 0x7E7A)
    pw = 0
    for _ in range(n):
        pw = (pw << 1) | int(gen.random() < theta)
    return pw


def biased_password_race(
    h: KeyedHashModel,
    b: Union[BinLabel, int],
    theta: float,
    true_pw: int,
    budget: Optional[int] = None,
) -> AttackResult:
    """Race a known true password against any other preimage of bin b.

    Guesses run in probability-descending(theta) order and stop when
    either the true password comes up (password arm, recorded even on a
    simultaneous hash hit) or an earlier guess hashes to b (hash arm).
    """
    bits = _bits_of(b)
    check_probability(theta, "theta")
    if not 0 <= true_pw < (1 << h.n):
        raise ValueError(f"true password {true_pw} out of range for n={h.n}")
    budget = (1 << h.n) if budget is None else min(budget, 1 << h.n)
    mask = _target_mask(h.m, [bits])
    consumed = 0
    for idx in strategy_chunks(descending_probability(theta), h.n, budget):
        hash_hits = mask[h.eval_many(idx)]
        pw_hits = idx == np.uint64(true_pw)
        any_hits = hash_hits | pw_hits
        if any_hits.any():
            at = int(any_hits.argmax())
            arm = ARM_PASSWORD if pw_hits[at] else ARM_HASH
            return AttackResult(consumed + at + 1, True, BinLabel(bits, h.m), arm=arm)
        consumed += idx.size
    return AttackResult(0, False, BinLabel(bits, h.m))


def biased_password_attack(
    h: KeyedHashModel,
    b: Union[BinLabel, int],
    theta: float,
    pw_seed: int,
    budget: Optional[int] = None,
) -> AttackResult:
    """Race between guessing the user's actual password and any preimage of b.

    The user's password is drawn bitwise Bernoulli(theta) from pw_seed;
    see biased_password_race for the race itself.
    """
    return biased_password_race(
        h, b, theta, draw_biased_password(pw_seed, h.n, theta), budget
    )


@dataclass
class EstimateWithCI:
    """Monte Carlo mean with a 95% normal-approximation half width.

    Accumulated from exact integer sums so merging is order-insensitive
    and bit-identical across worker splits.
    """

    mean: float
    half_width_95: float
    trials: int
    failures: int

    def __post_init__(self):
        if self.half_width_95 < 0:
            raise ValueError("half_width_95 must be nonnegative")
        if not 0 <= self.failures <= self.trials:
            raise ValueError("failures must lie in [0, trials]")


class GuessAccumulator:
    """Exact integer accumulator for guess counts (zero on failure)."""

    __slots__ = ("count", "failures", "total", "total_sq")

    def __init__(self):
        self.count = 0
        self.failures = 0
        self.total = 0
        self.total_sq = 0

    def add(self, guesses: int, success: bool) -> None:
        self.count += 1
        if success:
            self.total += guesses
            self.total_sq += guesses * guesses
        else:
            self.failures += 1

    def add_array(self, guesses: np.ndarray) -> None:
        """Bulk add; entries equal to 0 count as failures.

        Values must be integral (float inputs are rounded); sums are kept
        as Python ints so merging stays exact at any magnitude.
        """
        g = np.rint(np.asarray(guesses)).astype(np.int64)
        self.count += int(g.size)
        self.failures += int((g == 0).sum())
        ints = g.tolist()
        self.total += sum(ints)
        self.total_sq += sum(x * x for x in ints)

    def merge(self, other: "GuessAccumulator") -> "GuessAccumulator":
        out = GuessAccumulator()
        out.count = self.count + other.count
        out.failures = self.failures + other.failures
        out.total = self.total + other.total
        out.total_sq = self.total_sq + other.total_sq
        return out

    def estimate(self) -> EstimateWithCI:
        if self.count == 0:
            raise ValueError("no trials accumulated")
        mean = self.total / self.count
        if self.count > 1:
            var = (self.total_sq - self.total * self.total / self.count) / (
                self.count - 1
            )
            half = 1.96 * math.sqrt(max(var, 0.0) / self.count)
        else:
            half = 0.0
        return EstimateWithCI(
            mean=mean, half_width_95=half, trials=self.count, failures=self.failures
        )


def average_guesswork_across_users(
    h: HashFunction,
    plan: AllocationPlan,
    trials: int,
    seed: int,
    mode: str = "key-averaged",
    budget: Optional[int] = None,
) -> EstimateWithCI:
    """Mean guesswork over uniformly chosen users for the given hash.

    key-averaged redraws the key each trial and scans ascending (keyed
    models only); strategy-averaged keeps the hash fixed and redraws a
    uniform guessing order each trial.
    """
    if plan.user_count == 0:
        raise ValueError("plan has no users")
    if trials < 1:
        raise ValueError("trials must be positive")
    if mode not in ("key-averaged", "strategy-averaged"):
        raise ValueError(f"unknown averaging mode: {mode}")
    if mode == "key-averaged" and not isinstance(h, KeyedHashModel):
        raise ValueError("key-averaged mode requires a keyed hash model")
    acc = GuessAccumulator()
    bins = plan.bins()
    for trial in range(trials):
        pick = rng.generator(seed, trial, 0x05E7)
        b = bins[int(pick.integers(0, len(bins)))]
        if mode == "key-averaged":
            model = KeyedHashModel(
                h.m, h.n, h.p, rng.derive_seed(seed, trial, 0x4E1), dict(h.overrides)
            )
            result = online_attack(model, b, ascending(), budget)
        else:
            strat = permutation(rng.derive_seed(seed, trial, 0x9E12))
            result = online_attack(h, b, strat, budget)
        acc.add(result.guesses, result.success)
    return acc.estimate()
