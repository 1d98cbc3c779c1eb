"""Shared builders and deterministic random generators."""

from __future__ import annotations

import random

import pytest

from rigidlam import (
    SupportCandidate,
    app,
    clev,
    full_support_family,
    lam,
    natural_extension,
    stvar,
    var,
)

O = stvar("o")
OP = stvar("o'")


# -- random beta-normal forms -----------------------------------------------------


FREE_NAMES = ("u", "v", "w", "y", "z")
BINDER_NAMES = ("a", "b", "c", "d")


def random_nf(rng: random.Random, depth: int = 3, bound=()):
    """A random beta-normal form: lambda-prefixed head variable applied to
    smaller normal forms."""
    if depth > 0 and rng.random() < 0.35:
        name = rng.choice([n for n in BINDER_NAMES if n not in bound])
        return lam(name, random_nf(rng, depth - 1, bound + (name,)))
    if bound and rng.random() < 0.5:
        head = var(rng.choice(bound))
    else:
        head = var(rng.choice(FREE_NAMES))
    t = head
    n_args = rng.randint(0, 2) if depth > 0 else 0
    for _ in range(n_args):
        t = app(t, random_nf(rng, depth - 1, bound))
    return t


def nf_corpus(seed: int, count: int, depth: int = 3):
    rng = random.Random(seed)
    return [random_nf(rng, depth) for _ in range(count)]


# -- random approximants of one normal form ----------------------------------------


def unconstrained_assignment(candidate, atom=O):
    return {
        a: atom for a in candidate.positions if clev(candidate, a)[0] == "unconstrained"
    }


def random_prune(rng: random.Random, positions: frozenset) -> frozenset:
    """Drop random argument subtrees (letters >= 2 are optional children), so
    the remainder is still a valid support candidate."""
    kept = set(positions)
    arg_roots = [a for a in positions if a and a[-1] >= 2]
    rng.shuffle(arg_roots)
    for root in arg_roots[: max(1, len(arg_roots) // 2)]:
        if root not in kept:
            continue
        if rng.random() < 0.6:
            kept -= {a for a in kept if a[: len(root)] == root}
    return frozenset(kept)


def random_approximants(seed: int, count: int):
    """Groups (full_member, [approximants...]) of derivations of one term,
    every approximant below the full member (hence pairwise compatible)."""
    rng = random.Random(seed)
    groups = []
    while len(groups) < count:
        t = random_nf(rng, depth=3)
        try:
            fam = full_support_family(t)
        except Exception:
            continue
        top = fam.max_rank
        if top is None or top < 1:
            continue
        full = fam.positions_upto(top)
        if len(full) < 4:
            continue
        members = []
        for _ in range(3):
            pruned = random_prune(rng, full)
            cand = SupportCandidate(t, pruned)
            members.append(
                natural_extension(cand, unconstrained_assignment(cand), fam.track_policy)
            )
        groups.append((fam.member(top), members))
    return groups


@pytest.fixture(scope="session")
def approximant_groups():
    return random_approximants(seed=2024, count=70)
