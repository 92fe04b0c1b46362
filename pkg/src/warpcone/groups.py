"""Finitely generated marked groups with exact word arithmetic.

Elements are kept in a unique normal form per group kind, so equality is
structural and word lengths come from closed formulas (validated against
brute-force enumeration in the test suite).  The marked generating set is
part of the group data: the infinite dihedral group carries either its two
standard involutions or the rotation-plus-involution marking, and the two
markings induce different word metrics.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterator

from .errors import CapacityError, StructuralError, ValidationError

FREE_ABELIAN = "free_abelian"
INFINITE_DIHEDRAL = "infinite_dihedral"
FINITE_CYCLIC = "finite_cyclic"
FINITE_ABELIAN_PRODUCT = "finite_abelian_product"

DIHEDRAL_INVOLUTIONS = "rr'"
DIHEDRAL_ROTATION = "er"

DEFAULT_BALL_CAP = 10**6


@dataclass(frozen=True, order=True)
class Word:
    """Group element in normal form.

    Normal forms: integer vector for free abelian groups, ``(k, parity)``
    meaning (r'r)^k r^parity for the infinite dihedral group, residue tuple
    for finite groups.
    """

    nf: tuple

    def __repr__(self):
        return f"Word{self.nf}"


@dataclass(frozen=True)
class GroupSpec:
    kind: str
    params: tuple
    marking: str = ""

    # -- constructors -------------------------------------------------

    @staticmethod
    def free_abelian(rank: int) -> "GroupSpec":
        if rank < 1:
            raise ValidationError("free abelian rank must be >= 1")
        return GroupSpec(FREE_ABELIAN, (rank,))

    @staticmethod
    def infinite_dihedral(marking: str = DIHEDRAL_INVOLUTIONS) -> "GroupSpec":
        if marking not in (DIHEDRAL_INVOLUTIONS, DIHEDRAL_ROTATION):
            raise ValidationError(f"unknown dihedral marking {marking!r}")
        return GroupSpec(INFINITE_DIHEDRAL, (), marking)

    @staticmethod
    def finite_cyclic(order: int) -> "GroupSpec":
        if order < 1:
            raise ValidationError("cyclic order must be >= 1")
        return GroupSpec(FINITE_CYCLIC, (order,))

    @staticmethod
    def finite_abelian_product(orders) -> "GroupSpec":
        orders = tuple(int(o) for o in orders)
        if not orders or any(o < 1 for o in orders):
            raise ValidationError("factor orders must be positive")
        return GroupSpec(FINITE_ABELIAN_PRODUCT, orders)

    # -- basic data ----------------------------------------------------

    def identity(self) -> Word:
        if self.kind == FREE_ABELIAN:
            return Word((0,) * self.params[0])
        if self.kind == INFINITE_DIHEDRAL:
            return Word((0, 0))
        if self.kind == FINITE_CYCLIC:
            return Word((0,))
        return Word((0,) * len(self.params))

    def generators(self) -> list[tuple[str, Word]]:
        """Marked generators as (label, word) pairs; symmetric set."""
        if self.kind == FREE_ABELIAN:
            m = self.params[0]
            out = []
            for i in range(m):
                v = [0] * m
                v[i] = 1
                out.append((f"e{i + 1}", Word(tuple(v))))
                v[i] = -1
                out.append((f"-e{i + 1}", Word(tuple(v))))
            return out
        if self.kind == INFINITE_DIHEDRAL:
            if self.marking == DIHEDRAL_INVOLUTIONS:
                return [("r", Word((0, 1))), ("r'", Word((1, 1)))]
            return [("eps", Word((1, 0))), ("-eps", Word((-1, 0))), ("r", Word((0, 1)))]
        if self.kind == FINITE_CYCLIC:
            q = self.params[0]
            if q == 1:
                return []
            if q == 2:
                return [("g", Word((1,)))]
            return [("g", Word((1,))), ("-g", Word((q - 1,)))]
        out = []
        for i, q in enumerate(self.params):
            if q == 1:
                continue
            v = [0] * len(self.params)
            v[i] = 1
            out.append((f"g{i + 1}", Word(tuple(v))))
            if q > 2:
                v[i] = q - 1
                out.append((f"-g{i + 1}", Word(tuple(v))))
        return out

    def inverse_label(self, label: str) -> str:
        """Involution pairing on generator labels."""
        gens = dict(self.generators())
        if label not in gens:
            raise StructuralError(f"unknown generator label {label!r}")
        target = inverse(gens[label], self)
        for cand, w in gens.items():
            if w == target:
                return cand
        raise StructuralError(f"no inverse generator for label {label!r}")


def validate_word(g: Word, group: GroupSpec) -> None:
    nf = g.nf
    if not isinstance(nf, tuple):
        raise StructuralError(f"normal form must be a tuple, got {type(nf).__name__}")
    if group.kind == FREE_ABELIAN:
        m = group.params[0]
        if len(nf) != m or not all(isinstance(c, int) for c in nf):
            raise StructuralError(f"free abelian rank {m} needs an integer {m}-vector, got {nf}")
    elif group.kind == INFINITE_DIHEDRAL:
        if len(nf) != 2 or not isinstance(nf[0], int) or nf[1] not in (0, 1):
            raise StructuralError(f"dihedral normal form is (k, parity), got {nf}")
    elif group.kind == FINITE_CYCLIC:
        q = group.params[0]
        if len(nf) != 1 or not isinstance(nf[0], int) or not 0 <= nf[0] < q:
            raise StructuralError(f"cyclic residue out of range for order {q}: {nf}")
    elif group.kind == FINITE_ABELIAN_PRODUCT:
        if len(nf) != len(group.params) or any(
            not isinstance(c, int) or not 0 <= c < q for c, q in zip(nf, group.params)
        ):
            raise StructuralError(f"residue tuple out of range for orders {group.params}: {nf}")
    else:
        raise StructuralError(f"unknown group kind {group.kind!r}")


def word_length(g: Word, group: GroupSpec) -> int:
    """Minimal number of marked generators whose product is ``g``."""
    validate_word(g, group)
    nf = g.nf
    if group.kind == FREE_ABELIAN:
        return sum(abs(c) for c in nf)
    if group.kind == INFINITE_DIHEDRAL:
        k, parity = nf
        if group.marking == DIHEDRAL_INVOLUTIONS:
            # alternating products of the two involutions
            return 2 * abs(k) if parity == 0 else abs(2 * k - 1)
        return abs(k) + parity
    if group.kind == FINITE_CYCLIC:
        q = group.params[0]
        return min(nf[0], q - nf[0])
    return sum(min(c, q - c) for c, q in zip(nf, group.params))


def multiply(g: Word, h: Word, group: GroupSpec) -> Word:
    validate_word(g, group)
    validate_word(h, group)
    if group.kind == FREE_ABELIAN:
        return Word(tuple(a + b for a, b in zip(g.nf, h.nf)))
    if group.kind == INFINITE_DIHEDRAL:
        a, s = g.nf
        b, u = h.nf
        return Word((a - b if s else a + b, s ^ u))
    if group.kind == FINITE_CYCLIC:
        q = group.params[0]
        return Word(((g.nf[0] + h.nf[0]) % q,))
    return Word(tuple((a + b) % q for a, b, q in zip(g.nf, h.nf, group.params)))


def inverse(g: Word, group: GroupSpec) -> Word:
    validate_word(g, group)
    if group.kind == FREE_ABELIAN:
        return Word(tuple(-c for c in g.nf))
    if group.kind == INFINITE_DIHEDRAL:
        k, s = g.nf
        return Word((k, 1) if s else (-k, 0))
    if group.kind == FINITE_CYCLIC:
        q = group.params[0]
        return Word(((-g.nf[0]) % q,))
    return Word(tuple((-c) % q for c, q in zip(g.nf, group.params)))


def ball_size(group: GroupSpec, radius: int) -> int:
    """Exact cardinality of the word-metric ball, without enumerating it."""
    if radius < 0:
        raise ValidationError("ball radius must be >= 0")
    if group.kind == FREE_ABELIAN:
        m = group.params[0]
        return sum(
            (1 << k) * math.comb(m, k) * math.comb(radius, k)
            for k in range(min(m, radius) + 1)
        )
    if group.kind == INFINITE_DIHEDRAL:
        return sum(len(_dihedral_shell(group, l)) for l in range(radius + 1))
    return sum(1 for _ in _finite_elements(group) if word_length(_, group) <= radius)


def _finite_elements(group: GroupSpec) -> Iterator[Word]:
    if group.kind == FINITE_CYCLIC:
        for c in range(group.params[0]):
            yield Word((c,))
    else:
        for nf in itertools.product(*(range(q) for q in group.params)):
            yield Word(nf)


def _dihedral_shell(group: GroupSpec, length: int) -> list[Word]:
    if length == 0:
        return [Word((0, 0))]
    out = []
    if group.marking == DIHEDRAL_INVOLUTIONS:
        if length % 2 == 0:
            half = length // 2
            out = [Word((-half, 0)), Word((half, 0))]
        else:
            out = [Word(((1 - length) // 2, 1)), Word(((1 + length) // 2, 1))]
    else:
        out = [Word((-length, 0)), Word((length, 0))]
        if length == 1:
            out.append(Word((0, 1)))
        else:
            out.extend([Word((-(length - 1), 1)), Word((length - 1, 1))])
    return sorted(out)


def _abelian_shell(rank: int, length: int) -> Iterator[tuple]:
    """Integer vectors of exact l1 norm ``length`` in lexicographic order."""
    if rank == 1:
        if length == 0:
            yield (0,)
        else:
            yield (-length,)
            yield (length,)
        return
    for head in range(-length, length + 1):
        for tail in _abelian_shell(rank - 1, length - abs(head)):
            yield (head,) + tail


_FINITE_SHELL_MEMO: dict = {}


def _finite_shells(group: GroupSpec) -> list[list[Word]]:
    """Length buckets for a finite group, computed once per spec."""
    memo = _FINITE_SHELL_MEMO.get(group)
    if memo is None:
        buckets: dict[int, list[Word]] = {}
        for g in _finite_elements(group):
            buckets.setdefault(word_length(g, group), []).append(g)
        memo = [sorted(buckets[l]) for l in range(max(buckets) + 1)]
        _FINITE_SHELL_MEMO[group] = memo
    return memo


def shell(group: GroupSpec, length: int) -> list[Word]:
    """All elements of word length exactly ``length``, lexicographic order."""
    if length < 0:
        raise ValidationError("shell length must be >= 0")
    if group.kind == FREE_ABELIAN:
        return [Word(nf) for nf in _abelian_shell(group.params[0], length)]
    if group.kind == INFINITE_DIHEDRAL:
        return _dihedral_shell(group, length)
    buckets = _finite_shells(group)
    return list(buckets[length]) if length < len(buckets) else []


def ball(group: GroupSpec, radius: int, cap: int = DEFAULT_BALL_CAP) -> list[Word]:
    """The set {g : |g| <= radius}, duplicate-free, lexicographic order."""
    if radius < 0:
        raise ValidationError("ball radius must be >= 0")
    if group.kind in (FREE_ABELIAN, INFINITE_DIHEDRAL):
        n = ball_size(group, radius)
        if n > cap:
            raise CapacityError(f"ball of radius {radius} has {n} elements", cap)
        out = []
        for l in range(radius + 1):
            out.extend(shell(group, l))
        return sorted(out)
    out = sorted(g for g in _finite_elements(group) if word_length(g, group) <= radius)
    if len(out) > cap:
        raise CapacityError(f"ball of radius {radius} has {len(out)} elements", cap)
    return out


def shells_up_to(group: GroupSpec, radius: int, cap: int = DEFAULT_BALL_CAP) -> Iterator[tuple[int, list[Word]]]:
    """Yield (length, shell) pairs in increasing length, tracking the cap.

    Finite groups stop at their word-metric diameter instead of padding
    empty shells up to the radius.
    """
    if group.kind not in (FREE_ABELIAN, INFINITE_DIHEDRAL):
        radius = min(radius, len(_finite_shells(group)) - 1)
    seen = 0
    for l in range(radius + 1):
        sh = shell(group, l)
        seen += len(sh)
        if seen > cap:
            raise CapacityError(f"shell enumeration to radius {radius} exceeds cap at length {l}", cap)
        yield l, sh


# -- serialization -----------------------------------------------------


def group_to_json(group: GroupSpec) -> dict:
    if group.kind == FREE_ABELIAN:
        params = {"rank": group.params[0]}
    elif group.kind == INFINITE_DIHEDRAL:
        params = {"marking": group.marking}
    elif group.kind == FINITE_CYCLIC:
        params = {"order": group.params[0]}
    else:
        params = {"orders": list(group.params)}
    gens = []
    labels = dict(group.generators())
    for label in labels:
        inv = label[1:] if label.startswith("-") else "-" + label
        if inv not in labels:
            inv = label  # involution
        gens.append({"label": label, "inverse": inv})
    return {"kind": group.kind, "params": params, "generators": gens}


def group_from_json(data: dict) -> GroupSpec:
    kind = data.get("kind")
    params = data.get("params", {})
    if kind == FREE_ABELIAN:
        return GroupSpec.free_abelian(int(params["rank"]))
    if kind == INFINITE_DIHEDRAL:
        return GroupSpec.infinite_dihedral(params.get("marking", DIHEDRAL_INVOLUTIONS))
    if kind == FINITE_CYCLIC:
        return GroupSpec.finite_cyclic(int(params["order"]))
    if kind == FINITE_ABELIAN_PRODUCT:
        return GroupSpec.finite_abelian_product(params["orders"])
    raise StructuralError(f"unknown group kind in JSON: {kind!r}")
