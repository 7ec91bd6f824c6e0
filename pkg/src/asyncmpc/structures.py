"""Adversary structures and the sharing specification derived from them.

An adversary structure is an explicit list of the party subsets the
adversary might corrupt. Everything downstream keys off two derived
objects: the list of complement groups S_q = P \\ Z_q (one additive share
per group, known to everyone in the group), and the Q^(k) predicates
("no k structure sets cover this party set") that gate which protocols
are runnable at all.

Party sets are manipulated as bitmasks: bit (i-1) stands for party i.
At desk scale (n <= 10 or so) every cover test is a handful of mask ops.
"""

from itertools import combinations_with_replacement


def mask_of(parties) -> int:
    m = 0
    for i in parties:
        m |= 1 << (i - 1)
    return m


def parties_of(mask: int):
    out = []
    i = 1
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return tuple(out)


class AdversaryStructure:
    """The list Z_1..Z_h, held in a canonical (sorted) order.

    The ordering is load-bearing: every "smallest indexed set" rule in the
    protocols resolves against it, so it is fixed once at construction.
    """

    __slots__ = ("n", "sets", "masks", "full_mask", "t", "_maximal_masks",
                 "_cwm_cache", "_zin_cache")

    def __init__(self, n: int, sets):
        if n < 2:
            raise ValueError("need at least two parties")
        canon = sorted({tuple(sorted(set(s))) for s in sets})
        for s in canon:
            if s and (s[0] < 1 or s[-1] > n):
                raise ValueError(f"set {s} out of range for n={n}")
        if not canon:
            raise ValueError("empty structure")
        self.n = n
        self.sets = tuple(canon)
        self.masks = tuple(mask_of(s) for s in canon)
        self.full_mask = (1 << n) - 1
        self.t = max(len(s) for s in canon)
        maximal = []
        for m in self.masks:
            if not any(m != o and m & ~o == 0 for o in self.masks):
                maximal.append(m)
        self._maximal_masks = tuple(maximal)

    @classmethod
    def singletons(cls, n: int):
        return cls(n, [(i,) for i in range(1, n + 1)])

    @classmethod
    def first_singletons(cls, n: int, k: int):
        """{{1}, ..., {k}} over n parties; lets |Z| vary with n held fixed."""
        return cls(n, [(i,) for i in range(1, k + 1)])

    @classmethod
    def from_json(cls, doc):
        return cls(int(doc["n"]), [tuple(s) for s in doc["Z"]])

    def to_json(self):
        return {"n": self.n, "Z": [list(s) for s in self.sets]}

    @property
    def h(self) -> int:
        return len(self.sets)

    @property
    def maximal_masks(self):
        return self._maximal_masks

    def complement_within_mask(self, mask: int) -> bool:
        """True when P minus some Z-set lies entirely inside `mask`."""
        for zm in self._maximal_masks:
            if (self.full_mask & ~zm) & ~mask == 0:
                return True
        return False

    def zin_mask(self, mask: int) -> bool:
        """mask is a subset of some structure set (the adversary could be it)."""
        for zm in self.masks:
            if mask & ~zm == 0:
                return True
        return False

    def zin(self, parties) -> bool:
        return self.zin_mask(mask_of(parties))

    def q_condition_mask(self, subset_mask: int, k: int) -> bool:
        if k < 1:
            raise ValueError("k must be >= 1")
        # non-maximal sets never enlarge a union, so combinations over the
        # maximal ones (with repetition) decide the predicate
        for combo in combinations_with_replacement(self._maximal_masks, k):
            union = 0
            for m in combo:
                union |= m
            if subset_mask & ~union == 0:
                return False
        return True

    def q_condition(self, subset, k: int) -> bool:
        return self.q_condition_mask(mask_of(subset), k)

    def __repr__(self):
        return f"AdversaryStructure(n={self.n}, h={self.h}, t={self.t})"


class SharingSpec:
    """Groups S_q = P \\ Z_q, ordered exactly like the structure.

    Group indices q are 1-based to match how shares are written down
    everywhere ([s]_1 is the group-1 share); `groups[q-1]` is the member
    tuple and `masks[q-1]` the bitmask.
    """

    __slots__ = ("n", "groups", "masks", "full_mask", "groups_of_party", "pair_members")

    def __init__(self, zstruct: AdversaryStructure):
        self.n = zstruct.n
        full = zstruct.full_mask
        self.full_mask = full
        self.masks = tuple(full & ~zm for zm in zstruct.masks)
        self.groups = tuple(parties_of(m) for m in self.masks)
        by_party = {i: [] for i in range(1, self.n + 1)}
        for q, members in enumerate(self.groups, start=1):
            for i in members:
                by_party[i].append(q)
        self.groups_of_party = {i: tuple(qs) for i, qs in by_party.items()}
        # members of S_p & S_q for every ordered pair, used by the
        # multiplication loops
        h = len(self.groups)
        self.pair_members = {
            (p, q): self.masks[p - 1] & self.masks[q - 1]
            for p in range(1, h + 1)
            for q in range(1, h + 1)
        }

    @property
    def h(self) -> int:
        return len(self.groups)

    def qs(self):
        return range(1, len(self.groups) + 1)

    def members(self, q: int):
        return self.groups[q - 1]

    def mask(self, q: int) -> int:
        return self.masks[q - 1]


def sharing_spec(zstruct: AdversaryStructure) -> SharingSpec:
    return SharingSpec(zstruct)


def q_condition(subset, zstruct: AdversaryStructure, k: int) -> bool:
    return zstruct.q_condition(subset, k)


def q_condition_spec(spec: SharingSpec, zstruct: AdversaryStructure, k: int) -> bool:
    """Every group survives every k-fold union of structure sets."""
    return all(zstruct.q_condition_mask(m, k) for m in spec.masks)
