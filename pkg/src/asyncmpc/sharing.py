"""Additive sharing over the group family S = {P without Z : Z in Z}.

A secret s is split as s = s_1 + ... + s_h with s_q handed to every
member of S_q, so a party's state is the map {q: s_q} over the groups it
belongs to. The scheme is linear, and any coalition inside one Z-set
misses the share of its complement group.

Reconstruction of a single group's share is one-round: members send it
to everyone outside the group, and an outsider accepts a value once the
members it came from leave a remainder of S_q that fits in some Z-set.
Full reconstruction does this for every group and sums.
"""

from .netsim import Engine


class ShareVector:
    """One party's view of a sharing: exactly the groups it belongs to."""

    __slots__ = ("spec", "owner", "shares")

    def __init__(self, spec, owner, shares):
        expect = spec.groups_of_party[owner]
        if set(shares) != set(expect):
            raise ValueError(f"share domain {sorted(shares)} != groups {expect}"
                             f" of party {owner}")
        self.spec = spec
        self.owner = owner
        self.shares = dict(shares)

    def __getitem__(self, q):
        return self.shares[q]

    def __eq__(self, other):
        return (isinstance(other, ShareVector) and self.owner == other.owner
                and self.shares == other.shares)

    def __repr__(self):
        return f"ShareVector(owner={self.owner}, shares={self.shares})"


def lin_combine(field, coeffs, inputs):
    """Pointwise c_1*[x_1] + ... + c_k*[x_k]; owners and specs must agree."""
    if len(coeffs) != len(inputs) or not inputs:
        raise ValueError("need one coefficient per input")
    first = inputs[0]
    for sv in inputs[1:]:
        if sv.owner != first.owner or sv.spec is not first.spec:
            raise ValueError("mixed owners or sharing specs")
    out = {}
    for q in first.shares:
        acc = 0
        for c, sv in zip(coeffs, inputs):
            acc += c * sv.shares[q]
        out[q] = acc % field.p
    return ShareVector(first.spec, first.owner, out)


class FullSharing:
    """Global view (s_1, ..., s_h); lives in oracles and tests only."""

    __slots__ = ("values",)

    def __init__(self, values):
        self.values = tuple(values)

    @classmethod
    def random(cls, field, h, secret, rng):
        return cls(field.sum_shares(secret, h, rng))

    def secret(self, field):
        return field.sum(self.values)

    def share_of(self, q):
        return self.values[q - 1]

    def vector_for(self, spec, owner):
        return ShareVector(spec, owner,
                           {q: self.values[q - 1]
                            for q in spec.groups_of_party[owner]})

    def __eq__(self, other):
        return isinstance(other, FullSharing) and self.values == other.values


def default_share(s, h):
    """Non-interactive public sharing: first group carries s, rest zero."""
    return FullSharing((s,) + (0,) * (h - 1))


# -- reconstruction -----------------------------------------------------------


class RecShareState:
    __slots__ = ("member", "started", "tally", "seen", "output")

    def __init__(self, member):
        self.member = member
        self.started = False
        self.tally = {}   # value -> bitmask of group senders
        self.seen = 0     # senders already counted, bitmask
        self.output = None


def rec_share_step(q, state, event, spec, z):
    """Advance one group reconstruction by one event.

    event is ("start", value) for a member announcing its share, or
    ("share", value, src) for a delivery. sends lists the non-member
    parties to forward (q, value) to.
    """
    sends = []
    out = None
    gmask = spec.mask(q)
    if event[0] == "start":
        if state.member and not state.started:
            state.started = True
            non_members = [p for p in range(1, spec.n + 1)
                           if not (gmask >> (p - 1)) & 1]
            sends = [(p, event[1]) for p in non_members]
            if state.output is None:
                state.output = out = event[1]
    else:
        _, v, src = event
        bit = 1 << (src - 1)
        if bit & gmask and not bit & state.seen:
            state.seen |= bit
            state.tally[v] = state.tally.get(v, 0) | bit
            if state.output is None and not state.member:
                # the senders of v must leave a Z-coverable remainder of S_q
                if z.zin_mask(gmask & ~state.tally[v]):
                    state.output = out = v
    return state, sends, out


class RecEngine(Engine):
    """Reconstruction endpoint. Group sessions are keyed (sid, q) and a
    full reconstruction under sid sums all of them."""

    def __init__(self, node, field, spec, z):
        super().__init__(node)
        self.field = field
        self.spec = spec
        self.z = z
        self.sessions = {}
        node.register("rec.share", self)

    def _st(self, sid, q):
        st = self.sessions.get((sid, q))
        if st is None:
            member = bool((self.spec.mask(q) >> (self.node.party - 1)) & 1)
            st = self.sessions[(sid, q)] = RecShareState(member)
        return st

    def _apply(self, sid, q, st, event):
        _, sends, out = rec_share_step(q, st, event, self.spec, self.z)
        for dst, v in sends:
            self.node.send(dst, sid, "rec.share", payload=(q, v), elems=1)
        if out is not None:
            self._finish((sid, q), out)

    def start_share(self, sid, q, value):
        """Announce this party's share of group q to the outsiders."""
        self._apply(sid, q, self._st(sid, q), ("start", value))

    def start_rec(self, sid, sv: ShareVector):
        """Reconstruct the whole secret; result under key sid."""
        got = {}

        def collect(q):
            def cb(v):
                got[q] = v
                if len(got) == self.spec.h:
                    self._finish(sid, self.field.sum(got.values()))
            return cb

        for q in self.spec.qs():
            self.on_output((sid, q), collect(q))
        for q, v in sv.shares.items():
            self.start_share(sid, q, v)

    def on(self, node, env):
        q, v = env.payload
        self._apply(env.sid, q, self._st(env.sid, q), ("share", v, env.src))
