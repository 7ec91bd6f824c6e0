"""Reliable broadcast and an ideal Byzantine-agreement oracle.

The broadcast is the classic echo/ready two-phase protocol, generalized
from thresholds to an adversary structure: a party readies once the
echoes for one candidate value cover the complement of some Z-set, or
(amplification) once the ready senders for a value are not contained in
any Z-set; it outputs once the ready senders cover the complement of
some Z-set. Each party sends at most one echo and one ready per
instance, total, so an all-honest instance costs exactly n + 2n^2
envelopes (self-deliveries included).

Agreement is not run as a protocol. It is an oracle node that applies
the decide rule directly: given a core set CS whose complement is in Z
and votes from all of CS, the output is the common vote of the honest
members if they agree, otherwise the vote of the smallest-index corrupt
member. The adversary strategy may pick CS; if it abstains, the oracle
waits one fairness delay (a self-addressed tick) and then picks the
lexicographically least feasible core set from the earliest votes.
"""

from .netsim import Engine
from .structures import parties_of


# -- reliable broadcast -------------------------------------------------------


class AcastState:
    __slots__ = ("echoed", "readied", "echo_tally", "ready_tally", "output")

    def __init__(self):
        self.echoed = False
        self.readied = False
        self.echo_tally = {}   # value -> bitmask of senders seen
        self.ready_tally = {}
        self.output = None


def acast_step(state, event, z):
    """Advance one instance by one event.

    event is ("input", m) for the delivered sender message, or
    ("echo"|"ready", m, src). Returns (state, sends, output) where sends
    is a list of ("echo"|"ready", m) broadcasts and output is the decided
    value the first time it is reached, else None.
    """
    kind = event[0]
    sends = []
    out = None
    if kind == "input":
        if not state.echoed:
            state.echoed = True
            sends.append(("echo", event[1]))
    elif kind == "echo":
        _, m, src = event
        tally = state.echo_tally.get(m, 0) | (1 << (src - 1))
        state.echo_tally[m] = tally
        if not state.readied and z.complement_within_mask(tally):
            state.readied = True
            sends.append(("ready", m))
    elif kind == "ready":
        _, m, src = event
        tally = state.ready_tally.get(m, 0) | (1 << (src - 1))
        state.ready_tally[m] = tally
        if not state.readied and not z.zin_mask(tally):
            state.readied = True
            sends.append(("ready", m))
        if state.output is None and z.complement_within_mask(tally):
            state.output = m
            out = m
    return state, sends, out


class AcastEngine(Engine):
    """Per-party broadcast endpoint; sessions are keyed by sid."""

    TAGS = ("acast.inp", "acast.echo", "acast.ready")

    def __init__(self, node, z):
        super().__init__(node)
        self.z = z
        self.sessions = {}
        for t in self.TAGS:
            node.register(t, self)

    def start(self, sid, value, elems=0, extra_bytes=0):
        """Send `value` to everybody as this instance's sender."""
        self.node.sim.metrics.bump("facast_calls")
        for p in self.node.sim.party_ids:
            self.node.send(p, sid, "acast.inp", payload=value,
                           elems=elems, extra_bytes=extra_bytes)

    def on(self, node, env):
        st = self.sessions.get(env.sid)
        if st is None:
            st = self.sessions[env.sid] = AcastState()
        kind = env.tag[6:]
        if kind == "inp":
            event = ("input", env.payload)
        else:
            event = (kind, env.payload, env.src)
        _, sends, out = acast_step(st, event, self.z)
        if sends:
            # relayed messages carry the same value, so the same size
            extra = env.nbytes - 24 - len(env.sid) - 8 * env.elems
            for kind2, val in sends:
                for p in node.sim.party_ids:
                    node.send(p, env.sid, "acast." + kind2, payload=val,
                              elems=env.elems, extra_bytes=extra)
        if out is not None:
            self._finish(env.sid, out)


# -- agreement oracle ---------------------------------------------------------


class AbaSession:
    __slots__ = ("z", "votes", "order", "cs", "frozen", "decided")

    def __init__(self, z):
        self.z = z
        self.votes = {}     # party -> bit
        self.order = []     # vote arrival order
        self.cs = None      # recorded core set (tuple, sorted)
        self.frozen = None  # arrival prefix at first feasibility
        self.decided = None


def default_core_set(z, arrived):
    """Lexicographically least core set inside the arrival prefix.

    A set A qualifies when P minus A is in Z, i.e. A contains the
    complement of some Z-set. For each such base contained in `arrived`,
    the least completion adds every arrived party below the base's
    maximum; the winner is the least of those by sorted-tuple order.
    """
    avail = set(arrived)
    best = None
    for zm in z.maximal_masks:
        base = set(parties_of(z.full_mask & ~zm))
        if not base or not base <= avail:
            continue
        top = max(base)
        cand = tuple(sorted(base | {v for v in avail if v < top}))
        if best is None or cand < best:
            best = cand
    return best


def faba_decide(sess, corrupt_set, adversary_choice=None):
    """Apply the decide rule; None while votes for the core set are missing.

    adversary_choice, when given, must be a core set whose complement is
    in Z (else ValueError) and replaces the recorded one.
    """
    cs = sess.cs
    if adversary_choice is not None:
        cs = tuple(sorted(adversary_choice))
        comp = sess.z.full_mask & ~sum(1 << (i - 1) for i in cs)
        if not sess.z.zin_mask(comp):
            raise ValueError("core set complement not in Z")
    if cs is None or any(i not in sess.votes for i in cs):
        return None
    honest_votes = [sess.votes[i] for i in cs if i not in corrupt_set]
    if honest_votes and all(v == honest_votes[0] for v in honest_votes):
        return cs, honest_votes[0]
    bad = [i for i in cs if i in corrupt_set]
    if bad:
        return cs, sess.votes[min(bad)]
    # disagreeing all-honest core set: no corrupt member to blame, the
    # smallest-index member's vote stands
    return cs, sess.votes[min(cs)]


class FabaOracle(Engine):
    """Ideal-agreement node; parties talk to it with faba.vote, the
    adversary with faba.coreset (or the faba_coreset strategy hook)."""

    def __init__(self, node, z):
        super().__init__(node)
        self.z = z
        self.sessions = {}
        node.register("faba.vote", self)
        node.register("faba.coreset", self)
        node.register("faba.tick", self)

    def _sess(self, sid):
        s = self.sessions.get(sid)
        if s is None:
            s = self.sessions[sid] = AbaSession(self.z)
            self.node.sim.metrics.bump("faba_calls")
        return s

    def on(self, node, env):
        sess = self._sess(env.sid)
        if sess.decided is not None:
            return
        kind = env.tag[5:]
        if kind == "vote":
            if env.src not in node.sim.party_ids or env.payload not in (0, 1):
                return
            if env.src not in sess.votes:
                sess.order.append(env.src)
            sess.votes[env.src] = env.payload
            strat = node.sim.strategy
            if sess.cs is None and strat is not None:
                hook = getattr(strat, "faba_coreset", None)
                if hook is not None:
                    choice = hook(env.sid, dict(sess.votes), list(sess.order))
                    if choice is not None:
                        self._record_cs(sess, choice)
            if sess.cs is None and sess.frozen is None:
                voted = 0
                for i in sess.order:
                    voted |= 1 << (i - 1)
                if self.z.complement_within_mask(voted):
                    sess.frozen = tuple(sess.order)
                    node.send(node.party, env.sid, "faba.tick")
        elif kind == "coreset":
            if env.src in node.sim.party_ids and env.src not in node.sim.corrupt:
                return
            self._record_cs(sess, env.payload)
        elif kind == "tick":
            if sess.cs is None and sess.frozen is not None:
                sess.cs = default_core_set(self.z, sess.frozen)
        self._try_decide(env.sid, sess)

    def _record_cs(self, sess, cs):
        if sess.cs is not None:
            return
        cs = tuple(sorted(cs))
        comp = self.z.full_mask & ~sum(1 << (i - 1) for i in cs)
        if self.z.zin_mask(comp):
            sess.cs = cs

    def _try_decide(self, sid, sess):
        if sess.decided is not None:
            return
        res = faba_decide(sess, self.node.sim.corrupt)
        if res is None:
            return
        sess.decided = res
        cs, y = res
        for p in self.node.sim.party_ids:
            self.node.send(p, sid, "faba.decide", payload=res,
                           extra_bytes=len(cs) + 1)


class FabaClient(Engine):
    """Party-side mailbox for decide messages."""

    def __init__(self, node):
        super().__init__(node)
        node.register("faba.decide", self)

    def vote(self, sid, bit):
        self.node.send("faba", sid, "faba.vote", payload=bit, extra_bytes=1)

    def on(self, node, env):
        self._finish(env.sid, env.payload)
