"""Verifiable secret sharing with perfect security.

The dealer hands each group its share, group members cross-check the
supposedly common value pairwise (test messages) and publicly vouch for
each other over reliable broadcast. One OK(i,j) covers all groups the
pair shares; the dealer then looks for a single core set C that is a
clique in the OK graph and leaves S_q minus C inside some Z-set for
every group, and broadcasts it. Members of C adopt their dealt share;
everyone else filters the cached test messages of C's members for a
value backed by all but a Z-coverable remainder.

The classic variant (one OK and one core set per group) is kept behind
modified=False for comparison runs; it costs |Z| times more broadcasts.

The ideal-object counterpart lives here too: an oracle node that takes
the dealer's share vector and hands every party its bundle directly.
VssLayer instances let the multiplication protocols switch between the
two without caring which is underneath.
"""

from itertools import combinations

from .netsim import Engine
from .sharing import ShareVector


def _ok_sid(sid, dealer, i, j):
    return f"{sid}/{dealer}/ok/{i}/{j}"


def _okq_sid(sid, dealer, q, i, j):
    return f"{sid}/{dealer}/{q}/{i}/{j}"


def _core_sid(sid, dealer):
    return f"{sid}/{dealer}/core"


class PvssSession:
    __slots__ = ("dealer", "own", "tests", "ok_sent", "oks", "core",
                 "dealer_role", "announced", "cores_found", "filled", "active")

    def __init__(self, dealer):
        self.dealer = dealer
        self.own = {}          # q -> dealt share
        self.tests = {}        # (sender, q) -> value, first kept
        self.ok_sent = set()   # j (modified) or (q, j) (unmodified)
        self.oks = set()       # delivered OK pairs (i, j) or (q, i, j)
        self.core = None
        self.dealer_role = False
        self.announced = False
        self.cores_found = {}  # unmodified dealer: q -> W_q
        self.filled = {}
        self.active = False


class PvssEngine(Engine):
    def __init__(self, node, field, spec, z, acast, modified=True):
        super().__init__(node)
        self.field = field
        self.spec = spec
        self.z = z
        self.acast = acast
        self.modified = modified
        self.sessions = {}
        node.register("pvss.dist", self)
        node.register("pvss.test", self)
        # groups shared by each (ordered) party pair
        self.shared = {}
        n = spec.n
        for i in range(1, n + 1):
            for j in range(1, n + 1):
                if i != j:
                    self.shared[(i, j)] = tuple(
                        q for q in spec.qs()
                        if (spec.mask(q) >> (i - 1)) & 1
                        and (spec.mask(q) >> (j - 1)) & 1)

    def _sess(self, sid, dealer):
        sess = self.sessions.get(sid)
        if sess is None:
            sess = self.sessions[sid] = PvssSession(dealer)
        return sess

    def expect(self, sid, dealer):
        """Subscribe to this session's broadcasts; idempotent."""
        sess = self._sess(sid, dealer)
        if sess.active:
            return sess
        sess.active = True
        me = self.node.party
        n = self.spec.n

        def ok_cb(key):
            def cb(_value):
                sess.oks.add(key)
                self._advance(sid, sess)
            return cb

        for i in range(1, n + 1):
            for j in range(1, n + 1):
                if i == j:
                    continue
                if self.modified:
                    self.acast.on_output(_ok_sid(sid, dealer, i, j), ok_cb((i, j)))
                else:
                    for q in self.shared[(i, j)]:
                        self.acast.on_output(_okq_sid(sid, dealer, q, i, j),
                                             ok_cb((q, i, j)))

        def core_cb(value):
            sess.core = value
            self._advance(sid, sess)

        self.acast.on_output(_core_sid(sid, dealer), core_cb)
        if self.modified:
            # pairs sharing no group: nothing to verify, vouch right away
            for j in range(1, n + 1):
                if j != me and not self.shared[(me, j)]:
                    self._send_ok(sid, sess, j)
        return sess

    def deal(self, sid, shares):
        """Dealer entry point: shares is the full (s_1..s_h) vector."""
        if len(shares) != self.spec.h:
            raise ValueError("need one share per group")
        sess = self.expect(sid, self.node.party)
        sess.dealer_role = True
        for q in self.spec.qs():
            for p in self.spec.members(q):
                self.node.send(p, sid, "pvss.dist",
                               payload=(self.node.party, q, shares[q - 1]),
                               elems=1)

    def act_as_dealer(self, sid):
        """Take on the core-search duty without sending dist messages
        (used when those were crafted externally)."""
        sess = self.expect(sid, self.node.party)
        sess.dealer_role = True
        self._advance(sid, sess)

    # -- deliveries ---------------------------------------------------------

    def on(self, node, env):
        dealer, q, v = env.payload
        sess = self.expect(env.sid, dealer)
        me = node.party
        if env.tag == "pvss.dist":
            if env.src != dealer or q in sess.own:
                return
            if not (self.spec.mask(q) >> (me - 1)) & 1:
                return
            sess.own[q] = v
            for p in self.spec.members(q):
                if p != me:
                    node.send(p, env.sid, "pvss.test", payload=(dealer, q, v),
                              elems=1)
            self._poke_oks(env.sid, sess)
        else:
            if (env.src, q) in sess.tests:
                return
            sess.tests[(env.src, q)] = v
            self._poke_oks(env.sid, sess, only=env.src)
        self._advance(env.sid, sess)

    # -- consistency vouching -------------------------------------------------

    def _poke_oks(self, sid, sess, only=None):
        me = self.node.party
        peers = [only] if only else [j for j in range(1, self.spec.n + 1) if j != me]
        for j in peers:
            groups = self.shared[(me, j)]
            if not groups:
                continue
            if self.modified:
                if j in sess.ok_sent:
                    continue
                if all(q in sess.own and sess.tests.get((j, q)) == sess.own[q]
                       for q in groups):
                    self._send_ok(sid, sess, j)
            else:
                for q in groups:
                    if (q, j) in sess.ok_sent:
                        continue
                    if q in sess.own and sess.tests.get((j, q)) == sess.own[q]:
                        sess.ok_sent.add((q, j))
                        self.acast.start(_okq_sid(sid, sess.dealer, q, me, j),
                                         True, extra_bytes=2)

    def _send_ok(self, sid, sess, j):
        me = self.node.party
        sess.ok_sent.add(j)
        self.acast.start(_ok_sid(sid, sess.dealer, me, j), True, extra_bytes=2)

    # -- core search and share computation -------------------------------------

    def _clique(self, members, sess, q=None):
        if self.modified:
            return all((a, b) in sess.oks and (b, a) in sess.oks
                       for a, b in combinations(members, 2))
        return all((q, a, b) in sess.oks and (q, b, a) in sess.oks
                   for a, b in combinations(members, 2))

    def _advance(self, sid, sess):
        if sess.dealer_role and not sess.announced:
            self._dealer_search(sid, sess)
        if sess.core is None or sid in self.outputs:
            return
        if self.modified:
            self._fill_modified(sid, sess)
        else:
            self._fill_unmodified(sid, sess)

    def _dealer_search(self, sid, sess):
        parties = tuple(range(1, self.spec.n + 1))
        if self.modified:
            for r in range(self.spec.n, 0, -1):
                for cand in combinations(parties, r):
                    if not self._clique(cand, sess):
                        continue
                    cmask = sum(1 << (p - 1) for p in cand)
                    if all(self.z.zin_mask(self.spec.mask(q) & ~cmask)
                           for q in self.spec.qs()):
                        sess.announced = True
                        self.acast.start(_core_sid(sid, sess.dealer), cand,
                                         extra_bytes=len(cand))
                        return
        else:
            for q in self.spec.qs():
                if q in sess.cores_found:
                    continue
                members = self.spec.members(q)
                for r in range(len(members), 0, -1):
                    found = None
                    for cand in combinations(members, r):
                        if not self._clique(cand, sess, q):
                            continue
                        cmask = sum(1 << (p - 1) for p in cand)
                        if self.z.zin_mask(self.spec.mask(q) & ~cmask):
                            found = cand
                            break
                    if found:
                        sess.cores_found[q] = found
                        break
            if len(sess.cores_found) == self.spec.h:
                sess.announced = True
                cores = tuple(sess.cores_found[q] for q in self.spec.qs())
                self.acast.start(_core_sid(sid, sess.dealer), cores,
                                 extra_bytes=sum(len(c) for c in cores))

    def _verify_core(self, sess):
        if self.modified:
            core = sess.core
            if not self._clique(core, sess):
                return False
            cmask = sum(1 << (p - 1) for p in core)
            return all(self.z.zin_mask(self.spec.mask(q) & ~cmask)
                       for q in self.spec.qs())
        cores = sess.core
        if len(cores) != self.spec.h:
            return False
        for q in self.spec.qs():
            cq = cores[q - 1]
            cqmask = sum(1 << (p - 1) for p in cq)
            if cqmask & ~self.spec.mask(q):
                return False
            if not self._clique(cq, sess, q):
                return False
            if not self.z.zin_mask(self.spec.mask(q) & ~cqmask):
                return False
        return True

    def _filter(self, sess, q, candidates):
        """Common value vouched by all but a Z-coverable rest of candidates."""
        cand_set = set(candidates)
        values = sorted({sess.tests[(j, q)] for j in cand_set
                         if (j, q) in sess.tests})
        for v in values:
            backers = {j for j in cand_set if sess.tests.get((j, q)) == v}
            if backers and self.z.zin(cand_set - backers):
                return v
        return None

    def _fill_modified(self, sid, sess):
        if not self._verify_core(sess):
            return
        me = self.node.party
        core = set(sess.core)
        for q in self.spec.groups_of_party[me]:
            if q in sess.filled:
                continue
            in_group_core = core & set(self.spec.members(q))
            if me in core:
                if q in sess.own:
                    sess.filled[q] = sess.own[q]
            else:
                v = self._filter(sess, q, in_group_core)
                if v is not None:
                    sess.filled[q] = v
        self._maybe_output(sid, sess)

    def _fill_unmodified(self, sid, sess):
        if not self._verify_core(sess):
            return
        me = self.node.party
        for q in self.spec.groups_of_party[me]:
            if q in sess.filled:
                continue
            cq = sess.core[q - 1]
            if me in cq:
                if q in sess.own:
                    sess.filled[q] = sess.own[q]
            else:
                v = self._filter(sess, q, cq)
                if v is not None:
                    sess.filled[q] = v
        self._maybe_output(sid, sess)

    def _maybe_output(self, sid, sess):
        me = self.node.party
        if len(sess.filled) == len(self.spec.groups_of_party[me]):
            self._finish(sid, ShareVector(self.spec, me, sess.filled))


# -- ideal counterpart --------------------------------------------------------


class FvssOracle(Engine):
    """Ideal sharing node: accepts the dealer's vector, hands out bundles."""

    def __init__(self, node, spec):
        super().__init__(node)
        self.spec = spec
        self.done = set()
        node.register("fvss.dealer", self)

    def on(self, node, env):
        dealer, shares = env.payload
        if env.sid in self.done or env.src != dealer:
            return
        if len(shares) != self.spec.h:
            return
        self.done.add(env.sid)
        node.sim.metrics.bump("fvss_calls")
        for p in node.sim.party_ids:
            bundle = {q: shares[q - 1] for q in self.spec.groups_of_party[p]}
            node.send(p, env.sid, "fvss.share", payload=(dealer, bundle),
                      elems=len(bundle))


class FvssClient(Engine):
    def __init__(self, node):
        super().__init__(node)
        node.register("fvss.share", self)

    def on(self, node, env):
        self._finish(env.sid, env.payload)


class OracleVssLayer:
    """Sharing via the ideal node; callbacks get ShareVectors."""

    kind = "oracle"

    def __init__(self, sim, spec):
        self.sim = sim
        self.spec = spec
        FvssOracle(sim.add_oracle("fvss"), spec)
        self.clients = {i: FvssClient(sim.nodes[i]) for i in sim.party_ids}

    def share(self, dealer, sid, shares):
        self.sim.nodes[dealer].send("fvss", sid, "fvss.dealer",
                                    payload=(dealer, tuple(shares)),
                                    elems=self.spec.h)

    def on_share(self, party, sid, cb):
        self.clients[party].on_output(
            sid, lambda out: cb(ShareVector(self.spec, party, out[1])))


class ComposedVssLayer:
    """Sharing via real per-party engines (perfect or statistical VSS)."""

    kind = "composed"

    def __init__(self, engines):
        self.engines = engines
        self.sim = next(iter(engines.values())).node.sim

    def share(self, dealer, sid, shares):
        self.sim.metrics.bump("fvss_calls")
        for eng in self.engines.values():
            eng.expect(sid, dealer)
        self.engines[dealer].deal(sid, shares)

    def on_share(self, party, sid, cb):
        self.engines[party].on_output(sid, cb)
