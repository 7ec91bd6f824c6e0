"""Verifiable secret sharing with statistical security.

Weaker corruption tolerance changes the game: the honest overlap of a
core group can shrink to a single party, so the majority filtering that
the perfect VSS applies to cached test messages stops working for the
parties outside the core. The pairwise consistency tests therefore ride
on information-checking signatures. Each group member signs its share
to every (intermediary, receiver) pair inside the group; one OK(i, j)
vouches for all signing sessions with signer j and intermediary i once
they completed with values matching i's own share. The dealer announces
a single clique C leaving S_q minus C inside Z for every group, and C's
members convince each outsider by revealing the in-group core's
signatures on the common share.

Every reveal from member j to outsider k travels with a claim message
pinning the value the revealed signatures must match. The claim also
stands in for j signing to itself, which the signing layer refuses to
do: an accepted core's overlap with a group can legitimately be a
single party, and that corner must still convey a value.

Dispute control inside aicp is what makes the failure probability
independent of how many sharings ran before; verifiers hold back their
reveal participation until every core-internal signing session has
publicly completed.
"""

from itertools import combinations

from .aicp import auth_sample, blind_poly, reveal_outcome
from .netsim import Engine
from .sharing import ShareVector
from .vss_perfect import _core_sid, _ok_sid

_NOSIG = object()  # completed signing session whose value never reached us


def _auth_sid(sid, dealer, q, i, j, k):
    # i signs, j carries, k receives
    return f"{sid}/{dealer}/{q}/{i}/{j}/{k}"


def svss_forge_trial(field, t, n, z, rng, honest_signers=2):
    """A corrupt core member claims a wrong share to an outsider.

    Success requires forging every honest in-group signer's signature
    at once; the corrupt member's own point always passes, so each
    session needs enough honest collisions on its own."""
    s = field.rand(rng)
    wrong = (s + 1) % field.p
    sv = tuple(range(1, n + 1))
    corrupt = n  # the forging intermediary sits in every support set
    for _ in range(honest_signers):
        F, M, alphas = auth_sample(field, t, n, s, rng)
        d = field.rand_nonzero(rng)
        B = blind_poly(field, d, F, M)
        Fp = field.rand_poly(t, rng, c0=wrong)
        points = {}
        for v, a in zip(sv, alphas):
            if v == corrupt:
                points[v] = (a, field.poly_eval(Fp, a), 0)
            else:
                points[v] = (a, field.poly_eval(F, a), field.poly_eval(M, a))
        state, _ = reveal_outcome(field, t, z, Fp, d, B, sv, points)
        if state != "accept":
            return False
    return True


class SvssSession:
    __slots__ = ("dealer", "own", "sigs", "ok_sent", "oks", "core", "core_ok",
                 "dealer_role", "announced", "claims", "filled", "active",
                 "auth_started", "gate_left", "gate_passed", "acted")

    def __init__(self, dealer):
        self.dealer = dealer
        self.own = {}           # q -> dealt share
        self.sigs = {}          # (q, signer) -> {receiver: signed value}
        self.ok_sent = set()
        self.oks = set()        # delivered OK pairs (intermediary, signer)
        self.core = None
        self.core_ok = False
        self.dealer_role = False
        self.announced = False
        self.claims = {}        # (q, member) -> claimed common value
        self.filled = {}
        self.active = False
        self.auth_started = 0
        self.gate_left = None   # countdown over core-internal sessions
        self.gate_passed = False
        self.acted = False


class SvssEngine(Engine):
    def __init__(self, node, field, spec, z, acast, icp):
        super().__init__(node)
        self.field = field
        self.spec = spec
        self.z = z
        self.acast = acast
        self.icp = icp
        self.sessions = {}
        node.register("svss.dist", self)
        node.register("svss.claim", self)
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
            sess = self.sessions[sid] = SvssSession(dealer)
        return sess

    def expect(self, sid, dealer):
        """Subscribe to this session's broadcasts and signature flows."""
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
                if i != j:
                    self.acast.on_output(_ok_sid(sid, dealer, i, j), ok_cb((i, j)))

        def core_cb(value):
            sess.core = tuple(value)
            self._advance(sid, sess)

        self.acast.on_output(_core_sid(sid, dealer), core_cb)

        # my intermediary duty: learn the value behind each completed
        # session where j signed through me, then consider vouching
        def sig_cb(q, j, k, asid):
            def cb(_verdict):
                icsess = self.icp.sessions.get(asid)
                value = _NOSIG
                if icsess is not None and icsess.icsig is not None:
                    kind, data = icsess.icsig
                    value = data if kind == "public" else self.field.poly_eval(data, 0)
                sess.sigs.setdefault((q, j), {})[k] = value
                self._poke_oks(sid, sess, only=j)
                self._advance(sid, sess)
            return cb

        for j in range(1, n + 1):
            if j == me:
                continue
            for q in self.shared[(me, j)]:
                for k in self.spec.members(q):
                    asid = _auth_sid(sid, dealer, q, j, me, k)
                    self.icp.on_output(("auth", asid), sig_cb(q, j, k, asid))
            if not self.shared[(me, j)]:
                self._send_ok(sid, sess, j)
        return sess

    def deal(self, sid, shares):
        if len(shares) != self.spec.h:
            raise ValueError("need one share per group")
        sess = self.expect(sid, self.node.party)
        sess.dealer_role = True
        for q in self.spec.qs():
            for p in self.spec.members(q):
                self.node.send(p, sid, "svss.dist",
                               payload=(self.node.party, q, shares[q - 1]),
                               elems=1)

    def act_as_dealer(self, sid):
        sess = self.expect(sid, self.node.party)
        sess.dealer_role = True
        self._advance(sid, sess)

    # -- deliveries ---------------------------------------------------------

    def on(self, node, env):
        dealer, q, v = env.payload
        sess = self.expect(env.sid, dealer)
        me = node.party
        if env.tag == "svss.dist":
            if env.src != dealer or q in sess.own:
                return
            if not (self.spec.mask(q) >> (me - 1)) & 1:
                return
            sess.own[q] = v
            for j in self.spec.members(q):
                if j == me:
                    continue
                for k in self.spec.members(q):
                    sess.auth_started += 1
                    self.icp.auth_start(_auth_sid(env.sid, dealer, q, me, j, k),
                                        j, k, v)
            self._poke_oks(env.sid, sess)
        else:
            if (q, env.src) not in sess.claims:
                sess.claims[(q, env.src)] = v
                self._try_adopt(env.sid, sess, q)
        self._advance(env.sid, sess)

    # -- vouching ---------------------------------------------------------------

    def _poke_oks(self, sid, sess, only=None):
        me = self.node.party
        peers = [only] if only else [j for j in range(1, self.spec.n + 1) if j != me]
        for j in peers:
            if j in sess.ok_sent:
                continue
            groups = self.shared.get((me, j), ())
            if not groups:
                continue
            good = True
            for q in groups:
                if q not in sess.own:
                    good = False
                    break
                got = sess.sigs.get((q, j), {})
                members = self.spec.members(q)
                if len(got) < len(members) or any(
                        got.get(k) != sess.own[q] for k in members):
                    good = False
                    break
            if good:
                self._send_ok(sid, sess, j)

    def _send_ok(self, sid, sess, j):
        sess.ok_sent.add(j)
        self.acast.start(_ok_sid(sid, sess.dealer, self.node.party, j), True,
                         extra_bytes=2)

    # -- core search and share computation -------------------------------------

    def _clique(self, members, sess):
        return all((a, b) in sess.oks and (b, a) in sess.oks
                   for a, b in combinations(members, 2))

    def _advance(self, sid, sess):
        if sess.dealer_role and not sess.announced:
            self._dealer_search(sid, sess)
        if sess.core is None or sid in self.outputs:
            return
        if not sess.core_ok:
            if not self._clique(sess.core, sess):
                return
            cmask = sum(1 << (p - 1) for p in sess.core)
            if not all(self.z.zin_mask(self.spec.mask(q) & ~cmask)
                       for q in self.spec.qs()):
                return  # malformed announcement, never acceptable
            sess.core_ok = True
            self._arm_gate(sid, sess)
        if sess.gate_passed and not sess.acted:
            sess.acted = True
            self._act_on_core(sid, sess)

    def _dealer_search(self, sid, sess):
        parties = tuple(range(1, self.spec.n + 1))
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

    def _core_sids(self, sid, sess):
        core = set(sess.core)
        for q in self.spec.qs():
            cq = sorted(core & set(self.spec.members(q)))
            for i in cq:
                for j in cq:
                    if i != j:
                        for k in self.spec.members(q):
                            yield _auth_sid(sid, sess.dealer, q, i, j, k)

    def _arm_gate(self, sid, sess):
        """No reveal participation before every core-internal signing
        session has publicly completed."""
        required = list(self._core_sids(sid, sess))
        sess.gate_left = len(required)

        def done(_verdict):
            sess.gate_left -= 1
            if sess.gate_left == 0:
                sess.gate_passed = True
                self._advance(sid, sess)

        if not required:
            sess.gate_passed = True
            return
        for asid in required:
            self.icp.on_output(("auth", asid), done)

    def _act_on_core(self, sid, sess):
        me = self.node.party
        core = set(sess.core)
        for q in self.spec.qs():
            members = self.spec.members(q)
            cq = sorted(core & set(members))
            outsiders = [k for k in members if k not in core]
            if me in core and me in members and q in sess.own:
                sess.filled[q] = sess.own[q]
                for k in outsiders:
                    self.node.send(k, sid, "svss.claim",
                                   payload=(sess.dealer, q, sess.own[q]), elems=1)
                    for j in cq:
                        if j != me:
                            self.icp.reveal(_auth_sid(sid, sess.dealer, q, j, me, k))
            for j in cq:
                for i in cq:
                    if i != j:
                        for k in outsiders:
                            self.icp.reveal_support(
                                _auth_sid(sid, sess.dealer, q, j, i, k))
            if me in members and me not in core:
                def rev_cb(q=q):
                    def cb(_value):
                        self._try_adopt(sid, sess, q)
                    return cb
                for j in cq:
                    for i in cq:
                        if i != j:
                            self.icp.on_output(
                                ("rev", _auth_sid(sid, sess.dealer, q, i, j, me)),
                                rev_cb())
                self._try_adopt(sid, sess, q)
        self._maybe_output(sid, sess)

    def _try_adopt(self, sid, sess, q):
        """Outsider's rule: take the first member whose claim is backed
        by accepted signatures of the whole in-group core, smallest
        index on simultaneous arrival."""
        me = self.node.party
        if not sess.gate_passed or q in sess.filled:
            return
        core = set(sess.core or ())
        if me in core or not (self.spec.mask(q) >> (me - 1)) & 1:
            return
        cq = sorted(core & set(self.spec.members(q)))
        for j in cq:
            v = sess.claims.get((q, j))
            if v is None:
                continue
            if all(self.icp.outputs.get(
                    ("rev", _auth_sid(sid, sess.dealer, q, i, j, me))) == v
                   for i in cq if i != j):
                sess.filled[q] = v
                break
        self._maybe_output(sid, sess)

    def _maybe_output(self, sid, sess):
        me = self.node.party
        if len(sess.filled) == len(self.spec.groups_of_party[me]):
            self._finish(sid, ShareVector(self.spec, me, sess.filled))
