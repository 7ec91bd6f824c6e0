"""Information-checking signatures for the statistical protocols.

A signer S hands an intermediary I a random degree-t polynomial F with
F(0) = s plus a masking polynomial M, and every party a verification
point (alpha_j, F(alpha_j), M(alpha_j)) at its own secret alpha_j. The
intermediary publishes a random challenge d and the blinded polynomial
B = d*F + M once enough verifiers confirmed receipt; the signer then
publicly confirms (OK) or discloses s (NOK). To later convince a
receiver R, I reveals F' and the verifiers their points; R accepts a
point that matches F' or contradicts B, and believes F'(0) once the
accepted points leave only a Z-coverable slice of the support set.

Cheaters burn themselves into local discard lists: a verifier whose own
point contradicts B under an OK verdict stops trusting that signer and
thereafter plays inert dummy points for it; a receiver that catches an
intermediary revealing garbage rejects everything it says from then on.

The probability arguments live in the pure helpers below (the Monte
Carlo suites call them directly, no event loop involved); the engines
wire the same algebra into the simulator.

alpha values are drawn distinct across verifiers. Sampling them fully
independently would work for large fields but lets tiny-field test runs
collide, which silently changes the acceptance bounds, so distinctness
is enforced and |F| - 1 >= n is required.
"""

from .netsim import Engine
from .structures import mask_of, parties_of


# -- pure algebra -------------------------------------------------------------


def auth_sample(field, t, n, s, rng):
    """Signer's secret data: (F, M, alphas) with F(0) = s."""
    F = field.rand_poly(t, rng, c0=s)
    M = field.rand_poly(t, rng)
    alphas = field.distinct_nonzero(n, rng)
    return F, M, alphas


def blind_poly(field, d, F, M):
    return tuple((d * f + m) % field.p for f, m in zip(F, M))


def point_consistent(field, d, B, point):
    """Does B agree with d*v + m at the point's alpha?"""
    alpha, v, m = point
    return field.poly_eval(B, alpha) == (d * v + m) % field.p


DUMMY = ("dummy",)


def reveal_accept(field, t, Fp, d, B, point):
    """Receiver's per-point rule: dummies pass; otherwise the point must
    match the revealed polynomial or contradict the blinded one."""
    if point == DUMMY:
        return True
    alpha, v, m = point
    return (field.poly_eval(Fp, alpha) == v
            or field.poly_eval(B, alpha) != (d * v + m) % field.p)


def reveal_outcome(field, t, z, Fp, d, B, sv, points):
    """Evaluate a reveal: ("accept", value); ("reject", None) when the
    rejected support forces discarding the intermediary; ("bad", None)
    for an over-degree polynomial, which kills only this reveal; or
    ("wait", None). points maps verifier -> point for those arrived."""
    if len(Fp) > t + 1:
        return ("bad", None)
    accepted = [j for j in sv if j in points
                and reveal_accept(field, t, Fp, d, B, points[j])]
    svm = mask_of(sv)
    if z.zin_mask(svm & ~mask_of(accepted)):
        return ("accept", field.poly_eval(Fp, 0))
    rejected = [j for j in sv if j in points
                and not reveal_accept(field, t, Fp, d, B, points[j])]
    if z.zin_mask(svm & ~mask_of(rejected)):
        return ("reject", None)
    return ("wait", None)


# -- adversarial trial runs, pure algebra for Monte Carlo volume --------------


def forgery_trial(field, t, n, rng):
    """Corrupt intermediary invents F' != F after an honest signing.

    Returns True when any verifier's honest point would pass the
    receiver's rule for the forgery, i.e. F' agrees with F at that
    verifier's alpha. Union probability at most n*t/(|F|-1)."""
    s = field.rand(rng)
    F, _, alphas = auth_sample(field, t, n, s, rng)
    while True:
        Fp = field.rand_poly(t, rng)
        if Fp != F:
            break
    return any(field.poly_eval(Fp, a) == field.poly_eval(F, a) for a in alphas)


def repudiation_trial(field, t, n, rng):
    """Corrupt signer plants doctored points, one challenge guess per
    verifier, trying to get an honest intermediary's reveal rejected.

    A doctored point (v*, m*) slips past the contradiction clause only
    when the intermediary's later challenge d equals the guess baked
    into m*, so the failure event has probability exactly n/(|F|-1)."""
    s = field.rand(rng)
    F, M, alphas = auth_sample(field, t, n, s, rng)
    guesses = field.distinct_nonzero(n, rng)
    d = field.rand_nonzero(rng)
    B = blind_poly(field, d, F, M)
    bad = []
    for a, g in zip(alphas, guesses):
        v = (field.poly_eval(F, a) + 1) % field.p
        if v == 0:
            v = (v + 1) % field.p
        m = (field.poly_eval(B, a) - g * v) % field.p
        bad.append((a, v, m))
    return any(not reveal_accept(field, t, F, d, B, pt) for pt in bad)


# -- engines ------------------------------------------------------------------


class IcpSession:
    def __init__(self):
        self.roles = None        # (signer, intermediary, receiver)
        self.F = self.M = None   # signer's polynomials
        self.alphas = None       # signer: verifier -> alpha
        self.spoints = None      # signer: verifier -> (alpha, v, m)
        self.fm = None           # intermediary's (F, M)
        self.received = 0        # intermediary: bitmask of confirmations
        self.point = None        # this party's verification point
        self.blind = None        # (d, B, sv) from the intermediary's acast
        self.sv_ok = False       # complement of sv lies in Z
        self.verdict = None      # ("ok",) or ("nok", s)
        self.announced = False   # intermediary acasted already
        self.completed = False
        self.icsig = None        # ("poly", F) at I, or ("public", s)
        self.fp = None           # receiver: revealed polynomial
        self.rpoints = {}        # receiver: verifier -> point
        self.reveal_rejected = False
        self.support_pending = False
        self.support_sent = False


class IcpEngine(Engine):
    """One engine per party covering all of signer, intermediary,
    verifier and receiver duty, sessions keyed by sid.

    Output keys: ("auth", sid) -> verdict once the session completed,
    ("rev", sid) -> the value this party accepted as receiver.
    """

    TAGS = ("icp.poly", "icp.point", "icp.received", "icp.reveal", "icp.rpoint")

    def __init__(self, node, field, z, acast, t=None):
        super().__init__(node)
        self.field = field
        self.z = z
        self.acast = acast
        self.t = z.t if t is None else t
        self.sessions = {}
        for tag in self.TAGS:
            node.register(tag, self)

    def _sess(self, sid, roles=None):
        sess = self.sessions.get(sid)
        if sess is None:
            sess = self.sessions[sid] = IcpSession()
        if roles is not None and sess.roles is None:
            sess.roles = roles
            self._subscribe(sid, sess)
        return sess

    def _subscribe(self, sid, sess):
        signer, inter, _ = sess.roles

        def got_blind(payload):
            _roles, d, B, sv = payload
            if sess.blind is None:
                sess.blind = (d, tuple(B), tuple(sv))
                sess.sv_ok = self.z.zin_mask(self.z.full_mask & ~mask_of(sv))
                self._advance(sid, sess)

        def got_verdict(payload):
            if sess.verdict is None:
                sess.verdict = payload[1]
                self._advance(sid, sess)

        self.acast.on_output(f"{sid}/{inter}", got_blind)
        self.acast.on_output(f"{sid}/{signer}", got_verdict)

    # -- signer -----------------------------------------------------------

    def auth_start(self, sid, intermediary, receiver, s):
        me = self.node.party
        if intermediary == me:
            # also keeps the two per-session acast sids distinct
            raise ValueError("signer cannot be its own intermediary")
        roles = (me, intermediary, receiver)
        sess = self._sess(sid, roles)
        n = self.node.sim.n
        F, M, alphas = auth_sample(self.field, self.t, n, s, self.node.rng)
        sess.F, sess.M = F, M
        sess.alphas = {j: alphas[j - 1] for j in self.node.sim.party_ids}
        sess.spoints = {}
        self.node.send(intermediary, sid, "icp.poly", payload=(roles, F, M),
                       elems=2 * (self.t + 1))
        for j in self.node.sim.party_ids:
            a = sess.alphas[j]
            pt = (a, self.field.poly_eval(F, a), self.field.poly_eval(M, a))
            sess.spoints[j] = pt
            self.node.send(j, sid, "icp.point", payload=(roles, pt), elems=3)

    # -- reveal entry points ------------------------------------------------

    def reveal(self, sid):
        """Intermediary pushes its signature to the receiver."""
        sess = self.sessions[sid]
        if sess.icsig is not None and sess.icsig[0] == "poly":
            _, inter, receiver = sess.roles
            self.node.send(receiver, sid, "icp.reveal",
                           payload=(sess.roles, sess.icsig[1]),
                           elems=self.t + 1)

    def reveal_support(self, sid):
        """Verifier ships its point (or a dummy for discarded signers)."""
        sess = self.sessions.get(sid)
        if sess is None or sess.roles is None:
            return
        sess.support_pending = True
        self._flush_support(sid, sess)

    def _flush_support(self, sid, sess):
        if not sess.support_pending or sess.support_sent or sess.blind is None:
            return
        me = self.node.party
        if me not in sess.blind[2]:
            return
        signer, _, receiver = sess.roles
        pt = DUMMY if signer in self.node.ld else sess.point
        if pt is None:
            return
        sess.support_sent = True
        self.node.send(receiver, sid, "icp.rpoint", payload=(sess.roles, pt),
                       elems=0 if pt == DUMMY else 3)

    # -- deliveries ---------------------------------------------------------

    def on(self, node, env):
        roles = env.payload[0]
        sess = self._sess(env.sid, roles)
        signer, inter, receiver = sess.roles
        me = node.party
        if env.tag == "icp.poly":
            if env.src == signer and me == inter and sess.fm is None:
                F, M = env.payload[1], env.payload[2]
                if len(F) <= self.t + 1 and len(M) <= self.t + 1:
                    sess.fm = (tuple(F), tuple(M))
        elif env.tag == "icp.point":
            if env.src == signer and sess.point is None:
                sess.point = tuple(env.payload[1])
                if signer not in node.ld:
                    node.send(inter, env.sid, "icp.received", payload=(roles,))
        elif env.tag == "icp.received":
            if me == inter:
                sess.received |= 1 << (env.src - 1)
        elif env.tag == "icp.reveal":
            if me == receiver and env.src == inter and sess.fp is None:
                sess.fp = tuple(env.payload[1])
        elif env.tag == "icp.rpoint":
            if me == receiver and env.src not in sess.rpoints:
                sess.rpoints[env.src] = env.payload[1]
        self._advance(env.sid, sess)

    # -- state advancement ----------------------------------------------------

    def _advance(self, sid, sess):
        me = self.node.party
        signer, inter, receiver = sess.roles
        # intermediary: announce the blinded polynomial once supported
        if (me == inter and not sess.announced and sess.fm is not None
                and self.z.complement_within_mask(sess.received)):
            sess.announced = True
            sv = parties_of(sess.received)
            d = self.field.rand_nonzero(self.node.rng)
            B = blind_poly(self.field, d, *sess.fm)
            self.acast.start(f"{sid}/{inter}", (sess.roles, d, B, sv),
                             elems=self.t + 2, extra_bytes=len(sv))
        # signer: pass public judgement on the announcement
        if (me == signer and sess.blind is not None and sess.verdict is None
                and sess.spoints is not None):
            d, B, sv = sess.blind
            good = all(j in sess.spoints
                       and point_consistent(self.field, d, B, sess.spoints[j])
                       for j in sv)
            verdict = ("ok",) if good else ("nok", self.field.poly_eval(sess.F, 0))
            sess.verdict = verdict  # suppress re-entry; acast echoes it back
            self.acast.start(f"{sid}/{signer}", (sess.roles, verdict),
                             elems=0 if good else 1)
        # everyone: completion and the verifier-side dispute rule
        if sess.blind is not None and sess.verdict is not None and not sess.completed:
            sess.completed = True
            if sess.verdict[0] == "nok":
                sess.icsig = ("public", sess.verdict[1])
            elif me == inter and sess.fm is not None:
                sess.icsig = ("poly", sess.fm[0])
            if (sess.verdict[0] == "ok" and sess.point is not None
                    and not point_consistent(self.field, sess.blind[0],
                                             sess.blind[1], sess.point)):
                self.node.ld.add(signer)
            self._finish(("auth", sid), sess.verdict)
        if sess.completed:
            self._flush_support(sid, sess)
        # receiver: public signatures settle immediately, polynomials by
        # the point-acceptance rule
        if me == receiver and sess.completed and ("rev", sid) not in self.outputs:
            if sess.icsig is not None and sess.icsig[0] == "public":
                self._finish(("rev", sid), sess.icsig[1])
            elif (sess.fp is not None and not sess.reveal_rejected
                  and inter not in self.node.ld and sess.sv_ok):
                d, B, sv = sess.blind
                state, value = reveal_outcome(self.field, self.t, self.z,
                                              sess.fp, d, B, sv, sess.rpoints)
                if state == "accept":
                    self._finish(("rev", sid), value)
                elif state == "reject":
                    sess.reveal_rejected = True
                    self.node.ld.add(inter)
                elif state == "bad":
                    sess.reveal_rejected = True


# -- one-shot drivers ---------------------------------------------------------


def icp_setup(seed, field, z, corrupt=(), strategy=None):
    from .broadcast import AcastEngine
    from .netsim import Sim
    sim = Sim(seed, n=z.n)
    engines = {}
    for i in sim.party_ids:
        ac = AcastEngine(sim.nodes[i], z)
        engines[i] = IcpEngine(sim.nodes[i], field, z, ac)
    if corrupt:
        sim.set_corruption(corrupt, strategy)
    return sim, engines


def auth_run(sim, engines, sid, signer, intermediary, receiver, s):
    """Drive one signing session to completion; returns per-party verdicts."""
    engines[signer].auth_start(sid, intermediary, receiver, s)
    sim.run()
    return {i: engines[i].outputs.get(("auth", sid)) for i in sim.party_ids}


def reveal_run(sim, engines, sid):
    """After auth, run the reveal; returns the receiver's value (or None)."""
    some = next(s.sessions[sid] for s in engines.values()
                if sid in s.sessions and s.sessions[sid].roles)
    _, inter, receiver = some.roles
    if inter in engines:
        engines[inter].reveal(sid)
    for i in engines:
        engines[i].reveal_support(sid)
    sim.run()
    return engines[receiver].outputs.get(("rev", sid))
