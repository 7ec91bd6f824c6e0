"""Full circuit evaluation on top of the building blocks.

One engine per party drives a single run. Preprocessing pulls one
random product triple per multiplication gate from a triples layer,
either an ideal node or a real pipeline. The input phase has every
party deal a sum-sharing of its input, and one agreement instance per
dealer picks the common set of input providers; the inputs of parties
left out are fixed to a public zero sharing. Gates then run in listed
order: additions are local, a multiplication opens d = x - a and
e = y - b publicly and reassembles the product from its triple, and
the last wire is opened publicly as the result.

Parties move through these stages at their own pace, so a party that
knows the output cannot simply stop; others may still need it. The
closing round: announce the output when known, echo once a sender set
that no structure element contains agrees on one value, terminate once
the senders of one value leave out at most a potentially-corrupt set.

fampc_oracle is the reference answer runs are checked against: inputs
of parties outside the provider set are zeroed and the circuit is
evaluated in the clear. A corrupt dealer driven by a strategy can
replace its input deal's share vector through the
``ampc_input(party, sid, shares)`` hook (None withholds the deal).
"""

from .netsim import Engine
from .sharing import FullSharing, ShareVector, default_share, lin_combine


class Circuit:
    """Straight-line arithmetic circuit over one input per party.

    Wires 0..n-1 carry the party inputs; each gate ("add"|"mul", i, j)
    appends one wire combining two earlier ones; the last wire is the
    public output. With no gates the output is party n's input.
    """

    __slots__ = ("n", "gates")

    def __init__(self, n, gates):
        self.n = n
        gates = tuple((op, i, j) for op, i, j in gates)
        for k, (op, i, j) in enumerate(gates):
            if op not in ("add", "mul"):
                raise ValueError(f"unknown gate kind {op!r}")
            if not (0 <= i < n + k and 0 <= j < n + k):
                raise ValueError(f"gate {k} reads a wire not yet defined")
        self.gates = gates

    @property
    def mul_count(self):
        return sum(1 for g in self.gates if g[0] == "mul")

    def eval(self, field, inputs):
        """Plaintext evaluation; inputs is one value per party."""
        if len(inputs) != self.n:
            raise ValueError("need exactly one input per party")
        wires = [v % field.p for v in inputs]
        for op, i, j in self.gates:
            combine = field.add if op == "add" else field.mul
            wires.append(combine(wires[i], wires[j]))
        return wires[-1]

    @classmethod
    def random(cls, n, rng, max_gates=12, max_muls=5):
        """Random small circuit staying within the given size caps."""
        count = rng.randint(1, max_gates)
        gates = []
        muls = 0
        for k in range(count):
            op = "add"
            if muls < max_muls and rng.random() < 0.4:
                op = "mul"
                muls += 1
            gates.append((op, rng.randrange(n + k), rng.randrange(n + k)))
        return cls(n, gates)


def fampc_oracle(field, z, circuit, inputs, cs):
    """Reference output: zero the inputs outside cs, evaluate in the clear.

    cs must leave out at most one potentially-corrupt set of parties;
    anything else is not a legal provider set and is refused.
    """
    mask = 0
    for p in cs:
        mask |= 1 << (p - 1)
    if not z.complement_within_mask(mask):
        raise ValueError(f"provider set {sorted(cs)} leaves out too many")
    xs = [inputs[k] if (k + 1) in cs else 0 for k in range(circuit.n)]
    return circuit.eval(field, xs)


# -- preprocessing layers --------------------------------------------------------


class FtriplesOracle(Engine):
    """Ideal preprocessing node.

    Once the parties asking under a sid leave out at most one
    potentially-corrupt set, samples the requested number of random
    product triples and hands every party its share bundles.
    """

    def __init__(self, node, field, spec, z):
        super().__init__(node)
        self.field = field
        self.spec = spec
        self.z = z
        self.sessions = {}    # sid -> [asked_mask, count, served]
        node.register("ftriples.req", self)

    def on(self, node, env):
        if env.src not in node.sim.party_ids:
            return
        row = self.sessions.setdefault(env.sid, [0, None, False])
        if row[2]:
            return
        if row[1] is None:
            row[1] = env.payload
        elif row[1] != env.payload:
            return
        row[0] |= 1 << (env.src - 1)
        if not self.z.complement_within_mask(row[0]):
            return
        row[2] = True
        node.sim.metrics.bump("ftriples_calls")
        rng = node.rng
        rows = []
        for _ in range(row[1]):
            a = self.field.rand(rng)
            b = self.field.rand(rng)
            rows.append(tuple(
                FullSharing.random(self.field, self.spec.h, v, rng)
                for v in (a, b, self.field.mul(a, b))))
        for p in node.sim.party_ids:
            mine = self.spec.groups_of_party[p]
            bundles = [tuple({q: f.values[q - 1] for q in mine} for f in row3)
                       for row3 in rows]
            node.send(p, env.sid, "ftriples.out", payload=bundles,
                      elems=3 * row[1] * len(mine))


class FtriplesClient(Engine):
    def __init__(self, node):
        super().__init__(node)
        node.register("ftriples.out", self)

    def on(self, node, env):
        self._finish(env.sid, env.payload)


class OracleTriplesLayer:
    """Preprocessing via the ideal node; callbacks get ShareVector rows."""

    kind = "oracle"

    def __init__(self, sim, field, spec, z):
        self.spec = spec
        FtriplesOracle(sim.add_oracle("ftriples"), field, spec, z)
        self.clients = {i: FtriplesClient(sim.nodes[i]) for i in sim.party_ids}

    def request(self, party, sid, count):
        self.clients[party].node.send("ftriples", sid, "ftriples.req",
                                      payload=count, extra_bytes=8)

    def on_triples(self, party, sid, cb):
        spec = self.spec
        self.clients[party].on_output(sid, lambda rows: cb(
            [tuple(ShareVector(spec, party, dict(b)) for b in row3)
             for row3 in rows]))


class ComposedTriplesLayer:
    """Preprocessing via a real triple pipeline, one engine per party."""

    kind = "composed"

    def __init__(self, engines):
        self.engines = engines

    def request(self, party, sid, count):
        self.engines[party].triples_start(sid, count)

    def on_triples(self, party, sid, cb):
        self.engines[party].on_output(("triples", sid), cb)


# -- per-party driver ------------------------------------------------------------


class AmpcEngine(Engine):
    """One party's side of a complete run.

    Keyed outputs: ("cs",) when the provider set is fixed, ("y",) when
    the output wire opens locally, ("done",) when the closing rule
    fires; `result` and `terminated` mirror the last one.
    """

    def __init__(self, node, field, spec, z, circuit, vss, aba, rec, triples):
        super().__init__(node)
        self.field = field
        self.spec = spec
        self.z = z
        self.circuit = circuit
        self.vss = vss
        self.aba = aba
        self.rec = rec
        self.triples = triples
        self._mul_index = {}
        ell = 0
        for k, g in enumerate(circuit.gates):
            if g[0] == "mul":
                ell += 1
                self._mul_index[k] = ell
        self.bank = None
        self.consumed = set()
        self.input_value = None
        self.input_shares = {}   # dealer -> ShareVector
        self.voted = set()
        self.decided = {}
        self.cs = None
        self.cs_set = frozenset()
        self.wires = []
        self.gate_idx = 0
        self.opens = {}          # mul index -> {"d": value, "e": value}
        self.out_started = False
        self.y = None            # output as locally reconstructed
        self.ready = {}          # value -> set of senders
        self.ready_sent = False
        self.result = None       # output as agreed by the closing rule
        self.terminated = False
        node.register("ampc.ready", self)

    def start(self, x):
        """Run the whole computation with x as this party's input."""
        self.input_value = x % self.field.p
        count = self.circuit.mul_count
        if count == 0:
            self._bank_cb([])
            return
        me = self.node.party
        self.triples.on_triples(me, "prep/triples", self._bank_cb)
        self.triples.request(me, "prep/triples", count)

    # -- input phase ---------------------------------------------------------------

    def _bank_cb(self, rows):
        self.bank = list(rows)
        node = self.node
        me = node.party
        for j in node.sim.party_ids:
            self.vss.on_share(me, f"inp/{j}", self._input_cb(j))
            self.aba.on_output(f"inp/{j}", self._input_decide_cb(j))
        shares = list(FullSharing.random(self.field, self.spec.h,
                                         self.input_value, node.rng).values)
        if me in node.sim.corrupt and node.sim.strategy is not None:
            fn = getattr(node.sim.strategy, "ampc_input", None)
            if fn is not None:
                shares = fn(me, f"inp/{me}", shares)
        if shares is not None:
            self.vss.share(me, f"inp/{me}", shares)
        self._input_poke()

    def _input_cb(self, j):
        def cb(sv):
            self.input_shares[j] = sv
            self._input_poke()
            self._maybe_eval()
        return cb

    def _input_decide_cb(self, j):
        def cb(out):
            self.decided[j] = out[1]
            if len(self.decided) == len(self.node.sim.party_ids):
                cs = tuple(i for i in self.node.sim.party_ids
                           if self.decided[i] == 1)
                self.cs = cs
                self.cs_set = frozenset(cs)
                self._finish(("cs",), cs)
            self._input_poke()
            self._maybe_eval()
        return cb

    def _input_poke(self):
        ids = self.node.sim.party_ids
        mask = 0
        for j in ids:
            if self.decided.get(j) == 1:
                mask |= 1 << (j - 1)
        # once the accepted dealers already form a qualifying set, the
        # rest need not be waited for
        fill = self.z.complement_within_mask(mask)
        for j in ids:
            if j in self.voted or j in self.decided:
                continue
            if j in self.input_shares:
                self.voted.add(j)
                self.aba.vote(f"inp/{j}", 1)
            elif fill:
                self.voted.add(j)
                self.aba.vote(f"inp/{j}", 0)

    # -- circuit evaluation ----------------------------------------------------------

    def _maybe_eval(self):
        if self.wires or self.cs is None:
            return
        if any(j not in self.input_shares for j in self.cs):
            return
        me = self.node.party
        zero = default_share(0, self.spec.h).vector_for(self.spec, me)
        for j in self.node.sim.party_ids:
            self.wires.append(self.input_shares[j] if j in self.cs_set
                              else zero)
        self._advance()

    def _advance(self):
        gates = self.circuit.gates
        while self.gate_idx < len(gates):
            op, i, j = gates[self.gate_idx]
            if op == "add":
                self.wires.append(lin_combine(self.field, (1, 1),
                                              (self.wires[i], self.wires[j])))
                self.gate_idx += 1
                continue
            ell = self._mul_index[self.gate_idx]
            if ell not in self.opens:
                self.beaver_mul(ell, self.wires[i], self.wires[j])
            return    # resumes from the opening callbacks
        if not self.out_started:
            self.out_started = True
            self.rec.on_output("out/y", self._y_cb)
            self.rec.start_rec("out/y", self.wires[-1])

    def beaver_mul(self, ell, wx, wy):
        """Burn triple ell to multiply two held sharings.

        The only traffic is the two public openings; the product sharing
        itself is assembled locally once both land.
        """
        if ell in self.consumed:
            raise ValueError(f"triple {ell} already consumed")
        self.consumed.add(ell)
        a, b, _ = self.bank[ell - 1]
        self.opens[ell] = {}
        for name, w, t in (("d", wx, a), ("e", wy, b)):
            sid = f"mul/{ell}/{name}"
            self.rec.on_output(sid, self._open_cb(ell, name))
            self.rec.start_rec(sid, lin_combine(self.field, (1, -1), (w, t)))

    def _open_cb(self, ell, name):
        def cb(v):
            got = self.opens[ell]
            got[name] = v
            if len(got) < 2:
                return
            d, e = got["d"], got["e"]
            a, b, c = self.bank[ell - 1]
            z = lin_combine(self.field, (d, e, 1), (b, a, c))
            self.wires.append(self._add_public(z, self.field.mul(d, e)))
            self.gate_idx += 1
            self._advance()
        return cb

    def _add_public(self, sv, value):
        # public constants ride on the first group's share, the same rule
        # the zero default uses, so parties agree without communication
        if 1 not in sv.shares:
            return sv
        shares = dict(sv.shares)
        shares[1] = self.field.add(shares[1], value)
        return ShareVector(self.spec, sv.owner, shares)

    # -- closing round ---------------------------------------------------------------

    def _y_cb(self, v):
        self.y = v
        self._finish(("y",), v)
        self._send_ready(v)

    def _send_ready(self, y):
        if self.ready_sent:
            return
        self.ready_sent = True
        for p in self.node.sim.party_ids:
            self.node.send(p, "term/ready", "ampc.ready", payload=y, elems=1)

    def on(self, node, env):
        if env.src not in node.sim.party_ids:
            return
        self.ready.setdefault(env.payload, set()).add(env.src)
        self._ready_poke(env.payload)

    def _ready_poke(self, y):
        mask = 0
        for p in self.ready[y]:
            mask |= 1 << (p - 1)
        # a sender set no structure element contains has an honest member,
        # so y is safe to repeat
        if not self.z.zin_mask(mask):
            self._send_ready(y)
        if not self.terminated and self.z.complement_within_mask(mask):
            self.terminated = True
            self.result = y
            self._finish(("done",), y)


def run_record(sim, engines):
    """JSON-ready summary of one finished run."""
    honest = [engines[i] for i in sim.honest_ids() if i in engines]
    ys = {e.result for e in honest if e.terminated}
    css = {e.cs for e in honest if e.cs is not None}
    return {
        "y": ys.pop() if len(ys) == 1 else None,
        "CS": sorted(css.pop()) if len(css) == 1 else None,
        "metrics": sim.metrics.as_dict(),
        "terminated_parties": sorted(
            i for i in sim.party_ids
            if i in engines and engines[i].terminated),
        "seed": sim.seed,
    }
