"""Deterministic discrete-event simulation of an asynchronous network.

One step = one delivery. The scheduler is adversarial-looking but provably
fair: when an envelope is enqueued while q messages are pending (itself
included), it reserves a uniformly random free slot within the next D*q
steps. A step delivers its reserved envelope if one exists, otherwise a
random pending one (early delivery never hurts the bound). So the number
of deliveries between send and delivery is < D * q by construction, which
is the concrete stand-in for "arbitrarily but finitely delayed".

Everything is driven by a single seeded RNG per concern (scheduler, each
party, each oracle), so a run is a pure function of (config, seed,
strategy): identical transcripts, identical metrics, byte for byte.

For bounded exhaustive schedule searches the simulator also runs in
choice mode: an explicit list of indices picks the delivery order for the
first len(choices) steps and a seeded RNG finishes the run. Fairness
bookkeeping is off in that mode; the point is to enumerate adversarial
reorderings.
"""

import json
import random
import zlib


class LivelockDetected(Exception):
    """Step budget exhausted: a fairness or protocol bug, not a slow run."""


class Envelope:
    __slots__ = ("seq", "src", "dst", "sid", "tag", "payload", "elems",
                 "nbytes", "slot", "deadline")

    def __init__(self, seq, src, dst, sid, tag, payload, elems, nbytes):
        self.seq = seq
        self.src = src
        self.dst = dst
        self.sid = sid
        self.tag = tag
        self.payload = payload
        self.elems = elems
        self.nbytes = nbytes
        self.slot = -1
        self.deadline = -1

    def __repr__(self):
        return f"Envelope({self.src}->{self.dst} {self.tag} sid={self.sid})"


class Metrics:
    """Per-protocol traffic counters plus named scalar counters.

    The protocol name of an envelope is its tag up to the first dot.
    With detail=True the per-(protocol, sid) split demanded by small
    tests is kept as well; big runs leave it off.
    """

    def __init__(self, detail: bool = False):
        self.by_proto = {}
        self.detail = {} if detail else None
        self.counters = {"fvss_calls": 0, "faba_calls": 0, "facast_calls": 0,
                         "hops": 0, "iterations": 0}

    def count_send(self, proto, sid, elems, nbytes):
        row = self.by_proto.get(proto)
        if row is None:
            row = self.by_proto[proto] = [0, 0, 0]
        row[0] += elems
        row[1] += nbytes
        row[2] += 1
        if self.detail is not None:
            d = self.detail.get((proto, sid))
            if d is None:
                d = self.detail[(proto, sid)] = [0, 0, 0]
            d[0] += elems
            d[1] += nbytes
            d[2] += 1

    def bump(self, name, delta=1):
        self.counters[name] = self.counters.get(name, 0) + delta

    @property
    def field_elems_sent(self):
        return sum(r[0] for r in self.by_proto.values())

    @property
    def bytes_sent(self):
        return sum(r[1] for r in self.by_proto.values())

    @property
    def envelopes_sent(self):
        return sum(r[2] for r in self.by_proto.values())

    def as_dict(self):
        out = {
            "field_elems_sent": self.field_elems_sent,
            "bytes_sent": self.bytes_sent,
            "envelopes": self.envelopes_sent,
            "by_protocol": {k: {"elems": v[0], "bytes": v[1], "envelopes": v[2]}
                            for k, v in sorted(self.by_proto.items())},
        }
        out.update(sorted(self.counters.items()))
        return out


class Node:
    """One party (or oracle). Honest nodes dispatch deliveries to their
    engines by tag; corrupt nodes hand everything to the strategy."""

    __slots__ = ("party", "sim", "rng", "routes", "strategy", "suppress_sends", "ld")

    def __init__(self, party, sim, rng):
        self.party = party
        self.sim = sim
        self.rng = rng
        self.routes = {}
        self.strategy = None
        self.suppress_sends = False
        self.ld = set()  # locally-discarded parties, shared across engines

    def register(self, tag, engine):
        self.routes[tag] = engine

    def deliver(self, env):
        if self.strategy is not None:
            self.strategy.on_deliver(self, env)
            return
        eng = self.routes.get(env.tag)
        if eng is not None:
            eng.on(self, env)
        # unknown tags are silently ignored, like any unexpected message

    def dispatch(self, env):
        """Run the honest handler for env on this node (strategies use this
        to act honest except where they deviate)."""
        eng = self.routes.get(env.tag)
        if eng is not None:
            eng.on(self, env)

    def send(self, dst, sid, tag, payload=None, elems=0, extra_bytes=0):
        if self.suppress_sends:
            return
        self.sim.enqueue(self.party, dst, sid, tag, payload, elems, extra_bytes)


class RunResult:
    __slots__ = ("steps", "stopped", "quiescent")

    def __init__(self, steps, stopped, quiescent):
        self.steps = steps
        self.stopped = stopped
        self.quiescent = quiescent


def _seed_for(seed, name):
    if isinstance(name, int):
        salt = name
    else:
        salt = zlib.crc32(name.encode())
    return (seed * 0x9E3779B97F4A7C15 + salt) % 2**63


class Sim:
    """The event loop. Parties are 1..n; oracles register under string ids."""

    def __init__(self, seed: int, n: int, fairness: int = 4, budget: int = 10**6,
                 record: bool = False, detail_metrics: bool = False, choices=None):
        if fairness < 1:
            raise ValueError("fairness bound must be >= 1")
        self.seed = seed
        self.n = n
        self.party_ids = tuple(range(1, n + 1))
        self.fairness = fairness
        self.budget = budget
        self.sched_rng = random.Random(_seed_for(seed, "sched"))
        self.nodes = {}
        for i in self.party_ids:
            self.nodes[i] = Node(i, self, random.Random(_seed_for(seed, i)))
        self.corrupt = frozenset()
        self.strategy = None
        self.metrics = Metrics(detail=detail_metrics)
        self.record = record
        self.transcript = [] if record else None
        self.steps = 0
        self._seq = 0
        self._pending = []            # envelopes, order = insertion (mutated by swap-remove)
        self._pos = {}                # seq -> index into _pending
        self._reserved = {}           # future step -> envelope
        self.choices = list(choices) if choices is not None else None
        self.branchings = [] if choices is not None else None
        self._proto_cache = {}

    # -- topology ---------------------------------------------------------

    def add_oracle(self, name: str) -> Node:
        node = Node(name, self, random.Random(_seed_for(self.seed, name)))
        self.nodes[name] = node
        return node

    def set_corruption(self, corrupt, strategy):
        """Static corruption: fixed before any delivery."""
        if self.steps or self._pending:
            raise RuntimeError("corruption must be set before the run starts")
        corrupt = frozenset(corrupt)
        for i in corrupt:
            if i not in self.party_ids:
                raise ValueError(f"no such party {i}")
        self.corrupt = corrupt
        self.strategy = strategy
        for i in corrupt:
            self.nodes[i].strategy = strategy
        if strategy is not None:
            strategy.attach(self)

    def honest_ids(self):
        return tuple(i for i in self.party_ids if i not in self.corrupt)

    # -- queue ------------------------------------------------------------

    def enqueue(self, src, dst, sid, tag, payload=None, elems=0, extra_bytes=0):
        if dst not in self.nodes:
            raise ValueError(f"unknown destination {dst}")
        nbytes = 24 + len(sid) + 8 * elems + extra_bytes
        proto = self._proto_cache.get(tag)
        if proto is None:
            proto = tag.partition(".")[0]
            self._proto_cache[tag] = proto
        # metrics row update inlined: this is the hottest call site by far
        m = self.metrics
        row = m.by_proto.get(proto)
        if row is None:
            row = m.by_proto[proto] = [0, 0, 0]
        row[0] += elems
        row[1] += nbytes
        row[2] += 1
        if m.detail is not None:
            d = m.detail.get((proto, sid))
            if d is None:
                d = m.detail[(proto, sid)] = [0, 0, 0]
            d[0] += elems
            d[1] += nbytes
            d[2] += 1
        self._seq += 1
        env = Envelope(self._seq, src, dst, sid, tag, payload, elems, nbytes)
        pending = self._pending
        self._pos[env.seq] = len(pending)
        pending.append(env)
        if self.choices is None:
            # draw a slot uniformly from [steps+1, steps+fairness*q]; the
            # inline getrandbits loop is randint's own rejection sampler,
            # so the bit stream (and hence every schedule) is unchanged
            span = self.fairness * len(pending)
            lo = self.steps + 1
            reserved = self._reserved
            getrandbits = self.sched_rng.getrandbits
            k = span.bit_length()
            slot = -1
            for _ in range(32):
                r = getrandbits(k)
                while r >= span:
                    r = getrandbits(k)
                cand = lo + r
                if cand not in reserved:
                    slot = cand
                    break
            if slot < 0:
                # rejection failed; scan from a random offset (a free slot
                # exists because at most q-1 reservations are outstanding)
                r = getrandbits(k)
                while r >= span:
                    r = getrandbits(k)
                for off in range(span):
                    cand = lo + (r + off) % span
                    if cand not in reserved:
                        slot = cand
                        break
            env.slot = slot
            env.deadline = self.steps + span
            reserved[slot] = env

    def inject(self, src, dst, sid, tag, payload=None, elems=0, extra_bytes=0):
        """Adversarial injection; only corrupt parties (or oracles) may be src."""
        if src in self.party_ids and src not in self.corrupt:
            raise ValueError(f"refusing to inject from honest party {src}")
        self.enqueue(src, dst, sid, tag, payload, elems, extra_bytes)

    def _remove_pending(self, env):
        idx = self._pos.pop(env.seq)
        last = self._pending.pop()
        if last is not env:
            self._pending[idx] = last
            self._pos[last.seq] = idx

    # -- the loop ---------------------------------------------------------

    def run(self, stop=None, budget=None) -> RunResult:
        budget = self.budget if budget is None else budget
        pending = self._pending
        reserved = self._reserved
        nodes = self.nodes
        rng = self.sched_rng
        getrandbits = rng.getrandbits
        stopped = False
        while pending:
            if self.steps >= budget:
                raise LivelockDetected(f"no stop after {budget} deliveries")
            self.steps += 1
            step = self.steps
            if self.choices is not None:
                k = step - 1
                if k < len(self.choices):
                    self.branchings.append(len(pending))
                    env = pending[self.choices[k] % len(pending)]
                elif k == len(self.choices):
                    self.branchings.append(len(pending))
                    env = pending[rng.randrange(len(pending))]
                else:
                    env = pending[rng.randrange(len(pending))]
                self._remove_pending(env)
            else:
                env = reserved.pop(step, None)
                if env is None:
                    q = len(pending)
                    k = q.bit_length()
                    r = getrandbits(k)
                    while r >= q:  # randrange's sampler, inlined
                        r = getrandbits(k)
                    env = pending[r]
                    del reserved[env.slot]
                self._remove_pending(env)
                # fairness bound, by construction; cheap enough to keep on
                if step > env.deadline:
                    raise AssertionError("fairness violated (scheduler bug)")
            if self.record:
                self.transcript.append((step, env.src, env.dst, env.sid, env.tag,
                                        env.nbytes, env.payload, env.elems))
            node = nodes[env.dst]
            if node.strategy is None:
                eng = node.routes.get(env.tag)
                if eng is not None:
                    eng.on(node, env)
            else:
                node.strategy.on_deliver(node, env)
            if stop is not None and stop():
                stopped = True
                break
        return RunResult(self.steps, stopped, not pending)

    # -- transcript export --------------------------------------------------

    def transcript_ndjson(self, fp):
        """Newline-delimited JSON, one record per delivery."""
        if self.transcript is None:
            raise RuntimeError("run the sim with record=True to get a transcript")
        for (step, src, dst, sid, tag, nbytes, _payload, _elems) in self.transcript:
            fp.write(json.dumps(
                {"step": step, "src": src, "dst": dst, "sid": sid,
                 "tag": tag, "bytes": nbytes},
                separators=(",", ":")) + "\n")


class Engine:
    """Base for per-protocol state machines. One instance per node per
    protocol family; sessions inside are keyed by sid and auto-created."""

    def __init__(self, node: Node):
        self.node = node
        self.outputs = {}
        self._waiters = {}

    def on(self, node, env):
        raise NotImplementedError

    def on_output(self, sid, cb):
        if sid in self.outputs:
            cb(self.outputs[sid])
        else:
            self._waiters.setdefault(sid, []).append(cb)

    def _finish(self, sid, value):
        if sid in self.outputs:
            return
        self.outputs[sid] = value
        for cb in self._waiters.pop(sid, ()):  # fire-once
            cb(value)


def explore_schedules(build, check, depth: int = 5, width: int = 6,
                      max_schedules: int = 2000, seed: int = 0):
    """Bounded exhaustive search over delivery orders.

    build(choices) must construct a fresh Sim in choice mode, start the
    protocol, run it, and return the sim (or anything check accepts).
    check(result) raises or returns False on a violation. The first
    `depth` delivery steps are enumerated exhaustively up to `width`
    alternatives per step; the tail of each schedule is seeded-random.
    Returns the number of schedules exercised.
    """
    ran = 0
    stack = [[]]
    while stack and ran < max_schedules:
        prefix = stack.pop()
        sim = build(list(prefix))
        ran += 1
        if check(sim) is False:
            raise AssertionError(f"schedule violation for prefix {prefix}")
        if len(prefix) < depth:
            b = sim.branchings[len(prefix)] if len(sim.branchings) > len(prefix) else 0
            for c in range(min(b, width) - 1, 0, -1):
                stack.append(prefix + [c])
            if b > 0:
                stack.append(prefix + [0])
    return ran
