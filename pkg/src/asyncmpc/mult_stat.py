"""Triple generation with statistical security.

Where the perfect pipeline buys certainty with one optimistic run per
structure set, this one runs the summand-claiming loop once and checks
the result probabilistically.  A basic multiplication is the same hop
loop as an optimistic run, except that eligibility only excludes the
globally discarded parties, and the output keeps every volunteer's
component sharing alongside the total.  Correctness is then probed with
a random challenge: next to c = a*b the parties compute a second product
c' = a*b' and publicly open d = (r*b + b')*a - r*c - c'.  Honest runs
give d = 0, and a cheated product survives only when r lands on the one
field element masking it, so a lie slips through with probability 1/|F|.
The challenge stays secret-shared until both product bundles are locally
complete; opening it earlier would let a cheater pick its offsets to
cancel.

A nonzero probe burns the iteration's inputs for evidence: every input
share and every volunteer's component is opened, each component is
recomputed from the opened shares, and every mismatching volunteer joins
the global discard set.  The outer loop retries with fresh randoms and
the grown discard set.  Each failure names at least one fresh corrupt
party, so n iterations always suffice.

Corrupt parties driven by a delegating strategy can rewrite the summand
sums they share through the ``stat_summand(party, sid, value)`` hook
(returning None withholds the deal).  The candidate deals of the random
generation stage have no hook: any value there is a legitimate input.
"""

from collections import namedtuple

from .mult_perfect import (IterationBudgetExceeded, TripleEngineBase,
                           all_summand_pairs, summand_pairs_of)
from .sharing import lin_combine


# -- per-session state ---------------------------------------------------------


class _BasicRun:
    """One basic multiplication; the batch shares a single selection loop."""

    __slots__ = ("sid", "key", "gd", "pairs", "m", "remaining", "avail",
                 "selected", "sel_set", "claimed", "hop", "arrived",
                 "decided", "voted", "one", "comp_hop", "sums", "loop_done",
                 "done")

    def __init__(self, sid, key, gd, pairs, h):
        self.sid = sid
        self.key = key
        self.gd = frozenset(gd)
        self.pairs = pairs       # [(ShareVector a, ShareVector b)] per element
        self.m = len(pairs)
        self.remaining = set(all_summand_pairs(h))
        self.avail = {}          # party -> set of still-claimable pairs
        self.selected = []       # claim order
        self.sel_set = set()
        self.claimed = {}        # party -> frozen pair set at selection
        self.hop = 1
        self.arrived = {}        # (hop, j) -> [ShareVector or None] * m
        self.decided = {}        # (hop, j) -> bit
        self.voted = set()       # (hop, j)
        self.one = set()         # hops with a 1-decision seen
        self.comp_hop = {}       # selected party -> hop it was chosen in
        self.sums = None         # [c] per batch element, once done
        self.loop_done = False
        self.done = False

    def components(self, j):
        """Sharings of the selected party's summand sum, one per element."""
        return self.arrived[(self.comp_hop[j], j)]


class _CheckState:
    """One generate-multiply-probe iteration, possibly over a batch."""

    __slots__ = ("sid", "key", "gd", "m", "cand", "voted", "decided", "cs",
                 "combined", "vecs", "challenge", "runs", "r_value", "e_open",
                 "d_open", "flag", "bad", "comp_open", "share_open",
                 "evaluated", "new_gd", "done")

    def __init__(self, sid, key, gd, m):
        self.sid = sid
        self.key = key
        self.gd = frozenset(gd)
        self.m = m
        self.cand = {}           # (dealer, kind, element) -> ShareVector
        self.voted = set()
        self.decided = {}
        self.cs = None
        self.combined = False
        self.vecs = {}           # kind -> [ShareVector] * m, summed over cs
        self.challenge = None
        self.runs = {}           # 1: products a*b, 2: products a*b'
        self.r_value = None
        self.e_open = [None] * m
        self.d_open = [None] * m
        self.flag = None
        self.bad = None          # elements whose probe came out nonzero
        self.comp_open = {}      # (side, element, party) -> opened component
        self.share_open = {}     # (kind, element, group) -> opened share
        self.evaluated = set()
        self.new_gd = set()
        self.done = False


class _StatSession:
    __slots__ = ("sid", "key", "m", "gd", "iter_no", "done")

    def __init__(self, sid, key, m):
        self.sid = sid
        self.key = key
        self.m = m
        self.gd = set()
        self.iter_no = 0
        self.done = False


# -- engine --------------------------------------------------------------------


class StatMultEngine(TripleEngineBase):
    """Per-party driver for the statistically-secure triple pipeline.

    Outputs land under ("basic", sid) for one basic multiplication (the
    finished _BasicRun), ("rmci", sid) for one checked iteration, either
    ("ok", [(a, b, c) triples]) or ("fail", fresh discards), and
    ("triples", sid) for the retrying wrapper.
    """

    def __init__(self, node, field, spec, z, vss, aba, rec):
        super().__init__(node, field, spec, z, vss, aba, rec)
        self.basics = {}
        self.checks = {}
        self.stats = {}

    # -- basic multiplication ----------------------------------------------------

    def basicmult_start(self, sid, pairs, gd=frozenset()):
        """Multiply each ([a], [b]) in pairs under one claiming loop.

        gd lists the parties barred from volunteering.  The finished run
        lands under ("basic", sid) with every component kept.
        """
        run = _BasicRun(sid, ("basic", sid), gd, list(pairs), self.spec.h)
        self.basics[sid] = run
        for j in self.node.sim.party_ids:
            run.avail[j] = summand_pairs_of(self.spec, j)
        self._bm_hop(run)
        return run

    def _bm_vss_sid(self, run, hop, j, m):
        return f"{run.sid}/{hop}/{j}/{m}"

    def _bm_aba_sid(self, run, hop, j):
        return f"{run.sid}/{hop}/{j}"

    def _bm_sharer(self, run, j):
        return j not in run.gd and j not in run.sel_set

    def _bm_hop(self, run):
        hop = run.hop
        me = self.node.party
        for j in self.node.sim.party_ids:
            self.aba.on_output(self._bm_aba_sid(run, hop, j),
                               self._bm_decide_cb(run, hop, j))
            if not self._bm_sharer(run, j):
                continue
            run.arrived[(hop, j)] = [None] * run.m
            for m in range(run.m):
                self.vss.on_share(me, self._bm_vss_sid(run, hop, j, m),
                                  self._bm_vss_cb(run, hop, j, m))
        if self._bm_sharer(run, me):
            for m in range(run.m):
                a, b = run.pairs[m]
                total = self.field.sum(self.field.mul(a[p], b[q])
                                       for p, q in run.avail[me])
                self._deal(self._bm_vss_sid(run, hop, me, m), total,
                           "stat_summand")
        self._bm_poke(run)

    def _bm_vss_cb(self, run, hop, j, m):
        def cb(sv):
            run.arrived[(hop, j)][m] = sv
            self._bm_poke(run)
            self._bm_try_finish(run)
        return cb

    def _bm_decide_cb(self, run, hop, j):
        def cb(out):
            run.decided[(hop, j)] = out[1]
            if out[1] == 1:
                run.one.add(hop)
            n = len(self.node.sim.party_ids)
            if hop == run.hop and len(run.decided) >= n * hop:
                self._bm_select(run)
            else:
                self._bm_poke(run)
        return cb

    def _bm_poke(self, run):
        if run.loop_done:
            return
        hop = run.hop
        for j in self.node.sim.party_ids:
            hj = (hop, j)
            if hj in run.voted or hj in run.decided:
                continue
            got = run.arrived.get(hj)
            if got is not None and all(v is not None for v in got):
                self._vote(self._bm_aba_sid(run, hop, j), 1, run.voted, hj)
            elif hop in run.one:
                # fill only once somebody was accepted, so a hop can never
                # end with every agreement deciding zero
                self._vote(self._bm_aba_sid(run, hop, j), 0, run.voted, hj)

    def _bm_select(self, run):
        hop = run.hop
        ones = [j for j in self.node.sim.party_ids
                if run.decided.get((hop, j)) == 1]
        j = min(ones)
        run.selected.append(j)
        run.sel_set.add(j)
        run.comp_hop[j] = hop
        take = frozenset(run.avail[j])
        run.claimed[j] = take
        run.remaining -= take
        for k in run.avail:
            run.avail[k] -= take
        if self._lead():
            self.node.sim.metrics.bump("hops")
        if run.remaining:
            run.hop += 1
            self._bm_hop(run)
        else:
            run.loop_done = True
            self._bm_try_finish(run)

    def _bm_try_finish(self, run):
        if run.done or not run.loop_done:
            return
        comps = []
        for j in run.selected:
            got = run.components(j)
            if any(v is None for v in got):
                return
            comps.append(got)
        # parties never selected hold the all-zero default sharing, which
        # contributes nothing to the sum
        ones = (1,) * len(comps)
        run.sums = [lin_combine(self.field, ones, [c[m] for c in comps])
                    for m in range(run.m)]
        run.done = True
        self._finish(run.key, run)

    # -- checked multiplication --------------------------------------------------

    def randmultci_start(self, sid, m, gd=frozenset()):
        """One generate-multiply-probe iteration over m random tuples.

        Finishes under ("rmci", sid) with ("ok", [(a, b, c)] * m) when
        every probe value is zero, else ("fail", fresh_discards).
        """
        st = _CheckState(sid, ("rmci", sid), gd, m)
        self.checks[sid] = st
        if self._lead():
            self.node.sim.metrics.bump("iterations")
        me = self.node.party
        for j in self.node.sim.party_ids:
            for kind, ell in self._rm_kinds(m):
                self.vss.on_share(me, self._rm_cand_sid(st, j, kind, ell),
                                  self._rm_cand_cb(st, j, kind, ell))
            self.aba.on_output(f"{sid}/rnd/{j}", self._rm_decide_cb(st, j))
        for kind, ell in self._rm_kinds(m):
            self._deal(self._rm_cand_sid(st, me, kind, ell),
                       self.field.rand(self.node.rng))
        self._rm_poke(st)
        return st

    @staticmethod
    def _rm_kinds(m):
        # three tuple members per element plus the one shared challenge
        for ell in range(m):
            for kind in ("a", "b", "p"):
                yield kind, ell
        yield "r", 0

    def _rm_cand_sid(self, st, j, kind, ell):
        return f"{st.sid}/rnd/{j}/{kind}/{ell}"

    def _rm_cand_cb(self, st, j, kind, ell):
        def cb(sv):
            st.cand[(j, kind, ell)] = sv
            self._rm_poke(st)
        return cb

    def _rm_decide_cb(self, st, j):
        def cb(out):
            st.decided[j] = out[1]
            ids = self.node.sim.party_ids
            if len(st.decided) == len(ids):
                st.cs = [i for i in ids if st.decided[i] == 1]
            self._rm_poke(st)
        return cb

    def _rm_have_all(self, st, j):
        return all((j, kind, ell) in st.cand for kind, ell in self._rm_kinds(st.m))

    def _rm_poke(self, st):
        ids = self.node.sim.party_ids
        mask = 0
        for j in ids:
            if st.decided.get(j) == 1:
                mask |= 1 << (j - 1)
        # once the accepted dealers already form a qualifying set, the
        # rest need not be waited for
        fill = self.z.complement_within_mask(mask)
        for j in ids:
            if j in st.voted or j in st.decided:
                continue
            if self._rm_have_all(st, j):
                self._vote(f"{st.sid}/rnd/{j}", 1, st.voted, j)
            elif fill:
                self._vote(f"{st.sid}/rnd/{j}", 0, st.voted, j)
        if (st.cs is not None and not st.combined
                and all(self._rm_have_all(st, j) for j in st.cs)):
            st.combined = True
            self._rm_products(st)

    def _rm_products(self, st):
        ones = (1,) * len(st.cs)
        for kind in ("a", "b", "p"):
            st.vecs[kind] = [
                lin_combine(self.field, ones,
                            [st.cand[(j, kind, ell)] for j in st.cs])
                for ell in range(st.m)]
        st.challenge = lin_combine(self.field, ones,
                                   [st.cand[(j, "r", 0)] for j in st.cs])
        for side, kind in ((1, "b"), (2, "p")):
            bsid = f"{st.sid}/bm/{side}"
            self.on_output(("basic", bsid), self._rm_run_cb(st))
            st.runs[side] = self.basicmult_start(
                bsid, list(zip(st.vecs["a"], st.vecs[kind])), st.gd)

    def _rm_run_cb(self, st):
        def cb(_run):
            # the challenge may be opened only once both product bundles
            # are locally complete; any earlier and a cheater could pick
            # offsets the probe cannot see
            if all(s in st.runs and st.runs[s].done for s in (1, 2)):
                rsid = f"{st.sid}/opn/r"
                self.rec.on_output(rsid, self._rm_r_cb(st))
                self.rec.start_rec(rsid, st.challenge)
        return cb

    def _rm_r_cb(self, st):
        def cb(v):
            st.r_value = v
            for ell in range(st.m):
                esid = f"{st.sid}/opn/e/{ell}"
                self.rec.on_output(esid, self._rm_e_cb(st, ell))
                self.rec.start_rec(esid, lin_combine(
                    self.field, (v, 1),
                    (st.vecs["b"][ell], st.vecs["p"][ell])))
        return cb

    def _rm_e_cb(self, st, ell):
        def cb(v):
            st.e_open[ell] = v
            dsid = f"{st.sid}/opn/d/{ell}"
            self.rec.on_output(dsid, self._rm_d_cb(st, ell))
            self.rec.start_rec(dsid, lin_combine(
                self.field, (v, -st.r_value, -1),
                (st.vecs["a"][ell], st.runs[1].sums[ell],
                 st.runs[2].sums[ell])))
        return cb

    def _rm_d_cb(self, st, ell):
        def cb(v):
            st.d_open[ell] = v
            if st.flag is not None or any(x is None for x in st.d_open):
                return
            bad = [k for k in range(st.m) if st.d_open[k] != 0]
            if not bad:
                st.flag = 0
                st.done = True
                self._finish(st.key, ("ok", [
                    (st.vecs["a"][k], st.vecs["b"][k], st.runs[1].sums[k])
                    for k in range(st.m)]))
                return
            st.flag = 1
            st.bad = bad
            self._rm_fail(st)
        return cb

    def _rm_fail(self, st):
        """Open everything the failed elements touched and name cheaters."""
        for ell in st.bad:
            for kind in ("a", "b", "p"):
                rsid = f"{st.sid}/opn/sh/{kind}/{ell}"
                sv = st.vecs[kind][ell]
                for g in self.spec.qs():
                    self.rec.on_output((rsid, g),
                                       self._rm_share_cb(st, kind, ell, g))
                    if g in sv.shares:
                        self.rec.start_share(rsid, g, sv[g])
            for side in (1, 2):
                run = st.runs[side]
                for j in run.selected:
                    rsid = f"{st.sid}/opn/cm/{side}/{ell}/{j}"
                    self.rec.on_output(rsid,
                                       self._rm_comp_cb(st, side, ell, j))
                    self.rec.start_rec(rsid, run.components(j)[ell])

    def _rm_share_cb(self, st, kind, ell, g):
        def cb(v):
            st.share_open[(kind, ell, g)] = v
            self._rm_fail_eval(st)
        return cb

    def _rm_comp_cb(self, st, side, ell, j):
        def cb(v):
            st.comp_open[(side, ell, j)] = v
            self._rm_fail_eval(st)
        return cb

    def _rm_opened_all(self, st, ell):
        return (all((kind, ell, g) in st.share_open
                    for kind in ("a", "b", "p") for g in self.spec.qs())
                and all((side, ell, j) in st.comp_open
                        for side in (1, 2)
                        for j in st.runs[side].selected))

    def _rm_fail_eval(self, st):
        r = st.r_value
        for ell in st.bad:
            if ell in st.evaluated or not self._rm_opened_all(st, ell):
                continue
            st.evaluated.add(ell)
            named = {j for side in (1, 2) for j in st.runs[side].selected}
            for j in named:
                # a volunteer unselected on one side contributed the
                # default zero there and claimed nothing
                got = self.field.add(
                    self.field.mul(r, st.comp_open.get((1, ell, j), 0)),
                    st.comp_open.get((2, ell, j), 0))
                want = 0
                for side, kind, coef in ((1, "b", r), (2, "p", 1)):
                    for p, q in st.runs[side].claimed.get(j, ()):
                        term = self.field.mul(
                            st.share_open[("a", ell, p)],
                            st.share_open[(kind, ell, q)])
                        want = self.field.add(want,
                                              self.field.mul(coef, term))
                if got != want:
                    st.new_gd.add(j)
        if len(st.evaluated) == len(st.bad) and not st.done:
            st.done = True
            self._finish(st.key, ("fail", frozenset(st.new_gd)))

    # -- retrying wrapper ---------------------------------------------------------

    def stattriples_start(self, sid, count):
        """Produce count random triples; finishes under ("triples", sid)."""
        ss = _StatSession(sid, ("triples", sid), count)
        self.stats[sid] = ss
        self._st_next(ss)
        return ss

    def _st_next(self, ss):
        ss.iter_no += 1
        if ss.iter_no > self.spec.n:
            raise IterationBudgetExceeded(
                f"{ss.sid}: iteration {ss.iter_no} exceeds budget {self.spec.n}")
        rsid = f"{ss.sid}/{ss.iter_no}"
        self.on_output(("rmci", rsid), self._st_cb(ss))
        self.randmultci_start(rsid, ss.m, frozenset(ss.gd))

    def _st_cb(self, ss):
        def cb(out):
            verdict, payload = out
            if verdict == "ok":
                ss.done = True
                self._finish(ss.key, payload)
            else:
                ss.gd |= payload
                self._st_next(ss)
        return cb

    # both pipelines answer to the same preprocessing entry point
    triples_start = stattriples_start


# -- plain-algebra twin ---------------------------------------------------------


CheckTrial = namedtuple("CheckTrial", "ok caught d c")


def randmultci_trial(field, spec, rng, corrupt=frozenset(), offset=0,
                     offset2=0, values=None):
    """One probe iteration in plain algebra, no network.

    Mirrors the engine's arithmetic for Monte Carlo bound estimation.
    Corrupt parties claim first (the scheduling most favorable to them)
    and pad their shared sums by offset in the first product and offset2
    in the second.  values optionally pins the secrets (a, b, b', r).
    Returns whether the probe passed, whom a failed probe names, and the
    probe and product values.
    """
    h = spec.h
    if values is None:
        a, b, bp, r = (field.rand(rng) for _ in range(4))
    else:
        a, b, bp, r = values
    sh = {"a": field.sum_shares(a, h, rng),
          "b": field.sum_shares(b, h, rng),
          "p": field.sum_shares(bp, h, rng)}
    remaining = set(all_summand_pairs(h))
    order = sorted(corrupt) + [j for j in range(1, spec.n + 1)
                               if j not in corrupt]
    comp = {}
    for j in order:
        take = summand_pairs_of(spec, j) & remaining
        if not take:
            continue
        remaining -= take
        true1 = field.sum(field.mul(sh["a"][p - 1], sh["b"][q - 1])
                          for p, q in take)
        true2 = field.sum(field.mul(sh["a"][p - 1], sh["p"][q - 1])
                          for p, q in take)
        lie = j in corrupt
        comp[j] = (field.add(true1, offset if lie else 0),
                   field.add(true2, offset2 if lie else 0), true1, true2)
    c = field.sum(v[0] for v in comp.values())
    cp = field.sum(v[1] for v in comp.values())
    e = field.add(field.mul(r, b), bp)
    d = field.sub(field.mul(e, a), field.add(field.mul(r, c), cp))
    if d == 0:
        return CheckTrial(True, frozenset(), 0, c)
    caught = frozenset(
        j for j, (g1, g2, t1, t2) in comp.items()
        if field.add(field.mul(r, g1), g2) != field.add(field.mul(r, t1), t2))
    return CheckTrial(False, caught, d, c)
