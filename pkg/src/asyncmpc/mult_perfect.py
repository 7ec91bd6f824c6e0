"""Multiplication and triple generation with perfect security.

Multiplying two additively-shared values needs the cross products
[a]_p * [b]_q for every ordered pair of groups (p, q).  Each such summand
is computable by any party sitting in both groups, so the protocol picks,
pair by pair, one "summand-sharing" party to share the sum of everything
it can cover.  Picking is done optimistically: one run per structure set
Z assumes the corrupt set is Z and only lets parties outside Z volunteer.
At least one run then has honest volunteers only, so the runs cannot all
agree on a wrong product.  Publicly comparing the run outputs against the
first run either certifies the product or exhibits two runs that
disagree, and the identification machinery (partition sharings, wait
lists, public openings) pins blame on a corrupt volunteer of that pair.

The driver iterates compare-and-identify until it succeeds.  Volunteers
on a wait list or locally blamed are barred from later iterations, so an
adversary spoils only a bounded number of them; a periodic agreement
round converts local blame into a global discard, capping the total at
t*(t*n + 1) + 1 iterations where t is the largest structure set.  Triple
preprocessing wraps all of this: every party shares random pairs, one
agreement per dealer fixes the contributor set, the summed pairs get
multiplied.

All traffic flows through the pluggable sharing layer, the agreement
oracle and the reconstruction engine; this module sends no envelopes of
its own.  Corrupt parties driven by a delegating strategy may deviate
through two hooks: ``mult_summand(party, sid, value)`` rewrites the sum a
volunteer is about to share, and ``mult_partition(party, sid, value)``
rewrites, or withholds when it returns None, a partition sharing owed
during identification.
"""

from .netsim import Engine
from .sharing import FullSharing, lin_combine


class IterationBudgetExceeded(RuntimeError):
    """More multiplication iterations than the discard argument allows."""


def all_summand_pairs(h):
    """Every ordered pair of group indices; the summands of one product."""
    return [(p, q) for p in range(1, h + 1) for q in range(1, h + 1)]


def summand_pairs_of(spec, j):
    """The pairs (p, q) party j can cover, i.e. with j in both groups."""
    bit = 1 << (j - 1)
    return {pq for pq, mask in spec.pair_members.items() if mask & bit}


def pair_cover_sound(spec, z):
    """Check that every summand keeps an honest candidate volunteer.

    For each pair (p, q) and each excluded set Z the candidate pool
    S_p & S_q minus Z must not fit inside a structure set, or one
    optimistic run could lose all its volunteers for that pair.
    """
    for mask in spec.pair_members.values():
        for zm in z.masks:
            if z.zin_mask(mask & ~zm):
                return False
    return True


# -- per-session state ---------------------------------------------------------


class _OptRun:
    """One optimistic multiplication: volunteers from outside one Z-set."""

    __slots__ = ("sid", "key", "zi", "iter_no", "pairs", "m", "excl_mask",
                 "remaining", "avail", "selected", "sel_set", "claimed",
                 "hop", "arrived", "decided", "voted", "one", "comp_hop",
                 "sums", "loop_done", "done", "ctx")

    def __init__(self, sid, key, zi, iter_no, pairs, excl_mask, ctx, h):
        self.sid = sid
        self.key = key
        self.zi = zi
        self.iter_no = iter_no
        self.pairs = pairs
        self.m = len(pairs)
        self.excl_mask = excl_mask
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
        self.sums = None         # [c] per input pair, once done
        self.loop_done = False
        self.done = False
        self.ctx = ctx           # owning mult session, None when standalone

    def components(self, j):
        """Sharings of the selected party's summand sum, one per pair."""
        return self.arrived[(self.comp_hop[j], j)]


class _CiRound:
    """One compare-and-identify iteration over all optimistic runs."""

    __slots__ = ("it", "opts", "done_opts", "diffed", "diffs", "flag",
                 "clash", "parts", "row_done", "crossed", "opened",
                 "share_open", "open_subbed")

    def __init__(self, it):
        self.it = it
        self.opts = {}
        self.done_opts = set()
        self.diffed = set()
        self.diffs = {}          # (zi, m) -> reconstructed difference
        self.flag = None
        self.clash = None        # lowest disagreeing run
        self.parts = {}          # (kind, dealer, target) -> [sv or None] * m
        self.row_done = set()    # (kind, dealer) rows already checked
        self.crossed = set()     # (j, k, m) cross comparisons started
        self.opened = {}         # (j, k, m) -> opened values, "d"/"e"/"done"
        self.share_open = {}     # (kind, m, group) -> opened input share
        self.open_subbed = set()


class _MultSession:
    __slots__ = ("sid", "key", "pairs", "m", "budget", "iter_no", "rounds",
                 "waiting", "blamed", "discarded", "acs", "done")

    def __init__(self, sid, key, pairs, budget):
        self.sid = sid
        self.key = key
        self.pairs = pairs
        self.m = len(pairs)
        self.budget = budget
        self.iter_no = 0
        self.rounds = {}
        self.waiting = {}        # iteration -> parties owing partitions
        self.blamed = {}         # iteration -> locally blamed parties
        self.discarded = set()   # global, grown only through agreement
        self.acs = {}
        self.done = False


class _AcsRound:
    """Boundary agreement that turns local blame into a global discard."""

    __slots__ = ("k", "base_iter", "voted", "decided", "one", "done")

    def __init__(self, k, base_iter):
        self.k = k
        self.base_iter = base_iter
        self.voted = set()
        self.decided = {}
        self.one = False
        self.done = False


class _TriplesSession:
    __slots__ = ("sid", "key", "m", "cand", "voted", "decided", "cs",
                 "started", "done")

    def __init__(self, sid, key, m):
        self.sid = sid
        self.key = key
        self.m = m
        self.cand = {}           # (dealer, kind, m) -> ShareVector
        self.voted = set()
        self.decided = {}
        self.cs = None
        self.started = False
        self.done = False


# -- engine --------------------------------------------------------------------


class TripleEngineBase(Engine):
    """Plumbing shared by the two triple pipelines.

    Subclasses push all traffic through the sharing layer, the agreement
    client and the reconstruction engine handed in here; the helpers keep
    counter bumping at one vantage point and route a corrupt party's
    deals through its strategy hooks.
    """

    def __init__(self, node, field, spec, z, vss, aba, rec):
        super().__init__(node)
        self.field = field
        self.spec = spec
        self.z = z
        self.vss = vss
        self.aba = aba
        self.rec = rec

    def on(self, node, env):
        raise AssertionError("no direct traffic; everything rides the layers")

    # this code runs at every party, so shared counters are bumped from a
    # single fixed vantage point
    def _lead(self):
        return self.node.party == min(self.node.sim.honest_ids())

    def _deal(self, sid, value, hook=None):
        node = self.node
        if (hook is not None and node.party in node.sim.corrupt
                and node.sim.strategy is not None):
            fn = getattr(node.sim.strategy, hook, None)
            if fn is not None:
                value = fn(node.party, sid, value)
                if value is None:
                    return
        shares = FullSharing.random(self.field, self.spec.h, value, node.rng)
        self.vss.share(node.party, sid, list(shares.values))

    def _vote(self, sid, bit, voted, mark):
        voted.add(mark)
        self.aba.vote(sid, bit)


class MultEngine(TripleEngineBase):
    """Per-party driver for the perfectly-secure triple pipeline.

    Outputs land under ("opt", sid, iter, zi) for a single optimistic run
    (the finished _OptRun), ("mult", sid) for a multiplication (list of
    product ShareVectors, one per input pair) and ("triples", sid) for
    preprocessing (list of (a, b, c) ShareVector triples).
    """

    def __init__(self, node, field, spec, z, vss, aba, rec):
        super().__init__(node, field, spec, z, vss, aba, rec)
        self.mults = {}
        self.triples = {}

    # -- optimistic multiplication ---------------------------------------------

    def opt_start(self, sid, zi, pairs, iter_no=1, ctx=None):
        """Begin one optimistic run excluding structure set ``zi``.

        pairs is this party's list of ([a], [b]) inputs; the finished run
        lands under ("opt", sid, iter_no, zi).
        """
        run = _OptRun(sid, ("opt", sid, iter_no, zi), zi, iter_no,
                      list(pairs), self.z.masks[zi - 1], ctx, self.spec.h)
        for j in self.node.sim.party_ids:
            run.avail[j] = summand_pairs_of(self.spec, j)
        self._opt_hop(run)
        return run

    def _opt_vss_sid(self, run, hop, j, m):
        return f"{hop}/{run.sid}/{j}/{run.iter_no}/{run.zi}/{m}"

    def _opt_aba_sid(self, run, hop, j):
        return f"{hop}/{run.sid}/{j}/{run.iter_no}/{run.zi}"

    def _opt_sharer(self, run, j):
        return not (run.excl_mask >> (j - 1)) & 1 and j not in run.sel_set

    def _opt_votable(self, run, j):
        # the sharing rule above is structural; barring the wait-listed,
        # the blamed and the discarded happens here, at voting time
        if not self._opt_sharer(run, j):
            return False
        ms = run.ctx
        if ms is None:
            return True
        if j in ms.discarded:
            return False
        for r in range(1, run.iter_no):
            if j in ms.waiting.get(r, ()) or j in ms.blamed.get(r, ()):
                return False
        return True

    def _opt_hop(self, run):
        hop = run.hop
        me = self.node.party
        for j in self.node.sim.party_ids:
            self.aba.on_output(self._opt_aba_sid(run, hop, j),
                               self._opt_decide_cb(run, hop, j))
            if not self._opt_sharer(run, j):
                continue
            run.arrived[(hop, j)] = [None] * run.m
            for m in range(run.m):
                self.vss.on_share(me, self._opt_vss_sid(run, hop, j, m),
                                  self._opt_vss_cb(run, hop, j, m))
        if self._opt_sharer(run, me):
            for m in range(run.m):
                a, b = run.pairs[m]
                total = self.field.sum(self.field.mul(a[p], b[q])
                                       for p, q in run.avail[me])
                self._deal(self._opt_vss_sid(run, hop, me, m), total,
                           "mult_summand")
        self._opt_poke(run)

    def _opt_vss_cb(self, run, hop, j, m):
        def cb(sv):
            run.arrived[(hop, j)][m] = sv
            self._opt_poke(run)
            self._opt_try_finish(run)
        return cb

    def _opt_decide_cb(self, run, hop, j):
        def cb(out):
            run.decided[(hop, j)] = out[1]
            if out[1] == 1:
                run.one.add(hop)
            n = len(self.node.sim.party_ids)
            if hop == run.hop and len(run.decided) >= n * hop:
                self._opt_select(run)
            else:
                self._opt_poke(run)
        return cb

    def _opt_poke(self, run):
        if run.loop_done:
            return
        hop = run.hop
        for j in self.node.sim.party_ids:
            hj = (hop, j)
            if hj in run.voted or hj in run.decided:
                continue
            got = run.arrived.get(hj)
            if (got is not None and all(v is not None for v in got)
                    and self._opt_votable(run, j)):
                self._vote(self._opt_aba_sid(run, hop, j), 1, run.voted, hj)
            elif hop in run.one:
                # fill only once somebody was accepted, so a hop can never
                # end with every agreement deciding zero
                self._vote(self._opt_aba_sid(run, hop, j), 0, run.voted, hj)

    def _opt_select(self, run):
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
            self._opt_hop(run)
        else:
            run.loop_done = True
            self._opt_try_finish(run)

    def _opt_try_finish(self, run):
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

    # -- compare and identify ---------------------------------------------------

    def mult_start(self, sid, pairs):
        """Multiply each ([a], [b]) in pairs; finishes under ("mult", sid)."""
        t = self.z.t
        ms = _MultSession(sid, ("mult", sid), list(pairs),
                          t * (t * self.spec.n + 1) + 1)
        self.mults[sid] = ms
        self._next_iteration(ms)
        return ms

    def _next_iteration(self, ms):
        ms.iter_no += 1
        if ms.iter_no > ms.budget:
            raise IterationBudgetExceeded(
                f"{ms.sid}: iteration {ms.iter_no} exceeds budget {ms.budget}")
        if self._lead():
            self.node.sim.metrics.bump("iterations")
        ci = _CiRound(ms.iter_no)
        ms.rounds[ms.iter_no] = ci
        for zi in self.spec.qs():
            ci.opts[zi] = self.opt_start(ms.sid, zi, ms.pairs, ms.iter_no, ms)
            self.on_output(ci.opts[zi].key, self._ci_opt_cb(ms, ci, zi))

    def _ci_opt_cb(self, ms, ci, zi):
        def cb(_run):
            ci.done_opts.add(zi)
            if 1 in ci.done_opts:
                for ready in sorted(ci.done_opts):
                    self._ci_diff_start(ms, ci, ready)
        return cb

    def _ci_diff_start(self, ms, ci, zi):
        # the run-1 self-difference is trivially zero, but every run gets
        # compared, reference included
        if zi in ci.diffed:
            return
        ci.diffed.add(zi)
        base = ci.opts[1]
        run = ci.opts[zi]
        for m in range(ms.m):
            rsid = f"{ms.sid}/diff/{ci.it}/{zi}/{m}"
            self.rec.on_output(rsid, self._ci_diff_cb(ms, ci, zi, m))
            self.rec.start_rec(rsid, lin_combine(self.field, (1, -1),
                                                 (run.sums[m], base.sums[m])))

    def _ci_diff_cb(self, ms, ci, zi, m):
        def cb(v):
            ci.diffs[(zi, m)] = v
            if ci.flag is not None or len(ci.diffs) < self.spec.h * ms.m:
                return
            bad = sorted({z for (z, _), dv in ci.diffs.items() if dv != 0})
            if not bad:
                ci.flag = 0
                if not ms.done:
                    ms.done = True
                    self._finish(ms.key, ci.opts[1].sums)
                return
            ci.flag = 1
            ci.clash = bad[0]
            self._ci_fail(ms, ci)
        return cb

    def _ci_fail(self, ms, ci):
        it = ci.it
        suspect, ref = ci.opts[ci.clash], ci.opts[1]
        ms.waiting[it] = set(suspect.selected) | set(ref.selected)
        me = self.node.party
        rows = [("d", i, k, ci.clash) for i in suspect.selected
                for k in ref.selected]
        rows += [("e", i, k, 1) for i in ref.selected
                 for k in suspect.selected]
        for kind, i, k, _ in rows:
            ci.parts[(kind, i, k)] = [None] * ms.m
        # subscribe only once every row exists: an already-arrived sharing
        # fires its callback synchronously, and the poke scans all rows
        for kind, i, k, zi in rows:
            for m in range(ms.m):
                self.vss.on_share(me, f"{ms.sid}/{i}/{k}/{it}/{zi}/{m}",
                                  self._ci_part_cb(ms, ci, kind, i, k, m))
        if me in suspect.claimed:
            self._ci_deal_parts(ms, ci, suspect, ref, ci.clash)
        if me in ref.claimed:
            self._ci_deal_parts(ms, ci, ref, suspect, 1)
        self._poke(ms)
        # identification continues in the background; the driver moves on
        tn1 = self.z.t * self.spec.n + 1
        if it % tn1 == 0:
            self._acs_start(ms, it // tn1)
        else:
            self._next_iteration(ms)

    def _ci_deal_parts(self, ms, ci, mine, other, zi):
        me = self.node.party
        for k in other.selected:
            overlap = mine.claimed[me] & other.claimed[k]
            for m in range(ms.m):
                a, b = ms.pairs[m]
                val = self.field.sum(self.field.mul(a[p], b[q])
                                     for p, q in overlap)
                self._deal(f"{ms.sid}/{me}/{k}/{ci.it}/{zi}/{m}", val,
                           "mult_partition")

    def _ci_part_cb(self, ms, ci, kind, i, k, m):
        def cb(sv):
            ci.parts[(kind, i, k)][m] = sv
            self._ci_part_poke(ms, ci)
        return cb

    def _ci_part_poke(self, ms, ci):
        suspect, ref = ci.opts[ci.clash], ci.opts[1]
        sel_s, sel_r = suspect.selected, ref.selected

        def row_full(kind, j, others):
            return all(v is not None
                       for k in others for v in ci.parts[(kind, j, k)])

        # a volunteer leaves the wait list when every partition it owes
        # has been shared, cheater or not
        for x in sorted(ms.waiting.get(ci.it, ())):
            if ((x not in suspect.sel_set or row_full("d", x, sel_r))
                    and (x not in ref.sel_set or row_full("e", x, sel_s))):
                ms.waiting[ci.it].discard(x)
                self._poke(ms)
        for j in sel_s:
            if ("d", j) not in ci.row_done and row_full("d", j, sel_r):
                ci.row_done.add(("d", j))
                self._ci_check_row(ms, ci, "d", j, suspect, sel_r)
        for j in sel_r:
            if ("e", j) not in ci.row_done and row_full("e", j, sel_s):
                ci.row_done.add(("e", j))
                self._ci_check_row(ms, ci, "e", j, ref, sel_s)
        for j in sel_s:
            for k in sel_r:
                for m in range(ms.m):
                    if (j, k, m) in ci.crossed:
                        continue
                    d = ci.parts[("d", j, k)][m]
                    e = ci.parts[("e", k, j)][m]
                    if d is not None and e is not None:
                        ci.crossed.add((j, k, m))
                        rsid = f"{ms.sid}/chk/{ci.it}/x/{j}/{k}/{m}"
                        self.rec.on_output(
                            rsid, self._ci_cross_cb(ms, ci, j, k, m))
                        self.rec.start_rec(
                            rsid, lin_combine(self.field, (1, -1), (d, e)))

    def _ci_check_row(self, ms, ci, kind, j, run, others):
        # the volunteer's summand-sum sharing must equal the sum of its
        # own partition row
        for m in range(ms.m):
            rows = [run.components(j)[m]] + [ci.parts[(kind, j, k)][m]
                                             for k in others]
            rsid = f"{ms.sid}/chk/{ci.it}/{kind}/{j}/{m}"
            self.rec.on_output(rsid, self._ci_row_cb(ms, ci, j))
            self.rec.start_rec(rsid, lin_combine(
                self.field, (1,) + (-1,) * len(others), rows))

    def _ci_row_cb(self, ms, ci, j):
        def cb(v):
            if v != 0:
                self._blame(ms, ci.it, j)
        return cb

    def _ci_cross_cb(self, ms, ci, j, k, m):
        def cb(v):
            if v != 0:
                self._ci_open(ms, ci, j, k, m)
        return cb

    def _ci_open(self, ms, ci, j, k, m):
        """Open both partitions of one disputed overlap, plus the input
        shares that define their true value."""
        if (j, k, m) in ci.opened:
            return
        rec = ci.opened[(j, k, m)] = {}
        it = ci.it

        def opened(side):
            def cb(v):
                rec[side] = v
                self._ci_open_eval(ms, ci, j, k, m)
            return cb

        dsid = f"{ms.sid}/opn/{it}/d/{j}/{k}/{m}"
        self.rec.on_output(dsid, opened("d"))
        self.rec.start_rec(dsid, ci.parts[("d", j, k)][m])
        esid = f"{ms.sid}/opn/{it}/e/{k}/{j}/{m}"
        self.rec.on_output(esid, opened("e"))
        self.rec.start_rec(esid, ci.parts[("e", k, j)][m])
        overlap = ci.opts[ci.clash].claimed[j] & ci.opts[1].claimed[k]
        for kind, idx, groups in (("a", 0, {p for p, _ in overlap}),
                                  ("b", 1, {q for _, q in overlap})):
            rsid = f"{ms.sid}/opn/{it}/{kind}/{m}"
            for g in sorted(groups):
                skey = (kind, m, g)
                if skey in ci.open_subbed:
                    continue
                ci.open_subbed.add(skey)
                self.rec.on_output((rsid, g), self._ci_share_cb(ms, ci, skey))
                sv = ms.pairs[m][idx]
                if g in sv.shares:
                    self.rec.start_share(rsid, g, sv[g])

    def _ci_share_cb(self, ms, ci, skey):
        def cb(v):
            ci.share_open[skey] = v
            for (j, k, m) in list(ci.opened):
                self._ci_open_eval(ms, ci, j, k, m)
        return cb

    def _ci_open_eval(self, ms, ci, j, k, m):
        rec = ci.opened[(j, k, m)]
        if "done" in rec or "d" not in rec or "e" not in rec:
            return
        overlap = ci.opts[ci.clash].claimed[j] & ci.opts[1].claimed[k]
        total = 0
        for p, q in overlap:
            a = ci.share_open.get(("a", m, p))
            b = ci.share_open.get(("b", m, q))
            if a is None or b is None:
                return
            total = self.field.add(total, self.field.mul(a, b))
        rec["done"] = True
        if rec["d"] != total:
            self._blame(ms, ci.it, j)
        if rec["e"] != total:
            self._blame(ms, ci.it, k)

    def _blame(self, ms, it, j):
        s = ms.blamed.setdefault(it, set())
        if j not in s:
            s.add(j)
            self._poke(ms)

    def _poke(self, ms):
        # wait lists and blame feed both the volunteer votes of every live
        # run and any open boundary agreement
        for rnd in ms.rounds.values():
            for run in rnd.opts.values():
                if not run.done:
                    self._opt_poke(run)
        for ar in ms.acs.values():
            if not ar.done:
                self._acs_poke(ms, ar)

    # -- boundary agreement -------------------------------------------------------

    def _acs_sid(self, ms, ar, j):
        return f"{ms.sid}/{j}/{ar.base_iter}/{ar.k}"

    def _acs_start(self, ms, k):
        ar = _AcsRound(k, ms.iter_no)
        ms.acs[k] = ar
        for j in self.node.sim.party_ids:
            self.aba.on_output(self._acs_sid(ms, ar, j),
                               self._acs_decide_cb(ms, ar, j))
        self._acs_poke(ms, ar)

    def _acs_poke(self, ms, ar):
        for j in self.node.sim.party_ids:
            if j in ar.voted or j in ar.decided:
                continue
            seen = any(j in ms.blamed.get(r, ())
                       for r in range(1, ar.base_iter + 1))
            if seen and j not in ms.discarded:
                self._vote(self._acs_sid(ms, ar, j), 1, ar.voted, j)
            elif ar.one:
                self._vote(self._acs_sid(ms, ar, j), 0, ar.voted, j)

    def _acs_decide_cb(self, ms, ar, j):
        def cb(out):
            ar.decided[j] = out[1]
            if out[1] == 1:
                ar.one = True
            if len(ar.decided) == len(self.node.sim.party_ids):
                ar.done = True
                ones = [i for i, b in ar.decided.items() if b == 1]
                if ones:
                    ms.discarded.add(min(ones))
                # an all-zero round names nobody; the iteration budget is
                # sized so the adversary still runs out of spoilers
                self._next_iteration(ms)
            else:
                self._acs_poke(ms, ar)
        return cb

    # -- triple preprocessing -----------------------------------------------------

    def triples_start(self, sid, count):
        """Produce ``count`` random triples; finishes under ("triples", sid)."""
        ts = _TriplesSession(sid, ("triples", sid), count)
        self.triples[sid] = ts
        me = self.node.party
        for j in self.node.sim.party_ids:
            for kind in (1, 2):
                for m in range(count):
                    self.vss.on_share(me, f"{sid}/{j}/{kind}/{m}",
                                      self._tr_cand_cb(ts, j, kind, m))
            self.aba.on_output(f"{sid}/{j}", self._tr_decide_cb(ts, j))
        for kind in (1, 2):
            for m in range(count):
                self._deal(f"{sid}/{me}/{kind}/{m}",
                           self.field.rand(self.node.rng))
        self._tr_poke(ts)
        return ts

    def _tr_cand_cb(self, ts, j, kind, m):
        def cb(sv):
            ts.cand[(j, kind, m)] = sv
            self._tr_poke(ts)
        return cb

    def _tr_decide_cb(self, ts, j):
        def cb(out):
            ts.decided[j] = out[1]
            ids = self.node.sim.party_ids
            if len(ts.decided) == len(ids):
                ts.cs = [i for i in ids if ts.decided[i] == 1]
            self._tr_poke(ts)
        return cb

    def _tr_poke(self, ts):
        ids = self.node.sim.party_ids
        mask = 0
        for j in ids:
            if ts.decided.get(j) == 1:
                mask |= 1 << (j - 1)
        # once the accepted dealers already form a qualifying set, the
        # rest need not be waited for
        fill = self.z.complement_within_mask(mask)
        for j in ids:
            if j in ts.voted or j in ts.decided:
                continue
            if all((j, kind, m) in ts.cand
                   for kind in (1, 2) for m in range(ts.m)):
                self._vote(f"{ts.sid}/{j}", 1, ts.voted, j)
            elif fill:
                self._vote(f"{ts.sid}/{j}", 0, ts.voted, j)
        if (ts.cs is not None and not ts.started
                and all((j, kind, m) in ts.cand for j in ts.cs
                        for kind in (1, 2) for m in range(ts.m))):
            ts.started = True
            self._tr_mult(ts)

    def _tr_mult(self, ts):
        ones = (1,) * len(ts.cs)
        pairs = []
        for m in range(ts.m):
            a = lin_combine(self.field, ones,
                            [ts.cand[(j, 1, m)] for j in ts.cs])
            b = lin_combine(self.field, ones,
                            [ts.cand[(j, 2, m)] for j in ts.cs])
            pairs.append((a, b))
        self.on_output(("mult", ts.sid), self._tr_done_cb(ts, pairs))
        self.mult_start(ts.sid, pairs)

    def _tr_done_cb(self, ts, pairs):
        def cb(cs):
            ts.done = True
            self._finish(ts.key, [(pairs[m][0], pairs[m][1], cs[m])
                                  for m in range(ts.m)])
        return cb
