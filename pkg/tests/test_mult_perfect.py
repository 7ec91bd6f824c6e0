import random

import pytest
from scipy import stats

from asyncmpc.broadcast import AcastEngine, FabaClient, FabaOracle
from asyncmpc.field import Field
from asyncmpc.mult_perfect import (MultEngine, _MultSession, all_summand_pairs,
                                   pair_cover_sound, summand_pairs_of)
from asyncmpc.netsim import Sim
from asyncmpc.sharing import FullSharing, RecEngine
from asyncmpc.structures import AdversaryStructure, sharing_spec
from asyncmpc.vss_perfect import ComposedVssLayer, OracleVssLayer, PvssEngine

F97 = Field(97)
Z5 = AdversaryStructure.singletons(5)
S5 = sharing_spec(Z5)

A_FULL = FullSharing((1, 2, 3, 4, 5))    # secret 15
B_FULL = FullSharing((2, 3, 4, 5, 6))    # secret 20, so a*b = 300 = 9 mod 97
PROD = 9


class Puppet:
    def attach(self, sim):
        self.sim = sim

    def on_deliver(self, node, env):
        pass


class Delegating:
    """Corrupt node that behaves honestly; subclasses deviate via hooks."""

    def attach(self, sim):
        self.sim = sim

    def on_deliver(self, node, env):
        node.dispatch(env)


class OffsetAll(Delegating):
    """Every summand sum the volunteer shares is off by one."""

    def mult_summand(self, party, sid, value):
        return (value + 1) % 97


class OffsetRunTwo(Delegating):
    """Lies only in the run that excludes structure set 2."""

    def mult_summand(self, party, sid, value):
        if sid.split("/")[-2] == "2":
            return (value + 1) % 97
        return value


class WithholdPartitions(OffsetRunTwo):
    """Provokes a clash, then never shares the partitions it owes."""

    def mult_partition(self, party, sid, value):
        return None


class LyingPartitions(OffsetRunTwo):
    """Provokes a clash and lies in its suspect-side partition row."""

    def mult_partition(self, party, sid, value):
        if sid.split("/")[-2] != "1":
            return (value + 3) % 97
        return value


def make_mult(seed, field=F97, z=Z5, corrupt=(), strategy=None,
              layer="oracle", record=False):
    spec = sharing_spec(z)
    sim = Sim(seed, n=z.n, record=record)
    FabaOracle(sim.add_oracle("faba"), z)
    if layer == "oracle":
        vss = OracleVssLayer(sim, spec)
    else:
        ac = {i: AcastEngine(sim.nodes[i], z) for i in sim.party_ids}
        pv = {i: PvssEngine(sim.nodes[i], field, spec, z, ac[i])
              for i in sim.party_ids}
        vss = ComposedVssLayer(pv)
    eng = {i: MultEngine(sim.nodes[i], field, spec, z, vss,
                         FabaClient(sim.nodes[i]),
                         RecEngine(sim.nodes[i], field, spec, z))
           for i in sim.party_ids}
    if corrupt:
        sim.set_corruption(corrupt, strategy)
    return sim, spec, eng


def pair_inputs(spec, full_a, full_b, count=1):
    return {i: [(full_a.vector_for(spec, i), full_b.vector_for(spec, i))
                for _ in range(count)]
            for i in range(1, spec.n + 1)}


def open_sharing(field, spec, svs):
    """Pool honest share vectors; group values must agree to open."""
    per_q = {}
    for sv in svs.values():
        for q, v in sv.shares.items():
            assert per_q.setdefault(q, v) == v
    assert len(per_q) == spec.h
    return field.sum(per_q.values())


# -- summand bookkeeping -------------------------------------------------------


def test_pair_table_matches_group_membership():
    assert len(all_summand_pairs(S5.h)) == 25
    for j in range(1, 6):
        ref = {(p, q) for p in S5.qs() for q in S5.qs()
               if j in S5.members(p) and j in S5.members(q)}
        assert summand_pairs_of(S5, j) == ref
    assert len(summand_pairs_of(S5, 1)) == 16


def test_volunteer_cover_soundness_tracks_the_structure():
    assert pair_cover_sound(S5, Z5)
    z4 = AdversaryStructure.singletons(4)
    assert not pair_cover_sound(sharing_spec(z4), z4)
    zc = AdversaryStructure(6, [(1, 2), (3,), (4,), (5,), (6,)])
    assert pair_cover_sound(sharing_spec(zc), zc)


def test_claim_sequence_frozen_example():
    # selection order 2, 3, 4: claims shrink 16 -> 7 -> 2 and the claimed
    # partial sums rebuild a*b
    avail = {j: summand_pairs_of(S5, j) for j in range(1, 6)}
    remaining = set(all_summand_pairs(5))
    sizes, sums = [], []
    for j in (2, 3, 4):
        take = frozenset(avail[j])
        sizes.append(len(take))
        sums.append(F97.sum(F97.mul(A_FULL.share_of(p), B_FULL.share_of(q))
                            for p, q in take))
        remaining -= take
        for k in avail:
            avail[k] -= take
    assert sizes == [16, 7, 2]
    assert sums == [27, 62, 17]
    assert not remaining
    assert F97.sum(sums) == PROD


# -- one optimistic run --------------------------------------------------------


def test_opt_run_honest_reconstructs_product():
    sim, spec, eng = make_mult(0)
    inputs = pair_inputs(spec, A_FULL, B_FULL)
    runs = {i: eng[i].opt_start("w", 1, inputs[i]) for i in sim.party_ids}
    sim.run()
    sel = runs[1].selected
    for i in sim.party_ids:
        assert runs[i].done and runs[i].selected == sel
    assert 1 not in runs[1].sel_set
    assert sorted(len(runs[1].claimed[j]) for j in sel) == [2, 7, 16]
    assert open_sharing(F97, spec,
                        {i: runs[i].sums[0] for i in sim.party_ids}) == PROD
    assert sim.metrics.counters["fvss_calls"] == 9
    assert sim.metrics.counters["faba_calls"] == 15
    assert sim.metrics.counters["hops"] == 3


def test_opt_zero_factor_yields_zero():
    sim, spec, eng = make_mult(1)
    zero = FullSharing((0,) * 5)
    inputs = pair_inputs(spec, zero, B_FULL)
    runs = {i: eng[i].opt_start("w", 3, inputs[i]) for i in sim.party_ids}
    sim.run()
    assert open_sharing(F97, spec,
                        {i: runs[i].sums[0] for i in sim.party_ids}) == 0


def test_opt_offset_volunteer_shifts_product_by_its_lie():
    # the first volunteer picked is corrupt; a standalone run has no
    # comparison, so the shifted product simply comes out
    sim, spec, eng = make_mult(2, corrupt={2}, strategy=OffsetAll())
    inputs = pair_inputs(spec, A_FULL, B_FULL)
    runs = {i: eng[i].opt_start("w", 1, inputs[i]) for i in sim.party_ids}
    sim.run()
    honest = {i: runs[i].sums[0] for i in sim.honest_ids()}
    assert 2 in runs[1].sel_set
    assert open_sharing(F97, spec, honest) == (PROD + 1) % 97


@pytest.mark.parametrize("seed", range(5))
def test_opt_claims_partition_all_summands(seed):
    rng = random.Random(seed)
    fa = FullSharing.random(F97, 5, rng.randrange(97), rng)
    fb = FullSharing.random(F97, 5, rng.randrange(97), rng)
    sim, spec, eng = make_mult(seed + 10)
    inputs = pair_inputs(spec, fa, fb)
    runs = {i: eng[i].opt_start("w", 2, inputs[i]) for i in sim.party_ids}
    sim.run()
    seen = set()
    for take in runs[1].claimed.values():
        assert not take & seen
        seen |= take
    assert seen == set(all_summand_pairs(5))
    got = open_sharing(F97, spec, {i: runs[i].sums[0] for i in sim.party_ids})
    assert got == F97.mul(fa.secret(F97), fb.secret(F97))


# -- compare and identify ------------------------------------------------------


def run_mult(sim, spec, eng, drive, count=1):
    inputs = pair_inputs(spec, A_FULL, B_FULL, count)
    mss = {i: eng[i].mult_start("mul", inputs[i]) for i in drive}
    sim.run()
    return mss


def test_mult_honest_single_iteration_counts():
    sim, spec, eng = make_mult(3)
    mss = run_mult(sim, spec, eng, sim.party_ids)
    outs = {i: eng[i].outputs[("mult", "mul")][0] for i in sim.party_ids}
    assert open_sharing(F97, spec, outs) == PROD
    for i in sim.party_ids:
        assert mss[i].iter_no == 1
        assert not mss[i].blamed and not mss[i].discarded
    assert sim.metrics.counters["fvss_calls"] == 45
    assert sim.metrics.counters["faba_calls"] == 75
    assert sim.metrics.counters["hops"] == 15
    assert sim.metrics.counters["iterations"] == 1


def test_mult_blames_the_volunteer_behind_a_clash():
    sim, spec, eng = make_mult(4, corrupt={3}, strategy=OffsetRunTwo())
    mss = run_mult(sim, spec, eng, sim.party_ids)
    outs = {i: eng[i].outputs[("mult", "mul")][0] for i in sim.honest_ids()}
    assert open_sharing(F97, spec, outs) == PROD
    for i in sim.honest_ids():
        ms = mss[i]
        assert ms.rounds[1].flag == 1 and ms.rounds[1].clash == 2
        assert ms.blamed[1] == {3}
        # everyone who owed partitions delivered them and left the list
        assert ms.waiting[1] == set()
        assert not ms.discarded


def test_mult_withholder_stays_waiting_and_is_dropped():
    sim, spec, eng = make_mult(5, corrupt={3}, strategy=WithholdPartitions())
    mss = run_mult(sim, spec, eng, sim.party_ids)
    outs = {i: eng[i].outputs[("mult", "mul")][0] for i in sim.honest_ids()}
    assert open_sharing(F97, spec, outs) == PROD
    for i in sim.honest_ids():
        ms = mss[i]
        assert ms.iter_no == 2
        assert ms.waiting[1] == {3}
        assert not ms.blamed.get(1)
        for run in ms.rounds[2].opts.values():
            assert 3 not in run.sel_set


def test_mult_lying_partitions_opened_and_blamed():
    sim, spec, eng = make_mult(6, corrupt={3}, strategy=LyingPartitions())
    mss = run_mult(sim, spec, eng, sim.party_ids)
    outs = {i: eng[i].outputs[("mult", "mul")][0] for i in sim.honest_ids()}
    assert open_sharing(F97, spec, outs) == PROD
    for i in sim.honest_ids():
        ms = mss[i]
        assert ms.blamed[1] == {3}
        ci = ms.rounds[1]
        assert ci.opened and ci.share_open
        for rec in ci.opened.values():
            assert rec.get("done")


@pytest.mark.parametrize("corrupt,strategy,drive_corrupt", [
    ({5}, Puppet, False),
    ({2}, OffsetAll, True),
    ({3}, OffsetRunTwo, True),
    ({3}, WithholdPartitions, True),
    ({3}, LyingPartitions, True),
])
def test_mult_correct_within_budget_for_every_cheater(corrupt, strategy,
                                                      drive_corrupt):
    sim, spec, eng = make_mult(7, corrupt=corrupt, strategy=strategy())
    drive = sim.party_ids if drive_corrupt else sim.honest_ids()
    mss = run_mult(sim, spec, eng, drive)
    outs = {i: eng[i].outputs[("mult", "mul")][0] for i in sim.honest_ids()}
    assert open_sharing(F97, spec, outs) == PROD
    honest = set(sim.honest_ids())
    for i in sim.honest_ids():
        ms = mss[i]
        assert ms.iter_no <= ms.budget == 7
        assert not ms.discarded & honest
        for blamed in ms.blamed.values():
            assert not blamed & honest
        # every honest party eventually worked off its partition debt
        for it, waiting in ms.waiting.items():
            if it < ms.iter_no:
                assert not waiting & honest


def test_boundary_agreement_discards_commonly_blamed_party():
    # white box: blame is already unanimous, the corrupt party is silent,
    # and the boundary round must still converge on it
    sim, spec, eng = make_mult(8, corrupt={3}, strategy=Puppet())
    mss = {}
    for i in sim.honest_ids():
        ms = _MultSession("syn", ("mult", "syn"), [], 7)
        ms.iter_no = 6
        ms.blamed[2] = {3}
        eng[i].mults["syn"] = ms
        mss[i] = ms
        eng[i]._acs_start(ms, 1)
    sim.run()
    for i in sim.honest_ids():
        assert mss[i].discarded == {3}
        assert mss[i].acs[1].done
        assert mss[i].iter_no == 7


# -- triple preprocessing ------------------------------------------------------


def open_triple(spec, field, outs, m):
    a = open_sharing(field, spec, {i: t[m][0] for i, t in outs.items()})
    b = open_sharing(field, spec, {i: t[m][1] for i, t in outs.items()})
    c = open_sharing(field, spec, {i: t[m][2] for i, t in outs.items()})
    return a, b, c


def test_triples_honest_counts_and_correctness():
    sim, spec, eng = make_mult(9)
    for i in sim.party_ids:
        eng[i].triples_start("trip", 1)
    sim.run()
    outs = {i: eng[i].outputs[("triples", "trip")] for i in sim.party_ids}
    for i in sim.party_ids:
        assert eng[i].triples["trip"].cs == [1, 2, 3, 4, 5]
    a, b, c = open_triple(spec, F97, outs, 0)
    assert c == F97.mul(a, b)
    assert sim.metrics.counters["fvss_calls"] == 55
    assert sim.metrics.counters["faba_calls"] == 80


def test_triples_same_seed_same_transcript():
    transcripts = []
    for _ in range(2):
        sim, spec, eng = make_mult(10, record=True)
        for i in sim.party_ids:
            eng[i].triples_start("trip", 1)
        sim.run()
        transcripts.append(sim.transcript)
    assert transcripts[0] == transcripts[1]


def test_triples_silent_party_left_out():
    sim, spec, eng = make_mult(11, corrupt={5}, strategy=Puppet())
    for i in sim.honest_ids():
        eng[i].triples_start("trip", 1)
    sim.run()
    outs = {i: eng[i].outputs[("triples", "trip")] for i in sim.honest_ids()}
    for i in sim.honest_ids():
        assert eng[i].triples["trip"].cs == [1, 2, 3, 4]
    a, b, c = open_triple(spec, F97, outs, 0)
    assert c == F97.mul(a, b)
    assert sim.metrics.counters["fvss_calls"] == 41


def test_triples_batch_produces_independent_products():
    sim, spec, eng = make_mult(12)
    for i in sim.party_ids:
        eng[i].triples_start("trip", 3)
    sim.run()
    outs = {i: eng[i].outputs[("triples", "trip")] for i in sim.party_ids}
    secrets = set()
    for m in range(3):
        a, b, c = open_triple(spec, F97, outs, m)
        assert c == F97.mul(a, b)
        secrets.add((a, b))
    assert len(secrets) == 3


def test_triples_secrets_uniform_over_small_field():
    f5 = Field(5)
    z = AdversaryStructure.singletons(5)
    counts = [0] * 5
    for seed in range(600):
        sim, spec, eng = make_mult(seed, field=f5, z=z)
        for i in sim.party_ids:
            eng[i].triples_start("t", 1)
        sim.run()
        outs = {i: eng[i].outputs[("triples", "t")] for i in sim.party_ids}
        a, b, c = open_triple(spec, f5, outs, 0)
        assert c == f5.mul(a, b)
        counts[a] += 1
        counts[b] += 1
    assert stats.chisquare(counts).pvalue > 1e-6


def test_iteration_budget_formula():
    sim, spec, eng = make_mult(13)
    inputs = pair_inputs(spec, A_FULL, B_FULL)
    ms = eng[1].mult_start("m", inputs[1])
    # t * (t*n + 1) + 1 at n=5 with singleton structure sets
    assert ms.budget == 7


def test_triples_over_composed_sharing_layer():
    sim, spec, eng = make_mult(14, layer="composed")
    for i in sim.party_ids:
        eng[i].triples_start("trip", 1)
    sim.run()
    outs = {i: eng[i].outputs[("triples", "trip")] for i in sim.party_ids}
    a, b, c = open_triple(spec, F97, outs, 0)
    assert c == F97.mul(a, b)
    assert sim.metrics.counters["fvss_calls"] == 55
    assert sim.metrics.counters["facast_calls"] > 0
