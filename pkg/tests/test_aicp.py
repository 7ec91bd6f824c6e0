import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from asyncmpc.aicp import (DUMMY, auth_sample, blind_poly, forgery_trial,
                           icp_setup, point_consistent, repudiation_trial,
                           reveal_accept, reveal_outcome, auth_run, reveal_run)
from asyncmpc.field import M61, Field
from asyncmpc.structures import AdversaryStructure

F97 = Field(97)
Z4 = AdversaryStructure.singletons(4)


class Puppet:
    def attach(self, sim):
        self.sim = sim

    def on_deliver(self, node, env):
        pass


class Delegating:
    def attach(self, sim):
        self.sim = sim

    def on_deliver(self, node, env):
        node.dispatch(env)


# -- algebra ------------------------------------------------------------------

# worked example kept small enough to redo by hand: s = 10, challenge 4
FEX = (10, 3)
MEX = (5, 2)
BEX = blind_poly(F97, 4, FEX, MEX)


def test_blinding_worked_example():
    assert BEX == (45, 14)
    assert F97.poly_eval(BEX, 2) == 73
    # the point at alpha = 2 carries v = 16, m = 9 and 4*16 + 9 = 73
    assert point_consistent(F97, 4, BEX, (2, 16, 9))
    assert not point_consistent(F97, 4, BEX, (2, 17, 9))


def test_reveal_point_rule():
    ok = (2, 16, 9)
    assert reveal_accept(F97, 1, FEX, 4, BEX, ok)
    # forged polynomial, honest point: no match, no contradiction
    assert not reveal_accept(F97, 1, (11, 3), 4, BEX, ok)
    # a point matching the forgery is accepted by the first clause
    assert reveal_accept(F97, 1, (11, 3), 4, BEX, (2, 17, 9))
    # a point contradicting B is accepted no matter the polynomial
    assert 4 * 18 + 9 != 73
    assert reveal_accept(F97, 1, FEX, 4, BEX, (2, 18, 9))
    assert reveal_accept(F97, 1, (11, 3), 4, BEX, DUMMY)


def test_auth_sample_shapes():
    rng = random.Random(7)
    F, M, alphas = auth_sample(F97, 2, 6, 55, rng)
    assert F[0] == 55 and len(F) == 3 and len(M) == 3
    assert len(set(alphas)) == 6 and 0 not in alphas


def test_small_field_rejected():
    with pytest.raises(ValueError):
        auth_sample(Field(5), 1, 5, 0, random.Random(0))


def _honest_instance(seed, s=10, t=1, n=4):
    rng = random.Random(seed)
    F, M, alphas = auth_sample(F97, t, n, s, rng)
    d = F97.rand_nonzero(rng)
    B = blind_poly(F97, d, F, M)
    points = {j + 1: (a, F97.poly_eval(F, a), F97.poly_eval(M, a))
              for j, a in enumerate(alphas)}
    return F, d, B, points


def test_reveal_outcome_paths():
    F, d, B, points = _honest_instance(3)
    sv = (1, 2, 3, 4)
    assert reveal_outcome(F97, 1, Z4, F, d, B, sv, points) == ("accept", 10)
    three = {j: points[j] for j in (1, 2, 4)}
    assert reveal_outcome(F97, 1, Z4, F, d, B, sv, three) == ("accept", 10)
    two = {j: points[j] for j in (1, 3)}
    assert reveal_outcome(F97, 1, Z4, F, d, B, sv, two) == ("wait", None)
    forged = tuple((c + 1) % 97 for c in F[:1]) + tuple(F[1:])
    assert reveal_outcome(F97, 1, Z4, forged, d, B, sv, points) == ("reject", None)
    assert reveal_outcome(F97, 1, Z4, (1, 2, 3), d, B, sv, points) == ("bad", None)


@given(st.integers(0, 96), st.integers(0, 2**32 - 1))
@settings(max_examples=60, deadline=None)
def test_honest_data_always_accepted(s, seed):
    F, d, B, points = _honest_instance(seed, s=s)
    sv = (1, 2, 3, 4)
    for pt in points.values():
        assert point_consistent(F97, d, B, pt)
    assert reveal_outcome(F97, 1, Z4, F, d, B, sv, points) == ("accept", s)


# -- engines, honest runs -------------------------------------------------------


@pytest.mark.parametrize("seed", range(10))
def test_honest_sign_and_reveal(seed):
    sim, eng = icp_setup(seed, F97, Z4)
    sid = "sig/1/2/4"
    verdicts = auth_run(sim, eng, sid, 1, 2, 4, s=10)
    assert all(v == ("ok",) for v in verdicts.values())
    kind, F = eng[2].sessions[sid].icsig
    assert kind == "poly" and F97.poly_eval(F, 0) == 10
    assert reveal_run(sim, eng, sid) == 10


def test_communication_counts():
    sim, eng = icp_setup(0, F97, Z4)
    sid = "sig/1/2/4"
    auth_run(sim, eng, sid, 1, 2, 4, s=42)
    icp = sim.metrics.by_proto["icp"]
    # polynomials 2(t+1), one point triple per party; receipts are empty
    assert icp[0] == 4 + 3 * 4
    assert icp[2] == 1 + 4 + 4
    assert sim.metrics.counters["facast_calls"] == 2
    sv = eng[2].sessions[sid].blind[2]
    assert len(sv) == 3  # announced at the first coverable receipt set
    reveal_run(sim, eng, sid)
    assert icp[0] == 16 + 2 + 3 * len(sv)
    assert icp[2] == 9 + 1 + len(sv)
    assert icp[0] <= 8 * 4  # stays linear in n for fixed t


def test_same_seed_same_transcript():
    def go():
        from asyncmpc.netsim import Sim
        from asyncmpc.broadcast import AcastEngine
        from asyncmpc.aicp import IcpEngine
        sim = Sim(5, n=4, record=True)
        eng = {}
        for i in sim.party_ids:
            ac = AcastEngine(sim.nodes[i], Z4)
            eng[i] = IcpEngine(sim.nodes[i], F97, Z4, ac)
        auth_run(sim, eng, "s/1/2/3", 1, 2, 3, s=77)
        reveal_run(sim, eng, "s/1/2/3")
        return sim.transcript
    assert go() == go()


# -- corrupt intermediary ------------------------------------------------------


def test_bad_blinding_forces_disclosure():
    sim, eng = icp_setup(1, F97, Z4, corrupt=(2,), strategy=Puppet())
    sid = "sig/1/2/4"
    roles = (1, 2, 4)
    eng[1].auth_start(sid, 2, 4, s=10)
    for p in sim.party_ids:
        sim.inject(2, p, f"{sid}/2", "acast.inp",
                   payload=(roles, 4, (1, 1), (1, 2, 3, 4)), elems=3)
    sim.run()
    for i in (1, 3, 4):
        assert eng[i].outputs[("auth", sid)] == ("nok", 10)
    # the secret went public, so the receiver needs nobody's help
    assert eng[4].outputs[("rev", sid)] == 10


def test_undersized_support_set_never_accepted():
    sim, eng = icp_setup(2, F97, Z4, corrupt=(2,), strategy=Puppet())
    sid = "sig/1/2/4"
    roles = (1, 2, 4)
    eng[1].auth_start(sid, 2, 4, s=10)
    sess = eng[1].sessions[sid]
    d = 4
    B = blind_poly(F97, d, sess.F, sess.M)
    for p in sim.party_ids:
        sim.inject(2, p, f"{sid}/2", "acast.inp",
                   payload=(roles, d, B, (2,)), elems=3)
    sim.run()
    assert eng[1].outputs[("auth", sid)] == ("ok",)  # algebra checks out
    forged = ((sess.F[0] + 1) % 97,) + tuple(sess.F[1:])
    sim.inject(2, 4, sid, "icp.reveal", payload=(roles, forged), elems=2)
    sim.run()
    assert ("rev", sid) not in eng[4].outputs
    assert 2 not in sim.nodes[4].ld  # ignored, not disputed


def test_receiver_discards_lying_intermediary():
    sim, eng = icp_setup(3, F97, Z4, corrupt=(2,), strategy=Delegating())
    sid = "sig/1/2/4"
    eng[1].auth_start(sid, 2, 4, s=10)
    sim.run()
    assert eng[4].outputs[("auth", sid)] == ("ok",)
    F = eng[1].sessions[sid].F
    forged = ((F[0] + 1) % 97,) + tuple(F[1:])
    sim.inject(2, 4, sid, "icp.reveal", payload=((1, 2, 4), forged), elems=2)
    for i in sim.party_ids:
        eng[i].reveal_support(sid)
    sim.run()
    assert ("rev", sid) not in eng[4].outputs
    assert eng[4].sessions[sid].reveal_rejected
    assert 2 in sim.nodes[4].ld
    assert all(2 not in sim.nodes[i].ld for i in (1, 2, 3))

    # a fresh, perfectly honest session no longer convinces this receiver
    sid2 = "sig/1/2/4:again"
    eng[1].auth_start(sid2, 2, 4, s=33)
    sim.run()
    assert eng[4].outputs[("auth", sid2)] == ("ok",)
    eng[2].reveal(sid2)
    for i in sim.party_ids:
        eng[i].reveal_support(sid2)
    sim.run()
    assert ("rev", sid2) not in eng[4].outputs


# -- corrupt signer --------------------------------------------------------------


def _plant_bad_point(sim, eng, sid, bad_for):
    """Corrupt signer 1 distributes a signing session by hand, lying to
    one verifier, then publicly approves whatever the intermediary says."""
    roles = (1, 2, 4)
    F, M = (10, 3), (5, 2)
    alphas = {2: 2, 3: 3, 4: 7}
    for j, a in alphas.items():
        v, m = F97.poly_eval(F, a), F97.poly_eval(M, a)
        if j == bad_for:
            v = (v + 1) % 97
        sim.inject(1, j, sid, "icp.point", payload=(roles, (a, v, m)), elems=3)
    sim.inject(1, 2, sid, "icp.poly", payload=(roles, F, M), elems=4)
    for p in sim.party_ids:
        sim.inject(1, p, f"{sid}/1", "acast.inp", payload=(roles, ("ok",)))


def test_cheated_verifier_goes_dummy_but_reveal_survives():
    sim, eng = icp_setup(4, F97, Z4, corrupt=(1,), strategy=Puppet())
    sid = "sig/1/2/4"
    _plant_bad_point(sim, eng, sid, bad_for=3)
    sim.run()
    assert eng[2].sessions[sid].blind[2] == (2, 3, 4)
    for i in (2, 3, 4):
        assert eng[i].outputs[("auth", sid)] == ("ok",)
    assert sim.nodes[3].ld == {1}
    assert sim.nodes[2].ld == set() and sim.nodes[4].ld == set()

    eng[2].reveal(sid)
    for i in (2, 3, 4):
        eng[i].reveal_support(sid)
    sim.run()
    assert eng[4].sessions[sid].rpoints[3] == DUMMY
    assert eng[4].outputs[("rev", sid)] == 10

    # burned signers get no receipt confirmations from this verifier,
    # and an all-singletons structure then never covers the rest
    sid2 = "sig/1/2/4:later"
    _plant_bad_point(sim, eng, sid2, bad_for=None)
    sim.run()
    sess2 = eng[2].sessions[sid2]
    assert sess2.received & (1 << 2) == 0
    assert not sess2.announced
    assert all(("auth", sid2) not in eng[i].outputs for i in (2, 3, 4))


# -- error probabilities ---------------------------------------------------------


def _bound(p0, trials):
    return p0 + 3 * math.sqrt(p0 * (1 - p0) / trials)


def test_forgery_rate_small_field():
    rng = random.Random(2024)
    trials = 5000
    hits = sum(forgery_trial(F97, 1, 4, rng) for _ in range(trials))
    assert hits / trials <= _bound(4 / 96, trials)


def test_forgery_rate_large_field():
    field = Field(M61)
    rng = random.Random(2025)
    assert sum(forgery_trial(field, 1, 4, rng) for _ in range(1000)) == 0


def test_repudiation_rate():
    rng = random.Random(2026)
    trials = 5000
    hits = sum(repudiation_trial(F97, 1, 4, rng) for _ in range(trials))
    assert hits / trials <= _bound(4 / 96, trials)


def test_corrupt_view_reveals_nothing():
    """Brute force over GF(5): every candidate secret stays consistent
    with a verifier's point plus the public blinded polynomial."""
    f5 = Field(5)
    for seed in range(6):
        rng = random.Random(seed)
        s = rng.randrange(5)
        F, M, alphas = auth_sample(f5, 1, 4, s, rng)
        d = f5.rand_nonzero(rng)
        B = blind_poly(f5, d, F, M)
        a = alphas[2]  # the corrupt verifier's point
        view = (a, f5.poly_eval(F, a), f5.poly_eval(M, a))
        candidates = set()
        for f0 in range(5):
            for f1 in range(5):
                for m0 in range(5):
                    for m1 in range(5):
                        if (f5.poly_eval((f0, f1), a) == view[1]
                                and f5.poly_eval((m0, m1), a) == view[2]
                                and blind_poly(f5, d, (f0, f1), (m0, m1)) == B):
                            candidates.add(f0)
        assert candidates == {0, 1, 2, 3, 4}
