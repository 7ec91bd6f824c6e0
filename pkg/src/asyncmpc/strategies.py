"""Byzantine strategy catalog for batch experiments.

A strategy plugs into Sim.set_corruption and decides two things: what a
corrupt node does with traffic delivered to it (swallow it, or run the
honest handler and deviate selectively) and what the adversary injects
on its own. Scenario runners consult three extra pieces:

* ``drive``: whether corrupt parties' engines are started like honest
  ones. Crash-style strategies set it to False.
* ``stage_*`` methods: injection choreography for a protocol phase.
  The runner calls the method if the strategy has it, at the point the
  corrupt party was supposed to act.
* value hooks (``mult_summand``, ``stat_summand``, ``mult_partition``,
  ``ampc_input``): consulted by the engines themselves whenever a
  corrupt party is about to share something.

Catalog names are stable identifiers used in scenario configs.
"""

from .aicp import DUMMY

__all__ = ["STRATEGIES", "make_strategy"]


class Honest:
    """Placeholder for corrupt-but-passive: processes everything honestly."""

    drive = True

    def attach(self, sim):
        self.sim = sim

    def on_deliver(self, node, env):
        node.dispatch(env)


class Silent(Honest):
    """Crashed from the start: never sends, never reacts."""

    drive = False

    def on_deliver(self, node, env):
        pass


class DropAll(Honest):
    """Starts its own sessions but ignores every delivery afterwards."""

    def on_deliver(self, node, env):
        pass


class EquivocateAcast(Silent):
    """Broadcast sender that tells the two halves of the network two
    different values, then stuffs echoes to push both toward delivery."""

    def stage_acast(self, sim, sender, sid, value):
        other = value + 1
        honest = sim.honest_ids()
        half = honest[: len(honest) // 2]
        for p in honest:
            v = value if p in half else other
            sim.inject(sender, p, sid, "acast.inp", payload=v)
            sim.inject(sender, p, sid, "acast.echo", payload=v)
        if half:
            sim.inject(sender, half[0], sid, "acast.ready", payload=value)


class WrongShareDealer(Honest):
    """Dealer whose distributed shares disagree for one recipient in one
    group; deliveries are processed honestly so the dealer still plays
    its part in the consistency agreement."""

    def stage_vss(self, sim, spec, engine, dealer, sid, shares, tag):
        victim = None
        for q in spec.qs():
            for p in spec.members(q):
                if p not in sim.corrupt:
                    victim = (p, q)
        for q in spec.qs():
            good = shares[q - 1]
            for p in spec.members(q):
                v = good + 1 if (p, q) == victim else good
                sim.inject(dealer, p, sid, tag, payload=(dealer, q, v),
                           elems=1)
        engine.act_as_dealer(sid)


class OffsetSummand(Honest):
    """Adds one to every product sum it volunteers, in either pipeline."""

    def mult_summand(self, party, sid, value):
        return value + 1

    def stat_summand(self, party, sid, value):
        return value + 1


class WithholdPartitions(Honest):
    """Keeps quiet exactly when cheater identification asks it to split a
    disputed sum into per-pair pieces."""

    def mult_partition(self, party, sid, value):
        return None


class OffsetRecShare(Silent):
    """Reconstruction participant that offsets every share it serves."""

    def stage_rec(self, sim, spec, field, full, sid):
        for i in sim.corrupt:
            for q in spec.groups_of_party[i]:
                wrong = field.add(full.share_of(q), 1)
                for dst in sim.party_ids:
                    if dst not in spec.members(q):
                        sim.inject(i, dst, sid, "rec.share",
                                   payload=(q, wrong), elems=1)


class ForgeIcsig(Honest):
    """Intermediary that withholds the signature it holds and reveals a
    doctored polynomial instead."""

    def stage_reveal(self, sim, engine, sid, me):
        sess = engine.sessions[sid]
        if sess.icsig is None or sess.icsig[0] != "poly":
            return
        poly = sess.icsig[1]
        forged = (poly[0] + 1,) + tuple(poly[1:])
        receiver = sess.roles[2]
        sim.inject(me, receiver, sid, "icp.reveal",
                   payload=(sess.roles, forged), elems=len(forged))


class BadVerificationPoint(Honest):
    """Supporting verifier that ships a displaced evaluation point."""

    def stage_reveal_support(self, sim, engine, sid, me):
        sess = engine.sessions.get(sid)
        if sess is None or sess.point is None or sess.point == DUMMY:
            return
        a, v, m = sess.point
        receiver = sess.roles[2]
        sim.inject(me, receiver, sid, "icp.rpoint",
                   payload=(sess.roles, (a, v + 1, m)), elems=3)


STRATEGIES = {
    "silent": Silent,
    "drop-all": DropAll,
    "equivocate-acast": EquivocateAcast,
    "wrong-share-dealer": WrongShareDealer,
    "offset-summand": OffsetSummand,
    "withhold-partitions": WithholdPartitions,
    "offset-rec-share": OffsetRecShare,
    "forge-icsig": ForgeIcsig,
    "bad-verification-point": BadVerificationPoint,
}


def make_strategy(name):
    """Fresh strategy instance for one trial; None means fully honest."""
    if name is None or name == "honest":
        return None
    cls = STRATEGIES.get(name)
    if cls is None:
        raise KeyError(f"unknown strategy {name!r}")
    return cls()
