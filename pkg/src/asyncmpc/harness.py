"""Batch experiment runner.

A scenario config (JSON) names a protocol, a party count, an adversary
structure, a corrupt set with a strategy from the catalog, and a block
of schedule seeds. run_scenario validates it, executes one simulator
trial per seed, and classifies each trial:

* success: every checked invariant held;
* failure: an allowed error-probability event occurred (a forged
  signature was accepted, a cheat went undetected) - these feed the
  empirical error rate and its Wilson interval;
* violation: an invariant that must always hold broke.

Reports are plain dicts with deterministic content: rerunning the same
config reproduces the same bytes. Wall-clock time is returned next to
the report, not inside it, so the serialized report stays reproducible.

Trials are independent; with jobs > 1 they run in worker processes and
are aggregated in seed order, which keeps the result order-independent.
"""

import json
import math
import random
import time
from concurrent.futures import ProcessPoolExecutor

from .aicp import IcpEngine, auth_run, forgery_trial, icp_setup, \
    repudiation_trial, reveal_run
from .broadcast import AcastEngine, FabaClient, FabaOracle
from .field import Field
from .mpc import AmpcEngine, Circuit, ComposedTriplesLayer, \
    OracleTriplesLayer, fampc_oracle
from .mult_perfect import MultEngine
from .mult_stat import StatMultEngine, randmultci_trial
from .netsim import Sim
from .sharing import FullSharing, RecEngine
from .strategies import STRATEGIES, make_strategy
from .structures import AdversaryStructure, sharing_spec
from .vss_perfect import ComposedVssLayer, OracleVssLayer, PvssEngine
from .vss_stat import SvssEngine

__all__ = ["Scenario", "ScenarioError", "Report", "parse_scenario",
           "run_scenario", "run_config", "complexity_sweep", "wilson",
           "report_bytes"]

# minimum Q^(k) each protocol demands of the whole party set
PROTOCOL_QK = {
    "acast": 3,
    "rec": 3,
    "pvss": 4,
    "svss": 3,
    "aicp": 3,
    "randmultci": 3,
    "pertriples": 4,
    "stattriples": 3,
    "ampc": None,  # 4 in perfect mode, 3 in statistical
}

# pipelines that fix the security flag
FORCED_SECURITY = {"pertriples": "perfect", "stattriples": "statistical",
                   "pvss": "perfect", "svss": "statistical"}


class ScenarioError(ValueError):
    """Config rejected before any trial ran."""

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


class Scenario:
    __slots__ = ("protocol", "n", "z", "field", "corrupt", "strategy",
                 "seeds", "layer", "security", "batch", "raw")

    def __init__(self, **kw):
        for k in self.__slots__:
            setattr(self, k, kw[k])


class Report:
    """Aggregated result of one scenario plus the (non-serialized) timing."""

    __slots__ = ("data", "wall_time_s")

    def __init__(self, data, wall_time_s):
        self.data = data
        self.wall_time_s = wall_time_s

    @property
    def violations(self):
        return self.data["violations"]


def wilson(hits, trials, zval=3.0):
    """Wilson score interval for a binomial proportion at z standard
    deviations (z=3 gives the 3-sigma band used by the error bounds)."""
    if trials == 0:
        return (0.0, 1.0)
    p = hits / trials
    z2 = zval * zval
    den = 1.0 + z2 / trials
    center = (p + z2 / (2 * trials)) / den
    half = zval * math.sqrt(p * (1 - p) / trials
                            + z2 / (4 * trials * trials)) / den
    return (max(0.0, center - half), min(1.0, center + half))


# -- config parsing -------------------------------------------------------------


def parse_scenario(cfg):
    problems = []
    protocol = cfg.get("protocol")
    if protocol not in PROTOCOL_QK:
        problems.append(f"unknown protocol {protocol!r}")
        raise ScenarioError(problems)

    n = cfg.get("n")
    if not isinstance(n, int) or n < 2:
        problems.append(f"n must be an integer >= 2, got {n!r}")
        raise ScenarioError(problems)

    structure = cfg.get("structure", "singletons")
    try:
        if structure == "singletons":
            z = AdversaryStructure.singletons(n)
        else:
            z = AdversaryStructure(n, [tuple(s) for s in structure])
    except (TypeError, ValueError) as exc:
        raise ScenarioError([f"bad structure: {exc}"])

    try:
        field = Field(cfg.get("field", 97))
    except (TypeError, ValueError) as exc:
        raise ScenarioError([f"bad field: {exc}"])

    corrupt = frozenset(cfg.get("corrupt", ()))
    if not all(isinstance(i, int) and 1 <= i <= n for i in corrupt):
        problems.append(f"corrupt set {sorted(corrupt)} outside parties 1..{n}")
    elif corrupt and not z.zin(corrupt):
        problems.append(
            f"corrupt set {sorted(corrupt)} not inside any structure class")

    strategy = cfg.get("strategy")
    if corrupt and strategy in (None, "honest"):
        problems.append("corrupt set given without a strategy")
    if strategy not in (None, "honest") and strategy not in STRATEGIES:
        problems.append(f"unknown strategy {strategy!r}")

    mode = cfg.get("mode", {})
    layer = mode.get("layer", "hybrid")
    if layer not in ("hybrid", "composed"):
        problems.append(f"mode.layer must be hybrid or composed, got {layer!r}")
    security = mode.get("security", FORCED_SECURITY.get(protocol, "perfect"))
    if security not in ("perfect", "statistical"):
        problems.append(
            f"mode.security must be perfect or statistical, got {security!r}")
    forced = FORCED_SECURITY.get(protocol)
    if forced and security != forced:
        problems.append(f"protocol {protocol} is {forced}, not {security}")

    seeds_cfg = cfg.get("seeds")
    trials = cfg.get("trials")
    if isinstance(seeds_cfg, list):
        seeds = [int(s) for s in seeds_cfg]
        if trials is not None and trials != len(seeds):
            problems.append(
                f"trials={trials} does not match {len(seeds)} listed seeds")
    elif isinstance(seeds_cfg, int):
        if trials is not None and trials != seeds_cfg:
            problems.append(f"trials={trials} does not match seeds={seeds_cfg}")
        seeds = list(range(seeds_cfg))
    elif seeds_cfg is None and isinstance(trials, int) and trials > 0:
        seeds = list(range(trials))
    else:
        problems.append("need schedule seeds (count or list) or trials")
        seeds = []

    k = PROTOCOL_QK[protocol]
    if k is None:
        k = 4 if security == "perfect" else 3
    if not problems and not z.q_condition(range(1, n + 1), k):
        problems.append(
            f"protocol {protocol} needs Q^({k}) over the full party set")

    if problems:
        raise ScenarioError(problems)

    raw = {
        "protocol": protocol,
        "n": n,
        "structure": [sorted(s) for s in z.sets],
        "field": field.p,
        "corrupt": sorted(corrupt),
        "strategy": strategy or "honest",
        "mode": {"layer": layer, "security": security},
        "trials": len(seeds),
        "seeds": seeds_cfg if seeds_cfg is not None else len(seeds),
    }
    return Scenario(protocol=protocol, n=n, z=z, field=field, corrupt=corrupt,
                    strategy=strategy, seeds=seeds, layer=layer,
                    security=security, batch=int(cfg.get("batch", 1)), raw=raw)


# -- shared wiring ----------------------------------------------------------------


def _vss_layer(sim, sc, spec, fresh_engines=False):
    if sc.layer == "hybrid":
        return OracleVssLayer(sim, spec), None
    ac = {i: AcastEngine(sim.nodes[i], sc.z) for i in sim.party_ids}
    if sc.security == "perfect":
        eng = {i: PvssEngine(sim.nodes[i], sc.field, spec, sc.z, ac[i])
               for i in sim.party_ids}
    else:
        icp = {i: IcpEngine(sim.nodes[i], sc.field, sc.z, ac[i])
               for i in sim.party_ids}
        eng = {i: SvssEngine(sim.nodes[i], sc.field, spec, sc.z, ac[i], icp[i])
               for i in sim.party_ids}
    return ComposedVssLayer(eng), eng


def _triples_sim(sc, seed):
    spec = sharing_spec(sc.z)
    # generous ceiling: identification rounds legitimately add traffic
    sim = Sim(seed, n=sc.n, budget=20 * 10**6)
    FabaOracle(sim.add_oracle("faba"), sc.z)
    fc = {i: FabaClient(sim.nodes[i]) for i in sim.party_ids}
    rc = {i: RecEngine(sim.nodes[i], sc.field, spec, sc.z)
          for i in sim.party_ids}
    layer, _ = _vss_layer(sim, sc, spec)
    cls = MultEngine if sc.security == "perfect" else StatMultEngine
    eng = {i: cls(sim.nodes[i], sc.field, spec, sc.z, layer, fc[i], rc[i])
           for i in sim.party_ids}
    return sim, spec, fc, rc, layer, eng


def _apply_corruption(sim, sc):
    strat = make_strategy(sc.strategy) if sc.corrupt else None
    if sc.corrupt:
        sim.set_corruption(sc.corrupt, strat)
    return strat


def _driven(sim, strat):
    if strat is None or strat.drive:
        return sim.party_ids
    return sim.honest_ids()


def _open(field, spec, vectors):
    """Pool honest share vectors back into the secret; None on conflict."""
    per_q = {}
    for sv in vectors:
        for q, v in sv.shares.items():
            if per_q.setdefault(q, v) != v:
                return None
    if len(per_q) != spec.h:
        return None
    return field.sum(per_q.values())


# -- per-protocol trials ----------------------------------------------------------
# Each returns (outcome, note, metrics_dict, steps).


def _scalar_metrics(sim):
    out = {}
    for k, v in sim.metrics.as_dict().items():
        if isinstance(v, (int, float)):
            out[k] = v
    return out


def _run_acast(sc, seed):
    sim = Sim(seed, n=sc.n)
    eng = {i: AcastEngine(sim.nodes[i], sc.z) for i in sim.party_ids}
    strat = _apply_corruption(sim, sc)
    sender = min(sc.corrupt) if sc.corrupt else 1
    value = seed % sc.field.p
    stage = getattr(strat, "stage_acast", None)
    if sender not in sc.corrupt or (strat is not None and strat.drive):
        eng[sender].start("b", value)
    elif stage is not None:
        stage(sim, sender, "b", value)
    res = sim.run()
    outs = {i: eng[i].outputs.get("b") for i in sim.honest_ids()}
    got = {v for v in outs.values() if v is not None}
    if sender not in sc.corrupt and any(v != value for v in outs.values()):
        return "violation", "validity broken", _scalar_metrics(sim), res.steps
    if len(got) > 1:
        return "violation", "agreement broken", _scalar_metrics(sim), res.steps
    if got and None in outs.values():
        return "violation", "totality broken", _scalar_metrics(sim), res.steps
    return "success", None, _scalar_metrics(sim), res.steps


def _run_rec(sc, seed):
    spec = sharing_spec(sc.z)
    rng = random.Random(seed)
    secret = sc.field.rand(rng)
    full = FullSharing.random(sc.field, spec.h, secret, rng)
    sim = Sim(seed, n=sc.n)
    eng = {i: RecEngine(sim.nodes[i], sc.field, spec, sc.z)
           for i in sim.party_ids}
    strat = _apply_corruption(sim, sc)
    stage = getattr(strat, "stage_rec", None)
    if stage is not None:
        stage(sim, spec, sc.field, full, "r")
    for i in _driven(sim, strat):
        if i not in sc.corrupt or (strat is not None and strat.drive):
            eng[i].start_rec("r", full.vector_for(spec, i))
    res = sim.run()
    for i in sim.honest_ids():
        if eng[i].outputs.get("r") != secret:
            return ("violation", f"party {i} reconstructed wrongly",
                    _scalar_metrics(sim), res.steps)
    return "success", None, _scalar_metrics(sim), res.steps


def _run_vss(sc, seed):
    spec = sharing_spec(sc.z)
    rng = random.Random(seed)
    dealt = FullSharing.random(sc.field, spec.h, sc.field.rand(rng), rng)
    sim = Sim(seed, n=sc.n)
    layer, engines = _vss_layer(sim, sc, spec)
    strat = _apply_corruption(sim, sc)
    dealer = min(sc.corrupt) if sc.corrupt else 1
    got = {}
    for i in sim.honest_ids():
        layer.on_share(i, "v", (lambda i: lambda sv: got.__setitem__(i, sv))(i))
    stage = getattr(strat, "stage_vss", None)
    tag = "pvss.dist" if sc.security == "perfect" else "svss.dist"
    if dealer in sc.corrupt and stage is not None and engines is not None:
        for eng in engines.values():
            eng.expect("v", dealer)
        stage(sim, spec, engines[dealer], dealer, "v", list(dealt.values), tag)
    elif dealer not in sc.corrupt or (strat is not None and strat.drive):
        layer.share(dealer, "v", list(dealt.values))
    res = sim.run()
    honest = sim.honest_ids()
    if dealer not in sc.corrupt:
        for i in honest:
            if i not in got or got[i] != dealt.vector_for(spec, i):
                return ("violation", f"party {i} missed the dealt shares",
                        _scalar_metrics(sim), res.steps)
        return "success", None, _scalar_metrics(sim), res.steps
    if got and len(got) != len(honest):
        return ("violation", "some honest parties output and some did not",
                _scalar_metrics(sim), res.steps)
    if got and _open(sc.field, spec, got.values()) is None:
        return ("violation", "inconsistent honest share bundles",
                _scalar_metrics(sim), res.steps)
    return "success", None, _scalar_metrics(sim), res.steps


def _run_aicp(sc, seed):
    rng = random.Random(seed)
    if sc.strategy == "forge-icsig" and sc.corrupt:
        hit = forgery_trial(sc.field, sc.z.t, sc.n, rng)
        return ("failure" if hit else "success",
                "forgery accepted" if hit else None, {}, 0)
    if sc.strategy == "bad-verification-point" and sc.corrupt:
        hit = repudiation_trial(sc.field, sc.z.t, sc.n, rng)
        return ("failure" if hit else "success",
                "bad point survived the blind check" if hit else None, {}, 0)
    sim, eng = icp_setup(seed, sc.field, sc.z, corrupt=sc.corrupt,
                         strategy=make_strategy(sc.strategy) if sc.corrupt
                         else None)
    s = sc.field.rand(rng)
    verdicts = auth_run(sim, eng, "s/1/2/3", 1, 2, 3, s=s)
    if any(v != ("ok",) for v in verdicts.values()):
        return "violation", "honest signing rejected", _scalar_metrics(sim), 0
    if reveal_run(sim, eng, "s/1/2/3") != s:
        return "violation", "honest reveal failed", _scalar_metrics(sim), 0
    return "success", None, _scalar_metrics(sim), sim.steps


def _run_randmultci(sc, seed):
    rng = random.Random(seed)
    spec = sharing_spec(sc.z)
    cheating = bool(sc.corrupt) and sc.strategy == "offset-summand"
    trial = randmultci_trial(sc.field, spec, rng, corrupt=sc.corrupt,
                             offset=1 if cheating else 0)
    if trial.ok:
        if cheating:
            return "failure", "cheat slipped through the probe", {}, 0
        return "success", None, {}, 0
    if not trial.caught:
        return "violation", "failed without naming anyone", {}, 0
    if not trial.caught <= sc.corrupt:
        return ("violation",
                f"honest parties discarded: {sorted(trial.caught - sc.corrupt)}",
                {}, 0)
    return "success", None, {}, 0


def _run_triples(sc, seed):
    sim, spec, fc, rc, layer, eng = _triples_sim(sc, seed)
    strat = _apply_corruption(sim, sc)
    try:
        for i in _driven(sim, strat):
            eng[i].triples_start("t", sc.batch)
        res = sim.run()
    except Exception as exc:
        return "violation", f"{type(exc).__name__}: {exc}", {}, 0
    honest = sim.honest_ids()
    rows = {}
    for i in honest:
        out = eng[i].outputs.get(("triples", "t"))
        if out is None:
            return ("violation", f"party {i} produced no triples",
                    _scalar_metrics(sim), res.steps)
        rows[i] = out
    for ell in range(sc.batch):
        vals = [_open(sc.field, spec, [rows[i][ell][k] for i in honest])
                for k in range(3)]
        if None in vals or sc.field.mul(vals[0], vals[1]) != vals[2]:
            return ("violation", f"triple {ell} is not multiplicative",
                    _scalar_metrics(sim), res.steps)
    for i in honest:
        bad = set()
        for ms in getattr(eng[i], "mults", {}).values():
            bad |= set(ms.discarded)
        for ss in getattr(eng[i], "stats", {}).values():
            bad |= set(ss.gd)
        if bad - set(sc.corrupt):
            return ("violation", f"honest party discarded by {i}",
                    _scalar_metrics(sim), res.steps)
    return "success", None, _scalar_metrics(sim), res.steps


def _run_ampc(sc, seed):
    rng = random.Random(seed)
    circuit = Circuit.random(sc.n, rng)
    inputs = [sc.field.rand(rng) for _ in range(sc.n)]
    spec = sharing_spec(sc.z)
    # cheat-triggered triple retries roughly double the traffic of a big
    # statistical run, which can brush the default livelock ceiling
    sim = Sim(seed, n=sc.n, budget=20 * 10**6)
    FabaOracle(sim.add_oracle("faba"), sc.z)
    fc = {i: FabaClient(sim.nodes[i]) for i in sim.party_ids}
    rc = {i: RecEngine(sim.nodes[i], sc.field, spec, sc.z)
          for i in sim.party_ids}
    layer, _ = _vss_layer(sim, sc, spec)
    if sc.layer == "hybrid":
        triples = OracleTriplesLayer(sim, sc.field, spec, sc.z)
    else:
        cls = MultEngine if sc.security == "perfect" else StatMultEngine
        triples = ComposedTriplesLayer(
            {i: cls(sim.nodes[i], sc.field, spec, sc.z, layer, fc[i], rc[i])
             for i in sim.party_ids})
    eng = {i: AmpcEngine(sim.nodes[i], sc.field, spec, sc.z, circuit, layer,
                         fc[i], rc[i], triples)
           for i in sim.party_ids}
    strat = _apply_corruption(sim, sc)
    try:
        for i in _driven(sim, strat):
            eng[i].start(inputs[i - 1])
        res = sim.run()
    except Exception as exc:
        return "violation", f"{type(exc).__name__}: {exc}", {}, 0
    honest = sim.honest_ids()
    cs = {eng[i].cs for i in honest}
    if len(cs) != 1 or None in cs:
        return ("violation", "no agreed provider set",
                _scalar_metrics(sim), res.steps)
    cs = cs.pop()
    realized = []
    for j in sim.party_ids:
        if j not in cs:
            realized.append(0)
            continue
        v = _open(sc.field, spec, [eng[i].input_shares[j] for i in honest])
        if v is None:
            return ("violation", f"input of {j} not well shared",
                    _scalar_metrics(sim), res.steps)
        realized.append(v)
    want = fampc_oracle(sc.field, sc.z, circuit, realized, cs)
    for i in honest:
        if not eng[i].terminated or eng[i].result != want:
            return ("violation", f"party {i} ended with {eng[i].result}, "
                    f"reference says {want}", _scalar_metrics(sim), res.steps)
    # online cost rule: each multiplication opens exactly two values
    expect = {f"mul/{ell}/{k}" for ell in range(1, circuit.mul_count + 1)
              for k in ("d", "e")}
    for i in honest:
        got = {sid for sid in rc[i].outputs if sid.startswith("mul/")}
        if got != expect:
            return ("violation", "per-multiplication opening sessions are off",
                    _scalar_metrics(sim), res.steps)
    return "success", None, _scalar_metrics(sim), res.steps


RUNNERS = {
    "acast": _run_acast,
    "rec": _run_rec,
    "pvss": _run_vss,
    "svss": _run_vss,
    "aicp": _run_aicp,
    "randmultci": _run_randmultci,
    "pertriples": _run_triples,
    "stattriples": _run_triples,
    "ampc": _run_ampc,
}


def _worker(args):
    cfg, seed = args
    sc = parse_scenario(cfg)
    return RUNNERS[sc.protocol](sc, seed)


# -- aggregation --------------------------------------------------------------------


def run_scenario(cfg, jobs=1):
    """Validate cfg, run all its trials, aggregate into a Report."""
    sc = parse_scenario(cfg)
    t0 = time.perf_counter()
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_worker, [(cfg, s) for s in sc.seeds],
                                    chunksize=max(1, len(sc.seeds) // (jobs * 4))))
    else:
        runner = RUNNERS[sc.protocol]
        results = [runner(sc, s) for s in sc.seeds]
    wall = time.perf_counter() - t0

    counts = {"success": 0, "failure": 0, "violation": 0}
    notes = []
    agg = {}
    steps = 0
    for seed, (outcome, note, metrics, st) in zip(sc.seeds, results):
        counts[outcome] += 1
        if note is not None and len(notes) < 20:
            notes.append({"seed": seed, "outcome": outcome, "note": note})
        steps += st
        for k, v in metrics.items():
            slot = agg.setdefault(k, [0, None, None])
            slot[0] += v
            slot[1] = v if slot[1] is None else min(slot[1], v)
            slot[2] = v if slot[2] is None else max(slot[2], v)

    trials = len(sc.seeds)
    lo, hi = wilson(counts["failure"], trials)
    data = {
        "scenario": sc.raw,
        "trials": trials,
        "successes": counts["success"],
        "failures": counts["failure"],
        "violations": counts["violation"],
        "error_rate": {
            "estimate": counts["failure"] / trials if trials else 0.0,
            "wilson_3sigma": [lo, hi],
        },
        "metrics": {k: {"total": v[0], "mean": v[0] / trials,
                        "min": v[1], "max": v[2]}
                    for k, v in sorted(agg.items())},
        "sim_steps": steps,
        "notes": notes,
    }
    return Report(data, wall)


def run_config(cfg, seeds_override=None, jobs=1):
    """Run a config holding one scenario or a "scenarios" list.

    Returns (reports, combined_dict, total_wall_seconds); raises
    ScenarioError if any scenario fails validation (nothing runs).
    """
    raw_list = cfg["scenarios"] if "scenarios" in cfg else [cfg]
    problems = []
    prepared = []
    for idx, raw in enumerate(raw_list):
        raw = dict(raw)
        if seeds_override is not None:
            raw["seeds"] = seeds_override
            raw.pop("trials", None)
        try:
            parse_scenario(raw)
        except ScenarioError as exc:
            problems.extend(f"scenario {idx}: {p}" for p in exc.problems)
        prepared.append(raw)
    if problems:
        raise ScenarioError(problems)
    reports = [run_scenario(raw, jobs=jobs) for raw in prepared]
    combined = {"reports": [r.data for r in reports]}
    return reports, combined, sum(r.wall_time_s for r in reports)


def report_bytes(data):
    """Canonical serialization used for written reports."""
    return (json.dumps(data, indent=2, sort_keys=True) + "\n").encode()


# -- complexity sweep -----------------------------------------------------------------


def complexity_sweep(protocol, structures, field=None, base_seed=0):
    """Cost-per-multiplication trend over growing adversary structures.

    For the triple pipelines the cost is the number of values pushed
    through the sharing layer per finished triple (one dealt field
    element each); for plain reconstruction it is field elements on the
    wire per opening. Returns the measured points and the fitted
    log-log slope against |Z|.
    """
    if len(structures) < 3:
        raise ValueError("need at least 3 structure sizes")
    if field is None:
        field = Field(97)
    points = []
    for off, z in enumerate(structures):
        seed = base_seed + off
        if protocol == "rec":
            spec = sharing_spec(z)
            rng = random.Random(seed)
            full = FullSharing.random(field, spec.h, field.rand(rng), rng)
            sim = Sim(seed, n=z.n)
            eng = {i: RecEngine(sim.nodes[i], field, spec, z)
                   for i in sim.party_ids}
            for i in sim.party_ids:
                eng[i].start_rec("r", full.vector_for(spec, i))
            sim.run()
            cost = sim.metrics.by_proto["rec"][0]
        elif protocol in ("pertriples", "stattriples"):
            cfg = {"protocol": protocol, "n": z.n,
                   "structure": [sorted(s) for s in z.sets],
                   "field": field.p, "seeds": 1}
            sc = parse_scenario(cfg)
            sim, spec, fc, rc, layer, eng = _triples_sim(sc, seed)
            for i in sim.party_ids:
                eng[i].triples_start("t", 1)
            sim.run()
            cost = sim.metrics.counters["fvss_calls"]
        else:
            raise ValueError(f"no sweep defined for protocol {protocol!r}")
        points.append({"z_size": z.h, "n": z.n, "cost": cost})
    xs = [math.log(p["z_size"]) for p in points]
    ys = [math.log(p["cost"]) for p in points]
    xbar, ybar = sum(xs) / len(xs), sum(ys) / len(ys)
    slope = (sum((x - xbar) * (y - ybar) for x, y in zip(xs, ys))
             / sum((x - xbar) ** 2 for x in xs))
    return {"protocol": protocol, "points": points, "slope": slope}
