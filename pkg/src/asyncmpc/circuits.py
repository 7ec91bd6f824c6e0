"""Arithmetic circuits: fan-in-2 add/mul gates over one prime field.

Wire numbering: wires 0 .. n_inputs-1 are the inputs (party 1's inputs
first, then party 2's, ...), wire n_inputs + k is the output of gate k.
"""

import random

from .field import Field


class Circuit:
    __slots__ = ("parties", "inputs_per_party", "gates", "output")

    def __init__(self, parties: int, inputs_per_party: int, gates, output: int):
        self.parties = parties
        self.inputs_per_party = inputs_per_party
        self.gates = tuple((op, int(l), int(r)) for op, l, r in gates)
        self.output = output
        n_in = self.n_inputs
        for k, (op, l, r) in enumerate(self.gates):
            if op not in ("add", "mul"):
                raise ValueError(f"gate {k}: unknown op {op!r}")
            if not (0 <= l < n_in + k and 0 <= r < n_in + k):
                raise ValueError(f"gate {k} references a later or invalid wire")
        if not (0 <= output < n_in + len(self.gates)):
            raise ValueError("output wire out of range")

    @property
    def n_inputs(self) -> int:
        return self.parties * self.inputs_per_party

    @property
    def mul_count(self) -> int:
        return sum(1 for op, _, _ in self.gates if op == "mul")

    def eval_plaintext(self, field: Field, inputs):
        if len(inputs) != self.n_inputs:
            raise ValueError(f"expected {self.n_inputs} inputs, got {len(inputs)}")
        wires = [v % field.p for v in inputs]
        for op, l, r in self.gates:
            if op == "add":
                wires.append((wires[l] + wires[r]) % field.p)
            else:
                wires.append(wires[l] * wires[r] % field.p)
        return wires[self.output]

    def to_json(self):
        return {
            "parties": self.parties,
            "inputs_per_party": self.inputs_per_party,
            "gates": [list(g) for g in self.gates],
            "output": self.output,
        }

    @classmethod
    def from_json(cls, doc):
        return cls(int(doc["parties"]), int(doc["inputs_per_party"]),
                   doc["gates"], int(doc["output"]))


def random_circuit(rng: random.Random, parties: int, inputs_per_party: int = 1,
                   max_gates: int = 12, max_mul: int = 5) -> Circuit:
    """Random circuit within the given budget; always ends with >= 1 gate.

    Mul gates are drawn sparingly (the MPC cost is all in them), so the
    typical draw has 1-3 multiplications even when max_mul is 5.
    """
    n_in = parties * inputs_per_party
    n_gates = rng.randint(1, max_gates)
    gates = []
    muls = 0
    for k in range(n_gates):
        l = rng.randrange(n_in + k)
        r = rng.randrange(n_in + k)
        if muls < max_mul and rng.random() < 0.3:
            gates.append(("mul", l, r))
            muls += 1
        else:
            gates.append(("add", l, r))
    if muls == 0:
        # keep at least one mul so every circuit exercises the triple path
        l = rng.randrange(n_in)
        r = rng.randrange(n_in)
        gates.append(("mul", l, r))
    return Circuit(parties, inputs_per_party, gates, n_in + len(gates) - 1)
