from itertools import combinations_with_replacement

from hypothesis import given, settings, strategies as st

from asyncmpc.structures import (
    AdversaryStructure, mask_of, parties_of, sharing_spec,
    q_condition, q_condition_spec,
)


def cover_oracle(sets, subset, k):
    """Independent Q^(k) check: brute force over all k-multisets of all sets
    (no maximal-set filtering, no bitmasks)."""
    subset = set(subset)
    for combo in combinations_with_replacement(sets, k):
        union = set()
        for s in combo:
            union.update(s)
        if subset <= union:
            return False
    return True


def test_mask_roundtrip():
    assert parties_of(mask_of([3, 1])) == (1, 3)
    assert mask_of([]) == 0
    assert parties_of(0) == ()


def test_q_condition_singletons_n4():
    z = AdversaryStructure.singletons(4)
    p = range(1, 5)
    assert q_condition(p, z, 3) is True
    assert q_condition(p, z, 4) is False


def test_q_condition_pairs_n6():
    sets = [(1, 2), (3, 4), (5, 6)]
    z = AdversaryStructure(6, sets)
    p = range(1, 7)
    assert q_condition(p, z, 2) is True
    assert q_condition(p, z, 3) is False
    # agrees with the brute-force oracle
    for k in (1, 2, 3, 4):
        assert q_condition(p, z, k) == cover_oracle(sets, p, k)


def test_q_condition_ignores_nonmaximal_sets():
    # adding subsets of existing sets must not change any predicate
    base = AdversaryStructure(5, [(1, 2), (3,), (4,), (5,)])
    padded = AdversaryStructure(5, [(1, 2), (1,), (2,), (3,), (4,), (5,)])
    for k in (1, 2, 3, 4):
        for subset in ([1, 2, 3], [1, 2, 3, 4, 5], [5]):
            assert base.q_condition(subset, k) == padded.q_condition(subset, k)
            assert base.q_condition(subset, k) == cover_oracle(base.sets, subset, k)


def test_sharing_spec_complements():
    z = AdversaryStructure.singletons(4)
    s = sharing_spec(z)
    assert s.groups == ((2, 3, 4), (1, 3, 4), (1, 2, 4), (1, 2, 3))

    s5 = sharing_spec(AdversaryStructure.singletons(5))
    assert all(len(g) == 4 for g in s5.groups)


def test_sharing_spec_z_privacy():
    for z in (AdversaryStructure.singletons(4),
              AdversaryStructure(6, [(1, 2), (3, 4), (5, 6)]),
              AdversaryStructure(5, [(1, 2), (3,), (4,), (5,)])):
        s = sharing_spec(z)
        for zm in z.masks:
            assert any(zm & sm == 0 for sm in s.masks), "some group must dodge each Z-set"


def test_sharing_spec_involution():
    z = AdversaryStructure(6, [(1, 2), (3, 4), (5, 6)])
    s = sharing_spec(z)
    complements = tuple(parties_of(s.full_mask & ~m) for m in s.masks)
    assert complements == z.sets


def test_q_condition_spec_examples():
    z5 = AdversaryStructure.singletons(5)
    assert q_condition_spec(sharing_spec(z5), z5, 3) is True
    z4 = AdversaryStructure.singletons(4)
    assert q_condition_spec(sharing_spec(z4), z4, 3) is False
    assert q_condition_spec(sharing_spec(z4), z4, 2) is True
    # oracle agreement over every group
    s4 = sharing_spec(z4)
    for k in (1, 2, 3):
        expected = all(cover_oracle(z4.sets, g, k) for g in s4.groups)
        assert q_condition_spec(s4, z4, k) == expected


TEST_STRUCTURES = [
    AdversaryStructure.singletons(4),
    AdversaryStructure.singletons(5),
    AdversaryStructure.singletons(6),
    AdversaryStructure.first_singletons(6, 4),
    AdversaryStructure(6, [(1, 2), (3, 4), (5, 6)]),
    AdversaryStructure(5, [(1, 2), (3,), (4,), (5,)]),
]


def test_q4_implies_q3_on_spec():
    # homes in on the containment the protocols lean on, exhaustively for
    # every structure the test-suite uses
    for z in TEST_STRUCTURES:
        p = range(1, z.n + 1)
        s = sharing_spec(z)
        if q_condition(p, z, 4):
            assert q_condition_spec(s, z, 3)
        if q_condition(p, z, 3):
            assert q_condition_spec(s, z, 2)


@settings(max_examples=150, deadline=None)
@given(data=st.data())
def test_q_condition_monotone(data):
    n = data.draw(st.integers(min_value=2, max_value=6))
    parties = list(range(1, n + 1))
    n_sets = data.draw(st.integers(min_value=1, max_value=4))
    sets = [
        tuple(data.draw(st.sets(st.sampled_from(parties), min_size=1, max_size=n)))
        for _ in range(n_sets)
    ]
    z = AdversaryStructure(n, sets)
    subset = data.draw(st.sets(st.sampled_from(parties), min_size=1, max_size=n))
    k = data.draw(st.integers(min_value=1, max_value=3))
    # a smaller subset is easier to cover: covered stays covered
    if not z.q_condition(subset, k):
        smaller = set(subset)
        smaller.discard(data.draw(st.sampled_from(sorted(subset))))
        if smaller:
            assert not z.q_condition(smaller, k), "shrinking the subset flipped false->true"
    # a smaller structure set only weakens the adversary: uncovered stays uncovered
    if z.q_condition(subset, k):
        victim = data.draw(st.sampled_from(range(len(z.sets))))
        shrunk = [set(s) for s in z.sets]
        if len(shrunk[victim]) > 1:
            shrunk[victim].remove(max(shrunk[victim]))
            z2 = AdversaryStructure(n, [tuple(s) for s in shrunk])
            assert z2.q_condition(subset, k), "shrinking a Z-set flipped true->false"


def test_canonical_ordering_and_dedup():
    z = AdversaryStructure(4, [(3,), (1,), (2,), (1,), (3,)])
    assert z.sets == ((1,), (2,), (3,))
    assert z.t == 1


def test_json_roundtrip():
    z = AdversaryStructure(6, [(1, 2), (3, 4), (5, 6)])
    again = AdversaryStructure.from_json(z.to_json())
    assert again.sets == z.sets and again.n == z.n


def test_pair_members():
    z = AdversaryStructure.singletons(4)
    s = sharing_spec(z)
    # S_1 = {2,3,4}, S_2 = {1,3,4}: intersection {3,4}
    assert parties_of(s.pair_members[(1, 2)]) == (3, 4)
    assert parties_of(s.pair_members[(1, 1)]) == (2, 3, 4)
