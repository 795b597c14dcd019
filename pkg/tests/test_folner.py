"""Folner family, ratio, modulus, greedy-construction and refinement tests.

Brute-force oracles here use nothing but frozensets and the group law, so the
closed-form and packed-array routes are checked against literal set
arithmetic.
"""

import json
import random
from fractions import Fraction

import pytest

from ergolab import (
    ConstructionBudgetError,
    ExplicitFamily,
    ModulusNotFoundError,
    RefinementWindowError,
    StructureError,
    box_ratio,
    build_modulus_table,
    check_fast,
    check_modulus,
    convergence_modulus,
    envelope,
    family_from_jsonable,
    fast_refinement,
    folner_ratio,
    greedy_folner,
    group_by_name,
    standard_family,
    worst_ratio_table,
)
from ergolab.folner import ModulusEntry, ModulusTable

Z = group_by_name("Z")
Z2 = group_by_name("Z^2")
H3 = group_by_name("H3")


def brute_ratio(group, elems, g):
    """|F delta gF| / |F| straight from the definition."""
    s = frozenset(elems)
    gs = frozenset(group.multiply(g, x) for x in s)
    return Fraction(len(s ^ gs), len(s))


# ---------------------------------------------------------------------------
# standard families and ratios
# ---------------------------------------------------------------------------


def test_standard_family_cards():
    assert sorted(standard_family(Z, 5).elements(3)) == list(range(-3, 4))
    assert standard_family(Z, 5).card(3) == 7
    assert standard_family(Z2, 5).card(2) == 25
    assert standard_family(H3, 3).card(1) == 27


def test_ratio_identity_is_zero():
    for group in (Z, Z2, H3):
        fam = standard_family(group, 4)
        for n in range(1, 5):
            assert fam.ratio(n, group.identity) == 0
            assert folner_ratio(fam, n, group.identity) == 0


def test_ratio_z_example():
    fam = standard_family(Z, 10)
    assert folner_ratio(fam, 5, 2) == Fraction(4, 11)
    assert fam.ratio(5, 2) == Fraction(4, 11)


def test_ratio_z2_axis_example():
    fam = standard_family(Z2, 10)
    for m in range(1, 11):
        assert folner_ratio(fam, m, (1, 0)) == Fraction(2, 2 * m + 1)


@pytest.mark.parametrize("group", [Z, Z2], ids=lambda g: g.name)
def test_closed_form_equals_set_arithmetic(group):
    fam = standard_family(group, 8)
    rng = random.Random(2311)
    pool = group.enumerate_prefix(40)
    for m in range(1, 9):
        for g in rng.sample(pool, 12):
            expected = brute_ratio(group, fam.elements(m), g)
            assert fam.ratio(m, g) == expected
            assert folner_ratio(fam, m, g) == expected


def test_h3_overlap_formula_against_brute_force():
    fam = standard_family(H3, 3)
    rng = random.Random(7)
    pool = H3.enumerate_prefix(80)
    for r in (1, 2):
        for g in rng.sample(pool, 15):
            assert fam.ratio(r, g) == brute_ratio(H3, fam.elements(r), g)


def test_explicit_family_packed_path_matches_sets():
    rng = random.Random(5)
    sets = [frozenset(rng.sample(range(-500, 500), 80)) for _ in range(3)]
    fam = ExplicitFamily(Z, sets)
    for n in range(1, 4):
        for g in (-7, 3, 250):
            assert fam.ratio(n, g) == brute_ratio(Z, sets[n - 1], g)


def test_empty_set_rejected():
    with pytest.raises(StructureError):
        ExplicitFamily(Z, [set()])


# ---------------------------------------------------------------------------
# convergence moduli
# ---------------------------------------------------------------------------


def test_modulus_z_analytic_example():
    fam = standard_family(Z, 60)
    entry = convergence_modulus(fam, 5, Fraction(1, 10))
    assert entry.value == 50 and entry.kind == "analytic" and entry.certified_up_to is None


def test_modulus_small_examples():
    fam = standard_family(Z, 60)
    assert convergence_modulus(fam, 1, Fraction(1, 2)).value == 2
    # ratios are at most 2, so any tolerance above 2 certifies from the start
    assert convergence_modulus(fam, 1, Fraction(5, 2)).value == 1
    assert convergence_modulus(fam, 7, Fraction(5, 2)).value == 1


def test_modulus_empirical_matches_analytic_on_boxes():
    boxes = standard_family(Z, 60)
    explicit = ExplicitFamily(Z, [boxes.elements(n) for n in range(1, 61)])
    for n, eps in [(5, Fraction(1, 10)), (1, Fraction(1, 2)), (3, Fraction(1, 4))]:
        analytic = convergence_modulus(boxes, n, eps)
        empirical = convergence_modulus(explicit, n, eps, m_max=60)
        assert empirical.value == analytic.value
        assert empirical.kind == "empirical" and empirical.certified_up_to == 60


def test_modulus_not_found_carries_data():
    fam = ExplicitFamily(Z, [set(range(-n, n + 1)) for n in range(1, 6)])
    with pytest.raises(ModulusNotFoundError) as err:
        convergence_modulus(fam, 4, Fraction(1, 100), m_max=5)
    assert err.value.n == 4 and err.value.m_max == 5
    assert err.value.worst_by_m[5] >= Fraction(1, 100)


def test_modulus_h3_empirical_and_reverified():
    fam = standard_family(H3, 12)
    entry = convergence_modulus(fam, 1, Fraction(1, 2), m_max=12)
    assert entry.kind == "empirical" and entry.certified_up_to == 12
    # independent re-verification by literal set arithmetic over the window
    for m in range(entry.value, 13):
        for g in fam.elements(1):
            assert folner_ratio(fam, m, g) < Fraction(1, 2)
    if entry.value > 1:
        assert any(
            folner_ratio(fam, entry.value - 1, g) >= Fraction(1, 2) for g in fam.elements(1)
        )


def test_modulus_entries_reverify():
    fam = standard_family(Z, 60)
    for n in (1, 3, 5):
        for eps in (Fraction(1, 4), Fraction(1, 7)):
            entry = convergence_modulus(fam, n, eps)
            assert check_modulus(fam, n, eps, entry.value, 60)
            if entry.value > 1:
                # minimality: the window check must fail one step earlier
                assert not check_modulus(fam, n, eps, entry.value - 1, 60)


def test_envelope_running_max_and_idempotence():
    eps = Fraction(1, 3)
    entries = [
        ModulusEntry(n=i + 1, epsilon=eps, value=v, kind="empirical", certified_up_to=9)
        for i, v in enumerate([3, 2, 5])
    ]
    table = ModulusTable("Z", "explicit", entries)
    env = envelope(table)
    assert [env.value(n, eps) for n in (1, 2, 3)] == [3, 3, 5]
    env2 = envelope(env)
    assert [env2.value(n, eps) for n in (1, 2, 3)] == [3, 3, 5]
    single = envelope(ModulusTable("Z", "explicit", entries[:1]))
    assert single.value(1, eps) == 3


def test_envelope_missing_entries_raise():
    eps = Fraction(1, 3)
    table = ModulusTable(
        "Z", "explicit", [ModulusEntry(n=2, epsilon=eps, value=4, kind="empirical", certified_up_to=9)]
    )
    with pytest.raises(StructureError):
        envelope(table)


def test_modulus_table_roundtrip():
    fam = standard_family(Z, 30)
    table = build_modulus_table(fam, range(1, 6), [Fraction(1, 4), Fraction(1, 9)])
    back = ModulusTable.from_jsonable(json.loads(json.dumps(table.to_jsonable())))
    assert back.entries.keys() == table.entries.keys()
    for key, entry in table.entries.items():
        assert back.entries[key] == entry


# ---------------------------------------------------------------------------
# greedy construction
# ---------------------------------------------------------------------------


def test_greedy_seed_and_second_stage():
    fam = greedy_folner(Z, 2)
    assert fam.elements(1) == frozenset({0})
    assert fam.elements(2) == frozenset({0, 1})
    assert fam.provenance == "greedy-constructed"


def test_greedy_guarantee_small_window():
    fam = greedy_folner(Z, 6)
    for n in range(2, 7):
        bound = Fraction(3, n)
        for g in fam.elements(n - 1):
            assert fam.ratio(n, g) < bound


def test_greedy_is_nested_and_contains_enumeration():
    fam = greedy_folner(Z, 6)
    enum = Z.enumerate_prefix(6)
    for n in range(1, 6):
        assert fam.elements(n) <= fam.elements(n + 1)
        assert enum[n - 1] in fam.elements(n)


def test_greedy_budget_exhaustion():
    with pytest.raises(ConstructionBudgetError) as err:
        greedy_folner(Z, 6, search_budget=2)
    assert err.value.budget == 2
    assert err.value.stage >= 2


def test_greedy_z2_small():
    fam = greedy_folner(Z2, 4)
    for n in range(2, 5):
        bound = Fraction(3, n)
        for g in fam.elements(n - 1):
            assert fam.ratio(n, g) < bound


# ---------------------------------------------------------------------------
# fast refinement and fastness checks
# ---------------------------------------------------------------------------


def test_refinement_first_steps_z_boxes():
    refined = fast_refinement(standard_family(Z, 100), Fraction(1, 2))
    assert refined.indices[0] == 1
    assert refined.indices[1] == 2  # least m with 2/(2m+1) < 1/2
    assert refined.provenance == "refined"


def test_refinement_matches_generic_scan():
    # the closed-form jump on boxes must agree with a literal scan on the
    # same sets stored explicitly
    boxes = standard_family(Z, 200)
    explicit = ExplicitFamily(Z, [boxes.elements(n) for n in range(1, 201)])
    for eps in (Fraction(1, 2), Fraction(1, 3), Fraction(2, 1)):
        a = fast_refinement(boxes, eps, count=5)
        b = fast_refinement(explicit, eps, count=5)
        assert a.indices == b.indices


def test_refinement_trivial_when_eps_large():
    refined = fast_refinement(standard_family(Z, 12), Fraction(5, 2))
    assert refined.indices == list(range(1, 13))
    refined2 = fast_refinement(standard_family(Z, 12), Fraction(2, 1))
    assert refined2.indices == list(range(1, 13))


def test_refinement_window_exhausted():
    with pytest.raises(RefinementWindowError) as err:
        fast_refinement(standard_family(Z, 10), Fraction(1, 5), count=6)
    assert err.value.requested == 6
    assert err.value.found[0] == 1


def test_refined_passes_check_fast():
    for eps in (Fraction(1, 2), Fraction(1, 5)):
        refined = fast_refinement(standard_family(Z, 10**6), eps, count=7)
        report = check_fast(refined, 1, eps, 7)
        assert report.ok, report.violation


def test_check_fast_box_failure():
    report = check_fast(standard_family(Z, 20), 1, Fraction(1, 10), 20)
    assert not report.ok
    n, m, g, ratio = report.violation
    assert ratio >= Fraction(1, 10)
    # the reported witness must be a real violation of the definition
    assert standard_family(Z, 20).ratio(m, g) == ratio and m >= n + 1


def test_check_fast_trivial_eps():
    assert check_fast(standard_family(Z, 20), 1, Fraction(5, 2), 20).ok


def test_check_fast_matches_explicit_route():
    boxes = standard_family(Z, 15)
    explicit = ExplicitFamily(Z, [boxes.elements(n) for n in range(1, 16)])
    for lam in (1, 3):
        for eps in (Fraction(1, 10), Fraction(1, 2), Fraction(3, 2)):
            a = check_fast(boxes, lam, eps, 15)
            b = check_fast(explicit, lam, eps, 15)
            assert a.ok == b.ok
            if not a.ok:
                assert a.violation[:2] == b.violation[:2]  # same first (n, m) pair


# ---------------------------------------------------------------------------
# helpers and serialization
# ---------------------------------------------------------------------------


def test_worst_ratio_table_matches_direct_loops():
    fam = greedy_folner(Z, 5)
    table = worst_ratio_table(fam, 4, 5)
    for n in range(1, 5):
        for m in range(1, 6):
            direct = max(fam.ratio(m, g) for g in fam.elements(n))
            assert table[(n, m)] == direct


def test_family_serialization_roundtrips():
    for fam in (
        standard_family(Z2, 6),
        greedy_folner(Z, 4),
        fast_refinement(standard_family(Z, 50), Fraction(1, 2), count=4),
    ):
        data = json.loads(json.dumps(fam.to_jsonable()))
        back = family_from_jsonable(data)
        assert back.n_max == fam.n_max
        assert back.provenance == fam.provenance
        for n in range(1, min(fam.n_max, 4) + 1):
            assert back.card(n) == fam.card(n)
            if fam.card(n) < 10_000:
                assert back.elements(n) == fam.elements(n)


def test_box_ratio_clamps_to_two():
    # disjoint translate: the ratio saturates at 2
    assert box_ratio(Z, 1, 10) == 2
    assert box_ratio(Z2, 1, (10, 0)) == 2
