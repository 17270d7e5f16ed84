import pytest

from oracles import euler_disk, naive_surround_exists
from tessella.certify import verify_patch
from tessella.corona import (
    BUDGET, NONTILER, SurroundProblem, encode_n_patch, find_surround, heesch_number, n_patch_exists,
    solve_n_patch, surroundable,
)
from tessella.errors import BudgetExceeded, ValidationError
from tessella.polyform import PatchData, builtin, enumerate_polyforms, make_polyform, place, prototile
from tessella.lattice import Isometry
from tessella import satcore

MONO = make_polyform("square", [(0, 0)])
# first polyomino in canonical order with no surround (found by scanning n = 1..7)
FIRST_UNSURROUNDABLE = (7, 106)


def first_unsurroundable():
    n, i = FIRST_UNSURROUNDABLE
    return enumerate_polyforms("square", n)[i]


def center(s):
    return PatchData([place(s, Isometry(0, (0, 0)))], [0])


def test_monomino_surround_is_the_moore_ring():
    for engine in ("backtrack", "sat"):
        ring = find_surround(SurroundProblem(center(MONO), []), engine)
        assert {c for p in ring for c in p.cells} == {(x, y) for x in (-1, 0, 1) for y in (-1, 0, 1)} - {(0, 0)}


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_small_polyominoes_are_surroundable(n):
    for s in enumerate_polyforms("square", n):
        assert surroundable(s) and surroundable(s, "sat")
    if n <= 3:
        assert all(naive_surround_exists(s.cells) for s in enumerate_polyforms("square", n))


def test_surround_agrees_with_brute_force_on_heptominoes():
    shapes = [s for s in enumerate_polyforms("square", 7) if s.is_disk]
    for s in shapes[96:106]:
        assert surroundable(s) == naive_surround_exists(s.cells), s.cells


def test_first_unsurroundable_polyomino():
    found = None
    for n in range(1, 8):
        for i, s in enumerate(enumerate_polyforms("square", n)):
            if s.is_disk and not surroundable(s):
                found = (n, i)
                break
        if found:
            break
    assert found == FIRST_UNSURROUNDABLE
    s = first_unsurroundable()
    assert not naive_surround_exists(s.cells)
    for engine in ("backtrack", "sat"):
        r = heesch_number(s, 2, engine)
        assert r.status == NONTILER and r.heesch_number == 0 and r.exact


def test_surround_restricted_to_candidates():
    dom = make_polyform("square", [(0, 0), (1, 0)])
    pt = prototile(dom)
    allowed = [pt.placement(q, dom) for q in sorted({pt.pid(Isometry(i, (0, 0))) for i in range(8)})]
    for engine in ("backtrack", "sat"):
        assert find_surround(SurroundProblem(center(dom), allowed), engine) is None


def test_monomino_heesch_levels():
    r = heesch_number(MONO, 3)
    assert r.status == BUDGET and r.heesch_number == 3 and not r.exact
    assert max(r.certificate.corona) == 3
    assert verify_patch(MONO, r.certificate)


def test_hat_two_patch():
    hat = builtin("hat")
    for engine in ("sat", "backtrack"):
        r = heesch_number(hat, 2, engine)
        assert r.status == BUDGET and r.heesch_number == 2
        assert verify_patch(hat, r.certificate)


def test_encoding_of_the_monomino():
    f, vm = encode_n_patch(MONO, 1)
    assert vm.counts["candidates"] == 9
    assert vm.counts["core_vars"] == 9 * 2
    assert f.num_vars == vm.counts["core_vars"] + vm.counts["aux_vars"]
    r = satcore.solve(f)
    assert r.status == satcore.SAT
    tiles = vm.decode(r.model)
    cells = {c for q, _ in tiles for c in prototile(MONO).cells_of(q)}
    assert len(tiles) == 9 and len(cells) == 9


def test_unsurroundable_shape_has_no_refined_model():
    s = first_unsurroundable()
    assert solve_n_patch(s, 1) is None
    # the raw encoding leaves hole-freeness to refinement: its models are
    # surrounds with holes, which the hole-tolerant search also finds
    f, vm = encode_n_patch(s, 1)
    r = satcore.solve(f)
    if r.status == satcore.SAT:
        assert n_patch_exists(s, 1, "backtrack", allow_holes=True) is not None


def test_monomino_two_patch():
    patch = solve_n_patch(MONO, 2)
    assert len(patch.placements) == 25
    assert sorted(patch.corona).count(2) == 16
    assert verify_patch(MONO, patch)


def test_budget_and_bad_input():
    s = enumerate_polyforms("square", 6)[8]
    with pytest.raises(BudgetExceeded):
        n_patch_exists(s, 2, "backtrack", budget=3)
    r = heesch_number(s, 2, "backtrack", budget=3)
    assert r.status == BUDGET and r.stats.get("budget")
    with pytest.raises(ValidationError):
        n_patch_exists(MONO, 1, engine="magic")
    holed = make_polyform("square", [(x, y) for x in range(3) for y in range(3) if (x, y) != (1, 1)])
    with pytest.raises(ValidationError):
        heesch_number(holed, 1)


def _corpus():
    out = []
    for grid, top in (("square", 6), ("hex", 4), ("tri", 4), ("kite", 4)):
        for n in range(1, top + 1):
            out += [pytest.param(s, id=f"{grid}{n}-{i}") for i, s in enumerate(enumerate_polyforms(grid, n))]
    return out


@pytest.mark.parametrize("shape", _corpus())
def test_engines_agree_and_certificates_verify(shape):
    for n in (1, 2):
        a = n_patch_exists(shape, n, "backtrack")
        b = n_patch_exists(shape, n, "sat")
        assert (a is None) == (b is None)
        for patch in (a, b):
            if patch is not None:
                assert verify_patch(shape, patch)
                cells = patch.cells()
                if shape.grid.value == "square":
                    assert euler_disk(cells)


def test_heesch_is_monotone_in_the_budget():
    for s in enumerate_polyforms("square", 7)[100:112]:
        if not s.is_disk:
            continue
        values = [heesch_number(s, m, "sat") for m in (1, 2)]
        if values[0].status == NONTILER:
            assert values[1].status == NONTILER and values[1].heesch_number == values[0].heesch_number
        else:
            assert values[1].heesch_number >= values[0].heesch_number


def test_zero_means_unsurroundable():
    for s in enumerate_polyforms("square", 7)[100:112]:
        if s.is_disk:
            r = heesch_number(s, 1, "sat")
            assert (r.status == NONTILER and r.heesch_number == 0) == (not surroundable(s))
