import pytest

from oracles import torus_isohedral, torus_translation_tiles, two_copy_patches
from tessella.certify import verify_periodic
from tessella.errors import ValidationError
from tessella.isohedral import (
    ISOHEDRAL, K_ISOHEDRAL, NONE_UP_TO_BUDGET, hat_word, isohedral_certificate, isohedral_number_upper,
    k_copy_patches, translation_certificate, translation_criterion,
)
from tessella.polyform import boundary_word, builtin, enumerate_polyforms, make_polyform

MONO = make_polyform("square", [(0, 0)])
L_TROMINO = make_polyform("square", [(0, 0), (1, 0), (0, 1)])
OCTOMINO = make_polyform("square", [(0, 0), (1, 0), (-1, 1), (0, 1), (-1, 2), (-2, 3), (-1, 3), (-1, 4)])


def test_hat_word():
    assert hat_word("ENNW") == "ESSW"
    assert hat_word("EN") == "SW"


def test_monomino_factorization():
    f = translation_criterion(MONO)
    assert (f.A, f.B, f.C) == ("E", "N", "")
    assert hat_word(f.A) == "W" and hat_word(f.B) == "S"
    assert f.t1 == (0, -1) and f.t2 == (1, 0)


def test_factorization_rebuilds_the_word():
    for n in range(1, 7):
        for s in enumerate_polyforms("square", n):
            f = translation_criterion(s) if s.is_disk else None
            if f is None:
                continue
            word = boundary_word(s)
            rotated = word[f.offset:] + word[:f.offset]
            assert rotated == f.A + f.B + f.C + hat_word(f.A) + hat_word(f.B) + hat_word(f.C)


def test_l_tromino_against_torus():
    assert (translation_criterion(L_TROMINO) is not None) == torus_translation_tiles(L_TROMINO.cells)


def test_criterion_rejects_other_grids():
    with pytest.raises(ValidationError):
        translation_criterion(builtin("hat"))


def test_translation_certificates_verify():
    for s in enumerate_polyforms("square", 5):
        c = translation_certificate(s)
        assert c is None or verify_periodic(c, s)


def test_monomino_and_domino_certificates():
    c = isohedral_certificate(MONO)
    assert (c.t1, c.t2, c.classes) == ((1, 0), (0, 1), 1)
    assert verify_periodic(c, MONO)
    dom = make_polyform("square", [(0, 0), (1, 0)])
    c = isohedral_certificate(dom)
    assert c.classes == 1 and verify_periodic(c, dom)
    with pytest.raises(ValidationError):
        isohedral_certificate(MONO, depth=1)


def test_tetrominoes_against_torus_orbits():
    for s in enumerate_polyforms("square", 4):
        c = isohedral_certificate(s)
        assert (c is not None) == torus_isohedral(s.cells, max_tiles=4)
        assert c is None or verify_periodic(c, s)


def test_every_pentomino_is_isohedral():
    for s in enumerate_polyforms("square", 5):
        r = isohedral_number_upper(s, 1)
        assert r.status == ISOHEDRAL and r.k == 1
        assert verify_periodic(r.certificate, s)
        assert torus_isohedral(s.cells, max_tiles=4)


def test_upper_bound_consistency():
    for s in enumerate_polyforms("square", 6)[:12]:
        if isohedral_certificate(s) is not None:
            assert isohedral_number_upper(s, 2).k == 1


def test_octomino_needs_two_copies():
    assert isohedral_certificate(OCTOMINO) is None
    r = isohedral_number_upper(OCTOMINO, 2)
    assert r.status == K_ISOHEDRAL and r.k == 2
    assert verify_periodic(r.certificate, OCTOMINO)
    again = isohedral_number_upper(OCTOMINO, 3)
    assert (again.k, again.certificate.t1, again.certificate.t2) == (2, r.certificate.t1, r.certificate.t2)


def test_hat_has_no_small_certificate():
    r = isohedral_number_upper(builtin("hat"), 2)
    assert r.status == NONE_UP_TO_BUDGET and r.certificate is None


@pytest.mark.parametrize("n", [1, 2, 3, 4, 5])
def test_two_copy_patches_match_brute_force(n):
    for s in enumerate_polyforms("square", n):
        assert len(k_copy_patches(s, 2)) == len(two_copy_patches(s.cells))


@pytest.mark.parametrize("grid,n", [("hex", 4), ("tri", 6), ("kite", 4)])
def test_other_grid_certificates_verify(grid, n):
    found = 0
    for s in enumerate_polyforms(grid, n):
        c = isohedral_certificate(s)
        if c is not None:
            found += 1
            assert verify_periodic(c, s)
    assert found > 0
