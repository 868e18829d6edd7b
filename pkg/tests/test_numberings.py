"""Numberings: descriptors, products, function names, reductions."""
from __future__ import annotations

import pytest
from hypothesis import given
from hypothesis import strategies as st

from regtop import kernel
from regtop.kernel import Halted, OutOfFuel
from regtop.numberings import (
    CoSemiDeciderName,
    FunctionName,
    MultiNumberingDescriptor,
    NumberingDescriptor,
    SemiDeciderName,
    apply_fn_name,
    complement_roundtrip,
    identity_numbering,
    product_name,
    project_left,
    project_right,
    restrict_numbering,
    restrict_semidecider,
    semidecide,
)

HALT_CODE = kernel.assemble("HALT")
LOOP_CODE = kernel.assemble("JMP 0")
SUCC_CODE = kernel.assemble("INC 0\nHALT")


# ---------------------------------------------------------------------------
# Descriptors
# ---------------------------------------------------------------------------


def test_identity_numbering_is_total():
    nu = identity_numbering("nat")
    assert nu.id == "nat"
    assert nu.domain_oracle(0) and nu.domain_oracle(10**9)
    assert nu.semantics(17) == 17


def test_identity_numbering_with_limit():
    nu = identity_numbering("fin", limit=3)
    assert [nu.domain_oracle(n) for n in range(5)] == [
        True, True, True, False, False]
    assert nu.semantics(2) == 2


def test_point_equal_defaults_to_semantic_equality():
    nu = identity_numbering("nat")
    assert nu.point_equal(4, 4)
    assert not nu.point_equal(4, 5)


def test_point_equal_uses_equality_oracle():
    # names are equal mod 2
    nu = NumberingDescriptor(
        id="parity",
        domain_oracle=lambda n: True,
        semantics=lambda n: n % 2,
        equality_oracle=lambda a, b: (a - b) % 2 == 0,
    )
    assert nu.point_equal(3, 7)
    assert not nu.point_equal(3, 4)


def test_multi_numbering_names_sets():
    mu = MultiNumberingDescriptor(
        id="pairsets", semantics=lambda n: frozenset({n, n + 1}))
    assert mu.semantics(3) == frozenset({3, 4})
    assert mu.domain_oracle(3)


# ---------------------------------------------------------------------------
# Products
# ---------------------------------------------------------------------------


@given(st.integers(min_value=0, max_value=10**6),
       st.integers(min_value=0, max_value=10**6))
def test_product_projections_invert(n, m):
    nm = product_name(n, m)
    assert project_left(nm) == n
    assert project_right(nm) == m


def test_product_name_matches_kernel_pairing():
    assert product_name(3, 4) == kernel.pair(3, 4)


# ---------------------------------------------------------------------------
# Function names and semi-deciders
# ---------------------------------------------------------------------------


def test_apply_fn_name_runs_the_code():
    f = FunctionName(SUCC_CODE, "nat", "nat")
    out = apply_fn_name(f, 41, fuel=100)
    assert out == Halted(value=42, steps=2)


def test_apply_fn_name_reports_fuel_exhaustion():
    f = FunctionName(LOOP_CODE, "nat", "nat")
    out = apply_fn_name(f, 0, fuel=50)
    assert out == OutOfFuel(steps=50)


def test_semidecide_positive_and_negative():
    sd = SemiDeciderName(HALT_CODE, "nat")
    assert isinstance(semidecide(sd, 9, fuel=10), Halted)
    sd_empty = SemiDeciderName(LOOP_CODE, "nat")
    assert isinstance(semidecide(sd_empty, 9, fuel=10), OutOfFuel)


def test_semidecide_accepts_cosd_names_too():
    co = CoSemiDeciderName(HALT_CODE, "nat")
    assert isinstance(semidecide(co, 0, fuel=10), Halted)


# ---------------------------------------------------------------------------
# Restriction and complement bookkeeping
# ---------------------------------------------------------------------------


def test_restrict_numbering_narrows_domain():
    nu = identity_numbering("nat")
    evens = restrict_numbering(nu, lambda x: x % 2 == 0, id="evens")
    assert evens.id == "evens"
    assert evens.domain_oracle(4)
    assert not evens.domain_oracle(5)
    assert evens.semantics(4) == 4


def test_restrict_numbering_composes_with_existing_domain():
    nu = identity_numbering("fin", limit=10)
    small_evens = restrict_numbering(nu, lambda x: x % 2 == 0)
    assert small_evens.domain_oracle(8)
    assert not small_evens.domain_oracle(12)   # outside the original limit
    assert not small_evens.domain_oracle(7)


def test_restrict_semidecider_rebinds_subject():
    nu = identity_numbering("nat")
    evens = restrict_numbering(nu, lambda x: x % 2 == 0, id="evens")
    sd = SemiDeciderName(HALT_CODE, "nat")
    sd2 = restrict_semidecider(sd, evens)
    assert sd2.code == sd.code
    assert sd2.subject == "evens"


def test_complement_roundtrip_swaps_reading_not_code():
    co = CoSemiDeciderName(LOOP_CODE, "nat")
    sd = complement_roundtrip(co)
    assert isinstance(sd, SemiDeciderName)
    assert sd.code == co.code
    assert sd.subject == co.subject
