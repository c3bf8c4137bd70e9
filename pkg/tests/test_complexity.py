import pytest
from hypothesis import given
from hypothesis import strategies as st

from nfdx.complexity import (
    ArchDescriptor,
    ConvRecord,
    derive_arch,
    discrepancy_note,
    flops_count,
    format_report,
    parameter_count,
    report_csv,
    three_figures,
)
from nfdx.errors import ShapeError
from nfdx.nn import ArchConfig, init_model


@pytest.mark.parametrize("side, sides", [(100, (100, 50, 25)), (50, (50, 25, 12)), (150, (150, 75, 37))])
def test_m_sequence(side, sides):
    assert derive_arch(side).sides == sides


def test_parameter_count():
    arch = derive_arch(100)
    assert [r.params for r in arch.layers] == [1_728, 36_864, 73_728]
    assert parameter_count(arch) == 112_320
    assert parameter_count(ArchDescriptor(1, 1, (ConvRecord(1, 1, 1, 1),))) == 1


@pytest.mark.parametrize(
    "side, terms",
    [
        (100, (17_280_000, 92_160_000, 46_080_000)),
        (50, (4_320_000, 23_040_000, 10_616_832)),
        (150, (38_880_000, 207_360_000, 100_933_632)),
    ],
)
def test_flops_terms(side, terms):
    arch = derive_arch(side)
    assert tuple(r.flops for r in arch.layers) == terms
    assert flops_count(arch) == sum(terms)


def test_flops_totals():
    assert flops_count(derive_arch(100)) == 155_520_000
    assert three_figures(155_520_000) == 1.56e8
    assert flops_count(derive_arch(50)) == 37_976_832
    assert flops_count(derive_arch(150)) == 347_173_632


def test_ceil_alternative():
    assert derive_arch(50, pooling="ceil").sides == (50, 25, 13)
    assert flops_count(derive_arch(50, pooling="ceil")) == 39_820_032
    assert flops_count(derive_arch(150, pooling="ceil")) == 352_703_232


def test_derive_from_model():
    small = ArchConfig(side=8, filters=(2, 3, 4), kernel=5)
    arch = derive_arch(8, 3, init_model(small))
    assert [(r.in_channels, r.out_channels, r.kernel) for r in arch.layers] == [(3, 2, 5), (2, 3, 5), (3, 4, 5)]


@pytest.mark.parametrize("side", [7, 3, 0])
def test_too_small(side):
    with pytest.raises(ShapeError):
        derive_arch(side)


def test_notes():
    assert discrepancy_note(derive_arch(100)) is None
    note150 = discrepancy_note(derive_arch(150))
    assert "347,173,632" in note150 and "2.99e+08" in note150
    note50 = discrepancy_note(derive_arch(50))
    assert "37,976,832" in note50 and "39,820,032" in note50


def test_report():
    text = format_report(derive_arch(100))
    assert "112,320" in text and "155,520,000" in text
    lines = report_csv(derive_arch(100)).splitlines()
    assert lines[0] == "layer,n_in,n_out,m,k,params,flops"
    assert lines[-1] == "total,,,,,112320,155520000"


@given(st.integers(8, 400), st.integers(8, 400))
def test_params_independent_of_input_size(a, b):
    assert parameter_count(derive_arch(a)) == parameter_count(derive_arch(b)) == 112_320


@given(st.integers(8, 200), st.integers(1, 5))
def test_flops_scale_with_area(side, k):
    arch = derive_arch(side)
    assert flops_count(arch.scaled(k)) == k * k * flops_count(arch)
