"""Tests for the standard and canonical bases, the KL matrix and IM."""

import pytest

from app.core.config import BUNDLED_FIXTURES
from app.core.exceptions import InvariantViolation
from app.services.bases import (
    OpenCandidate,
    base_normalization,
    compute_bases,
    im_involution,
    kl_matrix,
    local_suffix,
    match_open_blocks,
    mirror_family,
    multiplicity_matrix,
    open_orbit_param,
    regular_case_expectation,
)
from app.services.exactfield import V, RationalFunction
from app.services.fixtures import load_fixture, run_fixture
from app.services.kspace import GradedContext, KVector, irr_count
from app.services.orbits import OrbitParam
from app.services.rootsys import build, vector


@pytest.fixture
def a1_family():
    """Bases of A1 at its regular character."""
    ctx = GradedContext(build("A1").full, vector((1, -1)))
    return compute_bases(ctx)


class TestHelpers:
    """Test cases for labelling and normalization helpers."""

    @pytest.mark.parametrize(
        "k,m,suffix",
        [(0, 1, ""), (0, 2, "t"), (1, 2, "s"), (2, 3, "_3"), (3, 4, "_4")],
    )
    def test_local_suffix(self, k, m, suffix):
        """Test local system suffixes."""
        assert local_suffix(k, m) == suffix

    def test_base_normalization(self):
        """Test v^N over the Poincare polynomial in v^2."""
        rs = build("A1")
        assert base_normalization(rs.subsystem([])) == 1
        assert str(base_normalization(rs.full)) == "v/(1+v^2)"

    def test_open_blocks_paired_by_source(self):
        """Test that open candidates of the two signs pair up by source."""
        plus = [OpenCandidate(k, KVector(), KVector(), []) for k in (0, 2)]
        minus = [OpenCandidate(k, KVector(), KVector(), []) for k in (0, 2)]
        assert match_open_blocks(plus, minus) == list(zip(plus, minus))

    def test_open_block_sources_differ(self):
        """Test that different sources for the two signs are an invariant violation."""
        plus = [OpenCandidate(k, KVector(), KVector(), []) for k in (0, 1)]
        minus = [OpenCandidate(k, KVector(), KVector(), []) for k in (0, 2)]
        with pytest.raises(InvariantViolation) as exc_info:
            match_open_blocks(plus, minus)
        assert exc_info.value.context == {"plus": [0, 1], "minus": [0, 2]}

    def test_open_orbit_must_be_unique(self):
        """Test that a parameter set needs exactly one open orbit."""
        rs = build("A1")
        empty = frozenset()
        closed = OrbitParam(vector((0, 0)), empty, empty, empty, 0, label="0")
        levi = frozenset(rs.full.roots)
        opened = OrbitParam(vector((1, -1)), levi, empty, empty, 1, True, "1")
        assert open_orbit_param([closed, opened]) is opened
        with pytest.raises(InvariantViolation) as exc_info:
            open_orbit_param([closed])
        assert exc_info.value.context["orbits"] == ["0"]


class TestRankOne:
    """Test cases for A1 at the regular character."""

    def test_standard_basis(self, a1_family):
        """Test Z- = {[chi], [s chi] + v[chi]}."""
        chi, flipped = vector((1, -1)), vector((-1, 1))
        assert a1_family.labels == ["0", "1"]
        assert a1_family.zminus[0].vec == KVector.basis(chi)
        assert a1_family.zminus[1].vec == KVector.basis(flipped) + V * KVector.basis(chi)

    def test_canonical_basis(self, a1_family):
        """Test that U- consists of single cosets."""
        chi, flipped = vector((1, -1)), vector((-1, 1))
        assert [el.vec for el in a1_family.uminus] == [
            KVector.basis(chi),
            KVector.basis(flipped),
        ]

    def test_kl_matrix(self, a1_family):
        """Test N and P for two parameters."""
        mult = kl_matrix(multiplicity_matrix(a1_family))
        assert mult.n_matrix[0, 1] == -V
        assert mult.n_matrix[1, 0] == 0
        assert mult.p_matrix == [[{0: 1}, {0: 1}], [{}, {0: 1}]]
        assert mult.signs == [1, -1]

    def test_im(self, a1_family):
        """Test that IM swaps the zero and open orbits."""
        assert im_involution(a1_family) == {"0": "1", "1": "0"}

    def test_family_size(self, a1_family):
        """Test that the family is a basis of K/Rad."""
        assert len(a1_family) == irr_count(a1_family.ctx) == 2
        assert a1_family.block_sizes() == {"0": 1, "1": 1}


class TestCentralCharacter:
    """Test cases for the base case of the recursion."""

    def test_zero_character(self):
        """Test that chi = 0 has one parameter on the zero orbit."""
        rs = build("A1")
        family = compute_bases(GradedContext(rs.full, vector((0, 0))))
        assert family.labels == ["0"]
        assert family.zminus[0].vec == KVector.basis(
            vector((0, 0)), RationalFunction.parse("v/(1+v^2)")
        )
        assert im_involution(family) == {"0": "0"}
        mult = kl_matrix(multiplicity_matrix(family))
        assert mult.p_matrix == [[{0: 1}]]


class TestFixtures:
    """Test cases reproducing transcribed tables."""

    @pytest.mark.parametrize("name", ["sp4.json", "gl4.json", "form_a2.json", "form_c2.json"])
    def test_small_fixture(self, name):
        """Test that the small tables are reproduced cell for cell."""
        result = run_fixture(load_fixture(BUNDLED_FIXTURES / name))
        assert result.error is None
        assert result.mismatches == []
        assert result.checked > 0

    def test_sp4_open_block(self, sp4_family):
        """Test the two local systems on the open orbit of sp(4)."""
        assert sp4_family.labels == ["0", "2", "3t", "3s"]
        assert sp4_family.block_sizes() == {"0": 1, "2": 1, "3": 2}
        assert sp4_family.orbits[-1].meta["component_group"] == "Z/2Z"

    def test_gl4_im(self, gl4_family):
        """Test that IM is an involution exchanging the extreme orbits."""
        im = im_involution(gl4_family)
        assert im["0"] == "4"
        assert im["4"] == "0"
        assert all(im[im[x]] == x for x in im)

    def test_p_unit_upper_triangular(self, gl4_family):
        """Test the shape of the KL matrix."""
        mult = kl_matrix(multiplicity_matrix(gl4_family))
        n = len(gl4_family)
        for k in range(n):
            assert mult.p_matrix[k][k] == {0: 1}
            for j in range(k):
                if gl4_family.dims[j] < gl4_family.dims[k]:
                    assert mult.p_matrix[k][j] == {}
            for cell in mult.p_matrix[k]:
                assert all(c > 0 for c in cell.values())


class TestRegularCase:
    """Test cases for the closed form at a regular character."""

    def test_closed_form_a2(self, a2_context):
        """Test Z- and U- against the subset formula."""
        family = compute_bases(a2_context)
        expect = regular_case_expectation(a2_context)
        assert sorted(map(repr, expect.z)) == sorted(repr(el.vec) for el in family.zminus)
        assert sorted(map(repr, expect.u)) == sorted(repr(el.vec) for el in family.uminus)

    def test_subset_indicator(self, a2_context):
        """Test the indicator matrix of the subset order."""
        expect = regular_case_expectation(a2_context)
        assert len(expect.subsets) == 4
        assert expect.p[0] == [1, 1, 1, 1]
        assert expect.p[3] == [0, 0, 0, 1]

    def test_mirror(self, a2_context):
        """Test that Z+ is Z- relabelled by the longest element on the right."""
        family = compute_bases(a2_context)
        mirrored = sorted(repr(x) for x in mirror_family(a2_context, family))
        assert mirrored == sorted(repr(el.vec) for el in family.zplus)
