"""Tests for root systems and Weyl groups."""

from fractions import Fraction
from unittest.mock import patch

import pytest

from app.core.config import settings
from app.core.exceptions import (
    GroupTooLargeError,
    MalformedInputError,
    UnsupportedTypeError,
)
from app.services.rootsys import (
    RootSystem,
    build,
    format_vector,
    parse_cartan,
    parse_vector,
    resolve_character,
    vector,
)


class TestParsing:
    """Test cases for label and vector parsing."""

    def test_parse_cartan(self):
        """Test simple and product labels."""
        assert parse_cartan("F4") == (("F", 4),)
        assert parse_cartan("A1xA1") == (("A", 1), ("A", 1))

    @pytest.mark.parametrize("label", ["", "  ", "4F", "A", "a2"])
    def test_parse_cartan_malformed(self, label):
        """Test labels that cannot be parsed."""
        with pytest.raises(MalformedInputError):
            parse_cartan(label)

    @pytest.mark.parametrize("label", ["E6", "G3", "F2", "D1", "A0"])
    def test_parse_cartan_unsupported(self, label):
        """Test types outside the supported families."""
        with pytest.raises(UnsupportedTypeError):
            parse_cartan(label)

    def test_parse_vector(self):
        """Test rational vectors with optional parentheses."""
        assert parse_vector("(5/2,3/2,1/2,1/2)") == vector(
            (Fraction(5, 2), Fraction(3, 2), Fraction(1, 2), Fraction(1, 2))
        )
        assert format_vector(parse_vector("3, 1, 1, 1")) == "3,1,1,1"

    @pytest.mark.parametrize("text", ["", "()", "1,x", "1/0,1"])
    def test_parse_vector_malformed(self, text):
        """Test vectors that cannot be parsed."""
        with pytest.raises(MalformedInputError):
            parse_vector(text)

    def test_parse_vector_wrong_length(self):
        """Test the coordinate count check."""
        with pytest.raises(MalformedInputError):
            parse_vector("1,1", 4)

    def test_resolve_two_rho(self):
        """Test the 2rho shorthand."""
        rs = build("A2")
        assert resolve_character(rs, "2rho") == vector((2, 0, -2))
        assert resolve_character(rs, "2,0,-2") == rs.two_rho_check


class TestRootSystem:
    """Test cases for RootSystem."""

    @pytest.mark.parametrize(
        "label,roots,order",
        [
            ("A1", 2, 2),
            ("A2", 6, 6),
            ("A3", 12, 24),
            ("B2", 8, 8),
            ("B3", 18, 48),
            ("C3", 18, 48),
            ("G2", 12, 12),
            ("F4", 48, 1152),
            ("A1xA1", 4, 4),
        ],
    )
    def test_root_counts_and_orders(self, label, roots, order):
        """Test root counts and Weyl group orders."""
        rs = build(label)
        assert len(rs.roots) == roots
        assert rs.order == order

    @pytest.mark.parametrize("label", ["A2", "B2", "G2", "C3"])
    def test_enumerated_group_matches_order(self, label):
        """Test that enumeration finds every element exactly once."""
        rs = build(label)
        assert len(rs.full.elements) == rs.order

    def test_negatives_and_positivity(self):
        """Test the root indexing convention."""
        rs = build("B3")
        for i in range(rs.n_positive):
            assert rs.roots[rs.neg(i)] == tuple(-x for x in rs.roots[i])
            assert rs.is_positive(i)
            assert not rs.is_positive(rs.neg(i))

    def test_two_rho_check(self):
        """Test the sum of positive coroots."""
        assert build("A2").two_rho_check == vector((2, 0, -2))
        assert build("A3").two_rho_check == vector((3, 1, -1, -3))

    def test_ambient_dimensions(self):
        """Test the coordinate conventions."""
        assert build("A3").ambient_dim == 4
        assert build("G2").ambient_dim == 3
        assert build("F4").ambient_dim == 4
        assert build("A1xA1").ambient_dim == 4

    @pytest.mark.parametrize("label", ["A2", "B2", "C3", "G2"])
    def test_cartan_type_round_trip(self, label):
        """Test that the full subsystem recognizes its own type."""
        assert build(label).full.cartan_type == label

    def test_cartan_type_of_torus(self):
        """Test the empty subsystem."""
        assert build("A2").subsystem([]).cartan_type == "T"

    def test_longest_element(self):
        """Test that w0 sends 2rho to its negative."""
        rs = build("G2")
        w0 = rs.full.w0
        assert w0.length == rs.n_positive
        assert w0.act(rs, rs.two_rho_check) == tuple(-x for x in rs.two_rho_check)

    def test_to_dominant(self):
        """Test the dominant representative and its element."""
        rs = build("A2")
        x = vector((-2, 0, 2))
        point, w = rs.full.to_dominant(x)
        assert point == vector((2, 0, -2))
        assert w.act(rs, x) == point
        assert rs.full.is_dominant(point)
        assert not rs.full.is_dominant(x)

    def test_multiply_longest_element(self):
        """Test that w0 is an involution."""
        sub = build("B2").full
        assert sub.multiply(sub.w0, sub.w0).perm == sub.identity.perm

    @pytest.mark.parametrize("label,chi", [("A2", "2rho"), ("C2", "1,1")])
    def test_r_n_w_splits_graded_roots(self, label, chi):
        """Test that w and w0*w split each r_n between them."""
        rs = build(label)
        sub = rs.full
        chi = resolve_character(rs, chi)
        for w in sub.elements:
            ww = sub.multiply(sub.w0, w)
            for n in (-2, 0, 2):
                mine, other = sub.r_n_w(w, chi, n), sub.r_n_w(ww, chi, n)
                assert mine | other == sub.r_n(chi, n)
                assert not mine & other
                assert {rs.neg(i) for i in sub.r_n_w(ww, chi, -n)} == mine

    def test_r_n_w_of_identity(self):
        """Test that the identity keeps exactly the positive roots."""
        rs = build("A2")
        sub = rs.full
        chi = rs.two_rho_check
        assert sub.r_n_w(sub.identity, chi, 2) == sub.r_n(chi, 2)
        assert sub.r_n_w(sub.identity, chi, -2) == frozenset()

    def test_cosets_of_singular_character(self):
        """Test W/W(chi) for a character with a stabilizer."""
        rs = build("C2")
        cosets = rs.full.cosets(vector((1, 1)))
        assert len(cosets) == 4
        assert cosets[0].label == vector((1, 1))
        assert cosets[0].representative.length == 0

    def test_subsystem_not_closed(self):
        """Test that subsystems must contain negatives."""
        rs = build("A2")
        with pytest.raises(MalformedInputError):
            rs.subsystem([0])

    def test_group_too_large(self):
        """Test the enumeration bound."""
        rs = RootSystem("B3")
        with patch.object(settings, "MAX_WEYL_ORDER", 10):
            with pytest.raises(GroupTooLargeError):
                len(rs.full.elements)
