"""Tests for K(chi), the tau function and the bilinear form."""

import pytest

from app.core.exceptions import MalformedInputError
from app.services.exactfield import V, RationalFunction
from app.services.kspace import (
    GradedContext,
    KVector,
    beta_vec,
    format_kvector,
    gram,
    induce,
    irr_count,
    radical,
    sigma_vec,
    tau,
)
from app.services.rootsys import build, resolve_character, vector

SMALL_CONTEXTS = [
    ("A1", "1,-1"),
    ("A1", "0,0"),
    ("A2", "2rho"),
    ("A2", "1,1,-2"),
    ("B2", "2rho"),
    ("C2", "1,1"),
    ("G2", "2rho"),
]


def _context(label: str, chi: str, e_mode: str = "one") -> GradedContext:
    rs = build(label)
    return GradedContext(rs.full, resolve_character(rs, chi), e_mode)


class TestKVector:
    """Test cases for KVector."""

    def test_zero_coefficients_dropped(self):
        """Test that cancelling terms leave the zero vector."""
        label = vector((1, 1))
        x = KVector.basis(label, V)
        assert (x - x).is_zero()
        assert (0 * x).is_zero()

    def test_format(self):
        """Test the rendering of combinations."""
        a, b = vector((1, -1)), vector((-1, 1))
        x = KVector.basis(b) + V * KVector.basis(a)
        assert format_kvector(x, [b, a]) == "[-1,1] + v[1,-1]"
        y = KVector.basis(a, RationalFunction.parse("v/(1+v^2)")) - KVector.basis(b)
        assert format_kvector(y, [a, b]) == "(v/(1+v^2))[1,-1] - [-1,1]"
        assert format_kvector(KVector()) == "0"

    def test_bar(self):
        """Test the coefficientwise bar involution."""
        x = KVector.basis(vector((1, -1)), V)
        assert x.bar() == KVector.basis(vector((1, -1)), V**-1)


class TestGradedContext:
    """Test cases for GradedContext."""

    def test_cosets_of_regular_character(self, a2_context):
        """Test that a regular character has |W| cosets."""
        assert len(a2_context) == 6
        assert a2_context.labels[0] == vector((2, 0, -2))
        assert a2_context.c == 2

    def test_cosets_of_singular_character(self, c2_context):
        """Test the stabilizer of chi = (1,1)."""
        assert len(c2_context) == 4
        assert c2_context.c == len(c2_context.r2) - len(c2_context.r0)

    def test_unknown_e_mode(self):
        """Test that unknown normalizations are rejected."""
        rs = build("A1")
        with pytest.raises(MalformedInputError):
            GradedContext(rs.full, vector((1, -1)), "half")

    def test_tau(self, a2_context):
        """Test tau on the identity and the longest element."""
        sub = a2_context.sub
        identity = sub.identity
        assert tau(a2_context, identity, identity) == 0
        assert tau(a2_context, identity, sub.w0) == 2
        assert tau(a2_context, sub.w0, identity) == 2

    def test_form_cells(self, a2_context):
        """Test individual form values with e = 1."""
        position = a2_context.position
        top = position[vector((2, 0, -2))]
        bottom = position[vector((-2, 0, 2))]
        side = position[vector((-2, 2, 0))]
        assert a2_context.entry(top, top) == 1
        assert a2_context.entry(top, bottom) == V**2
        assert a2_context.entry(top, side) == -V

    def test_lusztig_normalization(self):
        """Test that the default normalization scales every cell."""
        rs = build("A1")
        chi = vector((1, -1))
        one = GradedContext(rs.full, chi, "one")
        lusztig = GradedContext(rs.full, chi, "lusztig")
        factor = 1 / (1 - V**2)
        for i in range(2):
            for j in range(2):
                assert lusztig.entry(i, j) == one.entry(i, j) * factor

    @pytest.mark.parametrize("fixture_name", ["a2_context", "c2_context"])
    def test_gram_symmetric(self, fixture_name, request):
        """Test that the form is symmetric."""
        matrix = gram(request.getfixturevalue(fixture_name))
        assert matrix == matrix.transpose()

    def test_radical_and_irr_count(self, a2_context, c2_context):
        """Test radical dimensions and simple module counts."""
        assert len(radical(a2_context)) == 2
        assert irr_count(a2_context) == 4
        assert radical(c2_context) == []
        assert irr_count(c2_context) == 4

    @pytest.mark.parametrize("label,chi", SMALL_CONTEXTS)
    def test_irr_count_is_rank_of_form(self, label, chi):
        """Test that the simple module count is dim K(chi) minus dim Rad."""
        ctx = _context(label, chi)
        assert irr_count(ctx) == len(ctx) - len(radical(ctx))
        assert irr_count(ctx) > 0

    def test_radical_vectors_pair_to_zero(self, a2_context):
        """Test radical membership of the kernel basis."""
        for x in radical(a2_context):
            assert a2_context.in_radical(x)
        assert not a2_context.in_radical(a2_context.basis_vector(a2_context.chi))

    def test_beta_preserves_radical(self, a2_context):
        """Test that the bar involution maps the radical to itself."""
        for x in radical(a2_context):
            assert a2_context.in_radical(beta_vec(a2_context, x))

    def test_sigma(self, a2_context):
        """Test the relabelling through the longest element."""
        x = a2_context.basis_vector(a2_context.chi)
        assert sigma_vec(a2_context, x) == KVector.basis(vector((-2, 0, 2)))

    def test_basis_vector_unknown_label(self, a2_context):
        """Test that labels outside the orbit are rejected."""
        with pytest.raises(MalformedInputError):
            a2_context.basis_vector(vector((1, 0, -1)))

    @pytest.mark.slow
    def test_f4_simple_module_count(self):
        """Test the number of simple modules of F4 at (3,1,1,1)."""
        ctx = GradedContext(build("F4").full, vector((3, 1, 1, 1)))
        assert irr_count(ctx) == 19


class TestInduction:
    """Test cases for parabolic induction."""

    def _torus(self, ctx):
        return GradedContext(ctx.rs.subsystem([]), ctx.chi, ctx.e_mode)

    def test_induce_from_positive_nilradical(self, a2_context):
        """Test that the Borel with positive nilradical keeps labels."""
        rs = a2_context.rs
        positive = range(rs.n_positive)
        x = KVector.basis(a2_context.chi)
        assert induce(a2_context, self._torus(a2_context), positive, x) == x

    def test_induce_from_negative_nilradical(self, a2_context):
        """Test that the opposite Borel moves labels by the longest element."""
        rs = a2_context.rs
        negative = [rs.neg(i) for i in range(rs.n_positive)]
        x = KVector.basis(a2_context.chi)
        image = induce(a2_context, self._torus(a2_context), negative, x)
        assert image == KVector.basis(vector((-2, 0, 2)))

    def test_induce_rejects_non_parabolic(self, a2_context):
        """Test that a root set containing opposite roots is rejected."""
        rs = a2_context.rs
        every = range(len(rs.roots))
        with pytest.raises(MalformedInputError):
            induce(
                a2_context,
                self._torus(a2_context),
                every,
                KVector.basis(a2_context.chi),
            )


class TestFormIdentities:
    """Test cases for the symmetries of tau and the bilinear form."""

    def _tau_identities(self, ctx, firsts, seconds):
        sub = ctx.sub
        stabilizer = sub.stabilizer(ctx.chi)
        for w1 in firsts:
            flipped = sub.multiply(sub.w0, w1)
            for w2 in seconds:
                assert ctx.tau(w1, w2) + ctx.tau(flipped, w2) == ctx.c
                for u in stabilizer:
                    moved = ctx.tau(sub.multiply(w1, u), sub.multiply(w2, u))
                    assert moved == ctx.tau(w1, w2)

    def _form_identities(self, ctx, rows, columns):
        rank = ctx.sub.rank
        scale = (-1) ** rank * (-V) ** (2 * rank - ctx.c)
        basis = [ctx.basis_vector(label) for label in ctx.labels]
        for i in rows:
            flipped = ctx.position[ctx.sub.w0.act(ctx.rs, ctx.labels[i])]
            for j in columns:
                x, y = basis[i], basis[j]
                assert ctx.pair(sigma_vec(ctx, x), sigma_vec(ctx, y)) == ctx.pair(x, y)
                assert ctx.entry(i, j).bar() == scale * ctx.entry(flipped, j)

    @pytest.mark.parametrize("label,chi", SMALL_CONTEXTS)
    def test_tau_identities(self, label, chi):
        """Test tau(w0*w1, w2) = c - tau(w1, w2) and invariance under W(chi)."""
        ctx = _context(label, chi)
        elements = ctx.sub.elements
        self._tau_identities(ctx, elements, elements)

    def test_tau_constant_on_cosets(self, c2_context):
        """Test that right multiplication by the stabilizer stays inside each coset."""
        sub = c2_context.sub
        stabilizer = sub.stabilizer(c2_context.chi)
        assert len(stabilizer) == 2
        members = sub.coset_members(c2_context.chi)
        for label, group in members.items():
            for w in group:
                for u in stabilizer:
                    assert sub.multiply(w, u) in group

    @pytest.mark.parametrize("label,chi", SMALL_CONTEXTS)
    def test_form_identities(self, label, chi):
        """Test sigma invariance of the form and its bar identity."""
        ctx = _context(label, chi, "lusztig")
        every = range(len(ctx))
        self._form_identities(ctx, every, every)

    @pytest.mark.slow
    def test_f4_sample(self):
        """Test the tau and form identities on a sample of F4 at (3,1,1,1)."""
        ctx = GradedContext(build("F4").full, vector((3, 1, 1, 1)), "lusztig")
        elements = ctx.sub.elements
        self._tau_identities(ctx, elements[:12], elements[::97])
        n = len(ctx)
        self._form_identities(ctx, range(min(n, 5)), range(max(n - 5, 0), n))
