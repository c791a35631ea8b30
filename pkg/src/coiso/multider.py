"""Multi-derivations of the trivialized line bundle and the Schouten-Jacobi
bracket.

A skew first-order multi-differential operator of arity n is stored as the
pair (P, Q) of multivector fields with square = P - Q ^ id, deg P = n and
deg Q = n - 1 (Q absent for sections, arity 0).  The bracket is the closed
(P, Q)-decomposition

    [[P - Q^id, P' - Q'^id]] = ( [[P,P']] - (-1)^{k'} k P^Q' + k' Q^P' )
        - ( [[P,Q']] + (-1)^{k'} [[Q,P']] - (k-k') Q^Q' ) ^ id

with k = arity - 1, k' = arity' - 1 and [[-,-]] the Schouten-Nijenhuis
bracket on multivector fields.
"""

from __future__ import annotations

from .ring import Chart, ChartError, ScalarFn
from .multivector import MultiVectorField


class ArityError(ValueError):
    pass


class Section:
    """A section lam = f * mu of the trivialized bundle."""

    __slots__ = ("value",)

    def __init__(self, value: ScalarFn):
        self.value = value

    def __eq__(self, other):
        return isinstance(other, Section) and self.value == other.value

    def __repr__(self):
        return f"Section({self.value!r})"


class MultiDerivation:
    """square = P - Q ^ id; arity = deg P; Q is None for arity 0."""

    __slots__ = ("chart", "arity", "p_part", "q_part")

    def __init__(self, p_part: MultiVectorField, q_part=None):
        self.chart = p_part.chart
        self.arity = p_part.degree
        self.p_part = p_part
        if self.arity == 0:
            if q_part is not None and not q_part.is_zero():
                raise ArityError("a section has no q-part")
            q_part = None
        else:
            if q_part is None:
                q_part = MultiVectorField.zero(self.chart, self.arity - 1)
            if q_part.degree != self.arity - 1:
                raise ArityError("q-part degree must be arity - 1")
            if q_part.chart != self.chart:
                raise ChartError("p and q parts live on different charts")
        self.q_part = q_part

    # -- constructors --------------------------------------------------------

    @staticmethod
    def zero(chart: Chart, arity: int) -> "MultiDerivation":
        return MultiDerivation(MultiVectorField.zero(chart, arity))

    @staticmethod
    def from_section(f: ScalarFn) -> "MultiDerivation":
        return MultiDerivation(MultiVectorField.function(f))

    def q_or_zero(self) -> MultiVectorField:
        if self.q_part is None:
            return MultiVectorField.zero(self.chart, 0)
        return self.q_part

    def is_zero(self) -> bool:
        return self.p_part.is_zero() and (self.q_part is None or self.q_part.is_zero())

    # -- linear structure ------------------------------------------------------

    def __add__(self, other: "MultiDerivation") -> "MultiDerivation":
        if self.arity != other.arity:
            raise ArityError("arity mismatch in sum")
        q = None
        if self.arity > 0:
            q = self.q_part + other.q_part
        return MultiDerivation(self.p_part + other.p_part, q)

    def __neg__(self):
        q = None if self.q_part is None else -self.q_part
        return MultiDerivation(-self.p_part, q)

    def __sub__(self, other):
        return self + (-other)

    def scale(self, c) -> "MultiDerivation":
        q = None if self.q_part is None else self.q_part.scale(c)
        return MultiDerivation(self.p_part.scale(c), q)

    # -- Schouten-Jacobi bracket -------------------------------------------------

    def sj_bracket(self, other: "MultiDerivation") -> "MultiDerivation":
        if self.chart != other.chart:
            raise ChartError("operands live on different charts")
        k = self.arity - 1
        kp = other.arity - 1
        n_out = self.arity + other.arity - 1
        chart = self.chart
        if n_out < 0:
            return MultiDerivation.zero(chart, 0)

        P, Q = self.p_part, self.q_part
        Pp, Qp = other.p_part, other.q_part

        new_p = P.sn_bracket(Pp)
        if Qp is not None and k != 0:
            new_p = new_p - P.wedge(Qp).scale(((-1) ** (kp % 2)) * k)
        if Q is not None and kp != 0:
            new_p = new_p + Q.wedge(Pp).scale(kp)

        if n_out == 0:
            return MultiDerivation(new_p)

        new_q = MultiVectorField.zero(chart, n_out - 1)
        if Qp is not None:
            new_q = new_q + P.sn_bracket(Qp)
        if Q is not None:
            new_q = new_q + Q.sn_bracket(Pp).scale((-1) ** (kp % 2))
        if Q is not None and Qp is not None and k != kp:
            new_q = new_q - Q.wedge(Qp).scale(k - kp)
        return MultiDerivation(new_p, new_q)

    def jacobiator(self) -> "MultiDerivation":
        """Jac(J) = 1/2 [[J, J]]; zero iff J is a Jacobi structure."""
        if self.arity != 2:
            raise ArityError("jacobiator needs an arity-2 multiderivation")
        from fractions import Fraction

        return self.sj_bracket(self).scale(Fraction(1, 2))

    def is_jacobi(self) -> bool:
        return self.arity == 2 and self.sj_bracket(self).is_zero()

    # -- evaluation ---------------------------------------------------------------

    def apply(self, fns) -> ScalarFn:
        """square(f_1, ..., f_n) = P(f...) + sum_i (-1)^{n-1-i} Q(f...^i) f_i."""
        fns = list(fns)
        if len(fns) != self.arity:
            raise ArityError("argument count does not match arity")
        out = self.p_part.apply(fns)
        if self.q_part is not None:
            n = self.arity
            for i in range(1, n + 1):
                rest = fns[: i - 1] + fns[i:]
                term = self.q_part.apply(rest) * fns[i - 1]
                out = out + term.scale((-1) ** ((n - 1 - i) % 2))
        return out

    def eval_sections(self, sections) -> Section:
        return Section(self.apply([s.value for s in sections]))

    def eval_nested(self, fns) -> ScalarFn:
        """Iterated single brackets [[...[[square, f_1]], ...]], f_n]].

        Differs from apply() by the sign (-1)^{n(n-1)/2} coming from the
        skew Gerstenhaber product; apply() is normalized so that
        apply([lam, mu]) = {lam, mu} for a Jacobi bi-derivation.
        """
        out = self
        for f in fns:
            out = out.sj_bracket(MultiDerivation.from_section(f))
        if out.arity != 0:
            raise ArityError("argument count does not match arity")
        return out.p_part.as_function()

    def bracket_fns(self, f: ScalarFn, g: ScalarFn) -> ScalarFn:
        """{f, g} for an arity-2 multiderivation."""
        if self.arity != 2:
            raise ArityError("bracket needs arity 2")
        return self.apply([f, g])

    # -- Hamiltonians ----------------------------------------------------------------

    def hamiltonian(self, lam: ScalarFn) -> "MultiDerivation":
        """Delta_lam = -[[J, lam]] = {lam, -}, an arity-1 derivation."""
        if self.arity != 2:
            raise ArityError("hamiltonian needs arity 2")
        return self.sj_bracket(MultiDerivation.from_section(lam)).scale(-1)

    def hamiltonian_vf(self, lam: ScalarFn) -> MultiVectorField:
        """X_lam, the symbol of Delta_lam."""
        return self.hamiltonian(lam).p_part

    # -- Jacobi pair dictionary ---------------------------------------------------------

    def jacobi_pair(self):
        """Return (Lambda, Gamma, report) with J = Lambda - Gamma ^ id.

        report['lie'] is L_Gamma Lambda = [[Gamma, Lambda]], report['mc'] is
        [[Lambda, Lambda]] + 2 Gamma ^ Lambda; the pair is a Jacobi pair iff
        both vanish, which is equivalent to is_jacobi().
        """
        if self.arity != 2:
            raise ArityError("jacobi_pair needs arity 2")
        lam = self.p_part
        gam = self.q_part
        lie = gam.sn_bracket(lam)
        mc = lam.sn_bracket(lam) + gam.wedge(lam).scale(2)
        return lam, gam, {"lie": lie, "mc": mc, "valid": lie.is_zero() and mc.is_zero()}

    # -- bi-symbol -----------------------------------------------------------------------

    def bisymbol(self) -> MultiVectorField:
        """Lambda_J: in the trivialized case the p-part of J."""
        if self.arity != 2:
            raise ArityError("bisymbol needs arity 2")
        return self.p_part

    def sharp(self, f: ScalarFn) -> MultiVectorField:
        """Lambda_J^#(df): the vector field g -> Lambda_J(df, dg)."""
        return self.bisymbol().insert_differential(f)

    # -- comparison / display ----------------------------------------------------------------

    def __eq__(self, other):
        if not isinstance(other, MultiDerivation):
            return NotImplemented
        return (
            self.arity == other.arity
            and self.p_part == other.p_part
            and self.q_or_zero() == other.q_or_zero()
        )

    def __repr__(self):
        return f"MultiDerivation(P={self.p_part!r}, Q={self.q_part!r})"


def scale_by_fn(b: MultiDerivation, f: ScalarFn) -> MultiDerivation:
    """The module product f * b (multiplication of every coefficient)."""
    return MultiDerivation(
        b.p_part.scale_fn(f), None if b.q_part is None else b.q_part.scale_fn(f)
    )


def leibniz_defect(a: MultiDerivation, f: ScalarFn, b: MultiDerivation) -> MultiDerivation:
    """[[a, f b]] - X_a(f) b - f [[a, b]] for a derivation a (arity 1);
    used by property tests, not by the production code paths."""
    if a.arity != 1:
        raise ArityError("leibniz_defect supports arity-1 a only")
    whole = a.sj_bracket(scale_by_fn(b, f))
    fab = scale_by_fn(a.sj_bracket(b), f)
    xa_f = a.p_part.apply([f])
    return whole - scale_by_fn(b, xa_f) - fab
