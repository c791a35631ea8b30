"""Canonical serialization of the library's values.

JSON output is byte-stable: term lists are sorted by exponent keys, word
lists by a fixed symbol order, and every dict is emitted with sorted keys.
"""

from __future__ import annotations

from .ring import Chart, TorusIntegral
from .expr import scalar_to_json, scalar_to_text
from .multivector import MultiVectorField
from .multider import MultiDerivation
from .leafform import LeafForm, SectionOfNormalBundle
from .graded import DX, DXI, DXIS, M, XI, XIS, GradedElement


def mvf_to_json(v: MultiVectorField) -> list:
    return [
        {"idx": list(key), "coef": scalar_to_json(v.terms[key])}
        for key in sorted(v.terms)
    ]


def multider_to_json(sq: MultiDerivation) -> dict:
    return {
        "arity": sq.arity,
        "p": mvf_to_json(sq.p_part),
        "q": mvf_to_json(sq.q_part) if sq.q_part is not None else [],
    }


def leafform_to_json(w: LeafForm) -> dict:
    return {
        "degree": w.degree,
        "terms": [
            {"idx": list(key), "coef": scalar_to_json(w.terms[key])}
            for key in sorted(w.terms)
        ],
    }


def leafform_to_text(w: LeafForm) -> str:
    if w.is_zero():
        return "0"
    chart = w.chart
    labels = (
        [f"d{c}" for c in chart.leaf]
        if len(chart.leaf) == chart.m
        else [f"delta_{c}" for c in chart.fiber]
    )
    bits = []
    for key in sorted(w.terms):
        word = "^".join(labels[a] for a in key) or "1"
        bits.append(f"({scalar_to_text(w.terms[key])}) {word}")
    return " + ".join(bits)


def section_to_json(s: SectionOfNormalBundle) -> list:
    return [scalar_to_json(f) for f in s.components]


def integral_to_text(t: TorusIntegral) -> str:
    return f"(2*pi)^{t.two_pi_power} * ({scalar_to_text(t.value)})"


def _symbol_to_json(chart: Chart, letter) -> str:
    kind = letter[0]
    if kind == M:
        return "ID"
    if kind == DX:
        i = letter[1]
        if i < chart.k:
            return f"D_PH({i})"
        return f"D_Y({i - chart.k})"
    if kind == DXI:
        return f"D_XI({letter[1]})"
    if kind == DXIS:
        return f"D_XISTAR({letter[1]})"
    raise ValueError(f"not a symbol letter: {letter!r}")


def graded_to_json(x: GradedElement) -> list:
    chart = x.chart
    out = []
    for letters in sorted(x.terms, key=_letters_sort_key):
        ghosts = [l[1] for l in letters if l[0] == XI]
        antighosts = [l[1] for l in letters if l[0] == XIS]
        word = [
            _symbol_to_json(chart, l) for l in letters if l[0] in (M, DX, DXI, DXIS)
        ]
        out.append(
            {
                "ghost": ghosts,
                "antighost": antighosts,
                "word": word,
                "coef": scalar_to_json(x.terms[letters]),
            }
        )
    return out


def _letters_sort_key(letters):
    return tuple((l[0], *(str(v) for v in l[1:])) for l in letters)


def graded_to_text(x: GradedElement) -> str:
    if x.is_zero():
        return "0"
    chart = x.chart
    bits = []
    for letters in sorted(x.terms, key=_letters_sort_key):
        word = []
        for l in letters:
            if l[0] == XI:
                word.append(f"xi^{l[1] + 1}")
            elif l[0] == XIS:
                word.append(f"xis_{l[1] + 1}")
            else:
                word.append(_symbol_to_json(chart, l))
        bits.append(f"({scalar_to_text(x.terms[letters])}) " + (".".join(word) or "1"))
    return " + ".join(bits)
