"""Scenario files: the JSON input format of the command line front end.

A scenario carries one chart, exactly one structure block (jacobi | contact
| lcs | jet | transversal may accompany any of them), and optional section
/ formal / bfv blocks.  All coefficient expressions use the ring grammar.
"""

from __future__ import annotations

import json

from .ring import Chart, ChartError, ScalarFn
from .expr import ExprError, parse_scalar
from .multivector import MultiVectorField
from .multider import MultiDerivation
from .leafform import SectionOfNormalBundle
from .geom import ContactChart, Form, contact_to_jacobi, fiberwise_linear_jacobi, lcs_to_jacobi
from .transversal import TransversalData


class ScenarioError(ValueError):
    pass


class Scenario:
    def __init__(self, data: dict, name: str = "<scenario>"):
        self.name = name
        if not isinstance(data, dict):
            raise ScenarioError("scenario must be a JSON object")
        if data.get("schema") != 1:
            raise ScenarioError("unsupported scenario schema (expected schema: 1)")
        try:
            chart_block = data["chart"]
            self.chart = Chart(
                torus=chart_block.get("torus", ()),
                fiber=chart_block.get("fiber", ()),
                leaf=chart_block.get("leaf", ()),
            )
        except (KeyError, ChartError, TypeError) as exc:
            raise ScenarioError(f"invalid chart block: {exc}") from None
        structures = [k for k in ("jacobi", "contact", "lcs", "jet") if k in data]
        if len(structures) != 1:
            raise ScenarioError("scenario needs exactly one structure block")
        self.structure_kind = structures[0]
        self.data = data
        self._jacobi = None
        self._transversal = None

    # -- parsing helpers ----------------------------------------------------

    def _expr(self, text) -> ScalarFn:
        try:
            return parse_scalar(self.chart, text)
        except ExprError as exc:
            raise ScenarioError(f"bad expression {text!r}: {exc}") from None

    def _vector(self, comps: dict) -> MultiVectorField:
        return MultiVectorField.vector(
            self.chart, {name: self._expr(e) for name, e in comps.items()}
        )

    def _mvf(self, items, degree) -> MultiVectorField:
        terms = {}
        for item in items:
            terms[tuple(item["idx"])] = self._expr(item["coef"])
        return MultiVectorField(self.chart, degree, terms)

    # -- structure --------------------------------------------------------------

    def jacobi(self) -> MultiDerivation:
        if self._jacobi is not None:
            return self._jacobi
        kind = self.structure_kind
        block = self.data[kind]
        if kind == "jacobi":
            p = self._mvf(block.get("p", []), 2)
            q = self._mvf(block.get("q", []), 1)
            j = MultiDerivation(p, q)
        elif kind == "contact":
            theta = {name: self._expr(e) for name, e in block["theta"].items()}
            reeb = self._vector(block["reeb"])
            frame = [self._vector(v) for v in block["frame"]]
            j = contact_to_jacobi(ContactChart(self.chart, theta, reeb, frame))
        elif kind == "lcs":
            omega = Form(
                self.chart,
                2,
                {tuple(item["idx"]): self._expr(item["coef"]) for item in block["omega"]},
            )
            theta1 = Form(
                self.chart,
                1,
                {
                    tuple(item["idx"]): self._expr(item["coef"])
                    for item in block.get("theta1", [])
                },
            )
            j = lcs_to_jacobi(omega, theta1)
        elif kind == "jet":
            j = fiberwise_linear_jacobi(self.chart)
        else:  # pragma: no cover
            raise ScenarioError(f"unknown structure {kind}")
        self._jacobi = j
        return j

    def section(self) -> SectionOfNormalBundle:
        block = self.data.get("section")
        if block is None:
            raise ScenarioError("scenario has no section block")
        comps = [self._expr(e) for e in block["components"]]
        try:
            return SectionOfNormalBundle(self.chart, comps)
        except ChartError as exc:
            raise ScenarioError(f"invalid section: {exc}") from None

    def formal_order(self) -> int:
        block = self.data.get("formal", {})
        return int(block.get("order", 3))

    def transversal(self) -> TransversalData:
        if self._transversal is not None:
            return self._transversal
        block = self.data.get("transversal")
        if block is None:
            raise ScenarioError("scenario has no transversal block")
        ga = [self._vector(v) for v in block["frame_a"]]
        gz = self._vector(block["frame_z"])
        C = [self._expr(e) for e in block.get("C", ["0"] * len(ga))]
        omega = [[self._expr(e) for e in row] for row in block["omega"]]
        fab = {
            int(i): [[self._expr(e) for e in row] for row in mat]
            for i, mat in block.get("F_ab", {}).items()
        }
        fa = {
            int(i): [self._expr(e) for e in vec]
            for i, vec in block.get("F_a", {}).items()
        }
        self._transversal = TransversalData(self.chart, ga, gz, C, omega, fab, fa)
        return self._transversal

    def ghost_rank(self) -> int:
        return self.chart.m


def load_scenario(path_or_name: str):
    """Load a scenario from a file path or a built-in name."""
    import importlib.resources as resources
    import os

    name = path_or_name
    if os.path.exists(path_or_name):
        with open(path_or_name, "r", encoding="utf-8") as fh:
            data = json.load(fh)
        name = os.path.splitext(os.path.basename(path_or_name))[0]
        return Scenario(data, name)
    builtin = path_or_name.split("/")[-1]
    try:
        text = (
            resources.files("coiso")
            .joinpath("scenarios")
            .joinpath(f"{builtin}.json")
            .read_text(encoding="utf-8")
        )
    except (FileNotFoundError, ModuleNotFoundError):
        raise ScenarioError(
            f"scenario {path_or_name!r}: no such file or built-in scenario"
        ) from None
    return Scenario(json.loads(text), builtin)


def builtin_names():
    import importlib.resources as resources

    folder = resources.files("coiso").joinpath("scenarios")
    return sorted(p.name[: -len(".json")] for p in folder.iterdir() if p.name.endswith(".json"))
