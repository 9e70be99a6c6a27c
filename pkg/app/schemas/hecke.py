"""Schemas for CLI jobs, exported documents and the fixture corpus."""

from typing import Dict, List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

Command = Literal["wdd", "orbits", "form", "bases", "kl", "im", "all"]
OutputFormat = Literal["text", "json", "csv", "dot"]
EMode = Literal["lusztig", "one"]


class JobSpec(BaseModel):
    """One CLI job."""

    model_config = ConfigDict(frozen=True)
    command: Command
    cartan: str = Field(..., min_length=1, description="Cartan label, e.g. F4 or A1xA1")
    chi: Optional[str] = Field(
        None, description="Rational vector, '2rho' or an orbit name such as F4(a3)"
    )
    e_mode: EMode = Field("lusztig", description="Normalization of the form")
    output_format: OutputFormat = Field("text", description="Artifact format")
    seed: int = Field(20080101, description="Seed for genericity retries")
    time_budget: float = Field(0.0, ge=0.0, description="Seconds, 0 disables")

    @model_validator(mode="after")
    def check_character(self) -> "JobSpec":
        """Every command except wdd needs a character."""
        if self.command != "wdd" and not self.chi:
            raise ValueError(f"command {self.command} needs --chi")
        return self


class DiagramDoc(BaseModel):
    """A weighted Dynkin diagram of the whole system."""

    values: List[int]
    h: str
    support: int = Field(..., description="Number of root vectors in e")


class WddDocument(BaseModel):
    """Output of the ``wdd`` command."""

    cartan: str
    diagrams: List[DiagramDoc]


class OrbitDoc(BaseModel):
    """One orbit of G(chi) on g_2(chi)."""

    label: str
    dim: int
    s: str
    levi_type: str
    diagram: List[int]
    is_open: bool
    component_group: Optional[str] = None
    saturation: Optional[str] = None


class OrbitsDocument(BaseModel):
    """Output of the ``orbits`` command."""

    cartan: str
    chi: str
    orbits: List[OrbitDoc]


class FormDocument(BaseModel):
    """Gram matrix of the form in canonical coset order."""

    cartan: str
    chi: str
    e_mode: EMode
    labels: List[str]
    gram: List[List[str]]
    radical_dim: int


class ParameterDoc(BaseModel):
    """One parameter: an orbit with a local system."""

    label: str
    orbit: str
    dim: int


class BasesDocument(BaseModel):
    """The four bases, each element as ``{coset label: coefficient}``."""

    cartan: str
    chi: str
    parameters: List[ParameterDoc]
    z_minus: List[Dict[str, str]]
    u_minus: List[Dict[str, str]]
    z_plus: List[Dict[str, str]]
    u_plus: List[Dict[str, str]]


class KLDocument(BaseModel):
    """Multiplicity data: N over Z[v], P over Z[q], signs and IM."""

    cartan: str
    chi: str
    e_mode: EMode
    parameters: List[ParameterDoc]
    N: List[List[str]]
    P: List[List[str]]
    epsilon: List[int]
    IM: Dict[str, str] = Field(default_factory=dict)


class FixtureOrbit(BaseModel):
    """One transcribed orbit row."""

    label: str
    dim: int = Field(..., ge=0)
    parameters: List[str] = Field(..., min_length=1)
    s: Optional[str] = None
    saturation: Optional[str] = None
    components: Optional[str] = None


class FormTable(BaseModel):
    """A transcribed Gram table keyed by coset labels."""

    labels: List[str] = Field(..., min_length=1)
    rows: List[List[str]]

    @model_validator(mode="after")
    def check_square(self) -> "FormTable":
        """Rows must form a square table over the labels."""
        n = len(self.labels)
        if len(self.rows) != n or any(len(row) != n for row in self.rows):
            raise ValueError("form table is not square over its labels")
        return self


class Fixture(BaseModel):
    """One transcribed table set."""

    id: str = Field(..., min_length=1)
    description: str = ""
    kind: Literal["form", "bases", "regular"]
    cartan: str
    chi: Optional[str] = None
    diagram: Optional[List[int]] = None
    orbit_name: Optional[str] = None
    e_mode: Optional[EMode] = None
    form: Optional[FormTable] = None
    radical_dim: Optional[int] = None
    orbits: List[FixtureOrbit] = Field(default_factory=list)
    kl: Optional[List[List[str]]] = None
    n: Optional[List[List[str]]] = None
    zminus: Dict[str, Dict[str, str]] = Field(default_factory=dict)
    uminus: Dict[str, Dict[str, str]] = Field(default_factory=dict)
    im: Dict[str, str] = Field(default_factory=dict)
    mirror: bool = False
    slow: bool = False
    notes: List[str] = Field(default_factory=list)

    @property
    def parameters(self) -> List[str]:
        return [p for o in self.orbits for p in o.parameters]

    @property
    def dims(self) -> List[int]:
        return [o.dim for o in self.orbits for _ in o.parameters]

    @model_validator(mode="after")
    def check_tables(self) -> "Fixture":
        """Tables must agree with the parameter list."""
        if self.chi is None and self.diagram is None:
            raise ValueError(f"fixture {self.id} gives neither chi nor diagram")
        if self.kind == "form" and self.form is None:
            raise ValueError(f"form fixture {self.id} has no form table")
        if self.kind == "bases":
            names = self.parameters
            if len(set(names)) != len(names):
                raise ValueError(f"fixture {self.id} repeats a parameter label")
            for table in (self.kl, self.n):
                if table is None:
                    continue
                if len(table) != len(names) or any(len(r) != len(names) for r in table):
                    raise ValueError(f"fixture {self.id}: table size differs from parameters")
            known = set(names)
            for key in list(self.zminus) + list(self.uminus):
                if key not in known:
                    raise ValueError(f"fixture {self.id}: unknown parameter {key}")
            for x, y in self.im.items():
                if x not in known or y not in known:
                    raise ValueError(f"fixture {self.id}: IM names unknown parameters")
        return self


class CellMismatchDoc(BaseModel):
    """One table cell that differs from the transcription."""

    table: str
    row: str
    column: str = ""
    expected: str
    actual: str


class FixtureResultDoc(BaseModel):
    """Outcome of one fixture."""

    id: str
    checked: int
    mismatches: List[CellMismatchDoc]
    duration_ms: float
    error: Optional[str] = None


class FixtureReportDoc(BaseModel):
    """Outcome of a corpus run, sorted by fixture id."""

    fixtures: List[FixtureResultDoc]
    checked: int
    mismatches: int


class IMDocument(BaseModel):
    """Output of the ``im`` command."""

    cartan: str
    chi: str
    IM: Dict[str, str]


class AllDocument(BaseModel):
    """Output of the ``all`` command."""

    orbits: OrbitsDocument
    bases: BasesDocument
    kl: KLDocument
