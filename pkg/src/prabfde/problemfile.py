"""Reading problem files.

A problem file is a sectioned ``key = value`` document::

    [params]
    alpha  = 0.5
    betas  = 1.3, 0.4
    thetas = 0.7, 0.2        # or: theta = 0.7 (shared by every order)
    omega  = 0.3

    [coefficients]
    sigma1 = 1 + t^2         # expression, or a table: [0.1, 0.2, ...]

    [forcing]
    g = cos(t)

    [ic]
    e = 1, -0.5

    [domain]
    T = 1
    n_points = 1025

    [psi]                    # optional
    family = exp_sat
    lambda = 1

    [solver]                 # optional
    picard_tol = 1e-10
    max_iters = 200
    series_tol = 1e-14
    route = auto             # picard | const | auto

``#`` starts a comment.  Missing ``g`` means ``g = 0`` and missing ``e``
means homogeneous initial values.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

from .const_coeff import ConstProblem
from .errors import ParseError, ValidationError
from .expr import Expr, parse_expr
from .solver import ProblemSpec, SolveConfig
from .wrt_function import FAMILIES, PsiFunction, PsiProblemSpec

ROUTES = ("picard", "const", "auto")

_SECTIONS = {
    "params": {"alpha", "betas", "thetas", "theta", "omega"},
    "coefficients": None,  # sigma1, sigma2, ...
    "forcing": {"g"},
    "ic": {"e"},
    "domain": {"T", "n_points"},
    "psi": {"family", "a", "lambda", "p", "c"},
    "solver": {"picard_tol", "max_iters", "series_tol", "route"},
}
_PSI_PARAMS = {
    "identity": {},
    "affine": {"a": "a"},
    "exp_sat": {"lambda": "lam"},
    "power": {"p": "p", "c": "c"},
}
_SECTION_RE = re.compile(r"^\s*\[\s*([A-Za-z_]+)\s*\]\s*$")
_ENTRY_RE = re.compile(r"^(\s*)([A-Za-z_]\w*)\s*=\s*(.*?)\s*$")


@dataclass(frozen=True)
class Entry:
    value: str
    line: int
    col: int


@dataclass
class ProblemFile:
    spec: ProblemSpec
    config: SolveConfig
    route: str
    sha256: str
    psi: Optional[PsiFunction] = None
    const: Optional[ConstProblem] = None
    sections: Dict[str, Dict[str, Entry]] = field(default_factory=dict, repr=False)

    @property
    def problem(self) -> Union[ProblemSpec, PsiProblemSpec, ConstProblem]:
        if self.psi is not None:
            return PsiProblemSpec(self.spec, self.psi)
        if self.route == "const":
            return self.const
        return self.spec


def _strip_comment(line: str) -> str:
    i = line.find("#")
    return line if i < 0 else line[:i]


def read_sections(text: str) -> Dict[str, Dict[str, Entry]]:
    sections: Dict[str, Dict[str, Entry]] = {}
    current = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = _strip_comment(raw)
        if not line.strip():
            continue
        m = _SECTION_RE.match(line)
        if m:
            name = m.group(1)
            if name not in _SECTIONS:
                raise ParseError(f"unknown section [{name}]", lineno, line.index("[") + 1)
            if name in sections:
                raise ParseError(f"section [{name}] appears twice", lineno, line.index("[") + 1)
            sections[name] = {}
            current = name
            continue
        m = _ENTRY_RE.match(line)
        if not m:
            col = len(line) - len(line.lstrip()) + 1
            raise ParseError("expected 'key = value' or '[section]'", lineno, col)
        if current is None:
            raise ParseError("entry before the first section", lineno, m.start(2) + 1)
        key, value = m.group(2), m.group(3)
        allowed = _SECTIONS[current]
        if allowed is None:
            if not re.fullmatch(r"sigma[1-9]\d*", key):
                raise ParseError(f"expected sigma1, sigma2, ... in [coefficients], got {key!r}", lineno, m.start(2) + 1)
        elif key not in allowed:
            raise ParseError(f"unknown key {key!r} in [{current}]", lineno, m.start(2) + 1)
        if key in sections[current]:
            raise ParseError(f"duplicate key {key!r} in [{current}]", lineno, m.start(2) + 1)
        if value == "":
            raise ParseError(f"missing value for {key!r}", lineno, m.end(2) + 1)
        sections[current][key] = Entry(value, lineno, m.start(3) + 1)
    return sections


def _number(entry: Entry, text: Optional[str] = None, col: Optional[int] = None) -> float:
    text = entry.value if text is None else text
    try:
        return float(text)
    except ValueError:
        raise ParseError(f"expected a number, got {text.strip()!r}", entry.line, col or entry.col) from None


def _integer(entry: Entry) -> int:
    try:
        return int(entry.value)
    except ValueError:
        raise ParseError(f"expected an integer, got {entry.value!r}", entry.line, entry.col) from None


def _number_list(entry: Entry) -> List[float]:
    text, col = entry.value, entry.col
    if text.startswith("["):
        if not text.endswith("]"):
            raise ParseError("unterminated list, expected ']'", entry.line, col + len(text))
        text, col = text[1:-1], col + 1
    out = []
    offset = 0
    for part in text.split(","):
        lead = len(part) - len(part.lstrip())
        if not part.strip():
            raise ParseError("empty list element", entry.line, col + offset)
        out.append(_number(entry, part, col + offset + lead))
        offset += len(part) + 1
    return out


def _require(section: Dict[str, Entry], key: str, name: str) -> Entry:
    if key not in section:
        raise ParseError(f"missing required key {key!r} in [{name}]")
    return section[key]


def _function(entry: Entry) -> Union[Expr, Tuple[float, ...]]:
    if entry.value.startswith("["):
        return tuple(_number_list(entry))
    return parse_expr(entry.value, entry.line, entry.col)


def load_problem_file(path: Union[str, Path]) -> ProblemFile:
    raw = Path(path).read_bytes()
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise ParseError(f"problem file is not UTF-8: {exc}") from None
    sections = read_sections(text)
    if "params" not in sections:
        raise ParseError("missing [params] section")
    params = sections["params"]
    alpha = _number(_require(params, "alpha", "params"))
    betas = _number_list(_require(params, "betas", "params"))
    omega = _number(params["omega"]) if "omega" in params else 0.0
    if "theta" in params and "thetas" in params:
        e = params["thetas"]
        raise ParseError("give either theta or thetas, not both", e.line, e.col)
    if "theta" in params:
        single_theta = True
        thetas = [_number(params["theta"])] * len(betas)
    else:
        single_theta = False
        thetas = _number_list(_require(params, "thetas", "params"))

    coeffs = sections.get("coefficients", {})
    m = len(betas) - 1
    names = [f"sigma{i}" for i in range(1, m + 1)]
    for key, entry in coeffs.items():
        if key not in names:
            raise ParseError(f"{key} given but the equation has m = {m} lower-order terms", entry.line, 1)
    for key in names:
        if key not in coeffs:
            raise ParseError(f"missing {key} in [coefficients]")
    sigmas = [_function(coeffs[k]) for k in names]

    forcing = sections.get("forcing", {})
    g = _function(forcing["g"]) if "g" in forcing else 0.0
    ic = sections.get("ic", {})
    e = _number_list(ic["e"]) if "e" in ic else None

    domain = sections.get("domain", {})
    T = _number(domain["T"]) if "T" in domain else 1.0
    solver = sections.get("solver", {})
    cfg_kwargs = {}
    if "n_points" in domain:
        cfg_kwargs["n_points"] = _integer(domain["n_points"])
    if "picard_tol" in solver:
        cfg_kwargs["picard_tol"] = _number(solver["picard_tol"])
    if "series_tol" in solver:
        cfg_kwargs["series_tol"] = _number(solver["series_tol"])
    if "max_iters" in solver:
        cfg_kwargs["max_iters"] = _integer(solver["max_iters"])
    config = SolveConfig(**cfg_kwargs)
    route = solver["route"].value if "route" in solver else "auto"
    if route not in ROUTES:
        ent = solver["route"]
        raise ParseError(f"route must be one of {', '.join(ROUTES)}, got {route!r}", ent.line, ent.col)

    spec = ProblemSpec(
        alpha=alpha,
        betas=betas,
        thetas=thetas,
        omega=omega,
        sigmas=tuple(_as_value(s) for s in sigmas),
        g=_as_value(g),
        e=e,
        T=T,
    )
    psi = _psi(sections.get("psi"), T)
    constant = all(isinstance(s, float) for s in spec.sigmas) and single_theta
    if route == "auto":
        route = "const" if constant and psi is None else "picard"
    const = None
    if route == "const":
        if psi is not None:
            raise ValidationError("the constant-coefficient route does not support [psi]")
        if not constant:
            raise ValidationError(
                "the constant-coefficient route needs constant sigmas and a single theta"
            )
        const = ConstProblem(alpha, spec.betas, thetas[0], omega, spec.sigmas, spec.g, spec.e, T)
    return ProblemFile(spec, config, route, hashlib.sha256(raw).hexdigest(), psi, const, sections)


def _as_value(fn):
    """Constant expressions become floats, so the constant route can recognise them."""
    if isinstance(fn, Expr) and fn.is_constant:
        return fn.constant_value()
    return fn


def _psi(section: Optional[Dict[str, Entry]], T: float) -> Optional[PsiFunction]:
    if section is None:
        return None
    fam = _require(section, "family", "psi")
    if fam.value not in FAMILIES:
        raise ParseError(
            f"unknown psi family {fam.value!r} (expected one of {', '.join(FAMILIES)})", fam.line, fam.col
        )
    allowed = _PSI_PARAMS[fam.value]
    kwargs = {}
    for key, entry in section.items():
        if key == "family":
            continue
        if key not in allowed:
            raise ParseError(f"parameter {key!r} does not belong to psi family {fam.value}", entry.line, 1)
        kwargs[allowed[key]] = _number(entry)
    return FAMILIES[fam.value](T, **kwargs)


def parse_problem(path: Union[str, Path]) -> Union[ProblemSpec, PsiProblemSpec, ConstProblem]:
    """Validated problem described by the file at ``path``."""
    return load_problem_file(path).problem
