"""Finite-dimensional Lie-algebra engine for the point symmetries of the model.

Generators live in the solved ansatz family::

    X = tau d/dt + (c1 x + c2) d/dx + (C v + D) d/dv + (A w + B) d/dw

with constant coefficients. The family is closed under the bracket, which
is computed in closed form. Subalgebra coefficients are column vectors in
the ordered basis ``(X1, X2)``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, fields

import numpy as np
from scipy.linalg import expm

from .errors import RegimeError, ValidationError
from .model import ModelParams


@dataclass(frozen=True)
class Generator:
    tau: float = 0.0
    xi_c1: float = 0.0
    xi_c2: float = 0.0
    phi_C: float = 0.0
    phi_D: float = 0.0
    psi_A: float = 0.0
    psi_B: float = 0.0

    def __post_init__(self):
        for f in fields(self):
            value = float(getattr(self, f.name))
            if not math.isfinite(value):
                raise ValidationError(f"generator coefficient {f.name} must be finite")
            object.__setattr__(self, f.name, value)

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, f.name) for f in fields(self)])

    @classmethod
    def from_array(cls, arr) -> Generator:
        return cls(*(float(a) for a in arr))

    def __add__(self, other: Generator) -> Generator:
        return Generator.from_array(self.as_array() + other.as_array())

    def __neg__(self) -> Generator:
        return Generator.from_array(-self.as_array())

    def __sub__(self, other: Generator) -> Generator:
        return self + (-other)

    def scale(self, s: float) -> Generator:
        return Generator.from_array(s * self.as_array())

    def is_zero(self) -> bool:
        return not np.any(self.as_array())

    def __str__(self) -> str:
        return render_generator(self)


def commutator(X: Generator, Y: Generator) -> Generator:
    """Vector-field bracket ``[X, Y]`` within the ansatz family."""
    return Generator(
        tau=0.0,
        xi_c1=0.0,
        xi_c2=X.xi_c2 * Y.xi_c1 - Y.xi_c2 * X.xi_c1,
        phi_C=0.0,
        phi_D=X.phi_D * Y.phi_C - Y.phi_D * X.phi_C,
        psi_A=0.0,
        psi_B=X.psi_B * Y.psi_A - Y.psi_B * X.psi_A,
    )


def _term(coef: float, body: str, first: bool) -> str:
    if coef == 0:
        return ""
    sign = "-" if coef < 0 else "+"
    mag = abs(coef)
    text = body if mag == 1 else f"{mag:.12g} {body}"
    if first:
        return ("-" if coef < 0 else "") + text
    return f" {sign} {text}"


def render_generator(X: Generator) -> str:
    """Plain-text form such as ``d/dt - 0.25 x d/dx``."""
    parts = [(X.tau, "d/dt"), (X.xi_c2, "d/dx"), (X.xi_c1, "x d/dx"),
             (X.phi_D, "d/dv"), (X.phi_C, "v d/dv"), (X.psi_B, "d/dw"), (X.psi_A, "w d/dw")]
    out = ""
    for coef, body in parts:
        out += _term(coef, body, not out)
    return out or "0"


DX = Generator(xi_c2=1.0)
DT = Generator(tau=1.0)


def time_scaling(lam: float) -> Generator:
    """``X_t = d/dt - (lam/2) x d/dx``."""
    return Generator(tau=1.0, xi_c1=-0.5 * lam)


def traveling(a: float) -> Generator:
    return Generator(tau=1.0, xi_c2=a)


def catalog(lam: float) -> dict[str, Generator]:
    """Generators named in the symmetry analysis, plus the scalings the analysis excludes."""
    out = {"d/dx": DX, "d/dt": DT}
    if lam != 0:
        # at lam = 0 this coincides with d/dt
        out["X_t"] = time_scaling(lam)
    out.update({"x d/dx": Generator(xi_c1=1.0), "v d/dv": Generator(phi_C=1.0),
                "w d/dw": Generator(psi_A=1.0)})
    return out


class Regime(enum.Enum):
    Generic = "generic"
    Untempered = "untempered"
    NoChemotaxisNoLogistic = "chi0-r0"


def parse_regime(name) -> Regime:
    if isinstance(name, Regime):
        return name
    for reg in Regime:
        if name in (reg.value, reg.name):
            return reg
    raise ValidationError(f"unknown regime {name!r}; expected one of "
                          f"{[r.value for r in Regime]}")


REGIME_DESCRIPTIONS = {
    Regime.Generic: "lam > 0, chi > 0, r > 0",
    Regime.Untempered: "lam = 0",
    Regime.NoChemotaxisNoLogistic: "chi = 0, r = 0, lam > 0",
}

TAG_DX = "<d/dx>"
TAG_DT = "<d/dt>"
TAG_TRAVEL = "<d/dt + a d/dx>"
TAG_XT = "<d/dt - (lambda/2) x d/dx>"


@dataclass(frozen=True)
class LieAlgebraCase:
    regime: Regime
    basis: tuple[Generator, ...]
    labels: tuple[str, ...]
    lam: float
    structure_constants: np.ndarray = field(init=False, repr=False, compare=False)
    discrete: tuple[str, ...] = ()

    def __post_init__(self):
        n = len(self.basis)
        mat = np.array([g.as_array() for g in self.basis]).T  # columns = basis
        c = np.zeros((n, n, n))
        for i in range(n):
            for j in range(n):
                br = commutator(self.basis[i], self.basis[j]).as_array()
                coef, *_ = np.linalg.lstsq(mat, br, rcond=None)
                if np.max(np.abs(mat @ coef - br)) > 1e-12 * max(1.0, np.max(np.abs(br))):
                    raise ValidationError(
                        f"basis not closed: [{self.labels[i]}, {self.labels[j]}] leaves the span")
                c[i, j] = coef
        if not np.allclose(c, -np.transpose(c, (1, 0, 2)), rtol=0, atol=1e-15):
            raise ValidationError("structure constants are not antisymmetric")
        object.__setattr__(self, "structure_constants", c)

    @property
    def dim(self) -> int:
        return len(self.basis)

    def element(self, coefs) -> Generator:
        coefs = np.asarray(coefs, dtype=float)
        if coefs.shape != (self.dim,):
            raise ValidationError(f"expected {self.dim} coefficients, got {coefs.shape}")
        out = Generator()
        for c, g in zip(coefs, self.basis):
            out = out + g.scale(c)
        return out


def algebra(regime, lam: float = 1.0) -> LieAlgebraCase:
    """Symmetry algebra of a regime.

    ``lam`` only matters for the chi = r = 0 regime, where it must be
    positive (at lam = 0 that regime collapses onto the untempered one).
    """
    regime = parse_regime(regime)
    if regime is Regime.Generic:
        return LieAlgebraCase(regime, (DX,), ("X1 = d/dx",), lam,
                              discrete=("reflection x -> -x (not in the continuous group)",))
    if regime is Regime.Untempered:
        return LieAlgebraCase(regime, (DX, DT), ("X1 = d/dx", "X2 = d/dt"), 0.0,
                              discrete=("reflection x -> -x (not in the continuous group)",))
    if not lam > 0:
        raise RegimeError("the chi = r = 0 algebra needs lam > 0", constraint="lam > 0")
    return LieAlgebraCase(regime, (DX, time_scaling(lam)),
                          ("X1 = d/dx", "X2 = d/dt - (lambda/2) x d/dx"), lam)


def ad_matrix(alg: LieAlgebraCase, index: int) -> np.ndarray:
    """Matrix of ``ad_{X_index}`` acting on coefficient column vectors."""
    if not 0 <= index < alg.dim:
        raise ValidationError(f"basis index {index} out of range for dimension {alg.dim}")
    return alg.structure_constants[index].T + 0.0


def adjoint_action(alg: LieAlgebraCase, index: int, eps: float) -> np.ndarray:
    """``Ad(exp(eps X_index)) = expm(eps ad_X)``."""
    return expm(eps * ad_matrix(alg, index))


@dataclass(frozen=True)
class SubalgebraRep:
    coefficients: tuple[float, ...]
    canonical_tag: str
    conjugator: tuple[tuple[str, float], ...] = ()
    parameter: float | None = None
    family: str | None = None

    def __post_init__(self):
        if self.family is None and not any(self.coefficients):
            raise ValidationError("a subalgebra needs a nonzero generator")

    @property
    def coef_alpha(self) -> float:
        return self.coefficients[0]

    @property
    def coef_beta(self) -> float:
        return self.coefficients[1] if len(self.coefficients) > 1 else 0.0

    def describe(self) -> str:
        text = self.canonical_tag
        if self.parameter is not None:
            text += f" with a = {self.parameter:.12g}"
        if self.family:
            text += f" ({self.family})"
        return text


def classify_subalgebra(alg: LieAlgebraCase, coef_alpha: float, coef_beta: float = 0.0) -> SubalgebraRep:
    """Optimal-system representative of ``<coef_alpha X1 + coef_beta X2>``."""
    a_, b_ = float(coef_alpha), float(coef_beta)
    if a_ == 0 and b_ == 0:
        raise ValidationError("the zero vector spans no subalgebra")
    if alg.dim == 1:
        if b_ != 0:
            raise ValidationError("this regime has a one-dimensional algebra; coef_beta must be 0")
        return SubalgebraRep((a_,), TAG_DX, (("scale", 1.0 / a_),))
    if alg.regime is Regime.Untempered:
        if b_ == 0:
            return SubalgebraRep((a_, b_), TAG_DX, (("scale", 1.0 / a_),))
        if a_ == 0:
            return SubalgebraRep((a_, b_), TAG_DT, (("scale", 1.0 / b_),))
        ratio = a_ / b_
        conj = (("scale", 1.0 / b_), ("reflect", 1.0 if ratio < 0 else 0.0))
        return SubalgebraRep((a_, b_), TAG_TRAVEL, conj, parameter=abs(ratio))
    if b_ != 0:
        delta = 2.0 * a_ / (alg.lam * b_)
        return SubalgebraRep((a_, b_), TAG_XT, (("delta", delta), ("scale", 1.0 / b_)))
    return SubalgebraRep((a_, b_), TAG_DX, (("scale", 1.0 / a_),))


def optimal_system(regime, lam: float = 1.0) -> list[SubalgebraRep]:
    regime = parse_regime(regime)
    if regime is Regime.Generic:
        return [SubalgebraRep((1.0,), TAG_DX)]
    if regime is Regime.Untempered:
        return [SubalgebraRep((1.0, 0.0), TAG_DX),
                SubalgebraRep((0.0, 1.0), TAG_DT),
                SubalgebraRep((0.0, 0.0), TAG_TRAVEL, family="a >= 0")]
    return [SubalgebraRep((1.0, 0.0), TAG_DX), SubalgebraRep((0.0, 1.0), TAG_XT)]


def find_conjugation(alg: LieAlgebraCase, source, target, eps_grid, delta_grid,
                     tol: float = 1e-9) -> tuple[float, float] | None:
    """Search ``Ad(exp(eps X2)) Ad(exp(delta X1)) source`` for a multiple of ``target``.

    Returns the first ``(eps, delta)`` found or ``None``. Two-dimensional
    algebras only.
    """
    if alg.dim != 2:
        raise ValidationError("conjugation search needs a two-dimensional algebra")
    src = np.asarray(source, dtype=float)
    tgt = np.asarray(target, dtype=float)
    tgt = tgt / np.linalg.norm(tgt)
    ad1 = np.array([adjoint_action(alg, 0, d) for d in delta_grid]) @ src  # (nd, 2)
    ad2 = np.array([adjoint_action(alg, 1, e) for e in eps_grid])  # (ne, 2, 2)
    for ie, m in enumerate(ad2):
        img = ad1 @ m.T
        norms = np.linalg.norm(img, axis=1)
        cross = np.abs(img[:, 0] * tgt[1] - img[:, 1] * tgt[0]) / norms
        hit = np.flatnonzero(cross < tol)
        if hit.size:
            return float(eps_grid[ie]), float(delta_grid[hit[0]])
    return None


# ---------------------------------------------------------------------------
# determining equations


@dataclass(frozen=True)
class Relation:
    name: str
    residual: float
    binding: bool = True


@dataclass(frozen=True)
class DeterminingReport:
    generator: Generator
    relations: tuple[Relation, ...]
    tol: float = 1e-12

    @property
    def admitted(self) -> bool:
        return all(abs(r.residual) <= self.tol for r in self.relations if r.binding)

    def residual(self, name: str) -> float:
        for r in self.relations:
            if r.name == name:
                return r.residual
        raise KeyError(name)

    def to_text(self) -> str:
        lines = [f"generator: {render_generator(self.generator)}"]
        for r in self.relations:
            flag = "" if r.binding else "  (advisory)"
            lines.append(f"  {r.name:<40s} {r.residual: .6e}{flag}")
        lines.append(f"verdict: {'admitted' if self.admitted else 'rejected'}")
        return "\n".join(lines)


BALANCE = "lam*tau + 2*c1"
CHEMICAL = "-2*D_c*c1 + 2*D_c*A"


def check_determining(X: Generator, params: ModelParams, regime=None) -> DeterminingReport:
    """Evaluate the determining relations on the ansatz.

    ``xi_x = c1`` and ``xi_xx = 0`` hold identically in the ansatz. The
    balance relation reduces to ``lam*tau + 2*c1`` since ``tau_t = 0``.
    Nullities: the dependent-variable parts vanish in every regime;
    chemotaxis or logistic growth forces ``c1 = 0``; with tempering on top
    of that, ``tau = 0`` as well. The chemical relation is reported but does
    not enter the verdict.
    """
    if regime is not None:
        reg = parse_regime(regime)
        if reg.value not in params.regimes():
            raise RegimeError(f"parameters do not lie in the {reg.value} regime "
                              f"({REGIME_DESCRIPTIONS[reg]})", constraint=REGIME_DESCRIPTIONS[reg])
    nonlinear = params.chi != 0 or params.r != 0
    rel = [
        Relation("xi_x = c1", 0.0),
        Relation("xi_xx = 0", 0.0),
        Relation(BALANCE, params.lam * X.tau + 2.0 * X.xi_c1),
        Relation(CHEMICAL, -2.0 * params.D_c * X.xi_c1 + 2.0 * params.D_c * X.psi_A, binding=False),
        Relation("phi: C = 0", X.phi_C),
        Relation("phi: D = 0", X.phi_D),
        Relation("psi: A = 0", X.psi_A),
        Relation("psi: B = 0", X.psi_B),
    ]
    if nonlinear:
        rel.append(Relation("chi or r nonzero: c1 = 0", X.xi_c1))
        if params.lam > 0:
            rel.append(Relation("lam > 0 with chi or r nonzero: tau = 0", X.tau))
    return DeterminingReport(X, tuple(rel))


def admitted_catalog(params: ModelParams) -> list[str]:
    """Names from :func:`catalog` that pass :func:`check_determining`."""
    return [name for name, g in catalog(params.lam).items()
            if check_determining(g, params).admitted]


# ---------------------------------------------------------------------------
# text


def _fmt_matrix(m: np.ndarray) -> list[str]:
    return ["    [" + ", ".join(f"{v: .6g}" for v in row) + "]" for row in m]


def describe(alg: LieAlgebraCase) -> str:
    lines = [f"regime: {alg.regime.value} ({REGIME_DESCRIPTIONS[alg.regime]})"]
    if alg.regime is Regime.NoChemotaxisNoLogistic:
        lines.append(f"lambda = {alg.lam:.12g}")
    lines.append("basis:")
    for label, g in zip(alg.labels, alg.basis):
        lines.append(f"  {label}    [{render_generator(g)}]")
    lines.append("commutators:")
    names = [lab.split(" =")[0] for lab in alg.labels]
    for i in range(alg.dim):
        for j in range(i + 1, alg.dim):
            c = alg.structure_constants[i, j]
            terms = " + ".join(f"{v:.12g} {names[k]}" for k, v in enumerate(c) if v != 0) or "0"
            lines.append(f"  [{names[i]}, {names[j]}] = {terms}")
            cr = alg.structure_constants[j, i]
            terms = " + ".join(f"{v:.12g} {names[k]}" for k, v in enumerate(cr) if v != 0) or "0"
            lines.append(f"  [{names[j]}, {names[i]}] = {terms}")
    if alg.dim == 1:
        lines.append("  [X1, X1] = 0")
    lines.append("ad matrices:")
    for i in range(alg.dim):
        lines.append(f"  ad {names[i]}:")
        lines += _fmt_matrix(ad_matrix(alg, i))
    lines.append("optimal system:")
    for rep in optimal_system(alg.regime, alg.lam):
        lines.append(f"  {rep.describe()}")
    if alg.dim == 1:
        lines.append("  (single conjugacy class)")
    if alg.regime is Regime.NoChemotaxisNoLogistic:
        lines.append("conjugators:")
        lines.append("  Ad(exp(eps X2)) = [[exp(lambda eps / 2), 0], [0, 1]]")
        lines.append("  Ad(exp(delta X1)) = [[1, -lambda delta / 2], [0, 1]]")
        lines.append("  alpha X1 + beta X2, beta != 0: delta = 2 alpha / (lambda beta) gives beta X2")
        lines.append("  beta = 0: <X1>")
    if alg.regime is Regime.Untempered:
        lines.append("conjugators:")
        lines.append("  alpha X1 + beta X2, alpha beta != 0: scale by 1/beta, a = |alpha / beta|")
        lines.append("  alpha / beta < 0 uses the reflection x -> -x")
    for d in alg.discrete:
        lines.append(f"discrete: {d}")
    return "\n".join(lines) + "\n"
