"""Errors against projected exact solutions, observed orders and reports."""

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from .forms import norm_triple_V, norm_triple_W
from .problems import ProblemSpec
from .stepper import SimulationState
from .weakspace import interpolate

ERROR_NAMES = ("u_l2", "u_V", "p_l2", "p_W")
CSV_HEADER = ("level", "h", "dofs", "err_u_l2", "ord_u_l2", "err_u_V", "ord_u_V",
              "err_p_l2", "ord_p_l2", "err_p_W", "ord_p_W")
RATIO_HEADER = ("level", "h", "ratio_u_l2", "ratio_u_V", "ratio_p_l2", "ratio_p_W")
MISSING = "-"


@dataclass(frozen=True)
class ErrorQuad:
    u_l2: float
    u_V: float
    p_l2: float
    p_W: float

    def as_tuple(self):
        return tuple(getattr(self, name) for name in ERROR_NAMES)


def measure_errors(state: SimulationState, problem: ProblemSpec) -> ErrorQuad:
    """|Q0 u(T) - u0|, |||Q_h u(T) - u_h|||_V, |Q0 p(T) - p0|, |||Q_h p(T) - p_h|||_W."""
    disc = state.system.disc
    mesh = disc.mesh
    u_exact, p_exact = interpolate(mesh, disc.info, problem.u, problem.p, state.time)
    u_h, p_h = state.fields
    eu = u_exact - u_h
    ep = p_exact - p_h

    u_sq = p_sq = 0.0
    for ops in disc.ops:
        k = ops.cell
        cu = eu.interior[k].reshape(2, -1)
        u_sq += sum(float(c @ ops.mass_u @ c) for c in cu)
        cp = ep.interior[k]
        p_sq += float(cp @ ops.mass_p @ cp)
    return ErrorQuad(math.sqrt(max(u_sq, 0.0)), norm_triple_V(mesh, disc.forms, eu),
                     math.sqrt(max(p_sq, 0.0)), norm_triple_W(mesh, disc.forms, ep))


def convergence_orders(labels: Sequence[float], errors: Sequence[float]) -> List[Optional[float]]:
    """log(e_{k-1}/e_k) / log(h_{k-1}/h_k); None for the first level and zero errors."""
    if len(labels) != len(errors):
        raise ValueError("labels and errors differ in length")
    orders: List[Optional[float]] = [None]
    for k in range(1, len(errors)):
        e0, e1 = errors[k - 1], errors[k]
        h0, h1 = labels[k - 1], labels[k]
        if e0 <= 0.0 or e1 <= 0.0 or h0 == h1:
            orders.append(None)
        else:
            orders.append(math.log(e0 / e1) / math.log(h0 / h1))
    return orders


@dataclass
class LevelResult:
    level: int
    label: float
    dofs: int
    errors: ErrorQuad
    steps: int = 0
    elapsed: float = 0.0
    max_residual: float = 0.0


@dataclass
class StudyReport:
    problem: str
    family: str
    degree: int
    lam: float
    levels: List[LevelResult] = field(default_factory=list)

    @property
    def labels(self) -> List[float]:
        return [lv.label for lv in self.levels]

    def errors(self, name: str) -> List[float]:
        return [getattr(lv.errors, name) for lv in self.levels]

    def orders(self) -> Dict[str, List[Optional[float]]]:
        return {name: convergence_orders(self.labels, self.errors(name)) for name in ERROR_NAMES}

    def finest_orders(self) -> Dict[str, Optional[float]]:
        return {name: values[-1] for name, values in self.orders().items()}


def _sci(value: float) -> str:
    return f"{value:.3E}"


def _order(value: Optional[float]) -> str:
    return MISSING if value is None else f"{value:.4f}"


def report_csv(report: StudyReport) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    orders = report.orders()
    for i, lv in enumerate(report.levels):
        row = [lv.level, _sci(lv.label), lv.dofs]
        for name in ERROR_NAMES:
            row += [_sci(getattr(lv.errors, name)), _order(orders[name][i])]
        writer.writerow(row)
    return buf.getvalue()


def parse_report_csv(text: str) -> List[Dict[str, str]]:
    rows = list(csv.DictReader(io.StringIO(text)))
    if rows and tuple(rows[0].keys()) != CSV_HEADER:
        raise ValueError("not a study report: unexpected header")
    return rows


def ratio_summary(reports: Sequence[StudyReport]) -> List[Dict[str, float]]:
    """Per level, max/min of each error across reports on the same levels."""
    if not reports:
        return []
    n_levels = len(reports[0].levels)
    if any(len(r.levels) != n_levels for r in reports):
        raise ValueError("reports must cover the same levels")
    rows = []
    for i in range(n_levels):
        row = {"level": reports[0].levels[i].level, "h": reports[0].levels[i].label}
        for name in ERROR_NAMES:
            values = np.array([getattr(r.levels[i].errors, name) for r in reports])
            low = values.min()
            row[f"ratio_{name}"] = float(values.max() / low) if low > 0.0 else math.inf
        rows.append(row)
    return rows


def ratio_csv(reports: Sequence[StudyReport]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(RATIO_HEADER)
    for row in ratio_summary(reports):
        writer.writerow([row["level"], _sci(row["h"])]
                        + [f"{row[f'ratio_{name}']:.4f}" for name in ERROR_NAMES])
    return buf.getvalue()


def plot_data(reports: Dict[str, StudyReport]) -> str:
    """``h error`` pairs per curve, each block headed by ``# <curve>``."""
    out = []
    for tag, report in reports.items():
        for name in ERROR_NAMES:
            out.append(f"# {tag} err_{name}" if tag else f"# err_{name}")
            out += [f"{_sci(h)} {_sci(e)}" for h, e in zip(report.labels, report.errors(name))]
            out.append("")
    return "\n".join(out)
