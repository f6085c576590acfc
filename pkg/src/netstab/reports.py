"""Report and trajectory emission.

Three formats: ``human`` (aligned text), ``machine`` (one self-describing
JSON document per report type, schema-tagged and byte-deterministic), and
``table`` (comma-separated trajectory rows at full precision). Machine
documents round-trip losslessly through :func:`parse_machine`.
"""

from __future__ import annotations

import json

import numpy as np

from .analysis import AnalysisReport
from .codesign import CoDesign, CoDesignResult
from .cyclic import CyclicDecomposition
from .errors import InvalidInput, ParseError
from .majorize import OrderVerdict
from .numerics import MatrixTrajectory
from .plantmodel import PlantValidation

HUMAN = "human"
MACHINE = "machine"
TABLE = "table"

_SCHEMA_PREFIX = "netstab"


def _real(a):
    return np.asarray(a, dtype=float).tolist()


def _complex_list(a):
    return [[float(z.real), float(z.imag)] for z in np.asarray(a).ravel()]


def _from_complex(pairs):
    return np.array([complex(re, im) for re, im in pairs])


def _opt(a, conv=_real):
    return None if a is None else conv(a)


# ---------------------------------------------------------------------------
# machine payloads


def _payload_validation(r: PlantValidation):
    return {
        "stabilizable": r.stabilizable,
        "unstable": r.unstable,
        "has_axis_eigenvalues": r.has_axis_eigenvalues,
        "entropy": float(r.entropy),
        "eigenvalues": _complex_list(r.eigenvalues),
        "pbh_failures": _complex_list(np.asarray(r.pbh_failures, dtype=complex)),
    }


def _build_validation(p):
    return PlantValidation(
        stabilizable=p["stabilizable"],
        unstable=p["unstable"],
        has_axis_eigenvalues=p["has_axis_eigenvalues"],
        entropy=p["entropy"],
        eigenvalues=_from_complex(p["eigenvalues"]),
        pbh_failures=tuple(_from_complex(p["pbh_failures"])),
    )


def _payload_decomposition(d: CyclicDecomposition):
    return {
        "P": _real(d.P),
        "Q": _real(d.Q),
        "blocks": [{"A": _real(Ai), "b": _real(bi)} for Ai, bi in d.blocks],
        "k": int(d.k),
        "h": _real(d.h),
        "seed": int(d.seed),
    }


def _build_decomposition(p):
    return CyclicDecomposition(
        P=np.asarray(p["P"], dtype=float),
        Q=np.asarray(p["Q"], dtype=float),
        blocks=tuple(
            (np.asarray(b["A"], dtype=float), np.asarray(b["b"], dtype=float))
            for b in p["blocks"]
        ),
        k=int(p["k"]),
        h=np.asarray(p["h"], dtype=float),
        seed=int(p["seed"]),
    )


def _payload_order(v: OrderVerdict):
    return {
        "relation": v.relation,
        "holds": v.holds,
        "slack": _real(v.slack),
        "x_prefix": _real(v.x_prefix),
        "y_prefix": _real(v.y_prefix),
        "ascending": v.ascending,
    }


def _build_order(p):
    return OrderVerdict(
        relation=p["relation"],
        holds=p["holds"],
        slack=np.asarray(p["slack"], dtype=float),
        x_prefix=np.asarray(p["x_prefix"], dtype=float),
        y_prefix=np.asarray(p["y_prefix"], dtype=float),
        ascending=p["ascending"],
    )


def _payload_design(d: CoDesign):
    return {
        "kind": d.kind,
        "F": _real(d.F),
        "T": _real(d.T),
        "R": _real(d.R),
        "epsilon": float(d.epsilon),
        "gamma": _real(d.gamma),
        "U": _real(d.U),
        "mean": _opt(d.mean),
        "m_active": int(d.m_active),
        "note": d.note,
    }


def _build_design(p):
    return CoDesign(
        kind=p["kind"],
        F=np.asarray(p["F"], dtype=float),
        T=np.asarray(p["T"], dtype=float),
        R=np.asarray(p["R"], dtype=float),
        epsilon=p["epsilon"],
        gamma=np.asarray(p["gamma"], dtype=float),
        U=np.asarray(p["U"], dtype=float),
        mean=None if p["mean"] is None else np.asarray(p["mean"], dtype=float),
        m_active=p["m_active"],
        note=p["note"],
    )


def _payload_analysis(r: AnalysisReport):
    return {
        "verdict": r.verdict,
        "kind": r.kind,
        "closed_loop_spectrum": _complex_list(r.closed_loop_spectrum),
        "margins": _real(r.margins),
        "channel_powers": _opt(r.channel_powers),
        "ms_norm": _opt(r.ms_norm),
    }


def _build_analysis(p):
    return AnalysisReport(
        verdict=p["verdict"],
        kind=p["kind"],
        closed_loop_spectrum=_from_complex(p["closed_loop_spectrum"]),
        margins=np.asarray(p["margins"], dtype=float),
        channel_powers=None
        if p["channel_powers"] is None
        else np.asarray(p["channel_powers"], dtype=float),
        ms_norm=None if p["ms_norm"] is None else np.asarray(p["ms_norm"], dtype=float),
    )


def _payload_result(r: CoDesignResult):
    return {
        "feasible": r.feasible,
        "order": _payload_order(r.order),
        "decomposition": _payload_decomposition(r.decomposition),
        "design": None if r.design is None else _payload_design(r.design),
        "report": None if r.report is None else _payload_analysis(r.report),
        "epsilon_trail": [[float(e), v] for e, v in r.epsilon_trail],
        "note": r.note,
    }


def _build_result(p):
    return CoDesignResult(
        feasible=p["feasible"],
        order=_build_order(p["order"]),
        decomposition=_build_decomposition(p["decomposition"]),
        design=None if p["design"] is None else _build_design(p["design"]),
        report=None if p["report"] is None else _build_analysis(p["report"]),
        epsilon_trail=tuple((e, v) for e, v in p["epsilon_trail"]),
        note=p["note"],
    )


def _payload_trajectory(t: MatrixTrajectory):
    return {
        "times": _real(t.times),
        "states": _real(t.states),
        "diverged_at": None if t.diverged_at is None else float(t.diverged_at),
    }


def _build_trajectory(p):
    return MatrixTrajectory(
        times=np.asarray(p["times"], dtype=float),
        states=np.asarray(p["states"], dtype=float),
        diverged_at=p["diverged_at"],
    )


_MACHINE_CODECS = {
    PlantValidation: ("plant-validation", _payload_validation),
    CyclicDecomposition: ("decomposition", _payload_decomposition),
    OrderVerdict: ("order-verdict", _payload_order),
    CoDesign: ("design", _payload_design),
    CoDesignResult: ("codesign-result", _payload_result),
    AnalysisReport: ("analysis", _payload_analysis),
    MatrixTrajectory: ("trajectory", _payload_trajectory),
}

_MACHINE_BUILDERS = {
    "plant-validation": _build_validation,
    "decomposition": _build_decomposition,
    "order-verdict": _build_order,
    "design": _build_design,
    "codesign-result": _build_result,
    "analysis": _build_analysis,
    "trajectory": _build_trajectory,
}


def emit_machine(obj) -> str:
    for cls, (name, payload) in _MACHINE_CODECS.items():
        if isinstance(obj, cls):
            doc = {"schema": f"{_SCHEMA_PREFIX}/{name}/v1", "payload": payload(obj)}
            return json.dumps(doc, sort_keys=True, separators=(",", ":")) + "\n"
    raise InvalidInput(f"no machine form for {type(obj).__name__}")


def parse_machine(text: str):
    """Rebuild a report object from its machine document."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid machine document: {exc}") from None
    schema = doc.get("schema", "")
    parts = schema.split("/")
    if len(parts) != 3 or parts[0] != _SCHEMA_PREFIX or parts[2] != "v1":
        raise ParseError(f"unsupported schema {schema!r}")
    builder = _MACHINE_BUILDERS.get(parts[1])
    if builder is None:
        raise ParseError(f"unsupported schema {schema!r}")
    return builder(doc["payload"])


# ---------------------------------------------------------------------------
# human rendering


def _fmt_matrix(a, indent="  "):
    a = np.atleast_2d(np.asarray(a))
    rows = []
    for row in a:
        rows.append(indent + "[" + "  ".join(f"{v: .10g}" for v in row) + "]")
    return "\n".join(rows)


def _fmt_vec(a):
    return "(" + ", ".join(f"{v:.10g}" for v in np.asarray(a).ravel()) + ")"


def _fmt_cvec(a):
    parts = []
    for z in np.asarray(a).ravel():
        z = complex(z)
        if abs(z.imag) < 1e-12:
            parts.append(f"{z.real:.10g}")
        else:
            parts.append(f"{z.real:.10g}{z.imag:+.10g}j")
    return "(" + ", ".join(parts) + ")"


def _human_validation(r: PlantValidation):
    lines = [
        "plant validation",
        f"  stabilizable        : {'yes' if r.stabilizable else 'no'}",
        f"  unstable            : {'yes' if r.unstable else 'no'}",
        f"  axis eigenvalues    : {'yes' if r.has_axis_eigenvalues else 'no'}",
        f"  topological entropy : {r.entropy:.10g}",
        f"  eigenvalues         : {_fmt_cvec(r.eigenvalues)}",
    ]
    if r.pbh_failures:
        lines.append(f"  PBH failures        : {_fmt_cvec(np.asarray(r.pbh_failures))}")
    return "\n".join(lines) + "\n"


def _human_decomposition(d: CyclicDecomposition):
    lines = [
        "cyclic decomposition",
        f"  blocks (k)          : {d.k}",
        f"  block entropies     : {_fmt_vec(d.h)}",
        f"  seed                : {d.seed}",
    ]
    for j, (Ai, bi) in enumerate(d.blocks, start=1):
        lines.append(f"  block {j}: dim {Ai.shape[0]}, b = {_fmt_vec(bi)}")
        lines.append(_fmt_matrix(Ai, indent="    "))
    lines.append("  state transformation P:")
    lines.append(_fmt_matrix(d.P, indent="    "))
    lines.append("  input transformation Q:")
    lines.append(_fmt_matrix(d.Q, indent="    "))
    return "\n".join(lines) + "\n"


def _human_order(v: OrderVerdict):
    direction = "ascending" if v.ascending else "descending"
    lines = [
        f"order check ({v.relation}, {direction} prefix sums)",
        f"  holds: {'yes' if v.holds else 'no'}",
        f"  {'prefix':>8} {'left':>16} {'right':>16} {'slack':>16}",
    ]
    for i, (xp, yp, s) in enumerate(zip(v.x_prefix, v.y_prefix, v.slack), start=1):
        lines.append(f"  {i:>8} {xp:>16.10g} {yp:>16.10g} {s:>16.10g}")
    return "\n".join(lines) + "\n"


def _human_analysis(r: AnalysisReport):
    lines = [
        "closed-loop analysis",
        f"  verdict             : {r.verdict}",
        f"  channel kind        : {r.kind}",
        f"  closed-loop spectrum: {_fmt_cvec(r.closed_loop_spectrum)}",
    ]
    if r.channel_powers is not None:
        lines.append(f"  channel powers      : {_fmt_vec(r.channel_powers)}")
    if r.ms_norm is not None:
        lines.append(f"  mean-square norm    : {float(r.ms_norm[0]):.10g}")
    if r.margins.size:
        lines.append(f"  margins             : {_fmt_vec(r.margins)}")
    return "\n".join(lines) + "\n"


def _human_design(d: CoDesign):
    lines = [
        "co-design",
        f"  kind     : {d.kind}",
        f"  epsilon  : {d.epsilon:.10g}",
        f"  demands  : {_fmt_vec(d.gamma)}",
        "  gain F:",
        _fmt_matrix(d.F, indent="    "),
        "  encoder T:",
        _fmt_matrix(d.T, indent="    "),
        "  decoder R:",
        _fmt_matrix(d.R, indent="    "),
        "  isometry U:",
        _fmt_matrix(d.U, indent="    "),
    ]
    if d.note:
        lines.append(f"  note     : {d.note}")
    return "\n".join(lines) + "\n"


def _human_result(r: CoDesignResult):
    lines = [f"co-design {'feasible' if r.feasible else 'infeasible'}"]
    lines.append(_human_order(r.order).rstrip("\n"))
    if r.design is not None:
        lines.append(_human_design(r.design).rstrip("\n"))
        tried = ", ".join(f"{e:g}:{v}" for e, v in r.epsilon_trail)
        lines.append(f"  scaling trail: {tried}")
    if r.report is not None:
        lines.append(_human_analysis(r.report).rstrip("\n"))
    if r.note:
        lines.append(f"  note: {r.note}")
    return "\n".join(lines) + "\n"


def _human_trajectory(t: MatrixTrajectory):
    norms = t.frobenius_norms()
    lines = [
        "covariance trajectory",
        f"  samples  : {t.times.size}",
        f"  t range  : [0, {t.times[-1]:.10g}]",
        f"  |X| start: {norms[0]:.10g}",
        f"  |X| end  : {norms[-1]:.10g}",
        f"  diverged : {'yes, at t=%.6g' % t.diverged_at if t.diverged else 'no'}",
    ]
    return "\n".join(lines) + "\n"


_HUMAN_RENDERERS = {
    PlantValidation: _human_validation,
    CyclicDecomposition: _human_decomposition,
    OrderVerdict: _human_order,
    CoDesign: _human_design,
    CoDesignResult: _human_result,
    AnalysisReport: _human_analysis,
    MatrixTrajectory: _human_trajectory,
}


def emit_human(obj) -> str:
    for cls, render in _HUMAN_RENDERERS.items():
        if isinstance(obj, cls):
            return render(obj)
    raise InvalidInput(f"no human form for {type(obj).__name__}")


# ---------------------------------------------------------------------------
# trajectory tables


def emit_table(traj: MatrixTrajectory) -> str:
    """Comma-separated trajectory: ``t, x11, x12, ..., frobenius_norm`` with a
    header row and 17 significant digits."""
    if not isinstance(traj, MatrixTrajectory):
        raise InvalidInput("table format applies to trajectories only")
    n = traj.states.shape[1]
    header = ["t"]
    header += [f"x{i + 1}{j + 1}" for i in range(n) for j in range(n)]
    header.append("frobenius_norm")
    rows = [",".join(header)]
    norms = traj.frobenius_norms()
    for t, X, fn in zip(traj.times, traj.states, norms):
        cells = [f"{t:.17g}"]
        cells += [f"{v:.17g}" for v in X.ravel()]
        cells.append(f"{fn:.17g}")
        rows.append(",".join(cells))
    return "\n".join(rows) + "\n"


def emit(obj, format: str = HUMAN) -> str:
    """Render a report or trajectory in the requested format."""
    if format == HUMAN:
        return emit_human(obj)
    if format == MACHINE:
        return emit_machine(obj)
    if format == TABLE:
        return emit_table(obj)
    raise InvalidInput(f"unknown format {format!r}")


__all__ = [
    "HUMAN",
    "MACHINE",
    "TABLE",
    "emit",
    "emit_human",
    "emit_machine",
    "emit_table",
    "parse_machine",
]
