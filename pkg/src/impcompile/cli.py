"""Command-line front end: compile, verify, and sweep.

Configuration is a flat ``key=value`` text file (keys: P, c, M, epsilon,
tol, particles, a_override); command-line flags override config values.
Reports are written atomically with fixed float formatting so identical
inputs produce byte-identical outputs.

Exit codes: 0 success, 1 verification failure, 2 usage or input error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import analysis, hamiltonians, propagators
from .circuit import Circuit, CircuitFormatError, parse_circuit, theta_mod_4pi
from .fock import build_basis
from .pulses import PulseSchedule, build_fourier_table

_CONFIG_KEYS = {"P", "c", "M", "epsilon", "tol", "particles", "a_override"}


class UsageError(Exception):
    pass


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    out: dict[str, float] = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from None
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"config line {line_no}: expected key=value, got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _CONFIG_KEYS:
            raise UsageError(f"config line {line_no}: unknown key {key!r}")
        try:
            out[key] = float(value)
        except ValueError:
            raise UsageError(f"config line {line_no}: bad number {value!r}") from None
    return out


def _read_circuit(path: str) -> Circuit:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read circuit {path}: {exc}") from None
    try:
        return parse_circuit(text)
    except CircuitFormatError as exc:
        raise UsageError(f"{path}: {exc}") from None


def _resolve(circ: Circuit, config: dict, args) -> dict:
    """Fill P, c, M, epsilon, tol, particles, a; derive c and M when absent."""
    n_gates = circ.n_instructions
    period = config.get("P", float(n_gates))
    tol = args.tol if args.tol is not None else config.get("tol", 1e-9)
    epsilon = config.get("epsilon", 0.1)
    particles = int(config.get("particles", 1))
    offset = config.get("a_override")
    width = config.get("c")
    order = args.m if getattr(args, "m", None) is not None else config.get("M")
    alpha = None
    if width is None or order is None:
        basis = build_basis(circ.n_modes, particles)
        y_norm, theta_max = analysis.instance_norms(circ, basis)
        if theta_max <= 0:
            # all-zero angles: bounds vanish; any width works, one mode suffices
            width = width if width is not None else period / (4.0 * n_gates)
            order = int(order) if order is not None else 1
        else:
            selected = analysis.select_parameters(y_norm, theta_max, n_gates, period, epsilon)
            alpha = None if not np.isfinite(selected.alpha) else selected.alpha
            if width is None:
                width = selected.width
            if order is None:
                order = selected.order_min
    return {
        "period": float(period),
        "width": float(width),
        "order": int(order),
        "epsilon": float(epsilon),
        "tol": float(tol),
        "particles": particles,
        "offset": offset,
        "alpha": alpha,
    }


def _json_bytes(payload) -> bytes:
    return (json.dumps(payload, indent=2, sort_keys=True, allow_nan=False) + "\n").encode()


def _write_atomic(path: Path, data: bytes) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "wb") as handle:
            handle.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _csv_bytes(header: list[str], rows: list[list]) -> bytes:
    lines = [",".join(header)]
    for row in rows:
        cells = [repr(cell) if isinstance(cell, float) else str(cell) for cell in row]
        lines.append(",".join(cells))
    return ("\n".join(lines) + "\n").encode()


def cmd_compile(args) -> int:
    circ = _read_circuit(args.circuit)
    config = _load_config(args.config)
    params = _resolve(circ, config, args)
    out_dir = Path(args.out)
    sched = PulseSchedule.from_circuit(circ, params["period"], params["width"])
    table = build_fourier_table(sched, params["order"])

    rows = []
    for op in table.operator_ids():
        for m in range(-table.order, table.order + 1):
            coeff = table.coefficient(op, m)
            rows.append([str(op), m, float(coeff.real), float(coeff.imag)])
    _write_atomic(out_dir / "fourier_table.csv", _csv_bytes(["operator", "m", "re", "im"], rows))

    basis = build_basis(circ.n_modes * (2 * params["order"] + 1), params["particles"])
    spec = hamiltonians.build_h_ind_spec(circ.n_modes, params["order"], table)
    matrix = hamiltonians.spec_matrix(spec, basis)
    entries = [
        [row, col, float(val.real), float(val.imag)] for row, col, val in matrix.entries()
    ]
    _write_atomic(out_dir / "h_ind.csv", _csv_bytes(["row", "col", "re", "im"], entries))

    y_norm, theta_max = analysis.instance_norms(circ, build_basis(circ.n_modes, params["particles"]))
    budget = analysis.make_budget(
        y_norm,
        theta_max,
        circ.n_instructions,
        params["period"],
        params["width"],
        params["order"],
        offset=params["offset"],
        alpha=params["alpha"],
        epsilon=params["epsilon"],
    )
    summary = {
        "parameters": {
            "n_modes": circ.n_modes,
            "S": circ.n_instructions,
            "P": params["period"],
            "c": params["width"],
            "M": params["order"],
            "epsilon": params["epsilon"],
            "tol": params["tol"],
            "particles": params["particles"],
            "thetas_mod_4pi": [theta_mod_4pi(inst.theta) for inst in circ.instructions],
        },
        "dimensions": {
            "sector": build_basis(circ.n_modes, params["particles"]).dimension,
            "cylinder_modes": circ.n_modes * (2 * params["order"] + 1),
            "cylinder_sector": basis.dimension,
            "h_ind_nonzeros": matrix.nnz,
        },
        "bounds": {
            "e_area": budget.e_area_bound,
            "e_fourier": budget.e_fourier_bound,
            "e_total": budget.e_total_bound,
        },
    }
    _write_atomic(out_dir / "summary.json", _json_bytes(summary))
    print(f"wrote {out_dir / 'fourier_table.csv'}, {out_dir / 'h_ind.csv'}, {out_dir / 'summary.json'}")
    return 0


def cmd_verify(args) -> int:
    circ = _read_circuit(args.circuit)
    config = _load_config(args.config)
    params = _resolve(circ, config, args)
    report = analysis.measure_pipeline(
        circ,
        params["period"],
        params["width"],
        params["order"],
        params["tol"],
        n_particles=params["particles"],
        offset=params["offset"],
        epsilon=params["epsilon"],
        alpha=params["alpha"],
    )
    _write_atomic(Path(args.out) / "report.json", _json_bytes(report))
    all_pass = True
    for check in report["checks"]:
        status = "PASS" if check["pass"] else "FAIL"
        all_pass = all_pass and check["pass"]
        print(f"[{status}] {check['name']}: {check['detail']}")
    print(f"report: {Path(args.out) / 'report.json'}")
    return 0 if all_pass else 1


def _parse_m_range(spec: str) -> list[int]:
    try:
        lo, hi, step = (int(part) for part in spec.split(":"))
    except ValueError:
        raise UsageError(f"bad --m-range {spec!r}, expected lo:hi:step") from None
    if step <= 0 or hi < lo:
        raise UsageError(f"bad --m-range {spec!r}")
    return list(range(lo, hi + 1, step))


def cmd_sweep(args) -> int:
    circ = _read_circuit(args.circuit)
    config = _load_config(args.config)
    params = _resolve(circ, config, args)
    orders = _parse_m_range(args.m_range)
    result = analysis.m_sweep(
        circ,
        params["period"],
        params["width"],
        orders,
        params["tol"],
        n_particles=params["particles"],
        offset=params["offset"],
    )
    out_dir = Path(args.out)
    rows = [
        [order, float(dist), float(bound) if bound is not None else ""]
        for order, dist, bound in zip(result.orders, result.distances, result.tail_bounds)
    ]
    _write_atomic(out_dir / "sweep.csv", _csv_bytes(["M", "distance", "tail_bound"], rows))
    payload = result.as_dict()
    payload["parameters"] = {
        "P": params["period"],
        "c": params["width"],
        "tol": params["tol"],
        "particles": params["particles"],
    }
    _write_atomic(out_dir / "sweep.json", _json_bytes(payload))
    print(
        f"sweep over M={orders[0]}..{orders[-1]}: fitted slope {result.fitted_slope:.6g}, "
        f"analytic slope {result.analytic_slope:.6g}"
    )
    print(f"wrote {out_dir / 'sweep.csv'}, {out_dir / 'sweep.json'}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="impcompile",
        description="Compile gate sequences into a static cylinder Hamiltonian and verify the reduction chain numerically.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, handler in (("compile", cmd_compile), ("verify", cmd_verify), ("sweep", cmd_sweep)):
        cmd = sub.add_parser(name)
        cmd.add_argument("circuit", help="circuit file")
        cmd.add_argument("--config", default=None, help="key=value config file")
        cmd.add_argument("--out", default=".", help="output directory")
        cmd.add_argument("--tol", type=float, default=None, help="integrator tolerance")
        cmd.add_argument("--m", type=int, default=None, help="truncation order M")
        if name == "sweep":
            cmd.add_argument("--m-range", dest="m_range", required=True, help="lo:hi:step")
        cmd.set_defaults(handler=handler)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
