"""Config ingestion, binary field/trajectory persistence, report CSV.

Config files are line-oriented ``[section]`` / ``key = value`` text.
Expression values are double-quoted strings; everything else is a bare
number or identifier.  Unknown sections or keys are rejected, missing
required keys are rejected, and the loaded problem is validated (flux
vanishing at zero, boundary-collar consistency of the data, delay-width
budget).

Field files (extension ``.upkf``) are little-endian and bit-exact:

    magic   4 bytes  "UPKF"
    version u32      1
    d       u32      spatial dimension
    Nx      u32      cells per spatial axis
    Ns      u32      cells along s
    t       f64      snapshot time
    payload Nx^d * Ns f64, x-major then s

A trajectory directory holds one field file per snapshot, an ``index.csv``
mapping snapshot times to filenames (with a role column marking the
one-sided jump fields), and a ``meta.json`` with the march parameters the
verification checks need to reconstruct the stepper.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import exprdsl
from .problem import Field, Grid, ProblemSpec, Trajectory, consistency_errors
from .scheme import ENGQUIST_OSHER, LAX_FRIEDRICHS, SchemeOptions

__all__ = [
    "LoadedConfig", "load_config", "write_field", "read_field",
    "write_trajectory", "read_trajectory", "ParseError", "ValidationError",
    "FormatError", "MAGIC", "VERSION",
]

MAGIC = b"UPKF"
VERSION = 1


class ParseError(ValueError):
    def __init__(self, message, line=None):
        self.line = line
        where = f"line {line}: " if line is not None else ""
        super().__init__(f"{where}{message}")


class ValidationError(ValueError):
    pass


class FormatError(ValueError):
    pass


# --- config ------------------------------------------------------------------

_SCHEMA = {
    "domain": {"d": "int", "L": "float", "T": "float", "S": "float"},
    "flux": None,  # a plus phi_1..phi_d, checked against [domain] d
    "source": {"tau": "float", "gamma": "float", "beta": "expr?",
               "b1": "float?"},
    "data": {"u0_1": "expr", "u0_2": "expr", "uS_2": "expr"},
    "grid": {"Nx": "int", "Ns": "int", "snapshot_stride": "int?"},
    "scheme": {"flux_kind": "ident", "epsilon": "float", "cfl_safety": "float"},
    "output": {"dir": "str?"},
}


@dataclass
class LoadedConfig:
    spec: ProblemSpec
    grid: Grid
    options: SchemeOptions
    output_dir: str


def _parse_sections(text):
    sections = {}
    current = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ParseError("unterminated section header", lineno)
            name = line[1:-1].strip()
            if name in sections:
                raise ParseError(f"duplicate section [{name}]", lineno)
            sections[name] = {}
            current = name
            continue
        if current is None:
            raise ParseError("key outside any [section]", lineno)
        if "=" not in line:
            raise ParseError("expected 'key = value'", lineno)
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not key:
            raise ParseError("empty key", lineno)
        if key in sections[current]:
            raise ParseError(f"duplicate key {key!r} in [{current}]", lineno)
        sections[current][key] = (value, lineno)
    return sections


def _coerce(kind, key, value, lineno):
    if kind.startswith("expr"):
        if len(value) < 2 or value[0] != '"' or value[-1] != '"':
            raise ParseError(f"{key}: expression values must be double-quoted",
                             lineno)
        try:
            return exprdsl.parse(value[1:-1])
        except exprdsl.ExprSyntaxError as exc:
            raise ParseError(f"{key}: {exc}", lineno) from exc
    if kind.startswith("int"):
        try:
            return int(value)
        except ValueError:
            raise ParseError(f"{key}: expected an integer, got {value!r}",
                             lineno) from None
    if kind.startswith("float"):
        try:
            return float(value)
        except ValueError:
            raise ParseError(f"{key}: expected a number, got {value!r}",
                             lineno) from None
    if kind.startswith("str"):
        if value.startswith('"') and value.endswith('"') and len(value) >= 2:
            return value[1:-1]
        return value
    return value  # ident


def load_config(path):
    """Parse and validate a config file into spec, grid and scheme options."""
    text = Path(path).read_text(encoding="utf-8")
    sections = _parse_sections(text)

    for name in _SCHEMA:
        if name not in sections:
            raise ParseError(f"missing required section [{name}]")
    for name in sections:
        if name not in _SCHEMA:
            raise ParseError(f"unknown section [{name}]")

    values = {}
    for name, schema in _SCHEMA.items():
        if schema is None:
            continue
        got = sections[name]
        for key, (raw, lineno) in got.items():
            if key not in schema:
                raise ParseError(f"unknown key {key!r} in [{name}]", lineno)
        for key, kind in schema.items():
            if key not in got:
                if kind.endswith("?"):
                    continue
                raise ParseError(f"missing key {key!r} in [{name}]")
            raw, lineno = got[key]
            values[(name, key)] = _coerce(kind, key, raw, lineno)

    d = values[("domain", "d")]
    flux = sections["flux"]
    if "a" not in flux:
        raise ParseError("missing key 'a' in [flux]")
    expected = {"a"} | {f"phi_{i}" for i in range(1, max(d, 1) + 1)}
    for key, (raw, lineno) in flux.items():
        if key not in expected:
            raise ParseError(f"unknown key {key!r} in [flux]", lineno)
    for key in expected:
        if key not in flux:
            raise ParseError(f"missing key {key!r} in [flux]")
    flux_a = _coerce("expr", "a", *flux["a"])
    flux_phi = tuple(_coerce("expr", f"phi_{i}", *flux[f"phi_{i}"])
                     for i in range(1, max(d, 1) + 1))

    beta = values.get(("source", "beta"))
    b1 = values.get(("source", "b1"))
    if beta is not None and b1 is None:
        raise ParseError("[source] with beta requires b1 (support bound)")

    spec = ProblemSpec(
        d=d,
        L=values[("domain", "L")],
        T=values[("domain", "T")],
        S=values[("domain", "S")],
        flux_a=flux_a,
        flux_phi=flux_phi,
        data_u0_1=values[("data", "u0_1")],
        data_u0_2=values[("data", "u0_2")],
        data_uS_2=values[("data", "uS_2")],
        beta=beta,
        tau=values[("source", "tau")],
        gamma=values[("source", "gamma")],
        epsilon=values[("scheme", "epsilon")],
        b1=b1 if b1 is not None else 0.0,
    )
    errors = consistency_errors(spec)
    if errors:
        raise ValidationError("; ".join(errors))

    kind = values[("scheme", "flux_kind")]
    if kind not in (ENGQUIST_OSHER, LAX_FRIEDRICHS):
        raise ValidationError(
            f"flux_kind: expected '{ENGQUIST_OSHER}' or '{LAX_FRIEDRICHS}', "
            f"got {kind!r}")
    safety = values[("scheme", "cfl_safety")]
    if not (0.0 < safety <= 1.0):
        raise ValidationError(f"cfl_safety: must be in (0, 1], got {safety}")
    stride = values.get(("grid", "snapshot_stride"), 32)
    if stride < 1:
        raise ValidationError(f"snapshot_stride: must be >= 1, got {stride}")
    nx, ns = values[("grid", "Nx")], values[("grid", "Ns")]
    if nx < 2 or ns < 2:
        raise ValidationError(f"grid: need Nx, Ns >= 2, got {nx}, {ns}")

    grid = Grid(nx=nx, ns=ns, L=spec.L, S=spec.S)
    options = SchemeOptions(flux_kind=kind, cfl_safety=safety,
                            snapshot_stride=stride)
    out_dir = values.get(("output", "dir"), "out")
    return LoadedConfig(spec=spec, grid=grid, options=options,
                        output_dir=out_dir)


# --- binary fields -------------------------------------------------------------

def write_field(path, field, d=1):
    values = np.ascontiguousarray(field.values, dtype="<f8")
    nx, ns = values.shape
    header = MAGIC + struct.pack("<IIII", VERSION, d, nx, ns) \
        + struct.pack("<d", float(field.t))
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(values.tobytes(order="C"))


def read_field(path, L=1.0, S=1.0):
    blob = Path(path).read_bytes()
    if len(blob) < 28:
        raise FormatError(f"{path}: truncated header ({len(blob)} bytes)")
    if blob[:4] != MAGIC:
        raise FormatError(f"{path}: bad magic {blob[:4]!r}")
    version, d, nx, ns = struct.unpack("<IIII", blob[4:20])
    if version != VERSION:
        raise FormatError(f"{path}: unsupported version {version}")
    (t,) = struct.unpack("<d", blob[20:28])
    expected = nx ** d * ns * 8
    if len(blob) != 28 + expected:
        raise FormatError(f"{path}: payload length {len(blob) - 28} does not "
                          f"match header ({expected} bytes expected)")
    values = np.frombuffer(blob, dtype="<f8", offset=28).reshape(nx, ns).copy()
    grid = Grid(nx=nx, ns=ns, L=L, S=S)
    return Field(values=values, grid=grid, t=t)


# --- trajectory directories ------------------------------------------------------

def _meta_to_json(meta):
    out = dict(meta)
    opts = out.get("options")
    if isinstance(opts, SchemeOptions):
        out["options"] = {
            "flux_kind": opts.flux_kind, "cfl_safety": opts.cfl_safety,
            "snapshot_stride": opts.snapshot_stride,
            "x_diffusion": opts.x_diffusion, "periodic": opts.periodic,
        }
    return out


def _meta_from_json(data):
    out = dict(data)
    if isinstance(out.get("options"), dict):
        out["options"] = SchemeOptions(**out["options"])
    return out


def write_trajectory(directory, traj, d=1):
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    rows = []
    for i, (t, fld) in enumerate(zip(traj.times, traj.fields)):
        name = f"field_{i:06d}.upkf"
        write_field(directory / name, fld, d=d)
        rows.append((t, name, "snapshot"))
    if traj.tau_minus is not None:
        write_field(directory / "tau_minus.upkf", traj.tau_minus, d=d)
        rows.append((traj.tau_minus.t, "tau_minus.upkf", "tau_minus"))
    if traj.tau_plus is not None:
        write_field(directory / "tau_plus.upkf", traj.tau_plus, d=d)
        rows.append((traj.tau_plus.t, "tau_plus.upkf", "tau_plus"))
    with open(directory / "index.csv", "w", encoding="utf-8") as fh:
        fh.write("t,filename,role\n")
        for t, name, role in rows:
            fh.write(f"{t!r},{name},{role}\n")
    with open(directory / "meta.json", "w", encoding="utf-8") as fh:
        json.dump(_meta_to_json(traj.meta), fh, indent=1, sort_keys=True)


def read_trajectory(directory, L=1.0, S=1.0):
    directory = Path(directory)
    index = (directory / "index.csv").read_text(encoding="utf-8").splitlines()
    if not index or index[0].strip() != "t,filename,role":
        raise FormatError(f"{directory}: malformed index.csv")
    meta_path = directory / "meta.json"
    meta = _meta_from_json(json.loads(meta_path.read_text())) \
        if meta_path.exists() else {}
    traj = None
    tau_minus = tau_plus = None
    for row in index[1:]:
        if not row.strip():
            continue
        t_str, name, role = row.split(",")
        fld = read_field(directory / name, L=L, S=S)
        if traj is None:
            traj = Trajectory(grid=fld.grid)
            traj.meta = meta
        if role == "snapshot":
            traj.append(float(t_str), fld)
        elif role == "tau_minus":
            tau_minus = fld
        elif role == "tau_plus":
            tau_plus = fld
        else:
            raise FormatError(f"{directory}: unknown role {role!r}")
    if traj is None:
        raise FormatError(f"{directory}: empty trajectory")
    traj.tau_minus = tau_minus
    traj.tau_plus = tau_plus
    return traj
