"""Structural-model input, coupling configuration and time-history files.

The structural file is a simplified free-field (comma separated) dialect:

    $ comment
    GRID,<id>,<x>,<y>,<z>
    MODE,<index>,<frequency_rad_s>
    <node_id>,<t1>,<t2>,<t3>,<r1>,<r2>,<r3>     one line per declared node
    GENMASS,<n>   followed by n lines of n entries (same for GENSTIF/GENDAMP)
    DAMP,<mode_index>,<xi>

GRID cards must precede the first MODE block.  Stacked DOF rows follow node
declaration order with per-node ordering (t1,t2,t3,r1,r2,r3).  Nastran
exponent shorthand ("1.0-3" == 1.0e-3) is accepted on GRID/MODE numeric
fields so punch-derived data pastes in unchanged.

The config file is "KEY = value" lines with '#' comments.  History output is
CSV with header "time,q_1,...,q_n,qd_1,...,qd_n,f_1,...,f_n" (optional named
monitor columns appended) and '%.12e' formatting.
"""

from __future__ import annotations

import io
import re
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigError, ModelFormatError

_SYM_RTOL = 1e-8
_DIAG_RTOL = 1e-10

# ---------------------------------------------------------------------------
# Structural model
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class StructuralModel:
    """Modal structural model: node cloud plus generalized system matrices.

    ``mode_matrix`` has 6*len(node_ids) rows (stacked nodal DOFs) and one
    column per retained generalized DOF.  ``damping_ratios`` and
    ``damping_matrix`` are mutually exclusive; both may be None.
    """

    node_ids: np.ndarray        # (n_nodes,) int
    node_coords: np.ndarray     # (n_nodes, 3)
    mode_matrix: np.ndarray     # (6*n_nodes, n)
    frequencies: np.ndarray     # (n,) rad/s
    gen_mass: np.ndarray        # (n, n)
    gen_stiff: np.ndarray       # (n, n)
    damping_ratios: np.ndarray | None = None
    damping_matrix: np.ndarray | None = None
    diagonal: bool = True

    @property
    def n_modes(self) -> int:
        return self.mode_matrix.shape[1]

    @property
    def n_nodes(self) -> int:
        return len(self.node_ids)

    def translation_rows(self) -> np.ndarray:
        """Indices of the translational rows of the stacked DOF vector."""
        base = 6 * np.arange(self.n_nodes)[:, None]
        return (base + np.arange(3)[None, :]).ravel()

    def rotation_rows(self) -> np.ndarray:
        base = 6 * np.arange(self.n_nodes)[:, None]
        return (base + np.arange(3, 6)[None, :]).ravel()

    def validate(self) -> None:
        ids = self.node_ids
        if len(ids) == 0:
            raise ModelFormatError("model has no GRID cards")
        if len(np.unique(ids)) != len(ids):
            raise ModelFormatError("duplicate node ids in model")
        n = self.n_modes
        if n < 1:
            raise ModelFormatError("model has no MODE blocks")
        if self.mode_matrix.shape[0] != 6 * self.n_nodes:
            raise ModelFormatError(
                f"mode matrix has {self.mode_matrix.shape[0]} rows, "
                f"expected {6 * self.n_nodes}"
            )
        for name, mat in (("GENMASS", self.gen_mass), ("GENSTIF", self.gen_stiff)):
            if mat.shape != (n, n):
                raise ModelFormatError(f"{name} size does not match mode count {n}")
            scale = max(np.abs(mat).max(), 1.0)
            if np.abs(mat - mat.T).max() > _SYM_RTOL * scale:
                raise ModelFormatError(f"{name} is not symmetric")
        mass_eigs = np.linalg.eigvalsh(0.5 * (self.gen_mass + self.gen_mass.T))
        if mass_eigs.min() <= _SYM_RTOL * max(mass_eigs.max(), 0.0):
            raise ModelFormatError("generalized mass matrix is not positive definite")
        stiff_eigs = np.linalg.eigvalsh(0.5 * (self.gen_stiff + self.gen_stiff.T))
        if stiff_eigs.min() < -_SYM_RTOL * max(abs(stiff_eigs).max(), 1.0):
            raise ModelFormatError("generalized stiffness matrix is not positive semidefinite")
        if self.diagonal:
            if np.abs(self.gen_mass - np.eye(n)).max() > _DIAG_RTOL:
                raise ModelFormatError("diagonal model requires unit generalized mass")
            target = np.diag(self.frequencies**2)
            scale = max(np.abs(target).max(), 1.0)
            if np.abs(self.gen_stiff - target).max() > _DIAG_RTOL * scale:
                raise ModelFormatError("diagonal model requires K = diag(omega^2)")
        if self.damping_ratios is not None and self.damping_matrix is not None:
            raise ModelFormatError("both DAMP cards and GENDAMP given")
        if self.damping_ratios is not None and len(self.damping_ratios) != n:
            raise ModelFormatError("DAMP cards do not cover every mode")


_SHORTHAND = re.compile(r"^([+-]?(?:\d+\.?\d*|\.\d+))([+-]\d+)$")


def _parse_number(token: str, line_no: int, column: int) -> float:
    """Parse a float, accepting Nastran exponent shorthand (1.0-3 == 1.0e-3)."""
    token = token.strip()
    try:
        return float(token)
    except ValueError:
        pass
    m = _SHORTHAND.match(token)
    if m:
        return float(m.group(1) + "e" + m.group(2))
    raise ModelFormatError(f"cannot parse number {token!r}", line_no, column)


def _parse_int(token: str, line_no: int, column: int) -> int:
    try:
        return int(token.strip())
    except ValueError:
        raise ModelFormatError(f"cannot parse integer {token!r}", line_no, column) from None


def _split(line: str) -> list[str]:
    return [f.strip() for f in line.split(",")]


class _Lines:
    """Line iterator that skips '$' comments and blanks, tracking numbers."""

    def __init__(self, text: str):
        self._lines = text.splitlines()
        self._pos = 0

    def next_data(self) -> tuple[int, str] | None:
        while self._pos < len(self._lines):
            self._pos += 1
            raw = self._lines[self._pos - 1]
            stripped = raw.strip()
            if stripped and not stripped.startswith("$"):
                return self._pos, stripped
        return None


def parse_structural_model(text) -> StructuralModel:
    """Parse the structural input format into a validated StructuralModel.

    ``text`` may be a string or a readable text stream.
    """
    if hasattr(text, "read"):
        text = text.read()
    lines = _Lines(text)

    node_ids: list[int] = []
    coords: list[list[float]] = []
    mode_cols: list[np.ndarray] = []
    freqs: list[float] = []
    gen: dict[str, np.ndarray] = {}
    damp_cards: dict[int, float] = {}

    def read_matrix(keyword: str, size: int, start_line: int) -> np.ndarray:
        rows = []
        for _ in range(size):
            item = lines.next_data()
            if item is None:
                raise ModelFormatError(f"{keyword} block truncated", start_line)
            line_no, line = item
            fields = _split(line)
            if len(fields) != size:
                raise ModelFormatError(
                    f"{keyword} row has {len(fields)} entries, expected {size}", line_no
                )
            rows.append([_parse_number(f, line_no, i + 1) for i, f in enumerate(fields)])
        return np.array(rows)

    while True:
        item = lines.next_data()
        if item is None:
            break
        line_no, line = item
        fields = _split(line)
        keyword = fields[0].upper()

        if keyword == "GRID":
            if mode_cols:
                raise ModelFormatError("GRID card after first MODE block", line_no)
            if len(fields) != 5:
                raise ModelFormatError(
                    f"GRID card has {len(fields)} fields, expected 5", line_no
                )
            nid = _parse_int(fields[1], line_no, 2)
            if nid in node_ids:
                raise ModelFormatError(f"duplicate node id {nid}", line_no, 2)
            node_ids.append(nid)
            coords.append([_parse_number(f, line_no, i + 3) for i, f in enumerate(fields[2:])])

        elif keyword == "MODE":
            if not node_ids:
                raise ModelFormatError("MODE block before any GRID card", line_no)
            if len(fields) != 3:
                raise ModelFormatError(
                    f"MODE card has {len(fields)} fields, expected 3", line_no
                )
            index = _parse_int(fields[1], line_no, 2)
            if index != len(mode_cols) + 1:
                raise ModelFormatError(
                    f"MODE index {index} out of order, expected {len(mode_cols) + 1}",
                    line_no, 2,
                )
            freqs.append(_parse_number(fields[2], line_no, 3))
            seen: dict[int, np.ndarray] = {}
            for _ in range(len(node_ids)):
                row_item = lines.next_data()
                if row_item is None:
                    raise ModelFormatError(f"MODE {index} block truncated", line_no)
                row_no, row = row_item
                rfields = _split(row)
                if len(rfields) != 7:
                    raise ModelFormatError(
                        f"mode vector line has {len(rfields)} fields, expected 7 "
                        "(node_id,t1,t2,t3,r1,r2,r3)", row_no,
                    )
                nid = _parse_int(rfields[0], row_no, 1)
                if nid not in node_ids:
                    raise ModelFormatError(f"mode row for unknown node {nid}", row_no, 1)
                if nid in seen:
                    raise ModelFormatError(f"mode row repeated for node {nid}", row_no, 1)
                seen[nid] = np.array(
                    [_parse_number(f, row_no, i + 2) for i, f in enumerate(rfields[1:])]
                )
            col = np.concatenate([seen[nid] for nid in node_ids])
            mode_cols.append(col)

        elif keyword in ("GENMASS", "GENSTIF", "GENDAMP"):
            if len(fields) != 2:
                raise ModelFormatError(f"{keyword} card needs a size field", line_no)
            size = _parse_int(fields[1], line_no, 2)
            if keyword in gen:
                raise ModelFormatError(f"duplicate {keyword} block", line_no)
            gen[keyword] = read_matrix(keyword, size, line_no)

        elif keyword == "DAMP":
            if len(fields) != 3:
                raise ModelFormatError("DAMP card needs mode index and ratio", line_no)
            index = _parse_int(fields[1], line_no, 2)
            if index in damp_cards:
                raise ModelFormatError(f"duplicate DAMP card for mode {index}", line_no, 2)
            damp_cards[index] = _parse_number(fields[2], line_no, 3)

        else:
            raise ModelFormatError(f"unknown card {fields[0]!r}", line_no, 1)

    if not node_ids:
        raise ModelFormatError("model has no GRID cards")
    if not mode_cols:
        raise ModelFormatError("model has no MODE blocks")

    n = len(mode_cols)
    frequencies = np.array(freqs)
    mode_matrix = np.column_stack(mode_cols)
    diagonal = "GENMASS" not in gen and "GENSTIF" not in gen
    gen_mass = gen.get("GENMASS", np.eye(n))
    gen_stiff = gen.get("GENSTIF", np.diag(frequencies**2))
    for keyword in gen:
        if gen[keyword].shape[0] != n:
            raise ModelFormatError(f"{keyword} size {gen[keyword].shape[0]} != mode count {n}")

    damping_ratios = None
    if damp_cards:
        if set(damp_cards) != set(range(1, n + 1)):
            raise ModelFormatError("DAMP cards must cover modes 1..n exactly")
        damping_ratios = np.array([damp_cards[i] for i in range(1, n + 1)])

    model = StructuralModel(
        node_ids=np.array(node_ids),
        node_coords=np.array(coords),
        mode_matrix=mode_matrix,
        frequencies=frequencies,
        gen_mass=gen_mass,
        gen_stiff=gen_stiff,
        damping_ratios=damping_ratios,
        damping_matrix=gen.get("GENDAMP"),
        diagonal=diagonal,
    )
    model.validate()
    return model


def serialize_structural_model(model: StructuralModel) -> str:
    """Write a model back to the input format (round-trip exact via repr)."""
    out = io.StringIO()

    def num(x: float) -> str:
        return repr(float(x))

    for nid, xyz in zip(model.node_ids, model.node_coords):
        out.write(f"GRID,{nid},{num(xyz[0])},{num(xyz[1])},{num(xyz[2])}\n")
    for j in range(model.n_modes):
        out.write(f"MODE,{j + 1},{num(model.frequencies[j])}\n")
        for i, nid in enumerate(model.node_ids):
            entries = model.mode_matrix[6 * i:6 * i + 6, j]
            out.write(f"{nid}," + ",".join(num(v) for v in entries) + "\n")

    def matrix(keyword: str, mat: np.ndarray) -> None:
        out.write(f"{keyword},{mat.shape[0]}\n")
        for row in mat:
            out.write(",".join(num(v) for v in row) + "\n")

    if not model.diagonal:
        matrix("GENMASS", model.gen_mass)
        matrix("GENSTIF", model.gen_stiff)
    if model.damping_matrix is not None:
        matrix("GENDAMP", model.damping_matrix)
    if model.damping_ratios is not None:
        for j, xi in enumerate(model.damping_ratios):
            out.write(f"DAMP,{j + 1},{num(xi)}\n")
    return out.getvalue()


# ---------------------------------------------------------------------------
# Coupling configuration
# ---------------------------------------------------------------------------

MODES = ("steady-imposed", "steady-coupled", "unsteady-imposed", "unsteady-coupled")


@dataclass(frozen=True)
class CouplingConfig:
    """Resolved simulation settings with defaults applied."""

    mode: str
    dt: float | None = None
    n_steps: int | None = None
    fsi_tolerance: float = 1e-6
    max_fsi_iters: int = 50
    aitken_omega0: float = 0.5
    aitken_omega_max: float = 1.0
    predictor: str = "linear"               # none | linear
    rbf_support_radius: float | None = None  # None -> automatic
    transfer_mode: str = "consistent"       # consistent | conservative
    struct_damping: float | None = None     # uniform modal ratio override
    rho_inf: float = 1.0                    # integrator spectral radius
    aero_model: str = "quasisteady"         # quasisteady | wagner | synthetic
    rho: float = 1.225
    u_inf: float | None = None
    chord: float = 1.0
    x_f: float = 0.25
    s_ref: float | None = None              # None -> chord (unit span)
    alpha_deg: float = 0.0
    n_surface_points: int = 200
    wagner_a1: float = 0.165
    wagner_b1: float = 0.0455
    wagner_a2: float = 0.335
    wagner_b2: float = 0.3
    imposed_amplitude: tuple[float, ...] | None = None
    imposed_frequency: tuple[float, ...] | None = None
    imposed_bias: tuple[float, ...] | None = None
    initial_q: tuple[float, ...] | None = None
    initial_qdot: tuple[float, ...] | None = None
    dof_names: tuple[str, ...] | None = None
    synthetic_p0: float = 0.0
    synthetic_grad: tuple[float, float, float] = (0.0, 0.0, 0.0)
    synthetic_rate: float = 0.0
    warnings: tuple[str, ...] = ()

    @property
    def unsteady(self) -> bool:
        return self.mode.startswith("unsteady")

    @property
    def coupled(self) -> bool:
        return self.mode.endswith("coupled")

    def reference_area(self) -> float:
        return self.chord if self.s_ref is None else self.s_ref


def _float_list(value: str) -> tuple[float, ...]:
    return tuple(float(v) for v in value.split(","))


def _str_list(value: str) -> tuple[str, ...]:
    return tuple(v.strip() for v in value.split(","))


_MODE_VALUES = {
    "STEADY_IMPOSED": "steady-imposed",
    "STEADY_COUPLED": "steady-coupled",
    "UNSTEADY_IMPOSED": "unsteady-imposed",
    "UNSTEADY_COUPLED": "unsteady-coupled",
}

# key -> (config field, converter)
_CONFIG_KEYS = {
    "MODE": ("mode", None),
    "DT": ("dt", float),
    "N_STEPS": ("n_steps", int),
    "FSI_TOLERANCE": ("fsi_tolerance", float),
    "MAX_FSI_ITERS": ("max_fsi_iters", int),
    "AITKEN_OMEGA0": ("aitken_omega0", float),
    "AITKEN_OMEGA_MAX": ("aitken_omega_max", float),
    "PREDICTOR": ("predictor", None),
    "RBF_SUPPORT_RADIUS": ("rbf_support_radius", float),
    "TRANSFER_MODE": ("transfer_mode", None),
    "STRUCT_DAMPING": ("struct_damping", float),
    "RHO_INF": ("rho_inf", float),
    "AERO_MODEL": ("aero_model", None),
    "RHO": ("rho", float),
    "UINF": ("u_inf", float),
    "CHORD": ("chord", float),
    "XF": ("x_f", float),
    "SREF": ("s_ref", float),
    "ALPHA_DEG": ("alpha_deg", float),
    "N_SURFACE_POINTS": ("n_surface_points", int),
    "WAGNER_A1": ("wagner_a1", float),
    "WAGNER_B1": ("wagner_b1", float),
    "WAGNER_A2": ("wagner_a2", float),
    "WAGNER_B2": ("wagner_b2", float),
    "IMPOSED_AMPLITUDE": ("imposed_amplitude", _float_list),
    "IMPOSED_FREQUENCY": ("imposed_frequency", _float_list),
    "IMPOSED_BIAS": ("imposed_bias", _float_list),
    "INITIAL_Q": ("initial_q", _float_list),
    "INITIAL_QDOT": ("initial_qdot", _float_list),
    "DOF_NAMES": ("dof_names", _str_list),
    "SYNTHETIC_P0": ("synthetic_p0", float),
    "SYNTHETIC_GRAD": ("synthetic_grad", _float_list),
    "SYNTHETIC_RATE": ("synthetic_rate", float),
}


def parse_config(text) -> CouplingConfig:
    """Parse "KEY = value" configuration text with defaults applied."""
    if hasattr(text, "read"):
        text = text.read()
    values: dict[str, object] = {}
    seen: set[str] = set()
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {line_no}: expected KEY = value, got {raw.strip()!r}")
        key, _, value = line.partition("=")
        key = key.strip().upper()
        value = value.strip()
        if key not in _CONFIG_KEYS:
            raise ConfigError(f"line {line_no}: unknown key {key!r}")
        if key in seen:
            raise ConfigError(f"line {line_no}: duplicate key {key!r}")
        seen.add(key)
        field_name, conv = _CONFIG_KEYS[key]
        if conv is None:
            values[field_name] = value
        else:
            try:
                values[field_name] = conv(value)
            except ValueError:
                raise ConfigError(
                    f"line {line_no}: cannot parse value {value!r} for {key}"
                ) from None

    if "mode" not in values:
        raise ConfigError("MODE missing")
    mode_token = str(values["mode"]).upper().replace("-", "_")
    if mode_token not in _MODE_VALUES:
        raise ConfigError(f"unknown MODE {values['mode']!r}")
    values["mode"] = _MODE_VALUES[mode_token]

    for name, allowed in (
        ("predictor", ("none", "linear")),
        ("transfer_mode", ("consistent", "conservative")),
        ("aero_model", ("quasisteady", "wagner", "synthetic")),
    ):
        if name in values:
            token = str(values[name]).lower()
            if token not in allowed:
                raise ConfigError(f"{name.upper()} must be one of {allowed}, got {values[name]!r}")
            values[name] = token

    grad = values.get("synthetic_grad")
    if grad is not None and len(grad) != 3:
        raise ConfigError("SYNTHETIC_GRAD needs exactly 3 components")

    config = CouplingConfig(**values)

    warnings: list[str] = []
    if config.unsteady:
        if config.dt is None:
            raise ConfigError("DT required for unsteady modes")
        if config.dt <= 0:
            raise ConfigError("DT must be positive")
        if config.n_steps is None:
            raise ConfigError("N_STEPS required for unsteady modes")
        if config.n_steps < 1:
            raise ConfigError("N_STEPS must be at least 1")
    elif config.dt is not None:
        warnings.append("DT is ignored in steady modes")
    if config.fsi_tolerance <= 0:
        raise ConfigError("FSI_TOLERANCE must be positive")
    if not (0.0 < config.aitken_omega0 <= config.aitken_omega_max <= 1.0):
        raise ConfigError("require 0 < AITKEN_OMEGA0 <= AITKEN_OMEGA_MAX <= 1")
    if not (0.0 <= config.rho_inf <= 1.0):
        raise ConfigError("RHO_INF must lie in [0, 1]")
    if config.max_fsi_iters < 1:
        raise ConfigError("MAX_FSI_ITERS must be at least 1")
    return replace(config, warnings=tuple(warnings))


# ---------------------------------------------------------------------------
# Time histories
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class HistoryRecord:
    time: float
    q: np.ndarray
    qd: np.ndarray
    f: np.ndarray
    monitors: tuple[float, ...] = ()


@dataclass(frozen=True)
class History:
    """Parsed history table with columns addressable by name."""

    columns: tuple[str, ...]
    data: np.ndarray  # (n_rows, n_columns)

    def column(self, name: str) -> np.ndarray:
        try:
            return self.data[:, self.columns.index(name)]
        except ValueError:
            raise KeyError(f"no history column {name!r}") from None

    @property
    def time(self) -> np.ndarray:
        return self.column("time")


def history_header(n: int, monitor_names=()) -> str:
    cols = (
        ["time"]
        + [f"q_{i + 1}" for i in range(n)]
        + [f"qd_{i + 1}" for i in range(n)]
        + [f"f_{i + 1}" for i in range(n)]
        + list(monitor_names)
    )
    return ",".join(cols)


def format_history(records, monitor_names=()) -> str:
    """Render records as CSV text; deterministic '%.12e' formatting."""
    records = list(records)
    n = len(records[0].q) if records else 0
    lines = [history_header(n, monitor_names)]
    for rec in records:
        if len(rec.monitors) != len(monitor_names):
            raise ValueError("record monitors do not match monitor_names")
        row = [rec.time, *rec.q, *rec.qd, *rec.f, *rec.monitors]
        lines.append(",".join("%.12e" % v for v in row))
    return "\n".join(lines) + "\n"


def write_history(path, records, monitor_names=()) -> None:
    """Write a time-sorted record sequence as CSV to ``path``."""
    records = list(records)
    times = [r.time for r in records]
    if any(t1 < t0 for t0, t1 in zip(times, times[1:])):
        raise ValueError("history records must be time-sorted")
    text = format_history(records, monitor_names)
    with open(path, "w") as handle:
        handle.write(text)


def parse_history(text) -> History:
    """Parse history CSV text (as produced by format_history)."""
    if hasattr(text, "read"):
        text = text.read()
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ModelFormatError("empty history file")
    columns = tuple(c.strip() for c in lines[0].split(","))
    rows = []
    for line_no, line in enumerate(lines[1:], start=2):
        fields = line.split(",")
        if len(fields) != len(columns):
            raise ModelFormatError(
                f"history row has {len(fields)} fields, expected {len(columns)}", line_no
            )
        rows.append([float(f) for f in fields])
    data = np.array(rows) if rows else np.empty((0, len(columns)))
    return History(columns=columns, data=data)


def read_history(path) -> History:
    with open(path) as handle:
        return parse_history(handle)
