"""Configured runs and reporting.

One INI-style configuration file describes an entire experiment: material,
mesh, loading, continuation settings, probe budgets, and output paths.
run() executes the pipeline (mesh build, star-shape check, material
self-checks, origin homotopy audit, branch trace, probes) and writes a
branch CSV, a text summary, and optional VTK snapshots.  Exit codes:
0 success, 2 configuration error, 3 solver stall, 4 element inversion.
A summary file is written on every exit path.
"""

import configparser
import csv
import dataclasses
import os

import numpy as np

from .materials import make_material, verify_objectivity
from .mesh import build_box_mesh, star_shape_check, write_vtk
from .assembly import Discretization, LoadProgram, homotopy_operator, solve_bordered
from .continuation import ContinuationSettings, BranchRecord, trace_branch, parity_tracker
from .probes import DivFreeField, global_min_probe, quasiconvexity_probe, uniqueness_probe

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_STALL = 3
EXIT_INVERTED = 4

CSV_HEADER = ",".join(BranchRecord.CSV_COLUMNS)


class ConfigError(ValueError):
    pass


def _parse_vec3(raw, key):
    parts = raw.split()
    if len(parts) != 3:
        raise ConfigError("%s must have 3 entries" % key)
    try:
        return np.array([float(p) for p in parts])
    except ValueError:
        raise ConfigError("%s entries must be numbers" % key)


def _parse_int3(raw, key):
    v = _parse_vec3(raw, key)
    if np.any(v != np.rint(v)):
        raise ConfigError("%s entries must be integers" % key)
    return v.astype(int)


def _parse_bool(raw, key):
    lowered = raw.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ConfigError("%s must be a boolean" % key)


# schema: section -> key -> (parser, default, validator or None)
_SCHEMA = {
    "material": {
        "model": (str, "neo-hookean",
                  lambda v: v in ("neo-hookean", "mooney-rivlin")),
        "mu": (float, 1.0, lambda v: v > 0),
        "c1": (float, 0.5, lambda v: v > 0),
        "c2": (float, 0.125, lambda v: v >= 0),
    },
    "mesh": {
        "extent": ("vec3", "1.0 1.0 1.0", lambda v: bool(np.all(v > 0))),
        "divisions": ("int3", "3 3 3", lambda v: bool(np.all(v >= 2))),
        "center_at_origin": ("bool", "false", None),
        "star_origin": ("vec3", "0.5 0.5 0.5", None),
    },
    "loading": {
        "a_family": (str, "identity",
                     lambda v: v in ("identity", "shear", "stretch")),
        "a_rate": (float, 1.0, None),
        "b_family": (str, "none",
                     lambda v: v in ("none", "dead", "live_centering",
                                     "live_gradient")),
        "b_scale": (float, 1.0, None),
        "b_direction": ("vec3", "0.0 0.0 -1.0", None),
        "b_ramp": ("vec3", "0.0 0.0 0.0", None),
    },
    "continuation": {
        "lam_target": (float, 1.0, lambda v: v != 0.0),
        "ds0": (float, 0.05, lambda v: v > 0),
        "ds_min": (float, 1e-6, lambda v: v > 0),
        "ds_max": (float, 0.25, lambda v: v > 0),
        "newton_tol": (float, 1e-11, lambda v: v > 0),
        "newton_max_iter": (int, 12, lambda v: v >= 1),
        "mode": (str, "natural", lambda v: v in ("natural", "arclength")),
        "se_dirs": (int, 32, lambda v: v >= 8),
        "adn_dirs": (int, 32, lambda v: v >= 8),
    },
    "probes": {
        "enabled": ("bool", "true", None),
        "global_min_samples": (int, 2000, lambda v: v >= 1),
        "quasiconvexity_amplitude": (float, 0.05, lambda v: v >= 0),
        "quasiconvexity_steps": (int, 200, lambda v: v >= 100),
        "uniqueness_starts": (int, 10, lambda v: v >= 1),
        "uniqueness_radius": (float, 0.05, lambda v: v >= 0),
        "seed": (int, 0, lambda v: v >= 0),
    },
    "output": {
        "directory": (str, "out", None),
        "csv_name": (str, "branch.csv", None),
        "summary_name": (str, "summary.txt", None),
        "write_vtk_every": (int, 0, lambda v: v >= 0),
        "workers": (int, 1, lambda v: v == 1),
    },
}

_PARSERS = {"vec3": _parse_vec3, "int3": _parse_int3, "bool": _parse_bool}


class RunConfig:
    """Validated experiment configuration.

    Every key is schema-checked for type and range; unknown sections or
    keys are rejected so a typo cannot silently fall back to a default.
    """

    def __init__(self, values):
        self.values = values

    def __getitem__(self, pair):
        return self.values[pair]

    @classmethod
    def from_file(cls, path):
        if not os.path.isfile(path):
            raise ConfigError("config file not found: %s" % path)
        parser = configparser.ConfigParser()
        try:
            read = parser.read(path)
        except configparser.Error as exc:
            raise ConfigError("config parse failure: %s" % exc)
        if not read:
            raise ConfigError("config file unreadable: %s" % path)

        for section in parser.sections():
            if section not in _SCHEMA:
                raise ConfigError("unknown section [%s]" % section)
            for key in parser[section]:
                if key not in _SCHEMA[section]:
                    raise ConfigError("unknown key %s in [%s]" % (key, section))

        values = {}
        for section, keys in _SCHEMA.items():
            for key, (kind, default, check) in keys.items():
                raw = parser.get(section, key, fallback=default) \
                    if parser.has_section(section) else default
                label = "[%s] %s" % (section, key)
                if kind in _PARSERS:
                    val = _PARSERS[kind](raw, label) if isinstance(raw, str) else raw
                else:
                    try:
                        val = kind(raw)
                    except (TypeError, ValueError):
                        raise ConfigError("%s must be of type %s"
                                          % (label, kind.__name__))
                if check is not None and not check(val):
                    raise ConfigError("%s out of range (got %r)" % (label, raw))
                values[(section, key)] = val
        cfg = cls(values)
        if not (cfg["continuation", "ds_min"] <= cfg["continuation", "ds0"]
                <= cfg["continuation", "ds_max"]):
            raise ConfigError("[continuation] needs ds_min <= ds0 <= ds_max")
        return cfg

    def material(self):
        model = self["material", "model"]
        if model == "neo-hookean":
            return make_material(model, mu=self["material", "mu"])
        return make_material(model, c1=self["material", "c1"],
                             c2=self["material", "c2"])

    def program(self):
        return LoadProgram(a_family=self["loading", "a_family"],
                           a_rate=self["loading", "a_rate"],
                           b_family=self["loading", "b_family"],
                           b_scale=self["loading", "b_scale"],
                           b_direction=self["loading", "b_direction"],
                           b_ramp=self["loading", "b_ramp"])

    def settings(self):
        c = lambda k: self["continuation", k]
        return ContinuationSettings(lam_target=c("lam_target"), ds0=c("ds0"),
                                    ds_min=c("ds_min"), ds_max=c("ds_max"),
                                    newton_tol=c("newton_tol"),
                                    newton_max_iter=c("newton_max_iter"),
                                    mode=c("mode"), se_dirs=c("se_dirs"),
                                    adn_dirs=c("adn_dirs"))


def _vertex_fields(disc, state, program):
    """Displacement and pressure sampled at mesh vertices, plus deformed
    coordinates, for snapshot output."""
    mesh = disc.mesh
    a = program.a_matrix(state.lam)
    full = np.zeros((disc.q2_interior.size, 3))
    full[disc.q2_interior >= 0] = state.u.reshape(-1, 3)
    lat = {tuple(p): i for i, p in enumerate(disc.q2_lattice)}
    scaled = np.rint(2 * (mesh.nodes - mesh.origin) / mesh.spacing).astype(int)
    uv = full[[lat[tuple(s)] for s in scaled]]
    deformed = mesh.nodes @ a.T + uv
    return deformed, deformed - mesh.nodes, state.p


def run(config_path):
    """Execute a configured study; returns the process exit code."""
    summary = ["run summary"]
    out_dir, summary_name = ".", "summary.txt"
    try:
        cfg = RunConfig.from_file(config_path)
    except ConfigError as exc:
        base = os.path.dirname(os.path.abspath(config_path))
        _write_summary(base, "summary.txt",
                       summary + ["status: config error", "error: %s" % exc,
                                  "exit_code: %d" % EXIT_CONFIG])
        return EXIT_CONFIG

    out_dir = cfg["output", "directory"]
    if not os.path.isabs(out_dir):
        out_dir = os.path.join(os.path.dirname(os.path.abspath(config_path)),
                               out_dir)
    os.makedirs(out_dir, exist_ok=True)
    summary_name = cfg["output", "summary_name"]
    csv_path = os.path.join(out_dir, cfg["output", "csv_name"])

    material = cfg.material()
    mesh = build_box_mesh(extent=cfg["mesh", "extent"],
                          divisions=cfg["mesh", "divisions"],
                          center_at_origin=cfg["mesh", "center_at_origin"])
    disc = Discretization(mesh)
    summary.append("mesh: %d nodes, %d elements, %d dofs"
                   % (mesh.n_nodes, mesh.n_elements, disc.n_total))

    star = star_shape_check(mesh, cfg["mesh", "star_origin"])
    summary.append("star_shape: min=%.6g passed=%s" % (star.min_value, star.passed))

    obj = verify_objectivity(material, trials=20,
                             rng=np.random.default_rng(cfg["probes", "seed"]))
    stress_free = float(np.abs(material.stress(np.eye(3))).max())
    summary.append("objectivity: max_dev=%.3e passed=%s" % (obj.max_deviation, obj.passed))
    summary.append("stress_free_reference: max|S(I)|=%.3e" % stress_free)

    pivots = []
    for mu in (0.0, 0.25, 0.5, 0.75, 1.0):
        t_mu = homotopy_operator(mu, disc, material)
        _, info = solve_bordered(t_mu, np.zeros(disc.n_total))
        pivots.append(info.min_pivot)
    ratio = max(pivots) / min(pivots)
    summary.append("homotopy_sweep: pivots=[%s] spread=%.3g"
                   % (" ".join("%.3e" % p for p in pivots), ratio))

    program = cfg.program()
    settings = cfg.settings()
    every = cfg["output", "write_vtk_every"]
    accepted = [0]

    with open(csv_path, "w", newline="") as fh:
        fh.write(CSV_HEADER + "\n")
        fh.flush()

        def on_accept(state, record):
            fh.write(record.csv_row() + "\n")
            fh.flush()
            accepted[0] += 1
            if every and accepted[0] % every == 0:
                deformed, u_v, p_v = _vertex_fields(disc, state, program)
                snap = os.path.join(out_dir, "snapshot_%04d.vtk" % accepted[0])
                snap_mesh = dataclasses.replace(mesh, nodes=deformed)
                write_vtk(snap, snap_mesh, point_data={"u": u_v, "p": p_v})

        try:
            trace = trace_branch(program, settings, material, disc,
                                 on_accept=on_accept)
        except (ValueError, ConfigError) as exc:
            summary += ["status: config error", "error: %s" % exc,
                        "exit_code: %d" % EXIT_CONFIG]
            _write_summary(out_dir, summary_name, summary)
            return EXIT_CONFIG

    summary.append("branch: status=%s records=%d detail=%s"
                   % (trace.status, len(trace.records), trace.detail))
    if trace.records:
        last = trace.records[-1]
        events = parity_tracker(trace.records)
        summary.append("branch_extent: lambda in [%.6g, %.6g]"
                       % (trace.records[0].lam, last.lam))
        summary.append("monitors: min_detF=%.6g max_det_dev=%.3e "
                       "se_margin_min=%.6g adn_min=%.3e"
                       % (min(r.min_detF for r in trace.records),
                          max(r.max_det_dev for r in trace.records),
                          min(r.se_margin for r in trace.records),
                          min(r.adn_min_abs for r in trace.records)))
        summary.append("parity_events: %d %s" % (len(events), events))

    if cfg["probes", "enabled"]:
        seed = cfg["probes", "seed"]
        gm = global_min_probe(material, cfg["probes", "global_min_samples"],
                              seed=seed)
        qc = quasiconvexity_probe(
            material,
            DivFreeField(amplitude=cfg["probes", "quasiconvexity_amplitude"]),
            flow_steps=cfg["probes", "quasiconvexity_steps"])
        uq = uniqueness_probe(material, disc,
                              n_starts=cfg["probes", "uniqueness_starts"],
                              start_radius=cfg["probes", "uniqueness_radius"],
                              seed=seed)
        summary.append("probe_global_min: min_W=%.6e so3_dist=%.3e passed=%s"
                       % (gm.min_value, gm.argmin_so3_dist, gm.passed))
        summary.append("probe_quasiconvexity: integral=%.6e defect=%.3e passed=%s"
                       % (qc.integral, qc.max_det_defect, qc.passed))
        summary.append("probe_uniqueness: converged=%d failed=%d max_norm=%.3e "
                       "passed=%s (%s)"
                       % (uq.n_converged, uq.n_failed, uq.max_norm, uq.passed,
                          uq.note))

    code = {"completed": EXIT_OK, "stall": EXIT_STALL,
            "inverted": EXIT_INVERTED}[trace.status]
    summary.append("status: %s" % trace.status)
    summary.append("exit_code: %d" % code)
    _write_summary(out_dir, summary_name, summary)
    return code


def _write_summary(directory, name, lines):
    os.makedirs(directory, exist_ok=True)
    with open(os.path.join(directory, name), "w") as fh:
        fh.write("\n".join(lines) + "\n")


def summarize(branch_csv_path):
    """Text digest of a branch CSV: extent, extremal monitors, verdicts.

    Raises ConfigError on a schema mismatch; an empty branch yields the
    'no accepted steps' report (callers exit nonzero on it).
    """
    with open(branch_csv_path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ConfigError("empty file: %s" % branch_csv_path)
        if header != list(BranchRecord.CSV_COLUMNS):
            raise ConfigError("CSV schema mismatch: got %s" % ",".join(header))
        rows = [row for row in reader if row]

    if not rows:
        return "no accepted steps"

    lam = [float(r[0]) for r in rows]
    min_det = min(float(r[4]) for r in rows)
    max_dev = max(float(r[5]) for r in rows)
    margin = min(float(r[6]) for r in rows)
    adn = min(float(r[7]) for r in rows)
    signs = [int(r[8]) for r in rows]
    events = [(lam[i], lam[i + 1]) for i in range(len(signs) - 1)
              if signs[i] * signs[i + 1] < 0]

    lines = ["steps: %d" % len(rows),
             "lambda range: [%.6g, %.6g]" % (min(lam), max(lam))]
    if events:
        lines.append("parity events: %d %s (possible singular points)"
                     % (len(events), events))
    else:
        lines.append("no parity events")
    verdict = "injectivity held (min det = %.6g)" % min_det if min_det > 0 \
        else "injectivity FAILED (min det = %.6g)" % min_det
    lines.append(verdict)
    lines.append("incompressibility defect <= %.3e" % max_dev)
    lines.append("ellipticity margin >= %.6g" % margin)
    lines.append("ADN determinant magnitude >= %.3e" % adn)
    return "\n".join(lines)
