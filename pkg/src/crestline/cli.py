"""Command line pipeline: stream -> dispersion -> reduce -> simulate -> scan -> reconstruct.

    crestline <stage> --config run.toml [--output-dir DIR] [--seed N]

Every stage rebuilds the stages it depends on, so each subcommand can be
run on its own. Exit status is 2 for configuration errors and 1 for
numerical failures.
"""
from __future__ import annotations

import argparse
import copy
import io
import json
import math
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import __version__
from . import dispersion, dynamics, reconstruction, reduction, stream, vorticity

STAGES = ("stream", "dispersion", "reduce", "simulate", "scan-symmetry", "reconstruct", "all")


class ConfigError(ValueError):
    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


@dataclass
class VorticityConfig:
    kind: str = "constant"
    coefficients: list = field(default_factory=lambda: [1.0])


@dataclass
class StreamConfig:
    s: float = 1.5
    branch_sign: str = "+"
    branch_j: int = 0


@dataclass
class DiscretizationConfig:
    grid_points: int = 2048
    quadrature_order: int = 16
    quadrature_panels: int = 16


@dataclass
class ModesConfig:
    n_eigen: int = 6
    n_modes: object = "auto"


@dataclass
class SimulateConfig:
    x_max: float = 50.0
    step: object = "auto"
    initial_alpha: list = field(default_factory=lambda: [1e-3])
    initial_beta: list = field(default_factory=lambda: [0.0])


@dataclass
class ScanConfig:
    samples: int = 2000
    radius: float = 1e-3
    deltas: list = field(default_factory=lambda: [0.08, 0.04, 0.02])
    x_window: float = 4.0
    seed: int = 2024
    workers: int = 1


@dataclass
class ReconstructConfig:
    n_z: int = 17
    stride: int = 10
    sweep_factors: list = field(default_factory=lambda: [1.0, 2.0, 4.0, 8.0])
    sweep_x_max: float = 10.0


@dataclass
class OutputConfig:
    directory: str = "crestline-out"
    formats: list = field(default_factory=lambda: ["csv", "json"])


@dataclass
class RunConfig:
    vorticity: VorticityConfig = field(default_factory=VorticityConfig)
    stream: StreamConfig = field(default_factory=StreamConfig)
    discretization: DiscretizationConfig = field(default_factory=DiscretizationConfig)
    modes: ModesConfig = field(default_factory=ModesConfig)
    simulate: SimulateConfig = field(default_factory=SimulateConfig)
    scan: ScanConfig = field(default_factory=ScanConfig)
    reconstruct: ReconstructConfig = field(default_factory=ReconstructConfig)
    output: OutputConfig = field(default_factory=OutputConfig)

    def to_dict(self) -> dict:
        return asdict(self)


_SECTIONS = {
    "vorticity": VorticityConfig, "stream": StreamConfig,
    "discretization": DiscretizationConfig, "modes": ModesConfig,
    "simulate": SimulateConfig, "scan": ScanConfig,
    "reconstruct": ReconstructConfig, "output": OutputConfig,
}


def _real(path, v, positive=False, nonneg=False):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(path, f"expected a number, got {v!r}")
    v = float(v)
    if not math.isfinite(v):
        raise ConfigError(path, "must be finite")
    if positive and v <= 0:
        raise ConfigError(path, f"must be > 0, got {v!r}")
    if nonneg and v < 0:
        raise ConfigError(path, f"must be >= 0, got {v!r}")
    return v


def _int(path, v, minimum=None):
    if isinstance(v, bool) or not isinstance(v, int):
        raise ConfigError(path, f"expected an integer, got {v!r}")
    if minimum is not None and v < minimum:
        raise ConfigError(path, f"must be >= {minimum}, got {v!r}")
    return v


def _reals(path, v, **kw):
    if not isinstance(v, (list, tuple)):
        raise ConfigError(path, f"expected a list of numbers, got {v!r}")
    return [_real(f"{path}[{i}]", x, **kw) for i, x in enumerate(v)]


def config_from_dict(data: dict) -> RunConfig:
    """Build and validate a :class:`RunConfig`; unknown keys are errors."""
    if not isinstance(data, dict):
        raise ConfigError("<root>", "config must be a table")
    sections = {}
    for name, raw in data.items():
        if name not in _SECTIONS:
            raise ConfigError(name, "unknown section")
        if not isinstance(raw, dict):
            raise ConfigError(name, "section must be a table")
        cls = _SECTIONS[name]
        known = cls.__dataclass_fields__
        for key in raw:
            if key not in known:
                raise ConfigError(f"{name}.{key}", "unknown key")
        sections[name] = cls(**raw)
    cfg = RunConfig(**sections)
    validate(cfg)
    return cfg


def validate(cfg: RunConfig) -> None:
    v = cfg.vorticity
    if v.kind not in vorticity.KINDS:
        raise ConfigError("vorticity.kind", f"must be one of {sorted(vorticity.KINDS)}")
    v.coefficients = _reals("vorticity.coefficients", v.coefficients)
    try:
        vorticity.VorticityModel(v.kind, tuple(v.coefficients))
    except ValueError as e:
        raise ConfigError("vorticity.coefficients", str(e)) from None

    s = cfg.stream
    s.s = _real("stream.s", s.s, positive=True)
    if s.branch_sign not in ("+", "-"):
        raise ConfigError("stream.branch_sign", "must be '+' or '-'")
    s.branch_j = _int("stream.branch_j", s.branch_j, 0)

    d = cfg.discretization
    d.grid_points = _int("discretization.grid_points", d.grid_points, 16)
    d.quadrature_order = _int("discretization.quadrature_order", d.quadrature_order, 2)
    d.quadrature_panels = _int("discretization.quadrature_panels", d.quadrature_panels, 1)

    m = cfg.modes
    m.n_eigen = _int("modes.n_eigen", m.n_eigen, 1)
    if m.n_modes != "auto":
        m.n_modes = _int("modes.n_modes", m.n_modes, 1)
        if m.n_modes > m.n_eigen:
            raise ConfigError("modes.n_modes", f"must not exceed modes.n_eigen = {m.n_eigen}")

    sim = cfg.simulate
    sim.x_max = _real("simulate.x_max", sim.x_max, positive=True)
    if sim.step != "auto":
        sim.step = _real("simulate.step", sim.step, positive=True)
    sim.initial_alpha = _reals("simulate.initial_alpha", sim.initial_alpha)
    sim.initial_beta = _reals("simulate.initial_beta", sim.initial_beta)
    if len(sim.initial_alpha) != len(sim.initial_beta):
        raise ConfigError("simulate.initial_beta", "must have the same length as simulate.initial_alpha")

    sc = cfg.scan
    sc.samples = _int("scan.samples", sc.samples, 1)
    sc.radius = _real("scan.radius", sc.radius, positive=True)
    sc.deltas = _reals("scan.deltas", sc.deltas, nonneg=True)
    if not sc.deltas:
        raise ConfigError("scan.deltas", "must not be empty")
    if any(b >= a for a, b in zip(sc.deltas, sc.deltas[1:])):
        raise ConfigError("scan.deltas", "must be strictly decreasing")
    sc.x_window = _real("scan.x_window", sc.x_window, positive=True)
    sc.seed = _int("scan.seed", sc.seed, 0)
    if sc.seed >= 2**64:
        raise ConfigError("scan.seed", "must fit in 64 bits")
    sc.workers = _int("scan.workers", sc.workers, 1)

    r = cfg.reconstruct
    r.n_z = _int("reconstruct.n_z", r.n_z, 3)
    r.stride = _int("reconstruct.stride", r.stride, 1)
    r.sweep_factors = _reals("reconstruct.sweep_factors", r.sweep_factors, positive=True)
    r.sweep_x_max = _real("reconstruct.sweep_x_max", r.sweep_x_max, positive=True)

    o = cfg.output
    if not isinstance(o.directory, str) or not o.directory:
        raise ConfigError("output.directory", "must be a non-empty string")
    if not isinstance(o.formats, list) or any(f not in ("csv", "json") for f in o.formats):
        raise ConfigError("output.formats", "entries must be 'csv' or 'json'")


def load_config(path) -> RunConfig:
    """Read a TOML config, or the resolved config stored in a ``manifest.json``."""
    try:
        with open(path, "rb") as fh:
            if str(path).endswith(".json"):
                data = json.load(fh)
                data = data.get("config", data) if isinstance(data, dict) else data
            else:
                data = tomllib.load(fh)
    except OSError as e:
        raise ConfigError("<file>", str(e)) from None
    except (tomllib.TOMLDecodeError, json.JSONDecodeError) as e:
        raise ConfigError("<file>", f"cannot parse: {e}") from None
    return config_from_dict(data)


# --- output helpers --------------------------------------------------------

def write_csv(path: Path, header, columns) -> None:
    """Header row plus columns with 17 significant digits, LF line endings."""
    data = np.column_stack([np.asarray(c, dtype=float) for c in columns])
    buf = io.StringIO()
    np.savetxt(buf, data, fmt="%.17g", delimiter=",", header=",".join(header), comments="",
               newline="\n")
    path.write_bytes(buf.getvalue().encode("ascii"))


def write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(_plain(obj), indent=2, sort_keys=True) + "\n", encoding="utf-8",
                    newline="\n")


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x if math.isfinite(x) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


# --- pipeline --------------------------------------------------------------

class Pipeline:
    """Lazily built stages for one config; results are cached."""

    def __init__(self, cfg: RunConfig, out: Path):
        self.cfg = cfg
        self.out = out
        self.summary: dict = {}
        self.files: list[str] = []
        self._cache: dict = {}

    def _emit_csv(self, name, header, columns):
        if "csv" in self.cfg.output.formats:
            write_csv(self.out / name, header, columns)
            self.files.append(name)

    def _emit_json(self, name, obj):
        if "json" in self.cfg.output.formats:
            write_json(self.out / name, obj)
            self.files.append(name)

    def model(self):
        c = self.cfg.vorticity
        return vorticity.VorticityModel(c.kind, tuple(c.coefficients))

    def stream(self):
        if "stream" not in self._cache:
            c = self.cfg.stream
            self._cache["stream"] = stream.build_stream(
                self.model(), c.s, (c.branch_sign, c.branch_j), self.cfg.discretization.grid_points)
        return self._cache["stream"]

    def spectrum(self):
        if "spectrum" not in self._cache:
            self._cache["spectrum"] = dispersion.solve_spectrum(
                self.stream(), self.model(), self.cfg.modes.n_eigen)
        return self._cache["spectrum"]

    def reduced(self):
        if "reduced" not in self._cache:
            d = self.cfg.discretization
            self._cache["reduced"] = reduction.build_model(
                self.stream(), self.spectrum(), self.cfg.modes.n_modes,
                panels=d.quadrature_panels, order=d.quadrature_order)
        return self._cache["reduced"]

    def initial_state(self):
        m = self.reduced()
        sim = self.cfg.simulate
        if len(sim.initial_alpha) != m.n_modes:
            raise ConfigError("simulate.initial_alpha",
                              f"needs {m.n_modes} entries (one per reduced mode), got {len(sim.initial_alpha)}")
        return reduction.ReducedState(sim.initial_alpha, sim.initial_beta)

    def step(self):
        st = self.cfg.simulate.step
        return None if st == "auto" else st

    def trajectory(self):
        if "trajectory" not in self._cache:
            self._cache["trajectory"] = dynamics.integrate(
                self.reduced(), self.initial_state(), self.cfg.simulate.x_max, self.step())
        return self._cache["trajectory"]

    # stages

    def run_stream(self):
        st = self.stream()
        self._emit_csv("stream.csv", ["Y", "u", "u_prime", "u_second"], [st.z, st.u, st.u_z, st.u_zz])
        fam = stream.depth_family(st.model, st.s, max(st.branch[1], 3), st.turning)
        info = dict(st.summary(), family=[{"sign": m.sign, "j": m.j, "d": m.d, "r": m.r}
                                          for m in fam.members])
        self.summary["stream"] = info
        self._emit_json("stream.json", info)

    def run_dispersion(self):
        sp = self.spectrum()
        N, strict = dispersion.count_nonpositive(sp)
        j = np.arange(1, sp.n_eigen + 1)
        self._emit_csv("spectrum.csv", ["j", "mu"], [j, sp.mu])
        self._emit_csv("modes.csv", ["z"] + [f"phi_{i}" for i in j], [sp.z, *sp.phi])
        info = {"mu": sp.mu, "N": N, "strict": strict, "kappa": sp.robin, "d": sp.depth}
        self.summary["dispersion"] = info
        self._emit_json("dispersion.json", info)

    def run_reduce(self):
        m = self.reduced()
        info = {"n_modes": m.n_modes, "mu": m.mu, "strict": m.strict, "S0": m.S0,
                "frequencies": np.sqrt(np.maximum(-m.mu, 0.0))}
        self.summary["reduce"] = info
        self._emit_json("reduce.json", info)

    def run_simulate(self):
        m, tr = self.reduced(), self.trajectory()
        n = m.n_modes
        cols = [tr.x, *tr.alpha.T, *tr.beta.T, tr.hamiltonian_values, tr.zeta_values]
        header = ["x"] + [f"alpha_{i + 1}" for i in range(n)] + [f"beta_{i + 1}" for i in range(n)] + ["s", "zeta"]
        self._emit_csv("trajectory.csv", header, cols)
        rep = dynamics.symmetry_scan(tr, 1e-3)
        info = {"samples": len(tr), "drift": tr.drift(), "amplitude": tr.amplitude,
                "min_beta_norm": rep.min_beta_norm, "symmetric_point": rep.symmetric_point,
                "mirror_residual": rep.mirror_residual}
        self.summary["simulate"] = info
        self._emit_json("simulate.json", info)

    def run_scan(self, optional=False):
        m, sc = self.reduced(), self.cfg.scan
        if optional and m.n_modes < 2:
            self.summary["scan"] = {"skipped": f"the dimension scan needs N >= 2, have N = {m.n_modes}"}
            return
        res = dynamics.monte_carlo_symmetric_fraction(
            m, sc.samples, sc.radius, sc.deltas, sc.x_window, sc.seed, workers=sc.workers)
        self._emit_csv("symmetry.csv", ["delta", "fraction", "samples"],
                       [res.deltas, res.fractions, np.full(len(res.deltas), res.samples)])
        info = {"slope_estimate": res.slope_estimate(), "seed": res.seed,
                "ratios": res.ratios(), "expected_exponent": m.n_modes - 1}
        self.summary["scan"] = info
        self._emit_json("symmetry.json", info)

    def run_reconstruct(self):
        m, tr, rc = self.reduced(), self.trajectory(), self.cfg.reconstruct
        f = reconstruction.reconstruct(m, tr, n_z=rc.n_z, stride=rc.stride)
        self._emit_csv("profile.csv", ["x", "eta"], [f.x, f.eta])
        X, Z = np.meshgrid(f.x, f.z, indexing="ij")
        self._emit_csv("fields.csv", ["x", "z", "Phi", "Psi"],
                       [X.ravel(), Z.ravel(), f.Phi.ravel(), f.Psi.ravel()])
        y0 = self.initial_state().vector
        report = {"bernoulli": reconstruction.bernoulli_residual(f, m),
                  "interior": reconstruction.field_residual(f, m) if len(f.x) >= 9 else None,
                  "boundary": reconstruction.boundary_defects(f)}
        amp = float(np.linalg.norm(y0))
        if amp > 0:
            sweep = reconstruction.amplitude_sweep(
                m, y0, [amp * q for q in rc.sweep_factors], min(rc.sweep_x_max, self.cfg.simulate.x_max),
                self.step(), n_z=rc.n_z)
            report["slopes"] = {"bernoulli": sweep["bernoulli_slope"], "interior": sweep["interior_slope"]}
            report["sweep"] = sweep
        self.summary["reconstruct"] = report
        self._emit_json("residuals.json", report)


_RUNNERS = {
    "stream": ("run_stream",),
    "dispersion": ("run_dispersion",),
    "reduce": ("run_reduce",),
    "simulate": ("run_simulate",),
    "scan-symmetry": ("run_scan",),
    "reconstruct": ("run_reconstruct",),
    "all": ("run_stream", "run_dispersion", "run_reduce", "run_simulate", "run_scan", "run_reconstruct"),
}


def run(stage: str, cfg: RunConfig, out_dir=None) -> dict:
    """Run a stage and write its artifacts plus ``manifest.json``; returns the manifest."""
    if stage not in _RUNNERS:
        raise ValueError(f"unknown stage {stage!r}")
    out = Path(out_dir if out_dir is not None else cfg.output.directory)
    out.mkdir(parents=True, exist_ok=True)
    pipe = Pipeline(cfg, out)
    for name in _RUNNERS[stage]:
        if name == "run_scan" and stage == "all":
            pipe.run_scan(optional=True)
        else:
            getattr(pipe, name)()
    st = pipe.stream()
    manifest = {
        "library": "crestline", "version": __version__, "stage": stage,
        "config": cfg.to_dict(), "files": sorted(pipe.files),
        "d": st.d, "k": st.k, "kappa": st.kappa, "r": st.r,
        "summary": pipe.summary,
    }
    if "spectrum" in pipe._cache:
        N, strict = dispersion.count_nonpositive(pipe.spectrum())
        manifest["N"], manifest["strict"] = N, strict
    write_json(out / "manifest.json", manifest)
    return _plain(manifest)


STAGE_ERRORS = (stream.StreamError, dispersion.DispersionError, reduction.SurfaceError,
                dynamics.TrustRegionError, dynamics.IntegrationError, ArithmeticError, ValueError)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="crestline", description=__doc__.splitlines()[0])
    parser.add_argument("stage", choices=STAGES)
    parser.add_argument("--config", required=True, help="TOML run configuration or a previous manifest.json")
    parser.add_argument("--output-dir", help="overrides output.directory")
    parser.add_argument("--seed", type=int, help="overrides scan.seed")
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg = copy.deepcopy(cfg)
            cfg.scan.seed = args.seed
            validate(cfg)
    except ConfigError as e:
        print(f"crestline: config error: {e}", file=sys.stderr)
        return 2
    try:
        manifest = run(args.stage, cfg, args.output_dir)
    except ConfigError as e:
        print(f"crestline: config error: {e}", file=sys.stderr)
        return 2
    except STAGE_ERRORS as e:
        print(f"crestline: {args.stage} failed: {type(e).__name__}: {e}", file=sys.stderr)
        return 1
    out = args.output_dir or cfg.output.directory
    print(f"crestline {args.stage}: wrote {len(manifest['files'])} files to {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
