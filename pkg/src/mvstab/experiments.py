"""Configuration-driven experiment runner emitting figure-ready data files.

One JSON config describes one experiment; outputs are deterministic CSV
files (RFC-4180, 17 significant digits) plus a manifest listing every
artifact with its checksum.
"""

from __future__ import annotations

import hashlib
import json
import time
from functools import partial
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import __version__, kernels
from .models import ModelError, ModelParams, make_model
from .operators import (assemble, default_shapes, hautus_check,
                        schrodinger_check, shapes_from_unstable_eigenfunctions,
                        spectral_gap_sweep, spectrum, save_system_json,
                        spectrum_to_dict)
from .riccati import FeedbackLaw, solve_are
from .simulate import (SimulationSetup, TrajectoryRecord, cosine_perturbed,
                       cosine_perturbed_uniform, decay_rate, simulate,
                       write_sidecar, write_trajectory_csv)
from .spectral import GridFunction, to_coeffs, to_grid
from .stationary import (StationaryState, kuramoto_synchronized_state,
                         solve_self_consistent, uniform_state)

EXPERIMENT_KINDS = ("stationary", "spectrum", "gap_sweep", "schrodinger_check",
                    "hautus", "synthesize", "simulate", "heatmap_sweep")


class ConfigError(ValueError):
    pass


def _fmt(x: float) -> str:
    return format(float(x), ".16e")


def _write_csv(path: Path, header: list[str], rows) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(v if isinstance(v, str) else _fmt(v) for v in row))
    with open(path, "w", newline="") as fh:
        fh.write("\r\n".join(lines) + "\r\n")


def _take(block: dict, path: str, known: set[str]) -> None:
    if not isinstance(block, dict):
        raise ConfigError(f"'{path}' must be a JSON object, got {type(block).__name__}")
    unknown = set(block) - known
    if unknown:
        raise ConfigError(f"unknown key(s) {sorted(unknown)} in '{path}'")


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str
    model: ModelParams
    modes: int = 64
    grid: int = 256
    solver_tol: float = 1e-12
    damping: float = 0.5
    delta: float = 1.0
    nu: float = 1e6
    shapes: str = "ansatz"            # ansatz | eigenfunction
    m_count: int = 4
    target_branch: str = "auto"       # auto | uniform | synchronized | self_consistent
    target_phase: float = 0.0
    init_kind: str = "uniform_cosine"  # uniform_cosine | target_cosine
    eps: float = 0.1
    init_phase: float = 0.3
    t_end: float = 10.0
    rtol: float = 1e-8
    atol: float = 1e-10
    n_samples: int = 400
    compare_uncontrolled: bool = True
    law_file: str | None = None      # reuse a serialized synthesis result
    K_values: tuple = ()
    sigma_values: tuple = ()
    contour_levels: tuple = (-8.0, -6.0, -4.0, -2.0)
    seed: int = 0
    raw: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if self.kind not in EXPERIMENT_KINDS:
            raise ConfigError(f"unknown experiment kind {self.kind!r}")
        if self.shapes not in ("ansatz", "eigenfunction"):
            raise ConfigError(f"unknown shapes choice {self.shapes!r}")
        if self.target_branch not in ("auto", "uniform", "synchronized",
                                      "self_consistent"):
            raise ConfigError(f"unknown target branch {self.target_branch!r}")
        if self.init_kind not in ("uniform_cosine", "target_cosine"):
            raise ConfigError(f"unknown initial-density kind {self.init_kind!r}")
        if self.kind in ("gap_sweep",) and not self.K_values:
            raise ConfigError("gap_sweep requires sweep.K_values")
        if self.kind == "heatmap_sweep" and not self.sigma_values:
            raise ConfigError("heatmap_sweep requires sweep.sigma_values")

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentConfig":
        _take(doc, "<root>", {"kind", "model", "numerics", "control", "target",
                              "initial", "simulation", "sweep", "seed"})
        if "kind" not in doc:
            raise ConfigError("missing required field 'kind'")
        if "model" not in doc:
            raise ConfigError("missing required block 'model'")
        try:
            model = ModelParams.from_dict(doc["model"])
        except ModelError as exc:
            raise ConfigError(f"in 'model': {exc}")

        num = doc.get("numerics", {})
        _take(num, "numerics", {"modes", "grid", "solver_tol", "damping",
                                "rtol", "atol"})
        ctl = doc.get("control", {})
        _take(ctl, "control", {"delta", "nu", "shapes", "m_count", "law_file"})
        tgt = doc.get("target", {})
        _take(tgt, "target", {"branch", "phase"})
        ini = doc.get("initial", {})
        _take(ini, "initial", {"kind", "eps", "phase"})
        sim = doc.get("simulation", {})
        _take(sim, "simulation", {"t_end", "n_samples", "compare_uncontrolled",
                                  "contour_levels"})
        swp = doc.get("sweep", {})
        _take(swp, "sweep", {"K_values", "sigma_values"})

        return cls(
            kind=doc["kind"], model=model,
            modes=int(num.get("modes", 64)), grid=int(num.get("grid", 256)),
            solver_tol=float(num.get("solver_tol", 1e-12)),
            damping=float(num.get("damping", 0.5)),
            rtol=float(num.get("rtol", 1e-8)), atol=float(num.get("atol", 1e-10)),
            delta=float(ctl.get("delta", 1.0)), nu=float(ctl.get("nu", 1e6)),
            shapes=ctl.get("shapes", "ansatz"), m_count=int(ctl.get("m_count", 4)),
            law_file=ctl.get("law_file"),
            target_branch=tgt.get("branch", "auto"),
            target_phase=float(tgt.get("phase", 0.0)),
            init_kind=ini.get("kind", "uniform_cosine"),
            eps=float(ini.get("eps", 0.1)),
            init_phase=float(ini.get("phase", 0.3)),
            t_end=float(sim.get("t_end", 10.0)),
            n_samples=int(sim.get("n_samples", 400)),
            compare_uncontrolled=bool(sim.get("compare_uncontrolled", True)),
            contour_levels=tuple(sim.get("contour_levels", (-8.0, -6.0, -4.0, -2.0))),
            K_values=tuple(swp.get("K_values", ())),
            sigma_values=tuple(swp.get("sigma_values", ())),
            seed=int(doc.get("seed", 0)), raw=doc,
        )

    @classmethod
    def load(cls, path, overrides: list[str] | None = None) -> "ExperimentConfig":
        try:
            with open(path) as fh:
                doc = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}")
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: line {exc.lineno}, col {exc.colno}: {exc.msg}")
        for item in overrides or ():
            doc = _apply_override(doc, item)
        return cls.from_dict(doc)


def _apply_override(doc: dict, item: str) -> dict:
    if "=" not in item:
        raise ConfigError(f"override {item!r} is not of the form key.path=value")
    key, raw_val = item.split("=", 1)
    try:
        value = json.loads(raw_val)
    except json.JSONDecodeError:
        value = raw_val
    doc = json.loads(json.dumps(doc))  # deep copy
    node = doc
    parts = key.split(".")
    for p in parts[:-1]:
        node = node.setdefault(p, {})
        if not isinstance(node, dict):
            raise ConfigError(f"override path {key!r} crosses a non-object node")
    node[parts[-1]] = value
    return doc


# -- shared pipeline pieces ------------------------------------------------

def _model_for(cfg: ExperimentConfig, coupling=None, sigma=None):
    params = cfg.model
    if coupling is not None:
        params = replace(params, coupling=float(coupling))
    if sigma is not None:
        params = replace(params, sigma=float(sigma))
    return params, make_model(params, cfg.modes)


def resolve_target(cfg: ExperimentConfig, model, params) -> StationaryState:
    branch = cfg.target_branch
    if branch == "auto":
        branch = "self_consistent" if model.has_confinement else "uniform"
    if branch == "uniform":
        return uniform_state(model)
    if branch == "synchronized":
        if params.kind != "kuramoto":
            raise ConfigError("synchronized target is defined for the Kuramoto model")
        return kuramoto_synchronized_state(model, params.coupling,
                                           cfg.target_phase)
    # self-consistent branch seeded from the confinement Boltzmann profile
    n = max(cfg.grid, 4 * cfg.modes)
    v = to_grid(model.V, n).values
    vals = np.exp(-v / model.sigma)
    vals /= np.mean(vals) * 2.0 * np.pi
    init = to_coeffs(GridFunction(vals), cfg.modes)
    init = init * (1.0 / init.mass)
    out = solve_self_consistent(model, init, tol=cfg.solver_tol,
                                damping=cfg.damping)
    if not out.converged:
        raise ConfigError(
            f"self-consistent target did not converge (defect after "
            f"{out.iterations} iterations); adjust numerics.damping/solver_tol")
    return out


def _build_system(cfg: ExperimentConfig, model, state):
    if cfg.shapes == "ansatz":
        shapes = default_shapes(cfg.modes, cfg.m_count)
    else:
        base = assemble(model, state, [], cfg.delta, cfg.nu)
        shapes = shapes_from_unstable_eigenfunctions(base)
        if not shapes:
            shapes = default_shapes(cfg.modes, cfg.m_count)
    return assemble(model, state, shapes, cfg.delta, cfg.nu)


def _initial_density(cfg: ExperimentConfig, state: StationaryState):
    if cfg.init_kind == "uniform_cosine":
        return cosine_perturbed_uniform(cfg.modes, cfg.eps, cfg.init_phase)
    return cosine_perturbed(state.mubar, cfg.eps, cfg.init_phase)


def compare_runs(traj_a: TrajectoryRecord, traj_b: TrajectoryRecord,
                 window: tuple[float, float] | None = None) -> dict:
    """Per-time norm ratio and fitted decay rates of two runs."""
    if traj_a.times.shape != traj_b.times.shape or \
            np.abs(traj_a.times - traj_b.times).max() > 1e-12:
        raise ConfigError("compare_runs requires matching time grids")
    if window is None:
        window = (traj_a.times[0], traj_a.times[-1])
    floor = 1e-300
    ratio = np.maximum(traj_a.norm_l2, floor) / np.maximum(traj_b.norm_l2, floor)
    return {
        "times": traj_a.times,
        "ratio": ratio,
        "terminal_a": float(traj_a.norm_l2[-1]),
        "terminal_b": float(traj_b.norm_l2[-1]),
        "rate_a": decay_rate(traj_a, window),
        "rate_b": decay_rate(traj_b, window),
    }


# -- manifest ----------------------------------------------------------------

@dataclass
class RunManifest:
    config: dict
    version: str
    backend: str
    wall_clock_s: float
    outputs: list
    passed: bool = True

    def to_dict(self) -> dict:
        return {"config": self.config, "toolkit_version": self.version,
                "kernel_backend": self.backend,
                "wall_clock_s": self.wall_clock_s, "outputs": self.outputs,
                "passed": self.passed}


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    h.update(path.read_bytes())
    return h.hexdigest()


class _Emitter:
    """Collects emitted files so the manifest can checksum all of them."""

    def __init__(self, out_dir: Path):
        self.out_dir = Path(out_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self.paths: list[Path] = []

    def path(self, name: str) -> Path:
        p = self.out_dir / name
        self.paths.append(p)
        return p

    def write_json(self, name: str, doc: dict) -> Path:
        p = self.path(name)
        with open(p, "w") as fh:
            json.dump(doc, fh, indent=2, sort_keys=True)
        return p

    def listing(self) -> list:
        return [{"path": p.name, "sha256": _sha256(p), "bytes": p.stat().st_size}
                for p in self.paths]


# -- experiment implementations ------------------------------------------------

def _stationary_point(cfg: ExperimentConfig, K: float) -> dict:
    params, model = _model_for(cfg, coupling=K)
    init = cosine_perturbed_uniform(cfg.modes, 0.5, 0.0)
    out = solve_self_consistent(model, init, tol=cfg.solver_tol,
                                damping=cfg.damping)
    g = to_grid(out.mubar, cfg.grid)
    return {"K": K, "state": out, "theta": g.nodes, "mu": g.values}


def _run_stationary(cfg: ExperimentConfig, em: _Emitter, pool_map) -> bool:
    Ks = list(cfg.K_values) or [cfg.model.coupling]
    results = list(pool_map(partial(_stationary_point, cfg), Ks))
    summary = []
    for res in results:
        tag = f"{res['K']:g}".replace(".", "p")
        _write_csv(em.path(f"stationary_K{tag}.csv"), ["theta", "mu"],
                   zip(res["theta"], res["mu"]))
        res["state"].save(em.path(f"state_K{tag}.json"))
        st = res["state"]
        summary.append((res["K"], st.residual, float(st.iterations),
                        st.branch))
    _write_csv(em.path("stationary_summary.csv"),
               ["K", "residual", "iterations", "branch"], summary)
    return all(r["state"].converged for r in results)


def _run_spectrum(cfg: ExperimentConfig, em: _Emitter) -> bool:
    params, model = _model_for(cfg)
    state = resolve_target(cfg, model, params)
    sys = _build_system(cfg, model, state)
    rep = spectrum(sys, unshifted=True)
    _write_csv(em.path("eigenvalues.csv"), ["re", "im"],
               zip(rep.eigenvalues.real, rep.eigenvalues.imag))
    em.write_json("spectrum.json", spectrum_to_dict(rep))
    save_system_json(sys, em.path("system.json"))
    return True


def _gap_point(cfg: ExperimentConfig, K: float) -> dict:
    return spectral_gap_sweep([K], cfg.model.sigma, cfg.modes)[0]


def _run_gap_sweep(cfg: ExperimentConfig, em: _Emitter, pool_map) -> bool:
    rows = list(pool_map(partial(_gap_point, cfg), sorted(cfg.K_values)))
    # the literature lower bound is not computed here; the column is left
    # for externally supplied values
    _write_csv(em.path("gap_sweep.csv"),
               ["K", "gap", "residual", "external_lower_bound"],
               [(r["K"], r["gap"], r["residual"], "") for r in rows])
    return True


def _run_schrodinger(cfg: ExperimentConfig, em: _Emitter) -> bool:
    params, model = _model_for(cfg)
    state = resolve_target(cfg, model, params)
    rep = schrodinger_check(model, state, n_grid=cfg.grid)
    em.write_json("schrodinger_report.json", {
        "n_grid": rep.n_grid,
        "matching_error": rep.matching_error,
        "hs_norm": rep.hs_norm,
        "hs_norm_refined": rep.hs_norm_refined,
        "hs_drift": rep.hs_drift,
        "conjugation_hermiticity": rep.conjugation_hermiticity,
    })
    _write_csv(em.path("transformed_eigenvalues.csv"), ["re", "im"],
               zip(rep.h_eigenvalues.real, rep.h_eigenvalues.imag))
    return True


def _run_hautus(cfg: ExperimentConfig, em: _Emitter) -> bool:
    params, model = _model_for(cfg)
    state = resolve_target(cfg, model, params)
    sys = _build_system(cfg, model, state)
    rep = hautus_check(sys)
    em.write_json("hautus_report.json", {
        "delta": rep.delta,
        "unstable_count": rep.unstable_count,
        "eigenvalues_re": rep.eigenvalues.real.tolist(),
        "eigenvalues_im": rep.eigenvalues.imag.tolist(),
        "bstar_norms": rep.bstar_norms.tolist(),
        "threshold": rep.threshold,
        "passed": rep.passed,
        "warnings": list(rep.warnings),
    })
    return rep.passed


def _run_synthesize(cfg: ExperimentConfig, em: _Emitter) -> bool:
    params, model = _model_for(cfg)
    state = resolve_target(cfg, model, params)
    sys = _build_system(cfg, model, state)
    law = solve_are(sys)
    law.save(em.path("feedback_law.json"))
    em.write_json("synthesis_summary.json", {
        "residual": law.residual,
        "closed_loop_abscissa": law.closed_loop_abscissa,
        "delta": law.delta, "nu": law.nu,
        "m_controls": law.m_controls, "dim": law.dim,
    })
    return True


def _run_simulate(cfg: ExperimentConfig, em: _Emitter) -> bool:
    params, model = _model_for(cfg)
    state = resolve_target(cfg, model, params)
    sys = _build_system(cfg, model, state)
    if cfg.law_file is not None:
        law = FeedbackLaw.load(cfg.law_file)
        if law.dim != sys.dim:
            raise ConfigError(
                f"control.law_file dimension {law.dim} does not match the "
                f"assembled system ({sys.dim})")
    else:
        law = solve_are(sys)
    mu0 = _initial_density(cfg, state)
    common = dict(t_end=cfg.t_end, rtol=cfg.rtol, atol=cfg.atol,
                  n_samples=cfg.n_samples)
    ctl_setup = SimulationSetup(sys, model, state, mu0, law=law, **common)
    ctl = simulate(ctl_setup)
    write_trajectory_csv(ctl, em.path("trajectory_controlled.csv"))
    write_sidecar(ctl_setup, ctl, em.path("trajectory_controlled.json"),
                  extra={"config": cfg.raw})
    ok = ctl.status == "done"
    if cfg.compare_uncontrolled:
        unc_setup = SimulationSetup(sys, model, state, mu0, law=None, **common)
        unc = simulate(unc_setup)
        write_trajectory_csv(unc, em.path("trajectory_uncontrolled.csv"))
        write_sidecar(unc_setup, unc, em.path("trajectory_uncontrolled.json"),
                      extra={"config": cfg.raw})
        cmp_doc = compare_runs(ctl, unc)
        _write_csv(em.path("comparison.csv"),
                   ["t", "norm_controlled", "norm_uncontrolled", "ratio"],
                   zip(cmp_doc["times"], ctl.norm_l2, unc.norm_l2,
                       cmp_doc["ratio"]))
        em.write_json("comparison.json", {
            "terminal_controlled": cmp_doc["terminal_a"],
            "terminal_uncontrolled": cmp_doc["terminal_b"],
            "rate_controlled": cmp_doc["rate_a"],
            "rate_uncontrolled": cmp_doc["rate_b"],
        })
        ok = ok and unc.status == "done"
    return ok


def _heatmap_point(cfg: ExperimentConfig, sigma: float):
    params, model = _model_for(cfg, sigma=sigma)
    state = resolve_target(cfg, model, params)
    sys = _build_system(cfg, model, state)
    law = solve_are(sys)
    mu0 = _initial_density(cfg, state)
    common = dict(t_end=cfg.t_end, rtol=cfg.rtol, atol=cfg.atol,
                  n_samples=cfg.n_samples)
    ctl = simulate(SimulationSetup(sys, model, state, mu0, law=law, **common))
    unc = simulate(SimulationSetup(sys, model, state, mu0, law=None, **common))
    floor = 1e-16
    return (sigma, np.log10(np.maximum(ctl.norm_l2, floor)),
            np.log10(np.maximum(unc.norm_l2, floor)), ctl.times)


def _run_heatmap(cfg: ExperimentConfig, em: _Emitter, pool_map) -> bool:
    sigmas = sorted(cfg.sigma_values)
    results = list(pool_map(partial(_heatmap_point, cfg), sigmas))
    results.sort(key=lambda r: r[0])
    times = results[0][3]
    header = ["sigma"] + [_fmt(t) for t in times]
    for name, idx in (("heatmap_controlled.csv", 1),
                      ("heatmap_uncontrolled.csv", 2)):
        rows = [(r[0], *r[idx]) for r in results]
        _write_csv(em.path(name), header, rows)
    em.write_json("heatmap_meta.json", {
        "contour_levels": list(cfg.contour_levels),
        "sigma_values": [float(s) for s in sigmas],
        "t_end": cfg.t_end,
        "quantity": "log10 of the L2 distance to the target state",
    })
    return True


def run(cfg: ExperimentConfig, out_dir, threads: int = 1) -> RunManifest:
    """Dispatch one experiment and write artifacts plus manifest."""
    start = time.perf_counter()
    em = _Emitter(Path(out_dir))

    if threads > 1:
        def pool_map(fn, items):
            # worker pool over independent sweep points
            with ProcessPoolExecutor(max_workers=threads) as pool:
                return list(pool.map(fn, items))
    else:
        def pool_map(fn, items):
            return [fn(x) for x in items]

    if cfg.kind == "stationary":
        passed = _run_stationary(cfg, em, pool_map)
    elif cfg.kind == "spectrum":
        passed = _run_spectrum(cfg, em)
    elif cfg.kind == "gap_sweep":
        passed = _run_gap_sweep(cfg, em, pool_map)
    elif cfg.kind == "schrodinger_check":
        passed = _run_schrodinger(cfg, em)
    elif cfg.kind == "hautus":
        passed = _run_hautus(cfg, em)
    elif cfg.kind == "synthesize":
        passed = _run_synthesize(cfg, em)
    elif cfg.kind == "simulate":
        passed = _run_simulate(cfg, em)
    elif cfg.kind == "heatmap_sweep":
        passed = _run_heatmap(cfg, em, pool_map)
    else:  # pragma: no cover - guarded in the config
        raise ConfigError(cfg.kind)

    manifest = RunManifest(cfg.raw, __version__, kernels.backend_name(),
                           time.perf_counter() - start, em.listing(), passed)
    with open(em.out_dir / "manifest.json", "w") as fh:
        json.dump(manifest.to_dict(), fh, indent=2, sort_keys=True)
    return manifest
