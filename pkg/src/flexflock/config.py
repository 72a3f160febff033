"""Scenario configuration: loading, validation and serialization.

Scenarios are flat YAML mappings. See the README for the full key list.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field, fields, replace
from importlib import resources
from pathlib import Path
from typing import Optional, Union

import numpy as np
import yaml

from .errors import ConfigError, FlockError
from .field import FieldModel, gradient
from .graph import Mode, Topology, complete_edges, in_range_edges, is_connected, pairwise_mu
from .potential import PotentialKind
from .sim import random_poses
from .spacing import SpacingParams, initial_d

BUNDLED = ("static_k5_cubic", "dynamic_r10")

# config key -> attribute name, where they differ
_KEY_ALIASES = {"lambda": "lam"}


@dataclass
class ScenarioConfig:
    name: str = "scenario"
    field: str = "cubic_bench"
    field_terms: list = dc_field(default_factory=list)
    n_agents: int = 5
    poses: Optional[list] = None
    seed: Optional[int] = None
    disc_radius: float = 1.0
    disc_center: list = dc_field(default_factory=lambda: [0.0, 0.0])
    min_separation: float = 0.5
    topology: str = "static"
    edges: Union[str, list] = "complete"
    r: Optional[float] = None
    potential: str = "quadratic"
    edge_force: str = "partial"
    K_f: float = 1.0
    d_nom: float = 2.0
    lam: float = 1.0
    d_init: Union[str, float] = "nominal"
    spacing: str = "asp"
    integrator: str = "rk4"
    dt: float = 1e-3
    T: float = 50.0
    record_every: int = 100
    output_dir: Optional[str] = None

    def field_model(self):
        if self.field == "polynomial":
            return FieldModel.polynomial(self.field_terms)
        return FieldModel(self.field)

    def potential_kind(self):
        if self.potential == "barrier":
            return PotentialKind.barrier(self.r)
        return PotentialKind.quadratic()

    def d_init_value(self):
        return initial_d(self.d_init, SpacingParams(self.d_nom, self.lam))

    def resolve_poses(self):
        if self.poses is not None:
            return np.asarray(self.poses, dtype=float).reshape(-1, 3)
        return random_poses(
            self.n_agents,
            self.seed,
            radius=self.disc_radius,
            center=tuple(self.disc_center),
            min_separation=self.min_separation,
            fld=self.field_model(),
        )

    def topology_at(self, poses):
        if self.topology == "dynamic":
            return Topology.dynamic(self.n_agents, self.r, gradient(self.field_model(), poses[:, :2]))
        edges = complete_edges(self.n_agents) if self.edges == "complete" else {tuple(e) for e in self.edges}
        return Topology.static(self.n_agents, edges)

    def initial_topology(self):
        topo = self.topology_at(self.resolve_poses())
        if topo.mode is Mode.DYNAMIC:
            topo.edges = set()  # rebuilt from gradients when the run starts
        return topo

    def to_dict(self):
        out = {}
        for f in fields(self):
            key = {v: k for k, v in _KEY_ALIASES.items()}.get(f.name, f.name)
            out[key] = getattr(self, f.name)
        return out


def _coerce(raw: dict):
    problems = []
    known = {f.name: f for f in fields(ScenarioConfig)}
    kwargs = {}
    for key, value in raw.items():
        attr = _KEY_ALIASES.get(key, key)
        if attr not in known or key in _KEY_ALIASES.values():
            problems.append(f"unknown key {key!r}")
            continue
        kwargs[attr] = value
    try:
        for name in ("K_f", "d_nom", "lam", "dt", "T", "disc_radius", "min_separation"):
            if name in kwargs:
                kwargs[name] = float(kwargs[name])
        for name in ("n_agents", "record_every"):
            if name in kwargs:
                if float(kwargs[name]) != int(kwargs[name]):
                    raise ValueError(f"{name} must be an integer")
                kwargs[name] = int(kwargs[name])
        if kwargs.get("r") is not None:
            kwargs["r"] = float(kwargs["r"])
        if kwargs.get("seed") is not None:
            kwargs["seed"] = int(kwargs["seed"])
        if isinstance(kwargs.get("d_init"), (int, float)):
            kwargs["d_init"] = float(kwargs["d_init"])
    except (TypeError, ValueError) as exc:
        problems.append(f"bad value: {exc}")
    return kwargs, problems


def validate(cfg: ScenarioConfig):
    """Return a list of human-readable violations; empty means valid."""
    v = []
    if cfg.n_agents < 1:
        v.append(f"n_agents must be >= 1, got {cfg.n_agents}")
    for name in ("K_f", "d_nom", "lam", "dt"):
        if not getattr(cfg, name) > 0:
            v.append(f"{'lambda' if name == 'lam' else name} must be positive, got {getattr(cfg, name)}")
    if not cfg.T >= 0:
        v.append(f"T must be non-negative, got {cfg.T}")
    if cfg.record_every < 1:
        v.append(f"record_every must be >= 1, got {cfg.record_every}")
    for name, allowed in (
        ("topology", ("static", "dynamic")),
        ("potential", ("quadratic", "barrier")),
        ("edge_force", ("partial", "total")),
        ("spacing", ("asp", "fixed")),
        ("integrator", ("rk4", "euler")),
        ("field", ("quadratic_bowl", "cubic_bench", "polynomial")),
    ):
        if getattr(cfg, name) not in allowed:
            v.append(f"{name} must be one of {allowed}, got {getattr(cfg, name)!r}")
    if cfg.topology == "dynamic" or cfg.potential == "barrier":
        if cfg.r is None or not cfg.r > 0:
            v.append("r must be a positive number for dynamic topologies and the barrier potential")
    if v:
        return v

    if cfg.topology == "dynamic":
        bound = math.log(cfg.r / cfg.d_nom)
        if cfg.lam > bound:
            v.append(f"lambda {cfg.lam:g} > ln(r/d_nom) = {bound:.4f}")
    try:
        cfg.d_init_value()
        fld = cfg.field_model()
    except (FlockError, ValueError, TypeError) as exc:
        return v + [str(exc)]

    if cfg.poses is not None:
        P = np.asarray(cfg.poses, dtype=float)
        if P.ndim != 2 or P.shape[1] != 3:
            return v + ["poses must be a list of [x, y, theta] triples"]
        if len(P) != cfg.n_agents:
            return v + [f"poses lists {len(P)} agents but n_agents = {cfg.n_agents}"]
        if not np.all(np.isfinite(P)):
            return v + ["poses must be finite"]
    elif cfg.seed is None:
        return v + ["either poses or seed (for the pose generator) is required"]
    if cfg.topology == "static" and cfg.edges != "complete":
        try:
            edges = [tuple(int(a) for a in e) for e in cfg.edges]
            Topology.static(cfg.n_agents, edges)
        except (FlockError, TypeError, ValueError) as exc:
            return v + [f"edges: {exc}"]
    try:
        poses = cfg.resolve_poses()
    except FlockError as exc:
        return v + [f"pose generator: {exc}"]

    topo = cfg.topology_at(poses)
    M = pairwise_mu(gradient(fld, poses[:, :2]))
    if cfg.topology == "dynamic" and not is_connected(topo):
        v.append(f"initial range graph (r = {cfg.r:g}) is not connected")
    for i, j in sorted(topo.edges):
        if M[i, j] <= 0:
            v.append(f"connected agents {i} and {j} start with identical gradients")
        elif cfg.potential == "barrier" and not M[i, j] < cfg.r:
            v.append(f"edge ({i}, {j}) starts at mu = {M[i, j]:.6g}, outside barrier domain (0, {cfg.r:g})")
    return v


def parse_config(text: str, source: str = "<string>") -> ScenarioConfig:
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"parse error in {source}: {exc}") from exc
    if raw is None:
        raise ConfigError(f"parse error in {source}: empty document")
    if not isinstance(raw, dict):
        raise ConfigError(f"parse error in {source}: expected a key/value mapping")
    kwargs, problems = _coerce(raw)
    if problems:
        raise ConfigError(problems)
    cfg = ScenarioConfig(**kwargs)
    problems = validate(cfg)
    if problems:
        raise ConfigError(problems)
    return cfg


def bundled_text(name: str) -> str:
    return resources.files("flexflock.scenarios").joinpath(f"{name}.yaml").read_text()


def load_config(path_or_name) -> ScenarioConfig:
    """Load a scenario from a YAML file, or a bundled scenario by name."""
    path = Path(path_or_name)
    if path.is_file():
        return parse_config(path.read_text(), str(path))
    if str(path_or_name) in BUNDLED:
        return parse_config(bundled_text(str(path_or_name)), f"bundled:{path_or_name}")
    raise ConfigError(f"no such config file or bundled scenario: {path_or_name}")


def dump_config(cfg: ScenarioConfig) -> str:
    return yaml.safe_dump(cfg.to_dict(), sort_keys=False, default_flow_style=None)


def with_overrides(cfg: ScenarioConfig, **overrides) -> ScenarioConfig:
    """Apply CLI overrides (None means keep) and re-validate."""
    changes = {k: v for k, v in overrides.items() if v is not None}
    new = replace(cfg, **changes)
    problems = validate(new)
    if problems:
        raise ConfigError(problems)
    return new
