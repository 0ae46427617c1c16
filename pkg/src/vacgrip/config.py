"""Runtime configuration: YAML file plus flag overrides (flags win).

The config path comes from --config or the VACGRIP_CONFIG environment
variable. Everything has a default, so no file is required.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field, fields
from importlib import resources
from pathlib import Path

import yaml

from .pneumatics import DEFAULT_MATERIALS, MaterialProfile, PneumaticParams, load_materials

ENV_VAR = "VACGRIP_CONFIG"


@dataclass
class Config:
    rate_hz: float = 30.0
    port: int = 8080
    seed: int = 0
    confirm_timeout_ms: float = 200.0
    materials_path: str | None = None
    scenes_dir: str | None = None
    episodes_dir: str = "episodes"
    p_min: float = -60.0
    k_pump: float = 5.0
    k_vent: float = 20.0
    k_open_cup: float = 15.0
    cup_diameter: float = 0.015

    def pneumatic_params(self, dt: float | None = None) -> PneumaticParams:
        return PneumaticParams(
            p_min=self.p_min,
            k_pump=self.k_pump,
            k_vent=self.k_vent,
            k_open_cup=self.k_open_cup,
            cup_diameter=self.cup_diameter,
            dt=dt if dt is not None else 1.0 / self.rate_hz,
        )

    def materials(self) -> dict[str, MaterialProfile]:
        if self.materials_path:
            return load_materials(self.materials_path)
        return dict(DEFAULT_MATERIALS)

    def scene_path(self, name: str) -> Path:
        """Resolve a scene by name or path: flag dir, then packaged scenes."""
        direct = Path(name)
        if direct.exists():
            return direct
        stem = name if name.endswith(".scene") else f"{name}.scene"
        if self.scenes_dir:
            candidate = Path(self.scenes_dir) / stem
            if candidate.exists():
                return candidate
        packaged = Path(str(resources.files("vacgrip") / "scenes" / stem))
        if packaged.exists():
            return packaged
        raise FileNotFoundError(f"no scene named {name!r}")


def load_config(path: str | None = None) -> Config:
    """Build a Config from the given file, the env var, or defaults."""
    path = path or os.environ.get(ENV_VAR)
    cfg = Config()
    if not path:
        return cfg
    with open(path, "r", encoding="utf-8") as fh:
        data = yaml.safe_load(fh) or {}
    known = {f.name for f in fields(Config)}
    unknown = set(data) - known
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    for key, value in data.items():
        setattr(cfg, key, value)
    # Validate numeric fields by constructing the params once.
    cfg.pneumatic_params()
    return cfg
