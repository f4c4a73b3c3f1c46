"""Versioned key-value presets for the supported spin-photon systems.

Presets ship as an INI file in the package data; the directory can be
overridden with the SPINCLUSTER_PRESET_DIR environment variable."""
from __future__ import annotations

import configparser
import importlib.resources
import os
from pathlib import Path

from .hamiltonian import SpinSystemParams

PRESET_SCHEMA_VERSION = 1
PRESET_DIR_ENV = "SPINCLUSTER_PRESET_DIR"


def _presets_text() -> str:
    override = os.environ.get(PRESET_DIR_ENV)
    if override:
        return (Path(override) / "presets.ini").read_text()
    return (
        importlib.resources.files("spincluster")
        .joinpath("data/presets.ini")
        .read_text()
    )


def load_presets() -> configparser.ConfigParser:
    cp = configparser.ConfigParser()
    cp.read_string(_presets_text())
    version = cp.getint("schema", "version", fallback=None)
    if version != PRESET_SCHEMA_VERSION:
        raise ValueError(f"unsupported preset schema version {version}")
    return cp


def preset_names() -> list:
    cp = load_presets()
    return [s for s in cp.sections() if s != "schema"]


def load_preset(name: str) -> dict:
    """Flat dict of floats for one preset section."""
    cp = load_presets()
    if name not in cp or name == "schema":
        raise KeyError(f"unknown preset {name!r}")
    return {k: float(v) for k, v in cp[name].items()}


def spin_params(name: str = "siv29") -> SpinSystemParams:
    """SpinSystemParams from a preset that carries full Hamiltonian data."""
    d = load_preset(name)
    required = ("a_par_hz", "bx_t", "bz_t")
    missing = [k for k in required if k not in d]
    if missing:
        raise KeyError(f"preset {name!r} lacks Hamiltonian fields: {missing}")
    return SpinSystemParams(
        a_par=d["a_par_hz"],
        a_perp=d.get("a_perp_hz", d["a_par_hz"]),
        gamma_e=d.get("gamma_e_hz_per_t", 14e9),
        gamma_n=d.get("gamma_n_hz_per_t", -8.465e6),
        b_field=(d["bx_t"], 0.0, d["bz_t"]),
        lambda_so=d.get("lambda_so_hz", 50e9),
    )
