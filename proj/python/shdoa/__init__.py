"""Spherical-harmonic DOA estimation (C++ core)."""

from ._core import (
    Config,
    ConfigError,
    Error,
    IoError,
    Model,
    adjacent_separation,
    analytic_coherence,
    angular_error,
    array_directions,
    check_grid,
    decompose,
    eta,
    evaluate,
    extract_features,
    load_config,
    load_model,
    optimal_assignment,
    parse_config,
    simulate,
    sph_harmonic,
    stft,
    train,
    wigner3j,
)

__all__ = [name for name in dir() if not name.startswith("_")]
