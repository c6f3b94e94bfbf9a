import math
from dataclasses import replace

import numpy as np
import pytest

from gbsim import gaussian as g
from gbsim.config import (ExperimentConfig, build_circuit, config_fingerprint,
                          emit_config, parse_config, resolve_unitary)
from gbsim.errors import ConfigurationError


def haar_config(**overrides):
    base = dict(
        mode_count=4,
        squeezer_r=(0.5, 0.3),
        squeezer_phase=(0.1, 2.2),
        squeezer_pairs=((0, 1), (2, 3)),
        unitary_seed=7,
        transmission=np.array([0.9, 0.8, 1.0, 0.7]),
        models=("gbs", "thermal"),
        sample_count=100,
        seed=5,
        subsystem_sizes=(2, 4),
        phase_settings=((0.0, 1.0), (2.0, 3.0)),
    )
    base.update(overrides)
    return ExperimentConfig(**base)


class TestRoundTrip:
    def test_haar_config(self):
        cfg = haar_config()
        text = emit_config(cfg)
        again = parse_config(text)
        assert again == cfg
        assert emit_config(again) == text

    def test_inline_unitary_exact(self):
        u = g.haar_random_unitary(3, seed=42)
        cfg = ExperimentConfig(
            mode_count=3, squeezer_r=(0.4,), squeezer_phase=(1.0,),
            squeezer_pairs=((0, 2),), unitary_seed=None, unitary=u,
            transmission=np.array([1.0, 0.5, 0.25]),
        )
        again = parse_config(emit_config(cfg))
        # shortest-round-trip decimal formatting is lossless for doubles
        assert np.array_equal(again.unitary, u)
        assert again == cfg

    def test_awkward_floats_survive(self):
        values = (0.1, 1.0 / 3.0, 1e-17, math.pi, np.nextafter(0.7, 1.0))
        cfg = haar_config(mode_count=5, squeezer_r=values[:2],
                          squeezer_phase=values[2:4],
                          squeezer_pairs=((0, 1), (2, 3)),
                          transmission=np.array(values),
                          subsystem_sizes=(), phase_settings=())
        again = parse_config(emit_config(cfg))
        assert again.squeezer_r == cfg.squeezer_r
        assert np.array_equal(again.transmission, cfg.transmission)

    def test_empty_phase_settings(self):
        cfg = haar_config(phase_settings=())
        assert parse_config(emit_config(cfg)) == cfg

    def test_broadcast_transmission(self):
        text = """
[circuit]
modes = 3
unitary = haar:1
transmission = 0.5

[run]
models = gbs
"""
        cfg = parse_config(text)
        assert np.array_equal(cfg.transmission, [0.5, 0.5, 0.5])

    def test_defaults_fill_in(self):
        cfg = parse_config("[circuit]\nmodes = 2\nunitary = haar:3\n")
        assert cfg.models == ("gbs",)
        assert cfg.sample_count == 1000
        assert cfg.bayes_threshold == 0.996
        assert np.array_equal(cfg.transmission, [1.0, 1.0])


class TestFingerprint:
    def test_stable_and_sensitive(self):
        cfg = haar_config()
        fp = config_fingerprint(cfg)
        assert fp == config_fingerprint(parse_config(emit_config(cfg)))
        assert config_fingerprint(replace(cfg, seed=6)) != fp
        assert config_fingerprint(haar_config(squeezer_r=(0.5, 0.31))) != fp

    def test_execution_details_excluded(self):
        cfg = haar_config()
        fp = config_fingerprint(cfg)
        assert config_fingerprint(replace(cfg, threads=8)) == fp
        assert config_fingerprint(replace(cfg, output_dir="other")) == fp


class TestValidation:
    def test_field_errors_name_the_field(self):
        with pytest.raises(ConfigurationError, match="modes"):
            haar_config(mode_count=0)
        with pytest.raises(ConfigurationError, match="squeezers"):
            haar_config(squeezer_r=(0.5,))
        with pytest.raises(ConfigurationError, match="models"):
            haar_config(models=("gbs", "bogus"))
        with pytest.raises(ConfigurationError, match="models"):
            haar_config(models=())
        with pytest.raises(ConfigurationError, match="models"):
            haar_config(models=("gbs", "gbs"))
        with pytest.raises(ConfigurationError, match="subsystem_sizes"):
            haar_config(subsystem_sizes=(5,))
        with pytest.raises(ConfigurationError, match="phase_settings"):
            haar_config(phase_settings=((0.0,),))
        with pytest.raises(ConfigurationError, match="samples"):
            haar_config(sample_count=0)
        with pytest.raises(ConfigurationError, match="transmission"):
            haar_config(transmission=np.array([0.5, 0.5]))
        with pytest.raises(ConfigurationError, match="unitary"):
            haar_config(unitary_seed=None)
        with pytest.raises(ConfigurationError):
            haar_config(machine_flops=0.0)

    def test_parse_errors(self):
        with pytest.raises(ConfigurationError, match="circuit"):
            parse_config("[run]\nmodels = gbs\n")
        with pytest.raises(ConfigurationError, match="modes"):
            parse_config("[circuit]\nunitary = haar:1\n")
        with pytest.raises(ConfigurationError, match="unitary"):
            parse_config("[circuit]\nmodes = 2\nunitary = nonsense\n")
        with pytest.raises(ConfigurationError, match="unitary"):
            parse_config("[circuit]\nmodes = 2\nunitary = inline\n")
        with pytest.raises(ConfigurationError):
            parse_config("not an ini file at all [")
        with pytest.raises(ConfigurationError):
            parse_config("[circuit]\nmodes = two\nunitary = haar:1\n")

    def test_inline_matrix_shape_checked(self):
        text = """
[circuit]
modes = 2
unitary = inline

[unitary]
row0 = 1.0,0.0 0.0,0.0
"""
        with pytest.raises(ConfigurationError, match="row1"):
            parse_config(text)


class TestBuildCircuit:
    def test_haar_resolution_deterministic(self):
        cfg = haar_config()
        c1 = build_circuit(cfg)
        c2 = build_circuit(cfg)
        assert np.array_equal(c1.unitary, c2.unitary)
        assert np.array_equal(c1.unitary, g.haar_random_unitary(4, seed=7))
        assert len(c1.squeezers) == 2
        assert c1.squeezers[1].mode_pair == (2, 3)

    def test_inline_used_verbatim(self):
        u = g.haar_random_unitary(4, seed=9)
        cfg = haar_config(unitary_seed=None, unitary=u)
        circ = build_circuit(cfg)
        assert np.array_equal(circ.unitary, u)

    def test_resolve_unitary_equivalent(self):
        cfg = haar_config()
        resolved = resolve_unitary(cfg)
        assert resolved.unitary_seed is None
        a = g.build_circuit_state(build_circuit(cfg))
        b = g.build_circuit_state(build_circuit(resolved))
        assert np.allclose(a.n_mat, b.n_mat, atol=0)
        assert np.allclose(a.b_mat, b.b_mat, atol=0)
        # resolving twice is a no-op
        assert resolve_unitary(resolved) is resolved
