"""Experiment configuration: flat structured-text format and fingerprints.

Configs are INI files with key = value pairs.  Real vectors are
space-separated floats, complex matrices live in their own section as
row-major lists of "re,im" pairs, and the interferometer can be given
either inline or as haar:<seed> to be resolved reproducibly at build
time.  Floats are emitted with shortest round-trip formatting, so
parse(emit(config)) reproduces the value exactly and the fingerprint of
the canonical serialization is stable across machines.
"""

from __future__ import annotations

import configparser
import hashlib
import io as _io
from dataclasses import dataclass, fields, replace

import numpy as np

from .errors import ConfigurationError
from .gaussian import CircuitSpec, SqueezerSpec, haar_random_unitary
from .samplers import MODEL_TAGS

__all__ = [
    "ExperimentConfig",
    "parse_config",
    "load_config",
    "emit_config",
    "config_fingerprint",
    "build_circuit",
    "resolve_unitary",
]


@dataclass(eq=False)
class ExperimentConfig:
    """Everything needed to rerun one experiment end to end."""

    mode_count: int
    squeezer_r: tuple = ()
    squeezer_phase: tuple = ()
    squeezer_pairs: tuple = ()
    unitary_seed: int | None = None
    unitary: np.ndarray | None = None
    transmission: np.ndarray = None
    detector_efficiency: float = 1.0
    dark_count_prob: float = 0.0
    models: tuple = ("gbs",)
    sample_count: int = 1000
    seed: int = 0
    threads: int = 1
    output_dir: str = "out"
    subsystem_sizes: tuple = ()
    phase_settings: tuple = ()
    bayes_threshold: float = 0.996
    bayes_events: int = 500
    distance_factor: float = 3.0
    tvd_floor_factor: float = 3.0
    machine_flops: float = 1e15
    kernel_constant: float = 1.0
    collection_time: float = 1.0

    def __post_init__(self):
        m = int(self.mode_count)
        if m < 1:
            raise ConfigurationError(f"[circuit] modes: must be >= 1, got {self.mode_count}")
        self.mode_count = m
        n_sq = len(self.squeezer_r)
        if not (len(self.squeezer_phase) == len(self.squeezer_pairs) == n_sq):
            raise ConfigurationError(
                "[squeezers] r, phase and pairs must have equal lengths"
            )
        self.squeezer_r = tuple(float(r) for r in self.squeezer_r)
        self.squeezer_phase = tuple(float(p) for p in self.squeezer_phase)
        self.squeezer_pairs = tuple(
            (int(a), int(b)) for a, b in self.squeezer_pairs
        )
        if (self.unitary_seed is None) == (self.unitary is None):
            raise ConfigurationError(
                "[circuit] unitary: give exactly one of haar:<seed> or an inline matrix"
            )
        if self.unitary is not None:
            u = np.array(self.unitary, dtype=np.complex128)
            if u.shape != (m, m):
                raise ConfigurationError(
                    f"[unitary] shape {u.shape} does not match modes {m}"
                )
            self.unitary = u
        if self.transmission is None:
            self.transmission = np.ones(m)
        eta = np.asarray(self.transmission, dtype=np.float64)
        if eta.size == 1:
            eta = np.full(m, float(eta.reshape(-1)[0]))
        if eta.shape != (m,):
            raise ConfigurationError(
                f"[circuit] transmission: need 1 or {m} values, got {eta.size}"
            )
        self.transmission = eta
        self.models = tuple(self.models)
        if not self.models:
            raise ConfigurationError("[run] models: need at least one model tag")
        for tag in self.models:
            if tag not in MODEL_TAGS:
                raise ConfigurationError(f"[run] models: unknown tag {tag!r}")
        if len(set(self.models)) != len(self.models):
            raise ConfigurationError("[run] models: duplicate tags")
        if int(self.sample_count) < 1:
            raise ConfigurationError(
                f"[run] samples: must be >= 1, got {self.sample_count}"
            )
        self.sample_count = int(self.sample_count)
        self.seed = int(self.seed)
        if int(self.threads) < 1:
            raise ConfigurationError(f"[run] threads: must be >= 1, got {self.threads}")
        self.threads = int(self.threads)
        self.subsystem_sizes = tuple(int(x) for x in self.subsystem_sizes)
        for size in self.subsystem_sizes:
            if not 1 <= size <= m:
                raise ConfigurationError(
                    f"[validation] subsystem_sizes: {size} out of range 1..{m}"
                )
        settings = tuple(tuple(float(x) for x in s) for s in self.phase_settings)
        for s in settings:
            if len(s) != n_sq:
                raise ConfigurationError(
                    f"[validation] phase_settings: setting of length {len(s)} "
                    f"does not match {n_sq} squeezers"
                )
        self.phase_settings = settings
        for name, value in [("bayes_threshold", self.bayes_threshold),
                            ("distance_factor", self.distance_factor),
                            ("tvd_floor_factor", self.tvd_floor_factor),
                            ("machine_flops", self.machine_flops),
                            ("kernel_constant", self.kernel_constant),
                            ("collection_time", self.collection_time)]:
            if not float(value) > 0.0:
                raise ConfigurationError(f"{name} must be positive, got {value}")
        if int(self.bayes_events) < 1:
            raise ConfigurationError(
                f"[validation] bayes_events: must be >= 1, got {self.bayes_events}"
            )
        self.bayes_events = int(self.bayes_events)

    def __eq__(self, other):
        if not isinstance(other, ExperimentConfig):
            return NotImplemented
        for f in fields(self):
            a, b = getattr(self, f.name), getattr(other, f.name)
            if isinstance(a, np.ndarray) or isinstance(b, np.ndarray):
                if a is None or b is None:
                    if (a is None) != (b is None):
                        return False
                elif not np.array_equal(a, b):
                    return False
            elif a != b:
                return False
        return True


def _floats(text):
    return tuple(float(x) for x in text.split())


def _fmt(value) -> str:
    return repr(float(value))


def _fmt_vec(values) -> str:
    return " ".join(_fmt(v) for v in values)


def _get(section, key, where):
    if key not in section:
        raise ConfigurationError(f"[{where}] missing required key {key!r}")
    return section[key]


def parse_config(text: str) -> ExperimentConfig:
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigurationError(f"config parse error: {exc}") from exc
    if "circuit" not in parser:
        raise ConfigurationError("missing [circuit] section")
    circ = parser["circuit"]
    try:
        mode_count = int(_get(circ, "modes", "circuit"))
        det_eff = float(circ.get("detector_efficiency", "1.0"))
        dark = float(circ.get("dark_count_prob", "0.0"))
        unitary_field = _get(circ, "unitary", "circuit").strip()
        unitary_seed = None
        unitary = None
        if unitary_field.startswith("haar:"):
            unitary_seed = int(unitary_field[5:])
        elif unitary_field == "inline":
            if "unitary" not in parser:
                raise ConfigurationError(
                    "[circuit] unitary = inline but no [unitary] section"
                )
            rows = []
            sec = parser["unitary"]
            for i in range(mode_count):
                key = f"row{i}"
                if key not in sec:
                    raise ConfigurationError(f"[unitary] missing {key}")
                row = []
                for pair in sec[key].split():
                    re_s, im_s = pair.split(",")
                    row.append(complex(float(re_s), float(im_s)))
                rows.append(row)
            unitary = np.array(rows, dtype=np.complex128)
        else:
            raise ConfigurationError(
                f"[circuit] unitary: expected haar:<seed> or inline, got {unitary_field!r}"
            )
        transmission = np.array(_floats(circ.get("transmission", "1.0")))

        sq_r, sq_phase, sq_pairs = (), (), ()
        if "squeezers" in parser:
            sq = parser["squeezers"]
            sq_r = _floats(sq.get("r", ""))
            sq_phase = _floats(sq.get("phase", ""))
            sq_pairs = tuple(
                tuple(int(x) for x in pair.split(","))
                for pair in sq.get("pairs", "").split()
            )

        run = parser["run"] if "run" in parser else {}
        models = tuple((run.get("models", "gbs") or "").split())
        sample_count = int(run.get("samples", "1000"))
        seed = int(run.get("seed", "0"))
        threads = int(run.get("threads", "1"))
        output_dir = run.get("output_dir", "out")

        val = parser["validation"] if "validation" in parser else {}
        sizes = tuple(int(x) for x in val.get("subsystem_sizes", "").split())
        settings_text = val.get("phase_settings", "").strip()
        settings = ()
        if settings_text:
            settings = tuple(
                tuple(float(x) for x in chunk.strip().split(","))
                for chunk in settings_text.split("|")
            )
        bayes_threshold = float(val.get("bayes_threshold", "0.996"))
        bayes_events = int(val.get("bayes_events", "500"))
        distance_factor = float(val.get("distance_factor", "3.0"))
        tvd_floor_factor = float(val.get("tvd_floor_factor", "3.0"))

        cost_sec = parser["cost"] if "cost" in parser else {}
        machine_flops = float(cost_sec.get("machine_flops", "1e15"))
        kernel_constant = float(cost_sec.get("kernel_constant", "1.0"))
        collection_time = float(cost_sec.get("collection_time", "1.0"))
    except ConfigurationError:
        raise
    except (KeyError, ValueError) as exc:
        raise ConfigurationError(f"config value error: {exc}") from exc

    return ExperimentConfig(
        mode_count=mode_count,
        squeezer_r=sq_r,
        squeezer_phase=sq_phase,
        squeezer_pairs=sq_pairs,
        unitary_seed=unitary_seed,
        unitary=unitary,
        transmission=transmission,
        detector_efficiency=det_eff,
        dark_count_prob=dark,
        models=models,
        sample_count=sample_count,
        seed=seed,
        threads=threads,
        output_dir=output_dir,
        subsystem_sizes=sizes,
        phase_settings=settings,
        bayes_threshold=bayes_threshold,
        bayes_events=bayes_events,
        distance_factor=distance_factor,
        tvd_floor_factor=tvd_floor_factor,
        machine_flops=machine_flops,
        kernel_constant=kernel_constant,
        collection_time=collection_time,
    )


def load_config(path) -> ExperimentConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read())


def emit_config(config: ExperimentConfig) -> str:
    """Canonical serialization; parse(emit(c)) == c."""
    out = _io.StringIO()
    out.write("[circuit]\n")
    out.write(f"modes = {config.mode_count}\n")
    out.write(f"detector_efficiency = {_fmt(config.detector_efficiency)}\n")
    out.write(f"dark_count_prob = {_fmt(config.dark_count_prob)}\n")
    if config.unitary_seed is not None:
        out.write(f"unitary = haar:{config.unitary_seed}\n")
    else:
        out.write("unitary = inline\n")
    out.write(f"transmission = {_fmt_vec(config.transmission)}\n")
    if config.unitary is not None:
        out.write("\n[unitary]\n")
        for i, row in enumerate(config.unitary):
            pairs = " ".join(f"{_fmt(z.real)},{_fmt(z.imag)}" for z in row)
            out.write(f"row{i} = {pairs}\n")
    out.write("\n[squeezers]\n")
    out.write(f"r = {_fmt_vec(config.squeezer_r)}\n")
    out.write(f"phase = {_fmt_vec(config.squeezer_phase)}\n")
    out.write("pairs = " + " ".join(f"{a},{b}" for a, b in config.squeezer_pairs) + "\n")
    out.write("\n[run]\n")
    out.write("models = " + " ".join(config.models) + "\n")
    out.write(f"samples = {config.sample_count}\n")
    out.write(f"seed = {config.seed}\n")
    out.write(f"threads = {config.threads}\n")
    out.write(f"output_dir = {config.output_dir}\n")
    out.write("\n[validation]\n")
    out.write("subsystem_sizes = " + " ".join(str(s) for s in config.subsystem_sizes) + "\n")
    settings = " | ".join(
        ",".join(_fmt(x) for x in s) for s in config.phase_settings
    )
    out.write(f"phase_settings = {settings}\n")
    out.write(f"bayes_threshold = {_fmt(config.bayes_threshold)}\n")
    out.write(f"bayes_events = {config.bayes_events}\n")
    out.write(f"distance_factor = {_fmt(config.distance_factor)}\n")
    out.write(f"tvd_floor_factor = {_fmt(config.tvd_floor_factor)}\n")
    out.write("\n[cost]\n")
    out.write(f"machine_flops = {_fmt(config.machine_flops)}\n")
    out.write(f"kernel_constant = {_fmt(config.kernel_constant)}\n")
    out.write(f"collection_time = {_fmt(config.collection_time)}\n")
    return out.getvalue()


def config_fingerprint(config: ExperimentConfig) -> str:
    """Stable hash of the experiment identity.

    Thread count and output directory are execution details with no effect
    on results, so they are pinned before hashing; everything else enters
    through the canonical serialization.
    """
    canon = replace(config, threads=1, output_dir="out")
    return hashlib.sha256(emit_config(canon).encode("utf-8")).hexdigest()


def build_circuit(config: ExperimentConfig) -> CircuitSpec:
    """Materialize the CircuitSpec, resolving a haar:<seed> interferometer."""
    if config.unitary_seed is not None:
        u = haar_random_unitary(config.mode_count, seed=config.unitary_seed)
    else:
        u = config.unitary
    squeezers = tuple(
        SqueezerSpec(r, phase, pair)
        for r, phase, pair in zip(config.squeezer_r, config.squeezer_phase,
                                  config.squeezer_pairs)
    )
    return CircuitSpec(config.mode_count, u, config.transmission,
                       config.detector_efficiency, config.dark_count_prob,
                       squeezers)


def resolve_unitary(config: ExperimentConfig) -> ExperimentConfig:
    """Return a copy with the interferometer matrix written out inline."""
    if config.unitary_seed is None:
        return config
    u = haar_random_unitary(config.mode_count, seed=config.unitary_seed)
    return replace(config, unitary_seed=None, unitary=u)
