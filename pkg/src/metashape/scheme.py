"""Complete description of one shaping experiment."""

from __future__ import annotations

from dataclasses import dataclass, replace
from functools import cached_property

from .errors import DimMismatch, DuplicateInputMode, InconsistentInputs, PatternMismatch
from .interference import (
    MAX_PHOTONS,
    PhotonInput,
    expand_output,
    find_component,
    with_probabilities,
)
from .network import ModeUnitary, metasurface_unitary
from .postselect import DetectionEvent, DetectionPattern, assign_slots
from .shapes import WavepacketShape, gram

_SHAPE_FIELDS = ("gamma", "center", "detuning")


@dataclass(frozen=True)
class ShapingScheme:
    """Inputs, metasurface, selected component, detection pattern and target.

    ``unitary`` overrides the metasurface built from ``s_t`` when given.
    ``splitter_mode`` names a doubly occupied output mode that is sent through
    a 50/50 splitter before detection.
    """

    s_t: float
    inputs: tuple
    component: tuple
    pattern: DetectionPattern
    target: WavepacketShape
    splitter_mode: int | None = None
    unitary: ModeUnitary | None = None
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "inputs", tuple(self.inputs))
        object.__setattr__(self, "component", tuple(int(k) for k in self.component))
        self.validate()

    @cached_property
    def network(self):
        return self.unitary if self.unitary is not None else metasurface_unitary(self.s_t)

    def validate(self):
        dim = self.network.dim
        if len(self.component) != dim:
            raise DimMismatch(f"component {self.component} has {len(self.component)} modes, "
                              f"network has {dim}")
        if sum(self.component) != len(self.inputs):
            raise PatternMismatch(f"component {self.component} holds {sum(self.component)} "
                                  f"photons for {len(self.inputs)} inputs")
        if not 1 <= len(self.inputs) <= MAX_PHOTONS:
            raise InconsistentInputs(f"between 1 and {MAX_PHOTONS} photons supported")
        modes = [p.mode for p in self.inputs]
        if len(set(modes)) != len(modes):
            raise DuplicateInputMode(f"one photon per input mode, got modes {modes}")
        for p in self.inputs:
            if not 0 <= p.mode < dim:
                raise DimMismatch(f"input mode {p.mode} outside {dim}-mode network")
        occ = self.component
        if self.splitter_mode is None:
            if occ[self.pattern.remaining_mode] > 1:
                raise PatternMismatch("remaining mode is multiply occupied; a splitter is needed")
        elif occ[self.splitter_mode] != 2:
            raise PatternMismatch(f"splitter mode {self.splitter_mode} must hold 2 photons")
        assign_slots(occ, self.pattern, self.splitter_mode)

    @cached_property
    def _gram(self):
        g = gram([p.shape for p in self.inputs])
        g.setflags(write=False)
        return g

    def gram(self):
        return self._gram

    def components(self):
        return with_probabilities(expand_output(self.inputs, self.network), self.inputs, self._gram)

    def selected_component(self):
        components = expand_output(self.inputs, self.network)
        return with_probabilities([find_component(components, self.component)],
                                  self.inputs, self._gram)[0]

    # parameter paths: "s_t", "inputs.<i>.<field>", "events.<i>.time", "target.<field>"

    def get_param(self, name):
        parts = name.split(".")
        if parts == ["s_t"]:
            return self.s_t
        if parts[0] == "inputs" and len(parts) == 3 and parts[2] in _SHAPE_FIELDS:
            return getattr(self.inputs[int(parts[1])].shape, parts[2])
        if parts[0] == "events" and len(parts) == 3 and parts[2] == "time":
            return self.pattern.events[int(parts[1])].time
        if parts[0] == "target" and len(parts) == 2 and parts[1] in _SHAPE_FIELDS:
            return getattr(self.target, parts[1])
        raise KeyError(f"unknown scheme parameter {name!r}")

    def with_params(self, values):
        """Copy of the scheme with the named parameters replaced."""
        s_t = self.s_t
        inputs = list(self.inputs)
        events = list(self.pattern.events)
        target = self.target
        for name, value in values.items():
            self.get_param(name)
            parts = name.split(".")
            value = float(value)
            if parts[0] == "s_t":
                s_t = value
            elif parts[0] == "inputs":
                i = int(parts[1])
                inputs[i] = PhotonInput(inputs[i].mode, replace(inputs[i].shape, **{parts[2]: value}))
            elif parts[0] == "events":
                i = int(parts[1])
                events[i] = DetectionEvent(events[i].mode, value)
            else:
                target = replace(target, **{parts[1]: value})
        pattern = DetectionPattern(tuple(events), self.pattern.remaining_mode,
                                   self.pattern.vacuum_modes)
        return replace(self, s_t=s_t, inputs=tuple(inputs), pattern=pattern, target=target)

    def to_dict(self):
        return {
            "s_t": self.s_t,
            "inputs": [p.to_dict() for p in self.inputs],
            "component": list(self.component),
            "detections": [e.to_dict() for e in self.pattern.events],
            "remaining_mode": self.pattern.remaining_mode,
            "vacuum_modes": list(self.pattern.vacuum_modes),
            "splitter_mode": self.splitter_mode,
            "target": self.target.to_dict(),
        }

    @classmethod
    def from_dict(cls, data, name=""):
        pattern = DetectionPattern(
            tuple(DetectionEvent(int(e["mode"]), float(e["time"])) for e in data["detections"]),
            int(data["remaining_mode"]),
            tuple(int(m) for m in data.get("vacuum_modes", ())),
        )
        return cls(
            s_t=float(data["s_t"]),
            inputs=tuple(PhotonInput.from_dict(p) for p in data["inputs"]),
            component=tuple(data["component"]),
            pattern=pattern,
            target=WavepacketShape.from_dict(data["target"]),
            splitter_mode=data.get("splitter_mode"),
            name=name,
        )
