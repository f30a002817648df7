"""Single-session orchestration: validate, retrieve context, dispatch, record.

A pipeline instance owns one session: its operator, world state,
occupancy grid, and memory namespace. Each turn validates input
through the operator, selects memory context, dispatches the routed
backend, builds a result envelope, and writes the turn's observation
and action records back to memory. Failed turns never advance the
turn counter and never write memory.
"""

from __future__ import annotations

import base64
from dataclasses import dataclass, field
from typing import Iterable, Iterator

from .core import (
    Heading,
    Modality,
    Pose,
    ResultEnvelope,
    canonical_json,
    digest64,
    encode_frame,
)
from .kernel import (
    GridMap,
    KernelConfig,
    WorldState,
    initial_state,
    observe,
)
from .memory import MemoryConfig, MemoryStore, featurize
from .operators import (
    ControlRange,
    InteractionSignal,
    InteractionTemplate,
    NormalizedInput,
    Operator,
    OperatorError,
)
from .reasoning import (
    GeneralContext,
    ReasoningError,
    ReasoningQuery,
    infer_audio,
    infer_general,
    infer_spatial,
)
from .representation import (
    OccupancyGrid,
    RepresentationError,
    export_points,
    to_wkpc,
)
from .synthesis import (
    BackendDescriptor,
    Conditioning,
    SynthesisControls,
    SynthesisError,
    SynthesisRequest,
    load_backend,
)


class PipelineError(ValueError):
    """Configuration or turn-input problem."""


class ClosedSessionError(PipelineError):
    """Turn submitted to a closed session."""


TASKS = ("navigate", "reconstruct", "act", "reason", "sonify")
MEMORY_CONTEXT_K = 4

# Per-turn seeds derive from the config seed so replays are exact while
# turns stay decorrelated.
_SEED_STRIDE = 1_000_003


@dataclass(frozen=True)
class PipelineConfig:
    task: str
    map_text: str
    seed: int
    kernel: KernelConfig = field(default_factory=KernelConfig)
    memory: MemoryConfig = field(default_factory=MemoryConfig)
    backends: dict[str, BackendDescriptor] = field(default_factory=dict)
    template: InteractionTemplate = field(default_factory=InteractionTemplate)

    def __post_init__(self):
        if self.task not in TASKS:
            raise PipelineError(f"unknown task: {self.task!r}")
        if self.seed < 0:
            raise PipelineError(f"seed must be non-negative, got {self.seed}")

    def to_dict(self) -> dict:
        return {
            "task": self.task,
            "map": self.map_text,
            "seed": self.seed,
            "kernel": {
                "p_slip": self.kernel.p_slip,
                "step_cost": self.kernel.step_cost,
                "goal_reward": self.kernel.goal_reward,
                "window_radius": self.kernel.window_radius,
            },
            "memory": {
                "capacity": self.memory.capacity,
                "similarity_weight": self.memory.similarity_weight,
                "recency_decay": self.memory.recency_decay,
                "merge_threshold": self.memory.merge_threshold,
            },
            "backends": {
                kind: {k: v for k, v in vars(desc).items() if v is not None}
                for kind, desc in sorted(self.backends.items())
            },
            "template": {
                "tokens": list(self.template.tokens),
                "controls": {
                    name: {"mode": c.mode, "lo": c.lo, "hi": c.hi}
                    for name, c in sorted(self.template.continuous_controls.items())
                },
            },
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "PipelineConfig":
        known = {"task", "map", "seed", "kernel", "memory", "backends", "template"}
        unknown = set(obj) - known
        if unknown:
            raise PipelineError(f"unknown config fields: {sorted(unknown)}")
        for required in ("task", "map", "seed"):
            if required not in obj:
                raise PipelineError(f"config missing required field {required!r}")
        kernel = KernelConfig(**obj.get("kernel", {}))
        memory = MemoryConfig(**obj.get("memory", {}))
        backends = {
            kind: BackendDescriptor.from_dict(d)
            for kind, d in obj.get("backends", {}).items()
        }
        template = InteractionTemplate()
        if "template" in obj:
            t = obj["template"]
            template = InteractionTemplate(
                tokens=tuple(t.get("tokens", list(template.tokens))),
                continuous_controls={
                    name: ControlRange(c["mode"], c["lo"], c["hi"])
                    for name, c in t.get("controls", {}).items()
                } or template.continuous_controls,
            )
        return cls(task=obj["task"], map_text=obj["map"], seed=int(obj["seed"]),
                   kernel=kernel, memory=memory, backends=backends, template=template)


@dataclass(frozen=True)
class TurnInput:
    """One turn's raw input; fields beyond the task's needs are ignored."""

    task: str | None = None
    actions: tuple[str | tuple[str, float], ...] = ()
    query: ReasoningQuery | None = None
    text: str | None = None
    controls: dict = field(default_factory=dict)
    waveform: bytes | None = None

    def to_dict(self) -> dict:
        obj: dict = {}
        if self.task is not None:
            obj["task"] = self.task
        if self.actions:
            obj["actions"] = [
                a if isinstance(a, str) else {"name": a[0], "value": a[1]}
                for a in self.actions
            ]
        if self.query is not None:
            obj["query"] = {"kind": self.query.kind, "text": self.query.text}
        if self.text is not None:
            obj["text"] = self.text
        if self.controls:
            obj["controls"] = dict(self.controls)
        if self.waveform is not None:
            obj["waveform_b64"] = base64.b64encode(self.waveform).decode("ascii")
        return obj

    @classmethod
    def from_dict(cls, obj: dict) -> "TurnInput":
        known = {"task", "actions", "query", "text", "controls", "waveform_b64"}
        unknown = set(obj) - known
        if unknown:
            raise PipelineError(f"unknown turn-input fields: {sorted(unknown)}")
        actions: list[str | tuple[str, float]] = []
        for a in obj.get("actions", []):
            if isinstance(a, str):
                actions.append(a)
            elif isinstance(a, dict) and set(a) == {"name", "value"}:
                actions.append((a["name"], float(a["value"])))
            else:
                raise PipelineError(f"malformed action entry: {a!r}")
        query = None
        if "query" in obj:
            q = obj["query"]
            if not isinstance(q, dict) or set(q) != {"kind", "text"}:
                raise PipelineError(f"malformed query object: {q!r}")
            query = ReasoningQuery(q["kind"], q["text"])
        waveform = None
        if "waveform_b64" in obj:
            waveform = base64.b64decode(obj["waveform_b64"])
        return cls(task=obj.get("task"), actions=tuple(actions), query=query,
                   text=obj.get("text"), controls=dict(obj.get("controls", {})),
                   waveform=waveform)


@dataclass
class SessionHandle:
    id: str
    config: PipelineConfig
    state: WorldState
    grid: OccupancyGrid
    turn: int = 0
    open: bool = True
    cumulative_reward: float = 0.0
    last_reward: float | None = None
    last_audio: bytes | None = None


def _default_backends() -> dict[str, BackendDescriptor]:
    return {kind: BackendDescriptor(kind=kind) for kind in ("visual", "audio", "action")}


class Pipeline:
    """One pipeline instance serves one session, one turn at a time."""

    def __init__(self, config: PipelineConfig, session_id: str | None = None):
        self.config = config
        self.grid_map = GridMap.from_text(config.map_text)
        self.operator = Operator(config.template)
        self.memory = MemoryStore(config.memory)
        backends = dict(_default_backends())
        backends.update(config.backends)
        self.backends = {kind: load_backend(desc) for kind, desc in backends.items()}
        if session_id is None:
            session_id = "s-" + digest64(canonical_json(config.to_dict()))
        self.memory.create_session(session_id)
        self.session = SessionHandle(
            id=session_id,
            config=config,
            state=initial_state(self.grid_map),
            grid=OccupancyGrid(self.grid_map.width, self.grid_map.height),
        )

    @classmethod
    def build(cls, config: PipelineConfig, session_id: str | None = None) -> "Pipeline":
        return cls(config, session_id)

    def close(self) -> None:
        self.session.open = False

    # -- turn execution ------------------------------------------------

    def call_once(self, turn_input: TurnInput) -> ResultEnvelope:
        """Execute exactly one turn.

        Operator rejections raise; backend and dispatch failures return
        an error envelope. Either way the turn counter and memory are
        untouched on failure.
        """
        session = self.session
        if not session.open:
            raise ClosedSessionError(f"session {session.id} is closed")
        task = turn_input.task or self.config.task
        if task not in TASKS:
            raise PipelineError(f"unknown task: {task!r}")
        if session.state.terminal:
            return self._error_envelope(task, "session terminal")

        signals = [
            InteractionSignal.of_token(a) if isinstance(a, str)
            else InteractionSignal.of_control(*a)
            for a in turn_input.actions
        ]
        self.operator.get_interaction(signals)  # raises OperatorError; batch unchanged
        processed = self.operator.process_interaction()
        action_ids = tuple(p for p in processed if isinstance(p, int))
        control_values = [p for p in processed if isinstance(p, tuple)]
        normalized = NormalizedInput(
            actions=tuple(signals),
            text=turn_input.text or (turn_input.query.text if turn_input.query else None),
        )

        current_frame = observe(session.state, self.config.kernel, self.grid_map)
        query_feature = featurize(Modality.VIDEO_FRAMES, encode_frame(current_frame))
        now_step = self.memory.step_counter(session.id)
        context = self.memory.select(session.id, query_feature, now_step, MEMORY_CONTEXT_K)
        memory_refs = tuple(r.id for r in context)

        try:
            artifacts, metadata, terminal, records = self._dispatch(
                task, turn_input, normalized, action_ids
            )
        except (SynthesisError, ReasoningError, RepresentationError, PipelineError) as exc:
            return self._error_envelope(task, str(exc))

        if control_values:
            metadata["controls"] = ",".join(f"{n}={v!r}" for n, v in control_values)
        metadata["cumulative_reward"] = repr(session.cumulative_reward)
        envelope = ResultEnvelope(
            session_id=session.id,
            turn=session.turn,
            task=task,
            artifacts=artifacts,
            metadata=metadata,
            memory_refs=memory_refs,
            terminal=terminal,
        )
        for modality, payload, role in records:
            self.memory.record(session.id, modality, payload,
                               {"turn": str(session.turn), "task": task, "role": role})
        self.memory.manage(session.id)
        session.turn += 1
        return envelope

    def stream(self, turn_inputs: Iterable[TurnInput]) -> Iterator[ResultEnvelope]:
        """Multi-turn interaction over shared session state.

        Per-turn failures surface as in-band error envelopes and the
        stream continues; the stream ends after a terminal envelope.
        """
        for turn_input in turn_inputs:
            try:
                envelope = self.call_once(turn_input)
            except ClosedSessionError:
                return
            except (OperatorError, PipelineError) as exc:
                envelope = self._error_envelope(turn_input.task or self.config.task, str(exc))
            yield envelope
            if envelope.terminal and "error" not in envelope.metadata:
                return

    def _error_envelope(self, task: str, message: str) -> ResultEnvelope:
        session = self.session
        return ResultEnvelope(
            session_id=session.id,
            turn=session.turn,
            task=task,
            artifacts=(),
            metadata={"error": message,
                      "cumulative_reward": repr(session.cumulative_reward)},
            memory_refs=(),
            terminal=session.state.terminal,
        )

    # -- task routing ----------------------------------------------------

    def _turn_controls(self, turn_input: TurnInput, **defaults) -> SynthesisControls:
        controls = dict(defaults)
        controls.update(turn_input.controls)
        controls.setdefault("seed", self.config.seed * _SEED_STRIDE + self.session.turn)
        return SynthesisControls.from_dict(controls)

    def _dispatch(self, task: str, turn_input: TurnInput, normalized: NormalizedInput,
                  action_ids: tuple[int, ...]):
        session = self.session
        if task == "navigate":
            controls = self._turn_controls(
                turn_input, frame_budget=max(1, len(action_ids))
            )
            request = SynthesisRequest(
                Conditioning(input=normalized, state=session.state, grid=self.grid_map,
                             kernel=self.config.kernel, action_ids=action_ids),
                controls,
            )
            artifact = self.backends["visual"].predict(request)
            meta = dict(artifact.metadata)
            new_state = WorldState(
                Pose(int(meta.pop("final_x")), int(meta.pop("final_y")),
                     Heading(meta.pop("final_heading"))),
                step=int(meta.pop("final_step")),
                terminal=meta["terminal"] == "true",
            )
            rewards = [float(r) for r in meta["rewards"].split(",") if r]
            for r in rewards:
                session.cumulative_reward += r
            session.last_reward = rewards[-1] if rewards else session.last_reward
            session.state = new_state
            final_frame = observe(new_state, self.config.kernel, self.grid_map)
            records = [
                (Modality.VIDEO_FRAMES, encode_frame(final_frame), "observation"),
                (Modality.ACTION, self._action_text(turn_input).encode(), "action"),
            ]
            return artifact.payloads, meta, new_state.terminal, records

        if task == "act":
            controls = self._turn_controls(turn_input)
            request = SynthesisRequest(
                Conditioning(input=normalized, state=session.state, grid=self.grid_map,
                             kernel=self.config.kernel, goal=turn_input.text),
                controls,
            )
            artifact = self.backends["action"].predict(request)
            records = [
                (Modality.ACTION, artifact.payloads[0][1], "observation"),
                (Modality.TEXT, (turn_input.text or "reach_goal").encode(), "action"),
            ]
            return artifact.payloads, dict(artifact.metadata), False, records

        if task == "sonify":
            controls = self._turn_controls(turn_input)
            request = SynthesisRequest(
                Conditioning(input=normalized, event=turn_input.text), controls
            )
            artifact = self.backends["audio"].predict(request)
            session.last_audio = artifact.payloads[0][1]
            records = [
                (Modality.AUDIO, artifact.payloads[0][1], "observation"),
                (Modality.TEXT, (turn_input.text or "").encode(), "action"),
            ]
            return artifact.payloads, dict(artifact.metadata), False, records

        if task == "reason":
            if turn_input.query is None:
                raise PipelineError("reason turns need a query")
            answer = self._reason(turn_input)
            metadata = {"backend": "reasoning-reference"}
            if answer.structured is not None:
                metadata["structured"] = canonical_json(answer.structured).decode("ascii")
            records = [
                (Modality.TEXT, answer.text.encode(), "observation"),
                (Modality.TEXT, turn_input.query.text.encode(), "action"),
            ]
            return ((Modality.TEXT, answer.text.encode()),), metadata, False, records

        # reconstruct: fuse the latest observation, then export points.
        frame = observe(session.state, self.config.kernel, self.grid_map)
        session.grid.fuse_observation(frame, session.state.pose)
        output = export_points(session.grid)
        wkpc = to_wkpc(output.points)
        metadata = {
            "backend": "representation-occupancy",
            "point_count": str(len(output.points)),
            "known_cells": str(session.grid.known_count()),
        }
        records = [
            (Modality.VIDEO_FRAMES, encode_frame(frame), "observation"),
            (Modality.TEXT, b"reconstruct", "action"),
        ]
        return ((Modality.POINT_CLOUD, wkpc.encode()),), metadata, False, records

    def _reason(self, turn_input: TurnInput):
        query = turn_input.query
        session = self.session
        if query.kind == "spatial":
            return infer_spatial(query.text, session.state, self.grid_map)
        if query.kind == "audio":
            waveform = turn_input.waveform or session.last_audio
            if waveform is None:
                raise PipelineError("audio query needs a waveform")
            return infer_audio(query.text, waveform)
        return infer_general(
            query.text, GeneralContext(state=session.state, last_reward=session.last_reward)
        )

    @staticmethod
    def _action_text(turn_input: TurnInput) -> str:
        parts = []
        for a in turn_input.actions:
            parts.append(a if isinstance(a, str) else f"{a[0]}={a[1]!r}")
        return ",".join(parts)
