"""worldkit: world-model inference orchestration with exactly-verifiable backends.

A reference gridworld kernel (exact transition distributions,
deterministic egocentric rendering, rewards) sits under six pluggable
modules: operator validation, synthesis backends (visual, audio,
action), template reasoning, explicit representation (occupancy grids,
point clouds, raycast depth), session memory, and a pipeline that
orchestrates them turn by turn. An HTTP session service and a CLI
expose the same pipelines over the wire.
"""

__version__ = "0.1.0"

from .core import (
    Heading,
    Modality,
    ObservationFrame,
    Pose,
    ResultEnvelope,
    decode_frame,
    encode_frame,
    normalize_angles,
)
from .kernel import (
    DEMO_MAP_TEXT,
    Cell,
    GridMap,
    KernelConfig,
    Trajectory,
    TransitionDist,
    WorldState,
    frame_digest,
    initial_state,
    observe,
    reward,
    rollout,
    sample_transition,
    shortest_action_plan,
    trajectory_log,
    transition_distribution,
)
from .memory import MemoryConfig, MemoryRecord, MemoryStore, featurize
from .operators import (
    InteractionSignal,
    InteractionTemplate,
    NormalizedInput,
    Operator,
    OperatorError,
)
from .pipeline import Pipeline, PipelineConfig, TurnInput
from .reasoning import (
    ReasoningAnswer,
    ReasoningQuery,
    infer_audio,
    infer_general,
    infer_spatial,
)
from .representation import (
    DepthMap,
    OccupancyGrid,
    RepresentationOutput,
    export_points,
    from_wkpc,
    render_depth,
    to_wkpc,
)
from .synthesis import (
    BackendDescriptor,
    Conditioning,
    SynthesisArtifact,
    SynthesisControls,
    SynthesisRequest,
    load_backend,
)

__all__ = [
    "__version__",
    # core
    "Heading", "Modality", "ObservationFrame", "Pose", "ResultEnvelope",
    "decode_frame", "encode_frame", "normalize_angles",
    # kernel
    "DEMO_MAP_TEXT", "Cell", "GridMap", "KernelConfig", "Trajectory",
    "TransitionDist", "WorldState", "frame_digest", "initial_state", "observe",
    "reward", "rollout", "sample_transition", "shortest_action_plan",
    "trajectory_log", "transition_distribution",
    # memory
    "MemoryConfig", "MemoryRecord", "MemoryStore", "featurize",
    # operator
    "InteractionSignal", "InteractionTemplate", "NormalizedInput", "Operator",
    "OperatorError",
    # pipeline
    "Pipeline", "PipelineConfig", "TurnInput",
    # reasoning
    "ReasoningAnswer", "ReasoningQuery", "infer_audio", "infer_general", "infer_spatial",
    # representation
    "DepthMap", "OccupancyGrid", "RepresentationOutput", "export_points",
    "from_wkpc", "render_depth", "to_wkpc",
    # synthesis
    "BackendDescriptor", "Conditioning", "SynthesisArtifact", "SynthesisControls",
    "SynthesisRequest", "load_backend",
]
