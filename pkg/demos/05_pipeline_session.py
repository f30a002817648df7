"""One pipeline session exercising every task route.

Plans with the action backend, navigates the plan to the goal,
reconstructs along the way, and asks the reasoners about it.
"""

from worldkit import Pipeline, PipelineConfig, ReasoningQuery, TurnInput
from worldkit.kernel import DEMO_MAP_TEXT, KernelConfig

config = PipelineConfig(task="navigate", map_text=DEMO_MAP_TEXT, seed=2024,
                        kernel=KernelConfig(p_slip=0.0))
pipeline = Pipeline.build(config)
print("session:", pipeline.session.id)

plan_env = pipeline.call_once(TurnInput(task="act", text="reach_goal"))
plan = plan_env.artifacts[0][1].decode().split(",")
print("plan:", plan)

for token in plan:
    envelope = pipeline.call_once(TurnInput(actions=(token,)))
    print(f"turn {envelope.turn}: {token:13s} reward={envelope.metadata['rewards']:>5s} "
          f"cumulative={envelope.metadata['cumulative_reward']:>5s} "
          f"terminal={envelope.terminal}")
    if not envelope.terminal:
        points = pipeline.call_once(TurnInput(task="reconstruct"))
        print(f"         reconstruct: {points.metadata['known_cells']} known cells, "
              f"{points.metadata['point_count']} wall points")

answer = pipeline.call_once(TurnInput(task="reason",
                                      query=ReasoningQuery("general", "pose?")))
print("pose query after the episode:", answer.metadata.get("error", answer.metadata))

records = pipeline.memory.records(pipeline.session.id)
print(f"memory holds {len(records)} records "
      f"({sum(r.modality.value == 'VideoFrames' for r in records)} frames)")
