"""Walk the reference world kernel by hand.

Loads the built-in demo map, inspects a transition distribution, rolls
a scripted episode, and prints the egocentric view at each step.
"""

import numpy as np

from worldkit import (
    DEMO_MAP_TEXT,
    GridMap,
    KernelConfig,
    initial_state,
    rollout,
    transition_distribution,
)

grid = GridMap.from_text(DEMO_MAP_TEXT)
print("map:")
print(grid.to_text())
print("start:", grid.start, "goals:", grid.goal_cells())

cfg = KernelConfig(p_slip=0.2)
state = initial_state(grid)

# Exact successor distribution for a forward move: 80% advance, 20% slip.
dist = transition_distribution(state, 0, cfg, grid)
for outcome, prob in dist.outcomes:
    print(f"  p={prob:.2f} -> ({outcome.pose.x},{outcome.pose.y}) "
          f"{outcome.pose.heading.value}")

# A scripted episode: forward, forward, strafe right twice reaches the goal.
actions = [0, 0, 3, 3]
traj = rollout(state, actions, KernelConfig(p_slip=0.0), grid, seed=7)
print(f"\nepisode: {len(traj.steps)} steps, terminal={traj.final_state.terminal}, "
      f"cumulative reward {traj.cumulative_reward:.2f}")

for step in traj.steps:
    frame = step.frame
    print(f"\nafter action {step.action} (reward {step.reward:+.2f}):")
    for j in range(frame.height):
        row = "".join({0: "#", 255: ".", 170: "G", 85: "@"}[frame.pixel(i, j)]
                      for i in range(frame.width))
        print("   ", row)

# Same seed, same trajectory: the kernel is replay-exact.
again = rollout(state, actions, KernelConfig(p_slip=0.0), grid, seed=7)
print("\nreplay is bit-identical:", traj == again)
