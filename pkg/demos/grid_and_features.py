"""
From 32 readings to a pressure map
==================================

Each mat reports 32 numbers. Placed on an 8x8 checkerboard they form a
pressure map, and a handful of summary features describe where the
weight sits.
"""

import numpy as np

from sitgrid.data import PressureFrame, map_to_grid, sensor_at
from sitgrid.features import center_of_mass, edge_sums, quadrant_sums
from sitgrid.synth import posture_template, template_values

# a noise-free seat frame for someone leaning left
seat, _ = template_values(posture_template("left", 1.5))
frame = PressureFrame("seat", seat)

# occupied cells are the ones where row + col is even; the rest stay 0
grid = map_to_grid(frame)
np.set_printoptions(precision=0, suppress=True, linewidth=100)
print(grid)
print("sensor at the top-left corner:", sensor_at(1, 1))

# mass sits under the left leg, so the CoM column drops below 4.5
row, col, empty = center_of_mass(frame)
print(f"center of mass: row {row:.2f}, col {col:.2f}")

# quadrant sums split the frame in four; edge bands overlap at the corners
print("quadrants TL TR BL BR:", quadrant_sums(frame).round(1))
print("edges top bottom left right:", edge_sums(frame).round(1))

# CoM ignores how heavy the sitter is
heavier = PressureFrame("seat", 1.6 * seat)
r2, c2, _ = center_of_mass(heavier)
print("CoM shift after scaling:", max(abs(r2 - row), abs(c2 - col)))
