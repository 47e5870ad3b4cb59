"""Simulation of local two-outcome measurements on deformed GHZ-loop states.

Subpackages build lattices, evaluate outcome-probability weights, run
Metropolis sampling over outcome configurations, and analyze the merged-loop
percolation that bounds where the states remain computationally universal.
"""

__version__ = "0.1.0"
