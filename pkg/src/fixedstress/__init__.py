"""Fixed-stress splitting for quasi-static linear Biot poroelasticity.

Mixed finite elements (Q1 displacement, P0 pressure, RT0 flux) on a
structured quadrilateral mesh of an L-shaped domain, plus a harness that
sweeps the fixed-stress tuning parameter and records iteration counts.
"""

__version__ = "0.1.0"
