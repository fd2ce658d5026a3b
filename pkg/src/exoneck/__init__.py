"""Simulation and analysis toolkit for a pneumatic head-neck exosuit.

The package models fabric pneumatic artificial muscles routed between a
vest and a head piece, solves gravity-compensating channel pressures,
scans range-of-motion and visual-target workspaces, compares actuator
placement designs, and simulates closed-loop trajectory tracking.

Units at every public interface: pressures in kPa, lengths in meters,
forces in N, torques in N*m, angles in degrees.
"""

__version__ = "0.1.0"
