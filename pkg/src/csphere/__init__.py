"""Lattice points on arithmetic c-spheres in three dimensions."""
