"""Lie-bracket conditions for small-time local controllability of control-affine systems."""
